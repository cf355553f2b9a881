"""Vectorized numpy versions of the hot kernels (no compiler needed).

Same algorithms and stopping rules as the numba versions; all starts (or all
codewords) advance together as one array.
"""

import numpy as np


def _objective(A, B, lam, mu, S):
    AS = S @ A.T
    BS = S @ B.T
    a = np.einsum("ki,ki->k", S.conj(), AS).real
    b = np.einsum("ki,ki->k", S.conj(), BS).real
    return a / (a + lam) + mu * b, a, b, AS, BS


def _normalize_rows(U):
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def sphere_ascent(A, B, lam, mu, starts, tol, max_iter, armijo, shrink):
    S = _normalize_rows(np.array(starts, dtype=complex))
    K = S.shape[0]
    f, a, b, AS, BS = _objective(A, B, lam, mu, S)
    t = np.ones(K)
    it = np.zeros(K, dtype=np.int64)
    active = np.ones(K, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        it[idx] += 1
        w = lam / (a[idx] + lam) ** 2
        grad = 2.0 * (w[:, None] * (AS[idx] - a[idx, None] * S[idx])
                      + mu * (BS[idx] - b[idx, None] * S[idx]))
        g2 = np.sum(grad.real**2 + grad.imag**2, axis=1)
        flat = g2 == 0.0
        step = np.minimum(2.0 * t[idx], 1e6)
        pending = ~flat
        new_S = S[idx].copy()
        new_f, new_a, new_b = f[idx].copy(), a[idx].copy(), b[idx].copy()
        new_AS, new_BS = AS[idx].copy(), BS[idx].copy()
        accepted = np.zeros(len(idx), dtype=bool)
        while pending.any():
            p = np.flatnonzero(pending)
            trial = _normalize_rows(S[idx[p]] + step[p, None] * grad[p])
            tf, ta, tb, tAS, tBS = _objective(A, B, lam, mu, trial)
            ok = tf >= f[idx[p]] + armijo * step[p] * g2[p]
            q = p[ok]
            new_S[q], new_f[q], new_a[q], new_b[q] = trial[ok], tf[ok], ta[ok], tb[ok]
            new_AS[q], new_BS[q] = tAS[ok], tBS[ok]
            accepted[q] = True
            pending[q] = False
            r = p[~ok]
            step[r] *= shrink
            pending[r[step[r] <= 1e-18]] = False
        gain = new_f - f[idx]
        t[idx] = step
        S[idx], f[idx], a[idx], b[idx] = new_S, new_f, new_a, new_b
        AS[idx], BS[idx] = new_AS, new_BS
        done = flat | ~accepted | (gain < tol) | (it[idx] >= max_iter)
        active[idx[done]] = False
    return S, f, it


def packing_refine(W0, temperatures, steps, step_size):
    W = np.array(W0, dtype=complex)
    N = W.shape[0]
    off = ~np.eye(N, dtype=bool)
    for T in temperatures:
        eta = step_size * np.sqrt(T / temperatures[0])
        for _ in range(steps):
            G = W.conj() @ W.T
            c = np.abs(G) ** 2
            cmax = c[off].max()
            P = np.exp(np.where(off, c - cmax, -np.inf) / T)
            P /= P.sum()
            grad = (P * G.T) @ W
            proj = np.einsum("id,id->i", W.conj(), grad)
            W = W - eta * (grad - proj[:, None] * W)
            W = _normalize_rows(W)
    return W
