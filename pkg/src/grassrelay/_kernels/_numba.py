"""Loop-form kernels compiled with numba.njit."""

import numpy as np
from numba import njit


@njit(cache=True)
def _quad(A, s, out):
    # out = A s ; returns Re(s^H A s)
    m = s.shape[0]
    acc = 0.0
    for i in range(m):
        v = 0j
        for j in range(m):
            v += A[i, j] * s[j]
        out[i] = v
        acc += (s[i].conjugate() * v).real
    return acc


@njit(cache=True)
def _objective(A, B, lam, mu, s, As, Bs):
    a = _quad(A, s, As)
    b = _quad(B, s, Bs)
    return a / (a + lam) + mu * b, a, b


@njit(cache=True)
def _normalize(u):
    nrm = 0.0
    for i in range(u.shape[0]):
        nrm += u[i].real * u[i].real + u[i].imag * u[i].imag
    nrm = np.sqrt(nrm)
    for i in range(u.shape[0]):
        u[i] = u[i] / nrm


@njit(cache=True)
def sphere_ascent(A, B, lam, mu, starts, tol, max_iter, armijo, shrink):
    K, m = starts.shape
    out_s = np.empty((K, m), dtype=np.complex128)
    out_f = np.empty(K)
    out_it = np.empty(K, dtype=np.int64)
    As = np.empty(m, dtype=np.complex128)
    Bs = np.empty(m, dtype=np.complex128)
    grad = np.empty(m, dtype=np.complex128)
    trial = np.empty(m, dtype=np.complex128)
    for k in range(K):
        s = starts[k].copy()
        _normalize(s)
        f, a, b = _objective(A, B, lam, mu, s, As, Bs)
        t = 1.0
        it = 0
        while it < max_iter:
            it += 1
            w = lam / ((a + lam) * (a + lam))
            g2 = 0.0
            for i in range(m):
                grad[i] = 2.0 * (w * (As[i] - a * s[i]) + mu * (Bs[i] - b * s[i]))
                g2 += grad[i].real * grad[i].real + grad[i].imag * grad[i].imag
            if g2 == 0.0:
                break
            t = min(2.0 * t, 1e6)
            accepted = False
            while t > 1e-18:
                for i in range(m):
                    trial[i] = s[i] + t * grad[i]
                _normalize(trial)
                f_new, a_new, b_new = _objective(A, B, lam, mu, trial, As, Bs)
                if f_new >= f + armijo * t * g2:
                    accepted = True
                    break
                t *= shrink
            if not accepted:
                break
            gain = f_new - f
            for i in range(m):
                s[i] = trial[i]
            f, a, b = f_new, a_new, b_new
            if gain < tol:
                break
        out_s[k] = s
        out_f[k] = f
        out_it[k] = it
    return out_s, out_f, out_it


@njit(cache=True)
def packing_refine(W0, temperatures, steps, step_size):
    N, m = W0.shape
    W = W0.copy()
    G = np.empty((N, N), dtype=np.complex128)
    P = np.empty((N, N))
    grad = np.empty((N, m), dtype=np.complex128)
    for T in temperatures:
        eta = step_size * np.sqrt(T / temperatures[0])
        for _ in range(steps):
            cmax = 0.0
            for i in range(N):
                for j in range(N):
                    v = 0j
                    for d in range(m):
                        v += W[i, d].conjugate() * W[j, d]
                    G[i, j] = v
                    if i != j:
                        c = v.real * v.real + v.imag * v.imag
                        if c > cmax:
                            cmax = c
            Z = 0.0
            for i in range(N):
                for j in range(N):
                    if i == j:
                        P[i, j] = 0.0
                    else:
                        c = G[i, j].real * G[i, j].real + G[i, j].imag * G[i, j].imag
                        P[i, j] = np.exp((c - cmax) / T)
                        Z += P[i, j]
            for i in range(N):
                for d in range(m):
                    v = 0j
                    for j in range(N):
                        v += P[i, j] / Z * G[j, i] * W[j, d]
                    grad[i, d] = v
            for i in range(N):
                proj = 0j
                for d in range(m):
                    proj += W[i, d].conjugate() * grad[i, d]
                nrm = 0.0
                for d in range(m):
                    W[i, d] = W[i, d] - eta * (grad[i, d] - proj * W[i, d])
                    nrm += W[i, d].real * W[i, d].real + W[i, d].imag * W[i, d].imag
                nrm = np.sqrt(nrm)
                for d in range(m):
                    W[i, d] = W[i, d] / nrm
    return W
