"""Dense complex linear algebra and reproducible random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream id) pair keying a counter-based Philox generator.

    Two streams with the same pair always produce the same draws, so work
    units can be generated in any order or on any worker.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64 and 0 <= self.stream <= _MASK64):
            raise ValueError("seed and stream id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def spawn(self, *keys: int) -> "RngStream":
        """Derive a child stream; children of distinct key paths do not collide in practice."""
        s = self.stream
        for k in keys:
            s = _splitmix64(s ^ _splitmix64(int(k) & _MASK64))
        return RngStream(self.seed, s)


@dataclass(frozen=True)
class SvdFactors:
    """Full SVD ``H = left @ diag(singulars) @ right^H`` with unitary factors."""

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    @property
    def sigma_matrix(self) -> np.ndarray:
        p, q = self.left.shape[0], self.right.shape[0]
        out = np.zeros((p, q))
        k = len(self.singulars)
        out[:k, :k] = np.diag(self.singulars)
        return out

    def reconstruct(self) -> np.ndarray:
        return self.left @ self.sigma_matrix @ self.right.conj().T

    def right_vector(self, i: int = 0) -> np.ndarray:
        return self.right[:, i]

    def left_vector(self, i: int = 0) -> np.ndarray:
        return self.left[:, i]


def as_complex_matrix(H) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] < 1 or H.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("non-finite matrix")
    return H


def canonical_phase(v) -> np.ndarray:
    """Rotate ``v`` so its first non-negligible entry is real and nonnegative."""
    v = np.asarray(v, dtype=complex)
    idx = np.flatnonzero(np.abs(v) > 1e-12)
    if idx.size == 0:
        raise ValueError("cannot canonicalize a zero vector")
    lead = v[idx[0]]
    return v * (np.conj(lead) / abs(lead))


def svd(H) -> SvdFactors:
    """Full SVD with singular-vector phases fixed by :func:`canonical_phase`.

    The phase applied to right column ``i`` is applied to left column ``i`` too,
    so the reconstruction is unchanged.
    """
    H = as_complex_matrix(H)
    U, s, Vh = np.linalg.svd(H, full_matrices=True)
    V = Vh.conj().T
    k = len(s)
    for i in range(V.shape[1]):
        col = V[:, i]
        lead = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
        ph = np.conj(lead) / abs(lead)
        V[:, i] = col * ph
        if i < k:
            U[:, i] = U[:, i] * ph
    for i in range(k, U.shape[1]):
        U[:, i] = canonical_phase(U[:, i])
    return SvdFactors(left=U, singulars=s, right=V)


def sample_complex_gaussian_matrix(rng, p: int, q: int) -> np.ndarray:
    """p x q matrix of i.i.d. CN(0, 1) entries.

    ``rng`` is either an :class:`RngStream` or an already-open ``np.random.Generator``
    (so several matrices can come from one stream in a fixed order).
    """
    if p < 1 or q < 1:
        raise ValueError("matrix dimensions must be positive")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    z = gen.standard_normal((p, q, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def random_unit_vectors(gen: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """``count`` i.i.d. uniform unit vectors in C^dim, one per row."""
    z = gen.standard_normal((count, dim, 2))
    w = z[..., 0] + 1j * z[..., 1]
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def random_unitary(gen: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary via QR with the diagonal phase correction."""
    z = gen.standard_normal((dim, dim, 2))
    A = (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
    Q, R = np.linalg.qr(A)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def matched(v: np.ndarray, fallback: np.ndarray | None = None) -> np.ndarray:
    """Unit-normalized matched filter for an effective channel vector."""
    nrm = np.linalg.norm(v)
    if nrm <= 1e-300:
        if fallback is None:
            out = np.zeros(len(v), dtype=complex)
            out[0] = 1.0
            return out
        return np.asarray(fallback, dtype=complex)
    return v / nrm


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)
