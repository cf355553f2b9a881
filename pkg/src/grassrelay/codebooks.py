"""Beamforming codebooks: chordal distance, max-min packing, quantization, file I/O."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .numerics import RngStream, canonical_phase, random_unit_vectors

KINDS = ("grassmannian", "random", "external")
DUPLICATE_DISTANCE = 1e-8
UNIT_TOL = 1e-6


class CodebookFormatError(ValueError):
    pass


def _check_unit(w, name="vector", tol=UNIT_TOL):
    w = np.asarray(w, dtype=complex)
    if abs(np.linalg.norm(w) - 1.0) > tol:
        raise ValueError(f"{name} is not unit norm (norm={np.linalg.norm(w):.6g})")
    return w


def chordal_distance(w1, w2) -> float:
    """Sine of the angle between the lines spanned by two unit vectors."""
    w1 = _check_unit(w1, "w1")
    w2 = _check_unit(w2, "w2")
    if w1.shape != w2.shape:
        raise ValueError(f"dimension mismatch: {w1.shape} vs {w2.shape}")
    return _line_distance(w1, w2)


def _line_distance(u, v):
    # norm of the part of v orthogonal to u; accurate near 0, unlike sqrt(1 - |u^H v|^2)
    return float(min(np.linalg.norm(v - u * np.vdot(u, v)), 1.0))


def _pairwise_min_distance(V: np.ndarray) -> float:
    iu, ju = np.triu_indices(len(V), k=1)
    c = np.einsum("ki,ki->k", V[iu].conj(), V[ju])
    resid = V[ju] - V[iu] * c[:, None]
    return float(min(np.min(np.linalg.norm(resid, axis=1)), 1.0))


@dataclass(frozen=True, eq=False)
class Codebook:
    """N unit vectors in C^dim, one per row of ``vectors``."""

    vectors: np.ndarray
    kind: str = "external"
    min_distance: float | None = field(default=None, init=False)

    def __post_init__(self):
        V = np.array(self.vectors, dtype=complex)
        if V.ndim != 2 or V.shape[0] < 1 or V.shape[1] < 1:
            raise ValueError(f"codebook vectors must be an N x m array, got shape {V.shape}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown codebook kind {self.kind!r}")
        norms = np.linalg.norm(V, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
        if bad.size:
            raise ValueError(f"codeword {bad[0]} is not unit norm (norm={norms[bad[0]]:.6g})")
        V = V / norms[:, None]
        V.setflags(write=False)
        object.__setattr__(self, "vectors", V)
        if len(V) >= 2:
            delta = _pairwise_min_distance(V)
            if delta <= DUPLICATE_DISTANCE:
                raise ValueError("codebook contains duplicate lines (distance <= 1e-8)")
            object.__setattr__(self, "min_distance", delta)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def __len__(self):
        return self.size

    def digest(self) -> str:
        return hashlib.sha256(dumps_codebook(self).encode()).hexdigest()[:16]


def min_distance(C: Codebook) -> float:
    if C.size < 2:
        raise ValueError("minimum distance needs at least two codewords")
    return _pairwise_min_distance(C.vectors)


def _canonical_rows(V):
    return np.array([canonical_phase(v) for v in V])


def generate_random_codebook(rng, dim: int, size: int) -> Codebook:
    """``size`` independent uniform unit vectors (normalized complex Gaussians)."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    return Codebook(random_unit_vectors(gen, size, dim), kind="random")


def generate_grassmannian(rng, dim: int, size: int, restarts: int = 20, iterations: int = 200) -> Codebook:
    """Numerically search for a codebook with large minimum chordal distance.

    Each restart starts from random unit vectors and runs an annealed descent
    on the log-sum-exp of the pairwise squared inner products (a smooth proxy
    for the largest one); ``iterations`` is the number of steps per temperature.
    The restart with the largest minimum distance wins.
    """
    if size < 2 or dim < 2:
        raise ValueError("need size >= 2 and dim >= 2")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    temps = np.geomspace(0.1, 1e-4, 12)
    best, best_delta = None, -1.0
    for _ in range(max(1, restarts)):
        W = _kernels.packing_refine(random_unit_vectors(gen, size, dim), temps, iterations, 0.2)
        delta = _pairwise_min_distance(W)
        if delta > best_delta:
            best, best_delta = W, delta
    return Codebook(_canonical_rows(best), kind="grassmannian")


def nearest_codeword(C: Codebook, s) -> tuple[int, np.ndarray, float]:
    """Closest codeword in chordal distance; ties go to the lowest index."""
    s = np.asarray(s, dtype=complex)
    if s.shape != (C.dim,):
        raise ValueError(f"dimension mismatch: codebook dim {C.dim}, vector shape {s.shape}")
    corr = np.abs(C.vectors.conj() @ s) ** 2
    i = int(np.argmax(corr))
    return i, C.vectors[i], _line_distance(C.vectors[i], s / np.linalg.norm(s))


def codeword_gains(C: Codebook, H) -> np.ndarray:
    """||H w||^2 for every codeword w."""
    H = np.asarray(H, dtype=complex)
    if H.shape[1] != C.dim:
        raise ValueError(f"dimension mismatch: H has {H.shape[1]} columns, codebook dim {C.dim}")
    return np.sum(np.abs(C.vectors @ H.T) ** 2, axis=1)


def best_codeword_by_gain(C: Codebook, H, P: float) -> tuple[int, np.ndarray, float]:
    g = P * codeword_gains(C, H)
    i = int(np.argmax(g))
    return i, C.vectors[i], float(g[i])


# -- text format -------------------------------------------------------------

def dumps_codebook(C: Codebook, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append(f"{C.dim} {C.size}")
    for w in C.vectors:
        parts = []
        for z in w:
            parts += [f"{z.real:.17g}", f"{z.imag:.17g}"]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def save_codebook(C: Codebook, path, comment: str | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps_codebook(C, comment))
    return path


def loads_codebook(text: str, kind: str = "external", source: str = "<string>") -> Codebook:
    rows = [(no, ln.strip()) for no, ln in enumerate(text.splitlines(), start=1)]
    rows = [(no, ln) for no, ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise CodebookFormatError(f"{source}: empty codebook file")
    no, header = rows[0]
    try:
        m, N = (int(x) for x in header.split())
    except ValueError:
        raise CodebookFormatError(f"{source}:{no}: header must be 'm N', got {header!r}") from None
    if m < 1 or N < 1:
        raise CodebookFormatError(f"{source}:{no}: m and N must be positive")
    body = rows[1:]
    if len(body) != N:
        raise CodebookFormatError(f"{source}: header declares {N} codewords, found {len(body)}")
    V = np.empty((N, m), dtype=complex)
    for k, (no, ln) in enumerate(body):
        try:
            vals = [float(x) for x in ln.split()]
        except ValueError:
            raise CodebookFormatError(f"{source}:{no}: non-numeric entry in codeword row {k}") from None
        if len(vals) != 2 * m:
            raise CodebookFormatError(f"{source}:{no}: expected {2 * m} numbers, got {len(vals)}")
        V[k] = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
        nrm = np.linalg.norm(V[k])
        if not np.isfinite(nrm) or abs(nrm - 1.0) > UNIT_TOL:
            raise CodebookFormatError(f"{source}:{no}: codeword row {k} is not unit norm (norm={nrm:.9g})")
    try:
        return Codebook(V, kind=kind)
    except ValueError as exc:
        raise CodebookFormatError(f"{source}: {exc}") from None


def load_codebook(path, kind: str = "external") -> Codebook:
    path = Path(path)
    return loads_codebook(path.read_text(), kind=kind, source=str(path))
