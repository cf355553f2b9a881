"""Beamforming solutions for the two-hop AF relay channel, with and without the direct link.

Every solver returns a :class:`BeamformingSolution` whose SNRs are evaluated on
the true channel matrices, whatever (possibly quantized) information was used
to pick the vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .channels import ChannelSet
from .codebooks import Codebook, best_codeword_by_gain, codeword_gains, nearest_codeword
from .numerics import RngStream, canonical_phase, matched, random_unit_vectors, svd

_OPTIMIZER_STREAM = RngStream(0x6772617373, 0x0A5C)


def relay_snr(gamma1, gamma2):
    """SNR of the relayed path, gamma1*gamma2 / (1 + gamma1 + gamma2)."""
    return gamma1 * gamma2 / (1.0 + gamma1 + gamma2)


@dataclass(frozen=True)
class SnrBreakdown:
    gamma0: float
    gamma1: float
    gamma2: float
    gamma_relay: float
    gamma_total: float

    @classmethod
    def from_links(cls, gamma1: float, gamma2: float, gamma0: float = 0.0) -> "SnrBreakdown":
        gr = relay_snr(gamma1, gamma2)
        return cls(float(gamma0), float(gamma1), float(gamma2), float(gr), float(gr + gamma0))


@dataclass(frozen=True, eq=False)
class BeamformingSolution:
    """Chosen vectors and the SNRs they achieve.

    ``relay_rx`` (a~) and ``rx`` (f~) are matched filters; ``rx_direct`` is the
    slot-1 combiner at the Rx and is ``None`` when the direct link is unused.
    The relay applies ``W = sigma * relay_tx relay_rx^H``.
    """

    tx: np.ndarray
    relay_rx: np.ndarray
    relay_tx: np.ndarray
    rx: np.ndarray
    sigma: float
    snr: SnrBreakdown
    rx_direct: np.ndarray | None = None
    feedback: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def relay_matrix(self) -> np.ndarray:
        return self.sigma * np.outer(self.relay_tx, self.relay_rx.conj())

    W = relay_matrix


def evaluate_solution(ch: ChannelSet, s, g, use_direct: bool | None = None,
                      feedback: dict | None = None, info: dict | None = None) -> BeamformingSolution:
    """Build the matched receivers for Tx vector ``s`` and relay vector ``g`` and score them."""
    P = ch.gains
    s = np.asarray(s, dtype=complex)
    g = np.asarray(g, dtype=complex)
    h1 = ch.H1 @ s
    h2 = ch.H2 @ g
    gamma1 = P.P1 * float(np.vdot(h1, h1).real)
    gamma2 = P.P2 * float(np.vdot(h2, h2).real)
    a = matched(h1, fallback=svd(ch.H1).left_vector(0))
    f = matched(h2, fallback=svd(ch.H2).left_vector(0))
    sigma = (1.0 + gamma1) ** -0.5
    if use_direct is None:
        use_direct = ch.has_direct
    r0, gamma0 = None, 0.0
    if use_direct:
        if ch.H0 is None:
            raise ValueError("channel set has no direct link")
        h0 = ch.H0 @ s
        gamma0 = P.P0 * float(np.vdot(h0, h0).real)
        r0 = matched(h0, fallback=svd(ch.H0).left_vector(0))
    return BeamformingSolution(
        tx=s, relay_rx=a, relay_tx=g, rx=f, sigma=sigma,
        snr=SnrBreakdown.from_links(gamma1, gamma2, gamma0), rx_direct=r0,
        feedback=dict(feedback or {}), info=dict(info or {}),
    )


def received_snr(ch: ChannelSet, s, r, W) -> float:
    """Output SNR of the relayed path for arbitrary (s, r, W), direct link ignored."""
    P = ch.gains
    s, r, W = (np.asarray(x, dtype=complex) for x in (s, r, W))
    num = P.P1 * P.P2 * abs(np.vdot(r, ch.H2 @ W @ ch.H1 @ s)) ** 2
    den = P.P2 * np.linalg.norm(W.conj().T @ ch.H2.conj().T @ r) ** 2 + np.vdot(r, r).real
    return float(num / den)


def relay_power(ch: ChannelSet, s, W) -> float:
    s, W = np.asarray(s, dtype=complex), np.asarray(W, dtype=complex)
    return float(ch.gains.P1 * np.linalg.norm(W @ ch.H1 @ s) ** 2 + np.linalg.norm(W) ** 2)


# -- no direct link ------------------------------------------------------------

def optimal_no_direct(ch: ChannelSet) -> BeamformingSolution:
    """Strongest right singular vectors of H1 and H2 with matched receivers."""
    b1 = svd(ch.H1).right_vector(0)
    g1 = svd(ch.H2).right_vector(0)
    return evaluate_solution(ch, b1, g1, use_direct=False)


def snr_for_fixed_beamformers_opt_relay(ch: ChannelSet, s, r) -> tuple[np.ndarray, float]:
    """Best relay matrix for fixed Tx vector ``s`` and Rx combiner ``r``, and its SNR."""
    s, r = np.asarray(s, dtype=complex), np.asarray(r, dtype=complex)
    h1 = np.sqrt(ch.gains.P1) * (ch.H1 @ s)
    h2 = np.sqrt(ch.gains.P2) * (ch.H2.conj().T @ r)
    c1, c2 = np.vdot(h1, h1).real, np.vdot(h2, h2).real
    n = ch.dims.n
    if c1 <= 0.0 or c2 <= 0.0:
        return np.zeros((n, n), dtype=complex), 0.0
    sigma = (1.0 + c1) ** -0.5
    W = sigma * np.outer(h2 / np.sqrt(c2), (h1 / np.sqrt(c1)).conj())
    return W, float(c1 * c2 / (1.0 + c1 + c2))


def quantized_no_direct(ch: ChannelSet, C1: Codebook, C2: Codebook) -> BeamformingSolution:
    if C1.dim != ch.dims.m or C2.dim != ch.dims.n:
        raise ValueError(f"codebook dims ({C1.dim}, {C2.dim}) do not match (m, n)=({ch.dims.m}, {ch.dims.n})")
    i, b, _ = best_codeword_by_gain(C1, ch.H1, ch.gains.P1)
    j, g, _ = best_codeword_by_gain(C2, ch.H2, ch.gains.P2)
    return evaluate_solution(ch, b, g, use_direct=False, feedback={"C1": i, "C2": j})


# -- direct link ---------------------------------------------------------------

def objective_parameters(P0: float, P1: float, gamma2: float) -> tuple[float, float]:
    """(lambda, mu) of the Tx-vector objective for a given relay-Rx SNR."""
    if gamma2 <= 0:
        raise ValueError("relay-Rx SNR must be positive (relay link absent)")
    if P1 <= 0:
        raise ValueError("Tx-relay gain must be positive")
    return (1.0 + gamma2) / P1, P0 / gamma2


def _objective_values(A, B, lam, mu, S):
    S = np.atleast_2d(S)
    a = np.einsum("ki,ij,kj->k", S.conj(), A, S).real
    b = np.einsum("ki,ij,kj->k", S.conj(), B, S).real
    return a / (a + lam) + mu * b


def direct_link_objective(ch: ChannelSet, s, gamma2_star: float) -> float:
    """||H1 s||^2 / (||H1 s||^2 + lambda) + mu ||H0 s||^2."""
    lam, mu = objective_parameters(ch.gains.P0, ch.gains.P1, gamma2_star)
    s = np.asarray(s, dtype=complex)
    a = np.linalg.norm(ch.H1 @ s) ** 2
    b = np.linalg.norm(ch.H0 @ s) ** 2
    return float(a / (a + lam) + mu * b)


def _gram(H):
    return H.conj().T @ H


@dataclass(frozen=True)
class AscentResult:
    s: np.ndarray
    objective: float
    iterations: int
    starts: int
    best_start: int


def maximize_on_sphere(A, B, lam, mu, warm_starts, restarts, tol=1e-10, rng=None,
                       max_iter=500) -> AscentResult:
    """Multi-start ascent of ``a/(a+lam) + mu*b``; warm starts first, then random ones.

    The best start wins (lowest index on ties) and is returned in canonical phase.
    """
    m = A.shape[0]
    rng = _OPTIMIZER_STREAM if rng is None else rng
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    starts = [np.asarray(w, dtype=complex) for w in warm_starts]
    if restarts > 0:
        starts += list(random_unit_vectors(gen, restarts, m))
    S, f, its = _kernels.sphere_ascent(A, B, lam, mu, np.array(starts), tol=tol, max_iter=max_iter)
    k = int(np.argmax(f))
    return AscentResult(canonical_phase(S[k]), float(f[k]), int(its[k]), len(starts), k)


def _default_restarts(m):
    return max(8, 4 * m)


def _direct_only_vector(B):
    # largest eigenvector of the direct-link Gram matrix
    w, V = np.linalg.eigh(B)
    return canonical_phase(V[:, np.argmax(w)])


def _solve_tx_vector(ch, A, B, gamma2, warm, restarts, tol, rng):
    P = ch.gains
    if gamma2 <= 0 or P.P1 <= 0:
        s = _direct_only_vector(B)
        return s, {"fallback": "direct_only"}
    lam, mu = objective_parameters(P.P0, P.P1, gamma2)
    if restarts is None:
        restarts = _default_restarts(ch.dims.m)
    res = maximize_on_sphere(A, B, lam, mu, warm, restarts, tol=tol, rng=rng)
    return res.s, {"objective": res.objective, "iterations": res.iterations,
                   "best_start": res.best_start, "lambda": lam, "mu": mu}


def optimal_with_direct(ch: ChannelSet, restarts: int | None = None, tol: float = 1e-10,
                        rng=None) -> BeamformingSolution:
    """Relay forwards on g1; the Tx vector maximizes the total SNR numerically."""
    if not ch.has_direct:
        raise ValueError("channel set has no direct link")
    f1 = svd(ch.H1)
    f2 = svd(ch.H2)
    f0 = svd(ch.H0)
    gamma2 = ch.gains.P2 * f2.singulars[0] ** 2
    warm = [f1.right_vector(0), f0.right_vector(0)]
    s, info = _solve_tx_vector(ch, _gram(ch.H1), _gram(ch.H0), gamma2, warm, restarts, tol, rng)
    return evaluate_solution(ch, s, f2.right_vector(0), use_direct=True, info=info)


def modified_unquantized_with_direct(ch: ChannelSet, restarts: int | None = None, tol: float = 1e-10,
                                     rng=None) -> BeamformingSolution:
    """Like :func:`optimal_with_direct` but the Tx only uses nu1 and e1 of H0."""
    if not ch.has_direct:
        raise ValueError("channel set has no direct link")
    f1, f2, f0 = svd(ch.H1), svd(ch.H2), svd(ch.H0)
    gamma2 = ch.gains.P2 * f2.singulars[0] ** 2
    e1 = f0.right_vector(0)
    B = f0.singulars[0] ** 2 * np.outer(e1, e1.conj())
    s, info = _solve_tx_vector(ch, _gram(ch.H1), B, gamma2, [f1.right_vector(0), e1], restarts, tol, rng)
    return evaluate_solution(ch, s, f2.right_vector(0), use_direct=True, info=info)


def xi_objective(ch: ChannelSet, s, g) -> float:
    """Total SNR with ||H0 s||^2 replaced by nu1^2 |e1^H s|^2."""
    f0 = svd(ch.H0)
    s = np.asarray(s, dtype=complex)
    g = np.asarray(g, dtype=complex)
    P = ch.gains
    g1 = P.P1 * np.linalg.norm(ch.H1 @ s) ** 2
    g2 = P.P2 * np.linalg.norm(ch.H2 @ g) ** 2
    return float(relay_snr(g1, g2) + P.P0 * f0.singulars[0] ** 2 * abs(np.vdot(f0.right_vector(0), s)) ** 2)


class KnowledgeMode(str, Enum):
    FULL_H0 = "full_H0"
    QUANTIZED_SINGULARS = "quantized_singulars"
    TOP_SINGULAR_ONLY = "top_singular_only"


@dataclass(frozen=True, eq=False)
class DirectLinkKnowledge:
    """What the relay knows about H0: singular values and (quantized) right singular vectors."""

    mode: KnowledgeMode
    singulars: np.ndarray
    vectors: np.ndarray  # one row per retained singular vector
    indices: tuple = ()

    def __post_init__(self):
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ValueError("direct-link vectors must be unit norm")
        if len(self.singulars) != len(self.vectors):
            raise ValueError("one singular value per vector")

    @property
    def rank(self) -> int:
        return len(self.singulars)

    def gram(self) -> np.ndarray:
        V = self.vectors
        return (V.T * self.singulars**2) @ V.conj()


def numerical_rank(singulars, rtol=1e-12) -> int:
    singulars = np.asarray(singulars)
    if singulars.size == 0 or singulars[0] == 0:
        return 0
    return int(np.sum(singulars > rtol * singulars[0]))


def quantize_direct_link(H0, C0: Codebook | None, mode) -> DirectLinkKnowledge:
    mode = KnowledgeMode(mode)
    f0 = svd(H0)
    R0 = max(1, numerical_rank(f0.singulars))
    keep = 1 if mode is KnowledgeMode.TOP_SINGULAR_ONLY else R0
    nus = f0.singulars[:keep].copy()
    es = f0.right[:, :keep].T.copy()
    if mode is KnowledgeMode.FULL_H0:
        return DirectLinkKnowledge(mode, nus, es)
    if C0 is None:
        raise ValueError(f"mode {mode.value} needs a C0 codebook")
    if C0.dim != f0.right.shape[0]:
        raise ValueError(f"C0 dim {C0.dim} does not match m={f0.right.shape[0]}")
    picks = [nearest_codeword(C0, e) for e in es]
    return DirectLinkKnowledge(mode, nus, np.array([p[1] for p in picks]), tuple(p[0] for p in picks))


def _select_tx_codeword(ch: ChannelSet, C1: Codebook, B: np.ndarray, gamma2: float) -> int:
    P = ch.gains
    if gamma2 <= 0 or P.P1 <= 0:
        direct = np.einsum("ki,ij,kj->k", C1.vectors.conj(), B, C1.vectors).real
        return int(np.argmax(direct))
    lam, mu = objective_parameters(P.P0, P.P1, gamma2)
    return int(np.argmax(_objective_values(_gram(ch.H1), B, lam, mu, C1.vectors)))


def _check_dims(ch, C0, C1, C2):
    d = ch.dims
    for name, C, want in (("C0", C0, d.m), ("C1", C1, d.m), ("C2", C2, d.n)):
        if C is not None and C.dim != want:
            raise ValueError(f"{name} dim {C.dim} does not match required {want}")


def properly_quantized_with_direct(ch: ChannelSet, C0: Codebook | None, C1: Codebook, C2: Codebook,
                                   knowledge="quantized_singulars") -> BeamformingSolution:
    """Codebook-constrained Tx and relay vectors using all of H0's singular pairs.

    ``knowledge`` is a mode name (``full_H0`` or ``quantized_singulars``) or a
    prepared :class:`DirectLinkKnowledge`.
    """
    if not ch.has_direct:
        raise ValueError("channel set has no direct link")
    _check_dims(ch, C0, C1, C2)
    if not isinstance(knowledge, DirectLinkKnowledge):
        knowledge = quantize_direct_link(ch.H0, C0, knowledge)
    if knowledge.mode is KnowledgeMode.TOP_SINGULAR_ONLY:
        raise ValueError("use modified_quantized_with_direct for top-singular-only knowledge")
    return _quantized_with_direct(ch, C1, C2, knowledge)


def modified_quantized_with_direct(ch: ChannelSet, C0: Codebook, C1: Codebook, C2: Codebook) -> BeamformingSolution:
    """Only nu1 and the quantized e1 of H0 reach the relay."""
    if not ch.has_direct:
        raise ValueError("channel set has no direct link")
    _check_dims(ch, C0, C1, C2)
    knowledge = quantize_direct_link(ch.H0, C0, KnowledgeMode.TOP_SINGULAR_ONLY)
    return _quantized_with_direct(ch, C1, C2, knowledge)


def _quantized_with_direct(ch, C1, C2, knowledge):
    j, g, gamma2 = best_codeword_by_gain(C2, ch.H2, ch.gains.P2)
    k = _select_tx_codeword(ch, C1, knowledge.gram(), gamma2)
    fb = {"C2": j, "C1": k}
    if knowledge.indices:
        fb["C0"] = knowledge.indices
    return evaluate_solution(ch, C1.vectors[k], g, use_direct=True, feedback=fb,
                             info={"knowledge": knowledge.mode.value, "rank": knowledge.rank})


# -- baselines -------------------------------------------------------------------

def baseline_ignore_direct(ch: ChannelSet) -> BeamformingSolution:
    """Tx always uses b1 of H1; the direct link still contributes at the Rx."""
    return evaluate_solution(ch, svd(ch.H1).right_vector(0), svd(ch.H2).right_vector(0),
                             use_direct=ch.has_direct)


def baseline_switch_stronger(ch: ChannelSet) -> BeamformingSolution:
    """Tx picks b1 of H1 or e1 of H0, whichever single link promises more SNR."""
    if not ch.has_direct:
        raise ValueError("channel set has no direct link")
    f0, f1, f2 = svd(ch.H0), svd(ch.H1), svd(ch.H2)
    P = ch.gains
    relayed = relay_snr(P.P1 * f1.singulars[0] ** 2, P.P2 * f2.singulars[0] ** 2)
    direct = P.P0 * f0.singulars[0] ** 2
    s = f1.right_vector(0) if relayed > direct else f0.right_vector(0)
    return evaluate_solution(ch, s, f2.right_vector(0), use_direct=True,
                             info={"chose": "relay" if relayed > direct else "direct"})


def lloyd_max_levels(bits: int, variance: float = 0.5, iterations: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """MMSE (Lloyd-Max) scalar quantizer for a zero-mean Gaussian.

    Returns (thresholds, levels); one bit gives levels +-sqrt(2*variance/pi).
    """
    from scipy.stats import norm

    if bits < 1:
        raise ValueError("need at least one bit")
    sd = np.sqrt(variance)
    L = 2**bits
    levels = sd * norm.ppf((np.arange(L) + 0.5) / L)
    for _ in range(iterations):
        t = np.concatenate(([-np.inf], 0.5 * (levels[1:] + levels[:-1]), [np.inf]))
        lo, hi = t[:-1] / sd, t[1:] / sd
        mass = norm.cdf(hi) - norm.cdf(lo)
        new = sd * (norm.pdf(lo) - norm.pdf(hi)) / mass
        if np.allclose(new, levels, rtol=0, atol=1e-15):
            levels = new
            break
        levels = new
    return 0.5 * (levels[1:] + levels[:-1]), levels


def mmse_quantize_matrix(H, bits_per_component: int = 1) -> np.ndarray:
    """Quantize real and imaginary parts of every entry with the Gaussian Lloyd-Max quantizer."""
    thr, lev = lloyd_max_levels(bits_per_component)
    H = np.asarray(H, dtype=complex)
    q = lambda x: lev[np.searchsorted(thr, x)]  # noqa: E731
    return q(H.real) + 1j * q(H.imag)


def baseline_mmse_quantizer(ch: ChannelSet, bits_per_component: int = 1, restarts: int | None = None,
                            tol: float = 1e-10, rng=None) -> BeamformingSolution:
    """Feed back entry-wise quantized channel matrices and run the unquantized design on them.

    Receivers keep perfect CSI of their own links (matched filters use true
    matrices). With a direct link, the Rx reports the relay-Rx SNR exactly.
    """
    Hq1 = mmse_quantize_matrix(ch.H1, bits_per_component)
    Hq2 = mmse_quantize_matrix(ch.H2, bits_per_component)
    g = svd(Hq2).right_vector(0)
    fb = {"bits_per_component": bits_per_component}
    if not ch.has_direct:
        return evaluate_solution(ch, svd(Hq1).right_vector(0), g, use_direct=False, feedback=fb)
    Hq0 = mmse_quantize_matrix(ch.H0, bits_per_component)
    gamma2 = ch.gains.P2 * np.linalg.norm(ch.H2 @ g) ** 2
    warm = [svd(Hq1).right_vector(0), svd(Hq0).right_vector(0)]
    s, info = _solve_tx_vector(ch, _gram(Hq1), _gram(Hq0), gamma2, warm, restarts, tol, rng)
    return evaluate_solution(ch, s, g, use_direct=True, feedback=fb, info=info)


__all__ = [
    "AscentResult", "BeamformingSolution", "DirectLinkKnowledge", "KnowledgeMode", "SnrBreakdown",
    "baseline_ignore_direct", "baseline_mmse_quantizer", "baseline_switch_stronger",
    "codeword_gains", "direct_link_objective", "evaluate_solution", "lloyd_max_levels",
    "maximize_on_sphere", "mmse_quantize_matrix", "modified_quantized_with_direct",
    "modified_unquantized_with_direct", "objective_parameters", "optimal_no_direct",
    "optimal_with_direct", "properly_quantized_with_direct", "quantize_direct_link",
    "quantized_no_direct", "received_snr", "relay_power", "relay_snr",
    "snr_for_fixed_beamformers_opt_relay", "xi_objective",
]
