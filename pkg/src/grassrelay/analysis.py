"""SNR-loss bounds for quantized beamforming and numeric checks of the supporting lemmas."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .channels import ChannelSet, LinkGains, SystemDims, sample_channel_set
from .codebooks import Codebook, nearest_codeword
from .numerics import RngStream, random_unit_vectors, sample_complex_gaussian_matrix, svd
from . import schemes

_SLACK = 1e-12


def _leq(lhs, rhs):
    return lhs <= rhs + _SLACK * (1.0 + np.abs(rhs))


def packing_term(N: int, delta: float, m: int, squared: bool = False) -> float:
    """N (delta/2)^(2(m-1)) times (1 - delta/2), or (1 - delta^2/4) when ``squared``."""
    x = delta / 2.0
    tail = 1.0 - x * x if squared else 1.0 - x
    return float(N * x ** (2 * (m - 1)) * tail)


def _check_codebook_args(m, N, delta, name=""):
    if m < 2:
        raise ValueError(f"dimension{name} must be > 1 (got {m})")
    if N < 2:
        raise ValueError(f"codebook size{name} must be >= 2 (got {N})")
    if not 0 < delta <= 1:
        raise ValueError(f"minimum distance{name} must lie in (0, 1] (got {delta})")


def bound_single_hop(P: float, m: int, N: int, delta: float, E_sigma1_sq: float) -> float:
    _check_codebook_args(m, N, delta)
    return float(P * E_sigma1_sq * (1.0 - packing_term(N, delta, m, squared=True)))


def bound_no_direct(P1, P2, m, n, l, N1, delta1, N2, delta2) -> float:
    _check_codebook_args(m, N1, delta1, " m")
    _check_codebook_args(n, N2, delta2, " n")
    return float(2 * m * n * P1 * (1 - packing_term(N1, delta1, m))
                 + 2 * n * l * P2 * (1 - packing_term(N2, delta2, n)))


def bound_with_direct_full(P0, P1, P2, m, n, l, N1, delta1, N2, delta2) -> float:
    _check_codebook_args(m, N1, delta1, " m")
    _check_codebook_args(n, N2, delta2, " n")
    return float(2 * (m * l * P0 + m * n * P1) * (1 - packing_term(N1, delta1, m))
                 + 2 * n * l * P2 * (1 - packing_term(N2, delta2, n)))


def bound_with_direct_quantized(P0, P1, P2, m, n, l, N0, delta0, N1, delta1, N2, delta2) -> float:
    _check_codebook_args(m, N0, delta0, " m (C0)")
    return float(bound_with_direct_full(P0, P1, P2, m, n, l, N1, delta1, N2, delta2)
                 + 4 * m * l * P0 * (1 - packing_term(N0, delta0, m)))


def distortion_bound(N: int, delta: float, m: int) -> float:
    """Upper bound on E{d_C(s)} for s uniform on the unit sphere."""
    return 1.0 - packing_term(N, delta, m)


def mean_quantization_distance(C: Codebook, rng, samples: int) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of the distance to the nearest codeword."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    S = random_unit_vectors(gen, samples, C.dim)
    corr = np.max(np.abs(S.conj() @ C.vectors.T) ** 2, axis=1)
    d = np.sqrt(np.clip(1.0 - corr, 0.0, None))
    return float(d.mean()), float(d.std(ddof=1) / np.sqrt(samples))


# -- Monte-Carlo loss reports --------------------------------------------------

@dataclass
class BoundReport:
    name: str
    empirical_loss: float
    bound_value: float
    standard_error: float
    samples: int
    params: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.empirical_loss <= self.bound_value + 3.0 * self.standard_error

    def to_row(self) -> dict:
        row = {k: v for k, v in asdict(self).items() if k != "params"}
        row["satisfied"] = self.satisfied
        row.update(self.params)
        return row


def _paired(name, diffs, bound, params):
    diffs = np.asarray(diffs, dtype=float)
    se = float(diffs.std(ddof=1) / np.sqrt(len(diffs))) if len(diffs) > 1 else float("inf")
    return BoundReport(name, float(diffs.mean()), float(bound), se, len(diffs), dict(params))


def _channels(rng: RngStream, dims, gains, samples, include_direct):
    for i in range(samples):
        yield sample_channel_set(rng.spawn(i), dims, gains, include_direct)


def loss_single_hop(rng: RngStream, m: int, l: int, P: float, C: Codebook, samples: int) -> BoundReport:
    """Single-link loss P*sigma1^2 - max_w P||Hw||^2 against the bound with estimated E{sigma1^2}."""
    diffs, s1 = np.empty(samples), np.empty(samples)
    for i in range(samples):
        H = sample_complex_gaussian_matrix(rng.spawn(i), l, m)
        s1[i] = svd(H).singulars[0] ** 2
        diffs[i] = P * s1[i] - P * np.max(np.sum(np.abs(C.vectors @ H.T) ** 2, axis=1))
    bound = bound_single_hop(P, m, C.size, C.min_distance, float(s1.mean()))
    return _paired("single_hop", diffs, bound, {"m": m, "l": l, "P": P, "N": C.size, "delta": C.min_distance})


def loss_no_direct(rng: RngStream, dims: SystemDims, gains: LinkGains, C1: Codebook, C2: Codebook,
                   samples: int) -> BoundReport:
    diffs = np.empty(samples)
    for i, ch in enumerate(_channels(rng, dims, gains, samples, False)):
        diffs[i] = (schemes.optimal_no_direct(ch).snr.gamma_total
                    - schemes.quantized_no_direct(ch, C1, C2).snr.gamma_total)
    bound = bound_no_direct(gains.P1, gains.P2, dims.m, dims.n, dims.l,
                            C1.size, C1.min_distance, C2.size, C2.min_distance)
    return _paired("no_direct", diffs, bound, {"P0": gains.P0, "P1": gains.P1, "P2": gains.P2,
                                               "N1": C1.size, "N2": C2.size})


def loss_with_direct(rng: RngStream, dims: SystemDims, gains: LinkGains, C0: Codebook | None,
                     C1: Codebook, C2: Codebook, samples: int, knowledge: str = "full_H0") -> BoundReport:
    """Paired loss of the properly quantized scheme; bound depends on what the relay knows of H0."""
    diffs = np.empty(samples)
    for i, ch in enumerate(_channels(rng, dims, gains, samples, True)):
        opt = schemes.optimal_with_direct(ch, rng=rng.spawn(i, 1))
        q = schemes.properly_quantized_with_direct(ch, C0, C1, C2, knowledge)
        diffs[i] = opt.snr.gamma_total - q.snr.gamma_total
    args = (gains.P0, gains.P1, gains.P2, dims.m, dims.n, dims.l)
    if knowledge == "full_H0":
        bound = bound_with_direct_full(*args, C1.size, C1.min_distance, C2.size, C2.min_distance)
        name = "with_direct_full"
    else:
        bound = bound_with_direct_quantized(*args, C0.size, C0.min_distance, C1.size, C1.min_distance,
                                            C2.size, C2.min_distance)
        name = "with_direct_quantized"
    params = {"P0": gains.P0, "P1": gains.P1, "P2": gains.P2, "N1": C1.size, "N2": C2.size}
    if C0 is not None:
        params["N0"] = C0.size
    return _paired(name, diffs, bound, params)


# -- inequality checks---------------------------------------------------------------

def lemma1_check(x1, x2, y1, y2):
    """|x1 y1/(1+x1+y1) - x2 y2/(1+x2+y2)| <= |x1-x2| + |y1-y2| (vectorized)."""
    lhs = np.abs(x1 * y1 / (1 + x1 + y1) - x2 * y2 / (1 + x2 + y2))
    return _leq(lhs, np.abs(x1 - x2) + np.abs(y1 - y2))


def ineq_ratio_check(a, b, c):
    """|a/(a+c) - b/(b+c)| <= |a-b|/c for a, b >= 0 and c > 0 (vectorized)."""
    return _leq(np.abs(a / (a + c) - b / (b + c)), np.abs(a - b) / c)


def _rowdot(u, v):
    return np.sum(u.conj() * v, axis=-1)


def ineq_overlap_check(u, v, w):
    """| |u^H v|^2 - |v^H w|^2 | <= 2 d(u, w) for unit rows (vectorized)."""
    uv = np.abs(_rowdot(u, v)) ** 2
    vw = np.abs(_rowdot(v, w)) ** 2
    duw = np.sqrt(np.clip(1 - np.abs(_rowdot(u, w)) ** 2, 0, None))
    return _leq(np.abs(uv - vw), 2 * duw)


def lemma3_check(H, s, C: Codebook) -> bool:
    H = np.asarray(H, dtype=complex)
    s = np.asarray(s, dtype=complex)
    _, w, d = nearest_codeword(C, s)
    lhs = abs(np.linalg.norm(H @ s) ** 2 - np.linalg.norm(H @ w) ** 2)
    return bool(_leq(lhs, 2 * np.sum(svd(H).singulars ** 2) * d))


def lemma6_check(H, s) -> bool:
    f = svd(H)
    s = np.asarray(s, dtype=complex)
    sig = np.concatenate([f.singulars, [0.0, 0.0]])
    top = sig[0] ** 2 * abs(np.vdot(f.right_vector(0), s)) ** 2
    mid = np.linalg.norm(np.asarray(H) @ s) ** 2
    return bool(_leq(top, mid) and _leq(mid, top + sig[1] ** 2))


def relay_step1_snr(x, sig, y):
    """|y^H diag(sig) x|^2 / (||diag(sig) y||^2 + 1), rows vectorized."""
    return np.abs(_rowdot(y, sig * x)) ** 2 / (np.sum(np.abs(sig * y) ** 2, axis=-1) + 1)


def sample_step1_feasible(gen: np.random.Generator, count: int, dim: int, c1, c2):
    """Random (x, sigma, y) with ||x|| = c1, ||y|| = c2 and the relay power constraint met."""
    x = random_unit_vectors(gen, count, dim) * np.reshape(c1, (-1, 1))
    y = random_unit_vectors(gen, count, dim) * np.reshape(c2, (-1, 1))
    sig = np.abs(gen.standard_normal((count, dim))) * (gen.random((count, dim)) < 0.7)
    sig[:, 0] += 1e-3
    power = np.sum(sig**2 * (np.abs(x) ** 2 + 1), axis=1)
    return x, sig / np.sqrt(power)[:, None], y


def step1_bound_check(x, sig, y):
    c1 = np.sum(np.abs(x) ** 2, axis=-1)
    c2 = np.sum(np.abs(y) ** 2, axis=-1)
    return _leq(relay_step1_snr(x, sig, y), c1 * c2 / (1 + c1 + c2))


def random_feasible_relay_snr(ch: ChannelSet, gen: np.random.Generator, draws: int,
                              local_fraction: float = 0.5) -> np.ndarray:
    """SNRs of random feasible (s, r, W): power-normalized W, unit s and r.

    A ``local_fraction`` of the draws perturbs the closed-form optimum so the
    search also probes its neighbourhood.
    """
    m, n, l = ch.dims.m, ch.dims.n, ch.dims.l
    P = ch.gains
    S = random_unit_vectors(gen, draws, m)
    R = random_unit_vectors(gen, draws, l)
    W = (gen.standard_normal((draws, n, n)) + 1j * gen.standard_normal((draws, n, n)))
    k = int(draws * local_fraction)
    if k:
        opt = schemes.optimal_no_direct(ch)
        scale = np.geomspace(1e-4, 0.3, k)[:, None]
        S[:k] = opt.tx + scale * random_unit_vectors(gen, k, m)
        R[:k] = opt.rx + scale * random_unit_vectors(gen, k, l)
        S[:k] /= np.linalg.norm(S[:k], axis=1, keepdims=True)
        R[:k] /= np.linalg.norm(R[:k], axis=1, keepdims=True)
        W[:k] = opt.relay_matrix + scale[:, :, None] * W[:k]
    H1s = np.einsum("ij,dj->di", ch.H1, S)
    WH1s = np.einsum("dij,dj->di", W, H1s)
    power = P.P1 * np.sum(np.abs(WH1s) ** 2, axis=1) + np.sum(np.abs(W) ** 2, axis=(1, 2))
    W = W / np.sqrt(power)[:, None, None]
    WH1s = WH1s / np.sqrt(power)[:, None]
    H2r = np.einsum("ji,dj->di", ch.H2.conj(), R)  # H2^H r
    num = P.P1 * P.P2 * np.abs(np.sum(H2r.conj() * WH1s, axis=1)) ** 2
    den = P.P2 * np.sum(np.abs(np.einsum("dji,dj->di", W.conj(), H2r)) ** 2, axis=1) + 1.0
    return num / den


def appendix3_gap_from_singulars(singulars: np.ndarray) -> float:
    """10 log10(1 + E{nu2^2}/E{nu1^2}) from sampled singular values (rows = samples)."""
    e = np.mean(np.asarray(singulars) ** 2, axis=0)
    return float(10 * np.log10(1 + e[1] / e[0]))


def rayleigh_singular_samples(rng, l: int, m: int, samples: int) -> np.ndarray:
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    z = gen.standard_normal((samples, l, m, 2))
    H = (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
    return np.linalg.svd(H, compute_uv=False)


def appendix3_gap(m: int, n: int, l: int, samples: int, rng=None) -> float:
    """Upper bound (dB) on the SNR loss of using only nu1, e1 of an l x m Rayleigh H0.

    ``n`` does not enter the bound; it is accepted so callers can pass full dims.
    """
    if min(l, m) < 2:
        raise ValueError("H0 needs at least two singular values")
    rng = RngStream(0, 0xA3) if rng is None else rng
    return appendix3_gap_from_singulars(rayleigh_singular_samples(rng, l, m, samples))


# -- Gaussian energy and optimum-direction statistics --------------------------------

def mean_singular_energy(rng, p: int, q: int, samples: int) -> tuple[float, float]:
    """Monte-Carlo E{sum_i sigma_i^2} of a p x q CN(0,1) matrix, with its standard error.

    The exact value is pq.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    z = gen.standard_normal((samples, p, q, 2))
    H = (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
    e = np.sum(np.linalg.svd(H, compute_uv=False) ** 2, axis=1)
    return float(e.mean()), float(e.std(ddof=1) / np.sqrt(samples))


@dataclass
class DirectionTest:
    statistic: np.ndarray  # |q^H s*|^2 per instance
    ks_statistic: float
    p_value: float

    def rejects(self, alpha: float) -> bool:
        return self.p_value < alpha


def optimum_direction_test(rng: RngStream, dims: SystemDims, gains: LinkGains, samples: int,
                           q=None) -> DirectionTest:
    """KS test of |q^H s*|^2 against Beta(1, m-1), the law of a uniform direction on the sphere."""
    from scipy import stats

    q = np.eye(dims.m, dtype=complex)[0] if q is None else np.asarray(q, dtype=complex)
    vals = np.empty(samples)
    for i, ch in enumerate(_channels(rng, dims, gains, samples, True)):
        s = schemes.optimal_with_direct(ch, rng=rng.spawn(i, 1)).tx
        vals[i] = abs(np.vdot(q, s)) ** 2
    res = stats.kstest(vals, stats.beta(1, dims.m - 1).cdf)
    return DirectionTest(vals, float(res.statistic), float(res.pvalue))


def rotation_objective_gap(ch: ChannelSet, Q, rng: RngStream | None = None) -> float:
    """Relative difference of the optimal objective for (H0, H1) and (H0 Q, H1 Q).

    The maximizer rotates with Q, so the optimal values must agree.
    """
    a = schemes.optimal_with_direct(ch, rng=rng)
    rot = ChannelSet(ch.H0 @ Q, ch.H1 @ Q, ch.H2, ch.gains, ch.dims)
    b = schemes.optimal_with_direct(rot, rng=rng)
    fa = schemes.direct_link_objective(ch, a.tx, a.snr.gamma2)
    fb = schemes.direct_link_objective(rot, b.tx, b.snr.gamma2)
    return abs(fa - fb) / max(abs(fa), 1e-300)
