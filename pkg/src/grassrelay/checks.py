"""Invariant checks shared by the ``selfcheck`` verb and the acceptance tests.

Each check takes its sample sizes as arguments and returns a ``CheckResult``;
``selfcheck`` runs them small, the acceptance suite at full size.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels, analysis
from .channels import LinkGains, SystemDims, sample_channel_set
from .codebooks import generate_grassmannian, load_codebook
from .numerics import RngStream, random_unit_vectors, sample_complex_gaussian_matrix
from .schemes import optimal_no_direct
from .simulator import FeedbackBudget, SchemeId, feedback_bits


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t = time.perf_counter()
        res = fn(*args, **kwargs)
        for r in res if isinstance(res, list) else [res]:
            r.seconds = time.perf_counter() - t
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


FEEDBACK_TABLE = {  # scheme, N -> (constant, coefficient of b) for m=n=l=3, full-rank H0
    (SchemeId.PROPERLY_QUANTIZED_DL, 8): (15, 4),
    (SchemeId.PROPERLY_QUANTIZED_DL, 16): (20, 4),
    (SchemeId.MODIFIED_QUANTIZED_DL, 8): (9, 2),
    (SchemeId.MODIFIED_QUANTIZED_DL, 16): (12, 2),
    (SchemeId.MMSE_BASELINE, 8): (54, 1),
    (SchemeId.MMSE_BASELINE, 16): (54, 1),
}


@_timed
def check_feedback_table(bs=range(0, 9)) -> CheckResult:
    dims = SystemDims(3, 3, 3)
    bad = []
    for (scheme, N), (const, coef) in FEEDBACK_TABLE.items():
        for b in bs:
            got = feedback_bits(scheme, FeedbackBudget(N, N, N, b, 3), dims, direct=True)
            if got != const + coef * b:
                bad.append(f"{scheme.value} N={N} b={b}: {got} != {const + coef * b}")
    return CheckResult("feedback_table", not bad, "all entries exact" if not bad else "; ".join(bad[:3]))


@_timed
def check_second_singular_gap(samples: int = 100_000, seed: int = 1, target: float = 1.24, tol: float = 0.05) -> CheckResult:
    gap = analysis.appendix3_gap(3, 3, 3, samples, RngStream(seed, 0xA3))
    return CheckResult("second_singular_gap", abs(gap - target) <= tol, f"{gap:.4f} dB vs {target} +- {tol}")


@_timed
def check_singular_energy(samples: int = 100_000, seed: int = 2, shapes=((2, 2), (3, 3), (2, 3)), rel: float = 0.02):
    out = []
    for k, (p, q) in enumerate(shapes):
        mean, _ = analysis.mean_singular_energy(RngStream(seed, k), p, q, samples)
        err = abs(mean - p * q) / (p * q)
        out.append(CheckResult(f"singular_energy_{p}x{q}", err <= rel, f"E sum sigma^2 = {mean:.4f}, pq = {p * q}"))
    return out


@_timed
def check_relay_optimum(instances: int = 200, draws: int = 10_000, seed: int = 3, rel: float = 1e-9) -> CheckResult:
    dims = SystemDims(2, 2, 2)
    master = RngStream(seed, 0)
    worst = -np.inf
    for i in range(instances):
        gen = master.spawn(i).generator()
        gains = LinkGains(*(10 ** gen.uniform(-1, 1.5, 3)))
        ch = sample_channel_set(gen, dims, gains, include_direct=False)
        best = optimal_no_direct(ch).snr.gamma_total
        found = analysis.random_feasible_relay_snr(ch, gen, draws)
        worst = max(worst, float((found.max() - best) / best))
    return CheckResult("relay_optimum_oracle", worst <= rel,
                       f"max relative excess over closed form {worst:.3e} ({instances}x{draws})")


def _nonneg(gen, size):
    """Nonnegative reals over many decades, with exact zeros and near-ties mixed in."""
    x = 10 ** gen.uniform(-6, 4, size)
    x[gen.random(size) < 0.05] = 0.0
    return x


@_timed
def check_inequality_fuzz(draws: int = 100_000, seed: int = 4):
    gen = RngStream(seed, 0).generator()
    out = []

    def record(name, ok):
        ok = np.asarray(ok)
        bad = int(ok.size - np.count_nonzero(ok))
        out.append(CheckResult(name, bad == 0, f"{bad} violations in {ok.size} draws"))

    x1, x2, y1, y2 = (_nonneg(gen, draws) for _ in range(4))
    near = gen.random(draws) < 0.3
    x2[near] = x1[near] * (1 + 1e-6 * gen.standard_normal(near.sum()))
    x2 = np.abs(x2)
    record("snr_difference", analysis.lemma1_check(x1, x2, y1, y2))

    a, b = _nonneg(gen, draws), _nonneg(gen, draws)
    c = 10 ** gen.uniform(-4, 4, draws)
    record("ineq_ratio", analysis.ineq_ratio_check(a, b, c))

    m = 3
    u = random_unit_vectors(gen, draws, m)
    v = random_unit_vectors(gen, draws, m)
    w = random_unit_vectors(gen, draws, m)
    close = gen.random(draws) < 0.3
    w[close] = u[close] + 1e-3 * random_unit_vectors(gen, int(close.sum()), m)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    record("ineq_overlap", analysis.ineq_overlap_check(u, v, w))

    books = [generate_grassmannian(RngStream(seed, 100 + N), 3, N, restarts=2, iterations=50) for N in (4, 8, 16)]
    l3, l6 = np.empty(draws, bool), np.empty(draws, bool)
    for i in range(draws):
        H = sample_complex_gaussian_matrix(gen, 1 + i % 4, 3) * 10 ** gen.uniform(-2, 2)
        s = random_unit_vectors(gen, 1, 3)[0]
        l3[i] = analysis.lemma3_check(H, s, books[i % 3])
        l6[i] = analysis.lemma6_check(H, s)
    record("codebook_gain", l3)
    record("direction_sandwich", l6)

    c1 = 10 ** gen.uniform(-3, 3, draws)
    c2 = 10 ** gen.uniform(-3, 3, draws)
    x, sig, y = analysis.sample_step1_feasible(gen, draws, 3, np.sqrt(c1), np.sqrt(c2))
    record("relay_step1_bound", analysis.step1_bound_check(x, sig, y))
    return out


@_timed
def check_backends(seed: int = 5, cases: int = 20, tol: float = 1e-9) -> CheckResult:
    """numba and numpy ascent kernels land on the same objective values."""
    if _kernels.numba_impl is None:
        return CheckResult("kernel_backends", True, "numba unavailable, numpy only")
    gen = RngStream(seed, 0).generator()
    worst = 0.0
    for _ in range(cases):
        H1 = sample_complex_gaussian_matrix(gen, 3, 3)
        H0 = sample_complex_gaussian_matrix(gen, 3, 3)
        A, B = H1.conj().T @ H1, H0.conj().T @ H0
        starts = random_unit_vectors(gen, 8, 3)
        args = (A, B, 0.7, 0.4, starts, 1e-10, 500, 1e-4, 0.5)
        _, f_nb, _ = _kernels.numba_impl.sphere_ascent(*args)
        _, f_np, _ = _kernels.numpy_impl.sphere_ascent(*args)
        worst = max(worst, float(np.max(np.abs(f_nb - f_np))))
    return CheckResult("kernel_backends", worst <= tol, f"max objective difference {worst:.2e}")


@_timed
def check_codebook_file(path) -> CheckResult:
    try:
        C = load_codebook(path)
    except (OSError, ValueError) as exc:
        return CheckResult(f"codebook {path}", False, str(exc))
    delta = "n/a" if C.min_distance is None else f"{C.min_distance:.4f}"
    return CheckResult(f"codebook {path}", True, f"dim {C.dim}, {C.size} codewords, min distance {delta}")


def selfcheck_suite(codebook_files=()):
    """The fast suite behind ``grassrelay selfcheck``."""
    results = [check_feedback_table(), check_second_singular_gap(samples=100_000)]
    results += check_singular_energy(samples=20_000)
    results.append(check_relay_optimum(instances=10, draws=2000))
    results += check_inequality_fuzz(draws=5000)
    results.append(check_backends(cases=5))
    results += [check_codebook_file(p) for p in codebook_files]
    return results
