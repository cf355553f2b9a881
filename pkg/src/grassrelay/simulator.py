"""Monte-Carlo BER of BPSK over quasi-static Rayleigh relay channels.

Every coherence interval draws one channel set, one block of BPSK symbols and
one block of noise vectors from its own stream. All schemes and all points of
the gain sweep reuse those draws (common random numbers), so BER differences
between schemes are not swamped by channel-to-channel variance.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import schemes
from .channels import ChannelSet, CoherenceSchedule, LinkGains, SystemDims, draw_channel_matrices
from .codebooks import Codebook
from .numerics import RngStream, db_to_linear


class SchemeId(str, Enum):
    OPTIMAL_NO_DL = "optimal_no_dl"
    QUANTIZED_NO_DL = "quantized_no_dl"
    OPTIMAL_DL = "optimal_dl"
    MODIFIED_UNQUANTIZED_DL = "modified_unquantized_dl"
    PROPERLY_QUANTIZED_DL = "properly_quantized_dl"
    MODIFIED_QUANTIZED_DL = "modified_quantized_dl"
    IGNORE_DIRECT = "ignore_direct"
    SWITCH_STRONGER = "switch_stronger"
    MMSE_BASELINE = "mmse_baseline"
    RANDOM_CODEBOOK_BASELINE = "random_codebook_baseline"


NO_DIRECT_ONLY = {SchemeId.OPTIMAL_NO_DL, SchemeId.QUANTIZED_NO_DL, SchemeId.RANDOM_CODEBOOK_BASELINE}
DIRECT_ONLY = {SchemeId.OPTIMAL_DL, SchemeId.MODIFIED_UNQUANTIZED_DL, SchemeId.PROPERLY_QUANTIZED_DL,
               SchemeId.MODIFIED_QUANTIZED_DL, SchemeId.SWITCH_STRONGER}
CODEBOOK_SCHEMES = {SchemeId.QUANTIZED_NO_DL, SchemeId.PROPERLY_QUANTIZED_DL,
                    SchemeId.MODIFIED_QUANTIZED_DL, SchemeId.RANDOM_CODEBOOK_BASELINE}


@dataclass(frozen=True)
class CurveSpec:
    """One BER curve: a scheme, plus the common codebook size for codebook schemes."""

    scheme: SchemeId
    N: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeId(self.scheme))
        if self.scheme in CODEBOOK_SCHEMES and self.N is None:
            raise ValueError(f"{self.scheme.value} needs a codebook size N")
        if self.scheme not in CODEBOOK_SCHEMES and self.N is not None:
            raise ValueError(f"{self.scheme.value} does not use codebooks")

    @property
    def label(self) -> str:
        return self.scheme.value if self.N is None else f"{self.scheme.value}[N={self.N}]"

    @classmethod
    def parse(cls, text: str) -> "CurveSpec":
        text = text.strip()
        if "[" in text:
            name, rest = text.split("[", 1)
            key, val = rest.rstrip("]").split("=")
            if key.strip() != "N":
                raise ValueError(f"bad curve spec {text!r}")
            return cls(SchemeId(name.strip()), int(val))
        return cls(SchemeId(text))


@dataclass
class CodebookSet:
    """Codebooks by size. ``grassmannian[N]`` maps role (C0, C1, C2) to a codebook;
    ``random[N]`` is a list of such role maps, cycled over intervals."""

    grassmannian: dict = field(default_factory=dict)
    random: dict = field(default_factory=dict)

    def digests(self) -> dict:
        out = {}
        for N, roles in sorted(self.grassmannian.items()):
            for role, C in sorted(roles.items()):
                out[f"grassmannian/N={N}/{role}"] = C.digest()
        for N, books in sorted(self.random.items()):
            for k, roles in enumerate(books):
                for role, C in sorted(roles.items()):
                    out[f"random/N={N}/{k}/{role}"] = C.digest()
        return out


@dataclass(frozen=True)
class FeedbackBudget:
    N0: int
    N1: int
    N2: int
    b: int = 0
    R0: int = 1

    def __post_init__(self):
        if min(self.N0, self.N1, self.N2, self.R0) < 1 or self.b < 0:
            raise ValueError(f"invalid feedback budget {self}")


def _log2_exact(N: int) -> int:
    if N < 1 or N & (N - 1):
        raise ValueError(f"codebook size {N} is not a power of two")
    return N.bit_length() - 1


def feedback_bit_terms(scheme, budget: FeedbackBudget, dims: SystemDims | None = None,
                       direct: bool = True) -> tuple[int, int] | None:
    """(label bits, number of scalar quantities); total = label bits + scalars * b.

    ``None`` for unquantized schemes, whose feedback is not modelled.
    """
    scheme = SchemeId(scheme)
    N0, N1, N2 = (_log2_exact(N) for N in (budget.N0, budget.N1, budget.N2))
    if scheme in (SchemeId.QUANTIZED_NO_DL, SchemeId.RANDOM_CODEBOOK_BASELINE):
        return N1 + N2, 0
    if scheme is SchemeId.PROPERLY_QUANTIZED_DL:
        return budget.R0 * N0 + N1 + N2, 1 + budget.R0
    if scheme is SchemeId.MODIFIED_QUANTIZED_DL:
        return N0 + N1 + N2, 2
    if scheme is SchemeId.MMSE_BASELINE:
        if dims is None:
            raise ValueError("MMSE accounting needs the antenna counts")
        m, n, l = dims.m, dims.n, dims.l
        if direct:
            return 2 * (m * n + m * l + l * n), 1
        return 2 * (m * n + n * l), 0
    return None


def feedback_bits(scheme, budget: FeedbackBudget, dims: SystemDims | None = None,
                  direct: bool = True) -> int | None:
    terms = feedback_bit_terms(scheme, budget, dims, direct)
    if terms is None:
        return None
    return terms[0] + terms[1] * budget.b


# -- symbol-level model --------------------------------------------------------

@dataclass(frozen=True)
class SlotModel:
    """Scalar model of the two receive slots after the Rx combiners: y_k = h_k x + noise_k."""

    h0: complex
    v0: float
    h1: complex
    v1: float
    relay_noise_row: np.ndarray  # maps the relay noise vector z1 into slot 2

    @property
    def snr(self) -> float:
        return abs(self.h0) ** 2 / self.v0 + abs(self.h1) ** 2 / self.v1


def slot_model(sol: schemes.BeamformingSolution, ch: ChannelSet) -> SlotModel:
    P = ch.gains
    W = sol.relay_matrix
    row = np.sqrt(P.P2) * (sol.rx.conj() @ ch.H2 @ W)
    h1 = complex(np.sqrt(P.P1) * (row @ ch.H1 @ sol.tx))
    v1 = float(np.vdot(row, row).real + np.vdot(sol.rx, sol.rx).real)
    if sol.rx_direct is None:
        h0, v0 = 0j, 1.0
    else:
        h0 = complex(np.sqrt(P.P0) * (sol.rx_direct.conj() @ ch.H0 @ sol.tx))
        v0 = float(np.vdot(sol.rx_direct, sol.rx_direct).real)
    return SlotModel(h0, v0, h1, v1, row)


def combine_two_slots(y0, y1, noise_variances, gains):
    """MRC of the two slots after whitening: sum_k conj(h_k)/v_k * y_k."""
    v0, v1 = noise_variances
    h0, h1 = gains
    if v0 <= 0 or v1 <= 0:
        raise ValueError("slot noise variances must be positive")
    return np.conj(h0) / v0 * np.asarray(y0) + np.conj(h1) / v1 * np.asarray(y1)


@dataclass
class IntervalDraws:
    x: np.ndarray  # BPSK symbols, +-1
    z0: np.ndarray  # Rx noise, slot 1 (S x l)
    z1: np.ndarray  # relay noise (S x n)
    z2: np.ndarray  # Rx noise, slot 2 (S x l)


def _cn(gen, shape):
    z = gen.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def draw_interval(gen: np.random.Generator, dims: SystemDims, symbols: int):
    """Channel matrices then symbols then noise, always in this order."""
    H = draw_channel_matrices(gen, dims)
    x = 1.0 - 2.0 * gen.integers(0, 2, symbols)
    draws = IntervalDraws(x, _cn(gen, (symbols, dims.l)), _cn(gen, (symbols, dims.n)), _cn(gen, (symbols, dims.l)))
    return H, draws


def received_slots(sol, ch, draws: IntervalDraws):
    """Slot observations after the Rx combiners, built from the full vector model."""
    model = slot_model(sol, ch)
    y1 = model.h1 * draws.x + draws.z1 @ model.relay_noise_row + draws.z2 @ sol.rx.conj()
    if sol.rx_direct is None:
        y0 = np.zeros_like(y1)
    else:
        y0 = model.h0 * draws.x + draws.z0 @ sol.rx_direct.conj()
    return model, y0, y1


def count_errors(sol, ch, draws: IntervalDraws) -> int:
    model, y0, y1 = received_slots(sol, ch, draws)
    out = combine_two_slots(y0, y1, (model.v0, model.v1), (model.h0, model.h1))
    decided = np.where(out.real < 0, -1.0, 1.0)
    return int(np.count_nonzero(decided != draws.x))


# -- sweeps and curves -----------------------------------------------------------

@dataclass(frozen=True)
class GainSweep:
    """Two fixed link SNRs and one swept link, all in dB."""

    swept: str
    grid_db: tuple
    fixed_db: dict

    def __post_init__(self):
        if self.swept not in ("P0", "P1", "P2"):
            raise ValueError(f"swept link must be P0, P1 or P2, got {self.swept!r}")
        grid = tuple(float(x) for x in self.grid_db)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("sweep grid must be non-empty and strictly increasing")
        object.__setattr__(self, "grid_db", grid)
        others = {"P0", "P1", "P2"} - {self.swept}
        missing = others - set(self.fixed_db)
        if missing:
            raise ValueError(f"fixed link SNRs missing for {sorted(missing)}")
        object.__setattr__(self, "fixed_db", {k: float(self.fixed_db[k]) for k in sorted(others)})

    def gains(self, k: int) -> LinkGains:
        vals = dict(self.fixed_db)
        vals[self.swept] = self.grid_db[k]
        return LinkGains(*(float(db_to_linear(vals[p])) for p in ("P0", "P1", "P2")))

    def __len__(self):
        return len(self.grid_db)


@dataclass
class BerPoint:
    snr_db: float
    bit_errors: int
    bits_sent: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent

    @property
    def stderr(self) -> float:
        p = self.ber
        return math.sqrt(p * (1 - p) / self.bits_sent)


@dataclass
class BerCurve:
    spec: CurveSpec
    sweep_var: str
    points: list
    fingerprint: str
    feedback_bits: int | None = None

    @property
    def label(self) -> str:
        return self.spec.label

    def bers(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])


@dataclass
class _Context:
    curves: tuple
    dims: SystemDims
    sweep: GainSweep
    codebooks: CodebookSet
    schedule: CoherenceSchedule
    master: RngStream
    include_direct: bool
    mmse_bits: int


def _solve(ctx: _Context, spec: CurveSpec, ch: ChannelSet, interval: int):
    sid = spec.scheme
    opt_rng = ctx.master.spawn(1, interval)
    if sid is SchemeId.OPTIMAL_NO_DL:
        return schemes.optimal_no_direct(ch)
    if sid is SchemeId.QUANTIZED_NO_DL:
        cb = ctx.codebooks.grassmannian[spec.N]
        return schemes.quantized_no_direct(ch, cb["C1"], cb["C2"])
    if sid is SchemeId.RANDOM_CODEBOOK_BASELINE:
        books = ctx.codebooks.random[spec.N]
        cb = books[interval % len(books)]
        return schemes.quantized_no_direct(ch, cb["C1"], cb["C2"])
    if sid is SchemeId.OPTIMAL_DL:
        return schemes.optimal_with_direct(ch, rng=opt_rng)
    if sid is SchemeId.MODIFIED_UNQUANTIZED_DL:
        return schemes.modified_unquantized_with_direct(ch, rng=opt_rng)
    if sid is SchemeId.PROPERLY_QUANTIZED_DL:
        cb = ctx.codebooks.grassmannian[spec.N]
        return schemes.properly_quantized_with_direct(ch, cb["C0"], cb["C1"], cb["C2"], "quantized_singulars")
    if sid is SchemeId.MODIFIED_QUANTIZED_DL:
        cb = ctx.codebooks.grassmannian[spec.N]
        return schemes.modified_quantized_with_direct(ch, cb["C0"], cb["C1"], cb["C2"])
    if sid is SchemeId.IGNORE_DIRECT:
        return schemes.baseline_ignore_direct(ch)
    if sid is SchemeId.SWITCH_STRONGER:
        return schemes.baseline_switch_stronger(ch)
    if sid is SchemeId.MMSE_BASELINE:
        return schemes.baseline_mmse_quantizer(ch, ctx.mmse_bits, rng=opt_rng)
    raise ValueError(sid)


def _run_intervals(ctx: _Context, start: int, stop: int) -> np.ndarray:
    errors = np.zeros((len(ctx.curves), len(ctx.sweep)), dtype=np.int64)
    gains = [ctx.sweep.gains(k) for k in range(len(ctx.sweep))]
    for i in range(start, stop):
        gen = ctx.schedule.stream(ctx.master, i).generator()
        (H0, H1, H2), draws = draw_interval(gen, ctx.dims, ctx.schedule.symbols_per_interval)
        for k, g in enumerate(gains):
            ch = ChannelSet(H0 if ctx.include_direct else None, H1, H2, g, ctx.dims)
            for c, spec in enumerate(ctx.curves):
                errors[c, k] += count_errors(_solve(ctx, spec, ch, i), ch, draws)
    return errors


def _worker_count(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("GRASSRELAY_THREADS", "1") or 1)
    return max(1, threads)


def validate_curves(curves, include_direct: bool, codebooks: CodebookSet, dims: SystemDims):
    if not curves:
        raise ValueError("no schemes requested")
    for spec in curves:
        if include_direct and spec.scheme in NO_DIRECT_ONLY:
            raise ValueError(f"{spec.label} ignores the direct link; run it in a scenario without one")
        if not include_direct and spec.scheme in DIRECT_ONLY:
            raise ValueError(f"{spec.label} needs the direct link")
        if spec.scheme is SchemeId.RANDOM_CODEBOOK_BASELINE:
            if not codebooks.random.get(spec.N):
                raise ValueError(f"no random codebooks of size {spec.N}")
        elif spec.scheme in CODEBOOK_SCHEMES:
            roles = codebooks.grassmannian.get(spec.N)
            if not roles:
                raise ValueError(f"no Grassmannian codebooks of size {spec.N}")
            need = {"C1": dims.m, "C2": dims.n}
            if include_direct:
                need["C0"] = dims.m
            for role, dim in need.items():
                if role not in roles or roles[role].dim != dim:
                    raise ValueError(f"codebook {role} of size {spec.N} must have dimension {dim}")


def fingerprint(ctx: _Context, spec: CurveSpec) -> str:
    payload = {
        "seed": ctx.master.seed, "stream": ctx.master.stream,
        "dims": [ctx.dims.m, ctx.dims.n, ctx.dims.l],
        "sweep": [ctx.sweep.swept, list(ctx.sweep.grid_db), ctx.sweep.fixed_db],
        "schedule": [ctx.schedule.intervals, ctx.schedule.symbols_per_interval],
        "direct": ctx.include_direct, "curve": spec.label, "mmse_bits": ctx.mmse_bits,
        "codebooks": ctx.codebooks.digests(),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def simulate_ber(curves, dims: SystemDims, sweep: GainSweep, codebooks: CodebookSet,
                 schedule: CoherenceSchedule, rng: RngStream, include_direct: bool = True,
                 b: int = 0, mmse_bits: int = 1, threads: int | None = None) -> list:
    """BER curves for every requested scheme over the gain sweep.

    ``b`` is the bit cost of one fed-back scalar, used only for the accounting
    column. Work is split over intervals; the result does not depend on the
    number of workers.
    """
    curves = tuple(CurveSpec.parse(c) if isinstance(c, str) else c for c in curves)
    validate_curves(curves, include_direct, codebooks, dims)
    ctx = _Context(curves, dims, sweep, codebooks, schedule, rng, include_direct, mmse_bits)
    workers = min(_worker_count(threads), schedule.intervals)
    if workers == 1:
        errors = _run_intervals(ctx, 0, schedule.intervals)
    else:
        edges = np.linspace(0, schedule.intervals, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_run_intervals, ctx, int(a), int(z)) for a, z in zip(edges[:-1], edges[1:])]
            errors = sum(f.result() for f in futs)
    bits = schedule.total_symbols
    out = []
    R0 = min(dims.l, dims.m)
    for c, spec in enumerate(curves):
        fb = None
        if spec.scheme in CODEBOOK_SCHEMES or spec.scheme is SchemeId.MMSE_BASELINE:
            N = spec.N or 2
            fb = feedback_bits(spec.scheme, FeedbackBudget(N, N, N, b, R0), dims, include_direct)
        pts = [BerPoint(snr, int(errors[c, k]), bits) for k, snr in enumerate(sweep.grid_db)]
        out.append(BerCurve(spec, sweep.swept, pts, fingerprint(ctx, spec), fb))
    return out


CSV_COLUMNS = ("scheme", "sweep_var", "snr_db", "bit_errors", "bits_sent", "ber", "stderr", "feedback_bits", "seed")


def ber_rows(curves, seed: int):
    for curve in curves:
        for p in curve.points:
            yield {
                "scheme": curve.label, "sweep_var": curve.sweep_var, "snr_db": f"{p.snr_db:g}",
                "bit_errors": p.bit_errors, "bits_sent": p.bits_sent, "ber": f"{p.ber:.10g}",
                "stderr": f"{p.stderr:.10g}",
                "feedback_bits": "" if curve.feedback_bits is None else curve.feedback_bits,
                "seed": seed,
            }
