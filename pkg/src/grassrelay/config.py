"""Scenario files: INI sections describing one BER experiment.

Schema (all sections required unless marked optional)::

    [scenario]
    name = nodl_quantized
    seed = 2024                 ; master seed, overridable with --seed

    [system]
    m = 2
    n = 2
    l = 2
    direct_link = no

    [gains]
    sweep = P1                  ; the swept link: P0, P1 or P2
    grid_db = 0:12:2            ; start:stop:step (inclusive) or a comma list
    P2_db = 8                   ; the two fixed links
    P0_db = 0                   ; ignored without a direct link, but must parse

    [schedule]
    intervals = 2000
    symbols = 100
    full_intervals = 20000      ; optional, used by --full-scale
    full_symbols = 200

    [schemes]
    curves = optimal_no_dl, quantized_no_dl[N=4], random_codebook_baseline[N=4]

    [codebooks]                 ; optional
    restarts = 20
    iterations = 200
    random_books = 10
    load.N8.C1 = path/to/file   ; optional, relative to the config file

    [budget]                    ; optional
    b = 4
    mmse_bits = 1

    [bounds]                    ; optional
    samples = 1000
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .channels import CoherenceSchedule, SystemDims
from .simulator import CODEBOOK_SCHEMES, CurveSpec, GainSweep, NO_DIRECT_ONLY, DIRECT_ONLY

BUNDLED = ("nodl_quantized", "nodl_mmse", "dl_unquantized", "dl_quantized_p0", "dl_quantized_p1")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    dims: SystemDims
    include_direct: bool
    sweep: GainSweep
    schedule: CoherenceSchedule
    full_schedule: CoherenceSchedule
    curves: tuple
    restarts: int = 20
    iterations: int = 200
    random_books: int = 10
    codebook_files: dict = field(default_factory=dict)  # (N, role) -> Path
    b: int = 4
    mmse_bits: int = 1
    bound_samples: int = 1000
    source: str = "<string>"

    @property
    def codebook_sizes(self) -> list:
        return sorted({c.N for c in self.curves if c.N is not None and c.scheme.value != "random_codebook_baseline"})

    @property
    def random_sizes(self) -> list:
        return sorted({c.N for c in self.curves if c.scheme.value == "random_codebook_baseline"})

    def with_overrides(self, seed=None, intervals=None, symbols=None, full_scale=False) -> "ScenarioConfig":
        cfg = self
        if full_scale:
            cfg = replace(cfg, schedule=cfg.full_schedule)
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if intervals is not None or symbols is not None:
            cfg = replace(cfg, schedule=CoherenceSchedule(
                intervals if intervals is not None else cfg.schedule.intervals,
                symbols if symbols is not None else cfg.schedule.symbols_per_interval))
        return cfg

    def echo(self) -> dict:
        return {
            "name": self.name, "seed": self.seed,
            "dims": [self.dims.m, self.dims.n, self.dims.l], "direct_link": self.include_direct,
            "sweep": {"var": self.sweep.swept, "grid_db": list(self.sweep.grid_db), "fixed_db": self.sweep.fixed_db},
            "schedule": [self.schedule.intervals, self.schedule.symbols_per_interval],
            "curves": [c.label for c in self.curves],
            "codebooks": {"restarts": self.restarts, "iterations": self.iterations,
                          "random_books": self.random_books,
                          "files": {f"N{N}.{role}": str(p) for (N, role), p in sorted(self.codebook_files.items())}},
            "budget": {"b": self.b, "mmse_bits": self.mmse_bits},
            "bound_samples": self.bound_samples,
        }


def parse_grid(text: str) -> tuple:
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ConfigError(f"grid must be start:stop:step, got {text!r}") from None
        if step <= 0:
            raise ConfigError("grid step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(round(start + k * step, 10)) for k in range(count))
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"grid entries must be numbers, got {text!r}") from None


def _get(cp, section, key, conv=str, default=None):
    if not cp.has_option(section, key):
        if default is None:
            raise ConfigError(f"missing [{section}] {key}")
        return default
    raw = cp.get(section, key)
    try:
        if conv is bool:
            return cp.getboolean(section, key)
        return conv(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def loads_config(text: str, source: str = "<string>", base_dir: Path | None = None) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    for sec in ("scenario", "system", "gains", "schedule", "schemes"):
        if not cp.has_section(sec):
            raise ConfigError(f"{source}: missing section [{sec}]")
    try:
        dims = SystemDims(_get(cp, "system", "m", int), _get(cp, "system", "n", int), _get(cp, "system", "l", int))
        direct = _get(cp, "system", "direct_link", bool)
        swept = _get(cp, "gains", "sweep").strip()
        if not direct and swept == "P0":
            raise ConfigError("cannot sweep P0 without a direct link")
        fixed = {p: _get(cp, "gains", f"{p}_db", float) for p in ("P0", "P1", "P2")
                 if p != swept and (direct or p != "P0")}
        if not direct:
            fixed["P0"] = _get(cp, "gains", "P0_db", float, 0.0)
        sweep = GainSweep(swept, parse_grid(_get(cp, "gains", "grid_db")), fixed)
        sched = CoherenceSchedule(_get(cp, "schedule", "intervals", int), _get(cp, "schedule", "symbols", int))
        full = CoherenceSchedule(_get(cp, "schedule", "full_intervals", int, 20000),
                                 _get(cp, "schedule", "full_symbols", int, 200))
        curves = tuple(CurveSpec.parse(c) for c in _get(cp, "schemes", "curves", str, "").split(",") if c.strip())
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if not curves:
        raise ConfigError(f"{source}: [schemes] curves is empty")
    for c in curves:
        if direct and c.scheme in NO_DIRECT_ONLY:
            raise ConfigError(f"{source}: {c.label} is for scenarios without a direct link")
        if not direct and c.scheme in DIRECT_ONLY:
            raise ConfigError(f"{source}: {c.label} needs direct_link = yes")

    files = {}
    if cp.has_section("codebooks"):
        for key, val in cp.items("codebooks"):
            if not key.startswith("load."):
                continue
            try:
                _, size, role = key.split(".")
                N = int(size.lstrip("N"))
            except ValueError:
                raise ConfigError(f"{source}: codebook key must look like load.N8.C1, got {key!r}") from None
            if role not in ("C0", "C1", "C2"):
                raise ConfigError(f"{source}: unknown codebook role {role!r}")
            path = Path(val)
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            if not path.is_file():
                raise ConfigError(f"{source}: codebook file {path} does not exist")
            files[(N, role)] = path

    def opt(section, key, conv, default):
        return _get(cp, section, key, conv, default) if cp.has_section(section) else default

    cfg = ScenarioConfig(
        name=_get(cp, "scenario", "name"), seed=_get(cp, "scenario", "seed", int),
        dims=dims, include_direct=direct, sweep=sweep, schedule=sched, full_schedule=full, curves=curves,
        restarts=opt("codebooks", "restarts", int, 20), iterations=opt("codebooks", "iterations", int, 200),
        random_books=opt("codebooks", "random_books", int, 10), codebook_files=files,
        b=opt("budget", "b", int, 4), mmse_bits=opt("budget", "mmse_bits", int, 1),
        bound_samples=opt("bounds", "samples", int, 1000), source=source,
    )
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ConfigError(f"{source}: seed must be an unsigned 64-bit integer")
    if min(cfg.restarts, cfg.iterations, cfg.random_books, cfg.mmse_bits) < 1 or cfg.b < 0 or cfg.bound_samples < 0:
        raise ConfigError(f"{source}: codebook, budget and bounds settings must be positive")
    for c in curves:
        if c.scheme in CODEBOOK_SCHEMES and (c.N < 2 or c.N & (c.N - 1)):
            raise ConfigError(f"{source}: codebook size {c.N} must be a power of two >= 2")
    return cfg


def load_config(path_or_name) -> ScenarioConfig:
    """Load a scenario file, or a bundled scenario by name (``nodl_quantized`` ... ``dl_quantized_p1``)."""
    name = str(path_or_name)
    if name in BUNDLED:
        text = resources.files("grassrelay").joinpath("configs", f"{name}.ini").read_text()
        return loads_config(text, source=f"<bundled {name}>")
    path = Path(name)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found (bundled names: {', '.join(BUNDLED)})")
    return loads_config(path.read_text(), source=str(path), base_dir=path.parent)
