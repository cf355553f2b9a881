"""Command line entry point: ``grassrelay codebook|bounds|ber|selfcheck``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import shutil
import sys
from pathlib import Path

from . import __version__, analysis, checks
from .codebooks import (CodebookFormatError, generate_grassmannian, generate_random_codebook, load_codebook,
                        save_codebook, dumps_codebook)
from .config import ConfigError, ScenarioConfig, load_config
from .numerics import RngStream
from .simulator import CSV_COLUMNS, CodebookSet, ber_rows, simulate_ber

log = logging.getLogger("grassrelay")

BOUND_COLUMNS = ("name", "sweep_var", "snr_db", "N", "empirical_loss", "standard_error", "bound_value",
                 "satisfied", "samples")


# -- codebooks for a scenario ---------------------------------------------------

def _codebook_stream(master: RngStream, *keys) -> RngStream:
    return master.spawn(2, *keys)


def build_codebooks(cfg: ScenarioConfig, master: RngStream) -> tuple[CodebookSet, dict]:
    """Codebooks the scenario needs, plus a file-name -> Codebook map for saving.

    Generated Grassmannian codebooks are shared between roles of the same
    dimension; files named in the config take precedence.
    """
    d = cfg.dims
    roles = {"C1": d.m, "C2": d.n}
    if cfg.include_direct:
        roles["C0"] = d.m
    generated, files = {}, {}
    cs = CodebookSet()
    for N in cfg.codebook_sizes:
        cs.grassmannian[N] = {}
        for role, dim in sorted(roles.items()):
            if (N, role) in cfg.codebook_files:
                C = load_codebook(cfg.codebook_files[(N, role)])
                if C.dim != dim or C.size != N:
                    raise ConfigError(f"codebook {cfg.codebook_files[(N, role)]} is {C.dim}x{C.size}, "
                                      f"expected dimension {dim} with {N} codewords")
            else:
                if (dim, N) not in generated:
                    generated[(dim, N)] = generate_grassmannian(_codebook_stream(master, 0, dim, N), dim, N,
                                                                cfg.restarts, cfg.iterations)
                C = generated[(dim, N)]
            cs.grassmannian[N][role] = C
            files[f"grassmannian_N{N}_{role}.txt"] = C
    for N in cfg.random_sizes:
        books = []
        for k in range(cfg.random_books):
            book = {r: generate_random_codebook(_codebook_stream(master, 1, N, k, j), dim, N)
                    for j, (r, dim) in enumerate(sorted(roles.items()))}
            books.append(book)
            for r, C in book.items():
                files[f"random_N{N}_{k}_{r}.txt"] = C
        cs.random[N] = books
    return cs, files


def bound_reports(cfg: ScenarioConfig, cs: CodebookSet, master: RngStream) -> list:
    """Paired loss vs analytic bound at every sweep point and Grassmannian size."""
    rows = []
    if cfg.bound_samples == 0:
        return rows
    for N, roles in sorted(cs.grassmannian.items()):
        for k, snr in enumerate(cfg.sweep.grid_db):
            gains = cfg.sweep.gains(k)
            rng = master.spawn(4, N, k)
            if cfg.include_direct:
                reps = [analysis.loss_with_direct(rng, cfg.dims, gains, None, roles["C1"], roles["C2"],
                                                  cfg.bound_samples, "full_H0"),
                        analysis.loss_with_direct(rng, cfg.dims, gains, roles["C0"], roles["C1"], roles["C2"],
                                                  cfg.bound_samples, "quantized_singulars")]
            else:
                reps = [analysis.loss_no_direct(rng, cfg.dims, gains, roles["C1"], roles["C2"], cfg.bound_samples)]
            for rep in reps:
                rows.append({"name": rep.name, "sweep_var": cfg.sweep.swept, "snr_db": f"{snr:g}", "N": N,
                             "empirical_loss": f"{rep.empirical_loss:.10g}",
                             "standard_error": f"{rep.standard_error:.10g}",
                             "bound_value": f"{rep.bound_value:.10g}",
                             "satisfied": int(rep.satisfied), "samples": rep.samples})
    return rows


# -- artifact writing ---------------------------------------------------------------

def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


class _Artifacts:
    """Tracks written files so a failed run can remove them."""

    def __init__(self, out: Path):
        self.out = out
        self.created_dir = not out.exists()
        self.written: dict = {}

    def write(self, rel: str, text: str):
        path = self.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.written[rel] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def rollback(self):
        for rel in self.written:
            (self.out / rel).unlink(missing_ok=True)
        sub = self.out / "codebooks"
        if sub.is_dir() and not any(sub.iterdir()):
            sub.rmdir()
        if self.created_dir and self.out.exists():
            shutil.rmtree(self.out)


def _manifest(cfg_echo: dict, artifacts: dict) -> str:
    return json.dumps({"version": __version__, "config": cfg_echo, "artifacts": dict(sorted(artifacts.items()))},
                      indent=2, sort_keys=True) + "\n"


def run_scenario(cfg: ScenarioConfig, out: Path, threads: int | None = None, with_bounds: bool = True,
                 with_ber: bool = True) -> int:
    """Run a scenario and write ber.csv, bounds.csv, codebooks/ and manifest.json under ``out``."""
    out = Path(out)
    art = _Artifacts(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        master = RngStream(cfg.seed, 0)
        cs, files = build_codebooks(cfg, master)
        for name, C in sorted(files.items()):
            art.write(f"codebooks/{name}", dumps_codebook(C))
        if with_ber:
            log.info("%s: %d curves x %d points, %d x %d symbols", cfg.name, len(cfg.curves), len(cfg.sweep),
                     cfg.schedule.intervals, cfg.schedule.symbols_per_interval)
            curves = simulate_ber(cfg.curves, cfg.dims, cfg.sweep, cs, cfg.schedule, master,
                                  cfg.include_direct, cfg.b, cfg.mmse_bits, threads)
            art.write("ber.csv", _csv_text(CSV_COLUMNS, ber_rows(curves, cfg.seed)))
        if with_bounds:
            art.write("bounds.csv", _csv_text(BOUND_COLUMNS, bound_reports(cfg, cs, master)))
        art.write("manifest.json", _manifest(cfg.echo(), art.written))
    except BaseException:
        art.rollback()
        raise
    return 0


# -- verbs ----------------------------------------------------------------------------

def _scenario(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, intervals=getattr(args, "intervals", None),
                              symbols=getattr(args, "symbols", None), full_scale=getattr(args, "full_scale", False))


def cmd_codebook_gen(args) -> int:
    rng = RngStream(args.seed if args.seed is not None else 0, 0)
    if args.kind == "grassmannian":
        C = generate_grassmannian(rng, args.dim, args.size, args.restarts, args.iterations)
    else:
        C = generate_random_codebook(rng, args.dim, args.size)
    if args.out is None:
        sys.stdout.write(dumps_codebook(C))
    else:
        save_codebook(C, args.out, comment=f"{args.kind} dim={args.dim} N={args.size} seed={args.seed}")
        print(f"wrote {args.out}: min distance {C.min_distance:.6f}")
    return 0


def cmd_codebook_info(args) -> int:
    C = load_codebook(args.path)
    print(f"dim {C.dim}")
    print(f"size {C.size}")
    if C.min_distance is not None:
        print(f"min_distance {C.min_distance:.10f}")
        print(f"distortion_bound {analysis.distortion_bound(C.size, C.min_distance, C.dim):.10f}")
    print(f"digest {C.digest()}")
    return 0


def cmd_ber(args) -> int:
    cfg = _scenario(args)
    out = Path(args.out or f"results/{cfg.name}")
    run_scenario(cfg, out, threads=args.threads, with_bounds=not args.no_bounds)
    print(f"wrote {out}")
    return 0


def cmd_bounds(args) -> int:
    cfg = _scenario(args)
    if args.samples is not None:
        from dataclasses import replace
        cfg = replace(cfg, bound_samples=args.samples)
    out = Path(args.out or f"results/{cfg.name}")
    run_scenario(cfg, out, with_ber=False)
    print(f"wrote {out / 'bounds.csv'}")
    return 0


def cmd_selfcheck(args) -> int:
    results = checks.selfcheck_suite(args.codebook or ())
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grassrelay", description="Quantized beamforming for MIMO AF relay channels.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    cb = sub.add_parser("codebook", help="generate or inspect codebook files")
    cbs = cb.add_subparsers(dest="action", required=True)
    gen = cbs.add_parser("gen", help="generate a codebook")
    gen.add_argument("--dim", type=int, required=True)
    gen.add_argument("--size", type=int, required=True)
    gen.add_argument("--kind", choices=("grassmannian", "random"), default="grassmannian")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--restarts", type=int, default=20)
    gen.add_argument("--iterations", type=int, default=200)
    gen.add_argument("--out", type=Path)
    gen.set_defaults(func=cmd_codebook_gen)
    info = cbs.add_parser("info", help="print dimension, size and minimum distance")
    info.add_argument("path", type=Path)
    info.set_defaults(func=cmd_codebook_info)

    def scenario_flags(sp, schedule=True):
        sp.add_argument("--config", required=True,
                        help="scenario file or bundled scenario name (see README)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", type=Path)
        if schedule:
            sp.add_argument("--intervals", type=int)
            sp.add_argument("--symbols", type=int)
            sp.add_argument("--full-scale", action="store_true", help="20,000 intervals x 200 symbols")

    ber = sub.add_parser("ber", help="run a BER sweep")
    scenario_flags(ber)
    ber.add_argument("--threads", type=int, help="worker processes (default: GRASSRELAY_THREADS or 1)")
    ber.add_argument("--no-bounds", action="store_true", help="skip the bound report")
    ber.set_defaults(func=cmd_ber)

    bounds = sub.add_parser("bounds", help="compare Monte-Carlo SNR loss with the analytic bounds")
    scenario_flags(bounds, schedule=False)
    bounds.add_argument("--samples", type=int)
    bounds.set_defaults(func=cmd_bounds)

    sc = sub.add_parser("selfcheck", help="run the fast invariant suite")
    sc.add_argument("--codebook", type=Path, action="append", help="also validate this codebook file")
    sc.set_defaults(func=cmd_selfcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, CodebookFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
