"""Command-line front end: ingest CSV data, run tests, run studies, benchmark.

Exit codes: 0 on statistical completion (whatever the decision), 2 on input
or configuration errors, 3 on degenerate-variance failures. Reports are JSON;
a run manifest (resolved config, input digests, seed, version, timestamp) is
embedded unless ``--no-manifest`` is given, in which case the output bytes
are a pure function of argv, input files and seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import secrets
import statistics as stats_mod
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, DegenerateVarianceError, DhsicError, InvalidInputError
from .estimator import WeightScheme
from .kernel import (
    KernelSpec,
    Sample,
    build_gram_stack,
    read_component_csv,
    write_component_csv,
)
from .sim import (
    StudyConfig,
    StudyReport,
    generate_sample,
    load_study_config,
    run_study,
    with_overrides,
)
from .testing import (
    asymptotic_test_from_grams,
    permutation_test_from_grams,
)

THREADS_ENV_VAR = "DHSICTEST_THREADS"

_DEFAULT_ETA = "0.0033333333333333335"  # 1/300, the bundled study bandwidth


@dataclass(frozen=True)
class RunManifest:
    """Provenance block embedded in every report."""

    subcommand: str
    config: dict
    inputs: tuple
    seed: int | None
    version: str
    created_at: str

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "config": self.config,
            "inputs": [dict(entry) for entry in self.inputs],
            "seed": self.seed,
            "version": self.version,
            "created_at": self.created_at,
        }


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def make_manifest(subcommand: str, config: dict, input_paths, seed) -> RunManifest:
    inputs = tuple({"path": str(p), "sha256": _sha256(p)} for p in input_paths)
    return RunManifest(
        subcommand=subcommand,
        config=config,
        inputs=inputs,
        seed=seed,
        version=__version__,
        created_at=datetime.now(timezone.utc).isoformat(),
    )


def _parse_kernel(token: str) -> KernelSpec:
    if token == "linear":
        return KernelSpec.linear()
    if token.startswith("gaussian:"):
        try:
            eta_sq = float(token.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad kernel token {token!r}: eta_sq must be numeric") from None
        return KernelSpec.gaussian(eta_sq)
    raise ConfigurationError(
        f"bad kernel token {token!r}: expected 'gaussian:<eta_sq>' or 'linear'"
    )


def _with_quadrature(spec: KernelSpec, has_grid: bool) -> KernelSpec:
    # Functional components (grid header present) use trapezoid quadrature.
    if spec.kind == "gaussian" and has_grid:
        return KernelSpec.gaussian(spec.eta_sq, quadrature="trapezoid")
    return spec


def _comma_list(value: str) -> list[str]:
    return [item for item in value.split(",") if item]


def _resolve_seed(seed: int | None) -> int:
    return secrets.randbits(63) if seed is None else seed


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dhsictest",
        description="Kernel-based joint independence testing for vector and functional data.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_test = sub.add_parser("test", help="run a joint-independence test on CSV components")
    p_test.add_argument("--data", action="append", required=True, metavar="FILE",
                        help="component CSV; repeat once per component, order matters")
    p_test.add_argument("--kernel", action="append", metavar="SPEC",
                        help="'gaussian:<eta_sq>' or 'linear'; repeat per component or give once to broadcast"
                             " (default gaussian:%s)" % _DEFAULT_ETA)
    p_test.add_argument("--method", choices=["asymptotic", "permutation"], default="asymptotic")
    p_test.add_argument("--gamma", type=float, default=0.32)
    p_test.add_argument("--scheme", choices=["alternating", "sinusoidal"], default="alternating")
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--permutations", type=int, default=100)
    p_test.add_argument("--seed", type=int, default=None)
    p_test.add_argument("--no-manifest", action="store_true",
                        help="omit the manifest so output bytes are reproducible")

    p_sim = sub.add_parser("simulate", help="run a seeded Monte Carlo study")
    p_sim.add_argument("--config", metavar="FILE", default=None,
                       help="JSON or TOML study configuration (defaults apply without it)")
    p_sim.add_argument("--f", dest="f_name", default=None,
                       help="dependence function identifier override")
    p_sim.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="dependence level override")
    p_sim.add_argument("--n", type=int, default=None, help="sample size override")
    p_sim.add_argument("--replicates", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--methods", type=str, default=None, help="comma list from {t1,t2}")
    p_sim.add_argument("--gamma", type=float, default=None)
    p_sim.add_argument("--scheme", choices=["alternating", "sinusoidal"], default=None)
    p_sim.add_argument("--eta-sq", type=float, default=None)
    p_sim.add_argument("--alpha", type=float, default=None)
    p_sim.add_argument("--permutations", type=int, default=None)
    p_sim.add_argument("--threads", type=int, default=None,
                       help=f"replicate thread count (default ${THREADS_ENV_VAR} or 1)")
    p_sim.add_argument("--output-dir", default=".", metavar="DIR")
    p_sim.add_argument("--dump-data", default=None, metavar="DIR",
                       help="write each replicate's sample as full-precision CSVs")
    p_sim.add_argument("--no-manifest", action="store_true")

    p_bench = sub.add_parser("benchmark", help="time the statistic-evaluation step per method")
    p_bench.add_argument("--n", action="append", required=True, metavar="LIST",
                         help="comma list of sample sizes, e.g. 100,200")
    p_bench.add_argument("--method", "--methods", dest="methods", type=str, default="t1,t2")
    p_bench.add_argument("--repeats", type=int, default=5)
    p_bench.add_argument("--permutations", type=int, default=100)
    p_bench.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_test(args) -> int:
    paths = list(args.data)
    if len(paths) < 2:
        raise InvalidInputError(f"need at least 2 --data files, got {len(paths)}")
    components = [read_component_csv(p) for p in paths]
    n0 = components[0].n
    for path, comp in zip(paths[1:], components[1:]):
        if comp.n != n0:
            raise InvalidInputError(
                f"row count mismatch: {paths[0]} has {n0} observations, {path} has {comp.n}"
            )
    kernel_tokens = args.kernel or [f"gaussian:{_DEFAULT_ETA}"]
    if len(kernel_tokens) == 1:
        kernel_tokens = kernel_tokens * len(paths)
    if len(kernel_tokens) != len(paths):
        raise ConfigurationError(
            f"got {len(kernel_tokens)} --kernel specs for {len(paths)} components"
        )
    specs = [
        _with_quadrature(_parse_kernel(tok), comp.grid is not None)
        for tok, comp in zip(kernel_tokens, components)
    ]
    sample = Sample(tuple(components))
    grams = build_gram_stack(sample, specs)

    seed = None
    if args.method == "permutation":
        seed = _resolve_seed(args.seed)
        result = permutation_test_from_grams(grams, args.permutations, args.alpha, seed=seed)
    else:
        result = asymptotic_test_from_grams(
            grams, WeightScheme(args.scheme, args.gamma), args.alpha
        )

    report = result.to_dict()
    if not args.no_manifest:
        config = {
            "method": args.method,
            "data": [str(p) for p in paths],
            "kernels": kernel_tokens,
            "scheme": args.scheme,
            "gamma": args.gamma,
            "alpha": args.alpha,
            "permutations": args.permutations if args.method == "permutation" else None,
        }
        report["manifest"] = make_manifest("test", config, paths, seed).to_dict()
    print(json.dumps(report, indent=2))
    return 0


def _assemble_study_config(args) -> StudyConfig:
    cfg = load_study_config(args.config) if args.config else StudyConfig()
    if args.scheme is not None or args.gamma is not None:
        kind = args.scheme if args.scheme is not None else cfg.scheme.kind
        gamma = args.gamma if args.gamma is not None else cfg.scheme.gamma
        cfg = with_overrides(cfg, scheme=WeightScheme(kind, gamma))
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV_VAR, "1"))
    methods = tuple(_comma_list(args.methods)) if args.methods else None
    return with_overrides(
        cfg,
        f=args.f_name,
        lam=args.lam,
        n=args.n,
        replicates=args.replicates,
        seed=args.seed if args.seed is not None else cfg.seed,
        methods=methods,
        eta_sq=args.eta_sq,
        alpha=args.alpha,
        num_permutations=args.permutations,
        threads=threads,
    )


def _dump_study_data(cfg: StudyConfig, out_dir: Path) -> None:
    # Regenerates each replicate's sample from its (seed, r) stream; identical
    # to what the study consumed because the derivation is deterministic.
    root = np.random.SeedSequence(cfg.seed)
    for r, child in enumerate(root.spawn(cfg.replicates)):
        data_seed, _ = child.spawn(2)
        sample = generate_sample(cfg.model, seed=data_seed)
        rep_dir = out_dir / f"rep_{r:04d}"
        rep_dir.mkdir(parents=True, exist_ok=True)
        for k, comp in enumerate(sample.components, start=1):
            write_component_csv(rep_dir / f"component_{k}.csv", comp)


def _cmd_simulate(args) -> int:
    cfg = _assemble_study_config(args)
    if cfg.seed is None:
        cfg = with_overrides(cfg, seed=_resolve_seed(None))
    report = run_study(cfg)
    if args.dump_data:
        _dump_study_data(cfg, Path(args.dump_data))

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"study_{cfg.model.f}_lambda{cfg.model.lam:g}"
    json_path = out_dir / f"{tag}.json"
    csv_path = out_dir / f"{tag}.csv"

    payload = {"report": report.to_dict(include_timing=False)}
    if not args.no_manifest:
        payload["timing"] = {"wall_time_s": report.wall_time_s}
        inputs = [args.config] if args.config else []
        payload["manifest"] = make_manifest("simulate", cfg.to_dict(), inputs, cfg.seed).to_dict()
    json_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    csv_path.write_text(_study_csv(report), encoding="utf-8")

    rates = " ".join(f"{m}={report.rates[m]:.3f}" for m in cfg.methods)
    print(
        f"f={cfg.model.f} lambda={cfg.model.lam:g} {rates} "
        f"replicates={cfg.replicates} seed={cfg.seed}"
    )
    print(f"wrote {json_path} and {csv_path}", file=sys.stderr)
    return 0


def _study_csv(report: StudyReport) -> str:
    header = ["f", "lambda", "method", "rate", "rejections", "replicates", "alpha", "seed"]
    lines = [",".join(header)]
    for row in report.csv_rows():
        lines.append(",".join("" if row[key] is None else repr(row[key]) if isinstance(row[key], float) else str(row[key]) for key in header))
    return "\n".join(lines) + "\n"


def _cmd_benchmark(args) -> int:
    sizes = []
    for token in args.n:
        sizes.extend(int(item) for item in _comma_list(token))
    if not sizes:
        raise ConfigurationError("--n needs at least one sample size")
    methods = _comma_list(args.methods)
    if not methods or any(m not in ("t1", "t2") for m in methods):
        raise ConfigurationError(f"--methods must be a comma list from {{t1,t2}}, got {args.methods!r}")
    if args.repeats < 1:
        raise ConfigurationError(f"--repeats must be >= 1, got {args.repeats}")

    base = StudyConfig()
    scheme = base.scheme
    print(f"{'n':>6} {'method':>8} {'min_s':>12} {'median_s':>12} {'max_s':>12}")
    for n in sizes:
        cfg = with_overrides(base, n=n, seed=args.seed, num_permutations=args.permutations)
        sample = generate_sample(cfg.model, seed=np.random.SeedSequence(args.seed))
        grams = build_gram_stack(sample, cfg.kernel_specs())
        medians = {}
        for method in methods:
            times = []
            for _ in range(args.repeats):
                start = time.perf_counter()
                if method == "t1":
                    asymptotic_test_from_grams(grams, scheme, cfg.alpha)
                else:
                    permutation_test_from_grams(
                        grams, cfg.num_permutations, cfg.alpha, seed=args.seed
                    )
                times.append(time.perf_counter() - start)
            medians[method] = stats_mod.median(times)
            print(
                f"{n:>6} {method:>8} {min(times):>12.6f} {stats_mod.median(times):>12.6f} {max(times):>12.6f}"
            )
        if "t1" in medians and "t2" in medians and medians["t1"] > 0:
            print(f"{n:>6} {'t2/t1':>8} {medians['t2'] / medians['t1']:>12.1f}x median ratio")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "test":
            return _cmd_test(args)
        if args.subcommand == "simulate":
            return _cmd_simulate(args)
        return _cmd_benchmark(args)
    except DegenerateVarianceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DhsicError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
