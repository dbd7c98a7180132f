"""Command-line entrypoints for the quantum iterative solvers."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Callable, Dict, Optional

from . import blockenc, config, experiments, reporting
from .errors import QiterativeError

logger = logging.getLogger(__name__)

# CLI flag -> ExperimentConfig field
OVERRIDES = {
    "backend": "backend",
    "scheme": "scheme",
    "k": "k",
    "K": "K",
    "L": "L",
    "seed": "seed",
    "out": "out",
    "workers": "workers",
    "system": "system",
    "rhs": "rhs",
    "builtin": "builtin",
    "N": "N",
    "mode": "mode",
    "initial_guess": "initial_guess",
}


def _configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s [%(levelname)s] %(message)s")


def resolve_config(args, experiment: str) -> config.ExperimentConfig:
    """Defaults, then the checked-in config, then ``--config``, then flags."""
    cfg = config.ExperimentConfig(experiment=experiment)
    default_path = config.DEFAULT_CONFIG_DIR / f"{experiment}.cfg"
    if default_path.exists():
        cfg = config.load_config(default_path, cfg)
    if getattr(args, "config", None) is not None:
        cfg = config.load_config(Path(args.config), cfg)
    for flag, name in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "force", False):
        cfg.force = True
    if getattr(args, "plots", False):
        cfg.plots = True
    cfg.experiment = experiment
    return cfg.validate()


def _emit(result, cfg: config.ExperimentConfig) -> None:
    paths = reporting.write_result(result, cfg.out, plots=cfg.plots)
    print(reporting.format_report(result))
    print(f"Wrote {len(paths)} file(s) under {Path(cfg.out) / result.name}")


def cmd_solve(args) -> None:
    cfg = resolve_config(args, "solve")
    system = experiments.load_system(cfg)
    _emit(experiments.run_solve(system, cfg), cfg)


DEMOS: Dict[str, Callable] = {
    "burgers-shock": experiments.demo_burgers_shock,
    "burgers-surface": experiments.demo_burgers_surface,
    "euler": experiments.demo_euler,
}

BENCHES: Dict[str, Callable] = {
    "kappa": experiments.bench_kappa,
    "woodbury": experiments.bench_woodbury,
}


def cmd_demo(args) -> None:
    cfg = resolve_config(args, args.demo)
    _emit(DEMOS[args.demo](cfg), cfg)


def cmd_bench(args) -> None:
    cfg = resolve_config(args, args.bench)
    _emit(BENCHES[args.bench](cfg), cfg)


def cmd_resources(args) -> None:
    cfg = resolve_config(args, "resources")
    result = experiments.resources(cfg)
    print(reporting.render_table([(str(r[2]), f"width {r[3]}, depth {r[4]}") for r in result.tables["resources"].rows], "Mode"))
    _emit(result, cfg)


def cmd_inspect(args) -> None:
    cfg = resolve_config(args, "inspect")
    system = experiments.load_system(cfg)
    result = experiments.inspect_system(system)
    print(reporting.format_report(result))
    if args.dump_circuit is not None:
        encoding = blockenc.block_encode_matrix(system.A, "gate", "A")
        args.dump_circuit.parent.mkdir(parents=True, exist_ok=True)
        args.dump_circuit.write_text(encoding.circuit.dumps(), encoding="utf-8")
        print(f"Wrote {len(encoding.circuit)}-gate encoding circuit to {args.dump_circuit}")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Flat key = value config file")
    common.add_argument("--backend", choices=config.BACKENDS, help="gate or emulation")
    common.add_argument("--scheme", choices=config.SCHEMES, help="Iteration scheme")
    common.add_argument("--k", type=int, help="Iteration count of the quantum iterate")
    common.add_argument("--K", type=int, help="Length of classical error traces")
    common.add_argument("--L", type=int, help="Woodbury truncation order")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--workers", type=int, help="Sweep worker threads")
    common.add_argument("--out", type=Path, help=f"Output directory (default: {config.DEFAULT_OUT_DIR})")
    common.add_argument("--force", action="store_true", help="Run non-dominant systems anyway")
    common.add_argument("--plots", action="store_true", help="Also render SVG/PNG plots")
    return common


def _system_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--system", type=Path, help="Matrix Market file with A")
    parser.add_argument("--rhs", type=Path, help="Matrix Market file with b (default: ones)")
    parser.add_argument("--builtin", help="Built-in system: demo2, tridiag or burgers")
    parser.add_argument("--N", type=int, help="Size of built-in systems")
    parser.add_argument("--initial-guess", dest="initial_guess", choices=config.INITIAL_GUESSES)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Quantum Jacobi / Gauss-Seidel solvers for finite-difference PDEs")
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Enable debug logging",
    )

    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    solve_parser = subparsers.add_parser("solve", parents=[common], help="Compute the k-th iterate of a system")
    _system_arguments(solve_parser)
    solve_parser.set_defaults(func=cmd_solve)

    demo_parser = subparsers.add_parser("demo", parents=[common], help="PDE demonstrations")
    demo_parser.add_argument("demo", choices=sorted(DEMOS))
    demo_parser.set_defaults(func=cmd_demo)

    bench_parser = subparsers.add_parser("bench", parents=[common], help="Convergence benchmarks")
    bench_parser.add_argument("bench", choices=sorted(BENCHES))
    bench_parser.add_argument("--N", type=int, help="System size")
    bench_parser.set_defaults(func=cmd_bench)

    resources_parser = subparsers.add_parser("resources", parents=[common], help="Qubit width and depth report")
    resources_parser.add_argument("--N", type=int, help="System size (power of two)")
    resources_parser.add_argument("--mode", choices=("multiplication", "q-form"))
    resources_parser.set_defaults(func=cmd_resources)

    inspect_parser = subparsers.add_parser("inspect", parents=[common], help="Dominance and spectra of a system")
    _system_arguments(inspect_parser)
    inspect_parser.add_argument("--dump-circuit", type=Path, help="Write the gate-level block encoding of A to this file")
    inspect_parser.set_defaults(func=cmd_inspect)

    return parser


def main(argv: Optional[list[str]] = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(verbose=args.verbose)
    try:
        args.func(args)
    except QiterativeError as exc:
        logger.debug("Command failed", exc_info=True)
        raise SystemExit(f"Error: {exc}") from exc


if __name__ == "__main__":
    main()
