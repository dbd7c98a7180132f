"""Solve, demo and benchmark pipelines behind the command-line interface.

Every pipeline runs the quantum emulation next to the classical recursion
and raises :class:`OracleMismatchError` when the two disagree.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Dict, List, Optional

import numpy as np
import scipy.optimize
import scipy.stats

from . import iterate, lcu, mmio, numkit, pde, worker
from .blockenc import EncodingCache
from .config import ORACLE_TOLERANCE, ExperimentConfig
from .errors import DegenerateInstanceError, DominanceError, OracleMismatchError, SingularMatrixError
from .models import ExperimentResult, LinearSystem, SplitSystem, Table

logger = logging.getLogger(__name__)

SHOCK_SNAPSHOTS = (0, 1, 4, 10)
SHOCK_FIT_RANGE = (10, 30)
SHOCK_DT = 1.43e-3


def check_oracle(label: str, quantum: np.ndarray, classical: np.ndarray, tol: float = ORACLE_TOLERANCE) -> float:
    """Max deviation between the normalized quantum state and the normalized classical iterate."""
    norm = np.linalg.norm(classical)
    if norm == 0:
        raise OracleMismatchError(f"{label}: classical iterate is zero")
    deviation = float(np.abs(np.asarray(quantum) - np.asarray(classical) / norm).max())
    if deviation > tol:
        raise OracleMismatchError(f"{label}: quantum and classical iterates differ by {deviation:.3e} > {tol:.0e}")
    return deviation


def builtin_system(name: str, cfg: ExperimentConfig) -> LinearSystem:
    if name == "demo2":
        return LinearSystem(numkit.SparseOperator.from_matrix([[2.0, 1.0], [1.0, 2.0]]), np.array([3.0, 3.0]))
    if name == "tridiag":
        return LinearSystem(numkit.tridiagonal(cfg.N, -1.0, 2.0, -1.0), np.ones(cfg.N))
    if name == "burgers":
        problem = _surface_problem(cfg)
        return pde.burgers_step_system(problem, problem.g, 1)
    raise ValueError(f"Unknown built-in system {name!r}; expected demo2, tridiag or burgers")


def initial_guess(kind: str, b: np.ndarray, seed: int) -> np.ndarray:
    if kind == "b":
        return b.copy()
    if kind == "zero":
        return np.zeros_like(b)
    return np.random.default_rng(seed).standard_normal(b.shape)


def _trajectory(split: SplitSystem, K: int, cfg: ExperimentConfig, truth: Optional[np.ndarray]):
    if cfg.scheme == "gauss-seidel":
        return iterate.woodbury_gs_iterate(split, K, cfg.L, truth=truth, track_errors=truth is not None)
    return iterate.jacobi_iterate(split, K, truth=truth, track_errors=truth is not None)


def run_solve(system: LinearSystem, cfg: ExperimentConfig) -> ExperimentResult:
    report = pde.check_diagonal_dominance(system.A)
    if not report.dominant and not cfg.force:
        raise DominanceError(
            f"System is not diagonally dominant (worst row ratio {report.worst_row_ratio:.6g}, "
            f"zero-diagonal rows {report.zero_diagonal_rows[:5]}); pass --force to run anyway"
        )
    split = iterate.split_jacobi(system.A, system.b, initial_guess(cfg.initial_guess, system.b, cfg.seed))
    truth = numkit.solve_direct(split.A, split.b)
    classical = _trajectory(split, cfg.k, cfg, truth)
    cache = EncodingCache(cfg.backend)

    trace = Table(["k", "fidelity_error", "success_probability", "width", "gate_count"])
    final = None
    for kk in range(cfg.k + 1):
        try:
            result = lcu.solve(split, kk, cfg.scheme, cfg.backend, cfg.L, truth, cache)
        except DegenerateInstanceError:
            logger.warning("Iterate k=%d is the zero vector; no state to prepare", kk)
            continue
        check_oracle(f"solve k={kk}", result.solution, classical.iterates[kk])
        trace.rows.append(
            [kk, result.error_trace[0], result.success_probability, result.resources["width"], result.resources["gate_count"]]
        )
        final = result
    if final is None or final.k != cfg.k:
        raise DegenerateInstanceError(f"Iterate k={cfg.k} is the zero vector")

    solution = Table(["index", "amplitude", "iterate"])
    for i, (amp, value) in enumerate(zip(final.solution, final.iterate)):
        solution.rows.append([i, amp, value])
    estimate = lcu.estimate_resources(
        numkit.next_power_of_two(split.dimension), cfg.k, "q-form" if cfg.scheme == "q-form" else "multiplication"
    )
    return ExperimentResult(
        "solve",
        {"solution": solution, "errors": trace},
        {
            "scheme": cfg.scheme,
            "backend": cfg.backend,
            "k": cfg.k,
            "dimension": split.dimension,
            "fidelity_error": final.error_trace[0],
            "success_probability": final.success_probability,
            "raw_norm": final.raw_norm,
            "width": final.resources["width"],
            "gate_count": final.resources["gate_count"],
            "term_count": final.resources["term_count"],
            "estimated_width": estimate.width,
            "spectral_radius": iterate.spectral_radius(split),
            "dominant": report.dominant,
        },
        {"solution": final.solution},
    )


def load_system(cfg: ExperimentConfig) -> LinearSystem:
    if cfg.system is not None:
        return mmio.load_system(cfg.system, cfg.rhs)
    return builtin_system(cfg.builtin, cfg)


def _log_slope(errors: List[float], start: int, stop: int) -> float:
    ks = np.arange(start, stop + 1)
    values = np.log(np.maximum(np.asarray(errors[start : stop + 1]), 1e-300))
    return float(scipy.stats.linregress(ks, values).slope)


def shock_profile(mu: float, Lx: float) -> Callable[[np.ndarray], np.ndarray]:
    """Stationary viscous shock ``-tanh((x - Lx/2) / (2μ))``."""
    return lambda x: -np.tanh((np.asarray(x) - Lx / 2) / (2 * mu))


def demo_burgers_shock(cfg: ExperimentConfig) -> ExperimentResult:
    mu = cfg.mu
    dt = cfg.dt if cfg.dt > 0 else SHOCK_DT
    profile = shock_profile(mu, cfg.Lx)
    left, right = float(profile(0.0)), float(profile(cfg.Lx))
    problem = pde.BurgersProblem.from_function(mu, cfg.Lx, dt, cfg.N, 1, profile, lambda t: left, lambda t: right)
    system = pde.burgers_step_system(problem, problem.g, 1)
    split = iterate.split_jacobi(system.A, system.b)
    truth = numkit.solve_direct(split.A, split.b)
    classical = iterate.jacobi_iterate(split, cfg.K, truth)
    quantum = lcu.prior_iterates(split, cfg.K, "jacobi", "emulation", reference=truth)
    for kk, result in enumerate(quantum):
        check_oracle(f"shock k={kk}", result.solution, classical.iterates[kk])

    rho = iterate.spectral_radius(split)
    fidelity = [r.error_trace[0] for r in quantum]
    euclid = classical.euclidean_errors
    start, stop = SHOCK_FIT_RANGE[0], min(SHOCK_FIT_RANGE[1], cfg.K)
    fid_slope = _log_slope(fidelity, start, stop) if stop > start else float("nan")
    euc_slope = _log_slope(euclid, start, stop) if stop > start else float("nan")
    monotone = all(b <= a * (1 + 1e-9) for a, b in zip(fidelity[2:], fidelity[3:]))
    if not monotone:
        logger.warning("Shock error trace is not monotone for k >= 2")

    errors = Table(["k", "fidelity_error", "euclidean_error", "success_probability"])
    for kk, result in enumerate(quantum):
        errors.rows.append([kk, fidelity[kk], euclid[kk], result.success_probability])
    snapshots = Table(["x"] + [f"k{kk}" for kk in SHOCK_SNAPSHOTS if kk <= cfg.K] + ["direct"])
    interior = problem.nodes[1:-1]
    for i, x in enumerate(interior):
        row = [x] + [quantum[kk].iterate[i] for kk in SHOCK_SNAPSHOTS if kk <= cfg.K] + [truth[i]]
        snapshots.rows.append(row)
    return ExperimentResult(
        "burgers_shock",
        {"errors": errors, "snapshots": snapshots},
        {
            "mu": mu,
            "dt": dt,
            "spectral_radius": rho,
            "fidelity_slope": fid_slope,
            "euclidean_slope": euc_slope,
            "expected_fidelity_slope": 2 * math.log(rho),
            "expected_euclidean_slope": math.log(rho),
            "monotone_after_k2": monotone,
        },
        {"fidelity": np.asarray(fidelity), "euclidean": np.asarray(euclid)},
    )


def _surface_problem(cfg: ExperimentConfig) -> pde.BurgersProblem:
    return pde.BurgersProblem.from_function(
        cfg.mu,
        cfg.Lx,
        cfg.T,
        cfg.N,
        cfg.M,
        lambda x: np.sin(2 * np.pi * x),
        lambda t: -t,
        lambda t: t,
    )


def demo_burgers_surface(cfg: ExperimentConfig) -> ExperimentResult:
    problem = _surface_problem(cfg)
    surface = np.zeros((problem.M + 1, problem.N + 1))
    surface[0] = problem.g
    steps = Table(["m", "t", "deviation_from_direct", "classical_jacobi_error", "oracle_deviation", "success_probability"])
    worst = 0.0
    for m in range(1, problem.M + 1):
        system = pde.burgers_step_system(problem, surface[m - 1], m)
        split = iterate.split_jacobi(system.A, system.b)
        truth = numkit.solve_direct(split.A, split.b)
        classical = iterate.jacobi_iterate(split, cfg.k, track_errors=False).final
        result = lcu.solve(split, cfg.k, "jacobi", "emulation")
        oracle = check_oracle(f"surface m={m}", result.solution, classical)
        deviation = float(np.abs(result.iterate - truth).max())
        bound = float(np.abs(classical - truth).max())
        if deviation > bound + ORACLE_TOLERANCE * max(1.0, float(np.abs(truth).max())):
            raise OracleMismatchError(f"surface m={m}: deviation {deviation:.3e} exceeds Jacobi error {bound:.3e}")
        worst = max(worst, deviation)
        surface[m] = pde.burgers_full_field(problem, result.iterate, m)
        steps.rows.append([m, m * problem.dt, deviation, bound, oracle, result.success_probability])
        logger.debug("surface step %d/%d deviation %.3e", m, problem.M, deviation)

    table = Table(["t"] + [f"x{i}" for i in range(problem.N + 1)])
    for m, row in enumerate(surface):
        table.rows.append([m * problem.dt] + list(row))
    return ExperimentResult(
        "burgers_surface",
        {"surface": table, "steps": steps},
        {"k": cfg.k, "N": problem.N, "M": problem.M, "max_deviation": worst},
        {"surface": surface, "x": problem.nodes, "t": problem.times},
    )


def symmetry_defect(field: np.ndarray) -> float:
    """Max deviation under the eight symmetries of the square grid, relative to ``max|field|``."""
    field = np.asarray(field)
    scale = float(np.abs(field).max())
    if scale == 0:
        return 0.0
    if field.shape[0] != field.shape[1]:
        variants = [field[:, ::-1], field[::-1, :], field[::-1, ::-1]]
    else:
        variants = []
        for turns in range(4):
            rotated = np.rot90(field, turns)
            variants.extend([rotated, rotated.T])
    return float(max(np.abs(v - field).max() for v in variants) / scale)


def demo_euler(cfg: ExperimentConfig) -> ExperimentResult:
    problem = pde.Euler2DProblem(
        rho_bar=cfg.rho_bar,
        Nx=cfg.Nx,
        Ny=cfg.Ny,
        x_range=(cfg.x_min, cfg.x_max),
        y_range=(cfg.y_min, cfg.y_max),
        M=cfg.M,
        T=cfg.T,
        init_pressure=pde.default_pressure(cfg.omega),
    )
    operator = pde.euler_operator(problem)
    state = problem.initial_state()
    base = iterate.split_jacobi(operator, state)
    cache = EncodingCache("emulation")
    energy = [problem.energy(state)]
    steps = Table(["m", "t", "energy", "oracle_deviation", "success_probability"])
    steps.rows.append([0, 0.0, energy[0], 0.0, 1.0])
    for m in range(1, problem.M + 1):
        system = pde.euler_step_system(problem, state, m, operator)
        if not np.any(system.b):
            steps.rows.append([m, m * problem.dt, 0.0, 0.0, 1.0])
            energy.append(0.0)
            continue
        split = base.with_rhs(system.b)
        classical = iterate.jacobi_iterate(split, cfg.k, track_errors=False).final
        result = lcu.solve(split, cfg.k, "jacobi", "emulation", cache=cache)
        oracle = check_oracle(f"euler m={m}", result.solution, classical)
        state = result.iterate
        energy.append(problem.energy(state))
        steps.rows.append([m, m * problem.dt, energy[-1], oracle, result.success_probability])
        logger.info("euler step %d/%d energy %.6e", m, problem.M, energy[-1])

    increases = [m for m in range(1, len(energy)) if energy[m] > energy[m - 1] * (1 + 1e-9)]
    if increases:
        logger.warning("Energy increased at %d step(s), first at m=%d", len(increases), increases[0])
    field = problem.pressure(state)
    defect = symmetry_defect(field)
    pressure = Table(["x", "y", "p"])
    for iy, y in enumerate(problem.y):
        for ix, x in enumerate(problem.x):
            pressure.rows.append([x, y, field[iy, ix]])
    return ExperimentResult(
        "euler",
        {"pressure": pressure, "steps": steps},
        {
            "k": cfg.k,
            "Nx": problem.Nx,
            "Ny": problem.Ny,
            "M": problem.M,
            "symmetry_defect": defect,
            "energy_non_increasing": not increases,
            "cached_encodings": len(cache),
        },
        {"pressure": field, "x": problem.x, "y": problem.y},
    )


def kappa_diagonal(kappa: float, n: int) -> float:
    """Diagonal ``d`` giving ``tridiag(-1, d, -1)`` of size ``n`` condition number ``kappa``."""
    if kappa <= 1:
        raise ValueError(f"kappa must exceed 1 for a coupled family member, got {kappa}")
    c = math.cos(math.pi / (n + 1))
    return 2 * c * (kappa + 1) / (kappa - 1)


def kappa_member(kappa: float, n: int) -> numkit.SparseOperator:
    """Family member of condition number ``kappa``; ``kappa = 1`` is the uncoupled ``2I``."""
    if kappa < 1:
        raise ValueError(f"Condition number must be at least 1, got {kappa}")
    if kappa == 1:
        return numkit.tridiagonal(n, 0.0, 2.0, 0.0)
    return numkit.tridiagonal(n, -1.0, kappa_diagonal(kappa, n), -1.0)


def _kappa_point(n: int, threshold: float) -> Callable[[float], Dict[str, float]]:
    def evaluate(target: float) -> Dict[str, float]:
        A = kappa_member(target, n)
        # Zero start: the count is the number of Jacobi steps taken.
        split = iterate.split_jacobi(A, np.ones(n), np.zeros(n))
        rho = iterate.spectral_radius(split)
        if rho >= 1:
            raise ValueError(f"Divergent instance (spectral radius {rho:.4f}) for kappa target {target}")
        kappa = numkit.condition_number(A)
        count = iterate.iterations_to_threshold(split, threshold)
        if count is None:
            raise ValueError(f"Threshold not reached for kappa {kappa:.3f}")
        return {"kappa": kappa, "iterations": count, "spectral_radius": rho}

    return evaluate


def bench_kappa(cfg: ExperimentConfig) -> ExperimentResult:
    targets = list(np.linspace(cfg.kappa_min, cfg.kappa_max, cfg.kappa_points))
    points, summary = worker.run_sweep(
        targets, _kappa_point(cfg.N, cfg.threshold), cfg.workers, sort_key=lambda p: p["kappa"]
    )
    if summary["failed"]:
        logger.warning("%d kappa point(s) excluded", summary["failed"])
    table = Table(["kappa", "iterations", "spectral_radius"])
    for point in points:
        table.rows.append([point["kappa"], point["iterations"], point["spectral_radius"]])
    fit = {"slope": float("nan"), "intercept": float("nan"), "pearson_r": float("nan")}
    if len(points) >= 2:
        reg = scipy.stats.linregress([p["kappa"] for p in points], [p["iterations"] for p in points])
        fit = {"slope": float(reg.slope), "intercept": float(reg.intercept), "pearson_r": float(reg.rvalue)}
    return ExperimentResult(
        "kappa",
        {"kappa": table},
        {"N": cfg.N, "threshold": cfg.threshold, **fit, **{f"sweep_{k}": v for k, v in summary.items()}},
    )


def woodbury_diagonal(kappa: float, n: int) -> float:
    """Bisection on ``d`` so that ``tridiag(-1, d, -1)`` has condition number ``kappa``."""

    def gap(d: float) -> float:
        return numkit.condition_number(numkit.tridiagonal(n, -1.0, d, -1.0)) - kappa

    return float(scipy.optimize.brentq(gap, 2.0 + 1e-6, 20.0, xtol=1e-12))


def bench_woodbury(cfg: ExperimentConfig) -> ExperimentResult:
    n = cfg.N
    d = woodbury_diagonal(cfg.kappa_target, n)
    A = numkit.tridiagonal(n, -1.0, d, -1.0)
    split = iterate.split_jacobi(A, np.ones(n), np.zeros(n))
    truth = numkit.solve_direct(split.A, split.b)
    exact = iterate.gauss_seidel_iterate(split, cfg.K, truth)
    reference = iterate.woodbury_gs_iterate(split, cfg.K, n - 1, truth)
    nilpotent_gap = max(float(np.abs(a - b).max()) for a, b in zip(reference.iterates, exact.iterates))
    if nilpotent_gap > 1e-12 * max(1.0, float(np.abs(truth).max())):
        raise OracleMismatchError(f"L=N-1 Woodbury iterates differ from Gauss-Seidel by {nilpotent_gap:.3e}")

    L_values = sorted(set(cfg.l_values()))
    curves, summary = worker.run_sweep(
        L_values, lambda L: (L, iterate.woodbury_gs_iterate(split, cfg.K, L, truth)), cfg.workers
    )
    probe_k = min(5, cfg.K)
    for L, trajectory in curves:
        result = lcu.solve(split, probe_k, "gauss-seidel", "emulation", L)
        check_oracle(f"woodbury L={L} k={probe_k}", result.solution, trajectory.iterates[probe_k])

    ordered = True
    for (_, low), (_, high) in zip(curves, curves[1:]):
        for kk in range(min(5, cfg.K), cfg.K + 1):
            if high.euclidean_errors[kk] > low.euclidean_errors[kk] * (1 + 1e-12):
                ordered = False
    if not ordered:
        logger.warning("Woodbury error curves are not ordered by L")

    header = ["k"]
    for L, _ in curves:
        header += [f"L{L}_euclidean", f"L{L}_fidelity"]
    header += ["gauss_seidel_euclidean"]
    table = Table(header)
    for kk in range(1, cfg.K + 1):
        row: list = [kk]
        for _, trajectory in curves:
            row += [trajectory.euclidean_errors[kk], trajectory.errors[kk]]
        row.append(exact.euclidean_errors[kk])
        table.rows.append(row)
    return ExperimentResult(
        "woodbury",
        {"woodbury": table},
        {
            "N": n,
            "diagonal": d,
            "kappa": numkit.condition_number(A),
            "ordered_by_L": ordered,
            "nilpotent_gap": nilpotent_gap,
            **{f"sweep_{k}": v for k, v in summary.items()},
        },
        {f"L{L}": np.asarray(t.euclidean_errors) for L, t in curves},
    )


def resources(cfg: ExperimentConfig) -> ExperimentResult:
    """Width formulas for both encodings, the configured mode first, plus gate counts of a small instance."""
    probe_n = min(numkit.next_power_of_two(cfg.N), 4)
    probe_k = min(cfg.k, 3 if probe_n <= 2 else 2)
    probe = numkit.tridiagonal(probe_n, -1.0, 2.0, -1.0)
    per_encoding = lcu.measured_encoding_gates(probe)
    table = Table(["N", "k", "mode", "width", "depth_class"])
    modes = [cfg.mode] + [m for m in ("multiplication", "q-form") if m != cfg.mode]
    estimates = [lcu.estimate_resources(numkit.next_power_of_two(cfg.N), cfg.k, m, per_encoding) for m in modes]
    for estimate in estimates:
        table.rows.append([estimate.N, estimate.k, estimate.mode, estimate.width, estimate.depth_class])
    selected = estimates[0]
    split = iterate.split_jacobi(probe, np.ones(probe_n))
    program = lcu.assemble_lcu_program(lcu.build_jacobi_expansion(split, probe_k, "gate"))
    formula = lcu.estimate_resources(probe_n, probe_k).width
    return ExperimentResult(
        "resources",
        {"resources": table},
        {
            "mode": selected.mode,
            "width": selected.width,
            "depth_class": selected.depth_class,
            "probe_N": probe_n,
            "probe_k": probe_k,
            "probe_width": program.width,
            "probe_formula_width": formula,
            "probe_gate_count": program.circuit.circuit.gate_count(expand=True),
            "per_encoding_gates": per_encoding,
        },
    )


def inspect_system(system: LinearSystem) -> ExperimentResult:
    """Dominance, spectral radius, norms and widths of a system before solving it."""
    report = pde.check_diagonal_dominance(system.A)
    summary: Dict[str, object] = {
        "dimension": system.dimension,
        "nnz": numkit.to_csr(system.A).nnz,
        "dominant": report.dominant,
        "weakly_dominant": report.weak,
        "worst_row_ratio": report.worst_row_ratio,
        "zero_diagonal_rows": len(report.zero_diagonal_rows),
        "spectral_norm": numkit.spectral_norm(system.A),
    }
    if not report.zero_diagonal_rows:
        split = iterate.split_jacobi(system.A, system.b)
        summary["spectral_radius"] = iterate.spectral_radius(split)
        summary["norm_R"] = numkit.spectral_norm(split.R)
        summary["norm_D_inv"] = float(np.abs(split.D_inv).max())
    if system.dimension <= numkit.DENSE_LIMIT:
        try:
            summary["condition_number"] = numkit.condition_number(system.A)
        except SingularMatrixError:
            summary["condition_number"] = float("inf")
    padded = numkit.next_power_of_two(system.dimension)
    summary["width_k10_multiplication"] = lcu.estimate_resources(padded, 10).width
    summary["width_k10_q_form"] = lcu.estimate_resources(padded, 10, "q-form").width
    return ExperimentResult("inspect", {}, summary)
