"""
Operations behind the simulate.py subcommands.

Every command takes a validated RunConfig, writes its result through
ResultStorage when --out is given (stdout otherwise) and returns the result
records. Numerical failures inside sweeps are recorded in-row; anywhere else
they propagate to the entry script, which maps them to exit codes.
"""

import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config import DATA_CONFIG, MAX_WORKERS, DESIGN_DEFAULTS, RESULTS_DIR, TV_SWEEP_CONFIG

from .channels import (
    ProcessMap,
    Scenario,
    average_state_fidelity,
    channel_fidelity,
    choi,
    scenario_channel,
)
from .data_storage import ResultStorage, render_csv, render_json
from .imperfections import (
    DistinguishabilityModel,
    PpbsPhysical,
    fock_oracle,
    imperfect_transfer_map,
    ppbs_postselected,
)
from .models import (
    ConfigError,
    OmegaSweepRow,
    OptimizeReport,
    OracleRow,
    RunConfig,
    TransferReport,
    TvSweepRow,
    matrix_to_dict,
)
from .optimize import maximize_kappa, maximize_omega, sweep_tv
from .protocol import (
    PureQubit,
    TooWeakCouplingError,
    branch_operator,
    conditional_states,
    decompose_filter,
    feed_forward_plan,
    ppbs_design_interaction,
    simplified_success,
    synthesize_filter,
)
from .qmath import NumericalError
from .tomography import (
    METHOD_MLE,
    CountsTable,
    compare,
    exact_probabilities,
    reconstruct_linear,
    reconstruct_mle,
    sample_counts,
)

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-10
ORACLE_GRID_POINTS = 7


class OracleMismatchError(NumericalError):
    def __init__(self, max_deviation: float):
        self.max_deviation = max_deviation
        super().__init__(
            f"PPBS closed form deviates from the Fock-space oracle by {max_deviation:.3e} "
            f"(tolerance {ORACLE_TOLERANCE:.0e})"
        )


@dataclass
class TomographyReport:
    metrics: Dict[str, Any]
    files: List[Path]


def _emit(config: RunConfig, basename: str, rows: List[dict], payload: Any = None) -> Optional[Path]:
    """Write rows (CSV) or payload/rows (JSON) to --out, or to stdout."""
    payload = rows if payload is None else payload
    if config.out is None:
        sys.stdout.write(render_csv(rows) if config.format == "csv" else render_json(payload))
        return None
    storage = ResultStorage(config.out)
    if config.format == "csv":
        return storage.save_rows_csv(rows, f"{basename}.csv")
    return storage.save_json(payload, f"{basename}.json")


def build_channel(config: RunConfig, scenario: Scenario, omega: float) -> ProcessMap:
    """Ideal channel, or the physical-PPBS channel when T_H < 1 or v < 1."""
    g = PureQubit.from_angle(omega)
    if config.is_ideal:
        return scenario_channel(ppbs_design_interaction(config.tv), g, config.kappa, scenario)
    ppbs = PpbsPhysical.from_transmittances(config.th_squared, config.tv_squared)
    return imperfect_transfer_map(
        ppbs, DistinguishabilityModel(config.visibility), g, config.kappa, scenario
    )


def cmd_transfer(config: RunConfig) -> TransferReport:
    V = ppbs_design_interaction(config.tv)
    g = PureQubit.from_angle(config.omega)
    pi = PureQubit.from_angle(config.kappa)

    pair = conditional_states(V, g, pi)
    quantum_filter = synthesize_filter(pair)
    decomposition = decompose_filter(quantum_filter)
    plan = feed_forward_plan(V, g, config.kappa)

    notes = []
    if plan.single_branch:
        notes.append(f"degenerate branch(es): {', '.join(plan.degenerate_branches)}")
    branch_plus = None if plan.filter_plus is None else branch_operator(V, g, pi, plan.filter_plus)
    branch_minus = (
        None if plan.filter_minus is None
        else branch_operator(V, g, pi.orthogonal(), plan.filter_minus)
    )

    chi = choi(build_channel(config, Scenario.from_label(config.scenario), config.omega))
    fidelity = channel_fidelity(chi)

    report = TransferReport(
        tv_squared=config.tv_squared,
        th_squared=config.th_squared,
        omega_deg=config.omega_deg,
        kappa_deg=config.kappa_deg,
        scenario=config.scenario,
        phi0=pair.phi0,
        phi1=pair.phi1,
        filter_G=quantum_filter.G,
        filter_N=float(abs(quantum_filter.N)),
        filter_lambda=decomposition.lam,
        branch_plus=branch_plus,
        branch_minus=branch_minus,
        total_success=plan.total_success,
        single_branch=plan.single_branch,
        fixed_filter_feed_forward=plan.uses_fixed_filter,
        channel_fidelity=fidelity,
        average_fidelity=average_state_fidelity(chi),
        channel_success=chi.trace,
        notes=notes,
    )
    logger.info(
        f"Transfer at omega={config.omega_deg:g} deg, scenario {config.scenario}: "
        f"F={fidelity:.9f}, p={plan.total_success:.9f}"
    )
    _emit(config, DATA_CONFIG["transfer_basename"], report.to_csv_rows(), report.to_dict())
    return report


def _omega_row(task: Tuple[RunConfig, float, str]) -> OmegaSweepRow:
    config, omega_deg, label = task
    try:
        chi = choi(build_channel(config, Scenario.from_label(label), math.radians(omega_deg)))
        return OmegaSweepRow(
            omega_deg=omega_deg,
            scenario=label,
            fidelity=channel_fidelity(chi),
            average_fidelity=average_state_fidelity(chi),
            success_prob=chi.trace,
        )
    except NumericalError as e:
        logger.warning(f"Row omega={omega_deg:g} scenario {label} failed: {e}")
        return OmegaSweepRow(omega_deg, label, math.nan, math.nan, math.nan, note=str(e))


def cmd_sweep_omega(config: RunConfig) -> List[OmegaSweepRow]:
    tasks = [
        (config, float(omega_deg), label)
        for omega_deg in DESIGN_DEFAULTS["omega_grid_deg"]
        for label in ("a", "b", "c")
    ]
    with ThreadPoolExecutor(max_workers=MAX_WORKERS) as executor:
        rows = list(executor.map(_omega_row, tasks))

    failed = sum(1 for row in rows if row.note)
    logger.info(f"Omega sweep: {len(rows)} rows, {failed} failed")
    _emit(
        config,
        DATA_CONFIG["sweep_omega_basename"],
        [row.to_csv_row() for row in rows],
        [row.to_dict() for row in rows],
    )
    return rows


def tv_grid(config: RunConfig) -> List[float]:
    start, stop, step = TV_SWEEP_CONFIG["start"], TV_SWEEP_CONFIG["stop"], TV_SWEEP_CONFIG["step"]
    grid = {round(float(x), 10) for x in np.arange(start, stop + step / 2, step)}
    grid.add(round(config.tv_squared, 10))
    return sorted(grid)


def cmd_sweep_tv(config: RunConfig) -> List[TvSweepRow]:
    curve = sweep_tv(tv_grid(config), max_workers=MAX_WORKERS)
    rows = [
        TvSweepRow(
            tv_squared=sample.tv_squared,
            p_optimal=sample.p,
            omega_star_deg=math.degrees(sample.omega_star),
            p_tilde=sample.p_tilde,
            note=sample.note,
        )
        for sample in curve.samples
    ]
    logger.info(f"T_V sweep: {len(rows)} points, monotone={curve.is_monotone_decreasing()}")
    _emit(
        config,
        DATA_CONFIG["sweep_tv_basename"],
        [row.to_csv_row() for row in rows],
        [row.to_dict() for row in rows],
    )
    return rows


def cmd_optimize(config: RunConfig) -> OptimizeReport:
    by_omega = maximize_omega(config.tv)
    by_kappa = maximize_kappa(config.tv, by_omega.best_omega)
    try:
        p_tilde = simplified_success(config.tv)
    except TooWeakCouplingError:
        p_tilde = None

    report = OptimizeReport(
        tv_squared=config.tv_squared,
        omega_star_deg=by_omega.best_omega_deg,
        kappa_star_deg=by_kappa.best_kappa_deg,
        p_optimal=by_omega.best_p,
        p_tilde=p_tilde,
        refined=by_omega.refined,
    )
    logger.info(
        f"Optimum at T_V={config.tv_squared:g}: omega*={report.omega_star_deg:.4f} deg, "
        f"kappa*={report.kappa_star_deg:.4f} deg, p*={report.p_optimal:.9f}"
    )
    _emit(config, DATA_CONFIG["optimize_basename"], [report.to_csv_row()], report.to_dict())
    return report


def oracle_grid() -> List[Tuple[float, float]]:
    """7 x 7 amplitude grid plus the experimental transmittances."""
    amplitudes = np.linspace(0.0, 1.0, ORACLE_GRID_POINTS)
    points = [(float(t_h), float(t_v)) for t_h in amplitudes for t_v in amplitudes]
    points.append((math.sqrt(DESIGN_DEFAULTS["th_squared_experiment"]), math.sqrt(DESIGN_DEFAULTS["tv_squared"])))
    return points


def cmd_oracle_check(config: RunConfig) -> List[OracleRow]:
    rows = []
    for t_h, t_v in oracle_grid():
        ppbs = PpbsPhysical(t_h, t_v)
        deviation = float(np.max(np.abs(
            ppbs_postselected(ppbs).raw - fock_oracle(ppbs, config.flip_reflection_sign)
        )))
        rows.append(OracleRow(th_squared=t_h ** 2, tv_squared=t_v ** 2, max_deviation=deviation))

    worst = max(row.max_deviation for row in rows)
    logger.info(f"Oracle check over {len(rows)} points: max deviation {worst:.3e}")
    _emit(
        config,
        DATA_CONFIG["oracle_basename"],
        [row.to_csv_row() for row in rows],
        {"max_deviation": worst, "tolerance": ORACLE_TOLERANCE, "points": [row.to_dict() for row in rows]},
    )
    if worst > ORACLE_TOLERANCE:
        raise OracleMismatchError(worst)
    return rows


def load_counts(path: Path) -> CountsTable:
    """Counts table from a CSV written by a previous tomography run or by the lab."""
    path = Path(path)
    rows = ResultStorage(path.parent).load_csv(path.name)
    try:
        return CountsTable.from_csv_rows(rows)
    except (ValueError, KeyError) as e:
        raise ConfigError(f"--counts {path}: not a counts table ({e})") from e


def cmd_tomography(config: RunConfig) -> TomographyReport:
    channel = build_channel(config, Scenario.from_label(config.scenario), config.omega)
    chi_true = choi(channel)
    table = exact_probabilities(channel)

    storage = ResultStorage(config.out or RESULTS_DIR)
    files = []
    if config.counts_file is not None:
        data = load_counts(config.counts_file)
        logger.info(f"Reconstructing from {config.counts_file} ({data.shots_per_setting} shots per setting)")
    elif config.infinite_statistics:
        data = table
        logger.info("Infinite statistics: reconstructing from exact probabilities, no counts file")
    else:
        data = sample_counts(table, config.shots, config.seed)
        files.append(storage.save_rows_csv(data.to_csv_rows(), DATA_CONFIG["counts_filename"]))

    if config.estimator == METHOD_MLE:
        result = reconstruct_mle(data)
    else:
        result = reconstruct_linear(data)
    comparison = compare(result.chi_hat, chi_true)

    files.append(storage.save_json(
        {"method": result.method, "trace": result.chi_hat.trace, "chi_hat": matrix_to_dict(result.chi_hat.chi)},
        DATA_CONFIG["chi_filename"],
    ))
    metrics = {
        "scenario": config.scenario,
        "omega_deg": config.omega_deg,
        "estimator": result.method,
        "shots": data.shots_per_setting if isinstance(data, CountsTable) else None,
        "seed": data.seed if isinstance(data, CountsTable) else None,
        "reconstruction_fidelity": comparison.fidelity,
        "trace_distance": comparison.trace_distance,
        "channel_fidelity_estimated": channel_fidelity(result.chi_hat),
        "channel_fidelity_true": channel_fidelity(chi_true),
        "success_estimated": result.chi_hat.trace,
        "success_true": chi_true.trace,
        "residual": result.residual,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    files.append(storage.save_json(metrics, DATA_CONFIG["metrics_filename"]))
    logger.info(
        f"Tomography ({result.method}): fidelity to analytic chi {comparison.fidelity:.9f}, "
        f"trace distance {comparison.trace_distance:.3e}"
    )
    return TomographyReport(metrics=metrics, files=files)
