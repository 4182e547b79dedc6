"""
Success-probability optimization over the preparation angle omega and the
measurement angle kappa for the ideal PPBS interaction.

Each search is a coarse grid over [0, pi/2] followed by golden-section
refinement inside the best grid cell. Grid ties go to the smaller angle.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from config import OPTIMIZER_CONFIG

from .protocol import (
    PureQubit,
    TooWeakCouplingError,
    feed_forward_plan,
    ppbs_design_interaction,
    simplified_success,
)
from .qmath import InvalidParameterError, NumericalError

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
HALF_PI = math.pi / 2.0


class AllBranchesDegenerateError(NumericalError):
    def __init__(self, what: str):
        self.what = what
        super().__init__(f"No admissible feed-forward plan anywhere on the {what} grid")


@dataclass(frozen=True)
class OptimizationResult:
    best_omega: float
    best_kappa: float
    best_p: float
    grid_resolution: float
    refined: bool

    @property
    def best_omega_deg(self) -> float:
        return math.degrees(self.best_omega)

    @property
    def best_kappa_deg(self) -> float:
        return math.degrees(self.best_kappa)


@dataclass(frozen=True)
class SweepSample:
    tv_squared: float
    p: float
    omega_star: float
    p_tilde: Optional[float] = None
    note: str = ""


@dataclass(frozen=True)
class SweepCurve:
    samples: Tuple[SweepSample, ...] = field(default_factory=tuple)

    def is_monotone_decreasing(self) -> bool:
        values = [s.p for s in self.samples if not math.isnan(s.p)]
        return all(b <= a for a, b in zip(values, values[1:]))


def _validate_tv(tv: float) -> None:
    if not (0.0 <= tv <= 1.0):
        raise InvalidParameterError(f"t_V must lie in [0, 1], got {tv!r}")


def success_at(tv: float, omega: float, kappa: float) -> Optional[float]:
    """Total success probability, or None where no plan exists."""
    try:
        plan = feed_forward_plan(ppbs_design_interaction(tv), PureQubit.from_angle(omega), kappa)
    except NumericalError:
        return None
    return plan.total_success


def _golden_section_max(
    f: Callable[[float], float], a: float, b: float, tol: float
) -> Tuple[float, float]:
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _grid_then_golden(objective: Callable[[float], Optional[float]], what: str) -> Tuple[float, float, float, bool]:
    step = math.radians(OPTIMIZER_CONFIG["coarse_step_deg"])
    n_cells = int(round(HALF_PI / step))
    grid = np.linspace(0.0, HALF_PI, n_cells + 1)

    best_x, best_p = None, -math.inf
    for x in grid:
        value = objective(float(x))
        # strict '>' keeps the smaller angle on ties
        if value is not None and value > best_p:
            best_x, best_p = float(x), value
    if best_x is None:
        raise AllBranchesDegenerateError(what)

    def safe(x: float) -> float:
        value = objective(x)
        return -math.inf if value is None else value

    lower = max(0.0, best_x - step)
    upper = min(HALF_PI, best_x + step)
    refined_x, refined_p = _golden_section_max(safe, lower, upper, OPTIMIZER_CONFIG["golden_tol_rad"])
    if refined_p >= best_p:
        return refined_x, refined_p, step, True
    return best_x, best_p, step, False


def maximize_kappa(tv: float, omega: float) -> OptimizationResult:
    _validate_tv(tv)
    x, p, step, refined = _grid_then_golden(lambda k: success_at(tv, omega, k), "kappa")
    logger.debug(f"maximize_kappa t_V={tv:.6g} omega={math.degrees(omega):.4f}: kappa*={math.degrees(x):.4f} p*={p:.8g}")
    return OptimizationResult(best_omega=omega, best_kappa=x, best_p=p, grid_resolution=step, refined=refined)


def maximize_omega(tv: float, kappa: float = math.pi / 4) -> OptimizationResult:
    _validate_tv(tv)
    x, p, step, refined = _grid_then_golden(lambda w: success_at(tv, w, kappa), "omega")
    logger.debug(f"maximize_omega t_V={tv:.6g} kappa={math.degrees(kappa):.4f}: omega*={math.degrees(x):.4f} p*={p:.8g}")
    return OptimizationResult(best_omega=x, best_kappa=kappa, best_p=p, grid_resolution=step, refined=refined)


def _sweep_point(tv_squared: float) -> SweepSample:
    tv = math.sqrt(tv_squared)
    try:
        p_tilde = simplified_success(tv)
    except TooWeakCouplingError:
        p_tilde = None
    try:
        result = maximize_omega(tv)
    except (NumericalError, InvalidParameterError) as e:
        logger.warning(f"Sweep point T_V={tv_squared:.6g} failed: {e}")
        return SweepSample(tv_squared, math.nan, math.nan, p_tilde, note=str(e))
    return SweepSample(tv_squared, result.best_p, result.best_omega, p_tilde)


def sweep_tv(tv_squared_grid: Sequence[float], max_workers: int = 1) -> SweepCurve:
    """Optimal p and simplified p_tilde per T_V; failed points carry NaN and a note."""
    for value in tv_squared_grid:
        if not (0.0 <= value <= 1.0):
            raise InvalidParameterError(f"T_V must lie in [0, 1], got {value!r}")

    if max_workers > 1:
        # map() yields in input order
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            samples = tuple(executor.map(_sweep_point, tv_squared_grid))
    else:
        samples = tuple(_sweep_point(value) for value in tv_squared_grid)

    curve = SweepCurve(samples)
    if not curve.is_monotone_decreasing():
        logger.warning("Optimal success probability is not monotonically decreasing in T_V")
    return curve
