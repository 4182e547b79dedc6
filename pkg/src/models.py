import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from config import DESIGN_DEFAULTS, TOMOGRAPHY_CONFIG

SCENARIO_LABELS = ("a", "b", "c")
FORMATS = ("csv", "json")
ESTIMATORS = ("linear", "mle")


class ConfigError(ValueError):
    pass


def _nan_to_none(value: Optional[float]) -> Optional[float]:
    if value is None or math.isnan(value):
        return None
    return value


@dataclass
class RunConfig:
    tv_squared: float = DESIGN_DEFAULTS["tv_squared"]
    th_squared: float = 1.0
    omega_deg: float = 55.0
    kappa_deg: float = 45.0
    scenario: str = "c"
    visibility: float = 1.0
    shots: int = TOMOGRAPHY_CONFIG["shots"]
    seed: int = TOMOGRAPHY_CONFIG["seed"]
    format: str = "csv"
    out: Optional[Path] = None
    infinite_statistics: bool = False
    estimator: str = "mle"
    flip_reflection_sign: bool = False
    counts_file: Optional[Path] = None

    def validate(self) -> "RunConfig":
        for name in ("tv_squared", "th_squared", "visibility"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ConfigError(f"--{name.replace('_', '-')} must lie in [0, 1], got {value}")
        for name in ("omega_deg", "kappa_deg"):
            value = getattr(self, name)
            if not (0.0 <= value <= 90.0):
                raise ConfigError(f"--{name.replace('_', '-')} must lie in [0, 90], got {value}")
        if self.scenario not in SCENARIO_LABELS:
            raise ConfigError(f"--scenario must be one of {', '.join(SCENARIO_LABELS)}, got {self.scenario!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"--format must be csv or json, got {self.format!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"--estimator must be linear or mle, got {self.estimator!r}")
        if self.shots <= 0:
            raise ConfigError(f"--shots must be positive, got {self.shots}")
        if self.seed < 0:
            raise ConfigError(f"--seed must be non-negative, got {self.seed}")
        if self.out is not None:
            self.out = Path(self.out)
        if self.counts_file is not None:
            self.counts_file = Path(self.counts_file)
            if not self.counts_file.is_file():
                raise ConfigError(f"--counts file not found: {self.counts_file}")
            if self.infinite_statistics:
                raise ConfigError("--counts and --infinite-statistics are mutually exclusive")
        return self

    @property
    def tv(self) -> float:
        return math.sqrt(self.tv_squared)

    @property
    def omega(self) -> float:
        return math.radians(self.omega_deg)

    @property
    def kappa(self) -> float:
        return math.radians(self.kappa_deg)

    @property
    def is_ideal(self) -> bool:
        """Ideal PPBS with perfectly indistinguishable photons."""
        return self.th_squared == 1.0 and self.visibility == 1.0

    def settings(self) -> Dict[str, Any]:
        return {
            "tv_squared": self.tv_squared,
            "th_squared": self.th_squared,
            "omega_deg": self.omega_deg,
            "kappa_deg": self.kappa_deg,
            "scenario": self.scenario,
            "visibility": self.visibility,
            "shots": self.shots,
            "seed": self.seed,
            "estimator": self.estimator,
            "infinite_statistics": self.infinite_statistics,
            "counts_file": str(self.counts_file) if self.counts_file else None,
        }


def matrix_to_dict(matrix: np.ndarray) -> Dict[str, List[List[float]]]:
    matrix = np.asarray(matrix, dtype=complex)
    return {"real": np.real(matrix).tolist(), "imag": np.imag(matrix).tolist()}


def vector_to_dict(vector: np.ndarray) -> Dict[str, List[float]]:
    vector = np.asarray(vector, dtype=complex)
    return {"real": np.real(vector).tolist(), "imag": np.imag(vector).tolist()}


@dataclass
class OmegaSweepRow:
    omega_deg: float
    scenario: str
    fidelity: float
    average_fidelity: float
    success_prob: float
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "omega_deg": self.omega_deg,
            "scenario": self.scenario,
            "fidelity": _nan_to_none(self.fidelity),
            "average_fidelity": _nan_to_none(self.average_fidelity),
            "success_prob": _nan_to_none(self.success_prob),
            "note": self.note,
        }

    def to_csv_row(self) -> dict:
        return {
            "omega_deg": self.omega_deg,
            "scenario": self.scenario,
            "fidelity": self.fidelity,
            "average_fidelity": self.average_fidelity,
            "success_prob": self.success_prob,
            "note": self.note,
        }


@dataclass
class TvSweepRow:
    tv_squared: float
    p_optimal: float
    omega_star_deg: float
    p_tilde: Optional[float] = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "T_V": self.tv_squared,
            "p_optimal": _nan_to_none(self.p_optimal),
            "omega_star_deg": _nan_to_none(self.omega_star_deg),
            "p_tilde": self.p_tilde,
            "note": self.note,
        }

    def to_csv_row(self) -> dict:
        return {
            "T_V": self.tv_squared,
            "p_optimal": self.p_optimal,
            "omega_star_deg": self.omega_star_deg,
            # empty where the simplified protocol is undefined
            "p_tilde": self.p_tilde,
            "note": self.note,
        }


@dataclass
class OptimizeReport:
    tv_squared: float
    omega_star_deg: float
    kappa_star_deg: float
    p_optimal: float
    p_tilde: Optional[float]
    refined: bool

    def to_dict(self) -> dict:
        return {
            "T_V": self.tv_squared,
            "omega_star_deg": self.omega_star_deg,
            "kappa_star_deg": self.kappa_star_deg,
            "p_optimal": self.p_optimal,
            "p_tilde": self.p_tilde,
            "refined": self.refined,
        }

    def to_csv_row(self) -> dict:
        row = self.to_dict()
        row["refined"] = 1 if self.refined else 0
        return row


@dataclass
class OracleRow:
    th_squared: float
    tv_squared: float
    max_deviation: float

    def to_dict(self) -> dict:
        return {
            "T_H": self.th_squared,
            "T_V": self.tv_squared,
            "max_deviation": self.max_deviation,
        }

    def to_csv_row(self) -> dict:
        return self.to_dict()


@dataclass
class TransferReport:
    tv_squared: float
    th_squared: float
    omega_deg: float
    kappa_deg: float
    scenario: str
    phi0: np.ndarray
    phi1: np.ndarray
    filter_G: np.ndarray
    filter_N: float
    filter_lambda: float
    branch_plus: Optional[np.ndarray]
    branch_minus: Optional[np.ndarray]
    total_success: float
    single_branch: bool
    fixed_filter_feed_forward: bool
    channel_fidelity: float
    average_fidelity: float
    channel_success: float
    notes: List[str] = field(default_factory=list)

    def scalars(self) -> Dict[str, Any]:
        return {
            "T_V": self.tv_squared,
            "T_H": self.th_squared,
            "omega_deg": self.omega_deg,
            "kappa_deg": self.kappa_deg,
            "scenario": self.scenario,
            "filter_N": self.filter_N,
            "filter_lambda": self.filter_lambda,
            "total_success": self.total_success,
            "single_branch": self.single_branch,
            "fixed_filter_feed_forward": self.fixed_filter_feed_forward,
            "channel_fidelity": self.channel_fidelity,
            "average_fidelity": self.average_fidelity,
            "channel_success": self.channel_success,
        }

    def to_dict(self) -> dict:
        return {
            **self.scalars(),
            "phi0": vector_to_dict(self.phi0),
            "phi1": vector_to_dict(self.phi1),
            "filter_G": matrix_to_dict(self.filter_G),
            "branch_plus": None if self.branch_plus is None else matrix_to_dict(self.branch_plus),
            "branch_minus": None if self.branch_minus is None else matrix_to_dict(self.branch_minus),
            "notes": list(self.notes),
        }

    def to_csv_rows(self) -> List[dict]:
        """Scalar quantities as (quantity, value) rows."""
        rows = []
        for key, value in self.scalars().items():
            if isinstance(value, bool):
                value = 1 if value else 0
            rows.append({"quantity": key, "value": value})
        return rows
