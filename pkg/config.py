import os
from pathlib import Path

BASE_DIR = Path(__file__).parent

RESULTS_DIR = BASE_DIR / "results"

# Experimental settings of the linear-optics test bed
DESIGN_DEFAULTS = {
    "tv_squared": 0.334,
    "th_squared_experiment": 0.983,
    "omega_grid_deg": tuple(range(5, 90, 5)),
    "omega_star_deg": 55.2,
}

NUMERICAL_POLICY = {
    "contract_tol": 1e-9,
    "identity_tol": 1e-12,
    "hermitian_tol": 1e-10,
    "dependence_tol": 1e-10,
}

OPTIMIZER_CONFIG = {
    "coarse_step_deg": 0.5,
    "golden_tol_rad": 1e-6,
}

TOMOGRAPHY_CONFIG = {
    "shots": 10_000,
    "seed": 1,
    "mle_max_iter": 5000,
    "mle_tol": 1e-10,
    "mle_residual_tol": 1e-12,
    "mle_initial_step": 1e-2,
}

TV_SWEEP_CONFIG = {
    "start": 0.02,
    "stop": 0.98,
    "step": 0.02,
}

DATA_CONFIG = {
    "significant_digits": 12,
    "sweep_omega_basename": "sweep_omega",
    "sweep_tv_basename": "sweep_tv",
    "transfer_basename": "transfer",
    "optimize_basename": "optimize",
    "oracle_basename": "oracle_check",
    "counts_filename": "tomography_counts.csv",
    "chi_filename": "tomography_chi.json",
    "metrics_filename": "tomography_metrics.json",
}

LOG_CONFIG = {
    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    "dir_name": "logs",
    "file_prefix": "qstate_transfer",
}


def _max_workers() -> int:
    raw = os.environ.get("QRL_NUM_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# Caps sweep parallelism; QRL_NUM_THREADS=1 forces sequential evaluation
MAX_WORKERS = _max_workers()
