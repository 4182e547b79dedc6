"""
Simulated process tomography of a single-qubit transfer channel.

Each setting prepares one of the six Pauli eigenstates and measures the
output in the X, Y or Z basis. A setting has three outcomes: +1 or -1 when a
coincidence is detected, or no coincidence when the heralded transfer
failed. Keeping the loss outcome lets Tr(chi) be estimated as the success
probability.

Forward model for the unnormalized process matrix chi:
    P(outcome) = Tr[(2 rho^T x Pi) chi],   P(none) = 1 - Tr L(rho)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import TOMOGRAPHY_CONFIG

from .channels import ProcessMap, ProcessMatrix, ZeroTraceError, apply, kraus_from_choi
from .qmath import (
    DEFAULT_POLICY,
    InvalidParameterError,
    NumericalError,
    clip_to_psd,
    hermitian_part,
    projector,
    state_fidelity,
    tensor,
    trace_distance,
)

logger = logging.getLogger(__name__)

OUTCOME_PLUS = "+1"
OUTCOME_MINUS = "-1"
OUTCOME_NONE = "none"
OUTCOMES = (OUTCOME_PLUS, OUTCOME_MINUS, OUTCOME_NONE)

METHOD_LINEAR = "linear"
METHOD_MLE = "mle"

_SQRT_HALF = 1.0 / np.sqrt(2.0)

_MAX_BACKTRACKS = 60
_MAX_STEP = 1e3
_DYKSTRA_MAX_ITER = 500
_DYKSTRA_TOL = 1e-13

PROBE_STATES: Dict[str, np.ndarray] = {
    "0": np.array([1.0, 0.0], dtype=complex),
    "1": np.array([0.0, 1.0], dtype=complex),
    "+": np.array([_SQRT_HALF, _SQRT_HALF], dtype=complex),
    "-": np.array([_SQRT_HALF, -_SQRT_HALF], dtype=complex),
    "+i": np.array([_SQRT_HALF, 1j * _SQRT_HALF], dtype=complex),
    "-i": np.array([_SQRT_HALF, -1j * _SQRT_HALF], dtype=complex),
}

# (projector for +1, projector for -1)
BASIS_PROJECTORS: Dict[str, Tuple[np.ndarray, np.ndarray]] = {
    "X": (projector(PROBE_STATES["+"]), projector(PROBE_STATES["-"])),
    "Y": (projector(PROBE_STATES["+i"]), projector(PROBE_STATES["-i"])),
    "Z": (projector(PROBE_STATES["0"]), projector(PROBE_STATES["1"])),
}

PAULI_PROBES: Tuple[str, ...] = tuple(PROBE_STATES)
PAULI_BASES: Tuple[str, ...] = tuple(BASIS_PROJECTORS)


class SingularDesignError(NumericalError):
    def __init__(self, rank: int):
        self.rank = rank
        super().__init__(
            f"Tomography settings are not informationally complete (design rank {rank} < 16)"
        )


def _check_names(probes: Sequence[str], bases: Sequence[str]) -> None:
    unknown = [p for p in probes if p not in PROBE_STATES]
    unknown += [b for b in bases if b not in BASIS_PROJECTORS]
    if unknown:
        raise InvalidParameterError(f"Unknown probe or basis name(s): {', '.join(unknown)}")


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    """Exact outcome probabilities, shape (probes, bases, outcomes)."""
    probes: Tuple[str, ...]
    bases: Tuple[str, ...]
    probabilities: np.ndarray

    def frequencies(self) -> np.ndarray:
        return self.probabilities


@dataclass(frozen=True, eq=False)
class CountsTable:
    probes: Tuple[str, ...]
    bases: Tuple[str, ...]
    counts: np.ndarray
    shots_per_setting: int
    seed: Optional[int] = None

    def __post_init__(self):
        _check_names(self.probes, self.bases)
        counts = np.asarray(self.counts, dtype=np.int64)
        expected = (len(self.probes), len(self.bases), len(OUTCOMES))
        if counts.shape != expected:
            raise InvalidParameterError(f"Counts must have shape {expected}, got {counts.shape}")
        if np.any(counts < 0):
            raise InvalidParameterError("Counts must be non-negative")
        if np.any(counts.sum(axis=2) != self.shots_per_setting):
            raise InvalidParameterError(
                f"Every setting must sum to shots_per_setting={self.shots_per_setting}"
            )
        object.__setattr__(self, "counts", counts)

    def frequencies(self) -> np.ndarray:
        return self.counts / float(self.shots_per_setting)

    def to_csv_rows(self) -> List[Dict[str, Union[str, int]]]:
        rows = []
        for i, probe in enumerate(self.probes):
            for j, basis in enumerate(self.bases):
                for k, outcome in enumerate(OUTCOMES):
                    rows.append({
                        "probe": probe,
                        "basis": basis,
                        "outcome": outcome,
                        "count": int(self.counts[i, j, k]),
                    })
        return rows

    @classmethod
    def from_csv_rows(cls, rows: Sequence[Dict[str, str]], seed: Optional[int] = None) -> "CountsTable":
        probes: List[str] = []
        bases: List[str] = []
        values: Dict[Tuple[str, str, str], int] = {}
        for row in rows:
            probe, basis, outcome = row["probe"], row["basis"], row["outcome"]
            if outcome not in OUTCOMES:
                raise InvalidParameterError(f"Unknown outcome {outcome!r}")
            if probe not in probes:
                probes.append(probe)
            if basis not in bases:
                bases.append(basis)
            values[(probe, basis, outcome)] = int(row["count"])

        _check_names(probes, bases)
        counts = np.zeros((len(probes), len(bases), len(OUTCOMES)), dtype=np.int64)
        for (probe, basis, outcome), count in values.items():
            counts[probes.index(probe), bases.index(basis), OUTCOMES.index(outcome)] = count
        if counts.size == 0:
            raise InvalidParameterError("No counts rows given")
        shots = int(counts[0, 0].sum())
        return cls(tuple(probes), tuple(bases), counts, shots, seed)


TomographyData = Union[CountsTable, ProbabilityTable]


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    chi_hat: ProcessMatrix
    method: str
    residual: float
    iterations: int = 0
    converged: bool = True
    log_likelihoods: Tuple[float, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class Comparison:
    fidelity: float
    trace_distance: float


def exact_probabilities(
    channel: Union[ProcessMap, ProcessMatrix],
    probes: Sequence[str] = PAULI_PROBES,
    bases: Sequence[str] = PAULI_BASES,
) -> ProbabilityTable:
    _check_names(probes, bases)
    if isinstance(channel, ProcessMatrix):
        channel = kraus_from_choi(channel)

    table = np.zeros((len(probes), len(bases), len(OUTCOMES)))
    for i, probe in enumerate(probes):
        output, success = apply(channel, projector(PROBE_STATES[probe]))
        for j, basis in enumerate(bases):
            plus, minus = BASIS_PROJECTORS[basis]
            table[i, j, 0] = np.real(np.trace(plus @ output))
            table[i, j, 1] = np.real(np.trace(minus @ output))
            table[i, j, 2] = 1.0 - success
    return ProbabilityTable(tuple(probes), tuple(bases), np.clip(table, 0.0, 1.0))


def sample_counts(
    table: ProbabilityTable,
    shots: int,
    seed: int = TOMOGRAPHY_CONFIG["seed"],
) -> CountsTable:
    """
    Multinomial draw per setting. Setting k uses its own stream spawned from
    (seed, k), so the result does not depend on evaluation order.
    """
    if shots <= 0:
        raise InvalidParameterError(f"shots must be positive, got {shots!r}")

    n_probes, n_bases, _ = table.probabilities.shape
    counts = np.zeros(table.probabilities.shape, dtype=np.int64)
    for index in range(n_probes * n_bases):
        i, j = divmod(index, n_bases)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
        probabilities = table.probabilities[i, j]
        counts[i, j] = rng.multinomial(shots, probabilities / probabilities.sum())

    logger.debug(f"Sampled {n_probes * n_bases} settings x {shots} shots with seed {seed}")
    return CountsTable(table.probes, table.bases, counts, shots, seed)


def _effects(probes: Sequence[str], bases: Sequence[str]) -> np.ndarray:
    """Operators E with P(+1), P(-1) = Tr(E chi); shape (probes, bases, 2, 4, 4)."""
    effects = np.zeros((len(probes), len(bases), 2, 4, 4), dtype=complex)
    for i, probe in enumerate(probes):
        rho_t = projector(PROBE_STATES[probe]).T
        for j, basis in enumerate(bases):
            for k, pi in enumerate(BASIS_PROJECTORS[basis]):
                effects[i, j, k] = 2.0 * tensor(rho_t, pi)
    return effects


def _predicted(chi: np.ndarray, probes: Sequence[str], bases: Sequence[str]) -> np.ndarray:
    effects = _effects(probes, bases)
    coincidences = np.real(np.einsum("pbkij,ji->pbk", effects, chi))
    loss = 1.0 - coincidences.sum(axis=2, keepdims=True)
    return np.concatenate([coincidences, loss], axis=2)


def _residual(chi: np.ndarray, data: TomographyData) -> float:
    return float(np.linalg.norm(_predicted(chi, data.probes, data.bases) - data.frequencies()))


def log_likelihood(chi: Union[ProcessMatrix, np.ndarray], data: TomographyData) -> float:
    """Per-shot log-likelihood sum_k f_k log p_k over all settings and outcomes."""
    matrix = chi.chi if isinstance(chi, ProcessMatrix) else np.asarray(chi)
    frequencies = data.frequencies()
    predicted = _predicted(matrix, data.probes, data.bases)
    observed = frequencies > 0.0
    return float(np.sum(frequencies[observed] * np.log(np.maximum(predicted[observed], 1e-300))))


def _finalize(chi: np.ndarray, target_trace: Optional[float]) -> ProcessMatrix:
    chi = clip_to_psd(hermitian_part(chi))
    trace = float(np.real(np.trace(chi)))
    if trace <= DEFAULT_POLICY.identity_tol:
        raise ZeroTraceError(trace)
    if target_trace is not None:
        chi = chi * (target_trace / trace)
    return ProcessMatrix(chi)


def reconstruct_linear(data: TomographyData, loss_aware: bool = True) -> ReconstructionResult:
    """
    Least-squares inversion of the coincidence frequencies, then positivity
    by eigenvalue clipping. The trace is rescaled to the mean coincidence
    fraction, which is the input-averaged success probability for the six
    Pauli probes; in post-selected mode it is rescaled to 1.
    """
    effects = _effects(data.probes, data.bases)
    design = np.array([e.T.reshape(-1) for e in effects.reshape(-1, 4, 4)])
    rank = int(np.linalg.matrix_rank(design))
    if rank < 16:
        raise SingularDesignError(rank)

    frequencies = data.frequencies()
    observed = frequencies[:, :, :2].reshape(-1)
    solution, *_ = np.linalg.lstsq(design, observed.astype(complex), rcond=None)

    success = float(np.mean(frequencies[:, :, :2].sum(axis=2)))
    chi_hat = _finalize(solution.reshape(4, 4), success if loss_aware else 1.0)
    residual = _residual(chi_hat.chi, data)
    logger.debug(f"Linear inversion: rank {rank}, estimated success {success:.6g}, residual {residual:.3e}")
    return ReconstructionResult(chi_hat=chi_hat, method=METHOD_LINEAR, residual=residual)


def _project_trace_bounded(matrix: np.ndarray) -> np.ndarray:
    """Nearest Hermitian X with 2 Tr_out X <= I (trace non-increasing)."""
    excess = clip_to_psd(2.0 * np.einsum("iaja->ij", matrix.reshape(2, 2, 2, 2)) - np.eye(2))
    return matrix - 0.25 * np.kron(excess, np.eye(2))


def _project_physical(matrix: np.ndarray) -> np.ndarray:
    """
    Projection onto {chi >= 0, 2 Tr_out chi <= I} by Dykstra's alternating
    projections. Returns the positive iterate, so positivity is exact and the
    trace bound holds to the loop tolerance.
    """
    x = hermitian_part(matrix)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    y = x
    for _ in range(_DYKSTRA_MAX_ITER):
        y = clip_to_psd(x + p)
        p = x + p - y
        x = _project_trace_bounded(y + q)
        q = y + q - x
        if np.linalg.norm(x - y) < _DYKSTRA_TOL:
            break
    return y


def reconstruct_mle(
    data: TomographyData,
    max_iter: int = TOMOGRAPHY_CONFIG["mle_max_iter"],
    tol: float = TOMOGRAPHY_CONFIG["mle_tol"],
    loss_aware: bool = True,
) -> ReconstructionResult:
    """
    Maximum-likelihood estimate by accelerated projected gradient ascent over
    physical process matrices {chi >= 0, 2 Tr_out chi <= I}.

    The no-coincidence outcome enters the likelihood with probability
    1 - Tr[(2 rho^T x I) chi], so every setting is a complete measurement.
    Steps are backtracked until they give sufficient increase, and momentum
    is dropped whenever the accelerated step would lower the likelihood, so
    the recorded log-likelihoods never decrease. The iteration has converged
    when |delta logL| < tol and the projected-gradient fixed-point residual
    is below mle_residual_tol. Running out of ascent steps away from that
    fixed point, or out of iterations, is reported as non-convergence.
    """
    coincidence = _effects(data.probes, data.bases).reshape(-1, 2, 4, 4)
    frequencies = data.frequencies().reshape(-1, len(OUTCOMES))
    observed = frequencies > 0.0
    residual_tol = TOMOGRAPHY_CONFIG["mle_residual_tol"]
    base_step = TOMOGRAPHY_CONFIG["mle_initial_step"]

    def probabilities(chi: np.ndarray) -> np.ndarray:
        coincidences = np.real(np.einsum("skij,ji->sk", coincidence, chi))
        return np.concatenate([coincidences, 1.0 - coincidences.sum(axis=1, keepdims=True)], axis=1)

    def likelihood(chi: np.ndarray) -> float:
        p = probabilities(chi)
        if not np.all(np.isfinite(p)) or np.any(p[observed] <= 0.0):
            return -np.inf
        return float(np.sum(frequencies[observed] * np.log(p[observed])))

    def gradient(chi: np.ndarray) -> np.ndarray:
        p = probabilities(chi)
        weights = np.zeros_like(p)
        weights[observed] = frequencies[observed] / p[observed]
        # the loss outcome's effect is the sum of the two coincidence effects, with a minus sign
        return np.einsum("sk,skij->ij", weights[:, :2] - weights[:, 2:], coincidence)

    def ascent_step(point: np.ndarray, step: float) -> Optional[Tuple[np.ndarray, float, float]]:
        value = likelihood(point)
        if not np.isfinite(value):
            return None
        direction = gradient(point)
        for _ in range(_MAX_BACKTRACKS):
            candidate = _project_physical(point + step * direction)
            delta = candidate - point
            candidate_value = likelihood(candidate)
            gain = float(np.real(np.vdot(direction, delta)))
            model = value + gain - float(np.real(np.vdot(delta, delta))) / (2.0 * step)
            if np.isfinite(candidate_value) and candidate_value >= model:
                return candidate, candidate_value, step
            step *= 0.5
        return None

    def fixed_point_residual(chi: np.ndarray, step: float) -> float:
        step = max(step, base_step)
        return float(np.linalg.norm(chi - _project_physical(chi + step * gradient(chi))))

    chi = np.eye(4, dtype=complex) / 6.0
    value = likelihood(chi)
    history = [value]
    previous = chi
    theta = 1.0
    step = base_step
    converged = False
    stalled = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        momentum = (theta - 1.0) / theta_next
        trial = min(2.0 * step, _MAX_STEP)

        found = ascent_step(chi + momentum * (chi - previous), trial) if momentum > 0.0 else None
        if found is None or found[1] < value:
            theta_next = 1.0
            found = ascent_step(chi, trial)
        if found is None or found[1] < value:
            stalled = True
            break

        previous = chi
        chi, value, step = found
        theta = theta_next
        history.append(value)
        if abs(history[-1] - history[-2]) < tol and fixed_point_residual(chi, step) < residual_tol:
            converged = True
            break

    if stalled:
        residual = fixed_point_residual(chi, step)
        converged = residual < residual_tol
        if not converged:
            logger.warning(
                f"MLE stalled at iteration {iterations} with fixed-point residual {residual:.3e}"
            )
    elif not converged and max_iter > 0:
        logger.warning(f"MLE did not converge within {max_iter} iterations")
    logger.debug(f"MLE: {iterations} iterations, log-likelihood {history[-1]:.12g}, converged={converged}")

    chi_hat = _finalize(chi, None if loss_aware else 1.0)
    return ReconstructionResult(
        chi_hat=chi_hat,
        method=METHOD_MLE,
        residual=_residual(chi_hat.chi, data),
        iterations=iterations,
        converged=converged,
        log_likelihoods=tuple(history),
    )


def compare(chi_hat: ProcessMatrix, chi_true: ProcessMatrix) -> Comparison:
    estimate = chi_hat.normalized()
    truth = chi_true.normalized()
    fidelity = float(np.clip(state_fidelity(estimate, truth), 0.0, 1.0))
    return Comparison(fidelity=fidelity, trace_distance=trace_distance(estimate, truth))
