"""
Single-qubit channels produced by the transfer protocol.

A channel is kept as a list of Kraus operators (ProcessMap) or as its process
matrix chi = (I x L)(|Phi+><Phi+|) (ProcessMatrix). chi is stored
unnormalized, so Tr(chi) is the input-averaged success probability; it is
only normalized for fidelities and display.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .protocol import (
    InteractionSpec,
    PureQubit,
    QuantumFilter,
    conditional_states,
    measurement_operator,
    synthesize_filter,
)
from .qmath import (
    DEFAULT_POLICY,
    IDENTITY2,
    PHI_PLUS,
    U_PI,
    InvalidParameterError,
    NumericalError,
    as_matrix,
    dagger,
    eig_hermitian4,
    tensor,
)

logger = logging.getLogger(__name__)

CLASSICAL_AVERAGE_FIDELITY = 2.0 / 3.0


class ZeroTraceError(NumericalError):
    def __init__(self, trace: float):
        self.trace = trace
        super().__init__(f"Process matrix has (near-)zero trace {trace:.3e}; nothing is transmitted")


class InvalidDensityMatrixError(InvalidParameterError):
    pass


class FilterMode(Enum):
    OFF = "off"
    FIXED_PLUS = "fixed_plus"


@dataclass(frozen=True)
class Scenario:
    filter: FilterMode
    feed_forward: bool
    label: str = ""

    def __post_init__(self):
        if self.feed_forward and self.filter is not FilterMode.FIXED_PLUS:
            raise InvalidParameterError("Feed-forward requires the fixed '+' filter")

    @classmethod
    def from_label(cls, label: str) -> "Scenario":
        try:
            return SCENARIOS[label.lower()]
        except KeyError:
            raise InvalidParameterError(
                f"Unknown scenario {label!r}; expected one of {', '.join(SCENARIOS)}"
            ) from None


SCENARIOS: Dict[str, Scenario] = {
    # accept all coincidences, no filter
    "a": Scenario(FilterMode.OFF, False, "a"),
    # fixed filter G+ on both outcomes
    "b": Scenario(FilterMode.FIXED_PLUS, False, "b"),
    # fixed filter followed by the U_pi phase flip on the '-' outcome
    "c": Scenario(FilterMode.FIXED_PLUS, True, "c"),
}


@dataclass(frozen=True, eq=False)
class ProcessMap:
    kraus: Tuple[np.ndarray, ...]
    label: str = ""

    def __post_init__(self):
        operators = tuple(as_matrix(k, 2) for k in self.kraus)
        object.__setattr__(self, "kraus", operators)
        excess = float(np.max(np.linalg.eigvalsh(self.completeness - IDENTITY2)))
        if excess > DEFAULT_POLICY.contract_tol:
            raise InvalidParameterError(
                f"Map {self.label!r} is not trace-non-increasing: "
                f"largest eigenvalue of sum K^dagger K exceeds 1 by {excess:.3e}"
            )

    @property
    def completeness(self) -> np.ndarray:
        total = np.zeros((2, 2), dtype=complex)
        for k in self.kraus:
            total += dagger(k) @ k
        return total


@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    chi: np.ndarray

    def __post_init__(self):
        chi = as_matrix(self.chi, 4)
        eigenvalues, _ = eig_hermitian4(chi)
        if eigenvalues[0] < -DEFAULT_POLICY.contract_tol:
            raise InvalidParameterError(
                f"Process matrix is not positive semidefinite (min eigenvalue {eigenvalues[0]:.3e})"
            )
        object.__setattr__(self, "chi", chi)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.chi)))

    def normalized(self) -> np.ndarray:
        trace = self.trace
        if trace <= DEFAULT_POLICY.identity_tol:
            raise ZeroTraceError(trace)
        return self.chi / trace


def scenario_kraus(
    operators: Iterable[np.ndarray],
    g: PureQubit,
    kappa: float,
    scenario: Scenario,
    plus_filter: Optional[QuantumFilter],
) -> Tuple[np.ndarray, ...]:
    """Kraus operators for each two-qubit Kraus operator and each source outcome."""
    pi = PureQubit.from_angle(kappa)
    pi_perp = pi.orthogonal()
    kraus = []
    for operator in operators:
        m_plus = measurement_operator(operator, g, pi)
        m_minus = measurement_operator(operator, g, pi_perp)
        if scenario.filter is FilterMode.OFF:
            kraus.extend([m_plus, m_minus])
            continue
        G = plus_filter.G
        kraus.append(G @ m_plus)
        # correction acts after the filter, as in the optical set-up
        kraus.append(U_PI @ G @ m_minus if scenario.feed_forward else G @ m_minus)
    return tuple(kraus)


def scenario_channel(
    V: InteractionSpec,
    g: PureQubit,
    kappa: float,
    scenario: Scenario,
) -> ProcessMap:
    plus_filter = None
    if scenario.filter is FilterMode.FIXED_PLUS:
        plus_filter = synthesize_filter(conditional_states(V, g, PureQubit.from_angle(kappa)))
    kraus = scenario_kraus([V.matrix], g, kappa, scenario, plus_filter)
    return ProcessMap(kraus=kraus, label=scenario.label)


def choi(process_map: ProcessMap) -> ProcessMatrix:
    chi = np.zeros((4, 4), dtype=complex)
    for k in process_map.kraus:
        column = tensor(IDENTITY2, k) @ PHI_PLUS
        chi += np.outer(column, np.conj(column))
    return ProcessMatrix(chi)


def kraus_from_choi(
    process_matrix: ProcessMatrix, label: str = "", tol: float = DEFAULT_POLICY.identity_tol
) -> ProcessMap:
    eigenvalues, eigenvectors = eig_hermitian4(process_matrix.chi)
    kraus = [
        np.sqrt(2.0 * value) * eigenvectors[:, index].reshape(2, 2).T
        for index, value in enumerate(eigenvalues)
        if value > tol
    ]
    return ProcessMap(kraus=tuple(kraus), label=label)


def channel_fidelity(process_matrix: ProcessMatrix) -> float:
    """<Phi+|chi|Phi+> / Tr(chi); 1 exactly for an identity channel of any success probability."""
    trace = process_matrix.trace
    if trace <= DEFAULT_POLICY.identity_tol:
        raise ZeroTraceError(trace)
    overlap = float(np.real(np.conj(PHI_PLUS) @ process_matrix.chi @ PHI_PLUS))
    return float(np.clip(overlap / trace, 0.0, 1.0))


def average_fidelity_from_channel(channel_fid: float) -> float:
    return (2.0 * channel_fid + 1.0) / 3.0


def channel_fidelity_from_average(average_fid: float) -> float:
    return (3.0 * average_fid - 1.0) / 2.0


def average_state_fidelity(process_matrix: ProcessMatrix) -> float:
    return average_fidelity_from_channel(channel_fidelity(process_matrix))


@dataclass(frozen=True)
class FidelityBounds:
    classical_average_fidelity: float
    classical_channel_fidelity: float
    note: str


def fidelity_bounds() -> FidelityBounds:
    return FidelityBounds(
        classical_average_fidelity=CLASSICAL_AVERAGE_FIDELITY,
        classical_channel_fidelity=channel_fidelity_from_average(CLASSICAL_AVERAGE_FIDELITY),
        note=(
            "Measure-and-prepare strategies reach average state fidelity 2/3. "
            "For trace-normalized qubit channels F_avg = (2 F_channel + 1) / 3, "
            "so the same bound reads F_channel = 1/2."
        ),
    )


def _validate_density_matrix(rho) -> np.ndarray:
    try:
        rho = as_matrix(rho, 2)
    except InvalidParameterError as e:
        raise InvalidDensityMatrixError(str(e)) from None
    tol = DEFAULT_POLICY.contract_tol
    if float(np.max(np.abs(rho - dagger(rho)))) > tol:
        raise InvalidDensityMatrixError("Density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidDensityMatrixError(f"Density matrix trace is {np.trace(rho).real:.6g}, not 1")
    if float(np.min(np.linalg.eigvalsh(0.5 * (rho + dagger(rho))))) < -tol:
        raise InvalidDensityMatrixError("Density matrix has a negative eigenvalue")
    return rho


def apply(process_map: ProcessMap, rho) -> Tuple[np.ndarray, float]:
    """Returns the unnormalized output state and its trace, the success probability."""
    rho = _validate_density_matrix(rho)
    output = np.zeros((2, 2), dtype=complex)
    for k in process_map.kraus:
        output += k @ rho @ dagger(k)
    return output, float(np.real(np.trace(output)))


def apply_choi(process_matrix: ProcessMatrix, rho) -> np.ndarray:
    """L(rho) = 2 Tr_1[(rho^T x I) chi]."""
    rho = _validate_density_matrix(rho)
    product = (tensor(rho.T, IDENTITY2) @ process_matrix.chi).reshape(2, 2, 2, 2)
    return 2.0 * np.einsum("iaib->ab", product)


def combine(maps: Sequence[ProcessMap], label: str = "") -> ProcessMap:
    """Union of Kraus sets, i.e. the sum of the maps."""
    kraus = tuple(k for process_map in maps for k in process_map.kraus)
    return ProcessMap(kraus=kraus, label=label)
