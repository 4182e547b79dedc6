"""
Conditional state transfer through a weak diagonal two-qubit coupling.

The source qubit |psi> = alpha|0> + beta|1> interacts with a target prepared
in |g> through a diagonal operator V. Projecting the source onto |pi> leaves
the target in alpha|phi_0> + beta|phi_1>. A filter G maps phi_0 and phi_1 onto
|0>/N and |1>/N, which completes the transfer with probability 1/|N|^2.
Using both measurement outcomes (feed-forward) adds the two branch
probabilities.

Filters and branch operators are defined up to a global phase.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .qmath import (
    DEFAULT_POLICY,
    KET0,
    KET1,
    U_PI,
    InvalidParameterError,
    NumericalError,
    NumericalPolicy,
    Subsystem,
    as_vector,
    is_normalized,
    norm_squared,
    partial_project,
    phase_invariant_distance,
    svd2,
    tensor,
)

logger = logging.getLogger(__name__)

BRANCH_PLUS = "plus"
BRANCH_MINUS = "minus"


class LinearDependenceError(NumericalError):
    """phi_0 and phi_1 are linearly dependent, so no filter can separate them."""

    def __init__(self, determinant: float, threshold: float):
        self.determinant = determinant
        self.threshold = threshold
        super().__init__(
            f"Conditional states are linearly dependent (|det| = {determinant:.3e} "
            f"<= {threshold:.3e}); state transfer is impossible in this branch"
        )


class BranchImpossibleError(NumericalError):
    def __init__(self, branches: Tuple[str, ...]):
        self.branches = tuple(branches)
        super().__init__(
            f"No filter exists for measurement branch(es) {', '.join(self.branches)}: "
            "conditional states are linearly dependent"
        )


class TooWeakCouplingError(NumericalError):
    def __init__(self, tv_squared: float):
        self.tv_squared = tv_squared
        super().__init__(
            f"Filter-free transfer needs T_V = t_V^2 < 1/2, got {tv_squared:.6g}"
        )


@dataclass(frozen=True)
class PureQubit:
    alpha: complex
    beta: complex

    def __post_init__(self):
        vector = self.vector
        if not np.all(np.isfinite(vector)) or not is_normalized(vector):
            raise InvalidParameterError(
                f"PureQubit must be normalized, got norm^2 = {norm_squared(vector)!r}"
            )

    @classmethod
    def from_angle(cls, theta: float) -> "PureQubit":
        """cos(theta)|0> + sin(theta)|1>"""
        return cls(complex(np.cos(theta)), complex(np.sin(theta)))

    @classmethod
    def from_amplitudes(cls, alpha: complex, beta: complex) -> "PureQubit":
        vector = as_vector([alpha, beta], 2)
        norm = np.sqrt(norm_squared(vector))
        if norm == 0.0:
            raise InvalidParameterError("Amplitudes (0, 0) do not define a state")
        return cls(complex(vector[0] / norm), complex(vector[1] / norm))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def orthogonal(self) -> "PureQubit":
        # For real states cos k|0> + sin k|1> this is sin k|0> - cos k|1>
        return PureQubit(complex(np.conj(self.beta)), complex(-np.conj(self.alpha)))

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.vector, np.conj(self.vector))


@dataclass(frozen=True)
class PreparationAngles:
    """Target preparation angle omega and source measurement angle kappa, radians."""
    omega: float
    kappa: float

    def __post_init__(self):
        for name in ("omega", "kappa"):
            value = getattr(self, name)
            if not (-1e-12 <= value <= np.pi / 2 + 1e-12):
                raise InvalidParameterError(f"{name} must lie in [0, pi/2], got {value!r}")

    @property
    def omega_deg(self) -> float:
        return float(np.degrees(self.omega))

    @property
    def kappa_deg(self) -> float:
        return float(np.degrees(self.kappa))

    def target(self) -> PureQubit:
        return PureQubit.from_angle(self.omega)

    def measurement(self) -> PureQubit:
        return PureQubit.from_angle(self.kappa)


@dataclass(frozen=True)
class InteractionSpec:
    """Diagonal two-qubit operator diag(d00, d01, d10, d11), source qubit first."""
    d00: complex
    d01: complex
    d10: complex
    d11: complex

    def __post_init__(self):
        for name in ("d00", "d01", "d10", "d11"):
            value = complex(getattr(self, name))
            if not np.isfinite(value):
                raise InvalidParameterError(f"{name} is not finite")
            if abs(value) > 1.0 + DEFAULT_POLICY.identity_tol:
                raise InvalidParameterError(
                    f"|{name}| = {abs(value):.6g} exceeds 1; V^dagger V <= I is violated"
                )

    @property
    def diagonal(self) -> np.ndarray:
        return np.array([self.d00, self.d01, self.d10, self.d11], dtype=complex)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)

    def is_symmetric(self, tol: float = DEFAULT_POLICY.contract_tol) -> bool:
        return abs(self.d00 - 1.0) <= tol and abs(self.d01 - self.d10) <= tol


def make_symmetric_interaction(t1: float, t11: float) -> InteractionSpec:
    for name, value in (("t1", t1), ("t11", t11)):
        if np.iscomplexobj(value) or not (-1.0 <= float(value) <= 1.0):
            raise InvalidParameterError(f"{name} must be a real number in [-1, 1], got {value!r}")
    return InteractionSpec(1.0, float(t1), float(t1), float(t11))


def ppbs_design_interaction(tv: float) -> InteractionSpec:
    """Ideal partially polarizing beam splitter: t1 = t_V, t11 = 2 t_V^2 - 1."""
    if not (0.0 <= tv <= 1.0):
        raise InvalidParameterError(f"t_V must lie in [0, 1], got {tv!r}")
    return make_symmetric_interaction(tv, 2.0 * tv * tv - 1.0)


@dataclass(frozen=True, eq=False)
class ConditionalStatePair:
    phi0: np.ndarray
    phi1: np.ndarray
    gram: complex
    norm0_sq: float
    norm1_sq: float

    @classmethod
    def from_vectors(cls, phi0, phi1) -> "ConditionalStatePair":
        phi0 = as_vector(phi0, 2)
        phi1 = as_vector(phi1, 2)
        return cls(
            phi0=phi0,
            phi1=phi1,
            gram=complex(np.vdot(phi0, phi1)),
            norm0_sq=norm_squared(phi0),
            norm1_sq=norm_squared(phi1),
        )

    @property
    def determinant(self) -> complex:
        return complex(self.phi0[0] * self.phi1[1] - self.phi0[1] * self.phi1[0])

    def as_matrix(self) -> np.ndarray:
        return np.column_stack([self.phi0, self.phi1])


def measurement_operator(matrix: np.ndarray, g: PureQubit, pi: PureQubit) -> np.ndarray:
    """
    The 2x2 map |psi> -> <pi|_S V (|psi>_S |g>_T) for any 4x4 two-qubit operator.
    Its columns are phi_0 and phi_1.
    """
    columns = [
        partial_project(pi.vector, matrix @ tensor(basis, g.vector), Subsystem.SOURCE)
        for basis in (KET0, KET1)
    ]
    return np.column_stack(columns)


def conditional_states(V: InteractionSpec, g: PureQubit, pi: PureQubit) -> ConditionalStatePair:
    operator = measurement_operator(V.matrix, g, pi)
    return ConditionalStatePair.from_vectors(operator[:, 0], operator[:, 1])


@dataclass(frozen=True, eq=False)
class QuantumFilter:
    G: np.ndarray
    N: complex
    success: float


def _bra_perp(vector: np.ndarray) -> np.ndarray:
    """Row vector <v_perp| with <v_perp|v> = 0."""
    return np.array([vector[1], -vector[0]], dtype=complex)


def synthesize_filter(
    pair: ConditionalStatePair,
    policy: NumericalPolicy = DEFAULT_POLICY,
) -> QuantumFilter:
    largest = max(pair.norm0_sq, pair.norm1_sq)
    threshold = policy.dependence_tol * largest
    determinant = abs(pair.determinant)
    if largest == 0.0 or determinant <= threshold:
        raise LinearDependenceError(determinant, threshold)

    perp0 = _bra_perp(pair.phi0)
    perp1 = _bra_perp(pair.phi1)
    unnormalized = (
        np.outer(KET0, perp1) / (perp1 @ pair.phi0)
        + np.outer(KET1, perp0) / (perp0 @ pair.phi1)
    )
    _, sigma, _ = svd2(unnormalized)
    N = float(sigma[0])
    return QuantumFilter(G=unnormalized / N, N=complex(N), success=1.0 / N ** 2)


def branch_operator(
    V: InteractionSpec,
    g: PureQubit,
    pi: PureQubit,
    quantum_filter: Optional[QuantumFilter] = None,
) -> np.ndarray:
    """K = G <pi|V(. x |g>); equals I/N for a filter built from the same settings."""
    operator = measurement_operator(V.matrix, g, pi)
    if quantum_filter is None:
        pair = ConditionalStatePair.from_vectors(operator[:, 0], operator[:, 1])
        quantum_filter = synthesize_filter(pair)
    return quantum_filter.G @ operator


def branch_success(quantum_filter: QuantumFilter) -> float:
    return quantum_filter.success


@dataclass(frozen=True, eq=False)
class FeedForwardPlan:
    kappa: float
    filter_plus: Optional[QuantumFilter]
    filter_minus: Optional[QuantumFilter]
    correction: Optional[np.ndarray]
    total_success: float
    degenerate_branches: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def single_branch(self) -> bool:
        return bool(self.degenerate_branches)

    @property
    def uses_fixed_filter(self) -> bool:
        """True when G_minus = U_pi G_plus, i.e. one filter plus a phase flip suffices."""
        return self.correction is not None


def _branch_filter(
    V: InteractionSpec, g: PureQubit, pi: PureQubit, policy: NumericalPolicy
) -> Optional[QuantumFilter]:
    try:
        return synthesize_filter(conditional_states(V, g, pi), policy)
    except LinearDependenceError:
        return None


def feed_forward_plan(
    V: InteractionSpec,
    g: PureQubit,
    kappa: float,
    policy: NumericalPolicy = DEFAULT_POLICY,
) -> FeedForwardPlan:
    pi = PureQubit.from_angle(kappa)
    filter_plus = _branch_filter(V, g, pi, policy)
    filter_minus = _branch_filter(V, g, pi.orthogonal(), policy)

    degenerate = tuple(
        name for name, found in ((BRANCH_PLUS, filter_plus), (BRANCH_MINUS, filter_minus))
        if found is None
    )
    if len(degenerate) == 2:
        raise BranchImpossibleError(degenerate)
    if degenerate:
        logger.warning(
            f"Branch {degenerate[0]} is degenerate at kappa={np.degrees(kappa):.4f} deg; "
            "plan uses a single measurement outcome"
        )

    total = sum(f.success for f in (filter_plus, filter_minus) if f is not None)

    correction = None
    if filter_plus is not None and filter_minus is not None:
        # Checked per instance: the sign convention of the correction is not assumed
        if phase_invariant_distance(filter_minus.G, U_PI @ filter_plus.G) <= policy.contract_tol:
            correction = U_PI
        elif V.is_symmetric() and abs(kappa - np.pi / 4) <= policy.contract_tol:
            logger.warning("Symmetric interaction at kappa=pi/4 without G- = U_pi G+")

    return FeedForwardPlan(
        kappa=kappa,
        filter_plus=filter_plus,
        filter_minus=filter_minus,
        correction=correction,
        total_success=float(total),
        degenerate_branches=degenerate,
    )


def success_probability(V: InteractionSpec, g: PureQubit, kappa: float) -> float:
    return feed_forward_plan(V, g, kappa).total_success


@dataclass(frozen=True, eq=False)
class FilterDecomposition:
    """G = U1 diag(1, lam) U2 with unitary U1, U2 and attenuation lam in (0, 1]."""
    U1: np.ndarray
    U2: np.ndarray
    lam: float

    @property
    def D(self) -> np.ndarray:
        return np.diag([1.0, self.lam]).astype(complex)

    def reconstruct(self) -> np.ndarray:
        return self.U1 @ self.D @ self.U2


def decompose_filter(quantum_filter: QuantumFilter) -> FilterDecomposition:
    U, sigma, W = svd2(quantum_filter.G)
    if abs(sigma[0] - 1.0) > DEFAULT_POLICY.contract_tol:
        raise InvalidParameterError(
            f"Filter must have unit maximal singular value, got {sigma[0]:.12g}"
        )
    return FilterDecomposition(U1=U, U2=np.conj(W).T, lam=float(sigma[1] / sigma[0]))


def meter_coupling(lam: float) -> np.ndarray:
    """
    Target-meter unitary (target first) realizing diag(1, lam) when the meter
    starts in |0> and is post-selected on |0>.
    """
    if not (0.0 <= lam <= 1.0):
        raise InvalidParameterError(f"Attenuation must lie in [0, 1], got {lam!r}")
    leak = np.sqrt(1.0 - lam * lam)
    coupling = np.eye(4, dtype=complex)
    coupling[2:, 2:] = [[lam, -leak], [leak, lam]]
    return coupling


def check_ortho_conditions(
    pair: ConditionalStatePair, tol: float = DEFAULT_POLICY.contract_tol
) -> bool:
    """phi_0 orthogonal to phi_1 with equal norms: the filter is then proportional to a unitary."""
    return abs(pair.gram) <= tol and abs(pair.norm0_sq - pair.norm1_sq) <= tol


def _require_strong_coupling(tv: float) -> float:
    tv_squared = float(tv) ** 2
    if tv_squared >= 0.5:
        raise TooWeakCouplingError(tv_squared)
    return tv_squared


def simplified_settings(tv: float) -> PreparationAngles:
    tv_squared = _require_strong_coupling(tv)
    angle = float(np.arctan(1.0 / np.sqrt(1.0 - 2.0 * tv_squared)))
    return PreparationAngles(omega=angle, kappa=angle)


def simplified_success(tv: float) -> float:
    """Single-branch success probability of the filter-free protocol."""
    tv_squared = _require_strong_coupling(tv)
    return (1.0 - 2.0 * tv_squared) / (4.0 * (1.0 - tv_squared))
