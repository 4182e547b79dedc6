"""
Partially polarizing beam splitter (PPBS) with imperfect transmittances and
partially distinguishable photons.

The source photon enters spatial port a and the target photon port b; qubit
value 0 is horizontal (H) and 1 is vertical (V). Post-selecting one photon in
each output port (c for the source, d for the target) gives a two-qubit
operator that is the difference of a transmit-transmit path Vtt and a
reflect-reflect path Vrr. The reflect-reflect path swaps polarizations
between the ports, so the operator is diagonal only when r_H * r_V = 0.
"""

import logging
from dataclasses import dataclass
from itertools import product
from typing import Tuple

import numpy as np

from .channels import (
    FilterMode,
    ProcessMap,
    ProcessMatrix,
    Scenario,
    choi,
    scenario_kraus,
)
from .protocol import (
    InteractionSpec,
    PureQubit,
    conditional_states,
    ppbs_design_interaction,
    synthesize_filter,
)
from .qmath import InvalidParameterError

logger = logging.getLogger(__name__)

PORT_SOURCE_IN, PORT_TARGET_IN = 0, 1
PORT_SOURCE_OUT, PORT_TARGET_OUT = 0, 1
POLARIZATIONS = (0, 1)  # H, V


@dataclass(frozen=True)
class PpbsPhysical:
    """Amplitude transmittances t_H and t_V of the PPBS."""
    t_h: float
    t_v: float

    def __post_init__(self):
        for name in ("t_h", "t_v"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {value!r}")

    @classmethod
    def from_transmittances(cls, th_squared: float, tv_squared: float) -> "PpbsPhysical":
        for name, value in (("T_H", th_squared), ("T_V", tv_squared)):
            if not (0.0 <= value <= 1.0):
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {value!r}")
        return cls(float(np.sqrt(th_squared)), float(np.sqrt(tv_squared)))

    @property
    def r_h(self) -> float:
        return float(np.sqrt(1.0 - self.t_h ** 2))

    @property
    def r_v(self) -> float:
        return float(np.sqrt(1.0 - self.t_v ** 2))

    def transmission(self, polarization: int) -> float:
        return self.t_h if polarization == 0 else self.t_v

    def reflection(self, polarization: int) -> float:
        return self.r_h if polarization == 0 else self.r_v

    @property
    def is_ideal(self) -> bool:
        return self.t_h == 1.0


@dataclass(frozen=True)
class DistinguishabilityModel:
    """Scalar mode overlap v; v = 1 is perfect two-photon interference."""
    visibility: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.visibility <= 1.0):
            raise InvalidParameterError(f"Visibility must lie in [0, 1], got {self.visibility!r}")


@dataclass(frozen=True, eq=False)
class PostselectedPpbs:
    raw: np.ndarray
    interaction: InteractionSpec
    scale: float


def distinguishable_branches(p: PpbsPhysical) -> Tuple[np.ndarray, np.ndarray]:
    """Transmit-transmit and reflect-reflect contributions (Vtt, Vrr) as 4x4 operators."""
    t_h, t_v, r_h, r_v = p.t_h, p.t_v, p.r_h, p.r_v
    vtt = np.diag([t_h * t_h, t_h * t_v, t_h * t_v, t_v * t_v]).astype(complex)
    vrr = np.zeros((4, 4), dtype=complex)
    vrr[0, 0] = r_h * r_h
    vrr[3, 3] = r_v * r_v
    # |01> <-> |10>: both photons reflect and exchange ports
    vrr[1, 2] = vrr[2, 1] = r_h * r_v
    return vtt, vrr


def ppbs_postselected(p: PpbsPhysical) -> PostselectedPpbs:
    vtt, vrr = distinguishable_branches(p)
    raw = vtt - vrr
    diagonal = np.array([
        2.0 * p.t_h ** 2 - 1.0,
        p.t_h * p.t_v,
        p.t_h * p.t_v,
        2.0 * p.t_v ** 2 - 1.0,
    ])
    scale = float(np.max(np.abs(diagonal)))
    normalized = diagonal / scale
    if p.r_h * p.r_v > 0.0:
        logger.debug(
            f"PPBS t_H={p.t_h:.6g}, t_V={p.t_v:.6g} has off-diagonal coupling "
            f"{p.r_h * p.r_v:.3e}; interaction keeps the diagonal part only"
        )
    return PostselectedPpbs(raw=raw, interaction=InteractionSpec(*normalized), scale=scale)


def _beam_splitter(t: float, r: float, flip_reflection_sign: bool) -> np.ndarray:
    # rows: output ports (c, d); columns: input ports (a, b)
    sign = -1.0 if flip_reflection_sign else 1.0
    return np.array([[t, sign * 1j * r], [1j * r, t]], dtype=complex)


def _mode_transfer(p: PpbsPhysical, flip_reflection_sign: bool) -> np.ndarray:
    """Single-photon transfer matrix over modes (port, polarization), index 2*port + pol."""
    transfer = np.zeros((4, 4), dtype=complex)
    for pol in POLARIZATIONS:
        splitter = _beam_splitter(p.transmission(pol), p.reflection(pol), flip_reflection_sign)
        for out_port, in_port in product((0, 1), repeat=2):
            transfer[2 * out_port + pol, 2 * in_port + pol] = splitter[out_port, in_port]
    return transfer


def _permanent2(m: np.ndarray) -> complex:
    return m[0, 0] * m[1, 1] + m[0, 1] * m[1, 0]


def fock_oracle(p: PpbsPhysical, flip_reflection_sign: bool = False) -> np.ndarray:
    """
    Post-selected two-photon operator from the mode transformation.

    Each input is one photon per input port, so no occupation factors enter
    and the amplitude for an output pattern is the permanent of the 2x2
    submatrix of the single-photon transfer matrix.
    """
    transfer = _mode_transfer(p, flip_reflection_sign)
    operator = np.zeros((4, 4), dtype=complex)
    for s_in, t_in, s_out, t_out in product(POLARIZATIONS, repeat=4):
        rows = [2 * PORT_SOURCE_OUT + s_out, 2 * PORT_TARGET_OUT + t_out]
        cols = [2 * PORT_SOURCE_IN + s_in, 2 * PORT_TARGET_IN + t_in]
        operator[2 * s_out + t_out, 2 * s_in + t_in] = _permanent2(transfer[np.ix_(rows, cols)])
    return operator


def imperfect_transfer_map(
    p: PpbsPhysical,
    v: DistinguishabilityModel,
    g: PureQubit,
    kappa: float,
    scenario: Scenario,
) -> ProcessMap:
    """
    Transfer channel for the physical PPBS.

    The two-qubit map rho -> Vtt rho Vtt^dagger + Vrr rho Vrr^dagger
    - v (Vtt rho Vrr^dagger + Vrr rho Vtt^dagger) is written with the Kraus
    operators sqrt(1-v) Vtt, sqrt(1-v) Vrr and sqrt(v) (Vtt - Vrr). The
    filter is synthesized for the design interaction, not the physical one.
    """
    vtt, vrr = distinguishable_branches(p)
    weights = (
        (np.sqrt(1.0 - v.visibility), vtt),
        (np.sqrt(1.0 - v.visibility), vrr),
        (np.sqrt(v.visibility), vtt - vrr),
    )
    operators = [w * op for w, op in weights if w > 0.0]

    plus_filter = None
    if scenario.filter is FilterMode.FIXED_PLUS:
        design = ppbs_design_interaction(p.t_v)
        plus_filter = synthesize_filter(conditional_states(design, g, PureQubit.from_angle(kappa)))

    kraus = scenario_kraus(operators, g, kappa, scenario, plus_filter)
    return ProcessMap(kraus=kraus, label=scenario.label)


def imperfect_transfer_channel(
    p: PpbsPhysical,
    v: DistinguishabilityModel,
    g: PureQubit,
    kappa: float,
    scenario: Scenario,
) -> ProcessMatrix:
    return choi(imperfect_transfer_map(p, v, g, kappa, scenario))
