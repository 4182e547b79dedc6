"""
Unit tests for conditional states, filter synthesis and the feed-forward plan
"""

import math

import numpy as np
import pytest

from src.protocol import (
    BRANCH_MINUS,
    BranchImpossibleError,
    ConditionalStatePair,
    InteractionSpec,
    LinearDependenceError,
    PreparationAngles,
    PureQubit,
    QuantumFilter,
    TooWeakCouplingError,
    branch_operator,
    branch_success,
    check_ortho_conditions,
    conditional_states,
    decompose_filter,
    feed_forward_plan,
    make_symmetric_interaction,
    measurement_operator,
    meter_coupling,
    ppbs_design_interaction,
    simplified_settings,
    simplified_success,
    success_probability,
    synthesize_filter,
)
from src.qmath import (
    IDENTITY2,
    U_PI,
    InvalidParameterError,
    dagger,
    phase_invariant_distance,
    state_fidelity,
    projector,
    svd2,
)

PLUS = PureQubit.from_angle(math.pi / 4)
KET0 = PureQubit(1.0, 0.0)
QPC = make_symmetric_interaction(0.0, -1.0)
IDENTITY_V = make_symmetric_interaction(1.0, 1.0)


def random_qubit(rng) -> PureQubit:
    return PureQubit.from_amplitudes(*(rng.normal(size=2) + 1j * rng.normal(size=2)))


def random_interaction(rng) -> InteractionSpec:
    magnitudes = rng.uniform(0.05, 1.0, size=4)
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=4))
    return InteractionSpec(*(magnitudes * phases))


@pytest.fixture
def design_tv():
    return math.sqrt(0.334)


class TestPureQubit:

    def test_from_angle(self):
        q = PureQubit.from_angle(math.pi / 3)
        assert q.alpha == pytest.approx(0.5)
        assert q.beta == pytest.approx(math.sqrt(3) / 2)

    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidParameterError):
            PureQubit(1.0, 1.0)

    def test_orthogonal(self):
        q = PureQubit.from_angle(0.4)
        assert abs(np.vdot(q.vector, q.orthogonal().vector)) < 1e-15
        assert q.orthogonal().alpha == pytest.approx(math.sin(0.4))
        assert q.orthogonal().beta == pytest.approx(-math.cos(0.4))

    def test_preparation_angles_range(self):
        angles = PreparationAngles(omega=math.radians(55.0), kappa=math.pi / 4)
        assert angles.omega_deg == pytest.approx(55.0)
        assert angles.kappa_deg == pytest.approx(45.0)
        with pytest.raises(InvalidParameterError):
            PreparationAngles(omega=-0.1, kappa=0.0)


class TestInteraction:

    def test_quantum_parity_check(self):
        assert np.allclose(QPC.diagonal, [1.0, 0.0, 0.0, -1.0])

    def test_ppbs_parametrization(self, design_tv):
        V = ppbs_design_interaction(design_tv)
        assert np.allclose(V.diagonal, [1.0, 0.5779273, 0.5779273, -0.332], atol=1e-7)
        assert V.is_symmetric()

    def test_no_interaction(self):
        assert np.allclose(IDENTITY_V.matrix, np.eye(4))

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            make_symmetric_interaction(1.2, 0.0)
        with pytest.raises(InvalidParameterError):
            InteractionSpec(1.0, 0.5, 0.5, 1.5)

    def test_general_constructor_accepts_complex(self):
        V = InteractionSpec(1.0, 0.5j, 0.5j, -0.3)
        assert V.d01 == 0.5j


class TestConditionalStates:

    def test_parity_check_plus_plus(self):
        pair = conditional_states(QPC, PLUS, PLUS)
        assert np.allclose(pair.phi0, [0.5, 0.0])
        assert np.allclose(pair.phi1, [0.0, -0.5])

    def test_no_interaction_projects_onto_zero(self):
        g = PureQubit.from_angle(0.3)
        pair = conditional_states(IDENTITY_V, g, KET0)
        assert np.allclose(pair.phi0, g.vector)
        assert np.allclose(pair.phi1, 0.0)

    def test_symmetric_family_formula(self):
        t1, t11, omega = 0.6, -0.28, 0.9
        pair = conditional_states(make_symmetric_interaction(t1, t11), PureQubit.from_angle(omega), PLUS)
        c, s = math.cos(omega), math.sin(omega)
        assert np.allclose(pair.phi0, np.array([c, t1 * s]) / math.sqrt(2), atol=1e-12)
        assert np.allclose(pair.phi1, np.array([t1 * c, t11 * s]) / math.sqrt(2), atol=1e-12)

    def test_gram_and_norms_are_consistent(self):
        pair = ConditionalStatePair.from_vectors([1.0, 1j], [0.5, 0.5])
        assert pair.gram == pytest.approx(np.vdot([1.0, 1j], [0.5, 0.5]))
        assert pair.norm0_sq == pytest.approx(2.0)
        assert pair.norm1_sq == pytest.approx(0.5)

    def test_measurement_operator_columns(self):
        g = PureQubit.from_angle(0.7)
        V = ppbs_design_interaction(0.5)
        m = measurement_operator(V.matrix, g, PLUS)
        pair = conditional_states(V, g, PLUS)
        assert np.allclose(m[:, 0], pair.phi0)
        assert np.allclose(m[:, 1], pair.phi1)


class TestSynthesizeFilter:

    def test_orthogonal_equal_norms(self):
        pair = ConditionalStatePair.from_vectors([1 / math.sqrt(2), 0.0], [0.0, 1 / math.sqrt(2)])
        f = synthesize_filter(pair)
        assert phase_invariant_distance(f.G, IDENTITY2) < 1e-12
        assert abs(f.N) == pytest.approx(math.sqrt(2))
        assert f.success == pytest.approx(0.5)
        assert branch_success(f) == f.success

    def test_non_orthogonal_pair(self):
        phi0 = np.array([1.0, 0.0])
        phi1 = np.array([1.0, 1.0]) / math.sqrt(2)
        f = synthesize_filter(ConditionalStatePair.from_vectors(phi0, phi1))
        mapped0 = f.G @ phi0
        mapped1 = f.G @ phi1
        assert abs(mapped0[1]) < 1e-12
        assert abs(mapped1[0]) < 1e-12
        assert mapped0[0] == pytest.approx(mapped1[1])
        assert mapped0[0] == pytest.approx(1 / f.N)
        assert svd2(f.G)[1][0] == pytest.approx(1.0)

    def test_dependent_pair_raises(self):
        pair = ConditionalStatePair.from_vectors([0.6, 0.8], [0.6, 0.8])
        with pytest.raises(LinearDependenceError):
            synthesize_filter(pair)

    def test_filter_contract_on_random_settings(self):
        rng = np.random.default_rng(21)
        checked = 0
        for _ in range(10_000):
            V, g, pi = random_interaction(rng), random_qubit(rng), random_qubit(rng)
            pair = conditional_states(V, g, pi)
            try:
                f = synthesize_filter(pair)
            except LinearDependenceError:
                continue
            sigma_max = svd2(f.G)[1][0]
            assert 1.0 - 1e-9 <= sigma_max <= 1.0 + 1e-12
            mapped0 = f.G @ pair.phi0
            mapped1 = f.G @ pair.phi1
            scale = abs(mapped0[0])
            assert abs(mapped0[1]) <= 1e-9 * scale
            assert abs(mapped1[0]) <= 1e-9 * scale
            assert abs(mapped0[0] - mapped1[1]) <= 1e-9 * scale
            checked += 1
        assert checked > 9_000


class TestBranchOperator:

    def test_ideal_symmetric_is_identity_over_n(self):
        rng = np.random.default_rng(22)
        for _ in range(200):
            V = ppbs_design_interaction(rng.uniform(0.05, 0.95))
            g = PureQubit.from_angle(rng.uniform(0.05, math.pi / 2 - 0.05))
            f = synthesize_filter(conditional_states(V, g, PLUS))
            K = branch_operator(V, g, PLUS, f)
            assert phase_invariant_distance(K * f.N, IDENTITY2) < 1e-9

    def test_parity_check_with_sign_filter(self):
        f = QuantumFilter(G=np.diag([1.0, -1.0]).astype(complex), N=2.0, success=0.25)
        K = branch_operator(QPC, PLUS, PLUS, f)
        assert np.allclose(K, IDENTITY2 / 2)

    def test_no_interaction_has_no_branch_operator(self):
        with pytest.raises(LinearDependenceError):
            branch_operator(IDENTITY_V, PLUS, KET0)

    def test_transfer_fidelity_for_random_inputs(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            V = ppbs_design_interaction(rng.uniform(0.05, 0.95))
            g = PureQubit.from_angle(rng.uniform(0.1, 1.4))
            pi = PureQubit.from_angle(rng.uniform(0.1, 1.4))
            K = branch_operator(V, g, pi)
            psi = random_qubit(rng)
            out = K @ psi.vector
            out = out / np.linalg.norm(out)
            assert state_fidelity(projector(out), psi.density_matrix()) >= 1 - 1e-9

    def test_success_is_input_independent(self):
        rng = np.random.default_rng(24)
        V = ppbs_design_interaction(0.6)
        g = PureQubit.from_angle(0.8)
        K = branch_operator(V, g, PLUS)
        norms = [np.linalg.norm(K @ random_qubit(rng).vector) ** 2 for _ in range(50)]
        assert max(norms) - min(norms) < 1e-9


class TestFeedForwardPlan:

    def test_parity_check_total_success(self):
        plan = feed_forward_plan(QPC, PLUS, math.pi / 4)
        assert plan.total_success == pytest.approx(0.5)
        assert plan.filter_plus.success == pytest.approx(0.25)
        assert plan.filter_minus.success == pytest.approx(0.25)
        assert plan.uses_fixed_filter
        assert np.allclose(plan.correction, U_PI)
        assert not plan.single_branch

    def test_no_interaction_is_impossible_on_both_branches(self):
        with pytest.raises(BranchImpossibleError) as excinfo:
            feed_forward_plan(IDENTITY_V, KET0, math.pi / 4)
        assert set(excinfo.value.branches) == {"plus", "minus"}

    def test_symmetric_feed_forward_identity(self):
        rng = np.random.default_rng(25)
        for _ in range(100):
            V = ppbs_design_interaction(rng.uniform(0.05, 0.95))
            g = PureQubit.from_angle(rng.uniform(0.05, math.pi / 2 - 0.05))
            plan = feed_forward_plan(V, g, math.pi / 4)
            assert plan.uses_fixed_filter
            assert phase_invariant_distance(plan.filter_minus.G, U_PI @ plan.filter_plus.G) < 1e-9
            assert abs(plan.filter_plus.N) == pytest.approx(abs(plan.filter_minus.N), abs=1e-9)

    def test_fixed_filter_on_full_coupling_grid(self, caplog):
        caplog.set_level("WARNING", logger="src.protocol")
        for tv_squared in np.round(np.arange(0.05, 0.951, 0.05), 2):
            V = ppbs_design_interaction(math.sqrt(tv_squared))
            for omega_deg in range(5, 90, 5):
                plan = feed_forward_plan(V, PureQubit.from_angle(math.radians(omega_deg)), math.pi / 4)
                assert plan.uses_fixed_filter, (tv_squared, omega_deg)
                assert np.allclose(plan.correction, U_PI)
        assert not [r for r in caplog.records if "G- = U_pi G+" in r.getMessage()]

    def test_total_is_sum_of_branches(self, design_tv):
        V = ppbs_design_interaction(design_tv)
        g = PureQubit.from_angle(math.radians(55.2))
        plan = feed_forward_plan(V, g, math.pi / 4)
        expected = 1 / abs(plan.filter_plus.N) ** 2 + 1 / abs(plan.filter_minus.N) ** 2
        assert plan.total_success == pytest.approx(expected, abs=1e-12)
        assert success_probability(V, g, math.pi / 4) == pytest.approx(plan.total_success)

    def test_single_branch_degrades_with_flag(self, mocker, design_tv):
        V = ppbs_design_interaction(design_tv)
        g = PureQubit.from_angle(math.radians(55.0))
        plus_only = synthesize_filter(conditional_states(V, g, PLUS))
        mocker.patch("src.protocol._branch_filter", side_effect=[plus_only, None])

        plan = feed_forward_plan(V, g, math.pi / 4)

        assert plan.single_branch
        assert plan.degenerate_branches == (BRANCH_MINUS,)
        assert plan.total_success == pytest.approx(plus_only.success)
        assert not plan.uses_fixed_filter


class TestDecomposeFilter:

    def test_unitary_filter(self):
        hadamard = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
        decomposition = decompose_filter(QuantumFilter(G=hadamard, N=1.0, success=1.0))
        assert decomposition.lam == pytest.approx(1.0)

    def test_diagonal_filter(self):
        G = np.diag([1.0, 0.3]).astype(complex)
        decomposition = decompose_filter(QuantumFilter(G=G, N=1.0, success=1.0))
        assert decomposition.lam == pytest.approx(0.3)
        assert np.allclose(np.abs(decomposition.U1), IDENTITY2.real)
        assert np.allclose(np.abs(decomposition.U2), IDENTITY2.real)
        assert np.allclose(decomposition.reconstruct(), G)

    def test_random_reconstruction(self):
        rng = np.random.default_rng(26)
        for _ in range(200):
            pair = conditional_states(random_interaction(rng), random_qubit(rng), random_qubit(rng))
            try:
                f = synthesize_filter(pair)
            except LinearDependenceError:
                continue
            d = decompose_filter(f)
            assert np.max(np.abs(d.reconstruct() - f.G)) < 1e-9
            assert np.allclose(dagger(d.U1) @ d.U1, IDENTITY2, atol=1e-12)
            assert 0.0 < d.lam <= 1.0

    def test_rejects_unnormalized_filter(self):
        with pytest.raises(InvalidParameterError):
            decompose_filter(QuantumFilter(G=2 * IDENTITY2, N=1.0, success=1.0))

    def test_meter_coupling_realizes_attenuation(self):
        lam = 0.35
        coupling = meter_coupling(lam)
        assert np.allclose(dagger(coupling) @ coupling, np.eye(4), atol=1e-12)
        # target first, meter prepared and post-selected in |0>
        effective = coupling[np.ix_([0, 2], [0, 2])]
        assert np.allclose(effective, np.diag([1.0, lam]))


class TestSimplifiedProtocol:

    def test_ortho_conditions_at_simplified_settings(self):
        tv = 0.5
        angles = simplified_settings(tv)
        pair = conditional_states(ppbs_design_interaction(tv), angles.target(), angles.measurement())
        assert check_ortho_conditions(pair)

    def test_ortho_conditions_generic_settings(self):
        pair = conditional_states(ppbs_design_interaction(0.5), PureQubit.from_angle(0.3), PureQubit.from_angle(1.1))
        assert not check_ortho_conditions(pair)

    def test_ortho_conditions_parity_check(self):
        assert check_ortho_conditions(conditional_states(QPC, PLUS, PLUS))

    def test_settings_examples(self):
        assert simplified_settings(0.0).omega_deg == pytest.approx(45.0)
        angles = simplified_settings(math.sqrt(0.334))
        assert angles.omega_deg == pytest.approx(60.05, abs=0.01)
        assert angles.kappa == angles.omega

    def test_too_weak_coupling(self):
        with pytest.raises(TooWeakCouplingError):
            simplified_settings(math.sqrt(0.5))
        with pytest.raises(TooWeakCouplingError):
            simplified_success(0.9)

    def test_success_examples(self):
        assert simplified_success(0.0) == pytest.approx(0.25)
        assert simplified_success(math.sqrt(0.334)) == pytest.approx(0.12463, abs=1e-5)
        assert simplified_success(math.sqrt(0.4999999)) < 1e-6

    def test_single_branch_consistency(self):
        for tv_squared in (0.05, 0.2, 0.334, 0.45):
            tv = math.sqrt(tv_squared)
            angles = simplified_settings(tv)
            pair = conditional_states(ppbs_design_interaction(tv), angles.target(), angles.measurement())
            f = synthesize_filter(pair)
            assert decompose_filter(f).lam == pytest.approx(1.0, abs=1e-9)
            assert f.success == pytest.approx(simplified_success(tv), abs=1e-12)
            assert pair.norm0_sq == pytest.approx(simplified_success(tv), abs=1e-12)
