"""
Unit tests for the angle optimizers and the T_V sweep
"""

import math

import numpy as np
import pytest

from src.optimize import (
    AllBranchesDegenerateError,
    SweepCurve,
    SweepSample,
    maximize_kappa,
    maximize_omega,
    success_at,
    sweep_tv,
)
from src.protocol import simplified_success
from src.qmath import InvalidParameterError

TV_DESIGN = math.sqrt(0.334)


class TestSuccessAt:

    def test_kappa_mirror_symmetry(self):
        for omega_deg in (20.0, 55.0, 70.0):
            for kappa_deg in (10.0, 30.0, 40.0):
                omega, kappa = math.radians(omega_deg), math.radians(kappa_deg)
                assert success_at(TV_DESIGN, omega, kappa) == pytest.approx(
                    success_at(TV_DESIGN, omega, math.pi / 2 - kappa), abs=1e-12
                )

    def test_inadmissible_point_is_none(self):
        assert success_at(1.0, math.radians(45.0), math.pi / 4) is None


class TestMaximizeOmega:

    def test_design_point(self):
        result = maximize_omega(TV_DESIGN)
        assert result.best_omega_deg == pytest.approx(55.2, abs=0.1)
        assert result.best_kappa_deg == pytest.approx(45.0)
        assert result.grid_resolution == pytest.approx(math.radians(0.5))

    def test_parity_check_limit(self):
        result = maximize_omega(0.0)
        assert result.best_omega_deg == pytest.approx(45.0, abs=0.01)
        assert result.best_p == pytest.approx(0.5, abs=1e-6)

    def test_weak_coupling(self):
        assert maximize_omega(math.sqrt(0.999)).best_p < 0.01

    def test_no_coupling_raises(self):
        with pytest.raises(AllBranchesDegenerateError):
            maximize_omega(1.0)

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            maximize_omega(1.5)

    def test_refinement_never_loses_to_grid(self):
        for tv_squared in (0.05, 0.334, 0.7):
            tv = math.sqrt(tv_squared)
            grid = np.linspace(0.0, math.pi / 2, 181)
            grid_best = max(
                value for value in (success_at(tv, float(w), math.pi / 4) for w in grid)
                if value is not None
            )
            assert maximize_omega(tv).best_p >= grid_best - 1e-12

    @pytest.mark.slow
    def test_matches_dense_grid(self):
        dense = np.linspace(0.0, math.pi / 2, 9001)
        values = [success_at(TV_DESIGN, float(w), math.pi / 4) for w in dense]
        dense_best = max(v for v in values if v is not None)
        assert maximize_omega(TV_DESIGN).best_p >= dense_best - 1e-9


class TestMaximizeKappa:

    @pytest.mark.parametrize("tv_squared,omega_deg", [(0.334, 55.0), (0.1, 30.0)])
    def test_optimum_at_forty_five_degrees(self, tv_squared, omega_deg):
        result = maximize_kappa(math.sqrt(tv_squared), math.radians(omega_deg))
        assert result.best_kappa_deg == pytest.approx(45.0, abs=0.5)
        assert result.best_omega == pytest.approx(math.radians(omega_deg))

    @pytest.mark.slow
    def test_forty_five_degrees_across_settings(self):
        for tv_squared in np.linspace(0.05, 0.95, 10):
            for omega_deg in np.linspace(10.0, 80.0, 10):
                result = maximize_kappa(math.sqrt(tv_squared), math.radians(omega_deg))
                p_45 = success_at(math.sqrt(tv_squared), math.radians(omega_deg), math.pi / 4)
                assert result.best_p == pytest.approx(p_45, abs=1e-9)
                assert result.best_kappa_deg == pytest.approx(45.0, abs=0.5)


class TestSweepTv:

    @pytest.fixture
    def curve(self):
        return sweep_tv([0.1, 0.334, 0.5, 0.7, 1.0])

    def test_simplified_column(self, curve):
        by_tv = {sample.tv_squared: sample for sample in curve.samples}
        assert by_tv[0.334].p_tilde == pytest.approx(simplified_success(TV_DESIGN))
        assert by_tv[0.334].p_tilde == pytest.approx(0.332 / 2.664)
        assert by_tv[0.5].p_tilde is None
        assert by_tv[0.7].p_tilde is None

    def test_failed_point_is_recorded(self, curve):
        last = curve.samples[-1]
        assert last.tv_squared == 1.0
        assert math.isnan(last.p)
        assert last.note

    def test_optimum_beats_simplified(self, curve):
        at_design = curve.samples[1]
        assert at_design.p >= at_design.p_tilde + 1e-4

    def test_dominance_over_simplified(self):
        grid = [float(x) for x in np.linspace(0.01, 0.49, 100)]
        for sample in sweep_tv(grid).samples:
            assert sample.p >= sample.p_tilde - 1e-12

    def test_parallel_matches_sequential(self):
        grid = [0.1, 0.2, 0.3, 0.4]
        sequential = sweep_tv(grid, max_workers=1)
        parallel = sweep_tv(grid, max_workers=4)
        assert [s.tv_squared for s in parallel.samples] == grid
        assert [s.p for s in parallel.samples] == [s.p for s in sequential.samples]

    def test_monotone_in_coupling(self, curve):
        assert curve.is_monotone_decreasing()

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            sweep_tv([0.2, 1.2])

    def test_monotonicity_check(self):
        rising = SweepCurve((SweepSample(0.1, 0.2, 0.9), SweepSample(0.2, 0.3, 0.9)))
        assert not rising.is_monotone_decreasing()
