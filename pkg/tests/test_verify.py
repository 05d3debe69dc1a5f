import json
import math

import numpy as np
import pytest

import symmetrize as sz
from symmetrize import functional as fn
from symmetrize import verify as vf

from conftest import random_nonneg

P2 = fn.IntegrandModel.p_dirichlet(2.0)
ZERO_F = fn.NonlinearityModel.zero()
MASS2 = fn.ConstraintModel(2.0)


class TestBestTranslation:
    def test_identical_gives_zero(self):
        d = sz.make_domain("box", 2.0, 1, 64)
        u = sz.schwarz_rearrange(sz.from_profile(d, lambda x: np.clip(1 - np.abs(x), 0, None)))
        tau = sz.best_translation(u, u)
        assert np.array_equal(tau, [0.0])

    def test_exact_lattice_shift_recovered(self):
        d = sz.make_domain("box", 2.0, 1, 64)
        us = sz.schwarz_rearrange(sz.from_profile(d, lambda x: np.clip(1 - np.abs(x), 0, None)))
        shifted = vf.translated(us, np.array([3 * d.h]))
        tau = sz.best_translation(shifted, us)
        assert tau == pytest.approx([3 * d.h])
        assert sz.symmetry_defect(shifted, us, tau) == 0.0

    def test_noisy_shift_within_one_cell(self, rng):
        d = sz.make_domain("box", 2.0, 1, 128)
        us = sz.schwarz_rearrange(
            sz.from_profile(d, lambda x: np.clip(1 - x**2, 0, None))
        )
        noisy = sz.grid_function(
            d, vf.translated(us, np.array([5 * d.h])).values * (1 + 0.01 * rng.normal(size=d.shape))
        )
        noisy = sz.grid_function(d, np.clip(noisy.values, 0, None))
        tau = sz.best_translation(noisy, us)
        assert abs(tau[0] - 5 * d.h) <= d.h

    def test_2d_shift(self):
        d = sz.make_domain("box", 1.0, 2, 24)
        us = sz.schwarz_rearrange(fn.smooth_bump(d, [0.0, 0.0], width=0.5))
        shifted = vf.translated(us, np.array([2 * d.h, -3 * d.h]))
        tau = sz.best_translation(shifted, us)
        assert tau == pytest.approx([2 * d.h, -3 * d.h])


class TestPolyaSzego:
    def test_fixed_point_zero_slack(self, rng):
        d = sz.make_domain("box", 1.0, 1, 64)
        us = sz.schwarz_rearrange(random_nonneg(d, rng))
        rep = sz.polya_szego_check(us, P2)
        assert rep.slack == 0.0
        assert rep.passed

    def test_shifted_bump_slack_first_order(self):
        # translation leaves the continuum energy unchanged; the discrete
        # slack is pure discretization error and shrinks with h
        slacks = []
        for n in (128, 256):
            d = sz.make_domain("box", 2.0, 1, n)
            u = sz.from_profile(d, lambda x: np.clip(1 - ((x - 0.39) / 0.6) ** 2, 0, None) ** 2)
            rep = sz.polya_szego_check(u, P2)
            assert rep.slack >= -1e-10
            slacks.append(abs(rep.slack) / rep.original_energy)
        assert slacks[1] <= slacks[0]
        assert slacks[0] <= 0.05

    def test_two_bump_strictly_positive(self):
        d = sz.make_domain("box", 2.0, 1, 256)
        u = sz.from_profile(d, vf.builtin_profile("two_bump"))
        rep = sz.polya_szego_check(u, P2)
        assert rep.slack > 0.01 * rep.original_energy

    @pytest.mark.parametrize("kappa", [0.0, 0.5])
    def test_never_negative_on_random_profiles(self, kappa, rng):
        jm = fn.IntegrandModel.weighted_p(2.0, kappa)
        d = sz.make_domain("box", 1.0, 1, 128)
        for _ in range(100):
            u = random_nonneg(d, rng, smooth=bool(rng.integers(0, 2)))
            assert sz.polya_szego_check(u, jm).slack >= -1e-10


class TestPolarizationIdentityCheck:
    def test_radial_profile_all_gaps_zero(self):
        hs = sz.HalfSpace((1.0,), 0.25)
        rep = sz.polarization_identity_check(
            lambda x: np.clip(1 - np.abs(x), 0, None),
            hs, P2, fn.NonlinearityModel.radial_weighted(4.0), MASS2,
            "box", 2.0, 1, base_n=64, refinements=1,
        )
        for row in rep.rows:
            assert row.gap_j == 0.0
            assert row.delta_g == 0.0

    def test_two_bump_first_order_recovery(self):
        hs = sz.HalfSpace((-1.0,), 0.25)
        rep = sz.polarization_identity_check(
            vf.builtin_profile("two_bump"),
            hs, P2, fn.NonlinearityModel.radial_weighted(4.0), MASS2,
            "box", 2.0, 1, base_n=128, refinements=2,
        )
        assert rep.passed, (rep.ratios_j, [r.gap_j for r in rep.rows])
        for q in rep.ratios_j:
            assert 1.5 <= q <= 3.0
        assert all(r.delta_g == 0.0 for r in rep.rows)
        assert all(r.delta_f >= -1e-12 for r in rep.rows)


class TestIdentityCase:
    def test_translated_radial_bump_symmetric(self):
        d = sz.make_domain("box", 2.0, 1, 256)
        u = sz.from_profile(d, lambda x: np.clip(1 - ((x - 0.4) / 0.5) ** 2, 0, None) ** 2)
        res = sz.identity_case_check(u, 2.0)
        assert res.verdict == vf.VERDICT_SYMMETRIC
        assert res.defect <= 0.02

    def test_counterexample_inconclusive(self):
        d = sz.make_domain("box", 2.0, 1, 256)
        fix = sz.make_counterexample_fixture(d)
        res = sz.identity_case_check(fix.u, 2.0)
        assert res.verdict == vf.VERDICT_INCONCLUSIVE
        assert res.defect > 0.10
        assert res.critical_measure > 0

    def test_two_bump_fails_hypothesis(self):
        d = sz.make_domain("box", 2.0, 1, 256)
        u = sz.from_profile(d, vf.builtin_profile("two_bump"))
        res = sz.identity_case_check(u, 2.0)
        assert res.verdict == vf.VERDICT_FAILED
        assert res.gradient_gap > res.tolerances["tol_grad"]

    def test_rearrangement_of_itself(self, rng):
        d = sz.make_domain("box", 1.0, 1, 128)
        us = sz.schwarz_rearrange(random_nonneg(d, rng, smooth=True))
        res = sz.identity_case_check(us, 2.0)
        assert res.verdict == vf.VERDICT_SYMMETRIC
        assert np.array_equal(res.translation, [0.0])
        assert res.defect == 0.0


class TestCounterexampleFixture:
    def test_gradient_multiset_identical(self):
        d = sz.make_domain("box", 2.0, 1, 256)
        fix = sz.make_counterexample_fixture(d)
        for p in (2.0, 3.0):
            a = sz.gradient_pnorm_pow(fix.u, p)
            b = sz.gradient_pnorm_pow(fix.u_star, p)
            assert abs(a - b) <= 1e-12

    def test_rearranges_to_the_shelf_profile(self):
        d = sz.make_domain("box", 2.0, 1, 256)
        fix = sz.make_counterexample_fixture(d)
        assert np.array_equal(sz.schwarz_rearrange(fix.u).values, fix.u_star.values)

    def test_critical_measure_matches_shelf(self):
        d = sz.make_domain("box", 2.0, 1, 256)
        fix = sz.make_counterexample_fixture(d)
        measured = sz.critical_set_measure(fix.u_star)
        assert abs(measured - fix.shelf_width) <= 2 * d.h

    def test_rejects_coarse_or_2d(self):
        with pytest.raises(ValueError):
            sz.make_counterexample_fixture(sz.make_domain("box", 2.0, 1, 48))
        with pytest.raises(ValueError):
            sz.make_counterexample_fixture(sz.make_domain("box", 2.0, 2, 64))


class TestSymmetryExperiment:
    def test_eigenfunction_pipeline(self):
        d = sz.make_domain("ball", 1.0, 1, 256)
        opts = vf.ExperimentOptions(
            seed=3, polarizer_count=100, solver=sz.SolverOptions(grad_tol=1e-6), multistart=2
        )
        report = sz.run_symmetry_experiment(P2, ZERO_F, MASS2, d, opts)
        assert report.verdict == vf.VERDICT_SYMMETRIC
        assert report.symmetry_defect <= 0.01
        assert report.lam == pytest.approx(math.pi**2 / 4, rel=0.01)
        # constraint trace exactly constant, gradient/energy traces flat
        cons = report.traces["constraint"]
        assert all(c == cons[0] for c in cons)
        assert abs(cons[0] - 1.0) <= 1e-10
        grads = report.traces["grad_pnorm"]
        assert max(grads) - min(grads) <= report.tolerances["tol_grad_energy"]
        dists = report.traces["lp_distance"]
        assert all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))

    def test_off_center_init_recovers_translation(self):
        d = sz.make_domain("box", 8.0, 1, 256)
        fm = fn.NonlinearityModel.pure_power(4.0, 1.0)
        off = sz.project_to_constraint(fn.smooth_bump(d, [2.0], width=2.0), MASS2)
        res = sz.minimize(P2, fm, MASS2, d, off, sz.SolverOptions(grad_tol=1e-6))
        ic = sz.identity_case_check(res.u, 2.0)
        assert ic.verdict == vf.VERDICT_SYMMETRIC
        assert abs(ic.translation[0]) > 0.5  # the minimizer stayed off-center
        # defect floor is the one-cell interleaving error, O(h) at this n
        assert ic.defect <= 0.05

    def test_report_json_schema(self):
        d = sz.make_domain("ball", 1.0, 1, 128)
        opts = vf.ExperimentOptions(seed=1, polarizer_count=50, multistart=1,
                                    solver=sz.SolverOptions(grad_tol=1e-6))
        report = sz.run_symmetry_experiment(P2, ZERO_F, MASS2, d, opts)
        data = json.loads(report.to_json())
        expected = {"config", "traces", "lambda", "translation", "symmetry_defect",
                    "critical_measure", "verdict", "tolerances", "runtime_ms"}
        assert expected <= set(data)
        assert {"j_energy", "grad_pnorm", "lp_distance", "f_term", "constraint",
                "grad_distance"} <= set(data["traces"])
        lengths = {len(v) for v in data["traces"].values()}
        assert len(lengths) == 1  # all traces equally long


def test_tol_grad_scales_with_h():
    assert vf.tol_grad(1.0 / 128.0) == pytest.approx(0.05)
    assert vf.tol_grad(1.0 / 256.0) == pytest.approx(0.025)
    assert vf.tol_grad(1.0 / 128.0, reference_energy=2.0) == pytest.approx(0.1)
