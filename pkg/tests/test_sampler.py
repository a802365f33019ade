import numpy as np
import pytest
from numpy.testing import assert_allclose

import masolver as ms
from masolver.exceptions import ConfigError, SolverAbortError
from masolver.sampler import DiffusionSchedule


def toy_prior(rng, d=5, components=2):
    return ms.GaussianMixturePrior(
        np.full(components, 1.0 / components),
        rng.standard_normal((components, d)),
        rng.uniform(0.01, 0.1, components),
    )


class TestSchedule:
    def test_presets_are_variance_preserving(self):
        for steps in (20, 200):
            sched = ms.vp_schedule(steps)
            assert sched.steps == steps
            assert sched.alpha[0] == 1.0 and sched.sigma[0] == 0.0
            assert sched.sigma[-1] > 0.999
            assert_allclose(sched.alpha**2 + sched.sigma**2, 1.0, atol=1e-12)
            assert np.all(np.diff(sched.alpha) < 0)

    def test_validation(self):
        with pytest.raises(ValueError, match="alpha=1"):
            DiffusionSchedule(alpha=[0.9, 0.5], sigma=[0.0, 0.8], vp=False)
        with pytest.raises(ValueError, match="decrease"):
            DiffusionSchedule(alpha=[1.0, 0.5, 0.6], sigma=[0.0, 0.5, 0.9], vp=False)
        with pytest.raises(ValueError, match="variance-preserving"):
            DiffusionSchedule(alpha=[1.0, 0.5], sigma=[0.0, 0.5], vp=True)
        with pytest.raises(ValueError, match="variant"):
            DiffusionSchedule(alpha=[1.0, 0.5], sigma=[0.0, 0.5], vp=False,
                              variant="euler")


class TestStepCoeffs:
    def test_final_ancestral_step_is_deterministic(self):
        sched = ms.vp_schedule(10)
        c = ms.step_coeffs(sched, 1)
        assert (c.a_t, c.b_t, c.c_t) == (1.0, 0.0, 0.0)

    def test_ancestral_coeffs_are_previous_level(self):
        sched = ms.vp_schedule(10)
        c = ms.step_coeffs(sched, 5)
        assert c.a_t == sched.alpha[4] and c.b_t == 0.0 and c.c_t == sched.sigma[4]

    def test_deterministic_ddim_has_zero_noise(self):
        sched = ms.vp_schedule(10, variant="ddim", ddim_eta=0.0)
        for n in range(1, 11):
            assert ms.step_coeffs(sched, n).c_t == 0.0

    def test_full_stochasticity_matches_ancestral_conditional_variance(self):
        # independent identity: the DDPM posterior variance in abar = alpha^2
        # notation is (1 - abar_prev)/(1 - abar_n) * (1 - abar_n/abar_prev)
        sched = ms.vp_schedule(30, variant="ddim", ddim_eta=1.0)
        abar = sched.alpha**2
        for n in range(2, 31):
            c = ms.step_coeffs(sched, n)
            ref = (1 - abar[n - 1]) / (1 - abar[n]) * (1 - abar[n] / abar[n - 1])
            assert_allclose(c.c_t**2, ref, atol=1e-12)

    def test_out_of_range_rejected(self):
        sched = ms.vp_schedule(10)
        with pytest.raises(ValueError, match="outside"):
            ms.step_coeffs(sched, 0)
        with pytest.raises(ValueError, match="outside"):
            ms.step_coeffs(sched, 11)


class TestRt2Policy:
    def test_ratio_hand_value(self):
        sched = DiffusionSchedule(
            alpha=[1.0, 1.0 - 1e-9], sigma=[0.0, 0.1], vp=False
        )
        assert_allclose(ms.rt2_policy(sched, 1, "ratio"), 0.01, rtol=1e-6)

    def test_tweedie_point_mass_is_zero(self):
        prior = ms.GaussianMixturePrior([1.0], [[0.2, 0.4]], [1e-12])
        out = ms.denoise(prior, [0.0, 0.0], 0.9, 0.3)
        sched = ms.vp_schedule(10)
        assert ms.rt2_policy(sched, 5, "tweedie_scalar", out.scalar_var) < 1e-10

    def test_modes_agree_for_broad_prior(self):
        # tau^2 >> sigma^2/alpha^2: posterior variance approaches the ratio
        tau2 = 100.0
        prior = ms.GaussianMixturePrior([1.0], [np.zeros(3)], [tau2])
        sched = ms.vp_schedule(20)
        n = 4  # late step, alpha close to 1
        out = ms.denoise(prior, [0.1, -0.2, 0.3], sched.alpha[n], sched.sigma[n])
        ratio = ms.rt2_policy(sched, n, "ratio")
        tweedie = ms.rt2_policy(sched, n, "tweedie_scalar", out.scalar_var)
        assert abs(tweedie - ratio) / ratio < 0.1

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="rt2"):
            ms.rt2_policy(ms.vp_schedule(10), 5, "bogus")


class TestRun:
    def test_unconditional_point_mass_returns_mean(self):
        mu = np.array([0.3, 0.7, 0.1])
        prior = ms.GaussianMixturePrior([1.0], [mu], [1e-14])
        rec = ms.run(
            ms.build_identity(1, 1, 3),
            None,
            prior,
            ms.vp_schedule(20),
            ms.MasConfig(method="unconditional"),
            ms.NoisePolicy.noise_free(),
            np.random.default_rng(0),
        )
        assert np.abs(rec.final_x0 - mu).max() <= 1e-6

    def test_noise_free_limit_is_data_consistent(self):
        rng = np.random.default_rng(40)
        H = rng.standard_normal((3, 6))
        op = ms.build_dense(H)
        prior = toy_prior(rng, d=6)
        x0 = ms.sample_prior(prior, rng)
        y = op.apply(x0)
        rec = ms.run(
            op, y, prior, ms.vp_schedule(15),
            ms.MasConfig(method="mas", eta1=0.0, eta2=0.0),
            ms.NoisePolicy.noise_free(), np.random.default_rng(1),
        )
        assert np.linalg.norm(op.apply(rec.final_x0) - y) <= 1e-6

    def test_fixed_seed_is_bit_identical(self):
        rng = np.random.default_rng(41)
        op = ms.build_identity(1, 2, 3)
        prior = toy_prior(rng, d=6)
        y = ms.sample_prior(prior, rng)
        cfg = ms.MasConfig(method="mas", eta1=0.1, eta2=0.2)
        pol = ms.NoisePolicy.known_gaussian(0.05)
        recs = [
            ms.run(op, y, prior, ms.vp_schedule(12), cfg, pol,
                   np.random.default_rng(1234), seed=1234)
            for _ in range(2)
        ]
        assert np.array_equal(recs[0].final_x0, recs[1].final_x0)
        assert recs[0].config_hash == recs[1].config_hash
        for a, b in zip(recs[0].trajectory, recs[1].trajectory):
            assert (a.n, a.eta1, a.eta2, a.residual, a.prior_residual) == (
                b.n, b.eta1, b.eta2, b.residual, b.prior_residual)

    def test_trajectory_length_and_lambda_summary(self):
        rng = np.random.default_rng(42)
        op = ms.build_block_downsample(1, 4, 4, 2)
        prior = toy_prior(rng, d=16)
        y = op.apply(ms.sample_prior(prior, rng))
        rec = ms.run(
            op, y, prior, ms.vp_schedule(8),
            ms.MasConfig(method="mas", eta1=0.0, eta2=0.1),
            ms.NoisePolicy.known_gaussian(0.05), np.random.default_rng(2),
        )
        assert len(rec.trajectory) == 8
        assert all(r.lambda_min is not None for r in rec.trajectory)
        # noisy steps damp partially; the deterministic final step (c_t = 0)
        # must suppress the leaking measurement term entirely
        assert all(0 < r.lambda_min <= 1.0 for r in rec.trajectory[:-1])
        assert rec.trajectory[-1].lambda_min == 0.0

    def test_record_states_stores_iterates(self):
        rng = np.random.default_rng(43)
        op = ms.build_identity(1, 2, 2)
        prior = toy_prior(rng, d=4)
        y = ms.sample_prior(prior, rng)
        rec = ms.run(op, y, prior, ms.vp_schedule(5), ms.MasConfig(method="ddnm"),
                     ms.NoisePolicy.noise_free(), np.random.default_rng(3),
                     record_states=True)
        assert all(r.x0_star is not None and r.x0_star.size == 4 for r in rec.trajectory)

    def test_non_finite_measurement_aborts_with_step_index(self):
        rng = np.random.default_rng(44)
        op = ms.build_identity(1, 2, 2)
        prior = toy_prior(rng, d=4)
        y = np.array([np.inf, 0.0, 0.0, 0.0])
        with pytest.raises(SolverAbortError, match="step 10"):
            ms.run(op, y, prior, ms.vp_schedule(10),
                   ms.MasConfig(method="mas", eta1=0.0, eta2=0.1),
                   ms.NoisePolicy.noise_free(), np.random.default_rng(4))

    def test_method_policy_compatibility(self):
        rng = np.random.default_rng(45)
        op = ms.build_identity(1, 2, 2)
        prior = toy_prior(rng, d=4)
        y = np.zeros(4)
        with pytest.raises(ConfigError, match="measurement"):
            ms.run(op, None, prior, ms.vp_schedule(5), ms.MasConfig(method="mas"),
                   ms.NoisePolicy.noise_free(), np.random.default_rng(0))
        with pytest.raises(ConfigError, match="tmpd"):
            ms.run(op, y, prior, ms.vp_schedule(5), ms.MasConfig(method="tmpd_scalar"),
                   ms.NoisePolicy.unknown(0.5), np.random.default_rng(0))

    def test_unknown_policy_records_schedule(self):
        rng = np.random.default_rng(46)
        op = ms.build_identity(1, 2, 2)
        prior = toy_prior(rng, d=4)
        y = ms.sample_prior(prior, rng)
        rec = ms.run(op, y, prior, ms.vp_schedule(6), ms.MasConfig(method="mas"),
                     ms.NoisePolicy.unknown(0.5), np.random.default_rng(5))
        etas = [r.eta2 for r in rec.trajectory]
        # early steps have small eta2; the deterministic final step suppresses fully
        assert etas[0] < etas[-2]
        assert np.isinf(etas[-1])
