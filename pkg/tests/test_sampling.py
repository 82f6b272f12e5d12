"""Tests for the simulator's stochastic building blocks."""

import math

import numpy as np
import pytest

from demandlab.simulation import sampling
from demandlab.simulation.config import (
    ConfigError,
    CyclicalParams,
    ExternalContext,
    LeadTimeModel,
    PlatformParams,
    PriceModel,
    SimConfig,
    default_config,
)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestCyclicalFactor:
    def test_zero_amplitude_is_flat(self):
        params = CyclicalParams(amplitude=0.0, baseline=1.0)
        assert all(sampling.cyclical_factor(s, params) == 1.0 for s in range(5))

    def test_sine_maximum_hits_baseline_plus_amplitude(self):
        # pick phase so the sine argument is exactly pi/2 at slot 0
        params = CyclicalParams(amplitude=0.475, period=5, phase_shift=math.pi / 2,
                                baseline=0.525)
        assert sampling.cyclical_factor(0, params) == pytest.approx(1.0)

    def test_default_slot_zero(self):
        value = sampling.cyclical_factor(0, CyclicalParams())
        assert value == pytest.approx(0.475 * math.sin(1.5) + 0.525)
        assert value == pytest.approx(0.9989, abs=1e-4)

    def test_range_bound(self):
        params = CyclicalParams()
        for slot in range(5):
            value = sampling.cyclical_factor(slot, params)
            assert params.baseline - params.amplitude <= value
            assert value <= params.baseline + params.amplitude


class TestAmplitudeFromVolumes:
    # the published peak/off-peak order volumes for the two platforms
    @pytest.mark.parametrize("peak,offpeak", [(285_000, 14_280), (127_680, 6_360)])
    def test_published_volume_pairs(self, peak, offpeak):
        amplitude, baseline = sampling.amplitude_from_volumes(peak, offpeak)
        assert round(amplitude, 3) == 0.475
        assert round(baseline, 3) == 0.525
        assert amplitude + baseline == pytest.approx(1.0)

    def test_flat_demand(self):
        assert sampling.amplitude_from_volumes(100, 100) == (0.0, 1.0)

    def test_rejects_zero_peak(self):
        with pytest.raises(ValueError):
            sampling.amplitude_from_volumes(0, 0)

    def test_rejects_offpeak_above_peak(self):
        with pytest.raises(ValueError):
            sampling.amplitude_from_volumes(10, 20)


class TestSeasonalMultiplier:
    def test_all_unit_branches(self):
        ctx = ExternalContext("Evening", "Clear", False, "None", "General")
        periods = dict(sampling.DEFAULT_SLOT_PERIODS)
        periods["Evening"] = "standard"
        # standard time-of-day range is (1.0, 1.2); force its lower edge
        class Lo:
            def uniform(self, lo, hi):
                return lo
        assert sampling.seasonal_multiplier(ctx, Lo(), periods) == 1.0

    def test_product_of_range_maxima(self):
        ctx = ExternalContext("Morning", "Extreme", True, "High", "Loyal")
        class Hi:
            def uniform(self, lo, hi):
                return hi
        value = sampling.seasonal_multiplier(ctx, Hi())
        assert value == pytest.approx(1.5 * 1.6 * 1.5 * 1.2)
        assert value == pytest.approx(4.32)

    def test_interval_bounds_over_random_contexts(self):
        gen = rng(42)
        slots = list(sampling.DEFAULT_SLOT_PERIODS)
        for _ in range(2000):
            ctx = ExternalContext(
                time_slot=slots[gen.integers(len(slots))],
                weather=("Clear", "Mild", "Extreme")[gen.integers(3)],
                holiday=bool(gen.integers(2)),
                event_importance="None",
                customer_segment=("Mismatched", "General", "Loyal")[gen.integers(3)],
            )
            ctx.event_importance = "High" if ctx.holiday else "None"
            value = sampling.seasonal_multiplier(ctx, gen)
            assert 0.56 <= value <= 4.32


class TestLognormal:
    def test_moment_match_published_values(self):
        log_mu, log_sigma = sampling.lognormal_params_from_moments(30, 10)
        assert log_mu == pytest.approx(3.35, abs=0.01)
        assert log_sigma == pytest.approx(0.32, abs=0.01)

    def test_round_trip(self):
        log_mu, log_sigma = sampling.lognormal_params_from_moments(50, 20)
        mean, sd = sampling.lognormal_moments(log_mu, log_sigma)
        assert mean == pytest.approx(50, abs=1e-9)
        assert sd == pytest.approx(20, abs=1e-9)

    def test_zero_variance_limit(self):
        log_mu, log_sigma = sampling.lognormal_params_from_moments(30, 1e-12)
        assert log_mu == pytest.approx(math.log(30), abs=1e-9)
        assert log_sigma == pytest.approx(0.0, abs=1e-6)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            sampling.lognormal_params_from_moments(-1, 5)
        with pytest.raises(ValueError):
            sampling.lognormal_params_from_moments(30, 0)

    def test_prep_time_median(self):
        model = LeadTimeModel(prep_log_sigma=1e-12)
        draws = [sampling.sample_prep_time(model, rng(i)) for i in range(50)]
        assert np.allclose(draws, math.exp(3.35), rtol=1e-6)

    def test_prep_time_moments(self):
        model = LeadTimeModel()
        gen = rng(7)
        draws = np.array([sampling.sample_prep_time(model, gen) for _ in range(100_000)])
        assert 29 <= draws.mean() <= 31
        assert 9 <= draws.std() <= 11


class TestDeliveryTime:
    def test_band_membership(self):
        model = LeadTimeModel()
        gen = rng(1)
        for _ in range(200):
            assert 15 <= sampling.sample_delivery_time(3, model, gen) <= 20
            assert 30 <= sampling.sample_delivery_time(7.5, model, gen) <= 35
            assert 40 <= sampling.sample_delivery_time(12, model, gen) <= 45

    def test_degenerate_band(self):
        from demandlab.simulation.config import DistanceBand
        model = LeadTimeModel(distance_bands=[DistanceBand(0, 100, 25, 25 + 1e-12)])
        assert sampling.sample_delivery_time(50, model, rng(0)) == pytest.approx(25)

    def test_distance_outside_bands(self):
        model = LeadTimeModel()
        with pytest.raises(ConfigError):
            sampling.sample_delivery_time(-2, model, rng(0))


class TestInterarrival:
    def test_mean_matches_rate(self):
        gen = rng(11)
        draws = np.array([sampling.sample_interarrival(5.0, gen) for _ in range(100_000)])
        assert abs(draws.mean() - 0.2) <= 0.004

    def test_survival_probability(self):
        gen = rng(12)
        lam = 2.5
        draws = np.array([sampling.sample_interarrival(lam, gen) for _ in range(100_000)])
        empirical = np.mean(draws > 1.0 / lam)
        assert abs(empirical - math.exp(-1.0)) <= 0.01

    def test_high_rate_limit(self):
        gen = rng(13)
        assert sampling.sample_interarrival(1e9, gen) < 1e-6

    def test_rejects_non_positive_rate(self):
        with pytest.raises(ValueError):
            sampling.sample_interarrival(0.0, rng(0))


class TestLeadTime:
    def test_sum(self):
        assert sampling.lead_time(30, 20) == 50

    def test_prep_lower_limit(self):
        assert sampling.lead_time(1e-9, 15) == pytest.approx(15, abs=1e-6)

    def test_monte_carlo_mixture_mean(self):
        # analytic mean: prep 30 plus the distance-weighted delivery mean
        model = LeadTimeModel()
        gen = rng(5)
        lo, hi = model.distance_range_km
        samples = []
        for _ in range(100_000):
            d = gen.uniform(lo, hi)
            samples.append(sampling.sample_prep_time(model, gen)
                           + sampling.sample_delivery_time(d, model, gen))
        width = hi - lo
        expected_delivery = (4 / width) * 17.5 + (5 / width) * 32.5 + (5 / width) * 42.5
        mean, _ = sampling.lognormal_moments(model.prep_log_mu, model.prep_log_sigma)
        assert np.mean(samples) == pytest.approx(mean + expected_delivery, rel=0.01)


class TestPrice:
    def make_model(self, **kw):
        defaults = dict(
            base_prices={"Meal": 200.0},
            category_weights={"Meal": 1.0},
            gst_multiplier=1.05,
            platform_fee={"zomato": 5.0, "swiggy": 5.0},
            base_delivery_fee={"zomato": 20.0, "swiggy": 20.0},
            per_km_rate={"zomato": 6.0, "swiggy": 6.0},
            small_order_threshold=100.0,
            small_order_fee=25.0,
        )
        defaults.update(kw)
        return PriceModel(**defaults)

    def test_direct_substitution(self):
        model = self.make_model()
        assert sampling.price("zomato", "Meal", 4.0, model) == pytest.approx(259.0)

    def test_small_order_branch(self):
        model = self.make_model(base_prices={"Snack": 80.0},
                                category_weights={"Snack": 1.0},
                                gst_multiplier=1.0,
                                platform_fee={"zomato": 0.0, "swiggy": 0.0},
                                base_delivery_fee={"zomato": 0.0, "swiggy": 0.0},
                                per_km_rate={"zomato": 0.0, "swiggy": 0.0})
        assert sampling.price("zomato", "Snack", 3.0, model) == pytest.approx(105.0)

    def test_identity_configuration(self):
        model = self.make_model(gst_multiplier=1.0,
                                platform_fee={"zomato": 0.0, "swiggy": 0.0},
                                base_delivery_fee={"zomato": 0.0, "swiggy": 0.0},
                                per_km_rate={"zomato": 0.0, "swiggy": 0.0},
                                small_order_threshold=0.0)
        assert sampling.price("zomato", "Meal", 9.0, model) == 200.0

    def test_monotone_in_distance(self):
        model = self.make_model()
        prices = [sampling.price("swiggy", "Meal", d, model) for d in (1, 5, 10, 15)]
        assert prices == sorted(prices)

    def test_unknown_category(self):
        with pytest.raises(KeyError):
            sampling.price("zomato", "Sushi", 2.0, self.make_model())


class TestDemand:
    def test_reduces_to_alpha(self):
        cfg = default_config()
        cfg.gamma = cfg.delta = cfg.tau = 0.0
        for platform, alpha in (("zomato", 10_000.0), ("swiggy", 12_000.0)):
            params = PlatformParams(platform, alpha=alpha, beta=0.0)
            value = sampling.demand(params, 300, 280, 40, 45, 1.0, 0.0, cfg)
            assert value == pytest.approx(alpha)

    def test_hand_evaluation(self):
        cfg = default_config()
        cfg.gamma = 0.5
        cfg.tau = 0.5
        cfg.delta = 0.5
        params = PlatformParams("zomato", alpha=10_000.0, beta=1.0)
        value = sampling.demand(params, 300, 300, 40, 40, 1.2, 0.0, cfg)
        assert value == pytest.approx((10_000 - 300 - 20) * 1.2)
        assert value == pytest.approx(11_616.0)

    def test_platform_symmetry(self):
        cfg = default_config()
        a = PlatformParams("zomato", alpha=9_000.0, beta=1.5)
        b = PlatformParams("swiggy", alpha=9_000.0, beta=1.5)
        d1 = sampling.demand(a, 310, 295, 42, 47, 1.1, 5.0, cfg)
        d2 = sampling.demand(b, 295, 310, 47, 42, 1.1, 5.0, cfg)
        d1_swapped = sampling.demand(b, 310, 295, 42, 47, 1.1, 5.0, cfg)
        assert d1 == pytest.approx(d1_swapped)
        assert d1 != pytest.approx(d2)

    def test_clamped_at_zero(self):
        cfg = default_config()
        params = PlatformParams("zomato", alpha=100.0, beta=10.0)
        value, clamped = sampling.demand_with_clamp(params, 500, 500, 40, 40, 1.0, 0.0, cfg)
        assert value == 0.0 and clamped

    def test_noise_variance_passthrough(self):
        # with the multiplier pinned at 1 and every input fixed, demand variance
        # equals the noise variance
        cfg = default_config()
        params = cfg.platform_params["zomato"]
        gen = rng(3)
        eps = gen.normal(cfg.noise_mean, cfg.noise_sd, size=100_000)
        values = np.array([sampling.demand(params, 300, 300, 45, 45, 1.0, e, cfg)
                           for e in eps])
        assert abs(values.var() - cfg.noise_sd**2) <= 0.1 * cfg.noise_sd**2
