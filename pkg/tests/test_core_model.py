import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arcticspill.core_model import (ModelConfig, ResourceType, Scenario, SpillEvent, Station, Weights,
                                    build_instance, compute_prep_time, compute_transfer_costs,
                                    compute_travel_times, distance_matrix, haversine_km,
                                    normalize_coverage_terms, transfer_costs_from_distance)
from arcticspill.errors import (DimensionMismatch, EmptySet, NegativeParameter, ProbabilityMassError,
                                ValidationError)

DEADHORSE = (70.1952, -148.4651)
ALPINE = (70.3420, -150.9470)

lat = st.floats(-89.0, 89.0)
lon = st.floats(-179.0, 179.0)


def vincenty_sphere(a, b, radius=6371.0):
    """Spherical distance by the Vincenty atan2 form, written independently of the package."""
    p1, l1 = np.radians(a)
    p2, l2 = np.radians(b)
    dl = l2 - l1
    num = np.hypot(np.cos(p2) * np.sin(dl), np.cos(p1) * np.sin(p2) - np.sin(p1) * np.cos(p2) * np.cos(dl))
    den = np.sin(p1) * np.sin(p2) + np.cos(p1) * np.cos(p2) * np.cos(dl)
    return radius * np.arctan2(num, den)


class TestHaversine:
    def test_identity(self):
        assert haversine_km(DEADHORSE, DEADHORSE) == 0.0

    def test_one_degree_on_equator(self):
        assert haversine_km((0, 0), (0, 1)) == pytest.approx(111.195, abs=0.01)
        assert haversine_km((0, 0), (0, 1)) == pytest.approx(6371 * math.pi / 180, abs=1e-9)

    def test_deadhorse_alpine(self):
        assert haversine_km(DEADHORSE, ALPINE) == pytest.approx(vincenty_sphere(DEADHORSE, ALPINE), abs=0.1)

    @given(lat, lon, lat, lon)
    def test_symmetric_nonnegative(self, a1, o1, a2, o2):
        d = haversine_km((a1, o1), (a2, o2))
        assert d >= 0
        assert d == pytest.approx(haversine_km((a2, o2), (a1, o1)), abs=1e-9)

    @given(lat, lon, lat, lon)
    def test_matches_independent_formula(self, a1, o1, a2, o2):
        assert haversine_km((a1, o1), (a2, o2)) == pytest.approx(vincenty_sphere((a1, o1), (a2, o2)), abs=1e-3)

    def test_equirectangular_close_at_short_range(self):
        d = distance_matrix([DEADHORSE], [ALPINE], "equirectangular")[0, 0]
        assert d == pytest.approx(haversine_km(DEADHORSE, ALPINE), rel=1e-3)


class TestTransferCosts:
    def test_alpha_examples(self):
        assert transfer_costs_from_distance(np.array([[0, 100.0], [100.0, 0]]), 1.723)[0, 1] == pytest.approx(172.3)
        assert transfer_costs_from_distance(np.array([[0, 1.0], [1.0, 0]]), 2.57)[1, 0] == pytest.approx(2.57)

    def test_diagonal_zero_and_symmetric(self):
        sts = [Station(i, f"s{i}", 70 + 0.1 * i, -150 + 0.2 * i, 1.0, [1.0]) for i in range(3)]
        tc = compute_transfer_costs(sts, 1.723)
        assert np.all(np.diag(tc) == 0)
        np.testing.assert_allclose(tc, tc.T)
        assert tc[0, 1] == pytest.approx(1.723 * haversine_km((70, -150), (70.1, -149.8)))

    def test_alpha_must_be_positive(self):
        with pytest.raises(NegativeParameter):
            transfer_costs_from_distance(np.zeros((2, 2)), 0.0)


class TestPrepTime:
    def test_base_only(self):
        assert compute_prep_time(15, [0, 0], [1, 5]) == pytest.approx(0.25)

    def test_one_resource(self):
        assert compute_prep_time(15, [3], [10]) == pytest.approx(0.75)

    def test_three_resources_by_hand(self):
        # 5000 ft of boom in 100 ft setup units, 3 skimmers, 10 dispersant units
        assert compute_prep_time(15, [50, 3, 10], [1, 5, 0.5]) == pytest.approx((15 + 50 + 15 + 5) / 60)
        assert compute_prep_time(15, [50, 3, 10], [1, 5, 0.5]) == pytest.approx(1.4167, abs=1e-4)

    def test_negative_rejected(self):
        with pytest.raises(NegativeParameter):
            compute_prep_time(-1, [0], [0])

    def test_tensor_uses_setup_unit_size(self, bundled):
        boom = bundled.resources[0]
        assert boom.setup_unit_size == 100
        d = bundled.demand[0, 0]
        expected = (15 + d[0] / 100 * 1 + d[1] * 5 + d[2] * 0.5) / 60
        assert bundled.derived.prep_time[0, 0, 0] == pytest.approx(expected)


class TestTravelTimes:
    def test_examples(self):
        s = [Station(0, "s", 0.0, 0.0, 1.0, [1.0])]
        km = 1.85 / (6371 * math.pi / 180)
        spills = [SpillEvent(0, 0.0, km, 1.0, 1.0), SpillEvent(1, 0.0, 10 * km, 1.0, 1.0), SpillEvent(2, 0.0, 0.0, 1.0, 1.0)]
        theta = compute_travel_times(s, spills, 1.85)
        np.testing.assert_allclose(theta[0], [1.0, 10.0, 0.0], atol=1e-9)

    def test_speed_must_be_positive(self):
        with pytest.raises(NegativeParameter):
            compute_travel_times([], [], 0.0)


def _parts(n_o=1, probs=(1.0,)):
    res = [ResourceType(0, "r", 1.0)]
    st_ = [Station(0, "s", 70.0, -150.0, 1.0, [5.0])]
    sp = [SpillEvent(o, 70.01, -150.0, 100.0, 1.0) for o in range(n_o)]
    scs = [Scenario(k, p, np.full(n_o, 100.0), np.ones(n_o), np.ones((n_o, 1))) for k, p in enumerate(probs)]
    return st_, sp, res, scs, Weights.from_k1(0.5, (0.2, 0.3, 0.5)), ModelConfig(1, 24.0)


class TestBuildInstance:
    def test_bundled_dimensions(self, bundled):
        assert (bundled.n_stations, bundled.n_spills, bundled.n_scenarios, bundled.n_resources) == (4, 17, 5, 3)
        assert bundled.n_spills * bundled.n_scenarios == 85

    def test_single_everything(self):
        inst = build_instance(*_parts())
        assert inst.pairs == frozenset({(0, 0)})

    def test_probability_mass(self):
        with pytest.raises(ProbabilityMassError):
            build_instance(*_parts(probs=(0.5, 0.4)))

    def test_mass_tolerance(self):
        build_instance(*_parts(probs=(0.5, 0.5 + 5e-7)))

    def test_empty_sets(self):
        st_, sp, res, scs, w, cfg = _parts()
        with pytest.raises(EmptySet):
            build_instance([], sp, res, scs, w, cfg)
        with pytest.raises(EmptySet):
            build_instance(st_, sp, res, [], w, cfg)

    def test_dimension_mismatch(self):
        st_, sp, res, scs, w, cfg = _parts(n_o=2)
        with pytest.raises(DimensionMismatch):
            build_instance(st_, sp[:1], res, scs, w, cfg)

    def test_negative_parameters(self):
        with pytest.raises(NegativeParameter):
            Station(0, "s", 70, -150, -1.0, [1.0])
        with pytest.raises(NegativeParameter):
            SpillEvent(0, 70, -150, 0.0, 1.0)
        with pytest.raises(NegativeParameter):
            ModelConfig(1, 0.0)

    def test_weights_validation(self):
        with pytest.raises(ValidationError):
            Weights(0.5, 0.5, 0.5, 0.5, 0.5)
        with pytest.raises(ValidationError):
            Weights.from_k1(1.2, (0.2, 0.3, 0.5))

    def test_unreachable_warns(self):
        st_, sp, res, scs, w, _ = _parts()
        with pytest.warns(UserWarning):
            inst = build_instance(st_, sp, res, scs, w, ModelConfig(1, 0.1))
        assert inst.warnings

    def test_radius_rule(self):
        st_, sp, res, scs, w, _ = _parts()
        with pytest.warns(UserWarning):
            inst = build_instance(st_, sp, res, scs, w, ModelConfig(1, 24.0, eligibility_radius=0.5))
        assert inst.pairs == frozenset()


class TestNormalization:
    def _inst(self, vols):
        n = len(vols)
        res = [ResourceType(0, "r", 1.0)]
        st_ = [Station(0, "s", 70.0, -150.0, 1.0, [5.0])]
        sp = [SpillEvent(o, 70.01, -150.0, 1.0, 1.0) for o in range(n)]
        scs = [Scenario(0, 1.0, vols, np.arange(n, dtype=float), np.ones((n, 1)))]
        return build_instance(st_, sp, res, scs, Weights.from_k1(0.5, (0.2, 0.3, 0.5)), ModelConfig(1, 24.0))

    def test_uniform_maps_to_one(self):
        v, _ = normalize_coverage_terms(self._inst([250.0, 250.0, 250.0]))
        np.testing.assert_array_equal(v, 1.0)

    def test_min_max(self):
        v, eta = normalize_coverage_terms(self._inst([100.0, 300.0, 500.0]))
        np.testing.assert_allclose(v[:, 0], [0.0, 0.5, 1.0])
        np.testing.assert_allclose(eta[:, 0], [0.0, 0.5, 1.0])

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(1.0, 1e5), min_size=2, max_size=6))
    def test_monotone_and_bounded(self, vols):
        v, _ = normalize_coverage_terms(self._inst(vols))
        v = v[:, 0]
        assert np.all((0 <= v) & (v <= 1))
        for a in range(len(vols)):
            for b in range(len(vols)):
                if vols[a] > vols[b]:
                    assert v[a] >= v[b]

    def test_pooled_over_scenarios(self, bundled):
        v, _ = normalize_coverage_terms(bundled)
        assert v.min() == 0.0 and v.max() == 1.0
        assert np.argmax(v) == np.argmax(bundled.volumes)

    def test_sub_instances_keep_scale(self, bundled):
        single = bundled.single_scenario(2)
        np.testing.assert_allclose(normalize_coverage_terms(single)[0][:, 0], normalize_coverage_terms(bundled)[0][:, 2])
