import math

import numpy as np
import pytest

from naviseg import (AllocationConfig, CameraRig, Partition, Viewpoint,
                     allocate_heuristic, allocate_s0, dedup_against_memory,
                     equidistant_partition, make_popularity, nearest_camera,
                     render_reference_for, segment_cost, solve_optimal,
                     synthesize_rate_table)
from naviseg.partition import PartitionObjectiveParams


@pytest.fixture
def rig450():
    return CameraRig.linear(450)


@pytest.fixture
def table450():
    return synthesize_rate_table(450, "random", (80000.0, 16000.0, 0.3), seed=7)


class TestAllocateS0:
    def test_degenerate_ball_single_segment(self, rig450, table450):
        # segment holding view 100 spans 95..110
        part = Partition((94, 110, 450))
        cfg = AllocationConfig(t_star=0.0, delta=5.0)
        decision = allocate_s0(Viewpoint(100.0), part, rig450, cfg, table450)
        assert decision.selected == (2,)
        assert decision.transmitted_bits == segment_cost(table450, 95, 110)

    def test_wide_ball_over_equidistant(self, rig450, table450):
        # ball spans views 20..180 over 8 equal segments of 450
        part = equidistant_partition(450, 8)
        cfg = AllocationConfig(t_star=4.0, delta=20.0)
        decision = allocate_s0(Viewpoint(100.0), part, rig450, cfg, table450)
        assert decision.selected == (1, 2, 3, 4)

    def test_domain_covering_ball_selects_all(self, rig450, table450):
        part = equidistant_partition(450, 8)
        cfg = AllocationConfig(t_star=30.0, delta=20.0)
        decision = allocate_s0(Viewpoint(225.0), part, rig450, cfg, table450)
        assert decision.selected == tuple(range(1, 9))

    def test_bits_sum_segment_costs(self, rig450, table450):
        part = equidistant_partition(450, 10)
        cfg = AllocationConfig(t_star=2.0, delta=20.0)
        decision = allocate_s0(Viewpoint(77.3), part, rig450, cfg, table450)
        expected = sum(segment_cost(table450, *part.segment_views(k))
                       for k in decision.selected)
        assert decision.transmitted_bits == pytest.approx(expected)


class TestAllocateHeuristic:
    def test_t_s_zero_single_sample(self, rig450, table450):
        part = equidistant_partition(450, 8)
        cfg = AllocationConfig(t_star=4.0, delta=20.0, t_s=0.0)
        r = Viewpoint(123.7)
        decision = allocate_heuristic(r, part, rig450, cfg, table450)
        assert decision.selected == (part.segment_of_view(nearest_camera(r, rig450)),)

    def test_dense_t_star_matches_s0(self, rig450, table450):
        part = solve_optimal(PartitionObjectiveParams(
            mu=0.05, g=0.6, popularity=make_popularity("center", 450),
            table=table450), 450)
        rng = np.random.default_rng(21)
        for _ in range(300):
            ts = float(rng.choice([0.5, 1.0, 2.0, 4.0]))
            delta = float(rng.choice([0.0, 2.0, 10.0, 20.0]))
            cfg = AllocationConfig(t_star=ts, delta=delta)
            r = Viewpoint(float(rng.uniform(1, 450)))
            s0 = allocate_s0(r, part, rig450, cfg, table450)
            heur = allocate_heuristic(r, part, rig450, cfg, table450)
            assert heur.selected == s0.selected

    def test_half_radius_is_subset(self, rig450, table450):
        part = equidistant_partition(450, 20)
        rng = np.random.default_rng(22)
        for _ in range(100):
            r = Viewpoint(float(rng.uniform(1, 450)))
            full = AllocationConfig(t_star=4.0, delta=20.0)
            half = AllocationConfig(t_star=4.0, delta=20.0, t_s=2.0)
            s0 = allocate_s0(r, part, rig450, full, table450)
            heur = allocate_heuristic(r, part, rig450, half, table450)
            assert set(heur.selected) <= set(s0.selected)

    def test_monotone_in_t_s(self, rig450, table450):
        part = equidistant_partition(450, 20)
        rng = np.random.default_rng(23)
        for _ in range(50):
            r = Viewpoint(float(rng.uniform(1, 450)))
            previous = None
            prev_bits = -1.0
            for t_s in [0.0, 1.0, 2.0, 3.0, 4.0]:
                cfg = AllocationConfig(t_star=4.0, delta=10.0, t_s=t_s)
                d = allocate_heuristic(r, part, rig450, cfg, table450)
                if previous is not None:
                    assert set(previous) <= set(d.selected)
                    assert d.transmitted_bits >= prev_bits
                previous, prev_bits = d.selected, d.transmitted_bits

    def test_rejects_t_s_above_t_star(self):
        with pytest.raises(ValueError):
            AllocationConfig(t_star=2.0, delta=1.0, t_s=3.0)

    def test_default_sample_count(self):
        cfg = AllocationConfig(t_star=4.0, delta=20.0)
        assert cfg.effective_samples() == int(math.ceil(2 * 80.0)) + 1


class TestDedup:
    def test_empty_history_no_change(self, rig450, table450):
        part = equidistant_partition(450, 8)
        cfg = AllocationConfig(t_star=4.0, delta=10.0)
        d = allocate_s0(Viewpoint(100.0), part, rig450, cfg, table450)
        after = dedup_against_memory(d, set())
        assert after.selected == d.selected
        assert after.transmitted_bits == d.transmitted_bits

    def test_superset_history_empties_transmission(self, rig450, table450):
        part = equidistant_partition(450, 8)
        cfg = AllocationConfig(t_star=4.0, delta=10.0)
        d = allocate_s0(Viewpoint(100.0), part, rig450, cfg, table450)
        after = dedup_against_memory(d, set(range(1, 9)))
        assert after.selected == ()
        assert after.transmitted_bits == 0.0

    def test_set_difference(self, rig450, table450):
        part = equidistant_partition(450, 8)
        cfg = AllocationConfig(t_star=4.0, delta=10.0)
        d = allocate_s0(Viewpoint(100.0), part, rig450, cfg, table450)
        assert d.selected == (2, 3)
        after = dedup_against_memory(d, {2})
        assert after.selected == (3,)
        assert after.transmitted_bits == pytest.approx(
            d.transmitted_bits - segment_cost(table450, *part.segment_views(2)))


class TestRenderReference:
    def test_nearest_transmitted_is_nearest_camera(self, rig450):
        r = Viewpoint(100.2)
        assert render_reference_for(r, range(90, 111)) == 100

    def test_boundary(self):
        assert render_reference_for(Viewpoint(50.0), range(1, 11)) == 10

    def test_tie_to_lower(self):
        assert render_reference_for(Viewpoint(5.0), [4, 6]) == 4

    def test_against_linear_scan(self):
        rng = np.random.default_rng(24)
        for _ in range(300):
            views = np.unique(rng.integers(1, 200, size=rng.integers(1, 30)))
            s = float(rng.uniform(1, 200))
            got = render_reference_for(Viewpoint(s), views)
            dists = np.abs(views - s)
            best = views[dists == dists.min()].min()
            assert got == best

    def test_empty_is_starvation_error(self):
        with pytest.raises(ValueError, match="starvation"):
            render_reference_for(Viewpoint(5.0), [])
