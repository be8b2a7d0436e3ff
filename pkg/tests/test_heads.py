import math

import numpy as np
import pytest

from pwsurv.grid import TimeGrid, make_uniform_grid
from pwsurv.heads import (
    HeadKind,
    density_levels_constant,
    density_nodes_linear,
    eval_constant_density,
    eval_constant_hazard,
    eval_linear_density,
    eval_linear_hazard,
    evaluate,
    hazard_levels_constant,
    output_dim,
)

from conftest import ALL_KINDS, random_head_instance

GRID_012 = TimeGrid(np.array([0.0, 1.0, 2.0]))
GRID_01 = TimeGrid(np.array([0.0, 1.0]))
LN2 = math.log(2.0)
LN3 = math.log(3.0)


class TestOutputDim:
    @pytest.mark.parametrize(
        "kind,expected",
        [
            (HeadKind.CONSTANT_DENSITY, 5),
            (HeadKind.LINEAR_DENSITY, 6),
            (HeadKind.CONSTANT_HAZARD, 4),
            (HeadKind.LINEAR_HAZARD, 5),
        ],
    )
    def test_counts_for_four_segments(self, kind, expected):
        assert output_dim(kind, 4) == expected

    def test_from_string_round_trip(self):
        for kind in HeadKind:
            assert HeadKind.from_string(kind.value) is kind
        with pytest.raises(ValueError, match="unknown head"):
            HeadKind.from_string("cubic-spline")


class TestConstantDensity:
    def test_symmetric_levels(self):
        np.testing.assert_allclose(
            density_levels_constant([0.0, 0.0, 0.0], GRID_012), [1 / 3, 1 / 3]
        )

    def test_tail_weight(self):
        # normalizer 3 + 1: single segment level 1/4, tail survival 3/4
        np.testing.assert_allclose(density_levels_constant([0.0, LN3], GRID_01), [0.25])

    def test_hand_evaluated_levels(self):
        # widths 0.5, 0.5: normalizer = 1 + 0.5*2 + 0.5*1 = 2.5
        grid = TimeGrid(np.array([0.0, 0.5, 1.0]))
        levels = density_levels_constant([LN2, 0.0, 0.0], grid)
        np.testing.assert_allclose(levels, [0.8, 0.4])
        tail = eval_constant_density([LN2, 0.0, 0.0], grid, 1.0).survival
        assert np.dot(grid.widths, levels) + tail == pytest.approx(1.0, abs=1e-12)

    def test_survival_starts_at_one(self):
        ev = eval_constant_density([0.0, 0.0, 0.0], GRID_012, 0.0)
        assert ev.survival == 1.0
        assert ev.density == pytest.approx(1 / 3)

    def test_survival_at_horizon(self):
        ev = eval_constant_density([0.0, 0.0, 0.0], GRID_012, 2.0)
        assert ev.survival == pytest.approx(1 / 3, abs=1e-14)

    def test_hand_evaluated_midpoint(self):
        # S(1.5) = 1 - 1/3 - 0.5/3 = 1/2, f = 1/3, h = 2/3
        ev = eval_constant_density([0.0, 0.0, 0.0], GRID_012, 1.5)
        assert ev.survival == pytest.approx(0.5, abs=1e-14)
        assert ev.density == pytest.approx(1 / 3, abs=1e-14)
        assert ev.hazard == pytest.approx(2 / 3, abs=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="outputs"):
            eval_constant_density([0.0, 0.0], GRID_012, 0.5)

    def test_out_of_domain_time(self):
        with pytest.raises(ValueError, match="outside"):
            eval_constant_density([0.0, 0.0, 0.0], GRID_012, 2.5)

    def test_non_finite_outputs_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            eval_constant_density([0.0, np.inf, 0.0], GRID_012, 0.5)


class TestLinearDensity:
    def test_flat_nodes_single_segment(self):
        np.testing.assert_allclose(
            density_nodes_linear([0.0, 0.0, 0.0], GRID_01), [0.5, 0.5]
        )

    def test_flat_nodes_two_segments(self):
        np.testing.assert_allclose(
            density_nodes_linear([0.0, 0.0, 0.0, 0.0], GRID_012), [1 / 3, 1 / 3, 1 / 3]
        )

    def test_hand_evaluated_nodes(self):
        # normalizer = 1 + (1/2)(3 + 1) = 3; trapezoid mass 2/3 + tail 1/3 = 1
        nodes = density_nodes_linear([0.0, LN3, 0.0], GRID_01)
        np.testing.assert_allclose(nodes, [1 / 3, 1.0])
        tail = eval_linear_density([0.0, LN3, 0.0], GRID_01, 1.0).survival
        assert 0.5 * (nodes[0] + nodes[1]) + tail == pytest.approx(1.0, abs=1e-12)

    def test_uniform_density(self):
        ev = eval_linear_density([0.0, 0.0, 0.0], GRID_01, 0.5)
        assert ev.density == pytest.approx(0.5, abs=1e-14)
        assert ev.survival == pytest.approx(0.75, abs=1e-14)

    def test_survival_starts_at_one(self, rng):
        z = rng.uniform(-3, 3, 4)
        assert eval_linear_density(z, GRID_012, 0.0).survival == 1.0

    def test_hand_evaluated_horizon(self):
        ev = eval_linear_density([0.0, LN3, 0.0], GRID_01, 1.0)
        assert ev.survival == pytest.approx(1 / 3, abs=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="outputs"):
            eval_linear_density([0.0, 0.0, 0.0], GRID_012, 0.5)


class TestConstantHazard:
    def test_unit_levels(self):
        np.testing.assert_allclose(hazard_levels_constant([0.0, 0.0]), [1.0, 1.0])

    def test_single_level(self):
        np.testing.assert_allclose(hazard_levels_constant([LN2]), [2.0])

    def test_elementwise_exp(self):
        np.testing.assert_allclose(
            hazard_levels_constant([-1.0, 0.0, 1.0]), [math.exp(-1), 1.0, math.e]
        )

    def test_unit_hazard_is_exponential(self):
        ev = eval_constant_hazard([0.0, 0.0], GRID_012, 1.5)
        assert ev.cumulative_hazard == pytest.approx(1.5, abs=1e-15)
        assert ev.survival == pytest.approx(math.exp(-1.5))

    def test_constant_hazard_two(self):
        ev = eval_constant_hazard([LN2], GRID_01, 0.5)
        assert ev.cumulative_hazard == pytest.approx(1.0, abs=1e-15)
        assert ev.survival == pytest.approx(math.exp(-1.0))
        assert ev.density == pytest.approx(2.0 * math.exp(-1.0))

    def test_hand_summed_cumulative_hazard(self):
        ev = eval_constant_hazard([0.0, LN3], GRID_012, 2.0)
        assert ev.cumulative_hazard == pytest.approx(4.0, abs=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="outputs"):
            eval_constant_hazard([0.0, 0.0, 0.0], GRID_012, 0.5)


class TestLinearHazard:
    def test_flat_interpolation(self, rng):
        for t in rng.uniform(0.0, 1.0, 10):
            ev = eval_linear_hazard([0.0, 0.0], GRID_01, float(t))
            assert ev.hazard == pytest.approx(1.0, abs=1e-15)
            assert ev.cumulative_hazard == pytest.approx(t, abs=1e-14)

    def test_trapezoid_at_horizon(self):
        ev = eval_linear_hazard([0.0, LN3], GRID_01, 1.0)
        assert ev.cumulative_hazard == pytest.approx(2.0, abs=1e-14)

    def test_hand_evaluated_midpoint(self):
        # h(t) = 1 + 2t: h(0.5) = 2, H(0.5) = 0.5 + 0.25 = 0.75
        ev = eval_linear_hazard([0.0, LN3], GRID_01, 0.5)
        assert ev.hazard == pytest.approx(2.0, abs=1e-14)
        assert ev.cumulative_hazard == pytest.approx(0.75, abs=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="outputs"):
            eval_linear_hazard([0.0], GRID_012, 0.5)


# ---------------------------------------------------------------------------
# cross-head invariants on random instances

@pytest.mark.parametrize("kind", ALL_KINDS)
def test_survival_starts_at_one(kind, rng):
    for _ in range(20):
        grid, z = random_head_instance(rng, kind)
        ev = evaluate(kind, z, grid, 0.0)
        assert ev.log_survival == 0.0
        assert ev.cumulative_hazard == 0.0


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_survival_positive_at_horizon(kind, rng):
    for _ in range(20):
        grid, z = random_head_instance(rng, kind)
        assert evaluate(kind, z, grid, grid.t_max).survival > 0.0


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_survival_non_increasing(kind, rng):
    for _ in range(10):
        grid, z = random_head_instance(rng, kind)
        ts = np.linspace(0.0, grid.t_max, 200)
        surv = [evaluate(kind, z, grid, float(t)).survival for t in ts]
        assert all(a >= b - 1e-12 for a, b in zip(surv, surv[1:]))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_cumulative_hazard_is_negative_log_survival(kind, rng):
    for _ in range(20):
        grid, z = random_head_instance(rng, kind)
        t = float(rng.uniform(0, grid.t_max))
        ev = evaluate(kind, z, grid, t)
        assert ev.log_survival <= 0.0
        assert ev.cumulative_hazard == pytest.approx(-ev.log_survival, abs=1e-10)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_density_equals_hazard_times_survival(kind, rng):
    for _ in range(20):
        grid, z = random_head_instance(rng, kind)
        t = float(rng.uniform(0, grid.t_max))
        ev = evaluate(kind, z, grid, t)
        assert ev.hazard * ev.survival == pytest.approx(ev.density, rel=1e-10)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_density_matches_survival_slope(kind, rng):
    # central difference of S at interior non-grid points vs -f
    for _ in range(10):
        grid, z = random_head_instance(rng, kind)
        h = 1e-5 * grid.t_max
        for _ in range(5):
            t = float(rng.uniform(2 * h, grid.t_max - 2 * h))
            if np.min(np.abs(grid.points - t)) < 2 * h:
                continue
            s_plus = evaluate(kind, z, grid, t + h).survival
            s_minus = evaluate(kind, z, grid, t - h).survival
            slope = (s_plus - s_minus) / (2 * h)
            assert -slope == pytest.approx(evaluate(kind, z, grid, t).density, rel=1e-5)


@pytest.mark.parametrize(
    "kind", [HeadKind.LINEAR_DENSITY, HeadKind.LINEAR_HAZARD]
)
def test_linear_heads_continuous(kind, rng):
    # one-sided limit probed one ulp left of each interior grid point
    for _ in range(10):
        grid, z = random_head_instance(rng, kind, n_segments=int(rng.integers(2, 8)))
        for p in grid.points[1:-1]:
            left = evaluate(kind, z, grid, float(np.nextafter(p, 0.0)))
            right = evaluate(kind, z, grid, float(p))
            if kind is HeadKind.LINEAR_DENSITY:
                assert left.density == pytest.approx(right.density, rel=1e-9, abs=1e-12)
            else:
                assert left.hazard == pytest.approx(right.hazard, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize(
    "kind", [HeadKind.CONSTANT_DENSITY, HeadKind.CONSTANT_HAZARD]
)
def test_constant_heads_survival_continuous(kind, rng):
    for _ in range(10):
        grid, z = random_head_instance(rng, kind, n_segments=int(rng.integers(2, 8)))
        for p in grid.points[1:-1]:
            left = evaluate(kind, z, grid, float(np.nextafter(p, 0.0)))
            right = evaluate(kind, z, grid, float(p))
            assert left.survival == pytest.approx(right.survival, abs=1e-12)


def test_linear_hazard_with_equal_nodes_reduces_to_constant(rng):
    for _ in range(10):
        grid, _ = random_head_instance(rng, HeadKind.CONSTANT_HAZARD)
        level = float(rng.uniform(-2, 2))
        z_const = np.full(grid.n_segments, level)
        z_lin = np.full(grid.n_segments + 1, level)
        for t in rng.uniform(0, grid.t_max, 10):
            ev_c = eval_constant_hazard(z_const, grid, float(t))
            ev_l = eval_linear_hazard(z_lin, grid, float(t))
            assert ev_l.hazard == ev_c.hazard
            assert ev_l.cumulative_hazard == pytest.approx(
                ev_c.cumulative_hazard, rel=1e-14, abs=1e-300
            )


def test_linear_density_with_equal_nodes_reduces_to_constant(rng):
    for _ in range(10):
        grid, _ = random_head_instance(rng, HeadKind.CONSTANT_HAZARD)
        n = grid.n_segments
        level = float(rng.uniform(-2, 2))
        tail = float(rng.uniform(-2, 2))
        z_const = np.append(np.full(n, level), tail)
        z_lin = np.append(np.full(n + 1, level), tail)
        for t in rng.uniform(0, grid.t_max, 10):
            s_c = eval_constant_density(z_const, grid, float(t)).survival
            s_l = eval_linear_density(z_lin, grid, float(t)).survival
            assert s_l == pytest.approx(s_c, abs=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_normalization_spot_check(kind, rng):
    # quadrature of f plus the tail survival equals one; the acceptance suite
    # runs the full 100-instance sweep
    from scipy.integrate import quad

    for _ in range(5):
        grid, z = random_head_instance(rng, kind)
        mass, _ = quad(
            lambda t: evaluate(kind, z, grid, t).density,
            0.0,
            grid.t_max,
            points=grid.points.tolist(),
            limit=200,
        )
        tail = evaluate(kind, z, grid, grid.t_max).survival
        assert mass + tail == pytest.approx(1.0, abs=1e-6)
