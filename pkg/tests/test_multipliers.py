import math

import numpy as np
import pytest
from scipy.integrate import quad

from rwave.core_grid import Field, make_grid
from rwave.multipliers import (
    BumpSpec,
    LatticeBox,
    coverage,
    dyadic_project,
    dyadic_symbol,
    lp_symbol,
    phi_1d,
    smooth_step,
    unit_bump,
    unit_project,
    unit_symbol,
)


def step_oracle(t, w=0.25):
    """Independent quadrature of the normalized bump integral."""
    bump = lambda s: math.exp(-1.0 / (1.0 - s * s)) if abs(s) < 1 else 0.0
    total = quad(bump, -1, 1, epsabs=1e-14, epsrel=1e-14)[0]
    if t <= -w:
        return 0.0
    if t >= w:
        return 1.0
    return quad(bump, -1, t / w, epsabs=1e-14, epsrel=1e-14)[0] / total


class TestSmoothStep:
    @pytest.mark.parametrize("t", [-0.2, -0.05, 0.01, 0.1, 0.125, 0.24])
    def test_against_quadrature(self, t):
        assert smooth_step(t) == pytest.approx(step_oracle(t), abs=1e-13)

    def test_symmetry(self):
        t = np.linspace(-0.3, 0.3, 101)
        assert np.allclose(smooth_step(-t), 1.0 - smooth_step(t), atol=0, rtol=0)

    def test_bump_spec_validation(self):
        with pytest.raises(ValueError):
            BumpSpec(width=0.6)


class TestUnitBump:
    def test_values(self):
        assert phi_1d(0.0) == 1.0
        assert phi_1d(0.5) == pytest.approx(0.5, abs=1e-15)
        assert phi_1d(0.75) == 0.0
        assert unit_bump([1.6, 0, 0, 0]) == 0.0
        assert unit_bump([0.0, 0.0]) == 1.0

    def test_one_dimensional_partition(self):
        t = np.linspace(-3, 3, 2001)
        total = sum(phi_1d(t - k) for k in range(-5, 6))
        assert np.max(np.abs(total - 1.0)) == 0.0

    @pytest.mark.parametrize("dim,n,P", [(2, 32, 2), (3, 18, 3), (4, 8, 2)])
    def test_grid_partition(self, dim, n, P):
        g = make_grid(dim, n, P)
        cov = coverage(g, LatticeBox.cube(dim, g.max_lattice + 1))
        assert np.max(np.abs(cov - 1.0)) <= 1e-12

    def test_single_mode_at_refine_one(self):
        g = make_grid(2, 16, 1)
        s = unit_symbol(g, (2, -1))
        assert np.count_nonzero(s) == 1
        assert s[2, -1] == 1.0

    def test_projection_oracle(self, rng):
        """P_k f against the direct sum over lattice-adjacent modes."""
        g = make_grid(1, 32, 2)
        f = Field(g, rng.standard_normal(g.shape))
        pk = unit_project(f, (3,)).spectral().values
        expected = np.zeros(g.shape, dtype=complex)
        spec = f.spectral().values
        for m, xi in enumerate(g.freqs_1d):
            if abs(xi - 3) < 1:
                expected[m] = (1.0 if xi == 3 else 0.5) * spec[m]
        assert np.allclose(pk, expected, atol=1e-15)

    def test_lattice_outside_box(self):
        g = make_grid(2, 16, 2)
        with pytest.raises(ValueError, match=r"\[-3, 3\]"):
            unit_project(Field.zeros(g), (4, 0))

    def test_lattice_dimension_mismatch(self):
        g = make_grid(2, 16, 2)
        with pytest.raises(ValueError):
            unit_project(Field.zeros(g), (1, 0, 0))


class TestLatticeBox:
    def test_shape_and_points(self):
        b = LatticeBox((-1, 0), (1, 2))
        assert b.shape == (3, 3)
        assert b.points().shape == (9, 2)
        assert not b.symmetric
        assert LatticeBox.cube(3, 2).symmetric

    def test_json(self):
        b = LatticeBox((-2, -1), (2, 1))
        assert LatticeBox.from_json(b.to_json()) == b

    def test_empty(self):
        with pytest.raises(ValueError):
            LatticeBox((1,), (0,))


class TestDyadic:
    def test_radial_profile(self):
        assert lp_symbol(0.5) == 1.0
        assert lp_symbol(1.0) == 1.0
        assert lp_symbol(2.0) == 0.0
        assert 0 < lp_symbol(1.5) < 1

    def test_le_plus_gt(self):
        g = make_grid(3, 16, 2)
        assert np.array_equal(dyadic_symbol(g, 2, "le") + dyadic_symbol(g, 2, "gt"), np.ones(g.shape))

    def test_telescoping(self):
        g = make_grid(2, 64, 2)
        total = dyadic_symbol(g, 1, "le")
        for N in (2, 4, 8, 16):
            total = total + dyadic_symbol(g, N, "at")
        assert np.allclose(total, dyadic_symbol(g, 16, "le"), atol=1e-15)

    def test_projection_removes_low_modes(self, rng):
        g = make_grid(2, 32, 2)
        f = Field(g, rng.standard_normal(g.shape))
        hi = dyadic_project(f, 4, "gt").spectral().values
        assert np.max(np.abs(hi[g.kmag <= 4])) <= 1e-14

    @pytest.mark.parametrize("N", [3, 0, -2, 1.5])
    def test_power_of_two_required(self, N):
        with pytest.raises(ValueError):
            dyadic_symbol(make_grid(1, 8, 1), N, "le")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            dyadic_symbol(make_grid(1, 8, 1), 2, "mid")


class TestSpecExamples:
    def test_continuous_partition_of_unity(self, rng):
        xi = rng.uniform(-5, 5, size=(1000, 4))
        base = np.floor(xi).astype(int)
        offsets = np.stack(np.meshgrid(*[np.arange(-1, 3)] * 4, indexing="ij"), -1).reshape(-1, 4)
        total = sum(unit_bump(xi - (base + o)) for o in offsets)
        assert np.max(np.abs(total - 1)) <= 1e-12

    def test_narrow_transition_support(self):
        spec = BumpSpec(width=0.1)
        assert unit_bump(np.array([1.6, 0, 0, 0]), spec) == 0.0
        assert unit_bump(np.array([0.39, 0, 0, 0]), spec) == pytest.approx(1.0)

    def test_far_frequency_projects_to_zero(self):
        g = make_grid(2, 32, 2)
        x = g.axis_view(g.coords_1d, 0)
        f = Field(g, np.broadcast_to(np.cos(x), g.shape).copy())
        assert np.max(np.abs(unit_project(f, (5, 0)).values)) <= 1e-14
        assert np.max(np.abs(unit_project(f, (1, 0)).values)) > 0.4

    def test_sum_of_projections_reconstructs(self, rng):
        g = make_grid(2, 32, 2)
        f = dyadic_project(Field(g, rng.standard_normal(g.shape)), 2, "le")
        total = sum(unit_project(f, k).values for k in LatticeBox.for_grid(g).points())
        assert np.max(np.abs(total - f.values)) <= 1e-12 * np.max(np.abs(f.values))

    def test_low_pass_above_nyquist_is_identity(self, rng):
        g = make_grid(3, 16, 2)
        f = Field(g, rng.standard_normal(g.shape))
        N = 2 ** math.ceil(math.log2(2 * np.max(g.kmag)))
        assert np.max(np.abs(dyadic_project(f, N, "le").values - f.values)) <= 1e-13

    @pytest.mark.parametrize("k", [(0, 0), (3, -2), (-7, 7), (6, 1)])
    def test_bernstein_bound(self, rng, k):
        """sup |P_k f| <= (#lattice points in the support / vol)^(1/2) ||P_k f||_2."""
        g = make_grid(2, 32, 2)
        f = Field(g, rng.standard_normal(g.shape))
        pk = unit_project(f, k)
        count = np.count_nonzero(unit_symbol(g, k))
        bound = math.sqrt(count / g.volume)
        l2 = math.sqrt(np.sum(np.abs(pk.values) ** 2) * g.cell_volume)
        assert np.max(np.abs(pk.values)) <= bound * l2
        assert count <= (2 * 0.75 * 2 + 1) ** 2

    def test_conjugation_symmetry(self, rng):
        g = make_grid(2, 16, 2)
        f = Field(g, rng.standard_normal(g.shape))
        for k in [(1, 0), (2, -3), (-1, 3)]:
            minus = tuple(-c for c in k)
            assert np.max(np.abs(np.conj(unit_project(f, k).values) - unit_project(f, minus).values)) <= 1e-12

    def test_spectral_locality(self, rng):
        g = make_grid(2, 32, 2)
        f = Field(g, rng.standard_normal(g.shape)).spectral()
        k = np.array([2, -1])
        spec = unit_project(f, k).values
        xi = np.stack(np.meshgrid(g.freqs_1d, g.freqs_1d, indexing="ij"), -1)
        outside = np.max(np.abs(xi - k), axis=-1) >= 0.75
        assert np.all(spec[outside] == 0)

    def test_unit_bernstein_constant_has_no_trend(self):
        """50 random k; the sup/L2 ratio (averaged over 8 fields) has no growth in |k|."""
        rng = np.random.default_rng(0)
        g = make_grid(2, 64, 2)
        M = g.max_lattice
        fields = [Field(g, rng.standard_normal(g.shape)) for _ in range(8)]
        ks = []
        while len(ks) < 50:
            k = tuple(int(c) for c in rng.integers(-M, M + 1, 2))
            if k != (0, 0):
                ks.append(k)
        log_ratio = []
        for k in ks:
            ratios = []
            for f in fields:
                p = np.abs(unit_project(f, k).values)
                ratios.append(p.max() / math.sqrt(np.sum(p ** 2) * g.cell_volume))
            log_ratio.append(math.log(np.mean(ratios)))
        slope = np.polyfit(np.log(np.linalg.norm(ks, axis=1)), log_ratio, 1)[0]
        assert abs(slope) <= 0.05

    def test_dyadic_bernstein(self, rng):
        """||P_N f||_4 <= C N^(d/4) ||P_N f||_2 with one constant across N."""
        g = make_grid(2, 64, 2)
        ratios = []
        for _ in range(5):
            f = Field(g, rng.standard_normal(g.shape))
            for N in (1, 2, 4, 8):
                p = np.abs(dyadic_project(f, N, "at").values)
                l4 = (np.sum(p ** 4) * g.cell_volume) ** 0.25
                l2 = math.sqrt(np.sum(p ** 2) * g.cell_volume)
                ratios.append((N, l4 / (N ** 0.5 * l2)))
        C = max(r for _, r in ratios)
        per_N = [max(r for n, r in ratios if n == N) for N in (1, 2, 4, 8)]
        assert C < 1.0
        # no growth beyond N^(d/4): the normalized ratio does not increase with N
        assert np.polyfit(np.log2([1, 2, 4, 8]), np.log2(per_N), 1)[0] <= 0.05
