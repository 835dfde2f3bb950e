import numpy as np
import pytest

from rwave.core_grid import Field, make_grid, sobolev_norm
from rwave.multipliers import LatticeBox, dyadic_project, unit_project
from rwave.randomizer import (
    CoeffSet,
    _encode,
    _gaussian_pair,
    philox4x32,
    positive_half,
    random_symbol,
    randomize,
    sample_coeffs,
    uniforms,
)

# published known-answer vectors for Philox4x32-10
KAT = [
    ([0, 0, 0, 0], [0, 0], [0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8]),
    ([0xFFFFFFFF] * 4, [0xFFFFFFFF] * 2, [0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD]),
    (
        [0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344],
        [0xA4093822, 0x299F31D0],
        [0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1],
    ),
]


class TestPhilox:
    @pytest.mark.parametrize("counter,key,expected", KAT)
    def test_known_answers(self, counter, key, expected):
        assert philox4x32(counter, key).tolist() == expected

    def test_vectorized_matches_scalar(self):
        ctr = np.arange(40, dtype=np.uint64).reshape(10, 4)
        batch = philox4x32(ctr, [7, 9])
        for i in range(10):
            assert np.array_equal(batch[i], philox4x32(ctr[i], [7, 9]))

    def test_uniform_range_and_mean(self):
        ctr = np.zeros((20000, 4), dtype=np.uint64)
        ctr[:, 2] = np.arange(20000)
        u1, u2 = uniforms(5, ctr)
        assert u1.min() >= 0 and u1.max() < 1
        assert abs(u1.mean() - 0.5) < 0.01 and abs(u2.mean() - 0.5) < 0.01


class TestCoefficients:
    def test_conjugate_symmetry_and_real_zero(self):
        box = LatticeBox.cube(3, 2)
        c = sample_coeffs(11, box)
        for k in box.points():
            assert c[tuple(-k)] == np.conj(c[tuple(k)])
        assert c[(0, 0, 0)].imag == 0.0

    def test_deterministic_and_order_free(self):
        small, big = LatticeBox.cube(2, 1), LatticeBox.cube(2, 3)
        a, b = sample_coeffs(4, small), sample_coeffs(4, big)
        for k in small.points():
            assert a[tuple(k)] == b[tuple(k)]
        assert np.array_equal(sample_coeffs(4, big).coeffs, b.coeffs)

    def test_streams_and_samples_differ(self):
        box = LatticeBox.cube(2, 2)
        base = sample_coeffs(1, box).coeffs
        assert not np.allclose(base, sample_coeffs(1, box, stream=1).coeffs)
        assert not np.allclose(base, sample_coeffs(1, box, sample=1).coeffs)
        assert not np.allclose(base, sample_coeffs(2, box).coeffs)

    def test_moments(self):
        box = LatticeBox.cube(1, 2)
        draws = np.array([sample_coeffs(9, box, sample=s).coeffs for s in range(20000)])
        g1, g0 = draws[:, 3], draws[:, 2]
        assert abs(np.mean(np.abs(g1) ** 2) - 1) < 0.04
        assert abs(np.mean(g1.real ** 2) - 0.5) < 0.03
        assert abs(np.mean(g1.real * g1.imag)) < 0.02
        assert abs(np.mean(g0 ** 2) - 1) < 0.04
        assert abs(np.mean(g1)) < 0.03

    def test_asymmetric_box_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            sample_coeffs(0, LatticeBox((-1, 0), (1, 2)))

    def test_json_round_trip(self):
        c = sample_coeffs(3, LatticeBox.cube(2, 2), sample=5, stream=1)
        back = CoeffSet.from_json(c.to_json())
        assert np.array_equal(back.coeffs, c.coeffs)
        assert (back.seed, back.sample, back.stream) == (3, 5, 1)

    def test_positive_half(self):
        pts = LatticeBox.cube(2, 1).points()
        pos = positive_half(pts)
        assert pos.sum() == 4
        assert not positive_half(np.array([[0, 0]]))[0]


class TestRandomize:
    def test_symbol_matches_direct_sum(self, rng):
        g = make_grid(2, 16, 2)
        box = LatticeBox.for_grid(g)
        c = sample_coeffs(6, box)
        f = Field(g, rng.standard_normal(g.shape))
        direct = sum(c[tuple(k)] * unit_project(f, k).spectral().values for k in box.points())
        fast = f.spectral().values * random_symbol(g, c)
        assert np.allclose(fast, direct, atol=1e-13)

    def test_identity_and_zero(self):
        g = make_grid(3, 16, 2)
        f = dyadic_project(Field(g, np.exp(-g.radius ** 2)), 1, "le")
        box = LatticeBox.for_grid(g)
        one = randomize(f, CoeffSet.constant(box, 1.0))
        assert np.max(np.abs(one.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))
        assert not np.any(randomize(f, CoeffSet.constant(box, 0.0)).values)

    def test_real_output(self):
        g = make_grid(2, 16, 2)
        box = LatticeBox.for_grid(g)
        f = dyadic_project(Field(g, np.exp(-g.radius ** 2)), 1, "le")
        for s in range(100):
            out = randomize(f, sample_coeffs(2, box, sample=s), keep_complex=True)
            assert np.max(np.abs(out.values.imag)) <= 1e-12 * np.max(np.abs(out.values.real))

    def test_coverage_warning(self, rng):
        g = make_grid(2, 16, 2)
        f = Field(g, rng.standard_normal(g.shape))
        with pytest.warns(RuntimeWarning, match="coverage"):
            randomize(f, CoeffSet.constant(LatticeBox.for_grid(g)))

    def test_box_outside_grid_rejected(self):
        g = make_grid(2, 16, 2)
        with pytest.raises(ValueError, match="admissible"):
            randomize(Field.zeros(g), CoeffSet.constant(LatticeBox.cube(2, 4)))

    def test_complex_input_rejected(self):
        g = make_grid(2, 16, 2)
        with pytest.raises(ValueError, match="real"):
            randomize(Field(g, 1j * np.ones(g.shape)), CoeffSet.constant(LatticeBox.for_grid(g)))

    def test_mean_square_preserved(self):
        """E|f^w|^2 summed over x equals sum_k ||P_k f||^2 for unit-variance g."""
        g = make_grid(1, 32, 2)
        box = LatticeBox.for_grid(g)
        f = dyadic_project(Field(g, np.exp(-(g.radius / 1.5) ** 2)), 2, "le")
        expected = sum(np.sum(np.abs(unit_project(f, k).values) ** 2) for k in box.points())
        got = np.mean([np.sum(randomize(f, sample_coeffs(1, box, sample=s)).values ** 2) for s in range(4000)])
        assert got == pytest.approx(expected, rel=0.05)


class TestSpecExamples:
    def test_mean_within_clt_band(self):
        """Re g_k has variance 1/2; the mean of 10^5 draws stays within 4 standard errors."""
        box = LatticeBox.cube(1, 1)
        n = 100000
        # the counter of g_1 for sample s is (encoded k, s, stream); draw all samples at once
        ctr = np.zeros((n, 4), dtype=np.uint64)
        ctr[:, :2] = _encode(np.array([[1]]))[0]
        ctr[:, 2] = np.arange(n)
        re = _gaussian_pair(*uniforms(13, ctr))[0] / np.sqrt(2.0)
        for s in (0, 1, n - 1):
            assert re[s] == sample_coeffs(13, box, sample=s).coeffs[2].real
        assert abs(re.mean()) <= 4 * np.sqrt(0.5 / n)
        assert re.var() == pytest.approx(0.5, rel=0.02)

    def test_linearity(self, rng):
        g = make_grid(2, 16, 2)
        box = LatticeBox.for_grid(g)
        c = sample_coeffs(4, box)
        f, h = (dyadic_project(Field(g, rng.standard_normal(g.shape)), 1, "le") for _ in range(2))
        combo = Field(g, 2.5 * f.values.real - 0.7 * h.values.real)
        lhs = randomize(combo, c).values
        rhs = 2.5 * randomize(f, c).values - 0.7 * randomize(h, c).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))

    def test_no_sobolev_gain_in_distribution(self):
        """The median H^s norm of f^w stays within a factor 2 of the projected-norm prediction."""
        g = make_grid(2, 32, 2)
        box = LatticeBox.for_grid(g)
        f = dyadic_project(Field(g, np.exp(-(g.radius / 0.5) ** 2)), 2, "le")
        s = 0.6
        predicted = np.sqrt(sum(sobolev_norm(unit_project(f, k), s) ** 2 for k in box.points()))
        norms = [sobolev_norm(randomize(f, sample_coeffs(8, box, sample=i)), s) for i in range(200)]
        assert 0.5 * predicted <= np.median(norms) <= 2 * predicted
