import math

import numpy as np
import pytest

from rwave.core_grid import Field, StatePair, make_grid
from rwave.propagator import FreeWave, free_evolve, free_multipliers, half_wave, linear_energy


def gaussian_state(g):
    return StatePair.from_arrays(g, np.exp(-g.radius ** 2), np.exp(-(g.radius / 0.7) ** 2))


class TestMultipliers:
    def test_zero_frequency_limits(self):
        c, sinc, ws = free_multipliers(np.array([0.0, 2.0]), 0.5)
        assert c[0] == 1.0 and sinc[0] == 0.5 and ws[0] == 0.0
        assert sinc[1] == pytest.approx(math.sin(1.0) / 2.0)


class TestFreeEvolve:
    def test_plane_wave(self):
        g = make_grid(2, 16, 2)
        x, y = g.axis_view(g.coords_1d, 0), g.axis_view(g.coords_1d, 1)
        k = (1.5, -2.0)
        w = math.hypot(*k)
        phase = np.broadcast_to(k[0] * x + k[1] * y, g.shape)
        u = StatePair.from_arrays(g, np.cos(phase), np.zeros(g.shape))
        out = free_evolve(u, 0.9)
        assert np.allclose(out.pos.values, np.cos(phase) * math.cos(0.9 * w), atol=1e-13)
        assert np.allclose(out.vel.values, -w * np.cos(phase) * math.sin(0.9 * w), atol=1e-12)

    def test_constant_velocity_grows_linearly(self, g2):
        u = StatePair.from_arrays(g2, np.zeros(g2.shape), np.full(g2.shape, 2.0))
        out = free_evolve(u, 1.5)
        assert np.allclose(out.pos.values, 3.0) and np.allclose(out.vel.values, 2.0)

    def test_group_law(self, g4_small):
        u = gaussian_state(g4_small)
        a = free_evolve(free_evolve(u, 0.4), 1.3)
        b = free_evolve(u, 1.7)
        assert np.allclose(a.pos.values, b.pos.values, atol=1e-12)
        assert a.time == pytest.approx(1.7)

    def test_time_reversal(self, g2):
        u = gaussian_state(g2)
        back = free_evolve(free_evolve(u, 2.3), -2.3)
        assert np.allclose(back.pos.values, u.pos.values, atol=1e-12)
        assert np.allclose(back.vel.values, u.vel.values, atol=1e-12)

    def test_energy_conserved(self, g4_small):
        u = gaussian_state(g4_small)
        e0 = linear_energy(u)
        for t in (0.3, 1.1, 5.0):
            assert linear_energy(free_evolve(u, t)) == pytest.approx(e0, rel=1e-12)

    def test_energy_oracle(self):
        g = make_grid(1, 64, 1)
        x = g.coords_1d
        u = StatePair.from_arrays(g, np.sin(2 * x), np.cos(3 * x))
        # integral over [-pi, pi): 1/2 (4 pi + pi)
        assert linear_energy(u) == pytest.approx(2.5 * math.pi)


class TestHalfWave:
    def test_combines_to_cosine(self, rng):
        g = make_grid(2, 16, 2)
        f = Field(g, rng.standard_normal(g.shape))
        cos_part = 0.5 * (half_wave(f, 0.8).values + half_wave(f, 0.8, -1).values)
        u = free_evolve(StatePair(f, Field.zeros(g)), 0.8)
        assert np.allclose(cos_part.real, u.pos.values, atol=1e-12)

    def test_unitary(self, rng, g2):
        f = Field(g2, rng.standard_normal(g2.shape))
        assert np.linalg.norm(half_wave(f, 3.0).values) == pytest.approx(np.linalg.norm(f.values))

    def test_bad_sign(self, g2):
        with pytest.raises(ValueError):
            half_wave(Field.zeros(g2), 1.0, 0)


class TestFreeWave:
    def test_matches_free_evolve(self, g4_small):
        u = gaussian_state(g4_small)
        fw = FreeWave.from_state(u)
        for t in (0.0, 0.6, 2.2):
            ref = free_evolve(u, t)
            assert np.allclose(fw(t), ref.pos.values, atol=1e-13)
            assert np.allclose(fw.state(t).vel.values, ref.vel.values, atol=1e-13)

    def test_shifted_start(self, g2):
        u = gaussian_state(g2)
        start = StatePair(u.pos, u.vel, 1.0)
        assert np.allclose(FreeWave.from_state(start)(1.5), free_evolve(u, 0.5).pos.values, atol=1e-13)

    def test_scaled(self, g2):
        fw = FreeWave.from_state(gaussian_state(g2))
        assert np.allclose(fw.scaled(0.25)(0.7), 0.25 * fw(0.7), atol=1e-15)
        assert "x0.25" in fw.scaled(0.25).description


class TestSpecExamples:
    def test_zero_time_is_identity(self, rng, g4_small):
        u = StatePair.from_arrays(g4_small, rng.standard_normal(g4_small.shape),
                                  rng.standard_normal(g4_small.shape))
        v = free_evolve(u, 0.0)
        assert np.allclose(v.pos.values, u.pos.values, atol=1e-13, rtol=0)
        assert np.allclose(v.vel.values, u.vel.values, atol=1e-13, rtol=0)

    def test_half_wave_inverse(self, rng, g2):
        f = Field(g2, rng.standard_normal(g2.shape))
        assert np.max(np.abs(half_wave(f, 0.0).values - f.values)) <= 1e-13
        back = half_wave(half_wave(f, 1.7, 1), 1.7, -1)
        assert np.max(np.abs(back.values - f.values)) <= 1e-12

    def test_finite_speed(self):
        """Data below 1e-8 outside radius R stays below 1e-6 outside R + t + 3 dx."""
        g = make_grid(2, 128, 4)
        pos = np.exp(-g.radius ** 2 / 0.36)
        R = g.radius[pos >= 1e-8].max()
        u = StatePair.from_arrays(g, pos)
        for t in (1.0, 3.0, 6.0):
            v = free_evolve(u, t).pos.values.real
            assert np.max(np.abs(v[g.radius > R + t + 3 * g.dx])) <= 1e-6
