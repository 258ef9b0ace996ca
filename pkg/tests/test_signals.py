import math

import numpy as np
import pytest

import modfun as mf


class TestMakeGrid:
    def test_three_point_case(self):
        g = mf.make_grid(0, 1, 0.5)
        assert g.n == 3
        assert np.allclose(g.times, [0.0, 0.5, 1.0], atol=1e-15)

    def test_sample_count(self):
        assert mf.make_grid(0, 10, 0.001).n == 10001

    def test_endpoint_exact(self):
        g = mf.make_grid(0, 10, 0.001)
        assert abs(g.times[-1] - 10.0) <= 1e-12 * 10.0

    def test_non_integer_span(self):
        with pytest.raises(mf.NonIntegerSpan):
            mf.make_grid(0, 1, 0.3)

    def test_invalid_range(self):
        with pytest.raises(mf.InvalidRange):
            mf.make_grid(1, 1, 0.1)
        with pytest.raises(mf.InvalidRange):
            mf.make_grid(2, 1, 0.1)
        with pytest.raises(mf.InvalidRange):
            mf.make_grid(0, 1, -0.1)


class TestIntegrate:
    def test_constant_exact(self):
        g = mf.make_grid(0, 1, 0.001)
        f = mf.SampledSignal(g, np.ones(g.n))
        assert mf.integrate(f) == 1.0

    def test_linear(self):
        g = mf.make_grid(0, 1, 0.001)
        f = mf.SampledSignal(g, g.times)
        assert abs(mf.integrate(f) - 0.5) <= 1e-12

    def test_sine_against_antiderivative(self):
        # analytic oracle: integral of sin over [0, pi] = -cos(pi) + cos(0) = 2
        g = mf.make_grid(0, math.pi, math.pi / 3142)
        f = mf.SampledSignal(g, np.sin(g.times))
        assert abs(mf.integrate(f) - 2.0) <= 1e-6

    def test_window_misaligned(self):
        g = mf.make_grid(0, 1, 0.001)
        f = mf.SampledSignal(g, np.ones(g.n))
        with pytest.raises(mf.WindowMisaligned):
            mf.integrate(f, 0.00015, 1.0)

    def test_linearity(self):
        g = mf.make_grid(0, 2, 0.001)
        rng = np.random.default_rng(7)
        fa, fb = rng.standard_normal(g.n), rng.standard_normal(g.n)
        lhs = mf.integrate(mf.SampledSignal(g, 2.5 * fa - 1.25 * fb))
        rhs = 2.5 * mf.integrate(mf.SampledSignal(g, fa)) - 1.25 * mf.integrate(
            mf.SampledSignal(g, fb)
        )
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))

    def test_simpson_hook(self):
        g = mf.make_grid(0, 1, 0.001)
        f = mf.SampledSignal(g, g.times**4)
        trap = mf.integrate(f)
        simp = mf.integrate(f, rule="simpson")
        assert abs(simp - 0.2) < abs(trap - 0.2)


class TestAddNoise:
    def test_zero_level_identity(self):
        g = mf.make_grid(0, 1, 0.01)
        y = mf.SampledSignal(g, np.sin(g.times))
        out = mf.add_noise(y, mf.NoiseSpec(0.0, seed=1))
        assert np.array_equal(out.values, y.values)

    def test_same_seed_identical(self):
        g = mf.make_grid(0, 1, 0.01)
        y = mf.SampledSignal(g, np.sin(g.times))
        a = mf.add_noise(y, mf.NoiseSpec(3.0, seed=42))
        b = mf.add_noise(y, mf.NoiseSpec(3.0, seed=42))
        assert np.array_equal(a.values, b.values)

    def test_level_scaling_exact(self):
        # the realization for level 2L is exactly twice the one for level L
        g = mf.make_grid(0, 1, 0.01)
        y = mf.SampledSignal(g, np.cos(g.times))
        rms = np.sqrt(np.mean(y.values**2))
        unit = np.random.default_rng(9).standard_normal(g.n)
        real1, real2 = (2.0 / 100 * rms) * unit, (4.0 / 100 * rms) * unit
        assert np.array_equal(real2, 2.0 * real1)
        out1 = mf.add_noise(y, mf.NoiseSpec(2.0, seed=9))
        out2 = mf.add_noise(y, mf.NoiseSpec(4.0, seed=9))
        assert np.array_equal(out1.values, y.values + real1)
        assert np.array_equal(out2.values, y.values + real2)

    def test_noise_std_matches_level(self):
        # law-of-large-numbers check: level 1% on RMS-2 signal -> std 0.02
        g = mf.make_grid(0, 100, 0.001)
        y = mf.SampledSignal(g, np.full(g.n, 2.0))
        out = mf.add_noise(y, mf.NoiseSpec(1.0, seed=5))
        std = np.std(out.values - y.values)
        assert abs(std - 0.02) <= 0.05 * 0.02

    def test_negative_level_rejected(self):
        with pytest.raises(mf.InvalidRange):
            mf.NoiseSpec(-1.0, seed=0)


class TestRelativeL2Error:
    def test_identical_is_zero(self):
        g = mf.make_grid(0, 1, 0.01)
        x = mf.SampledSignal(g, np.sin(g.times) + 2)
        assert mf.relative_l2_error(x, x) == 0.0

    def test_proportional_scaling(self):
        g = mf.make_grid(0, 1, 0.01)
        x = mf.SampledSignal(g, np.sin(g.times) + 2)
        xh = mf.SampledSignal(g, 1.01 * x.values)
        assert abs(mf.relative_l2_error(x, xh) - 1.0) <= 1e-9

    def test_offset_sine_analytic(self):
        # ||0.1||_2 / ||sin||_2 over [0, 2pi] = 0.1*sqrt(2pi)/sqrt(pi) = 0.1*sqrt(2)
        g = mf.make_grid(0, 2 * math.pi, 2 * math.pi / 6284)
        x = mf.SampledSignal(g, np.sin(g.times))
        xh = mf.SampledSignal(g, np.sin(g.times) + 0.1)
        assert abs(mf.relative_l2_error(x, xh) - 10 * math.sqrt(2)) <= 0.1

    def test_joint_scaling_invariance(self):
        g = mf.make_grid(0, 1, 0.01)
        x = np.cos(g.times) + 0.5
        xh = x + 0.01 * np.sin(3 * g.times)
        e1 = mf.relative_l2_error(mf.SampledSignal(g, x), mf.SampledSignal(g, xh))
        e2 = mf.relative_l2_error(
            mf.SampledSignal(g, -7.5 * x), mf.SampledSignal(g, -7.5 * xh)
        )
        assert abs(e1 - e2) <= 1e-9 * e1

    def test_zero_reference(self):
        g = mf.make_grid(0, 1, 0.01)
        z = mf.SampledSignal(g, np.zeros(g.n))
        with pytest.raises(mf.ZeroReference):
            mf.relative_l2_error(z, z)


class TestCsv:
    def test_round_trip(self, tmp_path):
        g = mf.make_grid(0, 1, 0.05)
        cols = [("y", np.sin(g.times)), ("x2", np.cos(g.times))]
        path = tmp_path / "sig.csv"
        mf.write_signals_csv(path, g, cols)
        g2, data = mf.read_signals_csv(path)
        assert g2.n == g.n and abs(g2.dt - g.dt) < 1e-12
        assert np.allclose(data["y"], cols[0][1], atol=1e-12)
        assert np.allclose(data["x2"], cols[1][1], atol=1e-12)

    def test_format(self, tmp_path):
        g = mf.make_grid(0, 0.2, 0.1)
        path = tmp_path / "sig.csv"
        mf.write_signals_csv(path, g, [("a", np.array([1 / 3, 2 / 3, 1.0]))])
        raw = path.read_bytes().decode()
        lines = raw.split("\n")
        assert lines[0] == "time,a"
        assert "\r" not in raw
        # at least 12 significant digits survive
        assert lines[1].split(",")[1].startswith("0.333333333333")
