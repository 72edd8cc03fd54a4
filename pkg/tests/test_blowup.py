import csv
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zakharov_lab.blowup import (
    analyze_series,
    check_lower_bound,
    default_window,
    estimate_tstar,
    fit_rate,
    format_report,
    resolution_consistency,
    resolved_until,
    theoretical_exponents,
    window_sensitivity,
    write_gnuplot,
    write_rate_csv,
)
from zakharov_lab.zakharov import NormSeries


def power_series(theta=1.0, tstar=1.0, t_end=0.9, points=200, scale=1.0, ell=0.0, parts=(0.5, 0.3, 0.2), t0=0.0):
    """NormSeries whose three norms (and so their sum) follow scale * (t* - t)^-theta."""
    t = np.linspace(t0, t_end, points)
    y = scale * (tstar - t) ** -theta
    rows = []
    for ti, yi in zip(t, y):
        p, n, nt = (f * yi for f in parts)
        rows.append((ti, 1e-3, 1.0, 0.0, p, n, nt, p, n, p, 0.0))
    return NormSeries(ell, rows)


def fit_of(theta_hat, stderr=0.0):
    from zakharov_lab.blowup import RateFit

    return RateFit(1.0, theta_hat, stderr, (0.0, 0.5), 1.0, "sum")


class TestExponents:
    @pytest.mark.parametrize(
        "ell,lower,asym",
        [(0, Fraction(1, 4), Fraction(1, 3)), (1, Fraction(3, 4), Fraction(1)), (Fraction(1, 2), Fraction(1, 2), Fraction(2, 3))],
    )
    def test_table(self, ell, lower, asym):
        tab = theoretical_exponents(ell)
        assert tab.theta_lower == lower and tab.theta_asymptotic == asym
        assert isinstance(tab.theta_lower, Fraction)

    def test_float_half_is_exact(self):
        assert theoretical_exponents(0.5).theta_lower == Fraction(1, 2)

    @pytest.mark.parametrize("ell", [-0.1, 1.5])
    def test_range(self, ell):
        with pytest.raises(ValueError):
            theoretical_exponents(ell)

    @given(st.fractions(min_value=0, max_value=1))
    def test_lower_below_asymptotic(self, ell):
        tab = theoretical_exponents(ell)
        assert tab.theta_lower < tab.theta_asymptotic

    def test_epsilon_note(self):
        assert "arbitrarily small loss" in theoretical_exponents(0).note


class TestTstar:
    def test_exact_inverse(self):
        t = np.linspace(0, 0.9, 200)
        est = estimate_tstar((t, (1 - t) ** -1.0))
        assert est.tstar == pytest.approx(1.0, abs=1e-6)
        assert est.theta == pytest.approx(1.0, abs=1e-6)

    def test_noise_repeated_trials(self):
        t = np.linspace(0, 0.9, 200)
        errs = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            y = (1 - t) ** -1.0 * (1 + 0.01 * rng.standard_normal(t.size))
            errs.append(estimate_tstar((t, y)).tstar - 1.0)
        assert np.max(np.abs(errs)) < 0.01

    def test_constant_series(self):
        t = np.linspace(0, 1, 50)
        with pytest.raises(ValueError, match="no blow-up signature"):
            estimate_tstar((t, np.ones_like(t)))

    def test_too_short(self):
        t = np.linspace(0, 0.5, 5)
        with pytest.raises(ValueError):
            estimate_tstar((t, 1 / (1 - t)))

    def test_t_max_truncation(self):
        s = power_series(theta=0.75, t_end=0.95, points=300)
        est = estimate_tstar(s, t_max=0.8)
        assert est.tstar == pytest.approx(1.0, abs=1e-6)
        assert est.n_points <= int(0.8 / 0.95 * 300)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-5.0, 5.0), st.floats(0.3, 2.0))
    def test_translation_equivariance(self, shift, theta):
        t = np.linspace(0, 0.9, 150)
        y = (1 - t) ** -theta
        a = estimate_tstar((t, y)).tstar
        b = estimate_tstar((t + shift, y)).tstar
        assert b - a == pytest.approx(shift, abs=1e-6)


class TestFitRate:
    @pytest.mark.parametrize("theta", [0.25, 0.75, 1.0, 4.0 / 3.0])
    def test_exact_power(self, theta):
        fit = fit_rate(power_series(theta), "sum", 1.0, (0.0, 0.9))
        assert fit.theta_hat == pytest.approx(theta, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0)
        assert 0 <= fit.r_squared <= 1

    @settings(max_examples=25, deadline=None)
    @given(st.floats(1e-6, 1e6), st.floats(0.1, 2.0))
    def test_scale_invariance(self, scale, theta):
        a = fit_rate(power_series(theta), "h_n", 1.0, (0.1, 0.9))
        b = fit_rate(power_series(theta, scale=scale), "h_n", 1.0, (0.1, 0.9))
        assert b.theta_hat == pytest.approx(a.theta_hat, abs=1e-9)
        assert b.log_C - a.log_C == pytest.approx(np.log(scale), abs=1e-9)

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="need at least 5"):
            fit_rate(power_series(points=20), "sum", 1.0, (0.0, 0.1))

    def test_window_above_tstar(self):
        with pytest.raises(ValueError):
            fit_rate(power_series(), "sum", 0.8, (0.0, 0.85))

    def test_window_outside_series(self):
        with pytest.raises(ValueError):
            fit_rate(power_series(t0=0.2), "sum", 1.0, (0.0, 0.5))

    def test_default_window(self):
        t = np.linspace(0, 0.99, 1000)
        lo, hi = default_window(t, 1.0)
        assert hi == pytest.approx(t[-6])
        assert 1.0 - lo <= 10 * (1.0 - hi) + 1e-3

    def test_default_window_minimum_samples(self):
        t = np.linspace(0, 0.99, 30)
        lo, hi = default_window(t, 1.0)
        assert np.sum((t >= lo) & (t <= hi)) >= 20

    def test_accepts_pair(self):
        t = np.linspace(0, 0.9, 100)
        assert fit_rate((t, (1 - t) ** -0.5), "x", 1.0, (0, 0.9)).theta_hat == pytest.approx(0.5, abs=1e-10)


class TestVerdict:
    def test_examples(self):
        assert check_lower_bound(fit_of(1.0), 1).label == "CONSISTENT"
        assert check_lower_bound(fit_of(0.2), 0).label == "INCONSISTENT"
        v = check_lower_bound(fit_of(0.33), 0)
        assert v.consistent and v.distance_to_asymptotic < 0.01

    def test_stderr_counts(self):
        assert check_lower_bound(fit_of(0.2, 0.03), 0).consistent
        assert not check_lower_bound(fit_of(0.2, 0.02), 0).consistent

    @settings(max_examples=20, deadline=None)
    @given(st.floats(1e-3, 1e3), st.sampled_from([0.2, 0.3, 0.8]), st.sampled_from([0.0, 0.5, 1.0]))
    def test_rescaling_invariance(self, scale, theta, ell):
        a = check_lower_bound(fit_rate(power_series(theta), "sum", 1.0, (0.0, 0.9)), ell)
        b = check_lower_bound(fit_rate(power_series(theta, scale=scale), "sum", 1.0, (0.0, 0.9)), ell)
        assert a.consistent == b.consistent


class TestResolution:
    def test_resolved_until(self):
        fine = power_series(0.75, t_end=0.95, points=400)
        d = fine.data
        late = d[:, 0] > 0.7
        d[late, 4:7] *= 0.9  # a coarse run that loses amplitude after t = 0.7
        coarse = NormSeries(0.0, d[::2])
        t_res = resolved_until(coarse, fine)
        assert 0.69 < t_res <= 0.7

    def test_agreeing_runs(self):
        s = power_series()
        assert resolved_until(s, s) == pytest.approx(s.t[-1])

    def test_disagree_from_start(self):
        a, b = power_series(), power_series(scale=2.0)
        with pytest.raises(ValueError):
            resolved_until(a, b)

    def test_consistency_check(self):
        a = power_series(0.75, t_end=0.98, points=400)
        assert resolution_consistency(a, a, "sum", 1.0).passed
        bad = power_series(0.5, t_end=0.98, points=400, scale=1.0)
        chk = resolution_consistency(a, bad, "sum", 1.0)
        assert not chk.passed
        assert chk.theta_coarse == pytest.approx(0.75, abs=1e-9)


class TestAnalysis:
    def test_analyze_series(self):
        s = power_series(0.9, t_end=0.98, points=400, ell=1.0)
        an = analyze_series(s)
        assert an.tstar.tstar == pytest.approx(1.0, abs=1e-5)
        assert an.fits["sum"].theta_hat == pytest.approx(0.9, abs=1e-4)
        assert an.verdict.consistent
        assert set(an.fits) >= {"sum", "h_psi", "h_n", "h_nt"}
        assert an.sensitivity

    def test_known_tstar_and_t_max(self):
        s = power_series(0.9, t_end=0.98, points=400)
        an = analyze_series(s, tstar=1.0, t_max=0.9)
        assert an.fits["sum"].window[1] <= 0.9
        assert an.fits["sum"].tstar_hat == 1.0

    def test_slow_rate_inconsistent(self):
        an = analyze_series(power_series(0.1, t_end=0.98, points=400), ell=0.0)
        assert not an.verdict.consistent
        assert "INCONSISTENT" in format_report(an)

    def test_window_sensitivity(self):
        sens = window_sensitivity(power_series(0.6, t_end=0.999, points=2000), "sum", 1.0)
        assert set(sens) == {0.5, 1.0, 1.5}
        assert all(v == pytest.approx(0.6, abs=1e-8) for v in sens.values())

    def test_outputs(self, tmp_path):
        s = power_series(0.9, t_end=0.98, points=400)
        an = analyze_series(s)
        write_rate_csv(tmp_path / "rates.csv", [an], ["synthetic"])
        text = (tmp_path / "rates.csv").read_text().splitlines()
        assert any(ln.startswith("#") and "arbitrarily small loss" in ln for ln in text)
        rows = list(csv.DictReader(ln for ln in text if not ln.startswith("#")))
        sum_row = next(r for r in rows if r["norm"] == "sum")
        assert sum_row["label"] == "synthetic" and sum_row["verdict"] == "CONSISTENT"
        assert float(sum_row["theta_hat"]) == pytest.approx(0.9, abs=1e-4)
        write_gnuplot(tmp_path / "g.dat", s, "sum", 1.0)
        xy = np.loadtxt(tmp_path / "g.dat")
        slope = np.polyfit(xy[:, 0], xy[:, 1], 1)[0]
        assert slope == pytest.approx(-0.9, abs=1e-10)
