"""Blow-up time estimation, power-law rate fits, and comparison with the
theoretical rate exponents.

For ``0 <= ell <= 1`` the sum
``||psi||_{H^{ell+1/2}} + ||n||_{H^ell} + ||n_t||_{H^{ell-1}}`` cannot blow up
slower than ``(t* - t)^{-theta}`` with ``theta = (1 + 2 ell)/4`` (up to an
arbitrarily small loss), while the 3D self-similar collapse blows up at
``(1 + 2 ell)/3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import stats
from scipy.optimize import least_squares

from .io import atomic_open, write_csv
from .zakharov import NormSeries

__all__ = [
    "ExponentTable",
    "TstarEstimate",
    "RateFit",
    "Verdict",
    "theoretical_exponents",
    "estimate_tstar",
    "fit_rate",
    "default_window",
    "check_lower_bound",
    "window_sensitivity",
    "resolution_consistency",
    "resolved_until",
    "analyze_series",
    "write_rate_csv",
    "format_report",
    "write_gnuplot",
]

EPSILON_NOTE = "the lower bound holds with an arbitrarily small loss; the loss is taken as zero in comparisons"


def _fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


@dataclass(frozen=True)
class ExponentTable:
    ell: Fraction
    theta_lower: Fraction
    theta_asymptotic: Fraction
    note: str = EPSILON_NOTE


def theoretical_exponents(ell) -> ExponentTable:
    """``((1 + 2 ell)/4, (1 + 2 ell)/3)`` as exact rationals."""
    ell = _fraction(ell)
    if not 0 <= ell <= 1:
        raise ValueError(f"ell must lie in [0, 1], got {ell}")
    return ExponentTable(ell, (1 + 2 * ell) / 4, (1 + 2 * ell) / 3)


def _series_arrays(series, norm_name):
    """Accept a NormSeries or a ``(t, values)`` pair."""
    if hasattr(series, "norm"):
        t = np.asarray(series.t, dtype=float)
        y = np.asarray(series.norm(norm_name), dtype=float)
    else:
        t, y = (np.asarray(a, dtype=float) for a in series)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("times and values must be 1D arrays of equal length")
    return t, y


@dataclass(frozen=True)
class TstarEstimate:
    tstar: float
    stderr: float
    theta: float
    log_C: float
    n_points: int


def estimate_tstar(series, norm_name: str = "sum", tail: Optional[int] = None, t_max: Optional[float] = None) -> TstarEstimate:
    """Joint least-squares fit of ``log y = log C - theta log(t* - t)``.

    Uses the last ``tail`` samples (default: the later half, at least 10) of
    the samples with ``t <= t_max``.  Samples past the point where the grid
    stops resolving the collapse bias t* upward, so ``t_max`` should be set
    from a resolution diagnostic (see :func:`resolved_until`).  The fit is
    done in log space, so multiplicative noise is handled evenly.
    """
    t, y = _series_arrays(series, norm_name)
    if t_max is not None:
        keep = t <= t_max
        t, y = t[keep], y[keep]
    if len(t) < 10:
        raise ValueError("need at least 10 samples to estimate t*")
    k = max(10, len(t) // 2) if tail is None else int(tail)
    k = min(k, len(t))
    t, y = t[-k:], y[-k:]
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("no blow-up signature: norm values must be positive and finite")
    # the tail must grow overall, and mostly monotonically
    if y[-1] <= y[0] * (1 + 1e-9) or np.mean(np.diff(y) > 0) < 0.6:
        raise ValueError("no blow-up signature: norm is not increasing over the tail")

    ly = np.log(y)
    span = t[-1] - t[0]
    t_last = t[-1]

    def linfit(ts):
        x = -np.log(ts - t)
        A = np.column_stack([np.ones_like(x), x])
        coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
        return coef, float(np.sum((A @ coef - ly) ** 2))

    # coarse scan of the offset t* - t_last before the nonlinear polish
    offsets = span * np.logspace(-8, 2, 201)
    scores = [linfit(t_last + d)[1] for d in offsets]
    d0 = offsets[int(np.argmin(scores))]
    (c0, th0), _ = linfit(t_last + d0)

    def resid(p):
        u, theta, logc = p
        ts = t_last + span * math.exp(u)
        return logc - theta * np.log(ts - t) - ly

    sol = least_squares(resid, [math.log(d0 / span), th0, c0], method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    u, theta, logc = sol.x
    tstar = t_last + span * math.exp(u)
    dof = max(len(t) - 3, 1)
    s2 = float(np.sum(sol.fun**2)) / dof
    try:
        cov = np.linalg.inv(sol.jac.T @ sol.jac) * s2
        stderr = float(math.sqrt(max(cov[0, 0], 0.0)) * span * math.exp(u))
    except np.linalg.LinAlgError:
        stderr = math.inf
    return TstarEstimate(float(tstar), stderr, float(theta), float(logc), len(t))


@dataclass(frozen=True)
class RateFit:
    tstar_hat: float
    theta_hat: float
    stderr: float
    window: tuple
    r_squared: float
    norm_name: str
    n_points: int = 0
    log_C: float = 0.0

    def __post_init__(self):
        lo, hi = self.window
        if not lo < hi < self.tstar_hat:
            raise ValueError(f"window {self.window} must satisfy t_lo < t_hi < t* = {self.tstar_hat}")


def default_window(t: np.ndarray, tstar: float, decades: float = 1.0, min_samples: int = 20, drop_last: int = 5):
    """Last ``decades`` of ``t* - t`` with at least ``min_samples`` points,
    excluding the final ``drop_last`` samples."""
    t = np.asarray(t, dtype=float)
    keep = t[t < tstar]
    if len(keep) > drop_last:
        keep = keep[: len(keep) - drop_last]
    if len(keep) < 2:
        raise ValueError("not enough samples before t*")
    tau_end = tstar - keep[-1]
    tau_lo = tau_end * 10.0**decades
    inside = keep[(tstar - keep) <= tau_lo]
    if len(inside) < min_samples:
        inside = keep[-min(min_samples, len(keep)):]
    return float(inside[0]), float(keep[-1])


def fit_rate(series, norm_name: str, tstar: float, window=None) -> RateFit:
    """Linear regression of ``log y`` on ``-log(t* - t)`` over ``window``."""
    t, y = _series_arrays(series, norm_name)
    if window is None:
        window = default_window(t, tstar)
    lo, hi = float(window[0]), float(window[1])
    if not hi < tstar:
        raise ValueError(f"window upper end {hi} must be below t* = {tstar}")
    if lo < t[0] - 1e-12 * max(1.0, abs(t[0])) or lo >= hi:
        raise ValueError(f"window {window} lies outside the series range [{t[0]}, {t[-1]}]")
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 5:
        raise ValueError(f"only {int(sel.sum())} samples in the fit window; need at least 5")
    if np.any(y[sel] <= 0):
        raise ValueError("norm must be positive inside the fit window")
    x = -np.log(tstar - t[sel])
    ly = np.log(y[sel])
    reg = stats.linregress(x, ly)
    r2 = float(min(max(reg.rvalue**2, 0.0), 1.0))
    stderr = float(reg.stderr) if np.isfinite(reg.stderr) else 0.0
    return RateFit(float(tstar), float(reg.slope), stderr, (lo, hi), r2, norm_name, int(sel.sum()), float(reg.intercept))


@dataclass(frozen=True)
class Verdict:
    consistent: bool
    theta_hat: float
    stderr: float
    theta_lower: float
    theta_asymptotic: float
    ell: float
    norm_name: str
    note: str = EPSILON_NOTE

    @property
    def label(self) -> str:
        return "CONSISTENT" if self.consistent else "INCONSISTENT"

    @property
    def distance_to_asymptotic(self) -> float:
        return abs(self.theta_hat - self.theta_asymptotic)


def check_lower_bound(fit: RateFit, ell) -> Verdict:
    """CONSISTENT when ``theta_hat + 2 stderr >= (1 + 2 ell)/4``."""
    table = theoretical_exponents(ell)
    lower = float(table.theta_lower)
    ok = fit.theta_hat + 2.0 * fit.stderr >= lower
    return Verdict(bool(ok), fit.theta_hat, fit.stderr, lower, float(table.theta_asymptotic), float(table.ell), fit.norm_name)


def window_sensitivity(series, norm_name: str, tstar: float, decades=(0.5, 1.0, 1.5)) -> dict:
    """Fitted exponent for several window lengths; the spread is the sensitivity."""
    t, _ = _series_arrays(series, norm_name)
    out = {}
    for d in decades:
        try:
            out[float(d)] = fit_rate(series, norm_name, tstar, default_window(t, tstar, decades=d)).theta_hat
        except ValueError:
            continue
    return out


@dataclass(frozen=True)
class ResolutionCheck:
    passed: bool
    theta_coarse: float
    theta_fine: float
    max_relative_gap: float
    tolerance: float


def resolution_consistency(coarse, fine, norm_name: str, tstar: float, window=None, rtol: float = 0.05) -> ResolutionCheck:
    """Compare one norm between runs at two resolutions over a common window.

    Passes when the norm values agree to ``rtol`` on the window and the two
    fitted exponents agree to ``rtol`` (absolute, in exponent units).
    """
    tc, yc = _series_arrays(coarse, norm_name)
    tf, yf = _series_arrays(fine, norm_name)
    if window is None:
        hi = min(default_window(tc, tstar)[1], default_window(tf, tstar)[1])
        lo = max(default_window(tc, tstar)[0], default_window(tf, tstar)[0], tc[0], tf[0])
        window = (lo, hi) if lo < hi else default_window(tc, tstar)
    fc = fit_rate(coarse, norm_name, tstar, window)
    ff = fit_rate(fine, norm_name, tstar, window)
    sel = (tc >= window[0]) & (tc <= window[1])
    yfi = np.interp(tc[sel], tf, yf)
    gap = float(np.max(np.abs(yc[sel] - yfi) / np.abs(yfi))) if sel.any() else math.inf
    ok = gap <= rtol and abs(fc.theta_hat - ff.theta_hat) <= rtol
    return ResolutionCheck(bool(ok), fc.theta_hat, ff.theta_hat, gap, rtol)


def resolved_until(coarse, fine, norm_name: str = "sum", rtol: float = 0.01) -> float:
    """Last time up to which the two runs agree on ``norm_name`` to ``rtol``.

    The fine series is interpolated onto the coarse sample times; the result
    is the coarse time just before the first disagreement.
    """
    tc, yc = _series_arrays(coarse, norm_name)
    tf, yf = _series_arrays(fine, norm_name)
    sel = (tc >= tf[0]) & (tc <= tf[-1])
    tc, yc = tc[sel], yc[sel]
    if len(tc) == 0:
        raise ValueError("the two series share no time range")
    gap = np.abs(yc - np.interp(tc, tf, yf)) / np.abs(np.interp(tc, tf, yf))
    bad = np.nonzero(gap > rtol)[0]
    if len(bad) == 0:
        return float(tc[-1])
    if bad[0] == 0:
        raise ValueError("the two resolutions disagree from the first sample")
    return float(tc[bad[0] - 1])


NORMS = ("sum", "h_psi", "h_n", "h_nt", "hdot_psi", "hdot_n")


@dataclass
class SeriesAnalysis:
    ell: float
    tstar: TstarEstimate
    fits: dict
    verdict: Verdict
    sensitivity: dict = field(default_factory=dict)


def analyze_series(series, ell=None, tstar: Optional[float] = None, window=None, t_max: Optional[float] = None) -> SeriesAnalysis:
    """Fit the sum norm (which alone feeds the verdict) and each norm separately.

    ``t_max`` limits the analysis to resolved samples: t* is estimated and
    the default window chosen from ``t <= t_max`` only.
    """
    ell = series.ell if ell is None else ell
    if t_max is not None:
        series = _truncated(series, t_max)
    est = estimate_tstar(series, "sum")
    ts = est.tstar if tstar is None else float(tstar)
    fits = {}
    for name in NORMS:
        try:
            fits[name] = fit_rate(series, name, ts, window)
        except ValueError:
            continue
    if "sum" not in fits:
        raise ValueError("could not fit the sum norm")
    verdict = check_lower_bound(fits["sum"], ell)
    return SeriesAnalysis(float(ell), est, fits, verdict, window_sensitivity(series, "sum", ts))


def _truncated(series, t_max: float):
    return NormSeries(series.ell, rows=series.data[series.t <= t_max])


def write_rate_csv(path, analyses: Sequence[SeriesAnalysis], labels: Sequence[str] = ()) -> None:
    header = ("label", "norm", "ell", "tstar_hat", "theta_hat", "stderr", "t_lo", "t_hi", "r_squared", "n_points", "theta_lower", "theta_asymptotic", "verdict")
    rows = []
    labels = list(labels) or [f"series{i}" for i in range(len(analyses))]
    for lab, an in zip(labels, analyses):
        tab = theoretical_exponents(an.ell)
        for name, f in an.fits.items():
            verdict = an.verdict.label if name == "sum" else ""
            rows.append((lab, name, an.ell, f.tstar_hat, f.theta_hat, f.stderr, f.window[0], f.window[1], f.r_squared, f.n_points, float(tab.theta_lower), float(tab.theta_asymptotic), verdict))
    write_csv(path, header, rows, comments=(EPSILON_NOTE,))


def format_report(an: SeriesAnalysis, label: str = "series") -> str:
    v = an.verdict
    lines = [
        f"{label}: ell = {an.ell:g}",
        f"  t* estimate     {an.tstar.tstar:.8g} +- {an.tstar.stderr:.2g} (joint fit exponent {an.tstar.theta:.4f})",
        f"  lower bound     theta >= {v.theta_lower:.6g}    self-similar 3D rate {v.theta_asymptotic:.6g}",
    ]
    for name, f in an.fits.items():
        lines.append(f"  {name:<9} theta = {f.theta_hat:8.4f} +- {f.stderr:.2g}   r^2 = {f.r_squared:.6f}   window [{f.window[0]:.6g}, {f.window[1]:.6g}] ({f.n_points} pts)")
    if an.sensitivity:
        s = ", ".join(f"{d:g} dec: {th:.4f}" for d, th in sorted(an.sensitivity.items()))
        lines.append(f"  window sensitivity (sum): {s}")
    lines.append(f"  verdict (sum)   {v.label}")
    lines.append(f"  note: {EPSILON_NOTE}")
    return "\n".join(lines)


def write_gnuplot(path, series, norm_name: str, tstar: float) -> None:
    """Two columns: ``log(t* - t)`` and ``log norm``."""
    t, y = _series_arrays(series, norm_name)
    sel = (t < tstar) & (y > 0)
    with atomic_open(Path(path), "w") as f:
        f.write(f"# log(t*-t) log({norm_name}), t* = {float(tstar)!r}\n")
        for a, b in zip(np.log(tstar - t[sel]), np.log(y[sel])):
            f.write(f"{float(a)!r} {float(b)!r}\n")
