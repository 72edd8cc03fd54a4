"""Radial self-similar profiles of the Zakharov system.

2D (parameter ``a > 0``), with ``Lap f = f'' + f'/eta``::

    Lap P - P - N P = 0
    a^2 (eta^2 N'' + 6 eta N' + 6 N) - Lap N = Lap P^2

3D, with ``Lap f = f'' + 2 f'/eta``::

    Lap P - P/3 - N P = 0
    (2/9)(2 eta^2 N'' + 13 eta N' + 14 N) = Lap P^2

Both N-equations have an exact first integral that is regular at the origin:

    2D:  (a^2 eta^2 - 1) N' + 3 a^2 eta N = (P^2)'
    3D:  (2/9)(2 eta N' + 7 N) = (eta (P^2)' + P^2 - P(0)^2) / eta^2

The solver discretizes P through its second-order equation and N through the
first integral.  The first-order N-problem needs no outer boundary condition
and keeps the Newton matrix well conditioned.  The second-order residuals are
reported as the certificate.

Derivatives use 7-point Fornberg stencils on the even extension of a
sinh-stretched grid ``eta_j = eta_max sinh(beta j / M) / sinh(beta)``,
``j = 1..M``; the origin itself is not a node, which is how the regularity
conditions ``P'(0) = N'(0) = 0`` are imposed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .io import read_csv, write_csv
from .spectral import Grid, SpectralField, make_grid

__all__ = [
    "ProfileSolution",
    "fornberg_weights",
    "radial_grid",
    "profile_residual_2d",
    "profile_residual_3d",
    "solve_profile",
    "continue_profile_2d",
    "shoot_p_2d",
    "exact_2d_solution",
    "exact_2d_fields",
    "asymptotic_3d_solution",
    "asymptotic_3d_fields",
    "ansatz_series_3d",
    "write_profile_csv",
    "read_profile_csv",
]


# ---------------------------------------------------------------------------
# finite differences


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights at ``z`` on nodes ``x`` for derivatives 0..m.

    Returns an array of shape ``(len(x), m + 1)``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def radial_grid(points: int = 3000, eta_max: float = 30.0, beta: float = 3.0) -> np.ndarray:
    """Nodes ``(0, eta_max]`` clustered near the origin.

    Doubling ``points`` keeps every old node (``new[1::2] == old``).
    """
    if points < 16:
        raise ValueError("need at least 16 radial points")
    if eta_max <= 0 or beta <= 0:
        raise ValueError("eta_max and beta must be positive")
    s = np.arange(1, points + 1) / points
    return eta_max * np.sinh(beta * s) / np.sinh(beta)


def _check_eta(eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if eta.ndim != 1 or len(eta) < 8:
        raise ValueError("eta must be a 1D grid with at least 8 nodes")
    if eta[0] <= 0:
        raise ValueError("eta grid must exclude the origin (it is handled by even extension)")
    if np.any(np.diff(eta) <= 0):
        raise ValueError("eta grid must be strictly increasing")
    return eta


_MATS: dict = {}


def _diff_matrices(eta: np.ndarray, width: int = 7):
    """Sparse first and second derivative matrices for even functions."""
    key = (eta.tobytes(), width)
    hit = _MATS.get(key)
    if hit is not None:
        return hit
    M = len(eta)
    ext = np.concatenate([-eta[::-1], eta])
    idx = np.concatenate([np.arange(M)[::-1], np.arange(M)])
    half = width // 2
    rows = np.repeat(np.arange(M), width)
    cols = np.empty(M * width, dtype=int)
    w1 = np.empty(M * width)
    w2 = np.empty(M * width)
    for j in range(M):
        lo = max(0, min(M + j - half, 2 * M - width))
        sl = slice(lo, lo + width)
        w = fornberg_weights(eta[j], ext[sl], 2)
        cols[j * width:(j + 1) * width] = idx[sl]
        w1[j * width:(j + 1) * width] = w[:, 1]
        w2[j * width:(j + 1) * width] = w[:, 2]
    D1 = sp.csr_matrix((w1, (rows, cols)), shape=(M, M))
    D2 = sp.csr_matrix((w2, (rows, cols)), shape=(M, M))
    if len(_MATS) > 16:
        _MATS.clear()
    _MATS[key] = (D1, D2)
    return D1, D2


def _origin_weights(eta: np.ndarray, nodes: int = 4) -> np.ndarray:
    """Weights on the first ``nodes`` values giving f(0) for even f."""
    ext = np.concatenate([-eta[:nodes][::-1], eta[:nodes]])
    w = fornberg_weights(0.0, ext, 0)[:, 0]
    return w[:nodes][::-1] + w[nodes:]


def _laplacian(eta, dim):
    D1, D2 = _diff_matrices(eta)
    return D2 + sp.diags((dim - 1) / eta) @ D1


# ---------------------------------------------------------------------------
# residuals


def profile_residual_2d(P, N, a: float, eta) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise residuals of the 2D profile equations (second-order form)."""
    eta = _check_eta(eta)
    P = np.asarray(P, dtype=float)
    N = np.asarray(N, dtype=float)
    D1, D2 = _diff_matrices(eta)
    lap = lambda f: D2 @ f + (D1 @ f) / eta
    res_P = lap(P) - P - N * P
    euler = eta**2 * (D2 @ N) + 6 * eta * (D1 @ N) + 6 * N
    res_N = a * a * euler - lap(N) - lap(P * P)
    return res_P, res_N


def profile_residual_3d(P, N, eta) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise residuals of the 3D profile equations (second-order form)."""
    eta = _check_eta(eta)
    P = np.asarray(P, dtype=float)
    N = np.asarray(N, dtype=float)
    D1, D2 = _diff_matrices(eta)
    lap = lambda f: D2 @ f + 2 * (D1 @ f) / eta
    res_P = lap(P) - P / 3.0 - N * P
    res_N = (2.0 / 9.0) * (2 * eta**2 * (D2 @ N) + 13 * eta * (D1 @ N) + 14 * N) - lap(P * P)
    return res_P, res_N


# ---------------------------------------------------------------------------
# solution container


@dataclass
class ProfileSolution:
    dimension: int
    a: Optional[float]
    eta: np.ndarray
    P: np.ndarray
    N: np.ndarray
    residual_P: float
    residual_N: float
    decay_diag: dict = field(default_factory=dict)
    converged: bool = True
    message: str = ""
    iterations: int = 0
    newton_residual: float = 0.0

    @property
    def p0(self) -> float:
        return float(_origin_weights(self.eta) @ self.P[:4])

    @property
    def n0(self) -> float:
        return float(_origin_weights(self.eta) @ self.N[:4])

    @property
    def eta_max(self) -> float:
        return float(self.eta[-1])

    @property
    def is_trivial(self) -> bool:
        return bool(np.all(self.P == 0) and np.all(self.N == 0))

    def residuals(self) -> tuple[np.ndarray, np.ndarray]:
        if self.dimension == 2:
            return profile_residual_2d(self.P, self.N, self.a, self.eta)
        return profile_residual_3d(self.P, self.N, self.eta)

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.P) <= 0) and np.all(np.diff(self.N) >= 0))

    def _splines(self):
        sp_ = getattr(self, "_spl", None)
        if sp_ is None:
            x = np.concatenate([-self.eta[::-1], [0.0], self.eta])
            Pe = np.concatenate([self.P[::-1], [self.p0], self.P])
            Ne = np.concatenate([self.N[::-1], [self.n0], self.N])
            sp_ = (CubicSpline(x, Pe), CubicSpline(x, Ne))
            object.__setattr__(self, "_spl", sp_)
        return sp_

    def _tail(self):
        """Far-field coefficients of N beyond ``eta_max``.

        2D: ``N = c (a^2 eta^2 - 1)^{-3/2}`` (homogeneous first integral).
        3D: ``N = c2 eta^{-2} + c35 eta^{-7/2}`` matched in value and slope.
        """
        e = self.eta_max
        _, sN = self._splines()
        Ne = float(sN(e))
        if self.dimension == 2:
            return (Ne * (self.a**2 * e * e - 1) ** 1.5,)
        dNe = float(sN(e, 1))
        # solve c2 e^-2 + c35 e^-3.5 = Ne ; -2 c2 e^-3 - 3.5 c35 e^-4.5 = dNe
        A = np.array([[e**-2, e**-3.5], [-2 * e**-3, -3.5 * e**-4.5]])
        return tuple(np.linalg.solve(A, [Ne, dNe]))

    def evaluate(self, eta, derivative: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """``(P, N)`` (or their ``derivative``-th eta derivatives) at any ``eta >= 0``.

        Beyond ``eta_max``, P is zero and N follows its algebraic far field.
        """
        eta = np.abs(np.asarray(eta, dtype=float))
        sP, sN = self._splines()
        inside = eta <= self.eta_max
        P = np.where(inside, sP(np.minimum(eta, self.eta_max), derivative), 0.0)
        Nin = sN(np.minimum(eta, self.eta_max), derivative)
        far = np.maximum(eta, self.eta_max)
        if self.dimension == 2:
            (c,) = self._tail()
            q = self.a**2 * far**2 - 1
            if derivative == 0:
                Nout = c * q**-1.5
            elif derivative == 1:
                Nout = -3 * c * self.a**2 * far * q**-2.5
            else:
                raise ValueError("only derivatives 0 and 1 are available")
        else:
            c2, c35 = self._tail()
            if derivative == 0:
                Nout = c2 * far**-2 + c35 * far**-3.5
            elif derivative == 1:
                Nout = -2 * c2 * far**-3 - 3.5 * c35 * far**-4.5
            else:
                raise ValueError("only derivatives 0 and 1 are available")
        return P, np.where(inside, Nin, Nout)


def _decay_diag(eta, P, N, dim) -> dict:
    """Log-log slope fits of |N| on the outer half of the grid and P(eta_max)."""
    out = {"P_at_eta_max": float(abs(P[-1]))}
    sel = eta > eta[-1] / 2
    if np.all(np.abs(N[sel]) > 0):
        slope = np.polyfit(np.log(eta[sel]), np.log(np.abs(N[sel])), 1)[0]
        out["N_decay_exponent"] = float(-slope)
        out["N_eta2_at_eta_max"] = float(N[-1] * eta[-1] ** 2)
    # exponential decay rate of P on the middle band: 1 in 2D, 1/sqrt(3) in 3D
    band = (eta > eta[-1] / 4) & (eta < 3 * eta[-1] / 4)
    if np.all(np.abs(P[band]) > 0):
        y = np.log(np.abs(P[band]) * eta[band] ** ((dim - 1) / 2))
        out["P_decay_rate"] = float(-np.polyfit(eta[band], y, 1)[0])
    return out


# ---------------------------------------------------------------------------
# solver


def _system(dim, a, eta):
    """Residual map and Jacobian of the discretized problem."""
    M = len(eta)
    D1, D2 = _diff_matrices(eta)
    L = (D2 + sp.diags((dim - 1) / eta) @ D1).tocsr()
    lin = 1.0 if dim == 2 else 1.0 / 3.0
    if dim == 2:
        B = (sp.diags(a * a * eta**2 - 1) @ D1 + sp.diags(3 * a * a * eta)).tocsr()
        w0 = None
    else:
        B = ((2.0 / 9.0) * (2 * sp.diags(eta) @ D1 + 7 * sp.eye(M))).tocsr()
        w0 = _origin_weights(eta)

    def F(P, N):
        rP = L @ P - lin * P - N * P
        rP[-1] = P[-1]
        Q = P * P
        if dim == 2:
            rN = B @ N - D1 @ Q
        else:
            p0 = w0 @ P[:4]
            rN = B @ N - (eta * (D1 @ Q) + Q - p0 * p0) / eta**2
        return np.concatenate([rP, rN])

    last = sp.csr_matrix(([1.0], ([M - 1], [M - 1])), shape=(M, M))
    keep = sp.diags(np.r_[np.ones(M - 1), 0.0])

    def J(P, N):
        JPP = keep @ (L - sp.diags(lin + N)) + last
        JPN = keep @ sp.diags(-P)
        if dim == 2:
            JNP = -(D1 @ sp.diags(2 * P))
        else:
            p0 = w0 @ P[:4]
            JNP = -(sp.diags(1 / eta) @ D1 @ sp.diags(2 * P) + sp.diags(1 / eta**2) @ sp.diags(2 * P))
            rows = np.repeat(np.arange(M), 4)
            cols = np.tile(np.arange(4), M)
            vals = (2 * p0 / eta**2)[:, None] * w0[None, :]
            JNP = JNP + sp.csr_matrix((vals.ravel(), (rows, cols)), shape=(M, M))
        return sp.bmat([[JPP, JPN], [JNP, B]]).tocsc()

    return F, J


def _initial_guess(dim, eta, init_guess):
    if init_guess is None:
        amp, width = (2.2, 1.5) if dim == 2 else (1.0, 2.0)
        P = amp * np.exp(-(eta / width) ** 2)
        return P, -P * P
    if isinstance(init_guess, ProfileSolution):
        return init_guess.evaluate(eta)
    if callable(init_guess):
        P, N = init_guess(eta)
        return np.asarray(P, float).copy(), np.asarray(N, float).copy()
    if isinstance(init_guess, str):
        if init_guess == "zero":
            return np.zeros_like(eta), np.zeros_like(eta)
        raise ValueError(f"unknown init_guess {init_guess!r}")
    if isinstance(init_guess, tuple) and len(init_guess) == 2 and np.isscalar(init_guess[0]):
        amp, width = init_guess
        P = amp * np.exp(-(eta / width) ** 2)
        return P, -P * P
    P, N = init_guess
    P = np.asarray(P, dtype=float).copy()
    N = np.asarray(N, dtype=float).copy()
    if P.shape != eta.shape or N.shape != eta.shape:
        raise ValueError("init_guess arrays must match the radial grid")
    return P, N


def solve_profile(
    dimension: int,
    a: Optional[float] = None,
    init_guess=None,
    eta=None,
    *,
    eta_max: float = 30.0,
    points: int = 3000,
    beta: float = 3.0,
    tol: float = 1e-10,
    max_iter: int = 60,
    certify_tol: float = 1e-8,
) -> ProfileSolution:
    """Damped Newton relaxation for a localized profile pair.

    ``init_guess`` may be ``None`` (Gaussian bump with the right sign
    structure), ``"zero"``, a pair ``(amplitude, width)`` for a Gaussian bump,
    arrays ``(P, N)`` on the grid, a callable ``eta -> (P, N)``, or another
    :class:`ProfileSolution` (used for continuation).

    Non-convergence is reported through ``converged`` and ``message``; the
    best iterate is returned.
    """
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if dimension == 2:
        if a is None or not a > 0:
            raise ValueError("2D profiles need a > 0")
        a = float(a)
    else:
        a = None
    eta = radial_grid(points, eta_max, beta) if eta is None else _check_eta(eta)
    M = len(eta)
    F, J = _system(dimension, a, eta)
    P, N = _initial_guess(dimension, eta, init_guess)

    r = F(P, N)
    nr = float(np.abs(r).max())
    best = (nr, P, N)
    message = ""
    it = 0
    history = [nr]
    for it in range(1, max_iter + 1):
        if nr < tol:
            break
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            try:
                d = spla.spsolve(J(P, N), -r)
            except (spla.MatrixRankWarning, RuntimeError) as exc:
                message = f"singular Jacobian at iteration {it}: {exc}"
                break
        if not np.all(np.isfinite(d)):
            message = f"singular Jacobian at iteration {it}"
            break
        lam = 1.0
        while True:
            Pn = P + lam * d[:M]
            Nn = N + lam * d[M:]
            rn = F(Pn, Nn)
            nrn = float(np.abs(rn).max())
            if nrn < (1 - 0.25 * lam) * nr or lam < 1e-3:
                break
            lam *= 0.5
        P, N, r, nr = Pn, Nn, rn, nrn
        history.append(nr)
        if nr < best[0]:
            best = (nr, P, N)
        # round-off floor: a full step that no longer reduces the residual
        if nr < 1e3 * tol and len(history) > 3 and nr > 0.5 * min(history[-4:-1]):
            break
    nr, P, N = best

    if dimension == 2:
        rP, rN = profile_residual_2d(P, N, a, eta)
    else:
        rP, rN = profile_residual_3d(P, N, eta)
    resP = float(np.abs(rP[:-1]).max())
    resN = float(np.abs(rN[:-1]).max())
    ok = resP < certify_tol and resN < certify_tol and abs(P[-1]) < certify_tol and not message
    if not ok and not message:
        message = f"not converged: newton residual {nr:.2e}, certificate ({resP:.2e}, {resN:.2e})"
    return ProfileSolution(
        dimension=dimension,
        a=a,
        eta=eta,
        P=P,
        N=N,
        residual_P=resP,
        residual_N=resN,
        decay_diag=_decay_diag(eta, P, N, dimension),
        converged=ok,
        message=message or "converged",
        iterations=it,
        newton_residual=nr,
    )


def continue_profile_2d(a_values: Sequence[float], start: Optional[ProfileSolution] = None, **kw) -> list[ProfileSolution]:
    """Natural-parameter continuation in ``a``; each solve starts from the previous one."""
    out = []
    prev = start
    for a in a_values:
        sol = solve_profile(2, a=a, init_guess=prev, **kw)
        out.append(sol)
        prev = sol
    return out


def shoot_p_2d(sol: ProfileSolution, eta_end: float = 6.0, rtol: float = 1e-11) -> float:
    """Independent check of the 2D P-equation by shooting from the origin.

    N is taken from the relaxed solution, P(0) from its origin value; returns
    the max deviation of the shot P from the relaxed P on ``(0, eta_end]``.
    The P-equation is unstable outward (growing mode e^eta), so keep
    ``eta_end`` moderate.
    """
    if sol.dimension != 2:
        raise ValueError("shooting cross-check is for 2D profiles")
    p0, n0 = sol.p0, sol.n0
    c2 = 0.25 * (1 + n0) * p0  # P = p0 + c2 eta^2 + ...
    e0 = 1e-3
    y0 = [p0 + c2 * e0**2, 2 * c2 * e0]

    def rhs(e, y):
        _, Ne = sol.evaluate(e)
        return [y[1], -y[1] / e + (1 + Ne) * y[0]]

    sel = (sol.eta > e0) & (sol.eta <= eta_end)
    res = solve_ivp(rhs, (e0, sol.eta[sel][-1]), y0, t_eval=sol.eta[sel], rtol=rtol, atol=1e-13, method="DOP853")
    return float(np.abs(res.y[0] - sol.P[sel]).max())


# ---------------------------------------------------------------------------
# self-similar fields


def _radius(x) -> np.ndarray:
    if isinstance(x, Grid):
        return x.radius
    if isinstance(x, (tuple, list)):
        return np.sqrt(sum(np.asarray(c, float) ** 2 for c in x))
    return np.abs(np.asarray(x, dtype=float))


def exact_2d_fields(a: float, theta: float, tstar: float, profile: ProfileSolution, x, t: float):
    """``(psi, n, n_t)`` of the exact 2D self-similar blow-up solution at time ``t``."""
    if t >= tstar:
        raise ValueError(f"t = {t} must be before the blow-up time {tstar}")
    if profile.is_trivial:
        r = _radius(x)
        z = np.zeros_like(r)
        return z.astype(complex), z, z
    if profile.dimension != 2 or abs(profile.a - a) > 1e-12 * a:
        raise ValueError("profile must be a 2D profile for the same a")
    tau = tstar - t
    r = _radius(x)
    s = a * tau
    eta = r / s
    P, N = profile.evaluate(eta)
    _, dN = profile.evaluate(eta, 1)
    phase = theta + 1.0 / (a * a * tau) - r * r / (4 * tau)
    psi = P / s * np.exp(1j * phase)
    n = N / s**2
    nt = (2 * N + eta * dN) / (a * a * tau**3)
    return psi, n, nt


def exact_2d_solution(a: float, theta: float, tstar: float, profile: ProfileSolution, x, t: float):
    """``(psi, n)`` of the exact 2D self-similar blow-up solution.

    ``psi = (a tau)^{-1} P(r/(a tau)) exp(i(theta + 1/(a^2 tau) - r^2/(4 tau)))``,
    ``n = (a tau)^{-2} N(r/(a tau))``, ``tau = tstar - t``.
    """
    psi, n, _ = exact_2d_fields(a, theta, tstar, profile, x, t)
    return psi, n


def asymptotic_3d_fields(profile: ProfileSolution, x, t: float, tstar: float):
    """``(psi, n, n_t)`` of the 3D asymptotic self-similar ansatz."""
    if t >= tstar:
        raise ValueError(f"t = {t} must be before the blow-up time {tstar}")
    r = _radius(x)
    if profile.is_trivial:
        z = np.zeros_like(r)
        return z.astype(complex), z, z
    if profile.dimension != 3:
        raise ValueError("need a 3D profile")
    tau = tstar - t
    lam = tau ** (2.0 / 3.0)
    eta = r / lam
    P, N = profile.evaluate(eta)
    _, dN = profile.evaluate(eta, 1)
    psi = P / tau * np.exp(1j * tau ** (-1.0 / 3.0))
    n = N * tau ** (-4.0 / 3.0)
    nt = tau ** (-7.0 / 3.0) * (4.0 * N + 2.0 * eta * dN) / 3.0
    return psi, n, nt


def asymptotic_3d_solution(profile: ProfileSolution, x, t: float, tstar: float):
    """``psi = tau^{-1} P(r/tau^{2/3}) e^{i tau^{-1/3}}``, ``n = tau^{-4/3} N(r/tau^{2/3})``."""
    psi, n, _ = asymptotic_3d_fields(profile, x, t, tstar)
    return psi, n


def ansatz_series_3d(
    profile: ProfileSolution,
    times: Sequence[float],
    tstar: float,
    ell: float,
    points: int = 64,
    box_eta: float = 40.0,
):
    """Norm series of the 3D ansatz sampled on boxes that follow the collapse.

    At each time the periodic box has side ``box_eta * tau^{2/3}`` so the
    collapsing core is resolved by the same number of points throughout.
    Returns a :class:`~zakharov_lab.zakharov.NormSeries`.
    """
    from .zakharov import NormSeries, ZakharovState, norm_row

    series = NormSeries(ell)
    for t in sorted(times):
        tau = tstar - t
        g = make_grid(3, box_eta * tau ** (2.0 / 3.0), points)
        psi, n, nt = asymptotic_3d_fields(profile, g, t, tstar)
        st = ZakharovState(
            float(t),
            SpectralField.from_values(g, psi),
            SpectralField.from_values(g, n.astype(complex)),
            SpectralField.from_values(g, nt.astype(complex)),
        )
        series.append(norm_row(st, ell))
    return series


# ---------------------------------------------------------------------------
# persistence


def write_profile_csv(path, sol: ProfileSolution) -> None:
    rP, rN = sol.residuals()
    comments = [
        f"dimension={sol.dimension}",
        f"a={sol.a!r}",
        f"converged={int(sol.converged)}",
        f"residual_P={float(sol.residual_P)!r}",
        f"residual_N={float(sol.residual_N)!r}",
        f"P0={float(sol.p0)!r}",
        f"N0={float(sol.n0)!r}",
    ]
    comments += [f"{k}={float(v)!r}" for k, v in sorted(sol.decay_diag.items())]
    rows = zip(sol.eta, sol.P, sol.N, rP, rN)
    write_csv(path, ("eta", "P", "N", "res_P", "res_N"), rows, comments)


def read_profile_csv(path) -> ProfileSolution:
    header, data, comments = read_csv(path)
    if header != ["eta", "P", "N", "res_P", "res_N"]:
        raise ValueError(f"{path}: not a profile table")
    meta = dict(c.split("=", 1) for c in comments if "=" in c)
    dim = int(meta.get("dimension", "3"))
    a = None if meta.get("a", "None") == "None" else float(meta["a"])
    diag = {}
    for k in ("P_at_eta_max", "N_decay_exponent", "N_eta2_at_eta_max", "P_decay_rate"):
        if k in meta:
            diag[k] = float(meta[k])
    return ProfileSolution(
        dimension=dim,
        a=a,
        eta=data[:, 0].copy(),
        P=data[:, 1].copy(),
        N=data[:, 2].copy(),
        residual_P=float(meta.get("residual_P", "nan")),
        residual_N=float(meta.get("residual_N", "nan")),
        decay_diag=diag,
        converged=meta.get("converged", "0") == "1",
        message="loaded",
    )
