"""Strang-split pseudo-spectral integrator for the scalar Zakharov system.

    i psi_t + Lap psi = n psi
    n_tt - Lap n = Lap |psi|^2

Both substeps are exact flows:

* linear: ``psi <- U(h) psi`` and the free wave ``n_tt = Lap n`` mode by mode;
* nonlinear: ``i psi_t = n psi`` with ``n`` frozen and ``d/dt n_t = Lap |psi|^2``.
  ``|psi|`` is invariant, so ``psi`` picks up the phase ``-h n`` and ``n_t``
  gains ``h Lap |psi|^2``.

The splitting is therefore symmetric, time reversible and conserves the
discrete mass exactly (up to round-off).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.fft as sfft

from .io import config_hash, write_csv, write_field, write_metadata
from .spectral import Grid, SpectralField, make_grid

log = logging.getLogger(__name__)

__all__ = [
    "ZakharovState",
    "SimConfig",
    "InitialCondition",
    "NormSeries",
    "RunResult",
    "SimulationDiverged",
    "to_reduced",
    "from_reduced",
    "linear_step",
    "nonlinear_step",
    "strang_step",
    "mass",
    "hamiltonian",
    "gaussian_state",
    "negative_hamiltonian_amplitude",
    "build_initial_state",
    "run",
]


class SimulationDiverged(RuntimeError):
    """Raised when a field becomes non-finite; carries the partial series."""

    def __init__(self, message: str, series: "NormSeries", state: "ZakharovState"):
        super().__init__(message)
        self.series = series
        self.state = state


@dataclass
class ZakharovState:
    t: float
    psi: SpectralField
    n: SpectralField
    nt: SpectralField
    dt_last: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.psi.grid

    @property
    def w(self) -> SpectralField:
        return to_reduced(self.n, self.nt)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.psi.spectrum, self.n.spectrum, self.nt.spectrum


def _state(t, grid, ph, nh, nth, dt_last=0.0) -> ZakharovState:
    return ZakharovState(
        t,
        SpectralField.from_spectrum(grid, ph),
        SpectralField.from_spectrum(grid, nh),
        SpectralField.from_spectrum(grid, nth),
        dt_last,
    )


def to_reduced(n: SpectralField, nt: SpectralField) -> SpectralField:
    """``w = n + i <grad>^{-1} n_t``."""
    if n.grid != nt.grid:
        raise ValueError("n and n_t live on different grids")
    return SpectralField.from_spectrum(n.grid, n.spectrum + 1j * nt.spectrum / n.grid.kbracket)


def from_reduced(w: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Inverse of :func:`to_reduced`: ``n = Re w``, ``n_t = <grad> Im w``."""
    g = w.grid
    n = SpectralField.from_values(g, w.values.real.astype(complex))
    im = SpectralField.from_values(g, w.values.imag.astype(complex))
    nt = SpectralField.from_spectrum(g, im.spectrum * g.kbracket)
    return n, nt


def _hermitian(a: np.ndarray) -> np.ndarray:
    """Project a spectrum onto real fields: ``(a(k) + conj a(-k)) / 2``."""
    axes = tuple(range(a.ndim))
    rev = np.roll(np.flip(a, axes), 1, axes)
    return 0.5 * (a + np.conj(rev))


class _Kernels:
    """Grid-level arrays shared by the substeps."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.ksq = grid.ksq
        self.kabs = grid.kabs
        self.mask = grid.dealias_mask if grid.dealias else None

    def linear(self, ph, nh, nth, h):
        c = np.cos(self.kabs * h)
        s_over_k = h * np.sinc(self.kabs * h / np.pi)
        ks = self.kabs * np.sin(self.kabs * h)
        ph = ph * np.exp(-1j * h * self.ksq)
        nh, nth = c * nh + s_over_k * nth, -ks * nh + c * nth
        return ph, nh, nth

    def nonlinear(self, ph, nh, nth, h):
        psi = sfft.ifftn(ph, norm="ortho")
        dens_h = sfft.fftn(np.abs(psi) ** 2, norm="ortho")
        if self.mask is not None:
            dens_h = np.where(self.mask, dens_h, 0)
        phase_h = h * nh
        if self.mask is not None:
            phase_h = np.where(self.mask, phase_h, 0)
        phase = sfft.ifftn(phase_h, norm="ortho").real
        ph = sfft.fftn(psi * np.exp(-1j * phase), norm="ortho")
        nh = _hermitian(nh)
        nth = _hermitian(nth - (h * self.ksq) * dens_h)
        # max|n| for the step-size law, free since the phase is h*n
        nmax = float(np.abs(phase).max() / abs(h)) if h else 0.0
        return ph, nh, nth, nmax


_KERNELS: dict = {}


def _kernels(grid: Grid) -> _Kernels:
    k = _KERNELS.get(grid)
    if k is None:
        if len(_KERNELS) > 8:
            _KERNELS.clear()
        k = _KERNELS[grid] = _Kernels(grid)
    return k


def linear_step(state: ZakharovState, dt: float) -> ZakharovState:
    """Exact free Schrodinger and free wave evolution over ``dt``."""
    out = _kernels(state.grid).linear(*state.arrays(), dt)
    return _state(state.t + dt, state.grid, *out, dt_last=dt)


def nonlinear_step(state: ZakharovState, dt: float) -> ZakharovState:
    """Exact flow of ``i psi_t = n psi``, ``d/dt n_t = Lap |psi|^2`` (``n`` frozen) over ``dt``."""
    *out, _ = _kernels(state.grid).nonlinear(*state.arrays(), dt)
    return _state(state.t + dt, state.grid, *out, dt_last=dt)


def strang_step(state: ZakharovState, dt: float) -> ZakharovState:
    """Half linear, full nonlinear, half linear."""
    k = _kernels(state.grid)
    a = k.linear(*state.arrays(), 0.5 * dt)
    *a, _ = k.nonlinear(*a, dt)
    a = k.linear(*a, 0.5 * dt)
    return _state(state.t + dt, state.grid, *a, dt_last=dt)


def mass(state: ZakharovState) -> float:
    """``||psi||_{L^2}^2``."""
    g = state.grid
    return float(g.cell_volume * np.sum(np.abs(state.psi.spectrum) ** 2))


def hamiltonian(state: ZakharovState) -> float:
    """``||grad psi||^2 + int n|psi|^2 + (||V||^2 + ||n||^2)/2`` with ``n_t = -div V``.

    ``V`` is the irrotational field with ``|V_hat| = |n_t_hat| / |k|`` on
    ``k != 0``.  The quantity is conserved when ``n_t`` has zero mean.
    """
    g = state.grid
    dV = g.cell_volume
    ph, nh, nth = state.arrays()
    grad = np.sum(g.ksq * np.abs(ph) ** 2)
    coupling = np.sum(state.n.values.real * np.abs(state.psi.values) ** 2)
    nz = g.ksq > 0
    vel = np.sum(np.abs(nth[nz]) ** 2 / g.ksq[nz])
    pot = np.sum(np.abs(nh) ** 2)
    return float(dV * (grad + coupling + 0.5 * (vel + pot)))


# ---------------------------------------------------------------------------
# initial data


def negative_hamiltonian_amplitude(sigma: float, dims: int) -> float:
    """Threshold amplitude ``A`` above which ``A exp(-|x|^2/sigma^2)`` with
    ``n0 = -|psi0|^2``, ``n1 = 0`` has negative Hamiltonian.

    With that data ``H = ||grad psi||^2 - (1/2) int |psi|^4``; both terms are
    Gaussian integrals, giving ``A^2 = (2 d / sigma^2) 2^{d/2}``.
    """
    return math.sqrt(2.0 * dims / sigma**2 * 2.0 ** (dims / 2.0))


def gaussian_state(grid: Grid, amplitude: float, sigma: float) -> ZakharovState:
    """``psi0 = A exp(-|x|^2/sigma^2)``, ``n0 = -|psi0|^2``, ``n1 = 0``."""
    psi = amplitude * np.exp(-grid.radius**2 / sigma**2)
    n = -np.abs(psi) ** 2
    return ZakharovState(
        0.0,
        SpectralField.from_values(grid, psi.astype(complex)),
        SpectralField.from_values(grid, n.astype(complex)),
        SpectralField.zeros(grid),
    )


@dataclass
class InitialCondition:
    """Initial-data descriptor.

    kinds:
      ``gaussian``        amplitude (or amplitude_factor x the negative-H threshold), sigma
      ``sech``            amplitude, width, velocity  (1D-style smooth packet, any dims)
      ``free_wave``       amplitude, mode (integer on axis 0), psi = 0
      ``self_similar_2d`` a, tstar, theta, t0 (time of the data), eta_max, profile_points
      ``zero``            all fields zero
    """

    kind: str = "gaussian"
    amplitude: Optional[float] = None
    amplitude_factor: float = 1.25
    sigma: float = 1.0
    width: float = 1.0
    velocity: float = 0.0
    mode: int = 1
    a: float = 1.0
    tstar: float = 1.0
    theta: float = 0.0
    t0: float = 0.0
    eta_max: float = 30.0
    profile_points: int = 1500


def build_initial_state(grid: Grid, ic: InitialCondition, profile=None) -> ZakharovState:
    kind = ic.kind
    if kind == "gaussian":
        amp = ic.amplitude
        if amp is None:
            amp = ic.amplitude_factor * negative_hamiltonian_amplitude(ic.sigma, grid.dims)
        return gaussian_state(grid, amp, ic.sigma)
    if kind == "sech":
        amp = 1.0 if ic.amplitude is None else ic.amplitude
        x0 = grid.coords[0]
        psi = amp / np.cosh(grid.radius / ic.width) * np.exp(1j * ic.velocity * x0)
        n = -np.abs(psi) ** 2
        return ZakharovState(
            0.0,
            SpectralField.from_values(grid, psi),
            SpectralField.from_values(grid, n.astype(complex)),
            SpectralField.zeros(grid),
        )
    if kind == "free_wave":
        amp = 1e-3 if ic.amplitude is None else ic.amplitude
        x0 = grid.coords[0]
        k0 = 2 * np.pi * ic.mode / grid.extent[0]
        return ZakharovState(
            0.0,
            SpectralField.zeros(grid),
            SpectralField.from_values(grid, (amp * np.cos(k0 * x0)).astype(complex)),
            SpectralField.zeros(grid),
        )
    if kind == "zero":
        z = SpectralField.zeros(grid)
        return ZakharovState(0.0, z, z, z)
    if kind == "self_similar_2d":
        from .profiles import exact_2d_fields, solve_profile

        if grid.dims != 2:
            raise ValueError("self_similar_2d data needs a 2D grid")
        if profile is None:
            profile = solve_profile(2, a=ic.a, eta_max=ic.eta_max, points=ic.profile_points)
            if not profile.converged:
                raise RuntimeError(f"2D profile solve did not converge: {profile.message}")
        psi, n, nt = exact_2d_fields(ic.a, ic.theta, ic.tstar, profile, grid, ic.t0)
        return ZakharovState(
            ic.t0,
            SpectralField.from_values(grid, psi),
            SpectralField.from_values(grid, n.astype(complex)),
            SpectralField.from_values(grid, nt.astype(complex)),
        )
    raise ValueError(f"unknown initial condition kind {kind!r}")


# ---------------------------------------------------------------------------
# diagnostics


COLUMNS = (
    "t",
    "dt",
    "mass",
    "hamiltonian",
    "h_psi",
    "h_n",
    "h_nt",
    "hdot_psi",
    "hdot_n",
    "max_psi",
    "boundary_leak",
)


class NormSeries:
    """Rows of Sobolev norms and invariants along a trajectory.

    ``h_psi``, ``h_n``, ``h_nt`` are the H^{l+1/2}, H^l, H^{l-1} norms;
    ``hdot_*`` the homogeneous ones.  ``norm("sum")`` is the quantity bounded
    below by the blow-up rate estimate.
    """

    columns = COLUMNS

    def __init__(self, ell: float = 0.0, rows=None):
        self.ell = float(ell)
        self._rows: list[tuple] = [] if rows is None else [tuple(r) for r in rows]

    def append(self, row) -> None:
        row = tuple(float(x) for x in row)
        if len(row) != len(COLUMNS):
            raise ValueError(f"row needs {len(COLUMNS)} entries")
        if self._rows and row[0] <= self._rows[-1][0]:
            raise ValueError("times must be strictly increasing")
        self._rows.append(row)

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def data(self) -> np.ndarray:
        return np.array(self._rows, dtype=float).reshape(-1, len(COLUMNS))

    def __getitem__(self, name: str) -> np.ndarray:
        return self.norm(name)

    def norm(self, name: str) -> np.ndarray:
        if name == "sum":
            d = self.data
            return d[:, 4] + d[:, 5] + d[:, 6]
        try:
            return self.data[:, COLUMNS.index(name)]
        except ValueError:
            raise KeyError(f"unknown column {name!r}; have {COLUMNS + ('sum',)}") from None

    @property
    def t(self) -> np.ndarray:
        return self.norm("t")

    def to_csv(self, path, comments=()) -> None:
        write_csv(path, COLUMNS, self._rows, comments=(f"ell={self.ell!r}", *comments))

    @classmethod
    def from_csv(cls, path) -> "NormSeries":
        from .io import read_csv

        header, data, comments = read_csv(path)
        if tuple(header) != COLUMNS:
            raise ValueError(f"{path}: unexpected columns {header}")
        ell = 0.0
        for c in comments:
            if c.startswith("ell="):
                ell = float(c[4:])
        return cls(ell, data)


def norm_row(state: ZakharovState, ell: float) -> tuple:
    g = state.grid
    dV = g.cell_volume
    ph, nh, nth = state.arrays()
    a_psi, a_n, a_nt = np.abs(ph) ** 2, np.abs(nh) ** 2, np.abs(nth) ** 2
    br2 = 1.0 + g.ksq
    nz = g.ksq > 0
    hom = np.zeros(g.shape)

    def hnorm(a, s):
        return math.sqrt(dV * np.sum(br2**s * a))

    def hdot(a, s):
        hom[nz] = g.ksq[nz] ** s
        return math.sqrt(dV * np.sum(hom * a))

    psi_vals = state.psi.values
    return (
        state.t,
        state.dt_last,
        dV * a_psi.sum(),
        hamiltonian(state),
        hnorm(a_psi, ell + 0.5),
        hnorm(a_n, ell),
        hnorm(a_nt, ell - 1.0),
        hdot(a_psi, ell + 0.5),
        hdot(a_n, ell),
        float(np.abs(psi_vals).max()),
        g.boundary_max(psi_vals),
    )


# ---------------------------------------------------------------------------
# driver


@dataclass
class SimConfig:
    dims: int = 1
    extent: object = 2 * math.pi
    points: object = 64
    dealias: bool = True
    initial: InitialCondition = field(default_factory=InitialCondition)
    cfl_constant: float = 0.05
    dt_min: float = 1e-9
    dt_max: float = 1e-2
    stop_amplitude: Optional[float] = None
    stop_amplitude_factor: float = 50.0
    blowup_dt_contraction: float = 100.0
    stop_time: float = 1.0
    record_every: int = 10
    sobolev_ell: float = 0.0
    leak_threshold: float = 1e-6
    max_steps: int = 10_000_000

    def validate(self) -> None:
        if not (0 < self.dt_min < self.dt_max):
            raise ValueError(f"need 0 < dt_min < dt_max, got dt_min={self.dt_min}, dt_max={self.dt_max}")
        if self.cfl_constant <= 0:
            raise ValueError("cfl_constant must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not 0.0 <= self.sobolev_ell <= 1.0:
            raise ValueError("sobolev_ell must lie in [0, 1]")
        if self.stop_amplitude is not None and self.stop_amplitude <= 0:
            raise ValueError("stop_amplitude must be positive")

    def grid(self) -> Grid:
        return make_grid(self.dims, self.extent, self.points, self.dealias)

    def hash(self) -> str:
        return config_hash(repr(sorted(asdict(self).items())))


@dataclass
class RunResult:
    series: NormSeries
    state: ZakharovState
    reason: str
    steps: int
    mass_drift: float
    hamiltonian_drift_rate: float
    leak_warning: bool
    dt_initial: float
    checkpoints: list = field(default_factory=list)


def _dt_law(cfg: SimConfig, nmax: float) -> float:
    return cfg.cfl_constant / max(1.0, nmax)


def run(
    config: SimConfig,
    out_dir=None,
    initial_state: Optional[ZakharovState] = None,
    profile=None,
) -> RunResult:
    """Integrate until ``stop_time``, numerical blow-up, or ``dt < dt_min``.

    Blow-up is declared once ``max|psi|`` exceeds the stop amplitude and the
    step has contracted by ``blowup_dt_contraction`` relative to the first
    step.  With ``out_dir`` the series CSV and a ZKFLD1 checkpoint of the
    final state are written there.
    """
    config.validate()
    grid = config.grid()
    state = initial_state if initial_state is not None else build_initial_state(grid, config.initial, profile)
    if state.grid != grid:
        grid = state.grid
    kern = _kernels(grid)
    ell = config.sobolev_ell
    series = NormSeries(ell)

    amp0 = float(np.abs(state.psi.values).max())
    stop_amp = config.stop_amplitude
    if stop_amp is None:
        stop_amp = config.stop_amplitude_factor * amp0 if amp0 > 0 else math.inf
    elif stop_amp <= amp0:
        raise ValueError(f"stop_amplitude {stop_amp} must exceed the initial max|psi| = {amp0}")

    t = state.t
    ph, nh, nth = state.arrays()
    nmax = float(np.abs(state.n.values).max())
    dt = min(max(_dt_law(config, nmax), config.dt_min), config.dt_max)
    dt0 = dt
    series.append(norm_row(replace(state, dt_last=0.0), ell))
    m0 = series.data[0, 2]
    h0 = series.data[0, 3]

    reason = "max_steps"
    steps = 0
    pending_half = None  # linear half step still owed from the previous step
    leak = series.data[0, 10] > config.leak_threshold
    if leak:
        warnings.warn(f"boundary leak {series.data[0, 10]:.3e} exceeds {config.leak_threshold:.1e} in the initial data")

    def diverged(msg):
        st = _state(t, grid, ph, nh, nth, dt)
        raise SimulationDiverged(msg, series, st)

    while steps < config.max_steps:
        if t >= config.stop_time * (1 - 1e-14):
            reason = "stop_time"
            break
        h = min(dt, config.stop_time - t)
        lead = 0.5 * h if pending_half is None else pending_half + 0.5 * h
        ph, nh, nth = kern.linear(ph, nh, nth, lead)
        ph, nh, nth, nmax = kern.nonlinear(ph, nh, nth, h)
        t += h
        steps += 1
        pending_half = 0.5 * h

        if not (np.isfinite(nmax) and np.all(np.isfinite(ph[(0,) * grid.dims]))):
            diverged(f"non-finite fields at t={t!r} after {steps} steps")

        raw_dt = _dt_law(config, nmax)
        dt_next = min(raw_dt, config.dt_max)
        record = steps % config.record_every == 0
        finishing = t >= config.stop_time * (1 - 1e-14) or raw_dt < config.dt_min
        if record or finishing:
            ph, nh, nth = kern.linear(ph, nh, nth, pending_half)
            pending_half = None
            st = _state(t, grid, ph, nh, nth, h)
            row = norm_row(st, ell)
            if not all(np.isfinite(row)):
                diverged(f"non-finite norms at t={t!r}")
            series.append(row)
            if row[10] > config.leak_threshold and not leak:
                leak = True
                warnings.warn(f"boundary leak {row[10]:.3e} exceeds {config.leak_threshold:.1e} at t={t:.6g}")
            if row[9] >= stop_amp and dt_next <= dt0 / config.blowup_dt_contraction:
                reason = "stop_amplitude"
                break
            if raw_dt < config.dt_min:
                reason = "dt_min"
                break
        dt = max(dt_next, config.dt_min)

    if pending_half is not None:
        ph, nh, nth = kern.linear(ph, nh, nth, pending_half)
        st = _state(t, grid, ph, nh, nth, h)
        series.append(norm_row(st, ell))
    final = _state(t, grid, ph, nh, nth, series.data[-1, 1])

    d = series.data
    mass_drift = float(np.max(np.abs(d[:, 2] - m0)) / m0) if m0 > 0 else float(np.max(np.abs(d[:, 2])))
    span = d[-1, 0] - d[0, 0]
    h_rate = float(abs(d[-1, 3] - h0) / max(abs(h0), 1e-300) / span) if span > 0 else 0.0

    result = RunResult(series, final, reason, steps, mass_drift, h_rate, leak, dt0)
    log.info("run stopped (%s) at t=%.6g after %d steps", reason, t, steps)
    if out_dir is not None:
        result.checkpoints = write_outputs(result, config, out_dir)
    return result


def write_outputs(result: RunResult, config: SimConfig, out_dir, stem: str = "run") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.series.to_csv(
        out / f"{stem}_series.csv",
        comments=(f"reason={result.reason}", f"config_hash={config.hash()}"),
    )
    paths = []
    st = result.state
    for name, fld in (("psi", st.psi), ("n", st.n), ("nt", st.nt)):
        p = out / f"{stem}_{name}.zkf"
        write_field(p, fld)
        paths.append(p)
    meta = out / f"{stem}.meta"
    write_metadata(
        meta,
        {
            "t": st.t,
            "dt": st.dt_last,
            "config_hash": config.hash(),
            "reason": result.reason,
            "steps": result.steps,
            "mass_drift": result.mass_drift,
            "hamiltonian_drift_rate": result.hamiltonian_drift_rate,
            "leak_warning": int(result.leak_warning),
        },
    )
    paths.append(meta)
    return paths
