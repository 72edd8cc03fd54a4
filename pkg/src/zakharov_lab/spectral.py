"""Periodic grids, unitary FFTs, Fourier multipliers and Sobolev norms.

Conventions
-----------
The forward transform is the orthonormal DFT (``norm="ortho"``), so both
directions are isometries of the plain coefficient vectors.  Norms carry the
cell volume ``dV = prod(L_i / N_i)`` explicitly, which makes every discrete
norm a Riemann-sum approximation of the corresponding continuum norm on the
box::

    ||f||_{H^s}^2 = dV * sum_k <k>^{2s} |f_hat(k)|^2 ,   <k> = (1 + |k|^2)^{1/2}

With the continuum transform ``g_hat(xi) = (2 pi)^{-d/2} int g e^{-i x.xi}``
the relation is ``g_hat(xi_k) ~= (2 pi)^{-d/2} * sqrt(dV * N_total) * f_hat(k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "make_grid",
    "SpectralField",
    "SobolevIndex",
    "Multiplier",
    "transform",
    "apply_multiplier",
    "sobolev_norm",
    "l2_norm",
    "bracket",
    "abs_power",
    "laplacian",
    "wave_coupling",
    "schrodinger_propagator",
    "klein_gordon_propagator",
    "dealias",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic Cartesian grid on ``[-L/2, L/2)^d``.

    Use :func:`make_grid` to build one; it validates the inputs.
    """

    dims: int
    extent: tuple[float, ...]
    points: tuple[int, ...]
    dealias: bool = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extent, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        """1D coordinate arrays, each ``-L/2 + j*dx``."""
        return tuple(-L / 2 + np.arange(n) * (L / n) for L, n in zip(self.extent, self.points))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coords))

    @cached_property
    def frequencies(self) -> tuple[np.ndarray, ...]:
        """Angular frequencies ``2 pi k / L`` per axis, in FFT order."""
        return tuple(2 * np.pi * sfft.fftfreq(n, d=L / n) for L, n in zip(self.extent, self.points))

    @cached_property
    def mode_indices(self) -> tuple[np.ndarray, ...]:
        """Integer mode numbers ``k`` per axis, in FFT order."""
        return tuple(np.rint(sfft.fftfreq(n, d=1.0 / n)).astype(int) for n in self.points)

    @cached_property
    def ksq(self) -> np.ndarray:
        """``|xi|^2`` on the full frequency lattice."""
        k = np.meshgrid(*self.frequencies, indexing="ij", sparse=True)
        return sum(kk**2 for kk in k) + np.zeros(self.points)

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def kbracket(self) -> np.ndarray:
        """Japanese bracket ``<xi> = (1 + |xi|^2)^{1/2}``."""
        return np.sqrt(1.0 + self.ksq)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keeps ``|k_i| <= floor(N_i / 3)`` on every axis."""
        m = np.ones(self.points, dtype=bool)
        for ax, (idx, n) in enumerate(zip(self.mode_indices, self.points)):
            keep = np.abs(idx) <= n // 3
            shape = [1] * self.dims
            shape[ax] = n
            m &= keep.reshape(shape)
        return m

    def boundary_max(self, values: np.ndarray) -> float:
        """Max of ``|values|`` over every outer face of the box."""
        a = np.abs(values)
        out = 0.0
        for ax in range(self.dims):
            out = max(out, float(np.take(a, 0, axis=ax).max()), float(np.take(a, -1, axis=ax).max()))
        return out


def _per_axis(value, dims: int, name: str) -> tuple:
    if np.isscalar(value):
        return (value,) * dims
    value = tuple(value)
    if len(value) != dims:
        raise ValueError(f"{name} needs {dims} entries, got {len(value)}")
    return value


def make_grid(dims: int, extent, points, dealias: bool = False) -> Grid:
    """Build a validated periodic :class:`Grid`.

    ``extent`` and ``points`` may be scalars (same on every axis) or
    per-axis sequences.  Points must be even and at least 8.
    """
    if dims not in (1, 2, 3):
        raise ValueError(f"dims must be 1, 2 or 3, got {dims}")
    ext = tuple(float(e) for e in _per_axis(extent, dims, "extent"))
    pts = _per_axis(points, dims, "points")
    for e in ext:
        if not np.isfinite(e) or e <= 0:
            raise ValueError(f"extent must be positive, got {e}")
    out = []
    for p in pts:
        if int(p) != p:
            raise ValueError(f"points must be integers, got {p}")
        p = int(p)
        if p % 2:
            raise ValueError(f"points must be even, got {p}")
        if p < 8:
            raise ValueError(f"points must be >= 8, got {p}")
        out.append(p)
    return Grid(dims, ext, tuple(out), bool(dealias))


class SpectralField:
    """Complex field on a :class:`Grid`, known in physical and/or frequency space.

    The missing representation is computed on first access and cached.
    Instances are treated as immutable: operations return new fields and the
    arrays handed out should not be modified in place.
    """

    __slots__ = ("grid", "_values", "_spectrum")

    def __init__(self, grid: Grid, values=None, spectrum=None):
        if values is None and spectrum is None:
            raise ValueError("need values or spectrum")
        for arr in (values, spectrum):
            if arr is not None and np.shape(arr) != grid.shape:
                raise ValueError(f"array shape {np.shape(arr)} does not match grid {grid.shape}")
        self.grid = grid
        self._values = None if values is None else np.asarray(values, dtype=complex)
        self._spectrum = None if spectrum is None else np.asarray(spectrum, dtype=complex)

    @classmethod
    def from_values(cls, grid: Grid, values) -> "SpectralField":
        return cls(grid, values=values)

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum) -> "SpectralField":
        return cls(grid, spectrum=spectrum)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        z = np.zeros(grid.shape, dtype=complex)
        return cls(grid, values=z, spectrum=z.copy())

    @property
    def tag(self) -> str:
        if self._values is not None and self._spectrum is not None:
            return "both"
        return "physical" if self._values is not None else "spectral"

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = sfft.ifftn(self._spectrum, norm="ortho")
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = sfft.fftn(self._values, norm="ortho")
        return self._spectrum

    def real_part(self) -> "SpectralField":
        return SpectralField(self.grid, values=self.values.real.astype(complex))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, spectrum=self.spectrum + other.spectrum)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, spectrum=self.spectrum - other.spectrum)

    def __mul__(self, c) -> "SpectralField":
        if isinstance(c, SpectralField):
            raise TypeError("use an explicit pointwise product; fields only scale by numbers")
        return SpectralField(self.grid, spectrum=self.spectrum * c)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SpectralField(shape={self.grid.shape}, tag={self.tag!r})"


def _check_same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def transform(field: SpectralField, direction: str = "forward") -> SpectralField:
    """Return a copy of ``field`` with the other representation populated.

    ``direction`` is ``"forward"`` (physical -> spectral) or ``"inverse"``.
    """
    if direction == "forward":
        return SpectralField(field.grid, values=field.values, spectrum=sfft.fftn(field.values, norm="ortho"))
    if direction == "inverse":
        return SpectralField(field.grid, values=sfft.ifftn(field.spectrum, norm="ortho"), spectrum=field.spectrum)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


@dataclass(frozen=True)
class SobolevIndex:
    s: float
    homogeneous: bool = False


@dataclass(frozen=True)
class Multiplier:
    """A Fourier symbol, evaluated lazily on a grid's frequency lattice."""

    name: str
    evaluate: Callable[[Grid], np.ndarray]
    phase: bool = False
    reject_zero_mode: bool = False

    def __call__(self, grid: Grid) -> np.ndarray:
        return self.evaluate(grid)


def bracket(s: float) -> Multiplier:
    """``<xi>^s``."""
    return Multiplier(f"<xi>^{s}", lambda g: g.kbracket**s)


def abs_power(s: float, zero_mode: str = "reject") -> Multiplier:
    """``|xi|^s``.

    For ``s < 0`` the symbol is undefined at ``xi = 0``.  With the default
    ``zero_mode="reject"`` :func:`apply_multiplier` raises if the field has a
    non-zero mean; ``zero_mode="zero"`` maps that mode to 0 instead.
    """
    if zero_mode not in ("reject", "zero"):
        raise ValueError("zero_mode must be 'reject' or 'zero'")

    def ev(g: Grid) -> np.ndarray:
        if s >= 0:
            return g.kabs**s
        out = np.zeros(g.shape)
        nz = g.kabs > 0
        out[nz] = g.kabs[nz] ** s
        return out

    return Multiplier(f"|xi|^{s}", ev, reject_zero_mode=(s < 0 and zero_mode == "reject"))


def laplacian() -> Multiplier:
    """Symbol of the Laplacian, ``-|xi|^2``."""
    return Multiplier("-|xi|^2", lambda g: -g.ksq)


def wave_coupling() -> Multiplier:
    """``(1+|xi|^2)^{-1/2} |xi|^2``, the symbol of ``-<grad>^{-1} Laplacian``."""
    return Multiplier("<xi>^-1 |xi|^2", lambda g: g.ksq / g.kbracket)


def schrodinger_propagator(t: float) -> Multiplier:
    """``U(t) = exp(i t Laplacian)``, symbol ``exp(-i t |xi|^2)``."""
    return Multiplier(f"U({t})", lambda g: np.exp(-1j * t * g.ksq), phase=True)


def klein_gordon_propagator(t: float) -> Multiplier:
    """``W(t) = exp(-i t <grad>)``, symbol ``exp(-i t <xi>)``."""
    return Multiplier(f"W({t})", lambda g: np.exp(-1j * t * g.kbracket), phase=True)


SymbolLike = Union[Multiplier, np.ndarray, Callable[[Grid], np.ndarray]]


def apply_multiplier(field: SpectralField, symbol: SymbolLike) -> SpectralField:
    """Pointwise product with ``symbol`` in frequency space."""
    if isinstance(symbol, Multiplier) and symbol.reject_zero_mode:
        zero = (0,) * field.grid.dims
        # round-off tolerance: a mean-free field sampled on the grid has |f_hat(0)| ~ eps
        if abs(field.spectrum[zero]) > 1e-12 * max(1.0, float(np.abs(field.spectrum).max())):
            raise ValueError(f"{symbol.name} is singular at xi=0 and the field has a non-zero mean")
    if isinstance(symbol, np.ndarray):
        m = symbol
    else:
        m = symbol(field.grid)
    return SpectralField(field.grid, spectrum=field.spectrum * m)


def dealias(field: SpectralField) -> SpectralField:
    """Zero the modes outside the 2/3-rule mask."""
    return SpectralField(field.grid, spectrum=np.where(field.grid.dealias_mask, field.spectrum, 0))


def _weights(grid: Grid, s: float, homogeneous: bool) -> np.ndarray:
    if homogeneous:
        w = np.zeros(grid.shape)
        nz = grid.kabs > 0
        w[nz] = grid.ksq[nz] ** s
        return w
    return (1.0 + grid.ksq) ** s


def sobolev_norm(field: SpectralField, index: Union[SobolevIndex, float], homogeneous: bool = False) -> float:
    """``H^s`` (or ``\\dot H^s``) norm with the cell-volume factor.

    The homogeneous norm drops the zero mode.
    """
    if isinstance(index, SobolevIndex):
        s, homogeneous = index.s, index.homogeneous
    else:
        s = float(index)
    f2 = np.abs(field.spectrum) ** 2
    return float(np.sqrt(field.grid.cell_volume * np.sum(_weights(field.grid, s, homogeneous) * f2)))


def l2_norm(field: SpectralField) -> float:
    """Physical-space L^2 norm, ``sqrt(dV * sum |f(x)|^2)``."""
    return float(np.sqrt(field.grid.cell_volume * np.sum(np.abs(field.values) ** 2)))
