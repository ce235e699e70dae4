"""Periodic grids on the unit torus and Fourier pseudo-spectral operators.

The reference cell is the unit torus (0,1)^sdim with sdim = 1 or 2 (the
surface dimension; the bulk below the film has one extra dimension).
All fields are nodal samples on a uniform n-per-direction grid and all
spatial derivatives are spectral.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, NonFiniteFieldError


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: n nodes per direction, spacing 1/n exactly."""

    surface_dim: int
    n: int

    def __post_init__(self):
        if self.surface_dim not in (1, 2):
            raise ValueError(f"surface_dim must be 1 or 2, got {self.surface_dim}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.surface_dim

    @property
    def num_nodes(self) -> int:
        return self.n**self.surface_dim

    def coords(self) -> list:
        """Node coordinate arrays, broadcast to the grid shape."""
        x = np.arange(self.n) / self.n
        if self.surface_dim == 1:
            return [x]
        return list(np.meshgrid(x, x, indexing="ij"))

    def frequencies(self, axis: int) -> np.ndarray:
        """Integer frequencies along `axis` in rfftn layout, broadcastable."""
        if axis == self.surface_dim - 1:
            k = np.arange(self.n // 2 + 1, dtype=float)
        else:
            k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        shape = [1] * self.surface_dim
        shape[axis] = k.size
        return k.reshape(shape)

    def refined(self, factor: float = 1.5) -> "Grid":
        """Grid with at least `factor` times the resolution (n kept even)."""
        m = int(np.ceil(self.n * factor))
        if m % 2:
            m += 1
        return Grid(self.surface_dim, m)

    def check_field(self, f: np.ndarray, name: str = "field") -> None:
        if f.shape != self.shape:
            raise GridMismatchError(
                f"{name} has shape {f.shape}, expected {self.shape}"
            )


@dataclass(frozen=True)
class HeightField:
    """Nodal sample of the film profile h on the reference torus."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        self.grid.check_field(values, "height field")
        if not np.all(np.isfinite(values)):
            raise NonFiniteFieldError("height field contains non-finite entries")

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def shifted(self, shift) -> "HeightField":
        """Translate by an integer number of grid nodes per axis."""
        shift = np.atleast_1d(shift)
        return HeightField(self.grid, np.roll(self.values, shift, axis=tuple(range(self.grid.surface_dim))))


def flat_height(grid: Grid, d: float) -> HeightField:
    return HeightField(grid, np.full(grid.shape, float(d)))


# --- spectral transforms -------------------------------------------------

def _rfft(grid: Grid, f: np.ndarray) -> np.ndarray:
    return np.fft.rfftn(f)


def _irfft(grid: Grid, F: np.ndarray) -> np.ndarray:
    axes = tuple(range(grid.surface_dim))
    return np.fft.irfftn(F, s=grid.shape, axes=axes)


def spectral_derivative(grid: Grid, f: np.ndarray, orders) -> np.ndarray:
    """Mixed partial derivative with the given order per axis.

    Odd-order factors zero the Nyquist mode of their axis so that real
    derivatives of real fields stay symmetric.
    """
    grid.check_field(f)
    orders = tuple(orders)
    if len(orders) != grid.surface_dim:
        raise ValueError("one derivative order per axis required")
    F = _rfft(grid, f)
    for axis, order in enumerate(orders):
        if order == 0:
            continue
        k = grid.frequencies(axis)
        mult = (2j * np.pi * k) ** order
        if order % 2 == 1:
            mult = np.where(np.abs(k) == grid.n // 2, 0.0, mult)
        F = F * mult
    return _irfft(grid, F)


def gradient(grid: Grid, f: np.ndarray) -> list:
    """All first partials [f_x1, (f_x2)]."""
    out = []
    for axis in range(grid.surface_dim):
        orders = [0] * grid.surface_dim
        orders[axis] = 1
        out.append(spectral_derivative(grid, f, orders))
    return out


def hessian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Second partials as an array h2[i, j] of fields."""
    d = grid.surface_dim
    out = np.empty((d, d) + grid.shape)
    for i in range(d):
        for j in range(i, d):
            orders = [0] * d
            orders[i] += 1
            orders[j] += 1
            out[i, j] = spectral_derivative(grid, f, orders)
            out[j, i] = out[i, j]
    return out


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    F = _rfft(grid, f)
    return _irfft(grid, -_laplace_symbol(grid) * F)


def bilaplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    F = _rfft(grid, f)
    return _irfft(grid, _laplace_symbol(grid) ** 2 * F)


def _laplace_symbol(grid: Grid) -> np.ndarray:
    """|2 pi k|^2 in rfftn layout."""
    s = 0.0
    for axis in range(grid.surface_dim):
        s = s + (2.0 * np.pi * grid.frequencies(axis)) ** 2
    return s


def implicit_biharmonic_step(grid: Grid, f: np.ndarray, remainder: np.ndarray, tau: float) -> np.ndarray:
    """One backward-Euler step of df/dt = -lap^2 f + remainder.

    Diagonal in frequency space: divide by 1 + tau |2 pi k|^4.  The zero
    mode of the remainder is projected out, so the mean of f is preserved
    to machine precision.
    """
    F = _rfft(grid, f)
    R = _rfft(grid, remainder)
    R.flat[0] = 0.0
    out = (F + tau * R) / (1.0 + tau * _laplace_symbol(grid) ** 2)
    return _irfft(grid, out)


def resample(grid: Grid, f: np.ndarray, target: Grid) -> np.ndarray:
    """Spectral interpolation onto another grid (same torus).

    Upsampling zero-pads the spectrum; downsampling truncates it.  Both
    directions drop the Nyquist modes of the coarser grid, and the mean
    is preserved exactly.
    """
    grid.check_field(f)
    if target.surface_dim != grid.surface_dim:
        raise GridMismatchError("resample requires equal surface dimensions")
    if target.n == grid.n:
        return f.copy()
    n_src, n_dst = grid.n, target.n
    kmax = min(n_src, n_dst) // 2
    kept = list(range(kmax)) + list(range(-(kmax - 1), 0))
    src = [k % n_src for k in kept]
    dst = [k % n_dst for k in kept]
    F = np.fft.fftn(f)
    G = np.zeros(target.shape, dtype=complex)
    sdim = grid.surface_dim
    G[np.ix_(*([dst] * sdim))] = F[np.ix_(*([src] * sdim))]
    scale = (n_dst / n_src) ** sdim
    return np.fft.ifftn(G).real * scale


def band_limited_noise(grid: Grid, seed: int, band: int) -> np.ndarray:
    """Zero-mean random field with modes only in 1 <= |k|_inf <= band.

    Normalized to unit L2 norm over the cell; deterministic in the seed.
    """
    if band < 1 or band > grid.n // 3:
        raise ValueError(f"band must lie in [1, n//3], got {band}")
    rng = np.random.default_rng(seed)
    f = np.zeros(grid.shape)
    coords = grid.coords()
    if grid.surface_dim == 1:
        waves = [(k,) for k in range(1, band + 1)]
    else:
        waves = [
            (k1, k2)
            for k1 in range(-band, band + 1)
            for k2 in range(0, band + 1)
            if max(abs(k1), abs(k2)) >= 1 and (k2 > 0 or k1 > 0)
        ]
    for kvec in waves:
        phase = 2.0 * np.pi * sum(k * x for k, x in zip(kvec, coords))
        a, b = rng.standard_normal(2)
        f += a * np.cos(phase) + b * np.sin(phase)
    norm = float(np.sqrt((f**2).mean()))
    return f / norm


def l2_norm(f: np.ndarray) -> float:
    """L2 norm over the unit cell (Lebesgue measure)."""
    return float(np.sqrt((np.asarray(f) ** 2).mean()))
