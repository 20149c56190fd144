"""Grids and complex fields on periodic boxes, with spectral norms.

The computational domain is the box [-L/2, L/2)^d with periodic boundary
conditions, sampled on N points per axis (N a power of two). Derivatives
and the H1 weight are evaluated in Fourier space with wavenumbers
k_m = 2 pi m / L in standard FFT ordering. Radial profiles live on a
separate uniform grid r_j = j * dr on [0, r_max].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import fft as sfft

from .errors import InvalidField

_fft_workers = 1


def set_fft_threads(n: int) -> None:
    """Set the worker count passed to the FFT backend (default 1)."""
    global _fft_workers
    _fft_workers = max(1, int(n))


def get_fft_threads() -> int:
    return _fft_workers


def fftn(a: np.ndarray) -> np.ndarray:
    return sfft.fftn(a, workers=_fft_workers)


def ifftn(a: np.ndarray) -> np.ndarray:
    return sfft.ifftn(a, workers=_fft_workers)


@dataclass(frozen=True)
class UniformGrid:
    """Periodic box [-L/2, L/2)^d sampled on N points per axis.

    N must be a power of two (>= 8) so that the spacing h = L/N is exact
    in binary floating point and h * N == L holds to the last bit.
    """

    dim: int
    extent: float
    points: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        n = self.points
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"points must be a power of two >= 8, got {n}")
        if not (self.extent > 0 and np.isfinite(self.extent)):
            raise ValueError(f"extent must be positive and finite, got {self.extent}")

    @property
    def spacing(self) -> float:
        return self.extent / self.points

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis(self) -> np.ndarray:
        """Coordinates along one axis: x_i = -L/2 + i*h."""
        return -0.5 * self.extent + self.spacing * np.arange(self.points)

    def coords(self) -> tuple:
        """Coordinate arrays per axis, broadcastable to the field shape."""
        x = self.axis()
        return tuple(
            x.reshape((1,) * j + (-1,) + (1,) * (self.dim - 1 - j))
            for j in range(self.dim)
        )

    def radius_sq(self) -> np.ndarray:
        """|x|^2 from the box center, broadcast to the field shape."""
        out = np.zeros(self.shape)
        for c in self.coords():
            out = out + c**2
        return out


def wavenumbers(grid: UniformGrid) -> tuple:
    """FFT-ordered wavenumbers 2 pi m / L per axis, broadcastable arrays."""
    k = 2.0 * np.pi * sfft.fftfreq(grid.points, d=grid.spacing)
    return tuple(
        k.reshape((1,) * j + (-1,) + (1,) * (grid.dim - 1 - j))
        for j in range(grid.dim)
    )


def wavenumber_sq(grid: UniformGrid) -> np.ndarray:
    """|k|^2 on the full FFT grid."""
    out = np.zeros(grid.shape)
    for k in wavenumbers(grid):
        out = out + k**2
    return out


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid r_j = j * dr on [0, r_max] with n nodes."""

    r_max: float
    n: int

    def __post_init__(self):
        if not (self.r_max > 0 and np.isfinite(self.r_max)):
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.n < 16:
            raise ValueError(f"n must be >= 16, got {self.n}")

    @property
    def dr(self) -> float:
        return self.r_max / (self.n - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.r_max, self.n)


@dataclass(frozen=True)
class ComplexField:
    """Immutable complex field sampled on a UniformGrid.

    values has shape (N,)*dim and dtype complex128; all entries must be
    finite. time_tag records the physical time the sample corresponds to.
    """

    grid: UniformGrid
    values: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise InvalidField(
                f"values shape {v.shape} does not match grid shape {self.grid.shape}"
            )
        if v.dtype != np.complex128 or v.flags.writeable or not v.flags.c_contiguous:
            v = np.ascontiguousarray(v, dtype=np.complex128)
            if v is self.values:
                v = v.copy()
        if not np.isfinite(v.view(np.float64)).all():
            raise InvalidField("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: UniformGrid, f: Callable, time_tag: float = 0.0
                      ) -> "ComplexField":
        """Sample a function of the coordinate arrays onto the grid."""
        vals = np.asarray(f(*grid.coords()), dtype=np.complex128)
        vals = np.broadcast_to(vals, grid.shape).copy()
        return cls(grid, vals, time_tag)

    @classmethod
    def zeros(cls, grid: UniformGrid, time_tag: float = 0.0) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), time_tag)

    def with_values(self, values: np.ndarray, time_tag=None) -> "ComplexField":
        t = self.time_tag if time_tag is None else time_tag
        return ComplexField(self.grid, values, t)


def lp_norm(field: ComplexField, p: float) -> float:
    """L^p norm (h^d sum |u|^p)^(1/p); p = inf gives the sup norm."""
    a = np.abs(field.values)
    if np.isinf(p):
        return float(a.max())
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    hd = field.grid.cell_volume
    if p == 2.0:
        # abs already costs a pass; square is exact and fast
        return float(np.sqrt(hd * np.sum(a * a)))
    return float((hd * np.sum(a**p)) ** (1.0 / p))


def mass(field: ComplexField) -> float:
    """Squared L2 norm h^d sum |u|^2."""
    v = field.values
    return float(field.grid.cell_volume * np.sum(v.real**2 + v.imag**2))


def gradient(field: ComplexField) -> tuple:
    """Spectral partial derivatives (d_1 u, ..., d_d u)."""
    uh = fftn(field.values)
    return tuple(ifftn(1j * k * uh) for k in wavenumbers(field.grid))


def gradient_norm_sq(field: ComplexField) -> float:
    """Squared L2 norm of the gradient via |k|^2 Fourier multipliers."""
    uh = fftn(field.values)
    k2 = wavenumber_sq(field.grid)
    g = field.grid
    # Parseval: h^d sum |u|^2 = h^d / N^d * sum |u_hat|^2
    return float(g.cell_volume / g.points**g.dim *
                 np.sum(k2 * (uh.real**2 + uh.imag**2)))


def h1_norm(field: ComplexField) -> float:
    """Norm with spectral weight sqrt(1 + |k|^2)."""
    uh = fftn(field.values)
    w = 1.0 + wavenumber_sq(field.grid)
    g = field.grid
    return float(np.sqrt(g.cell_volume / g.points**g.dim *
                         np.sum(w * (uh.real**2 + uh.imag**2))))


def l2_inner(a: ComplexField, b: ComplexField) -> complex:
    """h^d sum conj(a) * b."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return complex(a.grid.cell_volume * np.sum(np.conj(a.values) * b.values))


# -- serialization ----------------------------------------------------------

_FIELD_FORMAT = "cqnls-field-1"


def save_field(f: ComplexField, path) -> None:
    """Write <path>.bin (little-endian f64, interleaved re/im) and <path>.json."""
    path = Path(path)
    raw = np.empty(f.values.size * 2)
    raw[0::2] = f.values.real.ravel()
    raw[1::2] = f.values.imag.ravel()
    path.with_suffix(".bin").write_bytes(raw.astype("<f8").tobytes())
    meta = {
        "format": _FIELD_FORMAT,
        "dim": f.grid.dim,
        "extent": f.grid.extent,
        "points": f.grid.points,
        "time_tag": f.time_tag,
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")


def load_field(path) -> ComplexField:
    """Read a field written by save_field."""
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta.get("format") != _FIELD_FORMAT:
        raise InvalidField(f"unrecognized field format in {path.with_suffix('.json')}")
    grid = UniformGrid(meta["dim"], meta["extent"], meta["points"])
    raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
    if raw.size != 2 * grid.points**grid.dim:
        raise InvalidField(f"binary payload size does not match grid in {path}")
    vals = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
    return ComplexField(grid, vals, meta["time_tag"])


def field_to_csv(f: ComplexField, path) -> None:
    """Write one row per node: index, coordinates, re, im."""
    path = Path(path)
    g = f.grid
    x = g.axis()
    cols = ["index"] + [f"x{j+1}" for j in range(g.dim)] + ["re", "im"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        flat = f.values.ravel()
        for idx in range(flat.size):
            multi = np.unravel_index(idx, g.shape)
            coords = ",".join(f"{x[m]:.17g}" for m in multi)
            fh.write(f"{idx},{coords},{flat[idx].real:.17g},{flat[idx].imag:.17g}\n")
