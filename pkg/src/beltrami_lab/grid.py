"""Uniform complex-plane grids with sampled fields and their spectral Wirtinger derivatives.

A grid of resolution ``N`` and half width ``L`` centred at ``c`` has spacing
``h = 2L/N`` and nodes ``c + h(j - N/2) + i h(k - N/2)`` for ``0 <= j, k < N``.
Axis 0 of every value array is the real direction.  Fields are periodic in
both directions, so Fourier multipliers act on the torus of side ``2L``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatch, InvalidArgument, SamplingError

Number = Union[int, float, complex]


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a square sampling grid.

    Parameters
    ----------
    center : complex
        Centre of the square window.
    half_width : float
        Half of the side length, ``L > 0``.
    resolution : int
        Number of nodes per axis, a power of two not smaller than 16.
    """

    center: complex
    half_width: float
    resolution: int

    def __post_init__(self):
        n = self.resolution
        if not isinstance(n, (int, np.integer)) or n < 16 or n & (n - 1):
            raise InvalidArgument(f"resolution must be a power of two >= 16, got {n!r}")
        if not np.isfinite(self.half_width) or self.half_width <= 0:
            raise InvalidArgument("half_width must be positive and finite")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "resolution", int(n))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.resolution

    @property
    def cell_area(self) -> float:
        return self.spacing ** 2

    @property
    def shape(self) -> tuple:
        return (self.resolution, self.resolution)

    @cached_property
    def axis(self) -> np.ndarray:
        """Offsets ``h(j - N/2)`` along one axis."""
        return self.spacing * (np.arange(self.resolution) - self.resolution // 2)

    @cached_property
    def points(self) -> np.ndarray:
        """All grid nodes as an ``N x N`` complex array (read-only)."""
        a = self.axis
        z = self.center + a[:, None] + 1j * a[None, :]
        z.setflags(write=False)
        return z

    @cached_property
    def wavenumbers(self) -> tuple:
        """Angular wavenumbers ``(kx, ky)`` broadcastable to the grid shape."""
        k = 2.0 * np.pi * sfft.fftfreq(self.resolution, self.spacing)
        return k[:, None], k[None, :]

    @cached_property
    def wirtinger_symbols(self) -> tuple:
        """Symbols of ``d`` and ``dbar`` with the Nyquist row and column zeroed."""
        kx, ky = self.wavenumbers
        nyq = self.resolution // 2
        kx = kx.copy()
        ky = ky.copy()
        kx[nyq, 0] = 0.0
        ky[0, nyq] = 0.0
        d = (1j * kx + ky) / 2.0
        dbar = (1j * kx - ky) / 2.0
        return d, dbar

    @cached_property
    def raw_symbols(self) -> tuple:
        """Symbols of ``d`` and ``dbar`` on all wavenumbers, Nyquist included."""
        kx, ky = self.wavenumbers
        return (1j * kx + ky) / 2.0, (1j * kx - ky) / 2.0

    def index_of(self, z) -> tuple:
        """Nearest grid indices ``(j, k)`` to the point(s) ``z``."""
        w = (np.asarray(z) - self.center) / self.spacing
        j = np.rint(w.real).astype(int) + self.resolution // 2
        k = np.rint(w.imag).astype(int) + self.resolution // 2
        return j, k

    def first_index(self, z) -> tuple:
        """Indices of the first nodes with ``x >= Re z`` and ``y >= Im z``.

        Nodes with ``lo <= x < hi`` along an axis are ``first(lo):first(hi)``,
        so adjacent boxes never share a node.
        """
        w = (np.asarray(z) - self.center) / self.spacing
        j = np.ceil(w.real - 1e-9).astype(int) + self.resolution // 2
        k = np.ceil(w.imag - 1e-9).astype(int) + self.resolution // 2
        return j, k

    def central_quarter(self) -> np.ndarray:
        """Boolean mask of nodes in the central square of half width ``L/2``."""
        a = np.abs(self.axis) <= self.half_width / 2
        return a[:, None] & a[None, :]

    def to_json(self) -> dict:
        return {
            "center_re": self.center.real,
            "center_im": self.center.imag,
            "half_width": self.half_width,
            "resolution": self.resolution,
        }

    @classmethod
    def from_json(cls, d: dict) -> "GridSpec":
        return cls(complex(d["center_re"], d["center_im"]), d["half_width"], int(d["resolution"]))


def make_grid(center: Number, half_width: float, resolution: int) -> GridSpec:
    """Build a :class:`GridSpec`.

    Examples
    --------
    >>> make_grid(0, 4.0, 256).spacing
    0.03125
    """
    return GridSpec(complex(center), half_width, resolution)


class ComplexField:
    """Immutable complex samples on a :class:`GridSpec`.

    Arithmetic with another field requires an identical grid.  Scalars
    broadcast and plain arrays of the grid shape act as raw samples.  All samples must be finite.
    """

    __slots__ = ("spec", "values")
    __array_priority__ = 100

    def __init__(self, spec: GridSpec, values):
        v = np.array(values, dtype=complex, copy=True)
        if v.shape != spec.shape:
            raise InvalidArgument(f"values shape {v.shape} does not match grid {spec.shape}")
        if not np.all(np.isfinite(v)):
            raise SamplingError("field contains non-finite samples")
        v.setflags(write=False)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "values", v)

    def __setattr__(self, name, value):
        raise AttributeError("ComplexField is immutable")

    @classmethod
    def zeros(cls, spec: GridSpec) -> "ComplexField":
        return cls(spec, np.zeros(spec.shape))

    def _other(self, other):
        if isinstance(other, ComplexField):
            if other.spec != self.spec:
                raise GridMismatch("fields live on different grids")
            return other.values
        if np.isscalar(other):
            return other
        if isinstance(other, np.ndarray) and other.shape == self.spec.shape:
            return other
        raise TypeError(f"unsupported operand {type(other).__name__}")

    def __add__(self, other):
        return ComplexField(self.spec, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ComplexField(self.spec, self.values - self._other(other))

    def __rsub__(self, other):
        return ComplexField(self.spec, self._other(other) - self.values)

    def __mul__(self, other):
        return ComplexField(self.spec, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not np.isscalar(other):
            raise TypeError("fields may only be divided by scalars")
        return ComplexField(self.spec, self.values / other)

    def __neg__(self):
        return ComplexField(self.spec, -self.values)

    def __pow__(self, m: int):
        return ComplexField(self.spec, self.values ** m)

    def conj(self) -> "ComplexField":
        return ComplexField(self.spec, np.conj(self.values))

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def mean(self) -> complex:
        return complex(self.values.mean())

    def integral(self) -> complex:
        """Riemann sum ``sum(values) * h**2``."""
        return complex(self.values.sum() * self.spec.cell_area)

    def l2(self) -> float:
        """Discrete ``L^2`` norm over the whole grid."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.spec.cell_area))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def at(self, points) -> np.ndarray:
        """Values at the grid nodes nearest to ``points``."""
        j, k = self.spec.index_of(points)
        return self.values[j, k]

    def __repr__(self):
        s = self.spec
        return f"ComplexField(N={s.resolution}, L={s.half_width}, center={s.center})"


def sample(fn: Callable, spec: GridSpec) -> ComplexField:
    """Evaluate ``fn`` at every grid node.

    ``fn`` receives the complex node array and may return an array of the
    same shape or a scalar.

    Raises
    ------
    SamplingError
        If any value is NaN or infinite; the first offending node is attached
        as ``err.point``.
    """
    z = spec.points
    with np.errstate(all="ignore"):
        v = np.asarray(fn(z), dtype=complex)
    v = np.broadcast_to(v, spec.shape)
    bad = ~np.isfinite(v)
    if bad.any():
        j, k = np.argwhere(bad)[0]
        raise SamplingError(f"non-finite sample at grid point {z[j, k]}", point=z[j, k])
    return ComplexField(spec, v)


def fft2(field: ComplexField) -> np.ndarray:
    return sfft.fft2(field.values)


def ifft2(spec: GridSpec, coeffs: np.ndarray) -> ComplexField:
    return ComplexField(spec, sfft.ifft2(coeffs))


def apply_multiplier(field: ComplexField, symbol: np.ndarray) -> ComplexField:
    """Apply the Fourier multiplier ``symbol`` on the periodic grid."""
    return ifft2(field.spec, sfft.fft2(field.values) * symbol)


def wirtinger(field: ComplexField) -> tuple:
    """Spectral Wirtinger derivatives ``(d field, dbar field)``.

    ``d = (d_x - i d_y)/2`` and ``dbar = (d_x + i d_y)/2`` under periodic
    extension.  Nyquist modes are discarded, so ``d f == conj(dbar conj f)``
    holds to rounding.
    """
    d, dbar = field.spec.wirtinger_symbols
    fh = sfft.fft2(field.values)
    return ifft2(field.spec, fh * d), ifft2(field.spec, fh * dbar)


def random_band_limited(spec: GridSpec, gen: np.random.Generator, cutoff: float = 0.25) -> ComplexField:
    """Random complex field whose modes satisfy ``|k| <= cutoff * k_N``.

    Coefficients are independent complex Gaussians, so the field is smooth,
    periodic and free of Nyquist content.  ``gen`` is usually
    ``rng.stream(seed, name)``.
    """
    kx, ky = spec.wavenumbers
    keep = np.hypot(kx, ky) <= cutoff * np.pi / spec.spacing
    c = np.zeros(spec.shape, dtype=complex)
    m = int(keep.sum())
    c[keep] = gen.standard_normal(m) + 1j * gen.standard_normal(m)
    f = ifft2(spec, c)
    return f * (1.0 / max(f.sup(), 1e-300))


def spectral_filter(field: ComplexField, order: int = 8, strength: float = 36.0) -> ComplexField:
    """Exponential low-pass filter ``exp(-strength (|k|/k_N)**order)``.

    The filter equals one to order ``|k|**order`` at the origin, so it removes
    grid-scale ringing of discontinuous data without biasing smooth content.
    """
    kx, ky = field.spec.wavenumbers
    kn = np.pi / field.spec.spacing
    sigma = np.exp(-strength * (np.hypot(kx, ky) / kn) ** order)
    return apply_multiplier(field, sigma)


# --------------------------------------------------------------------------
# File formats


def write_cfld(field: ComplexField, path) -> None:
    """Write ``field`` in the CFLD1 format.

    A UTF-8 JSON header line with the grid description is followed by
    ``N*N`` little-endian (re, im) float64 pairs in row-major order.
    """
    header = json.dumps(field.spec.to_json(), sort_keys=True).encode("utf-8") + b"\n"
    data = np.empty(field.spec.shape + (2,), dtype="<f8")
    data[..., 0] = field.values.real
    data[..., 1] = field.values.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes(order="C"))


def read_cfld(path) -> ComplexField:
    """Read a field written by :func:`write_cfld`."""
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    spec = GridSpec.from_json(json.loads(raw[:nl].decode("utf-8")))
    body = np.frombuffer(raw[nl + 1:], dtype="<f8")
    n = spec.resolution
    if body.size != 2 * n * n:
        raise InvalidArgument(f"expected {2 * n * n} floats, found {body.size}")
    body = body.reshape(n, n, 2)
    return ComplexField(spec, body[..., 0] + 1j * body[..., 1])


def write_csv(field: ComplexField, path) -> None:
    """Export ``field`` as CSV rows ``j,k,x,y,re,im``."""
    z = field.spec.points
    n = field.spec.resolution
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "k", "x", "y", "re", "im"])
        for j in range(n):
            for k in range(n):
                v = field.values[j, k]
                w.writerow([j, k, repr(z[j, k].real), repr(z[j, k].imag), repr(v.real), repr(v.imag)])
