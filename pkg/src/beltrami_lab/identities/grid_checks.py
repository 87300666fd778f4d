"""Identities that compare contour integrals with grid operators."""

from __future__ import annotations

from math import factorial

import numpy as np

from .. import rng
from ..errors import DegenerateProbeError, InvalidArgument
from ..grid import GridSpec, make_grid, sample, spectral_filter
from ..singular_ops import free_beurling_power
from .contour import h_derivative


def interior_points(dom, count: int, seed: int = 0, margin: float = 0.25,
                    name: str = "probe-points") -> np.ndarray:
    """``count`` random points of the domain at distance at least ``margin`` from the boundary."""
    gen = rng.stream(seed, name)
    lo, hi = dom.bbox
    out = []
    while len(out) < count:
        z = gen.uniform(lo.real, hi.real, 4 * count) + 1j * gen.uniform(lo.imag, hi.imag, 4 * count)
        ok = dom.contains(z)
        z = z[ok]
        z = z[dom.boundary_distance(z) >= margin]
        out.extend(z.tolist())
    return np.asarray(out[:count])


def interior_pairs(dom, count: int, seed: int = 0, margin: float = 0.25,
                   min_gap: float = 0.05) -> list:
    """Random pairs ``(z, xi)`` of interior points with ``|z - xi| >= min_gap``."""
    pts = interior_points(dom, 4 * count, seed, margin, "probe-pairs")
    out = []
    for z, xi in zip(pts[0::2], pts[1::2]):
        if abs(z - xi) >= min_gap:
            out.append((complex(z), complex(xi)))
        if len(out) == count:
            break
    return out


def beurling_power_indicator(dom, spec: GridSpec, j: int, degree: int = 24):
    """``B^j chi_Omega`` in the plane from the filtered coverage indicator."""
    chi = spectral_filter(dom.indicator(spec, "coverage"))
    return free_beurling_power(chi, j, degree)


def derivative_identity_defect(q, dom, m3: int, j: int, points=200, spec: GridSpec = None,
                               seed: int = 0, fields: dict = None) -> dict:
    """Held-out defect of ``d^j dbar^(m3-j) h_{m3} = c B^j chi_Omega``.

    The left side comes from :func:`h_derivative`.  For ``j = 0`` the right
    side is the indicator itself; otherwise it is ``B^j chi_Omega`` on
    ``spec``.  The constant ``c`` is fitted by least squares on the first
    half of the probes.  The returned defect is the largest residual on the
    second half relative to the largest left-side value there.

    ``points`` is a count of random grid nodes (at least 0.3 inside) or an
    array of grid nodes.  ``fields`` caches right-hand sides by ``j``.

    Raises
    ------
    DegenerateProbeError
        If the left side vanishes at every probe (as on a disk for ``j >= 1``).
    """
    if not 0 <= j <= m3:
        raise InvalidArgument("need 0 <= j <= m3")
    if spec is None:
        spec = make_grid(dom.centroid, 4.0, 1024)
    if np.ndim(points) == 0:
        pts = interior_points(dom, int(points), seed, 0.3)
    else:
        pts = np.asarray(points, dtype=complex)
    jj, kk = spec.index_of(pts)
    pts = spec.points[jj, kk]
    lhs = h_derivative(q, m3, (j, m3 - j), pts)
    scale = 2 * np.pi * factorial(m3)
    if np.abs(lhs).max() <= 1e-8 * scale:
        raise DegenerateProbeError("the identity is degenerate here: B^j chi vanishes inside "
                                   "this domain; use a domain without rotational symmetry")
    if j == 0:
        rhs = np.ones(pts.shape, dtype=complex)
    else:
        cache = fields if fields is not None else {}
        if j not in cache:
            cache[j] = beurling_power_indicator(dom, spec, j)
        rhs = cache[j].values[jj, kk]
    half = pts.size // 2
    a, b = rhs[:half], lhs[:half]
    c = np.vdot(a, b) / np.vdot(a, a)
    defect = np.abs(lhs[half:] - c * rhs[half:]).max() / np.abs(lhs[half:]).max()
    return {"defect": float(defect), "constant": complex(c),
            "constant_ratio": complex(c / ((-1) ** m3 * factorial(m3) * 2j * np.pi))}


def radial_vanish(profile, m: int, spec: GridSpec, radius: float = 0.7) -> float:
    """``sup_{|z| <= radius} |B^m f|`` for the radial field ``f(z) = profile(|z|)``.

    Raises
    ------
    InvalidArgument
        If the profile is not 1 on the unit disk or not supported in the
        central quarter of the grid.
    """
    f = sample(lambda z: profile(np.abs(z - spec.center)), spec)
    r = np.abs(spec.points - spec.center)
    inner = r < 1 - 1e-12
    if np.abs(f.values[inner] - 1).max() > 1e-12:
        raise InvalidArgument("profile must equal 1 on the unit disk")
    if np.abs(f.values[~spec.central_quarter()]).max(initial=0.0) > 0:
        raise InvalidArgument("profile must vanish outside the central quarter")
    b = free_beurling_power(f, m)
    return float(np.abs(b.values[r <= radius]).max())


def disk_profile(radius: float = 1.0):
    """Indicator profile of the disk ``|z| < radius``."""
    return lambda r: (r < radius).astype(float)


def taper_profile(outer: float = 3.0):
    """Smooth radial profile, 1 on the unit disk and 0 beyond ``outer``."""
    def fn(r):
        t = np.clip((r - 1) / (outer - 1), 0, 1)
        with np.errstate(divide="ignore", over="ignore"):
            a = np.where(t > 0, np.exp(-1 / np.where(t > 0, t, 1)), 0)
            b = np.where(t < 1, np.exp(-1 / np.where(t < 1, 1 - t, 1)), 0)
        return b / (a + b)
    return fn
