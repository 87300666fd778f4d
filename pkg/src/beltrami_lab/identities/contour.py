"""Boundary integrals of the kernel expansion, evaluated by contour quadrature.

All integrals use a :class:`~beltrami_lab.geometry.ContourQuadrature`
``q`` (nodes ``tau_i``, weights ``tau'(t_i) dt``).  On smooth parametric
boundaries the trapezoidal rule converges spectrally for interior points
that stay several node spacings away from the curve.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from ..errors import AccuracyError, InvalidArgument, InvalidDomain
from .combinatorics import binom

# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class MultiIndexM:
    """Exponents ``(m1, m2, m3)`` of the kernel ``K``.

    Requires ``m1 >= 3``, ``m2, m3 >= 1`` and ``m2 <= m1 + m3 - 2``.
    """

    m1: int
    m2: int
    m3: int

    def __post_init__(self):
        m1, m2, m3 = self.m1, self.m2, self.m3
        if min(m1 - 3, m2 - 1, m3 - 1) < 0 or m2 > m1 + m3 - 2:
            raise InvalidArgument(f"inadmissible multi-index {(m1, m2, m3)}")

    @property
    def order(self) -> int:
        return self.m1 + self.m2 + self.m3

    def astuple(self) -> tuple:
        return (self.m1, self.m2, self.m3)


def admissible_indices(max_order: int = 8) -> list:
    """All admissible ``(m1, m2, m3)`` with ``m1 + m2 + m3 <= max_order``."""
    out = []
    for m1 in range(3, max_order + 1):
        for m2 in range(1, max_order + 1):
            for m3 in range(1, max_order + 1):
                if m1 + m2 + m3 <= max_order and m2 <= m1 + m3 - 2:
                    out.append(MultiIndexM(m1, m2, m3))
    return out


def validate_contour(q) -> None:
    """Check closure and counterclockwise orientation with the winding integral."""
    scale = float(np.abs(q.weights).sum())
    if q.closure_defect() > 1e-10 * scale:
        raise InvalidDomain("contour is not closed")
    c = q.domain.centroid if q.domain is not None else complex(np.mean(q.nodes))
    if abs(q.winding_number(c) - 1) > 1e-6:
        raise InvalidDomain("contour is not counterclockwise around the domain")


def _check_interior(q, pts, factor: float = 10.0) -> np.ndarray:
    z = np.atleast_1d(np.asarray(pts, dtype=complex))
    d = np.abs(q.nodes[None, :] - z.ravel()[:, None]).min(axis=1)
    if np.any(d < factor * q.spacing):
        raise AccuracyError(f"points must stay {factor:g} node spacings from the boundary")
    if q.domain is not None and not np.all(q.domain.contains(z.ravel())):
        raise InvalidArgument("points must lie inside the domain")
    return z


# --------------------------------------------------------------------------
# Auxiliary functions h and H


def h_function(q, m3: int, z) -> complex:
    """``h_{m3}(z) = oint conj(tau - z)^m3 / (tau - z) d tau``.

    Examples
    --------
    On the unit disk ``h_1(z) = -2 pi i conj(z)``.
    """
    return h_derivative(q, m3, (0, 0), z)


def h_derivative(q, m3: int, jvec, z):
    """``d^j1 dbar^j2 h_{m3}(z)`` by quadrature.

    Equals ``m3! j1! / (m3 - j2)! (-1)^j2 oint conj(tau - z)^(m3 - j2) / (tau - z)^(1 + j1) d tau``
    and vanishes identically for ``j2 > m3``.  ``z`` may be an array.
    """
    j1, j2 = int(jvec[0]), int(jvec[1])
    if m3 < 0 or j1 < 0 or j2 < 0:
        raise InvalidArgument("orders must be non-negative")
    scalar = np.ndim(z) == 0
    zz = _check_interior(q, z)
    if j2 > m3:
        out = np.zeros(zz.shape, dtype=complex)
    else:
        c = factorial(m3) * factorial(j1) / factorial(m3 - j2) * (-1) ** j2
        u = q.nodes[None, :] - zz.ravel()[:, None]
        out = c * np.sum(np.conj(u) ** (m3 - j2) / u ** (1 + j1) * q.weights, axis=1)
        out = out.reshape(zz.shape)
    return complex(out[0]) if scalar else out


def big_h(q, m3: int, xi: complex, w, subtract_at=None):
    """``H_{m3,xi}(w) = (1 / 2 pi i) oint conj(tau - xi)^m3 / (tau - w) d tau``.

    With ``subtract_at = w0`` (a node of ``q``) the density value at ``w0`` is
    subtracted and restored through the exact indicator of the domain.  That
    keeps the rule accurate for ``w`` within a few node spacings of ``w0``.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    g = np.conj(q.nodes - xi) ** m3
    if subtract_at is None:
        val = np.sum(g[None, :] * q.weights / (q.nodes[None, :] - w[:, None]), axis=1)
        return val / (2j * np.pi)
    g0 = np.conj(subtract_at - xi) ** m3
    val = np.sum((g - g0)[None, :] * q.weights / (q.nodes[None, :] - w[:, None]), axis=1)
    inside = q.domain.contains(w).astype(float)
    return val / (2j * np.pi) + g0 * inside


# --------------------------------------------------------------------------
# The kernel and its expansion


def kernel_K(q, mvec, z: complex, xi: complex) -> complex:
    """``K(z, xi) = oint conj(w - xi)^m3 / ((z - w)^m1 (w - xi)^m2) dw``."""
    m = mvec if isinstance(mvec, MultiIndexM) else MultiIndexM(*mvec)
    if z == xi:
        raise InvalidArgument("z and xi must differ")
    _check_interior(q, [z, xi])
    w = q.nodes
    return complex(np.sum(np.conj(w - xi) ** m.m3 / ((z - w) ** m.m1 * (w - xi) ** m.m2) * q.weights))


def _mono(u, a: int, b: int):
    return u ** a * np.conj(u) ** b


def taylor_remainder(deriv, order: int, j: int, z: complex, xi) -> np.ndarray:
    """``d^j g(xi) - P_z^{order - j}(d^j g)(xi)`` for ``deriv(a, b, x) = d^a dbar^b g(x)``.

    ``P_z^k`` is the Taylor polynomial of total degree ``k`` at ``z`` in the
    variables ``(xi - z, conj(xi - z))``.  ``xi`` may be an array.
    """
    xi = np.asarray(xi, dtype=complex)
    u = xi - z
    p = np.zeros(xi.shape, dtype=complex)
    for a in range(order - j + 1):
        for b in range(order - j + 1 - a):
            p = p + deriv(a + j, b, z) / (factorial(a) * factorial(b)) * _mono(u, a, b)
    return deriv(j, 0, xi) - p


def kernel_expansion_terms(q, mvec, z: complex, xi: complex, form: str = "single") -> tuple:
    """The two sides ``(D, E)`` of the kernel-expansion error identity.

    ``D = -K(z, xi) (z - xi)^(m1 + m2 - 1)
    + sum_{j < m2} C(m1 + m2 - 2 - j, m1 - 1) (-1)^j / j! (xi - z)^j R_j`` where
    ``R_j`` is the Taylor remainder of ``d^j h_{m3}`` of order
    ``M = m1 + m3 - 3`` at ``z`` evaluated at ``xi``.

    ``form="single"`` takes ``E`` as the single monomial
    ``d^(m1-1) dbar^(m3-1) h(z) / ((m1-1)! (m3-1)!) (xi - z)^(m1-1) conj(xi - z)^(m3-1)``.
    ``form="full"`` keeps every monomial of total degree at most
    ``m1 + m3 - 2`` with the coefficient produced by the exact expansion.
    """
    m = mvec if isinstance(mvec, MultiIndexM) else MultiIndexM(*mvec)
    m1, m2, m3 = m.astuple()
    if m.order > 12:
        raise InvalidArgument("multi-index order above 12 risks factorial overflow")
    big_m = m1 + m3 - 3
    cache = {}

    def deriv(a, b, x):
        key = (a, b, complex(x) if np.ndim(x) == 0 else None)
        if key[2] is None:
            return h_derivative(q, m3, (a, b), x)
        if key not in cache:
            cache[key] = h_derivative(q, m3, (a, b), x)
        return cache[key]

    d = -kernel_K(q, m, z, xi) * (z - xi) ** (m1 + m2 - 1)
    for j in range(m2):
        r = complex(taylor_remainder(deriv, big_m, j, z, xi))
        d += binom(m1 + m2 - 2 - j, m1 - 1) * (-1) ** j / factorial(j) * (xi - z) ** j * r
    u = xi - z
    if form == "single":
        e = deriv(m1 - 1, m3 - 1, z) / (factorial(m1 - 1) * factorial(m3 - 1)) * _mono(u, m1 - 1, m3 - 1)
    elif form == "full":
        e = 0j
        for a1 in range(m1 + m3 - 1):
            for a2 in range(m3 + 1):
                if a1 + a2 > m1 + m3 - 2:
                    continue
                br = binom(m1 + m2 - 2 - a1, m2 - 1)
                if a1 + a2 <= big_m:
                    br -= sum((-1) ** j * binom(m1 + m2 - 2 - j, m1 - 1) * binom(a1, j)
                              for j in range(min(a1, m2 - 1) + 1))
                if br:
                    e += br * deriv(a1, a2, z) / (factorial(a1) * factorial(a2)) * _mono(u, a1, a2)
    else:
        raise InvalidArgument("form must be 'single' or 'full'")
    return complex(d), complex(e)


def kernel_expansion_defect(q, dom, mvec, z: complex, xi: complex, form: str = "single") -> float:
    """``|D - E| / (|D| + |E| + 1e-300)`` for the terms of :func:`kernel_expansion_terms`."""
    if dom is not None and q.domain is not dom:
        raise InvalidArgument("quadrature belongs to a different domain")
    d, e = kernel_expansion_terms(q, mvec, z, xi, form)
    return abs(d - e) / (abs(d) + abs(e) + 1e-300)


# --------------------------------------------------------------------------
# Plemelj jump and Taylor exponents


def plemelj_jump(q, m3: int, xi: complex, w: complex, eps: float) -> tuple:
    """``(H(w - eps N) - H(w + eps N), conj(w - xi)^m3)`` for the outward normal ``N`` at ``w``.

    ``w`` is snapped to the nearest quadrature node.  ``H`` is evaluated with
    the density value at ``w`` subtracted, so the remaining integrand is
    bounded near ``w``.

    Raises
    ------
    AccuracyError
        If the node spacing exceeds ``4 eps``, or ``eps`` is outside
        ``[1e-4, 1e-2]`` times the domain diameter.
    """
    dom = q.domain
    if dom is None:
        raise InvalidArgument("quadrature must carry its domain")
    scale = dom.diameter
    if not 1e-4 * scale * 0.999 <= eps <= 1e-2 * scale * 1.001:
        raise AccuracyError("eps must lie in [1e-4, 1e-2] times the diameter")
    if q.spacing > 4 * eps:
        raise AccuracyError("node spacing is too coarse for this eps")
    i = int(np.argmin(np.abs(q.nodes - w)))
    if abs(q.nodes[i] - w) > q.spacing:
        raise InvalidArgument("w must lie on the boundary")
    w0 = q.nodes[i]
    tangent = q.weights[i] / abs(q.weights[i])
    normal = -1j * tangent
    inner, outer = big_h(q, m3, xi, [w0 - eps * normal, w0 + eps * normal], subtract_at=w0)
    return complex(inner - outer), complex(np.conj(w0 - xi) ** m3)


def taylor_remainder_exponent(q, dom, m3: int, j: int, z: complex, radii, n: int = 1,
                              angles: int = 16, deriv=None) -> float:
    """Log-log slope of ``r -> mean_theta |R(z, z + r e^(i theta))|``.

    ``R`` is the Taylor remainder of ``d^j h_{m3}`` of order ``M = m3 + n``.
    ``deriv(a, b, x)`` replaces the derivatives of ``h_{m3}`` (for synthetic
    calibration).  Returns ``inf`` when the remainder vanishes to rounding at
    every radius.
    """
    r = np.asarray(radii, dtype=float)
    if r.size < 3:
        raise InvalidArgument("at least three radii are needed")
    if np.any(np.diff(r) >= 0) or np.any(r <= 0):
        raise InvalidArgument("radii must be positive and decreasing")
    if deriv is None:
        if dom is not None and q.domain is not dom:
            raise InvalidArgument("quadrature belongs to a different domain")

        def deriv(a, b, x):
            return h_derivative(q, m3, (a, b), x)

    big_m = m3 + n
    th = 2 * np.pi * (np.arange(angles) + 0.5) / angles
    means, scales = [], []
    for rad in r:
        xi = z + rad * np.exp(1j * th)
        rem = taylor_remainder(deriv, big_m, j, z, xi)
        means.append(float(np.mean(np.abs(rem))))
        scales.append(float(np.max(np.abs(deriv(j, 0, xi)))))
    means = np.asarray(means)
    if means.max() <= 1e-12 * max(max(scales), 1e-300):
        return float("inf")
    slope, _ = np.polyfit(np.log(r), np.log(np.maximum(means, 1e-300)), 1)
    return float(slope)


# --------------------------------------------------------------------------
# Green's formula


def area_integral(fn, q, order: int = 48) -> complex:
    """``int_Omega fn dm`` by the star map ``c + s (tau - c)`` over the contour rule.

    Exact up to quadrature error for domains star-shaped about the centroid
    ``c``: trapezoidal or Gauss-Legendre along the boundary, Gauss-Legendre of
    ``order`` points along each ray.
    """
    c = q.domain.centroid if q.domain is not None else complex(np.mean(q.nodes))
    s, ws = np.polynomial.legendre.leggauss(order)
    s = (s + 1) / 2
    ws = ws / 2
    v = q.nodes - c
    jac = np.imag(np.conj(v) * q.weights)
    if np.any(jac < -1e-14 * np.abs(q.weights).max()):
        raise InvalidDomain("domain is not star-shaped about its centroid")
    pts = c + s[:, None] * v[None, :]
    vals = np.asarray(fn(pts), dtype=complex)
    return complex(np.sum(vals * (ws * s)[:, None] * jac[None, :]))


def green_defect(f_fn, g_fn, q, dom=None, spec=None, area: str = "adapted") -> float:
    """Defect of ``int (d f + dbar g) dm = (i/2)(oint f d conj(z) - oint g dz)``.

    ``f_fn = (f, df)`` and ``g_fn = (g, dbar_g)`` are pairs of vectorized
    callables.  ``area="adapted"`` integrates over the domain with
    :func:`area_integral`; ``area="grid"`` uses the coverage indicator on
    ``spec``.
    """
    f, df = f_fn
    g, dbg = g_fn
    dom = dom if dom is not None else q.domain
    validate_contour(q)

    def dens(z):
        return np.asarray(df(z), dtype=complex) + np.asarray(dbg(z), dtype=complex)

    if area == "adapted":
        lhs = area_integral(dens, q)
    elif area == "grid":
        if spec is None:
            raise InvalidArgument("grid area integration needs a grid")
        chi = dom.indicator(spec, "coverage").values.real
        z = spec.points
        lhs = complex(np.sum(dens(z) * chi) * spec.cell_area)
    else:
        raise InvalidArgument("area must be 'adapted' or 'grid'")
    z = q.nodes
    rhs = 0.5j * (q.integrate_conj(np.broadcast_to(f(z), z.shape))
                  - q.integrate(np.broadcast_to(g(z), z.shape)))
    return abs(lhs - rhs)
