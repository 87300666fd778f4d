"""Exact residue-calculus values on the unit disk.

On ``|w| = 1`` the conjugate is ``1/w``, so every boundary integral below
becomes a contour integral of a rational function.  The residues at the
interior poles are computed symbolically with sympy in exact rational
arithmetic, independently of any quadrature.
"""

from __future__ import annotations

import sympy as sp

_W = sp.Symbol("w")


def _exact(x: complex):
    x = complex(x)
    return sp.Rational(x.real) + sp.I * sp.Rational(x.imag)


def _disk_integral(expr, poles) -> complex:
    total = sum(sp.residue(expr, _W, p) for p in poles)
    return complex(sp.N(2 * sp.pi * sp.I * total, 30))


def _inside(points):
    out = []
    for p in points:
        if abs(complex(p)) >= 1:
            raise ValueError("points must lie inside the unit disk")
        if all(sp.simplify(p - q) != 0 for q in out):
            out.append(p)
    return out


def disk_h(m3: int, z: complex) -> complex:
    """``h_{m3}(z) = oint_{|w|=1} conj(w - z)^m3 / (w - z) dw``."""
    zz = _exact(z)
    expr = (1 - sp.conjugate(zz) * _W) ** m3 / (_W ** m3 * (_W - zz))
    poles = _inside([sp.Integer(0)] + [zz]) if m3 > 0 else [zz]
    return _disk_integral(sp.together(expr), poles)


def disk_kernel(mvec, z: complex, xi: complex) -> complex:
    """``K(z, xi) = oint_{|w|=1} conj(w - xi)^m3 / ((z - w)^m1 (w - xi)^m2) dw``."""
    m1, m2, m3 = (int(v) for v in (mvec.astuple() if hasattr(mvec, "astuple") else mvec))
    zz, xx = _exact(z), _exact(xi)
    expr = (1 - sp.conjugate(xx) * _W) ** m3 / (_W ** m3 * (zz - _W) ** m1 * (_W - xx) ** m2)
    poles = _inside(([sp.Integer(0)] if m3 > 0 else []) + [zz, xx])
    return _disk_integral(sp.together(expr), poles)


def disk_big_h(m3: int, xi: complex, w: complex) -> complex:
    """``H_{m3,xi}(w)`` on the unit disk for ``|w| != 1``."""
    xx, ww = _exact(xi), _exact(w)
    expr = (1 - sp.conjugate(xx) * _W) ** m3 / (_W ** m3 * (_W - ww))
    poles = ([sp.Integer(0)] if m3 > 0 else []) + ([ww] if abs(complex(w)) < 1 else [])
    if not poles:
        return 0j
    total = sum(sp.residue(expr, _W, p) for p in poles)
    return complex(sp.N(total, 30))
