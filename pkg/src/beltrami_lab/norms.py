"""Discrete Sobolev, Holder and boundary Besov norms, approximating polynomials.

Derivatives are centred finite differences of fourth order.  They are only
evaluated at admissible cells, those whose centre lies farther than
``(n + 1) h`` from the boundary, so no stencil crosses it; the measure of the
excluded collar is reported alongside each norm.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from math import comb, factorial

import numpy as np

from . import rng
from .errors import DegenerateProbeError, InvalidArgument, UndefinedNormError
from .grid import ComplexField, GridSpec

EXACT = "exact"
"""Marker returned by :func:`poincare_ratio` when both sides vanish."""


@dataclass(frozen=True)
class SobolevParams:
    """Smoothness ``n >= 0`` and integrability ``1 < p < inf``."""

    n: int
    p: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise InvalidArgument("n must be a non-negative integer")
        if not 1 < self.p < np.inf:
            raise InvalidArgument("p must lie in (1, inf)")

    @property
    def algebra(self) -> bool:
        """``n p > 2``: the space is a multiplicative algebra in the plane."""
        return self.n * self.p > 2


# --------------------------------------------------------------------------
# Region helpers


def _region(f: ComplexField, dom) -> np.ndarray:
    if dom is None:
        return np.ones(f.spec.shape, dtype=bool)
    if isinstance(dom, np.ndarray):
        return dom.astype(bool)
    return dom.mask(f.spec)


def admissible_mask(dom, spec: GridSpec, n: int) -> tuple:
    """Cells with ``dist(centre, boundary) > (n + 1) h`` and the excluded collar area."""
    h = spec.spacing
    band = (n + 1) * h
    inside = dom.mask(spec)
    sd = dom.signed_distance(spec, band)
    ok = inside & (sd > band)
    collar = float((inside.sum() - ok.sum()) * spec.cell_area)
    return ok, collar


def lp_norm(f: ComplexField, dom=None, p: float = 2.0) -> float:
    """``(sum_{cells in dom} |f|^p h^2)^(1/p)``, or the maximum for ``p = inf``.

    ``dom`` may be a domain or a boolean mask; ``None`` means the whole grid.
    """
    if not p >= 1:
        raise InvalidArgument("p must be at least 1")
    m = _region(f, dom)
    v = np.abs(f.values[m])
    if v.size == 0:
        return 0.0
    if np.isinf(p):
        return float(v.max())
    return float((np.sum(v ** p) * f.spec.cell_area) ** (1 / p))


# --------------------------------------------------------------------------
# Finite differences


@lru_cache(maxsize=None)
def fd_weights(order: int, accuracy: int = 4) -> tuple:
    """Centred stencil ``(offsets, weights)`` for the ``order``-th derivative (unit spacing)."""
    if order == 0:
        return (0,), (1.0,)
    r = (order + 1) // 2 - 1 + accuracy // 2
    off = np.arange(-r, r + 1)
    a = np.vander(off.astype(float), increasing=True).T
    rhs = np.zeros(off.size)
    rhs[order] = factorial(order)
    w = np.linalg.solve(a, rhs)
    return tuple(int(o) for o in off), tuple(float(x) for x in w)


def stencil_radius(n: int) -> int:
    return max(len(fd_weights(a)[0]) // 2 for a in range(n + 1))


def partial(values: np.ndarray, a: int, b: int, h: float) -> np.ndarray:
    """``d_x^a d_y^b`` by centred differences with periodic wrap (callers mask the edges)."""
    out = values
    for ax, k in ((0, a), (1, b)):
        if k == 0:
            continue
        off, w = fd_weights(k)
        acc = np.zeros_like(out)
        for o, c in zip(off, w):
            if c != 0:
                acc = acc + c * np.roll(out, -o, axis=ax)
        out = acc / h ** k
    return out


def gradient_magnitude(f: ComplexField, n: int) -> np.ndarray:
    """``|grad^n f| = sum_{a+b=n} |d_x^a d_y^b f|``."""
    h = f.spec.spacing
    if n == 0:
        return np.abs(f.values)
    return sum(np.abs(partial(f.values, a, n - a, h)) for a in range(n + 1))


def _directional(f: ComplexField, n: int) -> np.ndarray:
    h = f.spec.spacing
    if n == 0:
        return np.abs(f.values)
    return np.abs(partial(f.values, n, 0, h)) + np.abs(partial(f.values, 0, n, h))


def sobolev_norm(f: ComplexField, dom, prm: SobolevParams, variant: str = "full",
                 return_collar: bool = False):
    """``||f||_{L^p(Omega)} + ||grad^n f||_{L^p(Omega')}`` over the admissible interior ``Omega'``.

    Parameters
    ----------
    variant : {"full", "directional"}
        ``directional`` replaces ``grad^n`` by ``|d_x^n f| + |d_y^n f|``, an
        equivalent norm.
    return_collar : bool
        Also return the area of the excluded collar.

    Raises
    ------
    UndefinedNormError
        If no cell is admissible.
    """
    ok, collar = admissible_mask(dom, f.spec, prm.n)
    if not ok.any():
        raise UndefinedNormError("domain is thinner than the derivative stencil")
    base = lp_norm(f, dom, prm.p)
    if prm.n == 0:
        val = 2 * base
    else:
        g = gradient_magnitude(f, prm.n) if variant == "full" else _directional(f, prm.n)
        if variant not in ("full", "directional"):
            raise InvalidArgument(f"unknown variant {variant!r}")
        val = base + float((np.sum(g[ok] ** prm.p) * f.spec.cell_area) ** (1 / prm.p))
    return (val, collar) if return_collar else val


def gradient_lp(f: ComplexField, dom, n: int, p: float) -> float:
    """``||grad^n f||_{L^p}`` over the admissible interior."""
    ok, _ = admissible_mask(dom, f.spec, n)
    if not ok.any():
        raise UndefinedNormError("domain is thinner than the derivative stencil")
    g = gradient_magnitude(f, n)
    return float((np.sum(g[ok] ** p) * f.spec.cell_area) ** (1 / p))


def holder_norm(f: ComplexField, dom, s: float, seed: int = 0, random_pairs: int = 100_000,
                exhaustive_below: int = 10_000) -> float:
    """``||f||_inf + sup |f(x) - f(y)| / |x - y|^s`` over cells of the domain.

    All pairs are used when the domain has fewer than ``exhaustive_below``
    cells.  Otherwise the supremum runs over every pair of cells at dyadic
    axis and diagonal offsets plus ``random_pairs`` uniform random pairs.
    """
    if not 0 < s <= 1:
        raise InvalidArgument("s must lie in (0, 1]")
    m = _region(f, dom)
    idx = np.argwhere(m)
    if idx.size == 0:
        raise UndefinedNormError("no cells inside the domain")
    z = f.spec.points[m]
    v = f.values[m]
    sup = float(np.abs(v).max())
    best = 0.0
    if idx.shape[0] < exhaustive_below:
        for chunk in np.array_split(np.arange(z.size), max(1, z.size // 1024)):
            d = np.abs(z[chunk, None] - z[None, :])
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.abs(v[chunk, None] - v[None, :]) / d ** s
            q[d == 0] = 0.0
            best = max(best, float(q.max()))
        return sup + best
    vals = np.where(m, f.values, np.nan)
    n = f.spec.resolution
    k = 1
    while k < n:
        for dx, dy in ((k, 0), (0, k), (k, k), (k, -k)):
            a = vals[max(0, -dx):n - max(0, dx), max(0, -dy):n - max(0, dy)]
            b = vals[max(0, dx):n + min(0, dx), max(0, dy):n + min(0, dy)]
            diff = np.abs(a - b)
            if np.any(np.isfinite(diff)):
                best = max(best, float(np.nanmax(diff)) / (np.hypot(dx, dy) * f.spec.spacing) ** s)
        k *= 2
    gen = rng.stream(seed, "holder-pairs")
    i = gen.integers(z.size, size=random_pairs)
    j = gen.integers(z.size, size=random_pairs)
    d = np.abs(z[i] - z[j])
    keep = d > 0
    best = max(best, float((np.abs(v[i] - v[j])[keep] / d[keep] ** s).max()))
    return sup + best


# --------------------------------------------------------------------------
# Boundary Besov seminorm


def besov_boundary_seminorm(normal, s: float, p: float) -> float:
    """Difference seminorm of the normal field on the boundary.

    ``(int int |Delta_h^M N(t)|^p / |h|^(1 + s p) dh dt)^(1/p)`` with
    ``M = floor(s) + 1``, periodic differences at uniform arc-length nodes of
    spacing ``dt`` and ``2 dt <= |h| <= T/2`` (both signs).

    Raises
    ------
    InvalidArgument
        For integer ``s``, where the difference seminorm is not equivalent.
    """
    if s <= 0 or float(s).is_integer():
        raise InvalidArgument("s must be positive and not an integer")
    if not 1 <= p < np.inf:
        raise InvalidArgument("p must lie in [1, inf)")
    g = np.asarray(normal.samples)
    m = g.size
    dt = normal.length / m
    order = int(np.floor(s)) + 1
    coef = [(-1) ** (order - k) * comb(order, k) for k in range(order + 1)]
    total = 0.0
    for k in range(2, m // 2 + 1):
        diff = sum(c * np.roll(g, -j * k) for j, c in enumerate(coef))
        total += np.sum(np.abs(diff) ** p) * dt / (k * dt) ** (1 + s * p) * dt
    return float((2 * total) ** (1 / p))


# --------------------------------------------------------------------------
# Approximating polynomials


@dataclass(frozen=True)
class ApproxPolynomial:
    """``sum_{a+b <= degree} coeffs[(a, b)] (x - x_Q)^a (y - y_Q)^b``."""

    center: complex
    degree: int
    coeffs: dict = dc_field(default_factory=dict)

    def __call__(self, z):
        w = np.asarray(z) - self.center
        x, y = w.real, w.imag
        out = np.zeros(np.shape(z), dtype=complex)
        for (a, b), c in self.coeffs.items():
            out = out + c * x ** a * y ** b
        return out

    def to_field(self, spec: GridSpec) -> ComplexField:
        return ComplexField(spec, self(spec.points))

    def coefficient_array(self) -> np.ndarray:
        return np.array([self.coeffs[k] for k in sorted(self.coeffs)])


def _cube_slices(spec: GridSpec, corner: complex, side: float, pad: int = 0):
    i0, j0 = (int(x) for x in spec.first_index(complex(corner)))
    k = int(np.rint(side / spec.spacing))
    n = spec.resolution
    if i0 - pad < 0 or j0 - pad < 0 or i0 + k + pad > n or j0 + k + pad > n:
        raise InvalidArgument("cube (with its stencil margin) does not fit inside the grid")
    return slice(i0 - pad, i0 + k + pad), slice(j0 - pad, j0 + k + pad), k


def _multi_indices(deg: int):
    return [(a, t - a) for t in range(deg + 1) for a in range(t, -1, -1)]


def _block_partial(block: np.ndarray, a: int, b: int, h: float, pad: int) -> np.ndarray:
    d = partial(block, a, b, h)
    return d[pad:-pad, pad:-pad] if pad else d


def approx_poly(f: ComplexField, cube, n: int) -> ApproxPolynomial:
    """The polynomial ``P`` of degree ``n - 1`` matching the means of ``D^alpha f`` on the cube.

    ``cube`` is ``(corner, side)`` with a grid-aligned corner.  Derivatives of
    ``f`` and of the monomials go through the same discrete stencils, so
    polynomials of degree ``n - 1`` are reproduced to rounding.

    Raises
    ------
    InvalidArgument
        If the cube holds fewer than ``(n + 1)^2`` cells or does not fit.
    DegenerateProbeError
        If the moment system is singular.
    """
    if n < 1:
        raise InvalidArgument("n must be at least 1")
    corner, side = cube
    spec = f.spec
    pad = stencil_radius(n - 1)
    sx, sy, k = _cube_slices(spec, corner, side, pad)
    if k * k < (n + 1) ** 2:
        raise InvalidArgument("cube holds too few cells for the moment system")
    zc = complex(corner) + side * (1 + 1j) / 2
    z = spec.points[sx, sy] - zc
    h = spec.spacing
    idx = _multi_indices(n - 1)
    fb = f.values[sx, sy]
    rhs = np.array([_block_partial(fb, a, b, h, pad).mean() for a, b in idx])
    mat = np.empty((len(idx), len(idx)))
    for col, (ga, gb) in enumerate(idx):
        mono = z.real ** ga * z.imag ** gb
        for row, (a, b) in enumerate(idx):
            mat[row, col] = _block_partial(mono, a, b, h, pad).mean()
    if np.linalg.cond(mat) > 1e12:
        raise DegenerateProbeError("singular moment system")
    c = np.linalg.solve(mat, rhs)
    return ApproxPolynomial(zc, n - 1, {g: complex(v) for g, v in zip(idx, c)})


def coefficient_bound_ratio(f: ComplexField, cube, n: int) -> float:
    """``max |m_gamma| / (||f||_{W^{n-1,inf}(3Q)} (1 + l^(n-1)))`` for ``P_{3Q}^{n-1}``."""
    corner, side = cube
    big = (complex(corner) - side * (1 + 1j), 3 * side)
    poly = approx_poly(f, big, n)
    pad = stencil_radius(n - 1)
    sx, sy, _ = _cube_slices(f.spec, *big, pad)
    fb = f.values[sx, sy]
    w = max(float(np.abs(_block_partial(fb, a, b, f.spec.spacing, pad)).max())
            for a, b in _multi_indices(n - 1))
    # the Taylor form is centred at the centre of Q, which coincides with that of 3Q
    return float(np.abs(poly.coefficient_array()).max() / (w * (1 + side ** (n - 1))))


def _bump(t: np.ndarray) -> np.ndarray:
    """Smooth step: 1 for ``|t| <= 0.75``, 0 for ``|t| >= 1``."""
    u = np.clip((np.abs(t) - 0.75) / 0.25, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u < 1, np.exp(-1 / np.maximum(1 - u, 1e-300)), 0.0)
        b = np.where(u > 0, np.exp(-1 / np.maximum(u, 1e-300)), 0.0)
    return a / (a + b)


def poincare_ratio(f: ComplexField, cube, n: int, j: int, p: float):
    """``||grad^j((f - P_{3Q}^{n-1} f) phi)||_{L^p(3Q)} / (l^(n-j) ||grad^n f||_{L^p(3Q)})``.

    ``phi`` is a fixed smooth bump equal to 1 on ``(3/2) Q`` and vanishing
    outside ``2 Q``.  Returns :data:`EXACT` when ``f`` is a polynomial of
    degree below ``n`` (both sides vanish).
    """
    if not 0 <= j <= n:
        raise InvalidArgument("need 0 <= j <= n")
    corner, side = cube
    corner = complex(corner)
    big = (corner - side * (1 + 1j), 3 * side)
    poly = approx_poly(f, big, n)
    spec = f.spec
    pad = stencil_radius(n)
    sx, sy, _ = _cube_slices(spec, *big, pad)
    z = spec.points[sx, sy]
    zc = corner + side * (1 + 1j) / 2
    phi = _bump((z.real - zc.real) / side) * _bump((z.imag - zc.imag) / side)
    h = spec.spacing
    resid = (f.values[sx, sy] - poly(z)) * phi
    num_field = sum(np.abs(_block_partial(resid, a, j - a, h, pad)) for a in range(j + 1)) if j else \
        np.abs(resid[pad:-pad, pad:-pad])
    den_field = sum(np.abs(_block_partial(f.values[sx, sy], a, n - a, h, pad)) for a in range(n + 1))
    ca = spec.cell_area
    num = (np.sum(num_field ** p) * ca) ** (1 / p)
    grad_n = (np.sum(den_field ** p) * ca) ** (1 / p)
    size = (np.sum(np.abs(f.values[sx, sy][pad:-pad, pad:-pad]) ** p) * ca) ** (1 / p)
    if grad_n <= 1e-9 * size / side ** n:
        return EXACT
    return float(num / (side ** (n - j) * grad_n))


# --------------------------------------------------------------------------
# Algebra property


def algebra_ratio(f: ComplexField, g_or_power, dom, prm: SobolevParams) -> float:
    """Left side over right side of the product or power bound in ``W^{n,p}``.

    With a field ``g``: ``||f g|| / (||f|| ||g||)``.  With an integer ``m >= n``:
    ``||f^m|| / (m^n ||f||_inf^(m-n) ||f||^n)``.

    Raises
    ------
    InvalidArgument
        If ``n p <= 2`` or ``m < n``.
    """
    if not prm.algebra:
        raise InvalidArgument("the algebra bound needs n p > 2")
    if isinstance(g_or_power, ComplexField):
        g = g_or_power
        den = sobolev_norm(f, dom, prm) * sobolev_norm(g, dom, prm)
        return float(sobolev_norm(f * g, dom, prm) / den)
    m = int(g_or_power)
    if m < max(prm.n, 1):
        raise InvalidArgument("the power bound needs m >= n")
    fm = f
    for _ in range(m - 1):
        fm = fm * f
    sup = lp_norm(f, dom, np.inf)
    nf = sobolev_norm(f, dom, prm)
    return float(sobolev_norm(fm, dom, prm) / (m ** prm.n * sup ** (m - prm.n) * nf ** prm.n))


# --------------------------------------------------------------------------


def norm_record(norm: str, value, params: dict, dom, spec: GridSpec, collar: float = 0.0) -> dict:
    """JSON-ready record ``{norm, value, params, domain, resolution, collar_measure}``."""
    return {
        "norm": norm,
        "value": value if isinstance(value, str) else float(value),
        "params": params,
        "domain": getattr(dom, "name", "grid"),
        "resolution": spec.resolution,
        "collar_measure": float(collar),
    }


def dumps_records(records) -> str:
    return json.dumps(list(records), indent=2, sort_keys=True)
