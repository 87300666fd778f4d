"""Beurling and Cauchy transforms, the kernel family T^gamma and their localizations.

Conventions
-----------
``B`` is the Fourier multiplier ``d_sym / dbar_sym`` (so ``B dbar = d`` on every
mode) and ``C`` the multiplier ``1 / dbar_sym``.  Both are set to zero at the
zero frequency, hence identities involving ``C`` hold modulo grid means.  In
physical space ``B = -(1/pi) T^(-2,0)``, ``C = (1/pi) T^(-1,0)`` and
``B^m = ((-1)^m m / pi) T^(-m-1, m-1)`` where ``T^gamma`` has kernel
``z^g1 conj(z)^g2``.

All multipliers act on the torus of side ``2L``.  :func:`free_beurling_power`
subtracts the smooth lattice-image part of the periodic kernel so that values
near compactly supported data approximate the operator on the whole plane.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from math import comb, factorial
from typing import Optional, Sequence

import numpy as np
import scipy.fft as sfft
from scipy.signal import fftconvolve

from .errors import InvalidArgument, SupportWarning, UnsupportedHomogeneity
from .grid import ComplexField, GridSpec, apply_multiplier

# --------------------------------------------------------------------------
# Multipliers


def beurling_symbol(spec: GridSpec) -> np.ndarray:
    """Unimodular symbol ``d_sym / dbar_sym`` with value 0 at the origin."""
    d, dbar = spec.raw_symbols
    with np.errstate(divide="ignore", invalid="ignore"):
        s = d / dbar
    s[0, 0] = 0.0
    return s


def cauchy_symbol(spec: GridSpec) -> np.ndarray:
    """Symbol ``1 / dbar_sym`` with value 0 at the origin."""
    _, dbar = spec.raw_symbols
    with np.errstate(divide="ignore", invalid="ignore"):
        s = 1.0 / dbar
    s[0, 0] = 0.0
    return s


def support_leak(f: ComplexField) -> float:
    """Fraction of ``sum |f|`` lying outside the central quarter."""
    a = np.abs(f.values)
    total = a.sum()
    if total == 0:
        return 0.0
    return float(a[~f.spec.central_quarter()].sum() / total)


def _check_support(f: ComplexField, threshold: float = 1e-6) -> None:
    leak = support_leak(f)
    if leak > threshold:
        warnings.warn(
            f"{leak:.2e} of the field mass lies outside the central quarter; "
            "periodization error may exceed discretization error",
            SupportWarning,
            stacklevel=3,
        )


def beurling(f: ComplexField) -> ComplexField:
    """Beurling transform ``Bf`` as a Fourier multiplier on the torus."""
    _check_support(f)
    return apply_multiplier(f, beurling_symbol(f.spec))


def beurling_power(f: ComplexField, m: int) -> ComplexField:
    """``B^m f`` using the ``m``-th power of the Beurling symbol.

    Raises
    ------
    InvalidArgument
        If ``m < 1``.
    """
    if int(m) != m or m < 1:
        raise InvalidArgument(f"m must be an integer >= 1, got {m!r}")
    _check_support(f)
    return apply_multiplier(f, beurling_symbol(f.spec) ** int(m))


def cauchy(f: ComplexField) -> ComplexField:
    """Cauchy transform on the torus.

    ``dbar(Cf) = f - mean(f)`` and ``d(Cf) = Bf`` for band-limited ``f``.
    """
    _check_support(f)
    return apply_multiplier(f, cauchy_symbol(f.spec))


def cauchy_with_mean(f: ComplexField) -> ComplexField:
    """``Cf + mean(f) conj(z - center)``, whose ``dbar`` is ``f`` itself.

    The added term is the part of the planar Cauchy transform that the torus
    cannot represent.  The result is not periodic and must not be
    differentiated spectrally; its derivatives are ``Bf`` and ``f``.
    """
    z = f.spec.points - f.spec.center
    return cauchy(f) + ComplexField(f.spec, f.mean() * np.conj(z))


# --------------------------------------------------------------------------
# Lattice-image correction for powers of B


def _falling(x: int, n: int) -> float:
    out = 1.0
    for i in range(n):
        out *= x - i
    return out


def _lattice(period: float, width: int):
    r = np.arange(-width, width + 1)
    w = (r[:, None] + 1j * r[None, :]).ravel()
    w = w[w != 0] * period
    return np.log(np.abs(w)), np.angle(w)


@lru_cache(maxsize=64)
def lattice_coefficients(m: int, half_width: float, degree: int = 48) -> dict:
    """Taylor coefficients of the periodic ``B^m`` kernel minus the planar one.

    The torus kernel of ``B^m`` equals ``K(u) + E(u)`` on the fundamental
    cell, where ``K(u) = ((-1)^m m/pi) conj(u)^(m-1) / u^(m+1)`` and ``E`` is
    real-analytic in ``|u| < 2L``.  Returns ``{(a, b): e_ab}`` with
    ``E(u) = sum e_ab u^a conj(u)^b``.  Non-constant coefficients are
    absolutely convergent lattice sums of derivatives of ``K``; the constant
    is fixed by the zero-mean convention of the multiplier.
    """
    period = 2.0 * half_width
    c = (-1) ** m * m / np.pi
    lat = {}
    coef = {}

    def lattice_sum(alpha, beta, n):
        width = 200 if n <= 2 else (60 if n <= 6 else 24)
        if width not in lat:
            lat[width] = _lattice(period, width)
        logr, th = lat[width]
        return np.sum(np.exp((alpha + beta) * logr + 1j * (alpha - beta) * th))

    const_degree = max(degree, 64)
    for a in range(const_degree + 1):
        for b in range(const_degree + 1 - a):
            if a + b == 0:
                continue
            alpha, beta = -m - 1 - a, m - 1 - b
            if (alpha - beta) % 4:
                continue
            fb = _falling(m - 1, b)
            if fb == 0:
                continue
            # beyond `degree` only the coefficients entering the constant are kept
            if a + b > degree and (a - b) % 4:
                continue
            val = c * _falling(-m - 1, a) * fb * lattice_sum(alpha, beta, a + b)
            coef[(a, b)] = val / (factorial(a) * factorial(b))

    # zero mean over the fundamental cell fixes the constant
    x, wt = np.polynomial.legendre.leggauss(72)
    x = x * half_width
    wt = wt * half_width
    u = (x[:, None] + 1j * x[None, :]).ravel()
    uw = (wt[:, None] * wt[None, :]).ravel()
    smooth = sum(v * np.sum(uw * u ** a * np.conj(u) ** b) for (a, b), v in coef.items())
    t, tw = np.polynomial.legendre.leggauss(64)
    t = t * np.pi / 4
    tw = tw * np.pi / 4
    pv = 0.0
    for q in range(4):
        th = t + q * np.pi / 2
        rad = half_width / np.cos(t)
        pv += np.sum(tw * np.exp(-2j * m * th) * np.log(rad))
    const = -(c * pv + smooth) / (4.0 * half_width ** 2)
    out = {k: v for k, v in coef.items() if k[0] + k[1] <= degree}
    out[(0, 0)] = complex(const)
    return out


def lattice_correction(f: ComplexField, m: int, points, degree: int = 48) -> np.ndarray:
    """Evaluate ``int E(z - w) f(w) dm(w)`` at ``points``.

    Uses source moments up to total degree ``degree``; valid while
    ``|z - w|`` stays well inside ``2L``.
    """
    spec = f.spec
    coef = lattice_coefficients(int(m), spec.half_width, degree)
    vals = f.values
    # sources below 1e-15 of the peak cannot change the moments
    sup = np.abs(vals) > 1e-15 * np.abs(vals).max(initial=0.0)
    w = (spec.points - spec.center)[sup]
    fw = vals[sup] * spec.cell_area
    d = degree
    wp = np.vander(w, d + 1, increasing=True)
    wq = np.conj(wp)
    moments = (wp * fw[:, None]).T @ wq  # moments[p, q] = sum w^p conj(w)^q f h^2
    g = np.zeros((d + 1, d + 1), dtype=complex)
    for (a, b), e in coef.items():
        for s in range(a + 1):
            ca = comb(a, s) * (-1) ** (a - s)
            for t in range(b + 1):
                g[s, t] += e * ca * comb(b, t) * (-1) ** (b - t) * moments[a - s, b - t]
    u = np.asarray(points, dtype=complex).ravel() - spec.center
    up = np.vander(u, d + 1, increasing=True)
    out = np.sum(up * (np.conj(up) @ g.T), axis=1)
    return out.reshape(np.shape(points))


def free_beurling_power(f: ComplexField, m: int, degree: int = 48) -> ComplexField:
    """``B^m f`` with the periodic image contribution removed.

    The correction is applied on the central quarter of the grid, where
    compactly supported data and their near field live; values outside it
    are the plain torus values.
    """
    torus = beurling_power(f, m)
    mask = f.spec.central_quarter()
    corr = np.zeros(f.spec.shape, dtype=complex)
    corr[mask] = lattice_correction(f, m, f.spec.points[mask], degree)
    return torus - ComplexField(f.spec, corr)


# --------------------------------------------------------------------------
# The kernel family T^gamma


def _validate_gamma(gamma) -> tuple:
    g1, g2 = (int(gamma[0]), int(gamma[1]))
    if g1 + g2 < -2:
        raise UnsupportedHomogeneity(f"homogeneity {g1 + g2} < -2 is not supported")
    if (g1, g2) == (-1, -1):
        raise UnsupportedHomogeneity("gamma = (-1, -1) has no principal value")
    return g1, g2


def kernel(gamma, u):
    """``K^gamma(u) = u^g1 conj(u)^g2``."""
    g1, g2 = gamma
    u = np.asarray(u, dtype=complex)
    return u ** g1 * np.conj(u) ** g2


def diagonal_cell_integral(gamma, h: float) -> complex:
    """Integral of ``K^gamma`` over the centred cell of side ``h``.

    For homogeneity ``-2`` this is the principal value.  Polar coordinates
    reduce it to ``int e^{i k theta} F(R(theta)) d theta`` with
    ``R(theta)`` the distance to the cell edge, integrated with
    Gauss-Legendre nodes on each quarter sector.
    """
    g1, g2 = _validate_gamma(gamma)
    s, kap = g1 + g2, g1 - g2
    t, tw = np.polynomial.legendre.leggauss(48)
    t = t * np.pi / 4
    tw = tw * np.pi / 4
    total = 0.0
    for q in range(4):
        th = t + q * np.pi / 2
        rad = (h / 2) / np.cos(t)
        radial = np.log(rad) if s == -2 else rad ** (s + 2) / (s + 2)
        total += np.sum(tw * np.exp(1j * kap * th) * radial)
    return complex(total)


def _cell_integral(gamma, center: complex, h: float, nodes: int = 12) -> complex:
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = x * h / 2
    w = w * h / 2
    u = center + x[:, None] + 1j * x[None, :]
    return complex(np.sum(w[:, None] * w[None, :] * kernel(gamma, u)))


_FAR_NODES = 4


def _far_weights(gamma, u, h: float) -> np.ndarray:
    """Gauss cell integrals of ``K^gamma`` over the cells centred at ``u`` (away from 0)."""
    x, wt = np.polynomial.legendre.leggauss(_FAR_NODES)
    x, wt = x * h / 2, wt * h / 2
    out = np.zeros(np.shape(u), dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        for a in range(_FAR_NODES):
            for b in range(_FAR_NODES):
                out += wt[a] * wt[b] * kernel(gamma, u + x[a] + 1j * x[b])
    return out


@lru_cache(maxsize=32)
def _near_weights(gamma, h: float, radius: int) -> np.ndarray:
    size = 2 * radius + 1
    out = np.empty((size, size), dtype=complex)
    for p in range(-radius, radius + 1):
        for q in range(-radius, radius + 1):
            if p == 0 and q == 0:
                out[p + radius, q + radius] = diagonal_cell_integral(gamma, h)
            else:
                out[p + radius, q + radius] = _cell_integral(gamma, h * (p + 1j * q), h)
    return out


NEAR_RADIUS = 2


def tgamma_weights(gamma, spec: GridSpec, radius: int = NEAR_RADIUS) -> np.ndarray:
    """Quadrature weights ``W[dj, dk]`` on offsets ``-(N-1)..N-1``.

    Far cells use a 4 x 4 Gauss rule on the cell; cells within ``radius``
    of the diagonal use exact cell integrals of the kernel.  The midpoint
    value ``h^2 K`` is not enough: its error ``h^4 Delta K / 24`` has a
    lattice sum that does not vanish with ``h`` when ``K`` is not harmonic.
    """
    g = _validate_gamma(gamma)
    n, h = spec.resolution, spec.spacing
    off = h * np.arange(-(n - 1), n)
    u = off[:, None] + 1j * off[None, :]
    w = _far_weights(g, u, h)
    c = n - 1
    w[c - radius:c + radius + 1, c - radius:c + radius + 1] = _near_weights(g, h, radius)
    return w


def tgamma_pv(gamma, f: ComplexField, pts, radius: int = NEAR_RADIUS, chunk: int = 256) -> np.ndarray:
    """Direct principal-value quadrature of ``T^gamma f`` at grid points.

    ``sum_w W(z - w) f(w)`` over the support of ``f`` with the weights of
    :func:`tgamma_weights`.

    Parameters
    ----------
    gamma : (int, int)
        Kernel index with ``g1 + g2 >= -2`` and ``gamma != (-1, -1)``.
    f : ComplexField
    pts : array_like of complex
        Evaluation points; each must coincide with a grid node.
    """
    g = _validate_gamma(gamma)
    spec = f.spec
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    jz, kz = spec.index_of(pts)
    if np.any((jz < 0) | (jz >= spec.resolution) | (kz < 0) | (kz >= spec.resolution)):
        raise InvalidArgument("evaluation points must lie on the grid")
    snapped = spec.points[jz, kz]
    if np.max(np.abs(snapped - pts), initial=0.0) > 1e-9 * spec.spacing:
        raise InvalidArgument("evaluation points must be grid nodes")
    near = _near_weights(g, spec.spacing, radius)
    sj, sk = np.nonzero(f.values)
    fv = f.values[sj, sk]
    h = spec.spacing
    out = np.empty(pts.size, dtype=complex)
    for start in range(0, pts.size, chunk):
        dj = jz[start:start + chunk, None] - sj[None, :]
        dk = kz[start:start + chunk, None] - sk[None, :]
        isnear = (np.abs(dj) <= radius) & (np.abs(dk) <= radius)
        w = _far_weights(g, h * (dj + 1j * dk), h)
        w[isnear] = near[dj[isnear] + radius, dk[isnear] + radius]
        out[start:start + chunk] = w @ fv
    return out


def tgamma_apply(gamma, f: ComplexField, radius: int = NEAR_RADIUS) -> ComplexField:
    """The quadrature of :func:`tgamma_pv` at every node, as a linear convolution."""
    w = tgamma_weights(gamma, f.spec, radius)
    n = f.spec.resolution
    full = fftconvolve(f.values, w, mode="full")
    return ComplexField(f.spec, full[n - 1:2 * n - 1, n - 1:2 * n - 1])


def beurling_power_constant(m: int) -> float:
    """``c`` with ``B^m = c T^(-m-1, m-1)``."""
    return (-1) ** m * m / np.pi


# --------------------------------------------------------------------------
# Operator handles


def _mask(dom, spec: GridSpec) -> np.ndarray:
    return dom.mask(spec).astype(float)


def _check_domain(dom, spec: GridSpec) -> None:
    lo, hi = dom.bbox
    c, q = spec.center, spec.half_width / 2
    if lo.real < c.real - q or lo.imag < c.imag - q or hi.real > c.real + q or hi.imag > c.imag + q:
        raise InvalidArgument("domain must lie inside the central quarter of the grid")


@dataclass(frozen=True, eq=False)
class OperatorHandle:
    """Immutable description of a linear operator on grid fields.

    Build handles with the module-level constructors (:func:`identity_op`,
    :func:`beurling_op`, :func:`localize`, ...).  ``compose(A, B)`` applies
    ``B`` first.
    """

    kind: str
    params: dict = dc_field(default_factory=dict)
    inner: tuple = ()
    domain: object = None
    mu: Optional[ComplexField] = None

    def apply(self, f: ComplexField) -> ComplexField:
        return self._run(f, adjoint=False)

    def adjoint_apply(self, f: ComplexField) -> ComplexField:
        """Apply the adjoint for the discrete ``L^2`` inner product."""
        return self._run(f, adjoint=True)

    def apply_at(self, f: ComplexField, points) -> np.ndarray:
        """Evaluate ``op(f)`` at grid points; ``tgamma`` uses direct quadrature."""
        if self.kind == "tgamma":
            return tgamma_pv(self.params["gamma"], f, points)
        return self.apply(f).at(points)

    def _run(self, f: ComplexField, adjoint: bool) -> ComplexField:
        k = self.kind
        spec = f.spec
        if k == "identity":
            return f
        if k == "zero":
            return ComplexField.zeros(spec)
        if k == "beurling_power":
            s = beurling_symbol(spec) ** self.params["m"]
            return apply_multiplier(f, np.conj(s) if adjoint else s)
        if k == "cauchy":
            s = cauchy_symbol(spec)
            return apply_multiplier(f, np.conj(s) if adjoint else s)
        if k == "tgamma":
            g = self.params["gamma"]
            if not adjoint:
                return tgamma_apply(g, f)
            w = np.conj(tgamma_weights(g, spec)[::-1, ::-1])
            n = spec.resolution
            full = fftconvolve(f.values, w, mode="full")
            return ComplexField(spec, full[n - 1:2 * n - 1, n - 1:2 * n - 1])
        if k == "multiply":
            mu = self.mu.conj() if adjoint else self.mu
            return mu * f
        if k == "localized":
            _check_domain(self.domain, spec)
            chi = _mask(self.domain, spec)
            inner = self.inner[0]
            return chi * inner._run(chi * f, adjoint)
        if k == "commutator":
            b = localize(beurling_op(1), self.domain)
            mul = multiply_op(self.mu)
            if adjoint:
                # ([mu, B_O])^* = B_O^* conj(mu) - conj(mu) B_O^*
                return b._run(mul._run(f, True), True) - mul._run(b._run(f, True), True)
            return mul._run(b._run(f, False), False) - b._run(mul._run(f, False), False)
        if k == "reflection":
            _check_domain(self.domain, spec)
            m = self.params["m"]
            chi = _mask(self.domain, spec)
            s = beurling_symbol(spec)
            if adjoint:
                g = apply_multiplier(chi * f, np.conj(s))
                return chi * apply_multiplier((1.0 - chi) * g, np.conj(s) ** (m - 1))
            g = apply_multiplier(chi * f, s ** (m - 1))
            return chi * apply_multiplier((1.0 - chi) * g, s)
        if k == "composition":
            ops = self.inner if adjoint else tuple(reversed(self.inner))
            out = f
            for op in ops:
                out = op._run(out, adjoint)
            return out
        raise InvalidArgument(f"unknown operator kind {k!r}")

    def to_json(self) -> dict:
        """JSON description ``{kind, params, domain, inner}``."""
        d = {"kind": self.kind, "params": dict(self.params)}
        if "gamma" in d["params"]:
            d["params"]["gamma"] = list(d["params"]["gamma"])
        if self.domain is not None:
            d["domain"] = self.domain.name
        if self.mu is not None:
            d["mu"] = "field"
        if self.inner:
            d["inner"] = [op.to_json() for op in self.inner]
        return d


def identity_op() -> OperatorHandle:
    return OperatorHandle("identity")


def zero_op() -> OperatorHandle:
    return OperatorHandle("zero")


def beurling_op(m: int = 1) -> OperatorHandle:
    if int(m) != m or m < 1:
        raise InvalidArgument("m must be an integer >= 1")
    return OperatorHandle("beurling_power", {"m": int(m)})


def cauchy_op() -> OperatorHandle:
    return OperatorHandle("cauchy")


def tgamma_op(gamma) -> OperatorHandle:
    return OperatorHandle("tgamma", {"gamma": _validate_gamma(gamma)})


def multiply_op(mu: ComplexField) -> OperatorHandle:
    return OperatorHandle("multiply", mu=mu)


def compose(*ops: OperatorHandle) -> OperatorHandle:
    """``compose(A, B, C)`` is ``A o B o C``."""
    return OperatorHandle("composition", inner=tuple(ops))


def localize(op: OperatorHandle, dom) -> OperatorHandle:
    """``T_Omega f = chi_Omega T(chi_Omega f)`` with the sharp membership mask."""
    return OperatorHandle("localized", inner=(op,), domain=dom)


def commutator_op(mu: ComplexField, dom) -> OperatorHandle:
    return OperatorHandle("commutator", domain=dom, mu=mu)


def reflection_op(m: int, dom) -> OperatorHandle:
    if int(m) != m or m < 1:
        raise InvalidArgument("m must be an integer >= 1")
    return OperatorHandle("reflection", {"m": int(m)}, domain=dom)


def commutator_apply(mu: ComplexField, dom, f: ComplexField) -> ComplexField:
    """``mu B_Omega f - B_Omega(mu f)``."""
    return commutator_op(mu, dom).apply(f)


def reflection_apply(m: int, dom, f: ComplexField) -> ComplexField:
    """``R_m f = chi_Omega B(chi_{Omega^c} B^{m-1}(chi_Omega f))``."""
    return reflection_op(m, dom).apply(f)


def smoothing_probe(op: OperatorHandle, dom, k: int, spec: GridSpec, seed: int = 0,
                    oversample: int = 10, power_iters: int = 2) -> np.ndarray:
    """Leading singular values of ``op`` restricted to the cells of ``dom``.

    Randomized range finder with ``power_iters`` subspace iterations, using
    ``op.adjoint_apply`` for the transposed sweeps.

    Returns
    -------
    numpy.ndarray
        ``k`` singular-value estimates in decreasing order.
    """
    from .rng import stream

    mask = dom.mask(spec)
    n = int(mask.sum())
    if k < 1 or k > n:
        raise InvalidArgument(f"k must be in [1, {n}] (interior cell count)")
    r = min(n, k + oversample)
    rng = stream(seed, "smoothing-probe")

    def lift(x):
        v = np.zeros(spec.shape, dtype=complex)
        v[mask] = x
        return ComplexField(spec, v)

    def a(cols):
        return np.stack([op.apply(lift(c)).values[mask] for c in cols.T], axis=1)

    def ah(cols):
        return np.stack([op.adjoint_apply(lift(c)).values[mask] for c in cols.T], axis=1)

    g = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    y = a(g)
    for _ in range(power_iters):
        q, _ = np.linalg.qr(y)
        y = a(ah(q))
    q, _ = np.linalg.qr(y)
    b = ah(q).conj().T
    sv = np.linalg.svd(b, compute_uv=False)
    return sv[:k]
