"""Neumann-series solution of the Beltrami equation and its operator identities.

For ``||mu||_inf < 1`` the equation ``dbar f = mu d f`` has the principal
solution ``f = C h + z`` where ``h = (I - mu B)^(-1) mu``.  The inverse is
summed as a Neumann series.  Localized operators ``B_Omega`` use the sharp
membership mask, and powers are built from the same discrete pieces so the
algebraic identities hold to rounding.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from . import rng
from .errors import (ConvergenceWarning, GridMismatch, InsufficientData, InvalidArgument,
                     NotContractiveError)
from .grid import (ComplexField, GridSpec, apply_multiplier, make_grid, random_band_limited,
                   sample)
from .norms import SobolevParams, gradient_lp, sobolev_norm
from .singular_ops import beurling, beurling_power, cauchy

# --------------------------------------------------------------------------
# Problem and result types


@dataclass(frozen=True, eq=False)
class BeltramiProblem:
    """A Beltrami coefficient on a domain.

    Parameters
    ----------
    mu : ComplexField
        Coefficient sampled on the working grid, supported in the closed domain.
    dom : LipschitzDomain
    params : SobolevParams
        Smoothness ``(n, p)`` used by the regularity probes.
    mu_fn : callable, optional
        Analytic form of ``mu`` (complex nodes to values) so the problem can
        be resampled at another resolution.

    Raises
    ------
    NotContractiveError
        If ``||mu||_inf >= 1``.
    InvalidArgument
        If ``mu`` does not vanish outside the domain.
    """

    mu: ComplexField
    dom: object
    params: SobolevParams = dc_field(default_factory=lambda: SobolevParams(1, 4))
    mu_fn: Optional[Callable] = None

    def __post_init__(self):
        k = self.mu.sup()
        if not k < 1:
            raise NotContractiveError(f"||mu||_inf = {k:.6g} is not below 1")
        outside = ~self.dom.mask(self.mu.spec)
        if np.any(np.abs(self.mu.values[outside]) > 1e-12):
            raise InvalidArgument("mu must vanish at nodes outside the domain")

    @property
    def k(self) -> float:
        """``||mu||_inf``."""
        return self.mu.sup()

    @property
    def K(self) -> float:
        """Distortion ``(1 + k) / (1 - k)``."""
        return (1 + self.k) / (1 - self.k)

    @property
    def spec(self) -> GridSpec:
        return self.mu.spec

    @classmethod
    def from_function(cls, fn: Callable, dom, spec: GridSpec, params: SobolevParams = None):
        """Sample ``fn`` on ``spec``, cut to the domain mask."""
        mu = sample(fn, spec) * dom.mask(spec).astype(float)
        return cls(mu, dom, params or SobolevParams(1, 4), fn)

    def resampled(self, spec: GridSpec) -> "BeltramiProblem":
        if self.mu_fn is None:
            raise InvalidArgument("problem has no analytic coefficient to resample")
        return BeltramiProblem.from_function(self.mu_fn, self.dom, spec, self.params)


@dataclass
class NeumannTrace:
    """Per-iteration record of the Neumann summation.

    ``increments[k]`` is ``||h_{k+1} - h_k||`` (that is ``||(mu B)^k mu||``)
    and ``residuals[k]`` is ``||(I - mu B) h_{k+1} - mu||``, both discrete
    ``L^2`` norms over the grid.
    """

    increments: list = dc_field(default_factory=list)
    residuals: list = dc_field(default_factory=list)
    converged: bool = False
    support_defect: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.residuals)

    def ratios(self, start: int = 3) -> np.ndarray:
        """Successive residual ratios ``r_{k+1} / r_k`` for ``k >= start``."""
        r = np.asarray(self.residuals, dtype=float)
        if r.size <= start + 1:
            return np.zeros(0)
        a, b = r[start:-1], r[start + 1:]
        ok = a > 0
        return b[ok] / a[ok]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "increment", "residual"])
            for i, (a, b) in enumerate(zip(self.increments, self.residuals)):
                w.writerow([i + 1, repr(float(a)), repr(float(b))])


@dataclass
class PrincipalSolution:
    """``f = C h + z`` with its Wirtinger derivatives and diagnostics."""

    h: ComplexField
    f: ComplexField
    dbar_f: ComplexField
    d_f: ComplexField
    trace: Optional[NeumannTrace]
    diagnostics: dict


# --------------------------------------------------------------------------
# Solver


def neumann_solve(prob: BeltramiProblem, tol: float = 1e-10, kmax: int = 500) -> tuple:
    """Sum ``h = sum_k (mu B)^k mu`` by ``h_{k+1} = mu B h_k + mu``.

    Stops once ``||(I - mu B) h - mu||_{L^2} <= tol``.  One Beurling transform
    per iteration is needed because ``B h_{k+1}`` feeds both the residual and
    the next step.

    Returns
    -------
    (ComplexField, NeumannTrace)

    Warns
    -----
    ConvergenceWarning
        If ``kmax`` iterations do not reach ``tol``.
    """
    if kmax < 1:
        raise InvalidArgument("kmax must be positive")
    mu = prob.mu
    h = ComplexField.zeros(mu.spec)
    bh = ComplexField.zeros(mu.spec)
    trace = NeumannTrace()
    for _ in range(kmax):
        new = mu * bh + mu
        bnew = beurling(new)
        trace.increments.append((new - h).l2())
        trace.residuals.append((new - mu * bnew - mu).l2())
        h, bh = new, bnew
        if trace.residuals[-1] <= tol:
            trace.converged = True
            break
    if not trace.converged:
        warnings.warn(f"Neumann series stopped at residual {trace.residuals[-1]:.3e} "
                      f"after {kmax} iterations", ConvergenceWarning, stacklevel=2)
    off = np.abs(mu.values) == 0
    total = np.abs(h.values).sum()
    trace.support_defect = float(np.abs(h.values[off]).sum() / total) if total > 0 else 0.0
    return h, trace


def principal_solution(prob: BeltramiProblem, h: ComplexField,
                       trace: Optional[NeumannTrace] = None) -> PrincipalSolution:
    """Assemble ``f = C h + z`` and check its derivative identities.

    The torus transform ``C h`` lacks the term ``mean(h) conj(z - c)``, which
    is added back.  Derivatives of the periodic part use the full symbols
    (Nyquist modes included, matching ``C`` and ``B``), so ``dbar f = h`` and
    ``d f = B h + 1`` hold to rounding.

    Raises
    ------
    GridMismatch
        If ``h`` and ``mu`` live on different grids.
    """
    if h.spec != prob.spec:
        raise GridMismatch("h and mu must share a grid")
    spec = h.spec
    z = spec.points
    m = h.mean()
    ch = cauchy(h)
    f = ch + ComplexField(spec, m * np.conj(z - spec.center) + z)
    dsym, dbsym = spec.raw_symbols
    dch, dbch = apply_multiplier(ch, dsym), apply_multiplier(ch, dbsym)
    dbar_f = dbch + m
    d_f = dch + 1.0
    bh = beurling(h)
    mu = prob.mu
    res = (dbar_f - mu * d_f).l2()
    dnorm = d_f.l2()
    strong = np.abs(d_f.values) > 0.1
    excess = np.abs(dbar_f.values) - (prob.k + 1e-6) * np.abs(d_f.values)
    diag = {
        "beltrami_residual": res,
        "beltrami_relative": res / dnorm if dnorm > 0 else 0.0,
        "dbar_defect": (dbar_f - h).l2(),
        "d_defect": (d_f - bh - 1.0).l2(),
        "quasiregular_excess": float(max(excess[strong].max(initial=0.0), 0.0)),
        "far_field": _far_field(f - ComplexField(spec, z), prob.dom),
        "k": prob.k,
        "K": prob.K,
    }
    if trace is not None:
        diag["iterations"] = trace.iterations
        diag["neumann_residual"] = trace.residuals[-1]
    return PrincipalSolution(h, f, dbar_f, d_f, trace, diag)


def _far_field(g: ComplexField, dom) -> dict:
    """``max |g|`` on rings at growing distance from the domain."""
    spec = g.spec
    lo, hi = dom.bbox
    c = (lo + hi) / 2
    r0 = abs(hi - lo) / 2
    r = np.abs(spec.points - c)
    out = {}
    for t in (1.5, 2.0, 3.0):
        ring = np.abs(r - t * r0) < 2 * spec.spacing
        if ring.any() and t * r0 < spec.half_width * 0.95:
            out[str(t)] = float(np.abs(g.values[ring]).max())
    return out


def conformal_defect(sol: PrincipalSolution, prob: BeltramiProblem, distance: float = 0.5) -> float:
    """``max |dbar f|`` over nodes farther than ``distance`` from ``supp mu``."""
    from scipy.ndimage import distance_transform_edt

    spec = sol.h.spec
    d = distance_transform_edt(np.abs(prob.mu.values) == 0) * spec.spacing
    far = d > distance
    return float(np.abs(sol.dbar_f.values[far]).max()) if far.any() else 0.0


def solve(prob: BeltramiProblem, tol: float = 1e-10, kmax: int = 500) -> PrincipalSolution:
    """:func:`neumann_solve` followed by :func:`principal_solution`."""
    h, trace = neumann_solve(prob, tol, kmax)
    return principal_solution(prob, h, trace)


# --------------------------------------------------------------------------
# Localized operator identities


def _chi(prob: BeltramiProblem) -> np.ndarray:
    return prob.dom.mask(prob.spec).astype(float)


def _b_omega(chi: np.ndarray, g: ComplexField, m: int = 1) -> ComplexField:
    """``(B^m)_Omega g = chi B^m (chi g)`` using the ``m``-th power symbol."""
    x = chi * g
    return chi * (beurling(x) if m == 1 else beurling_power(x, m))


def _mu_b_power(mu: ComplexField, chi: np.ndarray, g: ComplexField, k: int) -> ComplexField:
    """``(mu B_Omega)^k g`` with ``(mu B_Omega)^0 = I_Omega``."""
    out = chi * g
    for _ in range(k):
        out = mu * _b_omega(chi, out)
    return out


def pm_identity_defect(prob: BeltramiProblem, m: int, g: ComplexField) -> float:
    """Defect of ``P_m (I_Omega - mu B_Omega) = (I_Omega - mu B_Omega) P_m = I_Omega - (mu B_Omega)^m``.

    ``P_m = sum_{k<m} (mu B_Omega)^k``.  Returns the larger of the two
    discrete ``L^2`` defects.
    """
    if int(m) != m or m < 1:
        raise InvalidArgument("m must be an integer >= 1")
    chi = _chi(prob)
    mu = prob.mu * chi

    def t(x):
        return chi * x - mu * _b_omega(chi, x)

    def p(x):
        out = ComplexField.zeros(x.spec)
        term = chi * x
        for k in range(m):
            out = out + term
            if k < m - 1:
                term = mu * _b_omega(chi, term)
        return out

    target = chi * g - _mu_b_power(mu, chi, g, m)
    return max((p(t(g)) - target).l2(), (t(p(g)) - target).l2())


def factorization_terms(prob: BeltramiProblem, m: int, g: ComplexField) -> tuple:
    """``(A1 g, A2 g, A3 g, defect)`` of the splitting of ``I_Omega - (mu B_Omega)^m``.

    ``A1 = I_Omega - mu^m (B^m)_Omega``, ``A2 = (B^m)_Omega - (B_Omega)^m`` and
    ``A3 = mu^m (B_Omega)^m - (mu B_Omega)^m``; the defect is the discrete
    ``L^2`` norm of ``(I_Omega - (mu B_Omega)^m) g - A1 g - mu^m A2 g - A3 g``.
    """
    if int(m) != m or m < 1:
        raise InvalidArgument("m must be an integer >= 1")
    chi = _chi(prob)
    mu = prob.mu * chi
    mum = mu ** m
    bm = _b_omega(chi, g, m)
    bpow = chi * g
    for _ in range(m):
        bpow = _b_omega(chi, bpow)
    mbp = _mu_b_power(mu, chi, g, m)
    a1 = chi * g - mum * bm
    a2 = bm - bpow
    a3 = mum * bpow - mbp
    lhs = chi * g - mbp
    return a1, a2, a3, (lhs - a1 - mum * a2 - a3).l2()


# --------------------------------------------------------------------------
# Probes


def _power_norm(apply, adjoint, start: ComplexField, iters: int) -> float:
    x = start * (1.0 / max(start.l2(), 1e-300))
    est = 0.0
    for _ in range(iters):
        y = apply(x)
        est = y.l2()
        if est == 0:
            return 0.0
        x = adjoint(y)
        nx = x.l2()
        if nx == 0:
            return est
        x = x * (1.0 / nx)
    return est


def contraction_estimate(prob: BeltramiProblem, m: int, trials: int = 5, iters: int = 20,
                         seed: int = 0) -> dict:
    """Randomized norm estimates of ``g -> mu^m (B^m)_Omega g``.

    Returns ``{"l2", "bm_l2", "sobolev"}``.  ``l2`` and ``bm_l2`` (the same
    estimate for ``(B^m)_Omega`` alone) come from power iteration on
    ``A^* A`` from ``trials`` random starts.  ``sobolev`` is the largest
    quotient ``||A g|| / ||g||`` in the discrete ``W^{n,p}`` norm over random
    smooth ``g`` vanishing near the boundary; it is reported, never asserted.
    """
    if trials < 5:
        raise InvalidArgument("trials must be at least 5")
    if int(m) != m or m < 1:
        raise InvalidArgument("m must be an integer >= 1")
    spec, dom = prob.spec, prob.dom
    chi = _chi(prob)
    mum = (prob.mu * chi) ** m
    if mum.sup() == 0:
        return {"l2": 0.0, "bm_l2": _bm_only(chi, m, spec, trials, iters, seed), "sobolev": 0.0}
    gen = rng.stream(seed, "contraction-starts")
    starts = [random_band_limited(spec, gen, 0.5) * chi for _ in range(trials)]

    def a(x):
        return mum * _b_omega(chi, x, m)

    def ah(x):
        return _bm_adj(chi, mum.conj() * x, m)

    l2 = max(_power_norm(a, ah, s, iters) for s in starts)
    taper = dom.indicator(spec, "mollified", collar=8 * spec.spacing)
    prm = prob.params
    sob = 0.0
    for s in starts:
        g = s * taper
        den = sobolev_norm(g, dom, prm)
        if den > 0:
            sob = max(sob, sobolev_norm(a(g), dom, prm) / den)
    return {"l2": l2, "bm_l2": _bm_only(chi, m, spec, trials, iters, seed), "sobolev": sob}


def _bm_adj(chi, x, m):
    # (B^m)^* is the multiplier with the conjugate symbol, that is conj B^m conj
    return chi * beurling_power((chi * x).conj(), m).conj()


def _bm_only(chi, m, spec, trials, iters, seed) -> float:
    gen = rng.stream(seed, "contraction-starts")
    starts = [random_band_limited(spec, gen, 0.5) * chi for _ in range(trials)]
    return max(_power_norm(lambda x: _b_omega(chi, x, m), lambda x: _bm_adj(chi, x, m), s, iters)
               for s in starts)


def regularity_table(prob: BeltramiProblem, resolutions, tol: float = 1e-10,
                     kmax: int = 500) -> dict:
    """Resolution study of ``||grad^n h||_{L^p}`` and the Sobolev norms of ``h`` and ``f``.

    The analytic coefficient is resampled on grids with the centre and half
    width of ``prob.spec``.  Returns ``{"rows": [...], "ratios": [...]}``
    where ``ratios`` are successive quotients of ``||grad^n h||_{L^p(Omega)}``.
    Bounded ratios (at most 1.25) signal convergence; a coefficient with an
    interior jump makes them grow.

    Raises
    ------
    InsufficientData
        If fewer than three resolutions are given.
    """
    res = [int(r) for r in resolutions]
    if len(res) < 3:
        raise InsufficientData("regularity_table needs at least three resolutions")
    n, p = prob.params.n, prob.params.p
    rows = []
    for N in res:
        spec = make_grid(prob.spec.center, prob.spec.half_width, N)
        pr = prob.resampled(spec)
        h, trace = neumann_solve(pr, tol, kmax)
        sol = principal_solution(pr, h, trace)
        rows.append({
            "resolution": N,
            "grad_h": gradient_lp(h, pr.dom, n, p),
            "sobolev_h": sobolev_norm(h, pr.dom, SobolevParams(n, p)),
            "sobolev_f": sobolev_norm(sol.f, pr.dom, SobolevParams(n + 1, p)),
            "iterations": trace.iterations,
            "beltrami_relative": sol.diagnostics["beltrami_relative"],
        })
    g = [r["grad_h"] for r in rows]
    ratios = [b / a if a > 0 else (1.0 if b == 0 else np.inf) for a, b in zip(g[:-1], g[1:])]
    return {"rows": rows, "ratios": ratios, "bounded": bool(max(ratios) <= 1.25)}


# --------------------------------------------------------------------------
# Standard coefficients


def bump_coefficient(amplitude: float, radius: float, center: complex = 0j) -> Callable:
    """``amplitude (1 - |z - c|^2 / r^2)^3`` inside the disk, zero outside (C^2)."""
    def fn(z):
        t = np.clip(1 - np.abs(z - center) ** 2 / radius ** 2, 0, None)
        return amplitude * t ** 3
    return fn


def jump_coefficient(amplitude: float, radius: float, center: complex = 0j) -> Callable:
    """``amplitude`` on the disk ``|z - c| < r``, zero outside."""
    def fn(z):
        return amplitude * (np.abs(z - center) < radius)
    return fn


def mollified_coefficient(amplitude: float, dom, spec: GridSpec) -> ComplexField:
    """``amplitude`` times the mollified indicator of ``dom`` (ramp width ``4h``)."""
    return dom.indicator(spec, "mollified") * amplitude
