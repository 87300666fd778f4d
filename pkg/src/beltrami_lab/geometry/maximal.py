"""Hardy-Littlewood maximal function and covering-based double sums.

Fields used with a Whitney covering live on a grid aligned with the dyadic
lattice (see :func:`covering_grid`), so every Whitney cube and every dilate
``20Q`` is a union of grid cells and its integral is an exact box sum.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import maximum_filter1d

from .. import rng
from ..errors import InvalidArgument
from ..grid import ComplexField, GridSpec

# --------------------------------------------------------------------------
# Grids and box sums


def covering_grid(cov, cells_per_min_side: int = 4) -> GridSpec:
    """Grid of spacing ``min_side / cells_per_min_side`` whose cells tile the dyadic lattice."""
    h = float(cov.sides.min()) / cells_per_min_side
    lo, hi = cov.domain.bbox
    width = max(hi.real - lo.real, hi.imag - lo.imag) + 4 * h
    n = 16
    while n * h < width:
        n *= 2
    mid = (lo + hi) / 2
    center = complex(h * (np.floor(mid.real / h) + 0.5), h * (np.floor(mid.imag / h) + 0.5))
    return GridSpec(center, n * h / 2, n)


def summed_area(values: np.ndarray) -> np.ndarray:
    """``S[i, j] = sum(values[:i, :j])`` with a zero first row and column."""
    s = np.zeros((values.shape[0] + 1, values.shape[1] + 1))
    s[1:, 1:] = values.cumsum(0).cumsum(1)
    return s


def box_sums(sat: np.ndarray, spec: GridSpec, lo, hi) -> np.ndarray:
    """Sums over the nodes in the half-open boxes ``[lo, hi)`` (clipped to the grid)."""
    n = spec.resolution
    i0, j0 = (np.clip(x, 0, n) for x in spec.first_index(lo))
    i1, j1 = (np.clip(x, 0, n) for x in spec.first_index(hi))
    i1, j1 = np.maximum(i1, i0), np.maximum(j1, j0)
    return sat[i1, j1] - sat[i0, j1] - sat[i1, j0] + sat[i0, j0]


def cube_integrals(cov, field: ComplexField, dilation: float = 1.0) -> np.ndarray:
    """``int_{tQ} |f|`` for every cube (``t = dilation``, about the cube centre)."""
    sat = summed_area(np.abs(field.values)) * field.spec.cell_area
    half = dilation * cov.sides * (1 + 1j) / 2
    return box_sums(sat, field.spec, cov.centers - half, cov.centers + half)


# --------------------------------------------------------------------------
# Maximal operator


def maximal(f: ComplexField, max_side: int = None) -> ComplexField:
    """Non-centred maximal function over grid-aligned squares of dyadic side.

    For every side ``2^k h`` all translates lying inside the grid are tested,
    so ``Mf(x)`` is the largest mean of ``Re f`` over such squares containing
    the cell of ``x``.  Scales that are not dyadic are missed, which lowers
    ``M`` by at most a factor 4 against the continuous operator.
    """
    v = np.real(f.values)
    n = f.spec.resolution
    sat = summed_area(v)
    out = v.copy()
    k = 2
    limit = n if max_side is None else min(n, max_side)
    while k <= limit:
        m = (sat[k:, k:] - sat[:-k, k:] - sat[k:, :-k] + sat[:-k, :-k]) / (k * k)
        pad = np.full((n, n), -np.inf)
        pad[k - 1:, k - 1:] = m
        r = maximum_filter1d(pad, k, axis=0, mode="constant", cval=-np.inf, origin=-(k // 2))
        r = maximum_filter1d(r, k, axis=1, mode="constant", cval=-np.inf, origin=-(k // 2))
        out = np.maximum(out, r)
        k *= 2
    return ComplexField(f.spec, out)


def maximal_ratio(f: ComplexField, p: float = 2.0) -> float:
    """``||Mf||_p / ||f||_p`` on the grid."""
    m = maximal(ComplexField(f.spec, np.abs(f.values)))
    num = np.sum(np.abs(m.values) ** p) ** (1 / p)
    den = np.sum(np.abs(f.values) ** p) ** (1 / p)
    return float(num / den) if den > 0 else 0.0


def _inf_over_cubes(cov, field: ComplexField) -> np.ndarray:
    spec = field.spec
    i0, j0 = spec.first_index(cov.corners)
    k = np.rint(cov.sides / spec.spacing).astype(int)
    v = np.real(field.values)
    return np.array([v[i:i + m, j:j + m].min() for i, j, m in zip(i0, j0, k)])


def random_densities(spec: GridSpec, mask: np.ndarray, count: int, seed: int = 0) -> list:
    """Non-negative test densities on the domain: smooth lumps plus sparse spikes."""
    gen = rng.stream(seed, "maximal-densities")
    z = spec.points
    out = []
    for _ in range(count):
        v = np.zeros(spec.shape)
        idx = np.argwhere(mask)
        for _ in range(gen.integers(1, 5)):
            c = z[tuple(idx[gen.integers(idx.shape[0])])]
            w = gen.uniform(0.02, 0.3)
            v += gen.uniform(0.5, 2.0) * np.exp(-np.abs(z - c) ** 2 / w ** 2)
        spikes = idx[gen.integers(idx.shape[0], size=gen.integers(1, 20))]
        v[spikes[:, 0], spikes[:, 1]] += gen.uniform(1, 50, size=spikes.shape[0])
        v += gen.uniform(0, 0.2)
        out.append(ComplexField(spec, v * mask))
    return out


def maximal_lemma_audit(cov, g: ComplexField, eta: float = 1.0, radii_factors=(1, 2, 4, 8, 16, 32)) -> dict:
    """Worst constant of each maximal inequality (keys ``far``, ``close``, ``below``).

    For every cube ``Q`` and ``r = t l(Q)``::

        far:   sum_{D(Q,S) > r} int_S g / D^(2+eta)  <=  C inf_Q Mg / r^eta
        close: sum_{D(Q,S) < r} int_S g / D^(2-eta)  <=  C inf_Q Mg r^eta
        below: sum_{S < Q}      int_S g              <=  C inf_Q Mg l(Q)^2

    Returns the largest observed ``C`` for each form.
    """
    if eta <= 0:
        raise InvalidArgument("eta must be positive")
    G = cube_integrals(cov, g)
    mg = _inf_over_cubes(cov, maximal(g))
    D = cov.D
    far = close = below = 0.0
    for t in radii_factors:
        r = t * cov.sides[:, None]
        lf = np.sum(np.where(D > r, G[None, :] / D ** (2 + eta), 0.0), axis=1)
        lc = np.sum(np.where(D < r, G[None, :] / D ** (2 - eta), 0.0), axis=1)
        rf = mg / r[:, 0] ** eta
        rc = mg * r[:, 0] ** eta
        far = max(far, _worst(lf, rf))
        close = max(close, _worst(lc, rc))
    pos = cov._ascent_position
    desc = (pos < (1 << 30)).T
    np.fill_diagonal(desc, False)
    lb = desc.astype(float) @ G
    below = _worst(lb, mg * cov.sides ** 2)
    return {"far": far, "close": close, "below": below}


def _worst(lhs, rhs) -> float:
    ok = rhs > 0
    if np.any((~ok) & (lhs > 0)):
        return float("inf")
    return float((lhs[ok] / rhs[ok]).max()) if ok.any() else 0.0


# --------------------------------------------------------------------------
# Double sum of the two-function lemma


def chain_double_sum(cov, f, g, rho: float = 1.0):
    """``A_rho(f, g)``, the chain-weighted double sum over all cube pairs (d = 2).

    ``sum_{Q,S} sum_{P in [S,Q]} l(S)^2 D(P,S)^(rho-1) ||f||_{L1(20P)} ||g||_{L1(20Q)}
    / (l(P) D(Q,S)^(rho+2))``, summed exactly over every ordered pair.
    ``f`` and ``g`` may be single fields or equal-length lists of fields, in
    which case an array of sums is returned.
    """
    if rho < 1:
        raise InvalidArgument("rho must be at least 1")
    single = isinstance(f, ComplexField)
    fs, gs = ([f], [g]) if single else (list(f), list(g))
    F = np.array([cube_integrals(cov, x, 20.0) for x in fs])
    G = np.array([cube_integrals(cov, x, 20.0) for x in gs])
    out = _double_sum(cov, F, G, rho)
    return float(out[0]) if single else out


def _double_sum(cov, F: np.ndarray, G: np.ndarray, rho: float) -> np.ndarray:
    D, l = cov.D, cov.sides
    total = np.zeros(F.shape[0])
    prefix = cov.ascent_prefix(F / l) if rho == 1 else None
    for s, i, jj in cov.splices():
        w = F / l if rho == 1 else D[:, s] ** (rho - 1) * F / l
        inner = cov.chain_sums(s, w, i, jj, prefix)
        total += np.sum(inner * G * (l[s] ** 2 / D[:, s] ** (rho + 2)), axis=-1)
    return total


def chain_sum_ratio(cov, f, g, rho: float = 1.0, p: float = 2.0):
    """``A_rho(f, g) / (||f||_{L^p(Omega)} ||g||_{L^p'(Omega)})``.

    Fields must live on a grid produced by :func:`covering_grid`.  Lists of
    fields give an array of ratios computed in a single pass.
    """
    if not 1 < p < np.inf:
        raise InvalidArgument("p must lie in (1, inf)")
    if cov.size == 0:
        raise InvalidArgument("empty covering")
    single = isinstance(f, ComplexField)
    fs, gs = ([f], [g]) if single else (list(f), list(g))
    mask = cov.domain.mask(fs[0].spec)
    q = p / (p - 1)
    ca = fs[0].spec.cell_area
    nf = np.array([(np.sum(np.abs(x.values[mask]) ** p) * ca) ** (1 / p) for x in fs])
    ng = np.array([(np.sum(np.abs(x.values[mask]) ** q) * ca) ** (1 / q) for x in gs])
    den = nf * ng
    a = np.asarray(chain_double_sum(cov, fs, gs, rho))
    out = np.where(den > 0, a / np.where(den > 0, den, 1.0), 0.0)
    return float(out[0]) if single else out
