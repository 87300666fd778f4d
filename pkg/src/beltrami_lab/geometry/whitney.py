"""Whitney coverings, long distance, admissible chains and shadows.

Cubes are half-open dyadic squares ``[x, x + l) x [y, y + l)`` produced by a
quadtree: a square is accepted once it lies inside the domain with
``dist(Q, boundary) >= C_W l(Q)``; squares smaller than ``min_side`` that are
never accepted form the uncovered collar.

The ascent of a cube towards the central cube ``Q0`` is the sequence of cubes
met by the segment joining their centres.  When that segment leaves the
covered region the ascent falls back to a greedy path: every cube's parent is
the neighbour one hop closer to ``Q0`` (breadth-first hop count) with the
largest side, ties broken by the smallest long distance to ``Q0``.
The chain ``[Q, S]`` joins the ascents of ``Q`` and ``S`` at the first pair of
positions ``(i, j)`` with minimal ``i + j`` whose cubes coincide or are
neighbours.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import shapely

from ..errors import EmptyCoverError, InvalidArgument, NoChainError

SQRT2 = np.sqrt(2.0)


# --------------------------------------------------------------------------
# Long distance


def _box_dist(c1, l1, c2, l2):
    """Euclidean distance between closed axis-parallel squares (vectorized)."""
    dx = np.maximum(np.abs(np.real(c1) - np.real(c2)) - (l1 + l2) / 2, 0.0)
    dy = np.maximum(np.abs(np.imag(c1) - np.imag(c2)) - (l1 + l2) / 2, 0.0)
    return np.hypot(dx, dy)


def long_distance(a, b) -> float:
    """``D(A, B) = diam A + diam B + dist(A, B)`` for squares ``(corner, side)``.

    Examples
    --------
    >>> round(long_distance((0, 1.0), (0, 1.0)), 12) == round(2 * 2 ** 0.5, 12)
    True
    """
    (ca, la), (cb, lb) = a, b
    ca = complex(ca) + la * (1 + 1j) / 2
    cb = complex(cb) + lb * (1 + 1j) / 2
    return float(SQRT2 * (la + lb) + _box_dist(ca, la, cb, lb))


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Chain:
    """Ordered neighbour path ``Q = Q_1, ..., Q_M = S`` of cube indices.

    ``ascent_end`` is the position of the pivot ``Q_S`` (last cube of the
    ascending part) and ``descent_start`` the position of ``S_Q``.
    """

    cubes: tuple
    ascent_end: int
    descent_start: int

    def __len__(self):
        return len(self.cubes)

    @property
    def ascending(self) -> tuple:
        return self.cubes[: self.ascent_end + 1]

    @property
    def descending(self) -> tuple:
        return self.cubes[self.descent_start:]


class WhitneyCovering:
    """Dyadic Whitney covering of a :class:`LipschitzDomain`.

    Attributes
    ----------
    corners : ndarray of complex
        Lower-left corners.
    sides : ndarray
        Side lengths ``l(Q)``.
    dist : ndarray
        Exact distances from each closed cube to the boundary polyline.
    q0 : int
        Index of the central cube.
    collar_area : float
        Area of the domain not covered by accepted cubes.
    """

    def __init__(self, dom, corners, sides, dist, c_w: float, min_side: float):
        self.domain = dom
        self.corners = np.asarray(corners, dtype=complex)
        self.sides = np.asarray(sides, dtype=float)
        self.dist = np.asarray(dist, dtype=float)
        self.c_w = float(c_w)
        self.min_side = float(min_side)
        self.centers = self.corners + self.sides * (1 + 1j) / 2
        n = self.size
        big = self.sides == self.sides.max()
        cand = np.flatnonzero(big)
        self.q0 = int(cand[np.argmin(np.abs(self.centers[cand] - dom.centroid))])
        self.collar_area = float(dom.area - np.sum(self.sides ** 2))
        c, l = self.centers, self.sides
        d = _box_dist(c[:, None], l[:, None], c[None, :], l[None, :])
        self.D = SQRT2 * (l[:, None] + l[None, :]) + d
        tol = 1e-9 * l.min()
        adj = d <= tol
        np.fill_diagonal(adj, False)
        self.adjacency = adj
        self.neighbors = [np.flatnonzero(adj[i]) for i in range(n)]
        self._build_ascents()

    @property
    def size(self) -> int:
        return self.sides.size

    def __len__(self):
        return self.size

    def cube(self, i: int) -> tuple:
        """``(corner, side)`` of cube ``i``."""
        return complex(self.corners[i]), float(self.sides[i])

    def index_of(self, z: complex) -> int:
        """Index of the half-open cube containing ``z``, or -1."""
        dz = complex(z) - self.corners
        hit = (dz.real >= 0) & (dz.real < self.sides) & (dz.imag >= 0) & (dz.imag < self.sides)
        idx = np.flatnonzero(hit)
        return int(idx[0]) if idx.size else -1

    # ------------------------------------------------------------ ascents

    def _build_ascents(self):
        n = self.size
        hop = np.full(n, -1)
        hop[self.q0] = 0
        queue = deque([self.q0])
        while queue:
            i = queue.popleft()
            for j in self.neighbors[i]:
                if hop[j] < 0:
                    hop[j] = hop[i] + 1
                    queue.append(j)
        self.hops = hop
        self.connected = bool(np.all(hop >= 0))
        parent = np.full(n, -1)
        for i in range(n):
            if hop[i] <= 0:
                continue
            nb = self.neighbors[i]
            nb = nb[hop[nb] == hop[i] - 1]
            key = np.lexsort((self.D[nb, self.q0], -self.sides[nb]))
            parent[i] = nb[key[0]]
        self.parent = parent
        self._build_label()
        asc = []
        self.segment_ascent = np.zeros(n, dtype=bool)
        for i in range(n):
            path = self._segment_path(i) if hop[i] >= 0 else None
            if path is None:
                path = [i]
                while hop[path[-1]] > 0:
                    path.append(int(parent[path[-1]]))
            else:
                self.segment_ascent[i] = True
            asc.append(np.array(path))
        self.ascents = asc

    def _build_label(self):
        """Raster of cube indices at resolution ``min(l)`` over the bounding box."""
        s = self.sides.min()
        self._origin = complex(self.corners.real.min(), self.corners.imag.min())
        off = (self.corners - self._origin) / s
        ix, iy = np.rint(off.real).astype(int), np.rint(off.imag).astype(int)
        k = np.rint(self.sides / s).astype(int)
        shape = (int((ix + k).max()), int((iy + k).max()))
        lab = np.full(shape, -1, dtype=np.int64)
        for i in range(self.size):
            lab[ix[i]:ix[i] + k[i], iy[i]:iy[i] + k[i]] = i
        self._label, self._cell = lab, s

    def _locate(self, z) -> np.ndarray:
        w = (np.asarray(z) - self._origin) / self._cell
        ix, iy = np.floor(w.real).astype(int), np.floor(w.imag).astype(int)
        ok = (ix >= 0) & (iy >= 0) & (ix < self._label.shape[0]) & (iy < self._label.shape[1])
        out = np.full(w.shape, -1, dtype=np.int64)
        out[ok] = self._label[ix[ok], iy[ok]]
        return out

    def _segment_path(self, i: int):
        """Cubes met by the segment from the centre of ``i`` to the centre of ``Q0``."""
        a, b = self.centers[i], self.centers[self.q0]
        steps = int(np.ceil(abs(b - a) / (self._cell / 8))) + 1
        t = np.linspace(0.0, 1.0, steps + 1)
        hit = self._locate(a + t * (b - a))
        if np.any(hit < 0):
            return None
        keep = np.concatenate([[True], hit[1:] != hit[:-1]])
        path = [int(k) for k in hit[keep]]
        for u, v in zip(path[:-1], path[1:]):
            if not self.adjacency[u, v]:
                return None
        if len(set(path)) != len(path):
            return None
        return path

    def ascent(self, i: int) -> tuple:
        """Cubes from ``i`` up to ``Q0`` along parents."""
        if self.hops[i] < 0:
            raise NoChainError(f"cube {i} is not connected to the central cube")
        return tuple(int(k) for k in self.ascents[i])

    @cached_property
    def _ascent_position(self) -> np.ndarray:
        """``pos[S, X]`` = position of ``X`` in the ascent of ``S``, or a large sentinel."""
        n = self.size
        pos = np.full((n, n), 1 << 30, dtype=np.int64)
        for s, a in enumerate(self.ascents):
            pos[s, a] = np.arange(a.size)
        return pos

    def _splice_all(self, q: int):
        """Best splice ``(i, j, equal)`` of the ascent of ``q`` with every ascent."""
        pos = self._ascent_position
        a = self.ascents[q]
        n = self.size
        best = np.full(n, 1 << 40, dtype=np.int64)
        bi = np.zeros(n, dtype=np.int64)
        bj = np.zeros(n, dtype=np.int64)
        beq = np.zeros(n, dtype=bool)
        for i, x in enumerate(a):
            if np.all(best <= i):
                break
            jeq = pos[:, x]
            nb = self.neighbors[x]
            jnb = pos[:, nb].min(axis=1) if nb.size else np.full(n, 1 << 30)
            j = np.minimum(jeq, jnb)
            eq = jeq <= jnb
            tot = i + j
            better = tot < best
            best[better] = tot[better]
            bi[better] = i
            bj[better] = j[better]
            beq[better] = eq[better]
        return bi, bj, beq

    def chain(self, q: int, s: int) -> Chain:
        """Admissible chain ``[Q, S]`` between cube indices ``q`` and ``s``."""
        if not (0 <= q < self.size and 0 <= s < self.size):
            raise InvalidArgument("cube index out of range")
        if self.hops[q] < 0 or self.hops[s] < 0:
            raise NoChainError("covering is disconnected")
        bi, bj, beq = self._splice_all(q)
        i, j, eq = int(bi[s]), int(bj[s]), bool(beq[s])
        return self._assemble(q, s, i, j, eq)

    def _assemble(self, q, s, i, j, eq) -> Chain:
        a, b = self.ascents[q], self.ascents[s]
        if eq:
            cubes = tuple(int(k) for k in a[: i + 1]) + tuple(int(k) for k in b[:j][::-1])
            return Chain(cubes, i, i)
        cubes = tuple(int(k) for k in a[: i + 1]) + tuple(int(k) for k in b[: j + 1][::-1])
        return Chain(cubes, i, i + 1)

    def chain_length(self, ch: Chain) -> float:
        """``l([Q, S]) = sum of sides``."""
        return float(self.sides[list(ch.cubes)].sum())

    @cached_property
    def ascent_matrix(self) -> np.ndarray:
        """Ascents padded with the sentinel index ``n`` into an ``n x L`` array."""
        n = self.size
        width = max(a.size for a in self.ascents)
        out = np.full((n, width), n, dtype=np.int64)
        for i, a in enumerate(self.ascents):
            out[i, : a.size] = a
        return out

    def splices(self):
        """Yield ``(q, i, jj)`` for every first cube ``q``.

        The chain ``[Q, S]`` is ``ascent(Q)[:i[S] + 1]`` followed by the
        reversed ``ascent(S)[:jj[S]]``, so the cubes are disjoint by
        construction.
        """
        if not self.connected:
            raise NoChainError("covering is disconnected")
        for q in range(self.size):
            bi, bj, beq = self._splice_all(q)
            yield q, bi, np.where(beq, bj, bj + 1)

    def chain_sums(self, q: int, weights: np.ndarray, i: np.ndarray, jj: np.ndarray,
                   prefix: np.ndarray = None) -> np.ndarray:
        """``sum_{P in [Q, S]} weights[..., P]`` for all ``S`` given the splice of ``q``.

        ``weights`` has the cube axis last; leading axes broadcast.  ``prefix``
        may hold :meth:`ascent_prefix` of the same weights to skip recomputation.
        """
        a = self.ascents[q]
        up = np.cumsum(weights[..., a], axis=-1)[..., i]
        if prefix is None:
            prefix = self.ascent_prefix(weights)
        cols = np.arange(self.size)
        down = np.where(jj > 0, prefix[..., cols, np.maximum(jj - 1, 0)], 0.0)
        return up + down

    def ascent_prefix(self, weights: np.ndarray) -> np.ndarray:
        """Cumulative sums of ``weights`` along every ascent (sentinel weight 0)."""
        w = np.concatenate([weights, np.zeros(weights.shape[:-1] + (1,))], axis=-1)
        return np.cumsum(w[..., self.ascent_matrix], axis=-1)

    def chain_lengths(self) -> np.ndarray:
        """``L[Q, S] = l([Q, S])`` for all ordered pairs."""
        out = np.empty((self.size, self.size))
        pre = self.ascent_prefix(self.sides)
        for q, i, jj in self.splices():
            out[q] = self.chain_sums(q, self.sides, i, jj, pre)
        return out

    # ------------------------------------------------------------ shadows

    def shadow(self, q: int, rho: float = 5.0) -> np.ndarray:
        """Indices ``S`` with ``D(S, Q) <= rho l(Q)``."""
        if rho < 1:
            raise InvalidArgument("rho must be at least 1")
        return np.flatnonzero(self.D[q] <= rho * self.sides[q])

    def descendants(self, q: int) -> np.ndarray:
        """Cubes ``S <= Q``: those whose ascent passes through ``Q``."""
        return np.flatnonzero(self._ascent_position[:, q] < (1 << 30))

    def calibrate_rho(self, rho: float = 5.0) -> float:
        """Smallest ``rho0 >= rho`` (on a half-integer grid) with descendants in the shadow."""
        need = 0.0
        for q in range(self.size):
            d = self.descendants(q)
            need = max(need, float((self.D[d, q] / self.sides[q]).max()))
        return float(max(rho, np.ceil(2 * need) / 2))

    # ------------------------------------------------------------ output

    def generation_census(self) -> dict:
        """Number of cubes per side length, largest first."""
        s, c = np.unique(self.sides, return_counts=True)
        return {float(a): int(b) for a, b in zip(s[::-1], c[::-1])}

    def write_csv(self, path) -> None:
        """Export ``corner_x, corner_y, side, dist_to_boundary`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["corner_x", "corner_y", "side", "dist_to_boundary"])
            for c, l, d in zip(self.corners, self.sides, self.dist):
                w.writerow([repr(c.real), repr(c.imag), repr(l), repr(d)])

    def __repr__(self):
        return f"WhitneyCovering({self.domain.name!r}, cubes={self.size}, C_W={self.c_w})"


def whitney(dom, min_side: float, c_w: float = 2.0) -> WhitneyCovering:
    """Build the dyadic Whitney covering of ``dom`` down to side ``min_side``.

    Raises
    ------
    InvalidArgument
        If ``min_side`` is not positive.
    EmptyCoverError
        If no cube is accepted, e.g. ``min_side`` exceeds the inradius.
    """
    if not min_side > 0:
        raise InvalidArgument("min_side must be positive")
    lo, hi = dom.bbox
    side = 2.0 ** np.ceil(np.log2(max(hi.real - lo.real, hi.imag - lo.imag)))
    x0 = np.floor(lo.real / side) * side
    y0 = np.floor(lo.imag / side) * side
    nx = int(np.ceil((hi.real - x0) / side))
    ny = int(np.ceil((hi.imag - y0) / side))
    gx, gy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    cand = (x0 + gx.ravel() * side) + 1j * (y0 + gy.ravel() * side)
    corners, sides, dists = [], [], []
    while cand.size and side >= min_side * (1 - 1e-12):
        boxes = shapely.box(cand.real, cand.imag, cand.real + side, cand.imag + side)
        dist = shapely.distance(boxes, dom.boundary_line)
        ctr = cand + side * (1 + 1j) / 2
        inside = (dist > 0) & dom.contains(ctr)
        ok = inside & (dist >= c_w * side * (1 - 1e-12))
        corners.append(cand[ok])
        sides.append(np.full(ok.sum(), side))
        dists.append(dist[ok])
        rest = cand[~ok]
        rest = rest[shapely.intersects(boxes[~ok], dom.polygon)]
        half = side / 2
        cand = np.concatenate([rest, rest + half, rest + 1j * half, rest + half * (1 + 1j)])
        side = half
    corners = np.concatenate(corners) if corners else np.array([], dtype=complex)
    if corners.size == 0:
        raise EmptyCoverError("no Whitney cube fits; decrease min_side")
    return WhitneyCovering(dom, corners, np.concatenate(sides), np.concatenate(dists), c_w, min_side)


# --------------------------------------------------------------------------
# Audits


def audit_covering(cov: WhitneyCovering) -> dict:
    """Exhaustive checks of the covering invariants.

    Returns a dict with the observed extremes: distance ratios
    ``dist / l`` (must lie in ``[C_W, 4 C_W]``), the worst neighbour side
    ratio, the overlap of the dilated family ``{20Q}`` sampled at cube
    centres and corners, and the size ratio ``diam / l(Q0)``.
    """
    l, d = cov.sides, cov.dist
    ratio = d / l
    i, j = np.nonzero(cov.adjacency)
    nb_ratio = float((l[i] / l[j]).max()) if i.size else 1.0
    pts = np.concatenate([cov.centers, cov.corners, cov.corners + l, cov.corners + 1j * l,
                          cov.corners + l * (1 + 1j)])
    overlap = 0
    for chunk in np.array_split(pts, max(1, pts.size // 512)):
        inside = (np.abs(chunk[:, None].real - cov.centers[None, :].real) <= 10 * l) & \
                 (np.abs(chunk[:, None].imag - cov.centers[None, :].imag) <= 10 * l)
        overlap = max(overlap, int(inside.sum(axis=1).max()))
    return {
        "cubes": cov.size,
        "dist_ratio_min": float(ratio.min()),
        "dist_ratio_max": float(ratio.max()),
        "distance_ok": bool(ratio.min() >= cov.c_w * (1 - 1e-9) and ratio.max() <= 4 * cov.c_w),
        "neighbor_ratio_max": nb_ratio,
        "neighbor_ok": nb_ratio <= 2.0,
        "overlap_20Q": overlap,
        "q0_size_ratio": float(cov.domain.diameter / l[cov.q0]),
        "collar_area": cov.collar_area,
        "collar_bound": float(cov.domain.length * cov.min_side * 8 * cov.c_w),
        "collar_ok": bool(0 <= cov.collar_area <= cov.domain.length * cov.min_side * 8 * cov.c_w),
        "connected": cov.connected,
    }


def shadow_area_bound(rho: float) -> float:
    """Packing bound ``1 + 4r + pi r^2`` (``r = rho - sqrt 2``) for ``sum_{S in SH_rho(P)} l(S)^2 / l(P)^2``.

    Every ``S`` in the shadow satisfies ``diam S + dist(S, P) <= (rho - sqrt 2) l(P)``,
    so the interiors of these cubes lie in the ``r l(P)`` neighbourhood of ``P``.
    """
    r = max(rho - np.sqrt(2.0), 0.0)
    return float(1 + 4 * r + np.pi * r * r)


def audit_chains(cov: WhitneyCovering, rho0: float = 5.0) -> dict:
    """Exhaustive chain and shadow audit over all ordered pairs.

    Records the worst ``l([Q, S]) / D(Q, S)``, the constants of the two
    comparability statements for ascending cubes, the shadow area constant
    ``max_P sum_{S in SH(P)} l(S)^2 / l(P)^2`` (checked against
    :func:`shadow_area_bound`) and whether every descendant
    ``S <= Q`` lies in ``SH_rho0(Q)``.
    """
    n = cov.size
    D = cov.D
    len_ratio = cov.chain_lengths() / D
    far, close = 1.0, 1.0
    cols = np.arange(n)
    for q in range(n):
        bi, _, _ = cov._splice_all(q)
        a = cov.ascents[q]
        r1 = D[a, :] / D[q, :]
        hi = np.maximum.accumulate(r1, axis=0)[bi, cols]
        lo = np.minimum.accumulate(r1, axis=0)[bi, cols]
        far = max(far, float(hi.max()), float((1 / lo).max()))
        r2 = np.maximum.accumulate(D[a, q] / cov.sides[a])[bi]
        close = max(close, float(r2.max()))
    shadow_area = max(float(np.sum(cov.sides[cov.shadow(p, rho0)] ** 2) / cov.sides[p] ** 2)
                      for p in range(n))
    contained = True
    worst = 0.0
    for q in range(n):
        d = cov.descendants(q)
        r = float((D[d, q] / cov.sides[q]).max())
        worst = max(worst, r)
        contained &= r <= rho0
    return {
        "pairs": n * n,
        "chain_ratio_max": float(len_ratio.max()),
        "far_constant": far,
        "close_constant": close,
        "shadow_area_max": shadow_area,
        "shadow_area_bound": shadow_area_bound(rho0),
        "shadow_ok": bool(shadow_area <= shadow_area_bound(rho0)),
        "descendant_rho_needed": worst,
        "descendants_in_shadow": bool(contained),
        "rho0": rho0,
    }
