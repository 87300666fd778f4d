"""Bounded planar domains with Lipschitz boundary.

A domain is described either by polyline vertices or by a closed smooth
parameterization ``theta -> z(theta)`` on ``[0, 2 pi)``.  Parametric curves
are reparameterized by arc length through the Fourier series of their speed,
which keeps trapezoidal contour quadrature spectrally accurate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import shapely
from scipy.ndimage import distance_transform_edt, maximum_filter1d, minimum_filter1d
from scipy.spatial.distance import pdist

from ..errors import InvalidArgument, InvalidDomain
from ..grid import ComplexField, GridSpec

# --------------------------------------------------------------------------
# Named boundary families, all counterclockwise on [0, 2 pi)


def _polar(radius_fn, center):
    def fn(theta):
        return center + radius_fn(theta) * np.exp(1j * theta)

    return fn


def circle(radius: float = 1.0, center: complex = 0.0) -> Callable:
    return _polar(lambda t: radius + 0.0 * t, center)


def perturbed_circle(amplitude: float = 0.3, frequency: int = 3, radius: float = 1.0,
                     center: complex = 0.0) -> Callable:
    """``r(theta) = radius (1 + amplitude cos(frequency theta))``."""
    return _polar(lambda t: radius * (1.0 + amplitude * np.cos(frequency * t)), center)


def smoothed_square(half_side: float = 1.0, power: int = 8, center: complex = 0.0) -> Callable:
    """Superellipse ``|x|^p + |y|^p = a^p`` with even ``p`` (real-analytic)."""
    if power % 2:
        raise InvalidArgument("power must be even for an analytic boundary")

    def r(t):
        return half_side * (np.cos(t) ** power + np.sin(t) ** power) ** (-1.0 / power)

    return _polar(r, center)


def ellipse(a: float = 1.0, b: float = 0.5, center: complex = 0.0) -> Callable:
    def fn(theta):
        return center + a * np.cos(theta) + 1j * b * np.sin(theta)

    return fn


FAMILIES = {
    "circle": circle,
    "perturbed_circle": perturbed_circle,
    "smoothed_square": smoothed_square,
    "ellipse": ellipse,
}


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalField:
    """Outward unit normals ``N(t_i)`` at uniform arc-length nodes ``t_i``."""

    t: np.ndarray
    samples: np.ndarray
    length: float

    def winding(self) -> float:
        """Total rotation angle of the normal over one loop."""
        ang = np.angle(self.samples)
        d = np.diff(np.concatenate([ang, ang[:1]]))
        d = (d + np.pi) % (2 * np.pi) - np.pi
        return float(d.sum())

    def rotated(self, phi: float) -> "NormalField":
        return NormalField(self.t, self.samples * np.exp(1j * phi), self.length)


@dataclass(frozen=True)
class ContourQuadrature:
    """Nodes and tangent weights ``z'(t_i) dt_i`` of a counterclockwise boundary rule."""

    nodes: np.ndarray
    weights: np.ndarray
    domain: Optional["LipschitzDomain"] = None

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def spacing(self) -> float:
        """Largest gap between consecutive nodes."""
        d = np.abs(np.diff(np.concatenate([self.nodes, self.nodes[:1]])))
        return float(d.max())

    def integrate(self, values) -> complex:
        """``sum values_i w_i``, the rule for ``oint F(tau) d tau``."""
        return complex(np.sum(np.asarray(values) * self.weights))

    def integrate_conj(self, values) -> complex:
        """Rule for ``oint F(tau) d conj(tau)``."""
        return complex(np.sum(np.asarray(values) * np.conj(self.weights)))

    def closure_defect(self) -> float:
        """``|oint d tau|``; zero for a closed curve."""
        return float(abs(self.weights.sum()))

    def winding_number(self, z0: complex) -> complex:
        """``(1 / 2 pi i) oint d tau / (tau - z0)``."""
        return complex(np.sum(self.weights / (self.nodes - z0)) / (2j * np.pi))


class LipschitzDomain:
    """Bounded simply connected domain with a simple closed boundary.

    Use :func:`build_domain` or the named constructors rather than calling
    this class directly.

    Attributes
    ----------
    name : str
    kind : {"polyline", "parametric"}
    length : float
        Boundary length ``T``.
    delta, R : float
        Lipschitz-character estimates: within every boundary window of
        arc length ``2R`` the curve is a graph of slope at most ``delta``.
    """

    def __init__(self, name: str, kind: str, *, vertices=None, fn: Callable = None,
                 samples: int = 4096, params: Optional[dict] = None):
        self.name = name
        self.kind = kind
        self.params = dict(params or {})
        self.samples = int(samples)
        self._mask_cache = {}
        self._sd_cache = {}
        if kind == "polyline":
            self._init_polyline(np.asarray(vertices, dtype=complex))
        elif kind == "parametric":
            self._init_parametric(fn)
        else:
            raise InvalidArgument(f"unknown boundary kind {kind!r}")
        ring = shapely.LinearRing(np.c_[self._poly.real, self._poly.imag])
        if not ring.is_simple:
            raise InvalidDomain(f"boundary of {name!r} self-intersects")
        self.polygon = shapely.Polygon(ring)
        self.boundary_line = self.polygon.exterior
        shapely.prepare(self.polygon)
        shapely.prepare(self.boundary_line)
        self._estimate_character()

    # ---------------------------------------------------------------- setup

    def _init_polyline(self, v):
        if v.ndim != 1 or v.size < 3:
            raise InvalidDomain("a polyline needs at least three vertices")
        if abs(v[0] - v[-1]) < 1e-14:
            v = v[:-1]
        area2 = np.sum((np.conj(v) * np.roll(v, -1)).imag)
        if area2 == 0:
            raise InvalidDomain("degenerate polyline")
        if area2 < 0:
            v = v[::-1]
        self.vertices = v
        seg = np.roll(v, -1) - v
        if np.any(np.abs(seg) == 0):
            raise InvalidDomain("repeated vertex")
        self._seg = seg
        self._seglen = np.abs(seg)
        self._cum = np.concatenate([[0.0], np.cumsum(self._seglen)])
        self.length = float(self._cum[-1])
        self._poly = v

    def _init_parametric(self, fn):
        k = 1 << 14
        theta = 2 * np.pi * np.arange(k) / k
        zs = np.asarray(fn(theta), dtype=complex)
        if not np.all(np.isfinite(zs)):
            raise InvalidDomain("parameterization returned non-finite points")
        freq = np.fft.fftfreq(k, 1.0 / k)
        a = np.fft.fft(zs) / k
        keep = np.abs(a) > 1e-15 * np.abs(a).max()
        self._zk, self._za = freq[keep], a[keep]
        dz = np.fft.ifft(np.where(np.abs(a) > 1e-15 * np.abs(a).max(), a, 0) * k * 1j * freq)
        speed = np.abs(dz)
        if speed.min() <= 0:
            raise InvalidDomain("parameterization has a stationary point")
        c = np.fft.fft(speed) / k
        keep = np.abs(c) > 1e-14 * np.abs(c).max()
        keep[0] = True
        self._sk, self._sc = freq[keep], c[keep]
        self.length = float(2 * np.pi * c[0].real)
        orient = np.sum((np.conj(zs) * dz).imag)
        if orient < 0:
            raise InvalidDomain("parameterization must be counterclockwise")
        self._fn = fn
        self._poly = self._arc_nodes(8192)[0]

    def _series(self, coeffs, freqs, theta, deriv=False):
        e = np.exp(1j * np.outer(theta, freqs))
        return e @ (coeffs * (1j * freqs if deriv else 1.0))

    def _arclength_at(self, theta):
        nz = self._sk != 0
        k, c = self._sk[nz], self._sc[nz]
        e = np.exp(1j * np.outer(theta, k)) - 1.0
        return (self._sc[~nz][0].real * theta + (e @ (c / (1j * k))).real)

    def _theta_of_s(self, s):
        k = 1 << 12
        grid = 2 * np.pi * np.arange(k + 1) / k
        sg = self._arclength_at(grid)
        theta = np.interp(s, sg, grid)
        for _ in range(30):
            err = self._arclength_at(theta) - s
            speed = np.abs(self._series(self._za, self._zk, theta, deriv=True))
            theta = theta - err / speed
            if np.max(np.abs(err)) < 1e-14 * self.length:
                break
        return theta

    def _arc_nodes(self, m: int):
        """``(points, tangents, arclength)`` at ``m`` uniform nodes."""
        t = self.length * np.arange(m) / m
        if self.kind == "parametric":
            theta = self._theta_of_s(t)
            z = np.asarray(self._fn(theta), dtype=complex)
            dz = self._series(self._za, self._zk, theta, deriv=True)
            return z, dz / np.abs(dz), t
        idx = np.searchsorted(self._cum, t, side="right") - 1
        idx = np.clip(idx, 0, self.vertices.size - 1)
        frac = (t - self._cum[idx]) / self._seglen[idx]
        z = self.vertices[idx] + frac * self._seg[idx]
        tan = self._seg[idx] / self._seglen[idx]
        at_vertex = np.abs(frac) < 1e-12
        prev = self._seg[idx - 1] / self._seglen[idx - 1]
        bis = tan + prev
        tan = np.where(at_vertex, bis / np.abs(bis), tan)
        return z, tan, t

    def _estimate_character(self):
        z, tan, _ = self._arc_nodes(4096)
        hull = shapely.convex_hull(shapely.MultiPoint(np.c_[z.real, z.imag]))
        hv = np.asarray(hull.exterior.coords)
        self.diameter = float(pdist(hv).max())
        self.R = self.diameter / 8.0
        ang = np.unwrap(np.angle(tan))
        n = ang.size
        w = max(1, int(round(self.R / self.length * n)))
        ext = np.concatenate([ang[-w:] - 2 * np.pi, ang, ang[:w] + 2 * np.pi])
        spread = (maximum_filter1d(ext, 2 * w + 1) - minimum_filter1d(ext, 2 * w + 1))[w:-w]
        half = spread.max() / 2
        self.delta = float(np.tan(half)) if half < np.pi / 2 else float("inf")

    # ------------------------------------------------------------ geometry

    @property
    def bbox(self) -> tuple:
        """Lower-left and upper-right corners as complex numbers."""
        x0, y0, x1, y1 = self.polygon.bounds
        pad = 1e-6 * self.diameter
        return complex(x0 - pad, y0 - pad), complex(x1 + pad, y1 + pad)

    @property
    def area(self) -> float:
        if self.kind == "polyline":
            v = self.vertices
            return float(0.5 * np.sum((np.conj(v) * np.roll(v, -1)).imag))
        q = self.contour(4096)
        return float(0.5 * np.sum((np.conj(q.nodes) * q.weights).imag))

    @property
    def centroid(self) -> complex:
        c = self.polygon.centroid
        return complex(c.x, c.y)

    def contains(self, z) -> np.ndarray:
        """Membership of the points ``z`` (boundary points count as outside)."""
        z = np.asarray(z, dtype=complex)
        return shapely.contains_xy(self.polygon, z.real, z.imag)

    def boundary_distance(self, z) -> np.ndarray:
        """Euclidean distance from ``z`` to the boundary polyline."""
        z = np.asarray(z, dtype=complex)
        pts = shapely.points(z.real.ravel(), z.imag.ravel())
        return shapely.distance(pts, self.boundary_line).reshape(z.shape)

    def mask(self, spec: GridSpec) -> np.ndarray:
        """Sharp indicator of the domain at grid nodes (read-only boolean array)."""
        if spec not in self._mask_cache:
            z = spec.points
            lo, hi = self.bbox
            m = np.zeros(spec.shape, dtype=bool)
            box = (z.real >= lo.real) & (z.real <= hi.real) & (z.imag >= lo.imag) & (z.imag <= hi.imag)
            m[box] = self.contains(z[box])
            m.setflags(write=False)
            self._mask_cache[spec] = m
        return self._mask_cache[spec]

    def signed_distance(self, spec: GridSpec, band: float) -> np.ndarray:
        """Signed distance to the boundary at grid nodes, positive inside.

        Exact within ``band`` of the boundary; elsewhere a grid-distance
        estimate that is only guaranteed to exceed ``band`` in magnitude.
        """
        key = (spec, band)
        if key in self._sd_cache:
            return self._sd_cache[key]
        m = self.mask(spec)
        h = spec.spacing
        din = distance_transform_edt(m) * h
        dout = distance_transform_edt(~m) * h
        approx = np.where(m, din, -dout)
        near = np.abs(approx) <= band + 2 * h
        sd = approx.copy()
        exact = self.boundary_distance(spec.points[near])
        sd[near] = np.where(m[near], exact, -exact)
        sd.setflags(write=False)
        self._sd_cache[key] = sd
        return sd

    def indicator(self, spec: GridSpec, mode: str = "sharp", collar: Optional[float] = None,
                  supersample: int = 16) -> ComplexField:
        """Indicator field of the domain.

        Parameters
        ----------
        mode : {"sharp", "coverage", "mollified"}
            ``sharp`` samples membership at nodes.  ``coverage`` replaces
            boundary cells by their covered area fraction (``supersample``
            squared sub-points).  ``mollified`` is a C^2 ramp from 0 on the
            boundary to 1 at depth ``collar`` (default ``4h``), so its
            support stays inside the closed domain.
        """
        h = spec.spacing
        if mode == "sharp":
            return ComplexField(spec, self.mask(spec).astype(float))
        if mode == "coverage":
            sd = self.signed_distance(spec, 2 * h)
            vals = self.mask(spec).astype(float)
            band = np.abs(sd) < 0.75 * h
            zc = spec.points[band]
            off = ((np.arange(supersample) + 0.5) / supersample - 0.5) * h
            sub = (zc[:, None, None] + off[None, :, None] + 1j * off[None, None, :]).reshape(zc.size, -1)
            frac = self.contains(sub).reshape(sub.shape).mean(axis=1)
            vals[band] = frac
            return ComplexField(spec, vals)
        if mode == "mollified":
            c = 4 * h if collar is None else float(collar)
            sd = self.signed_distance(spec, c)
            t = np.clip(sd / c, 0.0, 1.0)
            return ComplexField(spec, np.clip(t ** 3 * (10 - 15 * t + 6 * t ** 2), 0.0, 1.0))
        raise InvalidArgument(f"unknown indicator mode {mode!r}")

    # ------------------------------------------------------------ boundary

    def contour(self, m: int = 4096) -> ContourQuadrature:
        """Counterclockwise boundary quadrature with about ``m`` nodes.

        Parametric boundaries use the trapezoidal rule at uniform arc-length
        nodes; polylines use Gauss-Legendre nodes on every segment.
        """
        if m < 256:
            raise InvalidArgument("contour quadrature needs at least 256 nodes")
        if self.kind == "parametric":
            z, tan, _ = self._arc_nodes(m)
            return ContourQuadrature(z, tan * (self.length / m), self)
        nodes, weights = [], []
        for v, s, ln in zip(self.vertices, self._seg, self._seglen):
            k = max(8, int(round(m * ln / self.length)))
            x, w = np.polynomial.legendre.leggauss(k)
            nodes.append(v + (x + 1) / 2 * s)
            weights.append(w / 2 * s)
        return ContourQuadrature(np.concatenate(nodes), np.concatenate(weights), self)

    def arc_length_nodes(self, m: int):
        """``(points, unit tangents, arc-length values)`` at ``m`` uniform nodes."""
        return self._arc_nodes(m)

    def normal_field(self, m: int = 4096, start: float = 0.0) -> NormalField:
        """Outward normals at ``m`` uniform arc-length nodes starting at ``start``."""
        z, tan, t = self._arc_nodes(m)
        n = -1j * tan
        if start:
            shift = int(round(start / self.length * m)) % m
            n = np.roll(n, -shift)
        return NormalField(t, n, self.length)

    def arc_length_defect(self, m: int = 4096) -> float:
        """``max | |z'(t_i)| - 1 |`` from spectral differentiation of the nodes."""
        if self.kind == "polyline":
            return 0.0
        z, _, _ = self._arc_nodes(m)
        k = np.fft.fftfreq(m, 1.0 / m) * 2 * np.pi / self.length
        dz = np.fft.ifft(np.fft.fft(z) * 1j * k)
        return float(np.max(np.abs(np.abs(dz) - 1.0)))

    def rotated(self, phi: float) -> "LipschitzDomain":
        """The domain rotated by ``phi`` about the origin."""
        r = np.exp(1j * phi)
        if self.kind == "polyline":
            return LipschitzDomain(f"{self.name}-rot", "polyline", vertices=self.vertices * r)
        fn = self._fn
        return LipschitzDomain(f"{self.name}-rot", "parametric", fn=lambda t: r * fn(t),
                               samples=self.samples, params=self.params)

    def to_json(self) -> dict:
        if self.kind == "polyline":
            v = self.vertices
            return {"type": "polyline", "vertices": [[float(p.real), float(p.imag)] for p in v],
                    "samples": self.samples}
        return {"type": "parametric", "fn": self.params.get("family", "custom"),
                "params": self.params.get("args", {}), "samples": self.samples}

    def __repr__(self):
        return f"LipschitzDomain({self.name!r}, {self.kind}, length={self.length:.6g})"


def _complex(v):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(v[0], v[1])
    return complex(v)


def build_domain(spec: dict) -> LipschitzDomain:
    """Build a domain from its JSON description.

    ``{"type": "polyline", "vertices": [[x, y], ...]}`` or
    ``{"type": "parametric", "fn": family, "params": {...}, "samples": M}``
    with ``family`` one of :data:`FAMILIES`.

    Raises
    ------
    InvalidDomain
        For self-intersecting or degenerate boundaries.
    """
    kind = spec.get("type")
    samples = int(spec.get("samples", 4096))
    if kind == "polyline":
        verts = [_complex(p) for p in spec["vertices"]]
        return LipschitzDomain(spec.get("name", "polyline"), "polyline", vertices=verts, samples=samples)
    if kind == "parametric":
        fam = spec["fn"]
        if fam not in FAMILIES:
            raise InvalidArgument(f"unknown boundary family {fam!r}")
        args = dict(spec.get("params", {}))
        call = {k: (_complex(v) if k == "center" else v) for k, v in args.items()}
        fn = FAMILIES[fam](**call)
        return LipschitzDomain(spec.get("name", fam), "parametric", fn=fn, samples=samples,
                               params={"family": fam, "args": args})
    raise InvalidArgument(f"unknown domain type {kind!r}")


def polygon_domain(vertices, name: str = "polygon") -> LipschitzDomain:
    return LipschitzDomain(name, "polyline", vertices=vertices)


def unit_square() -> LipschitzDomain:
    """``[0, 1]^2``."""
    return polygon_domain([0, 1, 1 + 1j, 1j], name="unit_square")


def square(center: complex = 0.0, half_side: float = 0.5) -> LipschitzDomain:
    c, a = complex(center), half_side
    return polygon_domain([c - a - a * 1j, c + a - a * 1j, c + a + a * 1j, c - a + a * 1j], name="square")


def disk(radius: float = 1.0, center: complex = 0.0) -> LipschitzDomain:
    return build_domain({"type": "parametric", "fn": "circle", "name": "disk",
                         "params": {"radius": radius, "center": [complex(center).real, complex(center).imag]}})


def perturbed_disk(amplitude: float = 0.3, frequency: int = 3, radius: float = 1.0) -> LipschitzDomain:
    """The default verification domain ``r = 1 + 0.3 cos(3 theta)``."""
    return build_domain({"type": "parametric", "fn": "perturbed_circle", "name": "perturbed_circle",
                         "params": {"amplitude": amplitude, "frequency": frequency, "radius": radius}})


def smoothed_square_domain(half_side: float = 1.0, power: int = 8) -> LipschitzDomain:
    return build_domain({"type": "parametric", "fn": "smoothed_square", "name": "smoothed_square",
                         "params": {"half_side": half_side, "power": power}})


NAMED = {
    "unit_square": lambda: unit_square(),
    "disk": lambda: disk(),
    "perturbed_circle": lambda: perturbed_disk(),
    "smoothed_square": lambda: smoothed_square_domain(),
}


def resolve_domain(ref) -> LipschitzDomain:
    """A domain from a name in :data:`NAMED` or a JSON description; domains pass through."""
    if isinstance(ref, LipschitzDomain):
        return ref
    if isinstance(ref, str):
        if ref not in NAMED:
            raise InvalidArgument(f"unknown domain name {ref!r}; known: {sorted(NAMED)}")
        return NAMED[ref]()
    if isinstance(ref, dict):
        return build_domain(ref)
    raise InvalidArgument("domain must be a name or a JSON object")
