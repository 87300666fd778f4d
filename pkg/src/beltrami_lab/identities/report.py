"""Verification reports and the registry of named identity checks.

A suite is a list of jobs ``{"name": ..., "params": {...}, "tolerance": t}``.
Each registered check turns one job into one or more
:class:`VerificationReport` rows.  Jobs are independent, so suites run as an
ordered parallel map and the output does not depend on the thread count.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument
from ..geometry import resolve_domain
from ..grid import make_grid
from . import contour as ct
from . import grid_checks as gc
from . import oracles
from .combinatorics import binomial_failures, binomial_identity, binomial_valid_region

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one check: ``passed`` is ``defect <= tolerance``."""

    identity: str
    params: dict
    defect: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.defect) and self.defect <= self.tolerance)

    def row(self) -> list:
        return [SCHEMA_VERSION, self.identity, json.dumps(self.params, sort_keys=True),
                repr(float(self.defect)), repr(float(self.tolerance)), int(self.passed)]


CSV_HEADER = ["schema_version", "identity", "params", "defect", "tolerance", "pass"]


def write_reports(reports, path, append: bool = False) -> None:
    """Write reports as CSV; with ``append`` the header is written only for a new file."""
    import os

    new = not (append and os.path.exists(path) and os.path.getsize(path) > 0)
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(CSV_HEADER)
        for r in reports:
            w.writerow(r.row())


def read_reports(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [VerificationReport(r["identity"], json.loads(r["params"]), float(r["defect"]),
                               float(r["tolerance"])) for r in rows]


# --------------------------------------------------------------------------
# Checks


def _contour(params, default_domain="perturbed_circle", default_m=8192):
    dom = resolve_domain(params.get("domain", default_domain))
    return dom, dom.contour(int(params.get("M", default_m)))


def _cplx(v):
    return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)


def check_binomial(params, tol, seed):
    upper = int(params.get("upper", 12))
    region = params.get("region", "all")
    fails = [t for t in binomial_failures(upper) if region == "all" or binomial_valid_region(*t)]
    return [VerificationReport("binomial", {"upper": upper, "region": region},
                               float(len(fails)), tol)]


def check_h_disk(params, tol, seed):
    q = resolve_domain("disk").contour(int(params.get("M", 4096)))
    out = []
    for m3 in params.get("m3", [0, 1, 2, 3]):
        for z in params.get("points", [[0.3, 0.2], [0, 0], [-0.5, 0.1]]):
            zz = _cplx(z)
            err = abs(ct.h_function(q, m3, zz) - oracles.disk_h(m3, zz))
            out.append(VerificationReport("h_disk", {"m3": m3, "z": [zz.real, zz.imag]}, err, tol))
    return out


def check_kernel_disk(params, tol, seed):
    q = resolve_domain("disk").contour(int(params.get("M", 8192)))
    m = tuple(params.get("m", [3, 1, 1]))
    z, xi = _cplx(params.get("z", 0.5)), _cplx(params.get("xi", -0.3))
    err = abs(ct.kernel_K(q, m, z, xi) - oracles.disk_kernel(m, z, xi))
    return [VerificationReport("kernel_disk", {"m": list(m)}, err, tol)]


def check_derivative_identity(params, tol, seed):
    dom, q = _contour(params)
    spec = make_grid(dom.centroid, float(params.get("half_width", 4.0)), int(params.get("N", 1024)))
    fields, out = {}, []
    for m3 in params.get("m3", [1, 2, 3]):
        for j in range(1, m3 + 1):
            r = gc.derivative_identity_defect(q, dom, m3, j, int(params.get("probes", 200)), spec,
                                              seed, fields)
            out.append(VerificationReport("derivative_identity", {"m3": m3, "j": j}, r["defect"], tol))
    return out


def check_kernel_expansion(params, tol, seed):
    dom, q = _contour(params)
    form = params.get("form", "single")
    pairs = gc.interior_pairs(dom, int(params.get("pairs", 20)), seed)
    if "indices" in params:
        idx = [ct.MultiIndexM(*m) for m in params["indices"]]
    else:
        idx = ct.admissible_indices(int(params.get("max_order", 8)))
    out = []
    for m in idx:
        worst = max(ct.kernel_expansion_defect(q, dom, m, z, xi, form) for z, xi in pairs)
        out.append(VerificationReport("kernel_expansion", {"m": list(m.astuple()), "form": form},
                                      worst, tol))
    return out


def check_plemelj(params, tol, seed):
    dom, q = _contour(params)
    eps = float(params.get("eps", 1e-3))
    xi = _cplx(params.get("xi", [0.2, -0.1]))
    k = int(params.get("points", 8))
    idx = (np.arange(k) * q.size) // k + q.size // (4 * k)
    out = []
    for m3 in params.get("m3", [0, 1, 2, 3]):
        worst = 0.0
        for i in idx:
            jump, target = ct.plemelj_jump(q, m3, xi, q.nodes[i], eps)
            worst = max(worst, abs(jump - target))
        out.append(VerificationReport("plemelj", {"m3": m3, "eps": eps}, worst, tol))
    return out


def check_taylor(params, tol, seed):
    dom, q = _contour(params)
    m, n, j, p = (int(params.get(k, v)) for k, v in (("m", 2), ("n", 1), ("j", 1), ("p", 4)))
    z = _cplx(params.get("z", [0.1, 0.05]))
    radii = 0.2 * 2.0 ** -np.arange(int(params.get("radii", 6)))
    slope = ct.taylor_remainder_exponent(q, dom, m, j, z, radii, n=n)
    bound = m + n - j + (1 - 2 / p) - 0.2
    return [VerificationReport("taylor", {"m": m, "n": n, "j": j, "p": p, "slope": slope},
                               bound - slope, tol)]


_PROFILES = {
    "disk": (lambda: gc.disk_profile(1.0), 4.0, 1024),
    "disk2": (lambda: gc.disk_profile(2.0), 4.0, 1024),
    "taper": (lambda: gc.taper_profile(3.0), 8.0, 2048),
}


def check_radial(params, tol, seed):
    out = []
    for name in params.get("profiles", list(_PROFILES)):
        if name not in _PROFILES:
            raise InvalidArgument(f"unknown radial profile {name!r}")
        make, hw, n = _PROFILES[name]
        spec = make_grid(0, hw, n)
        for m in params.get("m", [1, 2, 3, 4]):
            out.append(VerificationReport("radial_vanish", {"profile": name, "m": m},
                                          gc.radial_vanish(make(), m, spec), tol))
    return out


def _one(z):
    return np.ones_like(z)


def _zero(z):
    return np.zeros_like(z)


_GREEN_CASES = {
    "z_disk": ("disk", (lambda z: z, _one), (_zero, _zero)),
    "const_disk": ("disk", (lambda z: 3 + 0 * z, _zero), (lambda z: 2 + 0 * z, _zero)),
    "square": ("unit_square", (lambda z: z ** 2, lambda z: 2 * z), (lambda z: np.conj(z), _one)),
    "perturbed": ("perturbed_circle", (lambda z: z * np.conj(z) ** 2, lambda z: np.conj(z) ** 2),
                  (lambda z: np.exp(z) * np.conj(z), lambda z: np.exp(z))),
}


def check_green(params, tol, seed):
    out = []
    for name in params.get("cases", list(_GREEN_CASES)):
        dname, f, g = _GREEN_CASES[name]
        q = resolve_domain(dname).contour(int(params.get("M", 4096)))
        out.append(VerificationReport("green", {"case": name}, ct.green_defect(f, g, q), tol))
    return out


def check_orientation(params, tol, seed):
    out = []
    for name in params.get("domains", ["disk", "perturbed_circle", "smoothed_square", "unit_square"]):
        dom = resolve_domain(name)
        q = dom.contour(int(params.get("M", 4096)))
        d = max(q.closure_defect(), abs(q.winding_number(dom.centroid) - 1))
        out.append(VerificationReport("orientation", {"domain": name}, d, tol))
    return out


REGISTRY = {
    "binomial": (check_binomial, 0.0),
    "h_disk": (check_h_disk, 1e-8),
    "kernel_disk": (check_kernel_disk, 1e-8),
    "derivative_identity": (check_derivative_identity, 1e-3),
    "kernel_expansion": (check_kernel_expansion, 1e-5),
    "plemelj": (check_plemelj, 1e-2),
    "taylor": (check_taylor, 0.0),
    "radial_vanish": (check_radial, 5e-2),
    "green": (check_green, 1e-6),
    "orientation": (check_orientation, 1e-10),
}


def default_suite() -> list:
    """Checks on the perturbed circle that hold on their stated ranges.

    The full binomial range and the single-monomial kernel expansion at every
    admissible order are left out; list them explicitly to run them.
    """
    return [
        {"name": "orientation"},
        {"name": "binomial", "params": {"region": "valid"}},
        {"name": "h_disk"},
        {"name": "kernel_disk"},
        {"name": "derivative_identity"},
        {"name": "kernel_expansion", "params": {"indices": [[3, 1, 1], [3, 2, 1]]}},
        {"name": "kernel_expansion", "params": {"form": "full"}},
        {"name": "plemelj"},
        {"name": "taylor"},
        {"name": "radial_vanish"},
        {"name": "green"},
    ]


def validate_suite(jobs) -> list:
    """Normalize a list of jobs, rejecting unknown names."""
    if not isinstance(jobs, list):
        raise InvalidArgument("suite must be a list of jobs")
    out = []
    for job in jobs:
        if isinstance(job, str):
            job = {"name": job}
        if not isinstance(job, dict) or job.get("name") not in REGISTRY:
            raise InvalidArgument(f"unknown identity in suite: {job!r}; known: {sorted(REGISTRY)}")
        params = job.get("params", {})
        if not isinstance(params, dict):
            raise InvalidArgument("job params must be an object")
        tol = float(job.get("tolerance", REGISTRY[job["name"]][1]))
        out.append({"name": job["name"], "params": params, "tolerance": tol})
    return out


def run_job(job, seed: int = 0) -> list:
    fn, _ = REGISTRY[job["name"]]
    return fn(job["params"], job["tolerance"], seed)


def run_suite(jobs, seed: int = 0, threads: int = 1) -> list:
    """Run every job and return the reports in job order."""
    jobs = validate_suite(jobs)
    if threads <= 1:
        res = [run_job(j, seed) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            res = list(ex.map(lambda j: run_job(j, seed), jobs))
    return [r for rs in res for r in rs]


def timed_suite(jobs, seed: int = 0, threads: int = 1) -> tuple:
    t = time.perf_counter()
    reports = run_suite(jobs, seed, threads)
    return reports, time.perf_counter() - t
