"""Acceptance criteria with pinned tolerances.

Each test prints one ``PASS``/``FAIL`` line with the measured value against
its tolerance, then asserts.  Run ``python3 tests/test_acceptance.py``
for the same lines without pytest.
"""

from __future__ import annotations

import time
import warnings

import numpy as np
import pytest

from beltrami_lab import rng
from beltrami_lab.errors import SupportWarning
from beltrami_lab.beltrami import (BeltramiProblem, bump_coefficient, factorization_terms,
                                   jump_coefficient, mollified_coefficient, neumann_solve,
                                   pm_identity_defect, principal_solution, regularity_table)
from beltrami_lab.geometry import resolve_domain
from beltrami_lab.geometry.maximal import (chain_sum_ratio, covering_grid, maximal_lemma_audit,
                                           random_densities)
from beltrami_lab.geometry.whitney import audit_chains, audit_covering, whitney
from beltrami_lab.grid import make_grid, random_band_limited, sample, wirtinger
from beltrami_lab.identities import (binomial_failures, h_function, kernel_expansion_defect,
                                     admissible_indices, interior_pairs, kernel_K, plemelj_jump,
                                     radial_vanish, disk_profile, taper_profile,
                                     taylor_remainder_exponent)
from beltrami_lab.identities import oracles
from beltrami_lab.norms import SobolevParams
from beltrami_lab.singular_ops import beurling, cauchy, tgamma_apply

# Pinned tolerances
TOL = {
    1: 5e-2, 2: 1e-10, 3: 5e-2, 4: 0, 5: 1e-5, 6: 1e-2, 7: 1e-8, 8: 1e-10,
    9: (0.05, 5e-3), 10: (1.25, 1.5), 11: (10.0, 20.0), 12: 0.20, 13: 0.2,
}
BUDGET = {1: 30, 2: 10, 4: 1, 5: 300, 9: 120, 10: 600, 11: 120}


def _line(n: int, ok: bool, detail: str, elapsed: float) -> str:
    budget = f" budget {BUDGET[n]} s" if n in BUDGET else ""
    return f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {detail} ({elapsed:.1f} s{budget})"


def _emit(capsys, n, ok, detail, elapsed):
    line = _line(n, ok, detail, elapsed)
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    return ok


# --------------------------------------------------------------------------
# Criteria


def c1_beurling_closed_form():
    spec = make_grid(0, 4.0, 1024)
    chi = resolve_domain("disk").indicator(spec)
    z = spec.points
    r = np.abs(z)
    exact = np.where(r > 1, -1 / np.where(r > 0, z, 1) ** 2, 0)
    reg = (r <= 0.7) | ((r >= 1.3) & (r <= 2))

    def rel(b):
        return float(np.linalg.norm((b - exact)[reg]) / np.linalg.norm(exact[reg]))

    e_fft = rel(beurling(chi).values)
    e_quad = rel(-tgamma_apply((-2, 0), chi).values / np.pi)
    worst = max(e_fft, e_quad)
    return worst <= TOL[1], f"relative L2 error FFT {e_fft:.2e}, quadrature {e_quad:.2e} <= {TOL[1]}"


def c2_defining_identities():
    spec = make_grid(0, 4.0, 256)
    gen = rng.stream(0, "acceptance-band-limited")
    worst = 0.0
    with warnings.catch_warnings():
        # periodic fields fill the torus; the identities are exact there
        warnings.simplefilter("ignore", SupportWarning)
        for _ in range(20):
            f = random_band_limited(spec, gen)
            d, dbar = wirtinger(cauchy(f))
            worst = max(worst, (d - beurling(f)).l2(), (dbar - (f - f.mean())).l2())
    return worst <= TOL[2], f"L2 defect of d C = B and dbar C = I - mean {worst:.2e} <= {TOL[2]}"


def c3_radial_vanishing():
    worst = {}
    for name, prof, hw, n in [("disk", disk_profile(1.0), 4.0, 1024),
                              ("disk r=2", disk_profile(2.0), 4.0, 1024),
                              ("taper", taper_profile(3.0), 8.0, 2048)]:
        spec = make_grid(0, hw, n)
        worst[name] = max(radial_vanish(prof, m, spec) for m in (1, 2, 3, 4))
    w = max(worst.values())
    parts = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return w <= TOL[3], f"sup |B^m f| on |z| <= 0.7, m = 1..4: {parts} <= {TOL[3]}"


def c4_binomial():
    fails = binomial_failures(12)
    return len(fails) <= TOL[4], f"{len(fails)} of 2197 triples in [0,12]^3 fail exact equality"


def c5_kernel_expansion():
    dom = resolve_domain("perturbed_circle")
    q = dom.contour(8192)
    pairs = interior_pairs(dom, 20, 0)
    worst, arg = 0.0, None
    for m in admissible_indices(8):
        d = max(kernel_expansion_defect(q, dom, m, z, xi, "single") for z, xi in pairs)
        if d > worst:
            worst, arg = d, m.astuple()
    return worst <= TOL[5], f"worst relative defect {worst:.2e} at m = {arg} (tolerance {TOL[5]})"


def c6_plemelj():
    worst = 0.0
    for name in ("disk", "perturbed_circle"):
        q = resolve_domain(name).contour(8192)
        idx = (np.arange(8) * q.size) // 8 + q.size // 32
        for m3 in range(4):
            for i in idx:
                jump, target = plemelj_jump(q, m3, 0.2 - 0.1j, q.nodes[i], 1e-3)
                worst = max(worst, abs(jump - target))
    return worst <= TOL[6], f"max |jump - conj(w - xi)^m3| {worst:.2e} <= {TOL[6]}"


def c7_disk_oracles():
    q = resolve_domain("disk").contour(4096)
    worst = 0.0
    for z in (0.3 + 0.2j, 0.0, -0.5 + 0.1j, 0.1 - 0.6j):
        h = h_function(q, 1, z)
        worst = max(worst, abs(h - (-2j * np.pi * np.conj(z))), abs(h - oracles.disk_h(1, z)))
    q8 = resolve_domain("disk").contour(8192)
    for z, xi in ((0.5, -0.3), (0.2 + 0.3j, -0.1 - 0.4j)):
        worst = max(worst, abs(kernel_K(q8, (3, 1, 1), z, xi) - oracles.disk_kernel((3, 1, 1), z, xi)))
    return worst <= TOL[7], f"h_1 and K_(3,1,1) against residues {worst:.2e} <= {TOL[7]}"


def c8_operator_identities():
    dom = resolve_domain("disk")
    spec = make_grid(0, 2.5, 256)
    gen = rng.stream(0, "acceptance-operators")
    mask = dom.mask(spec).astype(float)
    worst = 0.0
    for _ in range(3):
        mu = random_band_limited(spec, gen) * mask * 0.6
        g = random_band_limited(spec, gen)
        prob = BeltramiProblem(mu, dom)
        for m in range(1, 7):
            worst = max(worst, pm_identity_defect(prob, m, g), factorization_terms(prob, m, g)[3])
    return worst <= TOL[8], f"P_m and factorization defects, m <= 6: {worst:.2e} <= {TOL[8]}"


def c9_neumann():
    dom = resolve_domain("disk")
    spec = make_grid(0, 4.0, 1024)
    ok, parts = True, []
    for k in (0.3, 0.5, 0.7):
        prob = BeltramiProblem(mollified_coefficient(k, dom, spec), dom)
        h, tr = neumann_solve(prob)
        sol = principal_solution(prob, h, tr)
        ratio = float(tr.ratios(3).max())
        res = sol.diagnostics["beltrami_relative"]
        ok &= tr.converged and ratio <= k + TOL[9][0] and res <= TOL[9][1]
        parts.append(f"k={k}: ratio {ratio:.3f}, residual {res:.1e}")
    return ok, "; ".join(parts)


def c10_regularity():
    dom = resolve_domain("smoothed_square")
    spec = make_grid(0, 2.5, 256)
    prm = SobolevParams(1, 4)
    smooth = BeltramiProblem.from_function(bump_coefficient(0.4, 0.9), dom, spec, prm)
    jump = BeltramiProblem.from_function(jump_coefficient(0.4, 0.5), dom, spec, prm)
    rs = regularity_table(smooth, [256, 512, 1024])["ratios"]
    rj = regularity_table(jump, [256, 512, 1024])["ratios"]
    ok = max(rs) <= TOL[10][0] and min(rj) >= TOL[10][1]
    return ok, (f"smooth ratios {', '.join(f'{r:.3f}' for r in rs)} <= {TOL[10][0]}; "
                f"jump ratios {', '.join(f'{r:.3f}' for r in rj)} >= {TOL[10][1]}")


def c11_whitney():
    ok, parts = True, []
    for name in ("unit_square", "perturbed_circle"):
        dom = resolve_domain(name)
        cov = whitney(dom, 2.0 ** -5)
        a = audit_covering(cov)
        ch = audit_chains(cov, cov.calibrate_rho(5.0))
        spec = covering_grid(cov)
        far = close = 0.0
        for g in random_densities(spec, dom.mask(spec), 5, 0):
            r = maximal_lemma_audit(cov, g, 1.0)
            far, close = max(far, r["far"]), max(close, r["close"])
        good = (a["distance_ok"] and a["neighbor_ok"] and a["connected"]
                and ch["chain_ratio_max"] <= TOL[11][0] and ch["shadow_ok"]
                and ch["descendants_in_shadow"] and max(far, close) <= TOL[11][1])
        ok &= good
        parts.append(f"{name}: {cov.size} cubes, chain C {ch['chain_ratio_max']:.2f}, "
                     f"shadow {ch['shadow_area_max']:.1f}/{ch['shadow_area_bound']:.1f}, "
                     f"maximal far {far:.2f} close {close:.2f}")
    return ok, "; ".join(parts)


def _gaussian_pairs(count, seed):
    gen = rng.stream(seed, "acceptance-chain-pairs")
    out = []
    for _ in range(count):
        pair = []
        for _ in range(2):
            a = gen.normal(size=4)
            c = gen.uniform(0, 1, 4) + 1j * gen.uniform(0, 1, 4)
            w = gen.uniform(0.1, 0.5, 4)
            pair.append(lambda z, a=a, c=c, w=w: sum(a[i] * np.exp(-np.abs(z - c[i]) ** 2 / w[i] ** 2)
                                                     for i in range(4)))
        out.append(pair)
    return out


def c12_double_sum():
    dom = resolve_domain("unit_square")
    pairs = _gaussian_pairs(5, 0)
    vals = []
    for ms in (2.0 ** -8, 2.0 ** -9):
        cov = whitney(dom, ms)
        gs = covering_grid(cov, 2)
        mask = dom.mask(gs).astype(float)
        vals.append(chain_sum_ratio(cov, [sample(p[0], gs) * mask for p in pairs],
                                    [sample(p[1], gs) * mask for p in pairs], 1.0, 2.0))
    change = np.abs(vals[1] / vals[0] - 1)
    ok = bool(np.all(np.isfinite(vals[1])) and change.max() <= TOL[12])
    return ok, f"A_rho ratios change by at most {100 * change.max():.1f}% (<= {100 * TOL[12]:.0f}%)"


def c13_taylor():
    dom = resolve_domain("perturbed_circle")
    q = dom.contour(8192)
    m, n, j, p = 2, 1, 1, 4
    slope = taylor_remainder_exponent(q, dom, m, j, 0.1 + 0.05j, 0.2 * 2.0 ** -np.arange(6), n=n)
    bound = m + n - j + (1 - 2 / p) - TOL[13]
    return slope >= bound, f"fitted slope {slope:.3f} >= {bound:.2f}"


CRITERIA = {
    1: c1_beurling_closed_form, 2: c2_defining_identities, 3: c3_radial_vanishing,
    4: c4_binomial, 5: c5_kernel_expansion, 6: c6_plemelj, 7: c7_disk_oracles,
    8: c8_operator_identities, 9: c9_neumann, 10: c10_regularity, 11: c11_whitney,
    12: c12_double_sum, 13: c13_taylor,
}


def run(n: int, capsys=None) -> bool:
    t = time.perf_counter()
    ok, detail = CRITERIA[n]()
    elapsed = time.perf_counter() - t
    if n in BUDGET and elapsed > BUDGET[n]:
        ok = False
        detail += f"; over the {BUDGET[n]} s budget"
    return _emit(capsys, n, bool(ok), detail, elapsed)


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    assert run(n, capsys)


if __name__ == "__main__":
    results = [run(n) for n in sorted(CRITERIA)]
    print(f"{sum(results)}/{len(results)} criteria pass")
