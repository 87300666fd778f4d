"""Binomial identities, contour integrals, grid identities and verification reports."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beltrami_lab.errors import AccuracyError, DegenerateProbeError, InvalidArgument, InvalidDomain
from beltrami_lab.geometry import resolve_domain
from beltrami_lab.grid import make_grid
from beltrami_lab.identities import (REGISTRY, MultiIndexM, VerificationReport, admissible_indices,
                                     area_integral, big_h, binomial_failures, binomial_identity,
                                     binomial_valid_region, default_suite, derivative_identity_defect,
                                     disk_profile, green_defect, h_derivative, h_function,
                                     interior_pairs, interior_points, kernel_expansion_defect,
                                     kernel_K, plemelj_jump, radial_vanish, read_reports,
                                     run_suite, taper_profile, taylor_remainder_exponent,
                                     validate_suite, write_reports)
from beltrami_lab.identities import oracles

DISK = resolve_domain("disk")
QDISK = DISK.contour(4096)
PCIRC = resolve_domain("perturbed_circle")
QPC = PCIRC.contour(8192)


# --------------------------------------------------------------------------
# Binomial identity


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 20), st.integers(0, 20), st.integers(0, 20))
def test_binomial_holds_on_valid_region(m1, m2, a1):
    lhs, rhs = binomial_identity(m1, m2, a1)
    if binomial_valid_region(m1, m2, a1):
        assert lhs == rhs


def test_binomial_failures_lie_outside_valid_region():
    fails = binomial_failures(12)
    assert fails
    assert not any(binomial_valid_region(*t) for t in fails)
    assert binomial_identity(3, 2, 1) == (2, 2)
    with pytest.raises(InvalidArgument):
        binomial_identity(-1, 2, 0)


# --------------------------------------------------------------------------
# Multi-indices and the disk oracles


def test_admissible_indices():
    idx = admissible_indices(8)
    assert MultiIndexM(3, 1, 1) in idx
    assert all(m.order <= 8 and m.m2 <= m.m1 + m.m3 - 2 for m in idx)
    with pytest.raises(InvalidArgument):
        MultiIndexM(2, 1, 1)
    with pytest.raises(InvalidArgument):
        MultiIndexM(3, 3, 1)


@pytest.mark.parametrize("m3", [0, 1, 2, 3])
@pytest.mark.parametrize("z", [0.3 + 0.2j, 0j, -0.5 + 0.1j])
def test_h_matches_oracle(m3, z):
    assert abs(h_function(QDISK, m3, z) - oracles.disk_h(m3, z)) < 1e-10


def test_h1_on_disk():
    z = 0.25 - 0.4j
    assert abs(h_function(QDISK, 1, z) + 2j * np.pi * np.conj(z)) < 1e-12


@pytest.mark.parametrize("m", [(3, 1, 1), (3, 2, 2), (4, 1, 2)])
def test_kernel_matches_oracle(m):
    q = DISK.contour(8192)
    z, xi = 0.5, -0.3 + 0.1j
    assert abs(kernel_K(q, m, z, xi) - oracles.disk_kernel(m, z, xi)) < 1e-8
    with pytest.raises(InvalidArgument):
        kernel_K(q, m, z, z)


def test_big_h_matches_oracle():
    xi = 0.2 - 0.1j
    for w in (0.4 + 0.3j, 1.5):
        val = big_h(QDISK, 2, xi, w)[0]
        assert abs(val - oracles.disk_big_h(2, xi, w)) < 1e-10


def test_points_near_boundary_are_rejected():
    with pytest.raises(AccuracyError):
        h_function(QDISK, 1, 1 - 1e-4)
    with pytest.raises(InvalidArgument):
        h_function(QDISK, 1, 2.0)


def test_h_derivative_vanishes_beyond_m3():
    z = np.array([0.1, 0.2j])
    assert np.all(h_derivative(QPC, 2, (1, 3), z) == 0)
    with pytest.raises(InvalidArgument):
        h_derivative(QPC, 2, (-1, 0), 0.1)


# --------------------------------------------------------------------------
# Kernel expansion and boundary behaviour


@pytest.mark.parametrize("m", [(3, 1, 1), (3, 2, 1), (4, 1, 1), (3, 1, 2)])
def test_full_kernel_expansion(m):
    for z, xi in interior_pairs(PCIRC, 5, seed=1):
        assert kernel_expansion_defect(QPC, PCIRC, m, z, xi, "full") < 1e-7


def test_kernel_expansion_rejects_foreign_quadrature():
    with pytest.raises(InvalidArgument):
        kernel_expansion_defect(QDISK, PCIRC, (3, 1, 1), 0.1, -0.2)
    with pytest.raises(InvalidArgument):
        kernel_expansion_defect(QPC, PCIRC, (3, 1, 1), 0.1, -0.2, "double")


@pytest.mark.parametrize("m3", [0, 1, 2])
def test_plemelj_jump(m3):
    w = QPC.nodes[1000]
    jump, target = plemelj_jump(QPC, m3, 0.2 - 0.1j, w, 1e-3)
    assert abs(jump - target) < 1e-2


@pytest.mark.parametrize("eps", [1e-6, 0.5])
def test_plemelj_eps_range(eps):
    with pytest.raises(AccuracyError):
        plemelj_jump(QPC, 1, 0, QPC.nodes[0], eps)


def test_plemelj_coarse_contour():
    q = PCIRC.contour(256)
    with pytest.raises(AccuracyError):
        plemelj_jump(q, 1, 0, q.nodes[0], 1e-3)


def test_taylor_exponent_synthetic():
    # g = conj(x)^5 has a Taylor remainder of order exactly 3 in r for M = 2, j = 0
    def deriv(a, b, x):
        x = np.asarray(x, dtype=complex)
        if a > 0 or b > 5:
            return np.zeros(x.shape, dtype=complex)
        c = np.prod(range(5 - b + 1, 6))
        return c * np.conj(x) ** (5 - b)

    radii = 0.2 * 2.0 ** -np.arange(5)
    slope = taylor_remainder_exponent(None, None, 2, 0, 0.3, radii, n=0, deriv=deriv)
    assert slope == pytest.approx(3.0, abs=0.1)
    with pytest.raises(InvalidArgument):
        taylor_remainder_exponent(None, None, 2, 0, 0.3, radii[:2], deriv=deriv)
    with pytest.raises(InvalidArgument):
        taylor_remainder_exponent(None, None, 2, 0, 0.3, radii[::-1], deriv=deriv)


# --------------------------------------------------------------------------
# Green's formula and area integrals


def test_area_integral():
    assert abs(area_integral(lambda z: np.ones_like(z), QDISK) - np.pi) < 1e-12
    q = PCIRC.contour(4096)
    assert abs(area_integral(lambda z: np.ones_like(z), q) - PCIRC.area) < 1e-10


def test_green_defect():
    f = (lambda z: z ** 2, lambda z: 2 * z)
    g = (lambda z: np.conj(z) * z, lambda z: z)
    assert green_defect(f, g, QPC) < 1e-8
    spec = make_grid(0, 2.0, 512)
    assert green_defect(f, g, QPC, spec=spec, area="grid") < 5e-2
    with pytest.raises(InvalidArgument):
        green_defect(f, g, QPC, area="grid")
    with pytest.raises(InvalidArgument):
        green_defect(f, g, QPC, area="magic")


# --------------------------------------------------------------------------
# Grid identities


def test_interior_points():
    pts = interior_points(PCIRC, 30, seed=2)
    assert len(pts) == 30 and np.all(PCIRC.boundary_distance(pts) >= 0.25)
    pairs = interior_pairs(PCIRC, 10, seed=2)
    assert all(abs(z - xi) >= 0.05 for z, xi in pairs)


def test_derivative_identity_degenerate_on_disk():
    spec = make_grid(0, 4.0, 256)
    with pytest.raises(DegenerateProbeError):
        derivative_identity_defect(QDISK, DISK, 2, 1, 40, spec)
    with pytest.raises(InvalidArgument):
        derivative_identity_defect(QDISK, DISK, 2, 3, 40, spec)


def test_derivative_identity_j0_is_exact():
    spec = make_grid(0, 4.0, 256)
    r = derivative_identity_defect(QPC, PCIRC, 2, 0, 40, spec)
    assert r["defect"] < 1e-8
    assert abs(r["constant_ratio"] - 1) < 1e-8


def test_radial_vanish():
    spec = make_grid(0, 8.0, 1024)
    assert radial_vanish(taper_profile(3.0), 2, spec) < 1e-4
    with pytest.raises(InvalidArgument):
        radial_vanish(lambda r: 0.5 + 0 * r, 1, spec)
    with pytest.raises(InvalidArgument):
        radial_vanish(disk_profile(1.0), 1, make_grid(0, 1.5, 64))


# --------------------------------------------------------------------------
# Reports and suites


def test_report_csv_round_trip(tmp_path):
    reps = [VerificationReport("green", {"case": "x"}, 1e-9, 1e-6),
            VerificationReport("plemelj", {"m3": 1}, float("nan"), 1e-2)]
    assert reps[0].passed and not reps[1].passed
    path = tmp_path / "r.csv"
    write_reports(reps, path)
    write_reports(reps[:1], path, append=True)
    back = read_reports(path)
    assert len(back) == 3
    assert back[0] == reps[0]
    assert (tmp_path / "r.csv").read_text().count("schema_version") == 1


def test_validate_suite():
    jobs = validate_suite(["green", {"name": "plemelj", "tolerance": 0.1}])
    assert jobs[0]["tolerance"] == REGISTRY["green"][1]
    assert jobs[1]["tolerance"] == 0.1
    with pytest.raises(InvalidArgument):
        validate_suite(["nonsense"])
    with pytest.raises(InvalidArgument):
        validate_suite({"name": "green"})
    assert len(validate_suite(default_suite())) == len(default_suite())


def test_run_suite_deterministic_across_threads():
    jobs = [{"name": "orientation"}, {"name": "green"}, {"name": "binomial", "params": {"region": "valid"}},
            {"name": "h_disk", "params": {"m3": [1]}}]
    a = run_suite(jobs, seed=0, threads=1)
    b = run_suite(jobs, seed=0, threads=3)
    assert [r.row() for r in a] == [r.row() for r in b]
    assert all(r.passed for r in a)


def test_invalid_contour_detected():
    q = DISK.contour(256)
    bad = type(q)(q.nodes[::-1], -q.weights[::-1], q.domain)
    with pytest.raises(InvalidDomain):
        green_defect((lambda z: z, lambda z: 1 + 0 * z), (lambda z: 0 * z, lambda z: 0 * z), bad)
