"""Neumann solver, principal solution, localized identities and probes."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beltrami_lab import rng
from beltrami_lab.beltrami import (BeltramiProblem, bump_coefficient, conformal_defect,
                                   contraction_estimate, factorization_terms, jump_coefficient,
                                   mollified_coefficient, neumann_solve, pm_identity_defect,
                                   principal_solution, regularity_table, solve)
from beltrami_lab.errors import (ConvergenceWarning, GridMismatch, InsufficientData,
                                 InvalidArgument, NotContractiveError)
from beltrami_lab.geometry import resolve_domain
from beltrami_lab.grid import ComplexField, make_grid, random_band_limited

DISK = resolve_domain("disk")
SPEC = make_grid(0, 2.5, 128)


def _problem(amp=0.5, spec=SPEC):
    return BeltramiProblem.from_function(bump_coefficient(amp, 0.8), DISK, spec)


def test_zero_coefficient_gives_identity():
    prob = BeltramiProblem(ComplexField.zeros(SPEC), DISK)
    sol = solve(prob)
    assert sol.h.sup() == 0
    np.testing.assert_allclose(sol.f.values, SPEC.points, atol=1e-14)
    assert prob.K == 1


@pytest.mark.parametrize("amp", [1.0, 1.2])
def test_not_contractive(amp):
    with pytest.raises(NotContractiveError):
        BeltramiProblem.from_function(lambda z: amp + 0 * z, DISK, SPEC)


def test_mu_must_vanish_outside_domain():
    mu = ComplexField(SPEC, np.full(SPEC.shape, 0.2))
    with pytest.raises(InvalidArgument):
        BeltramiProblem(mu, DISK)


@pytest.mark.parametrize("amp", [0.3, 0.6, 0.8])
def test_solution_satisfies_equation(amp):
    prob = _problem(amp)
    sol = solve(prob)
    d = sol.diagnostics
    assert sol.trace.converged
    assert d["beltrami_relative"] < 1e-9
    assert d["dbar_defect"] < 1e-10 and d["d_defect"] < 1e-10
    assert d["quasiregular_excess"] < 1e-8
    assert sol.trace.support_defect == 0
    # residual ratios settle near the contraction factor
    assert np.all(sol.trace.ratios() <= amp + 0.05)


def test_conformal_away_from_support():
    prob = _problem(0.5)
    sol = solve(prob)
    assert conformal_defect(sol, prob) < 1e-10


def test_nonconvergence_warns():
    with pytest.warns(ConvergenceWarning):
        h, trace = neumann_solve(_problem(0.9), tol=1e-14, kmax=3)
    assert not trace.converged and trace.iterations == 3
    with pytest.raises(InvalidArgument):
        neumann_solve(_problem(0.5), kmax=0)


def test_trace_csv(tmp_path):
    _, trace = neumann_solve(_problem(0.5))
    trace.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,increment,residual"
    assert len(lines) == trace.iterations + 1


def test_grid_mismatch():
    prob = _problem(0.5)
    with pytest.raises(GridMismatch):
        principal_solution(prob, ComplexField.zeros(make_grid(0, 2.5, 64)))


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 6))
def test_localized_identities_hold_to_rounding(seed, m):
    gen = rng.stream(seed, "beltrami-test")
    chi = DISK.mask(SPEC).astype(float)
    mu = random_band_limited(SPEC, gen, 0.3) * chi * 0.6
    prob = BeltramiProblem(mu, DISK)
    g = random_band_limited(SPEC, gen, 0.5)
    scale = g.l2()
    assert pm_identity_defect(prob, m, g) < 1e-12 * scale
    a1, a2, a3, defect = factorization_terms(prob, m, g)
    assert defect < 1e-12 * scale
    if m == 1:
        assert a2.l2() < 1e-12 * scale and a3.l2() < 1e-12 * scale


@pytest.mark.parametrize("m", [0, 1.5])
def test_identity_rejects_bad_order(m):
    prob = _problem(0.5)
    g = ComplexField.zeros(SPEC)
    with pytest.raises(InvalidArgument):
        pm_identity_defect(prob, m, g)
    with pytest.raises(InvalidArgument):
        factorization_terms(prob, m, g)


def test_contraction_estimate():
    prob = _problem(0.5, make_grid(0, 2.5, 64))
    est = contraction_estimate(prob, 2)
    # B^m is an isometry, so the localized version has norm at most one
    assert 0.5 < est["bm_l2"] <= 1 + 1e-10
    assert est["l2"] <= 0.5 ** 2 * est["bm_l2"] + 1e-10
    assert est["sobolev"] >= 0
    zero = BeltramiProblem(ComplexField.zeros(prob.spec), DISK)
    assert contraction_estimate(zero, 1)["l2"] == 0
    with pytest.raises(InvalidArgument):
        contraction_estimate(prob, 1, trials=2)


def test_regularity_table_preconditions():
    prob = _problem(0.5)
    with pytest.raises(InsufficientData):
        regularity_table(prob, [64, 128])
    bare = BeltramiProblem(prob.mu, DISK)
    with pytest.raises(InvalidArgument):
        bare.resampled(make_grid(0, 2.5, 64))


def test_regularity_table_bounded_for_smooth_coefficient():
    prob = BeltramiProblem.from_function(bump_coefficient(0.4, 0.9), DISK, make_grid(0, 2.5, 64))
    tab = regularity_table(prob, [64, 128, 256])
    assert tab["bounded"] and len(tab["rows"]) == 3
    assert all(r["beltrami_relative"] < 1e-8 for r in tab["rows"])


def test_standard_coefficients():
    z = np.array([0, 0.5, 0.99, 1.5])
    np.testing.assert_allclose(bump_coefficient(0.5, 1.0)(z), 0.5 * np.clip(1 - z ** 2, 0, None) ** 3)
    np.testing.assert_allclose(jump_coefficient(0.5, 1.0)(z), [0.5, 0.5, 0.5, 0])
    mol = mollified_coefficient(0.4, DISK, SPEC)
    assert abs(mol.sup() - 0.4) < 1e-12
    BeltramiProblem(mol, DISK)
