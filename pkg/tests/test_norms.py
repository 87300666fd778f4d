"""Discrete Lebesgue, Sobolev, Hoelder and boundary Besov norms; approximating polynomials."""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beltrami_lab.errors import InvalidArgument, UndefinedNormError
from beltrami_lab.geometry import resolve_domain
from beltrami_lab.geometry.domain import square, unit_square
from beltrami_lab.grid import ComplexField, make_grid, sample
from beltrami_lab.norms import (EXACT, SobolevParams, admissible_mask, algebra_ratio, approx_poly,
                                besov_boundary_seminorm, coefficient_bound_ratio, dumps_records,
                                fd_weights, gradient_lp, holder_norm, lp_norm, norm_record,
                                partial, poincare_ratio, sobolev_norm)


def aligned_square_grid(n: int):
    """Grid whose nodes are the cell centres of a uniform partition of the unit square."""
    h = 1.0 / (n - 32)
    return make_grid((0.5 + h / 2) * (1 + 1j), n * h / 2, n)


@pytest.mark.parametrize("n,p", [(0, 1.0), (-1, 2.0), (1.5, 2.0), (1, np.inf)])
def test_params_validation(n, p):
    with pytest.raises(InvalidArgument):
        SobolevParams(n, p)


def test_algebra_flag():
    assert SobolevParams(1, 4).algebra and not SobolevParams(1, 2).algebra


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, np.inf])
def test_lp_of_one_is_area_power(p):
    dom = unit_square()
    spec = aligned_square_grid(128)
    one = ComplexField(spec, np.ones(spec.shape))
    expect = 1.0 if p == np.inf else 1.0 ** (1 / p)
    assert lp_norm(one, dom, p) == pytest.approx(expect, rel=1e-12)
    disk = resolve_domain("disk")
    s2 = make_grid(0, 2.0, 512)
    assert lp_norm(ComplexField(s2, np.ones(s2.shape)), disk, 2.0) == pytest.approx(np.sqrt(np.pi), rel=2e-3)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_partial_exact_on_polynomials(order):
    h = 0.1
    x = h * (np.arange(32) - 16)
    vals = np.repeat((x ** (order + 1))[:, None], 32, axis=1)
    d = partial(vals, order, 0, h)
    # d^order x^(order+1) = (order+1)! x
    exact = np.prod(range(1, order + 2)) * x
    np.testing.assert_allclose(d[12:20, 16], exact[12:20], atol=1e-9)
    assert np.abs(partial(vals, 0, 1, h)[12:20, 12:20]).max() < 1e-9
    assert isinstance(fd_weights(order), tuple)


def test_sobolev_of_real_part():
    dom = unit_square()
    spec = aligned_square_grid(1024)
    f = sample(lambda z: z.real, spec)
    val, collar = sobolev_norm(f, dom, SobolevParams(1, 2), return_collar=True)
    lp = lp_norm(f, dom, 2)
    assert abs(lp - 1 / np.sqrt(3)) < 1e-5
    # the gradient part is |grad f| = 1 over the admissible interior of area 1 - collar
    assert val == pytest.approx(lp + np.sqrt(1 - collar), rel=1e-10)
    assert abs(val - (1 + 1 / np.sqrt(3))) <= collar
    assert gradient_lp(f, dom, 1, 2) == pytest.approx(np.sqrt(1 - collar), rel=1e-10)
    d = sobolev_norm(f, dom, SobolevParams(1, 2), "directional")
    assert d == pytest.approx(val, rel=1e-10)


def test_thin_domain_has_no_admissible_cells():
    dom = square(0, 0.01)
    spec = make_grid(0, 1.0, 64)
    f = sample(lambda z: z, spec)
    ok, collar = admissible_mask(dom, spec, 2)
    assert not ok.any()
    with pytest.raises(UndefinedNormError):
        sobolev_norm(f, dom, SobolevParams(2, 2))


def test_holder_of_real_part():
    dom = unit_square()
    spec = aligned_square_grid(128)
    f = sample(lambda z: z.real, spec)
    v = holder_norm(f, dom, 1.0)
    assert abs(v - 2) < 2 * spec.spacing
    with pytest.raises(InvalidArgument):
        holder_norm(f, dom, 1.5)


def test_holder_sampling_path_is_seeded():
    dom = resolve_domain("disk")
    spec = make_grid(0, 1.5, 256)
    f = sample(lambda z: np.sqrt(np.abs(z)), spec)
    a = holder_norm(f, dom, 0.5, seed=3)
    assert a == holder_norm(f, dom, 0.5, seed=3)
    assert 1 < a < 3


def test_besov_circle_converges_and_square_diverges():
    circ = resolve_domain("disk")
    sq = unit_square()
    c = [besov_boundary_seminorm(circ.normal_field(m), 0.75, 4) for m in (512, 1024)]
    s = [besov_boundary_seminorm(sq.normal_field(m), 0.75, 4) for m in (512, 1024)]
    assert abs(c[1] / c[0] - 1) < 5e-3
    assert s[1] / s[0] > 1.1
    with pytest.raises(InvalidArgument):
        besov_boundary_seminorm(circ.normal_field(64), 1.0, 2)


def test_besov_rotation_invariant():
    dom = resolve_domain("perturbed_circle")
    nf = dom.normal_field(512)
    a = besov_boundary_seminorm(nf, 0.5, 2)
    assert besov_boundary_seminorm(nf.rotated(0.7), 0.5, 2) == pytest.approx(a, rel=1e-12)
    assert besov_boundary_seminorm(dom.normal_field(512, start=0.3), 0.5, 2) == pytest.approx(a, rel=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=6, max_size=6))
def test_approx_poly_reproduces_polynomials(c):
    spec = make_grid(0, 1.0, 64)

    def poly(z):
        x, y = z.real, z.imag
        return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y

    f = sample(poly, spec)
    cube = (-0.25 - 0.25j, 0.5)
    p = approx_poly(f, cube, 3)
    z = spec.points[24:40, 24:40]
    np.testing.assert_allclose(p(z), poly(z), atol=1e-10 * (1 + max(abs(x) for x in c)))
    # projection: applying it to its own output changes nothing
    q = approx_poly(p.to_field(spec), cube, 3)
    np.testing.assert_allclose(q.coefficient_array(), p.coefficient_array(), atol=1e-10)


def test_approx_poly_errors():
    spec = make_grid(0, 1.0, 64)
    f = sample(lambda z: z, spec)
    with pytest.raises(InvalidArgument):
        approx_poly(f, (0, 0.05), 3)
    with pytest.raises(InvalidArgument):
        approx_poly(f, (0.9 + 0.9j, 0.5), 2)
    with pytest.raises(InvalidArgument):
        approx_poly(f, (0, 0.5), 0)


def test_poincare_and_coefficients():
    spec = make_grid(0, 1.0, 128)
    cube = (-0.125 - 0.125j, 0.25)
    lin = sample(lambda z: 1 + 2 * z.real - z.imag, spec)
    assert poincare_ratio(lin, cube, 2, 1, 2.0) == EXACT
    f = sample(lambda z: np.sin(3 * z.real) * np.cos(2 * z.imag), spec)
    for j in range(3):
        r = poincare_ratio(f, cube, 2, j, 2.0)
        assert 0 <= r < 50
    assert 0 < coefficient_bound_ratio(f, cube, 2) < 10
    with pytest.raises(InvalidArgument):
        poincare_ratio(f, cube, 2, 3, 2.0)


def test_algebra_ratio():
    dom = resolve_domain("disk")
    spec = make_grid(0, 1.5, 256)
    f = sample(lambda z: np.exp(-np.abs(z) ** 2), spec)
    g = sample(lambda z: np.cos(z.real) + 1j * z.imag, spec)
    prm = SobolevParams(1, 4)
    assert 0 < algebra_ratio(f, g, dom, prm) < 10
    assert 0 < algebra_ratio(f, 3, dom, prm) < 10
    with pytest.raises(InvalidArgument):
        algebra_ratio(f, g, dom, SobolevParams(1, 2))
    with pytest.raises(InvalidArgument):
        algebra_ratio(f, 1, dom, SobolevParams(2, 2))


def test_records_are_json():
    dom = resolve_domain("disk")
    spec = make_grid(0, 1.5, 64)
    r = norm_record("lp", 1.25, {"p": 2}, dom, spec, 0.1)
    assert r["domain"] == "disk" and r["resolution"] == 64
    out = json.loads(dumps_records([r, norm_record("poincare", EXACT, {}, dom, spec)]))
    assert out[1]["value"] == EXACT
