"""Domains, Whitney coverings, chains, shadows and the maximal-function lemmas."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beltrami_lab.errors import EmptyCoverError, InvalidArgument, InvalidDomain
from beltrami_lab.geometry import build_domain, resolve_domain
from beltrami_lab.geometry.domain import disk, polygon_domain, square, unit_square
from beltrami_lab.geometry.maximal import (box_sums, chain_double_sum, chain_sum_ratio,
                                           covering_grid, cube_integrals, maximal,
                                           maximal_lemma_audit, maximal_ratio, random_densities,
                                           summed_area)
from beltrami_lab.geometry.whitney import (audit_chains, audit_covering, long_distance,
                                           shadow_area_bound, whitney)
from beltrami_lab.grid import ComplexField, make_grid, sample

NAMES = ["unit_square", "disk", "perturbed_circle", "smoothed_square"]


@pytest.fixture(scope="module")
def square_cover():
    return whitney(unit_square(), 2.0 ** -4)


@pytest.fixture(scope="module")
def circle_cover():
    return whitney(resolve_domain("perturbed_circle"), 2.0 ** -4)


# --------------------------------------------------------------------------
# Domains


@pytest.mark.parametrize("name,area", [("unit_square", 1.0), ("disk", np.pi),
                                       ("perturbed_circle", np.pi * (1 + 0.3 ** 2 / 2))])
def test_area(name, area):
    assert abs(resolve_domain(name).area - area) < 1e-6


@pytest.mark.parametrize("name", NAMES)
def test_contour_orientation(name):
    dom = resolve_domain(name)
    q = dom.contour(2048)
    assert q.closure_defect() < 1e-10
    assert abs(q.winding_number(dom.centroid) - 1) < 1e-10
    assert abs(q.winding_number(dom.centroid + 10) ) < 1e-10
    assert abs(dom.normal_field(1024).winding() - 2 * np.pi) < 1e-8


def test_contains_and_distance():
    dom = disk()
    z = np.array([0, 0.5j, 2, 1.0 - 1e-3])
    assert list(dom.contains(z)) == [True, True, False, True]
    np.testing.assert_allclose(dom.boundary_distance(z[:2]), [1, 0.5], atol=1e-6)


@pytest.mark.parametrize("verts", [[0, 1, 1j, 1 + 1j], [0, 1], [0, 1, 2]])
def test_invalid_polylines(verts):
    with pytest.raises(InvalidDomain):
        polygon_domain(verts)


def test_json_round_trip():
    dom = resolve_domain("perturbed_circle")
    again = build_domain(dom.to_json())
    assert abs(again.area - dom.area) < 1e-12
    with pytest.raises(InvalidArgument):
        resolve_domain("nowhere")
    with pytest.raises(InvalidArgument):
        build_domain({"type": "parametric", "fn": "spiral"})


@pytest.mark.parametrize("mode", ["sharp", "coverage", "mollified"])
def test_indicator_modes(mode):
    spec = make_grid(0, 2.0, 256)
    chi = disk().indicator(spec, mode)
    # the mollified ramp of width 4h gives up about half of the collar
    lost = 2 * np.pi * 4 * spec.spacing / 2 if mode == "mollified" else 0.0
    assert abs(chi.integral().real - (np.pi - lost)) < 0.02
    assert chi.values.real.min() >= 0 and chi.values.real.max() <= 1
    if mode == "mollified":
        assert np.all(chi.values[~disk().mask(spec)] == 0)


def test_rotation_preserves_area():
    dom = resolve_domain("smoothed_square")
    assert abs(dom.rotated(0.3).area - dom.area) < 1e-9


# --------------------------------------------------------------------------
# Whitney coverings


def test_long_distance():
    assert np.isclose(long_distance((0, 1.0), (0, 1.0)), 2 * np.sqrt(2))
    assert np.isclose(long_distance((0, 1.0), (3, 1.0)), 2 * np.sqrt(2) + 2)


@pytest.mark.parametrize("fixture", ["square_cover", "circle_cover"])
def test_covering_invariants(fixture, request):
    cov = request.getfixturevalue(fixture)
    a = audit_covering(cov)
    assert a["distance_ok"] and a["neighbor_ok"] and a["connected"] and a["collar_ok"]
    assert a["overlap_20Q"] < 2000
    # cubes are disjoint and lie inside the domain
    assert abs(np.sum(cov.sides ** 2) + cov.collar_area - cov.domain.area) < 1e-12
    assert np.all(cov.domain.contains(cov.centers))


@pytest.mark.parametrize("fixture", ["square_cover", "circle_cover"])
def test_chain_invariants(fixture, request):
    cov = request.getfixturevalue(fixture)
    rho = cov.calibrate_rho(5.0)
    ch = audit_chains(cov, rho)
    assert ch["chain_ratio_max"] <= 10
    assert ch["shadow_ok"] and ch["descendants_in_shadow"]
    assert ch["shadow_area_bound"] == shadow_area_bound(rho)


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_chains_are_neighbour_paths(data):
    cov = whitney(unit_square(), 2.0 ** -4)
    q = data.draw(st.integers(0, cov.size - 1))
    s = data.draw(st.integers(0, cov.size - 1))
    ch = cov.chain(q, s)
    assert ch.cubes[0] == q and ch.cubes[-1] == s
    for a, b in zip(ch.cubes[:-1], ch.cubes[1:]):
        assert cov.adjacency[a, b]
    assert cov.chain_length(ch) == pytest.approx(cov.chain_lengths()[q, s])
    assert cov.index_of(cov.centers[q]) == q


def test_whitney_errors():
    with pytest.raises(InvalidArgument):
        whitney(unit_square(), 0.0)
    with pytest.raises(EmptyCoverError):
        whitney(square(0, 0.01), 0.5)


def test_csv_export(tmp_path, square_cover):
    square_cover.write_csv(tmp_path / "c.csv")
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert len(rows) == square_cover.size + 1


# --------------------------------------------------------------------------
# Maximal function


def test_box_sums_half_open():
    spec = make_grid(0.5 / 8 * (1 + 1j), 1.0, 16)
    sat = summed_area(np.ones(spec.shape))
    whole = box_sums(sat, spec, np.array([-1 - 1j]), np.array([1 + 1j]))
    halves = (box_sums(sat, spec, np.array([-1 - 1j]), np.array([0 + 1j]))
              + box_sums(sat, spec, np.array([0 - 1j]), np.array([1 + 1j])))
    assert whole[0] == halves[0] == 256


def test_maximal_dominates_and_is_bounded():
    spec = make_grid(0, 1.0, 64)
    f = sample(lambda z: np.exp(-np.abs(z) ** 2 / 0.05), spec)
    m = maximal(f)
    assert np.all(m.values.real >= f.values.real - 1e-15)
    assert 1 <= maximal_ratio(f) < 10
    c = ComplexField(spec, np.ones(spec.shape))
    np.testing.assert_allclose(maximal(c).values, 1)


def test_cube_integrals_of_constant(square_cover):
    spec = covering_grid(square_cover)
    one = ComplexField(spec, square_cover.domain.mask(spec).astype(float))
    np.testing.assert_allclose(cube_integrals(square_cover, one), square_cover.sides ** 2, rtol=1e-12)


def test_maximal_lemma(circle_cover):
    spec = covering_grid(circle_cover)
    rho = circle_cover.calibrate_rho(5.0)
    for g in random_densities(spec, circle_cover.domain.mask(spec), 3, 0):
        r = maximal_lemma_audit(circle_cover, g)
        assert max(r["far"], r["close"]) <= 20
        # descendants lie in a square of side 2 rho l(Q); dyadic M loses a factor 4
        assert r["below"] <= 4 * (2 * rho) ** 2
    with pytest.raises(InvalidArgument):
        maximal_lemma_audit(circle_cover, g, eta=0)


def test_double_sum_is_bilinear(square_cover):
    spec = covering_grid(square_cover, 2)
    mask = square_cover.domain.mask(spec).astype(float)
    f = sample(lambda z: 1 + z.real, spec) * mask
    g = sample(lambda z: np.exp(-abs(z - 0.3) ** 2), spec) * mask
    a = chain_double_sum(square_cover, f, g)
    assert a > 0
    assert chain_double_sum(square_cover, f * 3, g) == pytest.approx(3 * a)
    both = chain_double_sum(square_cover, [f, g], [g, f])
    assert both[0] == pytest.approx(a)
    assert np.isfinite(chain_sum_ratio(square_cover, f, g))
    with pytest.raises(InvalidArgument):
        chain_double_sum(square_cover, f, g, rho=0.5)
    with pytest.raises(InvalidArgument):
        chain_sum_ratio(square_cover, f, g, p=1.0)
