import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stdg.basis import (
    SpaceKind,
    build_basis_set,
    build_exponential_trefftz_basis,
    build_full_poly_basis,
    build_quasi_trefftz_basis,
    evaluate,
    full_dim,
    quasi_trefftz_constraint_matrix,
    quasi_trefftz_dim,
    schrodinger_jet,
    taylor_of_exact_solution,
    trefftz_wavenumbers,
)
from stdg.mesh import Element, SpaceTimeDomain, build_cartesian_mesh
from stdg.polyalg import TaylorJet, elementary_jet, multi_indices
from stdg.potential import HarmonicOscillator, Morse, Zero
from stdg.problems import HarmonicSolution, make_problem


def element_1d(x0=0.0, hx=0.5, t0=0.0, ht=0.25):
    return Element(0, ((x0, x0 + hx),), (t0, t0 + ht), hx, ht, float(np.hypot(hx, ht)),
                   (x0 + hx / 2, t0 + ht / 2), 0)


def element_2d():
    return Element(0, ((0.0, 0.2), (0.1, 0.3)), (0.0, 0.1), 0.2 * np.sqrt(2), 0.1, 0.3,
                   (0.1, 0.2, 0.05), 0)


def test_dimensions():
    assert full_dim(1, 1) == 3
    assert full_dim(1, 7) == 36
    assert full_dim(2, 5) == 56
    assert quasi_trefftz_dim(1, 7) == 15
    assert full_dim(1, 7) - quasi_trefftz_dim(1, 7) == 21
    assert quasi_trefftz_dim(2, 5) == 36
    assert build_full_poly_basis(element_1d(), 7).dim == 36
    assert build_quasi_trefftz_basis(element_1d(), 7, HarmonicOscillator(10)).dim == 15
    assert build_quasi_trefftz_basis(element_2d(), 5, HarmonicOscillator(10, dim=2)).dim == 36


@pytest.mark.parametrize("d,p", [(1, p) for p in range(1, 7)] + [(2, p) for p in range(1, 7)])
def test_dimension_formula_matches_constraint_rank(d, p):
    el = element_1d() if d == 1 else element_2d()
    V = HarmonicOscillator(3.0, dim=d).jet_at(np.array(el.center), max(p - 2, 0))
    M = quasi_trefftz_constraint_matrix(d, p, el.h_K, V) if p >= 2 else np.zeros((0, full_dim(d, p)))
    rank = np.linalg.matrix_rank(M) if M.size else 0
    assert full_dim(d, p) - rank == quasi_trefftz_dim(d, p)


def test_p1_quasi_trefftz_equals_full_space():
    qt = build_quasi_trefftz_basis(element_1d(), 1, Zero())
    assert qt.dim == 3
    M = np.array([f.coeffs for f in qt.functions])
    assert np.linalg.matrix_rank(M) == 3


def test_exponential_wavenumbers():
    assert trefftz_wavenumbers(1, "nonorthogonal", 0.5).tolist() == [-1.0, 0.0, 1.0]
    assert np.allclose(trefftz_wavenumbers(1, "orthogonal", 0.5), [4 * np.pi, 8 * np.pi, 12 * np.pi])
    with pytest.raises(ValueError):
        trefftz_wavenumbers(1, "other", 0.5)
    basis = build_exponential_trefftz_basis(element_1d(), 2)
    for f in basis.functions:
        assert abs(evaluate(f, (0.13, 0.2), Zero()).schrodinger_residual) < 1e-12


def test_scaled_monomial_and_constant_member():
    el = element_1d()
    fb = build_full_poly_basis(el, 2)
    x_member = fb.functions[multi_indices(2, 2).index((1, 0))]
    ev = evaluate(x_member, el.center)
    assert ev.value == 0
    assert np.isclose(ev.space_gradient[0], 1 / el.h_K)
    const = fb.functions[0]
    ev = evaluate(const, (0.3, 0.1), HarmonicOscillator(10))
    assert ev.value == 1 and ev.space_gradient[0] == 0 and ev.time_derivative == 0
    assert np.isclose(ev.schrodinger_residual, -50 * 0.3**2)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    el = element_1d()
    f = build_quasi_trefftz_basis(el, 3, Morse()).functions[4]
    pt = np.array(el.center) + rng.uniform(-0.1, 0.1, 2)
    ev = evaluate(f, pt)
    h = 1e-6
    fd_x = (evaluate(f, pt + [h, 0]).value - evaluate(f, pt - [h, 0]).value) / (2 * h)
    fd_t = (evaluate(f, pt + [0, h]).value - evaluate(f, pt - [0, h]).value) / (2 * h)
    assert abs(fd_x - ev.space_gradient[0]) < 1e-7 * max(1, abs(fd_x))
    assert abs(fd_t - ev.time_derivative) < 1e-7 * max(1, abs(fd_t))


def test_batched_evaluation_matches_members():
    mesh = build_cartesian_mesh(SpaceTimeDomain(((-1, 1),), 1.0), 3, 2)
    bset = build_basis_set(mesh, [0, 4], "quasi_trefftz", 3, HarmonicOscillator(2.0))
    pts = np.stack([mesh.centers[[0, 4]] + 0.01, mesh.centers[[0, 4]] - 0.02], axis=1)
    vals = bset.evaluate(pts)
    for e in range(2):
        for b in range(bset.dim):
            ev = evaluate(bset.member(e, b), pts[e, 1])
            assert np.isclose(vals.value[e, 1, b], ev.value)
            assert np.isclose(vals.dt[e, 1, b], ev.time_derivative)
            assert np.isclose(vals.lap[e, 1, b], ev.space_hessian[0, 0])


def test_taylor_of_exact_solution_constant_potential():
    class ExpSolution:
        def jet_at(self, center, order):
            x, t = TaylorJet.variables(center, order)
            return elementary_jet("exp", x + 0.5j * t)

    el = Element(0, ((-0.5, 0.5),), (-0.5, 0.5), 1.0, 1.0, 1.0, (0.0, 0.0), 0)
    exp = taylor_of_exact_solution(ExpSolution(), el, 2)
    assert exp.degree == 1
    assert multi_indices(2, 1) == ((0, 0), (1, 0), (0, 1))
    assert np.allclose(exp.coeffs, [1, 1, 0.5j])


def test_taylor_of_constant_solution():
    sol = make_problem("constant", {"dim": 1}).exact
    exp = taylor_of_exact_solution(sol, element_1d(), 4)
    assert np.count_nonzero(np.abs(exp.coeffs) > 1e-15) == 1


def test_taylor_of_harmonic_solution_matches_finite_differences():
    sol = HarmonicSolution(10, 2)
    el = element_1d(x0=0.2, hx=0.1, t0=0.3, ht=0.1)
    jet = taylor_of_exact_solution(sol, el, 5).unscaled_jet()
    c = np.array(el.center)
    f = lambda dx, dt: sol.value(np.array([[c[0] + dx, c[1] + dt]]))[0]

    def richardson(stencil, h=2e-3):
        return (4 * stencil(h / 2) - stencil(h)) / 3

    d2x = richardson(lambda h: (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / h**2)
    dxt = richardson(lambda h: (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h**2))
    assert abs(jet.derivative((2, 0)) - d2x) < 1e-6 * abs(d2x)
    assert abs(jet.derivative((1, 1)) - dxt) < 1e-6 * abs(dxt)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 5), st.floats(-0.4, 1.4), st.floats(0.01, 0.2))
def test_quasi_trefftz_members_annihilate_low_order_residual(p, x0, h):
    el = element_1d(x0=x0, hx=h, ht=h)
    pot = Morse()
    V = pot.jet_at(np.array(el.center), p - 2)
    for f in build_quasi_trefftz_basis(el, p, pot).functions:
        jet = f.unscaled_jet()
        res = schrodinger_jet(jet, V).coeffs
        scale = np.array([el.h_K ** (sum(j) + 2) for j in multi_indices(2, p - 2)])
        assert np.max(np.abs(res * scale)) <= 1e-12 * np.max(np.abs(f.coeffs))


def test_space_kind_values():
    assert {k.value for k in SpaceKind} == {"full_poly", "quasi_trefftz", "trefftz_exp"}
    mesh = build_cartesian_mesh(SpaceTimeDomain(((0, 1), (0, 1)), 1.0), 2, 1)
    with pytest.raises(ValueError):
        build_basis_set(mesh, [0], "trefftz_exp", 1)
    with pytest.raises(ValueError):
        build_basis_set(mesh, [0], "full_poly", 0)
