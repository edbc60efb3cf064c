"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""
import math

import numpy as np
import pytest

from stdg.analysis import convergence_rates, dg_norm, dg_norm_error, energy_loss, l2_final_error
from stdg.assembly import SlabAssembler, StabilizationConfig
from stdg.basis import (
    build_quasi_trefftz_basis,
    full_dim,
    quasi_trefftz_constraint_matrix,
    quasi_trefftz_dim,
    schrodinger_jet,
)
from stdg.mesh import Element
from stdg.polyalg import multi_indices
from stdg.potential import (
    HarmonicOscillator,
    Morse,
    RationalSingular,
    Reflectionless,
    SquareWell,
    TanhTimeDependent,
    Zero,
)
from stdg.problems import make_problem, square_well_wavenumber
from stdg.solver import condition_number, global_matrix, solve, solve_monolithic

# DG errors of the quasi-Trefftz harmonic-oscillator runs, meshes i = 0, 1, 2,
# and the rates between them; standard alpha/beta column.
REF_QT = {
    1: ([1.00e00, 7.67e-01, 4.40e-01], [0.39, 0.80]),
    2: ([4.47e-01, 1.27e-01, 3.28e-02], [1.82, 1.95]),
    3: ([8.54e-02, 1.27e-02, 1.77e-03], [2.75, 2.84]),
    4: ([1.06e-02, 7.93e-04, 5.97e-05], [3.74, 3.73]),
}
# mu = 0 runs, p = 3: alpha = beta = 0 column and the standard alpha/beta entry on mesh 0
REF_MU0_P3_ZERO = [7.84e-02, 9.65e-03, 1.20e-03]
REF_MU0_P3_STANDARD_COARSE = 8.73e-02
# full polynomial space, p = 4, standard alpha/beta, meshes 0 and 1
REF_FULL_P4 = [8.63e-03, 5.82e-04]


def within(value, target, factor):
    return target / factor <= value <= target * factor


def harmonic_errors(kind, p, config, meshes=(0, 1, 2), norm_mu=None):
    problem = make_problem("harmonic")
    hs, errs = [], []
    for i in meshes:
        sol = solve(problem.reference_mesh(i), problem, kind, p, config)
        hs.append(float(np.max(sol.mesh.h_K)))
        errs.append(dg_norm_error(sol, problem.exact, norm_mu))
    return hs, errs


def slope(h, values):
    return float(np.polyfit(np.log(h), np.log(values), 1)[0])


def test_criterion_01_coercivity_identity(record_criterion):
    problem = make_problem("harmonic")
    rng = np.random.default_rng(2024)
    worst, count = 0.0, 0
    for n in (2, 4):
        for kind in ("full_poly", "quasi_trefftz"):
            for p in (1, 2, 3):
                sol = solve(problem.mesh(n, n), problem, kind, p, StabilizationConfig.standard())
                A, _ = global_matrix(sol.assembler)
                for _ in range(5):
                    c = rng.normal(size=sol.coeffs.shape) + 1j * rng.normal(size=sol.coeffs.shape)
                    lhs = np.imag(c.ravel().conj() @ (A @ c.ravel()))
                    rhs = dg_norm(sol, c) ** 2
                    worst = max(worst, abs(lhs - rhs) / rhs)
                    count += 1
    ok = count >= 50 and worst <= 1e-10
    record_criterion("1 coercivity identity", ok, f"{count} samples, max rel. deviation {worst:.2e}")
    assert ok


def _qt_residual(element, p, potential):
    """Largest ``|D^j S b|`` at the centre over members, in the element's scaled
    variables, relative to the member's largest coefficient."""
    center = np.array(element.center)
    V = potential.jet_at(center, p - 2)
    worst = 0.0
    for f in build_quasi_trefftz_basis(element, p, potential).functions:
        res = schrodinger_jet(f.unscaled_jet(), V)
        scale = np.array([element.h_K ** (sum(j) + 2) for j in multi_indices(len(center), p - 2)])
        factorial = np.array([math.prod(math.factorial(k) for k in j)
                              for j in multi_indices(len(center), p - 2)])
        worst = max(worst, np.max(np.abs(res.coeffs * factorial * scale)) / np.max(np.abs(f.coeffs)))
    return worst


def _element(center, h):
    d = len(center) - 1
    hx = h * np.sqrt(d)
    return Element(0, tuple((c - h / 2, c + h / 2) for c in center[:-1]),
                   (center[-1] - h / 2, center[-1] + h / 2), hx, h, float(np.hypot(hx, h)),
                   tuple(center), 0)


def test_criterion_02_quasi_trefftz_residual(record_criterion):
    rng = np.random.default_rng(11)
    potentials = {
        1: [Zero(), HarmonicOscillator(10.0), Reflectionless(1.0), Morse(8.0, 4.0), SquareWell(20.0)],
        2: [Zero(2), HarmonicOscillator(10.0, dim=2), RationalSingular(), TanhTimeDependent()],
    }
    worst = 0.0
    for d, pots in potentials.items():
        for pot in pots:
            for p in range(2, 6):
                for h in (1.0, 0.1, 0.01):
                    # square-well elements stay inside the well, where the jets are defined
                    lo, hi = (-0.15, 0.15) if isinstance(pot, SquareWell) else (0.3, 0.6)
                    center = [rng.uniform(lo, hi) for _ in range(d)] + [rng.uniform(0.2, 0.8)]
                    worst = max(worst, _qt_residual(_element(center, h), p, pot))
    ok = worst <= 1e-12
    record_criterion("2 quasi-Trefftz residual", ok, f"max relative |D^j S b| {worst:.2e}")
    assert ok


def test_criterion_03_dimension_counts(record_criterion):
    ok = quasi_trefftz_dim(1, 7) == 15 and full_dim(1, 7) == 36
    ok &= full_dim(1, 7) - quasi_trefftz_dim(1, 7) == 21
    rng = np.random.default_rng(3)
    for d in (1, 2):
        for p in range(1, 7):
            center = rng.uniform(0.2, 0.8, d + 1)
            el = _element(list(center), 0.2)
            V = Morse(8.0, 4.0, dim=d).jet_at(center, max(p - 2, 0))
            rank = np.linalg.matrix_rank(quasi_trefftz_constraint_matrix(d, p, el.h_K, V)) if p >= 2 else 0
            ok &= full_dim(d, p) - rank == quasi_trefftz_dim(d, p)
            ok &= build_quasi_trefftz_basis(el, p, Morse(8.0, 4.0, dim=d)).dim == quasi_trefftz_dim(d, p)
    record_criterion("3 dimension counts", ok, "n_{2,7}=15, r_{2,7}=36, rank check p<=6, d=1,2")
    assert ok


def test_criterion_04_harmonic_reference(record_criterion):
    ok, lines = True, []
    for p, (ref, ref_rates) in REF_QT.items():
        hs, errs = harmonic_errors("quasi_trefftz", p, StabilizationConfig.standard())
        rates = convergence_rates(hs, errs)
        good = all(within(e, t, 1.5) for e, t in zip(errs, ref))
        good &= all(abs(r - t) <= 0.2 for r, t in zip(rates, ref_rates))
        ok &= good
        lines.append(f"p={p}: " + ", ".join(f"{e:.3e}" for e in errs)
                     + " rates " + ", ".join(f"{r:.2f}" for r in rates))
    record_criterion("4 harmonic oscillator reference values (mu = max(h_t^2, h_x^2))", ok, "; ".join(lines))
    assert ok


@pytest.mark.xfail(strict=True, reason="mu = max(h_t, h_x) gives errors up to 3.7 times the "
                                       "reference ones; the reference values match the squared rule")
def test_criterion_04_literal_mu(record_criterion):
    ok, ratios = True, []
    for p, (ref, _) in REF_QT.items():
        _, errs = harmonic_errors("quasi_trefftz", p, StabilizationConfig(mu="max_h"))
        ok &= all(within(e, t, 1.5) for e, t in zip(errs, ref))
        ratios.append(max(e / t for e, t in zip(errs, ref)))
    record_criterion("4 (literal mu = max(h_t, h_x), informational)", ok,
                     "worst error/reference ratio per p: " + ", ".join(f"{r:.2f}" for r in ratios))
    assert ok


def test_criterion_05_zero_stabilization(record_criterion):
    zero = StabilizationConfig.zero()
    _, errs = harmonic_errors("quasi_trefftz", 3, zero, norm_mu="squared_max")
    ok = all(within(e, t, 1.5) for e, t in zip(errs, REF_MU0_P3_ZERO))
    _, std = harmonic_errors("quasi_trefftz", 3, StabilizationConfig(mu="zero"), meshes=(0,),
                             norm_mu="squared_max")
    ok &= within(std[0], REF_MU0_P3_STANDARD_COARSE, 1.5)
    record_criterion("5 zero stabilisation", ok,
                     "alpha=beta=mu=0, p=3: " + ", ".join(f"{e:.3e}" for e in errs)
                     + f"; standard alpha/beta, mu=0, coarse: {std[0]:.3e}")
    assert ok


def test_criterion_06_full_polynomial(record_criterion):
    std = StabilizationConfig.standard()
    _, full4 = harmonic_errors("full_poly", 4, std, meshes=(0, 1))
    ok = all(within(e, t, 1.5) for e, t in zip(full4, REF_FULL_P4))
    worst = 1.0
    for p in (1, 2, 3, 4):
        _, qt = harmonic_errors("quasi_trefftz", p, std, meshes=(0, 1))
        fp = full4 if p == 4 else harmonic_errors("full_poly", p, std, meshes=(0, 1))[1]
        worst = max(worst, *(max(a / b, b / a) for a, b in zip(qt, fp)))
    ok &= worst <= 3.0
    record_criterion("6 full polynomial comparison", ok,
                     f"full p=4: {full4[0]:.3e}, {full4[1]:.3e}; worst QT/full ratio {worst:.2f}")
    assert ok


def test_criterion_07_square_well(record_criterion):
    k = square_well_wavenumber(20.0)
    ok = abs(k - 3.73188) <= 1e-4
    problem = make_problem("square_well")
    details = [f"k*={k:.6f}"]
    for p in (1, 2, 3):
        sols = [solve(problem.reference_mesh(i), problem, "quasi_trefftz", p) for i in (2, 3, 4)]
        h = [float(np.max(s.mesh.h_K)) for s in sols]
        rates = convergence_rates(h, [dg_norm_error(s, problem.exact) for s in sols])
        ok &= all(abs(r - p) <= 0.25 for r in rates)
        details.append(f"p={p} rates " + ", ".join(f"{r:.2f}" for r in rates))
    record_criterion("7 square well", ok, "; ".join(details))
    assert ok


def test_criterion_08_energy_loss(record_criterion):
    problem = make_problem("harmonic")
    ok, details = True, []
    for p, meshes in ((1, (2, 3, 4)), (2, (1, 2, 3))):
        losses, hs = [], []
        for i in meshes:
            sol = solve(problem.reference_mesh(i), problem, "quasi_trefftz", p)
            losses.append(energy_loss(sol).loss)
            hs.append(float(np.max(sol.mesh.h_K)))
        rates = convergence_rates(hs, losses)
        ok &= all(x >= 0 for x in losses)
        ok &= all(r is not None and abs(r - 2 * p) <= 0.3 for r in rates)
        details.append(f"p={p} losses " + ", ".join(f"{x:.3e}" for x in losses)
                       + " rates " + ", ".join(f"{r:.2f}" for r in rates))
    record_criterion("8 energy loss", ok, "; ".join(details))
    assert ok


def test_criterion_09_conditioning(record_criterion):
    problem = make_problem("free")
    ns = (8, 16, 32, 64)
    spaces = [("quasi_trefftz", "nonorthogonal"), ("full_poly", "nonorthogonal"),
              ("trefftz_exp", "orthogonal"), ("trefftz_exp", "nonorthogonal")]
    ok, details = True, []
    for p in (1, 2):
        for kind, mode in spaces:
            h, kap = [], []
            for n in ns:
                mesh = problem.mesh(n, n)
                asm = SlabAssembler(mesh, problem, kind, p, mode=mode)
                h.append(float(np.max(mesh.h_K)))
                kap.append(condition_number(asm.matrix(0)))
            s = slope(h, kap)
            target = -(2 * p + 1) if (kind, mode) == ("trefftz_exp", "nonorthogonal") else -1
            tol = 0.7 if target != -1 else 0.5
            ok &= abs(s - target) <= tol
            details.append(f"{kind}/{mode[:3]} p={p}: {s:.2f}")
    record_criterion("9 conditioning slopes", ok, "; ".join(details))
    assert ok


def test_criterion_10_rational_2d(record_criterion):
    problem = make_problem("rational")
    ok, details = True, []
    for p in (1, 2):
        sols = [solve(problem.reference_mesh(i), problem, "quasi_trefftz", p) for i in (0, 1, 2)]
        h = [float(np.max(s.mesh.h_x)) for s in sols]
        dg = convergence_rates(h, [dg_norm_error(s, problem.exact) for s in sols])
        l2 = convergence_rates(h, [l2_final_error(s, problem.exact) for s in sols])
        ok &= all(abs(r - p) <= 0.25 for r in dg)
        ok &= all(abs(r - (p + 1)) <= 0.3 for r in l2)
        details.append(f"p={p} DG " + ", ".join(f"{r:.2f}" for r in dg)
                       + " L2(F_T) " + ", ".join(f"{r:.2f}" for r in l2))
    coarse = problem.reference_mesh(0)
    errs = [dg_norm_error(solve(coarse, problem, "quasi_trefftz", p), problem.exact) for p in (1, 2, 3, 4)]
    ok &= all(a > b for a, b in zip(errs, errs[1:]))
    details.append("p-sweep " + ", ".join(f"{e:.2e}" for e in errs))
    record_criterion("10 rational potential 2+1D", ok, "; ".join(details))
    assert ok


def test_criterion_11_exactness_and_monolithic(record_criterion):
    problem = make_problem("free", {"kappa": 1.0})
    mesh = problem.mesh(4, 3)
    err = dg_norm_error(solve(mesh, problem, "trefftz_exp", 2), problem.exact)
    harmonic = make_problem("harmonic")
    hmesh = harmonic.mesh(24, 6)
    seq = solve(hmesh, harmonic, "quasi_trefftz", 3)
    mono = solve_monolithic(hmesh, harmonic, "quasi_trefftz", 3)
    diff = np.max(np.abs(seq.coeffs - mono.coeffs)) / np.max(np.abs(mono.coeffs))
    ok = err < 1e-9 and diff <= 1e-10
    record_criterion("11 exactness and slab decoupling", ok,
                     f"DG error {err:.2e}; sequential vs monolithic {diff:.2e}")
    assert ok
