import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stdg.polyalg import SingularityError
from stdg.potential import (
    CapabilityError,
    HarmonicOscillator,
    Morse,
    RationalSingular,
    Reflectionless,
    SquareWell,
    TanhTimeDependent,
    Zero,
    make_potential,
)


def fd_derivatives(f, x, order, h=1e-2):
    k = np.arange(-6, 7)
    V = np.vander(k * h, order + 7, increasing=True)
    c = np.linalg.lstsq(V, f(x + k * h), rcond=None)[0]
    return np.array([c[m] * math.factorial(m) for m in range(order + 1)])


def test_point_values():
    assert HarmonicOscillator(10).eval([1.0, 0.3]) == 50.0
    assert Zero().eval([[0.2, 0.1], [5.0, 0.9]]).tolist() == [0.0, 0.0]
    assert np.isclose(TanhTimeDependent().eval([0.0, 0.0, 0.5]), -2.0)
    assert np.isclose(RationalSingular().eval([0.5, 0.25, 0.0]), 4 + 16 - 1)
    assert np.isclose(Morse(8, 4).eval([0.0, 0.0]), 0.0)


def test_square_well_jet_is_constant_zero_inside():
    jet = SquareWell(20).jet_at([0.1, 0.5], 4)
    assert np.all(jet.coeffs == 0)
    outside = SquareWell(20).jet_at([1.0, 0.5], 3)
    assert outside.coeffs[0] == 20 and np.all(outside.coeffs[1:] == 0)


def test_harmonic_jet_is_exact_quadratic():
    jet = HarmonicOscillator(10).jet_at([0.0, 0.0], 2)
    assert jet[(0, 0)] == 0 and jet[(1, 0)] == 0 and jet[(2, 0)] == 50


def test_reflectionless_jet_matches_finite_differences():
    jet = Reflectionless(1.0).jet_at([0.2, 0.0], 3)
    derivs = [jet.derivative((m, 0)).real for m in range(4)]
    fd = fd_derivatives(lambda x: -1 / np.cosh(x) ** 2, 0.2, 3)
    assert np.allclose(derivs, fd, atol=1e-6)


def test_sup_bounds():
    assert Zero().sup_bound([0, 0], [1, 1]) == 0
    assert HarmonicOscillator(10).sup_bound([2.95, 0.0], [3.0, 0.05]) == 450
    assert Reflectionless(1).sup_bound([-0.1, 0], [0.1, 1]) <= 1.05
    assert SquareWell(20).sup_bound([-0.5, 0], [0.5, 1]) == 0


def test_rational_singular_points_raise():
    with pytest.raises(SingularityError):
        RationalSingular().eval([0.0, 0.5, 0.1])


def test_square_well_needs_aligned_elements():
    sw = SquareWell(20)
    with pytest.raises(CapabilityError):
        sw.element_jets(np.array([[0.7, 0.5]]), np.array([[0.6, 0.0]]), np.array([[0.8, 1.0]]), 2)


def test_make_potential():
    assert isinstance(make_potential("morse", D=8, alpha=4), Morse)
    assert make_potential("harmonic", omega=2.0).params() == {"omega": 2.0}
    with pytest.raises(ValueError):
        make_potential("nope")


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(0.1, 0.9), st.floats(0.0, 1.0))
def test_jet_value_equals_eval(x, y, t):
    for V in (RationalSingular(), TanhTimeDependent()):
        assert np.isclose(V.jet_at([x, y, t], 3).value.real, V.eval([x, y, t]), rtol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.4, 1.4))
def test_morse_jet_matches_finite_differences(x):
    jet = Morse(8, 4).jet_at([x, 0.0], 3)
    derivs = [jet.derivative((m, 0)).real for m in range(4)]
    fd = fd_derivatives(lambda z: 8 * (1 - np.exp(-4 * z)) ** 2, x, 3, h=2e-3)
    assert np.allclose(derivs, fd, rtol=1e-5, atol=1e-4)
