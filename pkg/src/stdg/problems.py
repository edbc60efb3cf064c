"""Benchmark problems with exact solutions.

Each exact solution is a single expression evaluated either on numpy arrays
(values) or on Taylor jets (derivatives, Taylor oracles).  Spatial gradients
come from first-order jets, i.e. forward-mode differentiation of the formula.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, gamma, pi, sqrt
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .mesh import BoundaryCondition, SpaceTimeDomain, build_cartesian_mesh
from .polyalg import TaylorJet, elementary_jet
from .potential import (
    HarmonicOscillator,
    Morse,
    PotentialModel,
    RationalSingular,
    Reflectionless,
    SquareWell,
    TanhTimeDependent,
    Zero,
)

__all__ = [
    "hermite",
    "laguerre",
    "square_well_wavenumber",
    "ExactSolution",
    "BenchmarkProblem",
    "make_problem",
    "PROBLEMS",
]


def _exp(z):
    return elementary_jet("exp", z) if isinstance(z, TaylorJet) else np.exp(z)


def _tanh(z):
    return elementary_jet("tanh", z) if isinstance(z, TaylorJet) else np.tanh(z)


def _sech(z):
    return elementary_jet("sech", z) if isinstance(z, TaylorJet) else 1.0 / np.cosh(z)


def hermite(n: int, y):
    """Physicists' Hermite polynomial ``H_n(y)`` by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be >= 0")
    h_prev, h = 1.0 + 0.0 * y, 2.0 * y
    if n == 0:
        return h_prev
    for k in range(1, n):
        h_prev, h = h, 2.0 * y * h - 2.0 * k * h_prev
    return h


def laguerre(n: int, alpha: float, y):
    """Generalised Laguerre polynomial ``L_n^(alpha)(y)``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    l_prev, l = 1.0 + 0.0 * y, 1.0 + alpha - y
    if n == 0:
        return l_prev
    for k in range(1, n):
        l_prev, l = l, ((2 * k + 1 + alpha - y) * l - (k + alpha) * l_prev) / (k + 1)
    return l


def _square_well_f(k, V_star):
    q = np.sqrt(V_star - k * k)
    return q - k * np.tan(k) * np.tanh(q)


def square_well_wavenumber(V_star: float) -> float:
    """Largest real root of ``sqrt(V*-k^2) - k tan(k) tanh(sqrt(V*-k^2))``.

    Sign changes across the poles of ``tan`` are rejected.
    """
    if V_star <= 0:
        raise ValueError("V_star must be positive")
    top = sqrt(V_star)
    ks = np.linspace(0.0, top, 20001)[1:-1]
    with np.errstate(all="ignore"):
        fs = _square_well_f(ks, V_star)
    roots = []
    for i in np.flatnonzero(np.sign(fs[:-1]) * np.sign(fs[1:]) < 0):
        a, b = ks[i], ks[i + 1]
        if np.cos(a) * np.cos(b) <= 0:  # straddles a pole of tan
            continue
        root = brentq(_square_well_f, a, b, args=(V_star,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
        if abs(_square_well_f(root, V_star)) < 1e-10:
            roots.append(root)
    if not roots:
        raise ArithmeticError(f"no root of the square-well relation for V_star={V_star}")
    return float(max(roots))


class ExactSolution:
    """Exact solution ``psi(x, t)``; subclasses define ``_formula``."""

    name = "exact"

    def __init__(self, dim: int):
        self.dim = dim

    def _formula(self, *z):
        raise NotImplementedError

    def value(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        zs = [points[..., k] for k in range(points.shape[-1])]
        out = self._formula(*zs)
        return np.broadcast_to(np.asarray(out, dtype=complex), points.shape[:-1]).copy()

    __call__ = value

    def jet_at(self, center, order: int) -> TaylorJet:
        center = np.asarray(center, dtype=float)
        jet = self._formula(*TaylorJet.variables(center, order))
        if not isinstance(jet, TaylorJet):
            jet = TaylorJet.constant(jet, center, order)
        return jet

    def value_and_gradient(self, points):
        """Value ``(...,)`` and spatial gradient ``(..., d)`` at points."""
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, points.shape[-1])
        jet = self.jet_at(flat.T, 1)
        val = jet.coeffs[0].reshape(points.shape[:-1])
        grad = np.stack([jet.coeffs[1 + k] for k in range(self.dim)], axis=-1)
        return val, grad.reshape(*points.shape[:-1], self.dim)

    def gradient(self, points) -> np.ndarray:
        return self.value_and_gradient(points)[1]


class HarmonicSolution(ExactSolution):
    name = "harmonic"

    def __init__(self, omega=10.0, n=2):
        super().__init__(1)
        self.omega, self.n = float(omega), int(n)
        self.norm = (self.omega / pi) ** 0.25 / sqrt(2.0**self.n * factorial(self.n))

    def _formula(self, x, t):
        w = self.omega
        phase = -0.5 * (w * x * x + (2 * self.n + 1) * 1j * w * t)
        return self.norm * hermite(self.n, sqrt(w) * x) * _exp(phase)


class ReflectionlessSolution(ExactSolution):
    name = "reflectionless"

    def __init__(self, a=1.0):
        super().__init__(1)
        self.a = float(a)

    def _formula(self, x, t):
        a = self.a
        front = (sqrt(2.0) * 1j - a * _tanh(a * x)) * (1.0 / (sqrt(2.0) * 1j + a))
        return front * _exp(1j * (sqrt(2.0) * x - t))


class MorseSolution(ExactSolution):
    """Morse eigenfunction with a complex square root for the normalisation,
    so it stays defined when ``lambda < n + 1/2``."""

    name = "morse"

    def __init__(self, D=8.0, alpha=4.0, n=1):
        super().__init__(1)
        self.D, self.alpha, self.n = float(D), float(alpha), int(n)
        self.lam = sqrt(2.0 * self.D) / self.alpha
        self.omega0 = sqrt(2.0 * self.D) * self.alpha
        lam, n = self.lam, self.n
        self.energy = ((n + 0.5) - (n + 0.5) ** 2 / (2.0 * lam)) * self.omega0
        self.norm = np.sqrt(complex((2 * lam - 2 * n - 1) * gamma(n + 1) / gamma(2 * lam - n)))

    def _formula(self, x, t):
        lam, n, a = self.lam, self.n, self.alpha
        s = lam - n - 0.5
        xi = 2.0 * lam * _exp(-a * x)
        xi_pow = (2.0 * lam) ** s * _exp(-s * a * x)
        lag = laguerre(n, 2 * lam - 2 * n - 1, xi)
        return self.norm * xi_pow * lag * _exp(-0.5 * xi - 1j * self.energy * t)


class SquareWellSolution(ExactSolution):
    """Bound state ``psi_0(x) exp(-i k^2 t)`` for the well ``|x| < 1/sqrt2``."""

    name = "square_well"

    def __init__(self, V_star=20.0):
        super().__init__(1)
        self.V_star = float(V_star)
        self.k = square_well_wavenumber(self.V_star)
        self.q = sqrt(self.V_star - self.k**2)
        self.edge = 1.0 / sqrt(2.0)

    def _branches(self, x, t):
        k, q = self.k, self.q
        inner = 0.5 * (_exp(1j * k * sqrt(2.0) * x) + _exp(-1j * k * sqrt(2.0) * x))
        c = np.cos(k) / np.sinh(q)

        def outer(sign):
            arg = q * (2.0 - sqrt(2.0) * sign * x)
            return c * 0.5 * (_exp(arg) - _exp(-arg))

        time = _exp(-1j * k * k * t)
        return inner * time, outer(1.0) * time, outer(-1.0) * time

    def _formula(self, x, t):
        xv = x.value.real if isinstance(x, TaylorJet) else x
        inner, right, left = self._branches(x, t)
        inside = np.abs(xv) < self.edge
        if isinstance(x, TaylorJet):
            sel = np.where(inside, inner.coeffs, np.where(xv > 0, right.coeffs, left.coeffs))
            return TaylorJet(x.center, x.order, sel)
        return np.where(inside, inner, np.where(xv > 0, right, left))


class RationalSolution(ExactSolution):
    name = "rational"

    def __init__(self):
        super().__init__(2)

    def _formula(self, x, y, t):
        return x * x * y * y * _exp(1j * t)


class TanhTimeSolution(ExactSolution):
    name = "tanh_time"

    def __init__(self):
        super().__init__(2)

    def _formula(self, x, y, t):
        s = t - 0.5
        return 1j * _exp(1j * s * s * s * s) * _sech(sqrt(2.0) * x) * _sech(sqrt(2.0) * y)


class PlaneWaveSolution(ExactSolution):
    """``exp(i (kappa x - kappa^2 t / 2))``, a free-particle solution."""

    name = "plane_wave"

    def __init__(self, kappa=1.0):
        super().__init__(1)
        self.kappa = float(kappa)

    def _formula(self, x, t):
        k = self.kappa
        return _exp(1j * (k * x - 0.5 * k * k * t))


class ConstantSolution(ExactSolution):
    name = "constant"

    def __init__(self, dim=1, c=1.0):
        super().__init__(dim)
        self.c = complex(c)

    def _formula(self, *z):
        return self.c + 0.0 * z[0]


@dataclass
class BenchmarkProblem:
    """Domain, potential, exact solution and boundary/initial data.

    Data callables take points of shape ``(..., d + 1)``; the Neumann and
    Robin data also take the outward spatial normals ``(..., d)``.
    """

    name: str
    domain: SpaceTimeDomain
    potential: PotentialModel
    exact: ExactSolution | None = None
    theta: float = 1.0
    params: dict = field(default_factory=dict)
    breakpoints: list | None = None
    mesh_spacing: Callable[[int], tuple] | None = None
    psi0: Callable | None = None
    g_D: Callable | None = None
    g_N: Callable | None = None
    g_R: Callable | None = None

    def __post_init__(self):
        ex = self.exact
        if ex is None:
            return
        if self.psi0 is None:
            self.psi0 = ex.value
        if self.g_D is None:
            self.g_D = ex.value
        if self.g_N is None:
            self.g_N = lambda pts, n: np.sum(ex.gradient(pts) * n, axis=-1)
        if self.g_R is None:
            def g_R(pts, n):
                val, grad = ex.value_and_gradient(pts)
                return np.sum(grad * n, axis=-1) - 1j * self.theta * val
            self.g_R = g_R

    @property
    def dim(self) -> int:
        return self.domain.dim

    def mesh(self, cells, slabs):
        return build_cartesian_mesh(self.domain, cells, slabs, breakpoints=self.breakpoints)

    def reference_mesh(self, i: int):
        """Mesh ``i`` of the refinement sequence used for this problem."""
        if self.mesh_spacing is None:
            raise ValueError(f"problem {self.name!r} has no refinement sequence")
        cells, slabs = self.mesh_spacing(i)
        return self.mesh(cells, slabs)


def _harmonic(omega=10.0, n=2, boundary="dirichlet"):
    part = {(0, 0): boundary, (0, 1): boundary}
    return BenchmarkProblem(
        "harmonic", SpaceTimeDomain(((-3.0, 3.0),), 1.0, part), HarmonicOscillator(omega),
        HarmonicSolution(omega, n), params={"omega": omega, "n": n, "boundary": boundary},
        mesh_spacing=lambda i: (120 * 2**i, 20 * 2**i),
    )


def _reflectionless(a=1.0):
    return BenchmarkProblem(
        "reflectionless", SpaceTimeDomain(((-5.0, 5.0),), 1.0), Reflectionless(a),
        ReflectionlessSolution(a), params={"a": a},
        mesh_spacing=lambda i: (50 * 2**i, 10 * 2**i),
    )


def _morse(D=8.0, alpha=4.0, n=1):
    return BenchmarkProblem(
        "morse", SpaceTimeDomain(((-0.5, 1.5),), 1.0), Morse(D, alpha),
        MorseSolution(D, alpha, n), params={"D": D, "alpha": alpha, "n": n},
        mesh_spacing=lambda i: (20 * 2**i, 10 * 2**i),
    )


def _square_well(V_star=20.0):
    pot = SquareWell(V_star)
    return BenchmarkProblem(
        "square_well", SpaceTimeDomain(((-sqrt(2.0), sqrt(2.0)),), 1.0), pot,
        SquareWellSolution(V_star), params={"V_star": V_star},
        breakpoints=pot.breakpoints(), mesh_spacing=lambda i: (40 * 2**i, 10 * 2**i),
    )


_CUBE_CELLS = (10, 15, 20, 25)


def _rational():
    return BenchmarkProblem(
        "rational", SpaceTimeDomain(((0.0, 1.0), (0.0, 1.0)), 1.0), RationalSingular(),
        RationalSolution(), mesh_spacing=lambda i: ((_CUBE_CELLS[i],) * 2, _CUBE_CELLS[i]),
    )


def _tanh_time():
    return BenchmarkProblem(
        "tanh_time", SpaceTimeDomain(((0.0, 1.0), (0.0, 1.0)), 1.0), TanhTimeDependent(),
        TanhTimeSolution(), mesh_spacing=lambda i: ((_CUBE_CELLS[i],) * 2, _CUBE_CELLS[i]),
    )


def _free(kappa=1.0):
    return BenchmarkProblem(
        "free", SpaceTimeDomain(((0.0, 1.0),), 1.0), Zero(), PlaneWaveSolution(kappa),
        params={"kappa": kappa}, mesh_spacing=lambda i: (4 * 2**i, 4 * 2**i),
    )


def _constant(dim=1):
    box = ((0.0, 1.0),) * dim
    return BenchmarkProblem(
        "constant", SpaceTimeDomain(box, 1.0), Zero(dim), ConstantSolution(dim),
        params={"dim": dim},
    )


def _harmonic_robin(omega=10.0, n=2, theta=1.0):
    prob = _harmonic(omega, n, boundary=BoundaryCondition.ROBIN.value)
    prob.name = "harmonic_robin"
    prob.theta = float(theta)
    prob.params = {"omega": omega, "n": n, "theta": theta}
    return prob


PROBLEMS = {
    "harmonic": _harmonic,
    "reflectionless": _reflectionless,
    "morse": _morse,
    "square_well": _square_well,
    "rational": _rational,
    "tanh_time": _tanh_time,
    "free": _free,
    "constant": _constant,
    "harmonic_robin": _harmonic_robin,
}


def make_problem(name: str, params: dict | None = None) -> BenchmarkProblem:
    """Build a named benchmark problem with optional parameter overrides."""
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return factory(**(params or {}))
