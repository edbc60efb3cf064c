"""Local discrete spaces: full polynomials, quasi-Trefftz polynomials and
complex-exponential Trefftz functions.

Polynomial members are stored as coefficients over the scaled monomials
``((x - x_K)/h_K)^{j_x} ((t - t_K)/h_K)^{j_t}``.  Bases for many elements are
built and evaluated together as a :class:`BasisSet`; :class:`LocalBasis` is the
single-element view.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, pi

import numpy as np

from .mesh import Element
from .polyalg import TaylorJet, index_map, multi_indices, num_multi_indices
from .potential import CapabilityError, PotentialModel

__all__ = [
    "SpaceKind",
    "full_dim",
    "quasi_trefftz_dim",
    "ScaledMonomialExpansion",
    "BasisEval",
    "BasisValues",
    "BasisSet",
    "LocalBasis",
    "build_basis_set",
    "build_full_poly_basis",
    "build_quasi_trefftz_basis",
    "build_exponential_trefftz_basis",
    "trefftz_wavenumbers",
    "evaluate",
    "taylor_of_exact_solution",
    "schrodinger_jet",
    "quasi_trefftz_constraint_matrix",
]


class SpaceKind(str, enum.Enum):
    FULL_POLY = "full_poly"
    QUASI_TREFFTZ = "quasi_trefftz"
    TREFFTZ_EXP = "trefftz_exp"


def full_dim(d: int, p: int) -> int:
    """``r_{d+1,p}``, the dimension of P^p in d+1 variables."""
    return comb(d + 1 + p, d + 1)


def quasi_trefftz_dim(d: int, p: int) -> int:
    """``n_{d+1,p} = (p+d-1)! (2p+d) / (d! p!)``."""
    return factorial(p + d - 1) * (2 * p + d) // (factorial(d) * factorial(p))


# -- single-member representations -------------------------------------------


@dataclass(frozen=True)
class BasisEval:
    value: complex
    space_gradient: np.ndarray
    space_hessian: np.ndarray
    time_derivative: complex
    schrodinger_residual: complex


@dataclass(frozen=True)
class ScaledMonomialExpansion:
    center: tuple[float, ...]
    h_K: float
    degree: int
    coeffs: np.ndarray  # over multi_indices(d+1, degree)

    @property
    def nvars(self) -> int:
        return len(self.center)

    def unscaled_jet(self) -> TaylorJet:
        """Taylor jet at the centre: coefficient ``C_j / h_K^|j|``."""
        mis = multi_indices(self.nvars, self.degree)
        scale = np.array([self.h_K ** -sum(j) for j in mis])
        return TaylorJet(np.array(self.center), self.degree, self.coeffs * scale)

    def _deriv_value(self, point, deriv):
        z = (np.asarray(point, dtype=float) - np.array(self.center)) / self.h_K
        total = 0j
        for c, j in zip(self.coeffs, multi_indices(self.nvars, self.degree)):
            if c == 0:
                continue
            term = c
            for k, (e, dk) in enumerate(zip(j, deriv)):
                if dk > e:
                    term = 0
                    break
                term = term * (factorial(e) // factorial(e - dk)) * z[k] ** (e - dk)
            total += term
        return total / self.h_K ** sum(deriv)

    def evaluate(self, point, potential: PotentialModel | None = None) -> BasisEval:
        d = self.nvars - 1
        unit = np.eye(self.nvars, dtype=int)
        val = self._deriv_value(point, (0,) * self.nvars)
        grad = np.array([self._deriv_value(point, unit[k]) for k in range(d)])
        hess = np.array([[self._deriv_value(point, unit[k] + unit[l]) for l in range(d)]
                         for k in range(d)])
        dt = self._deriv_value(point, unit[d])
        v = 0.0 if potential is None else float(potential.eval(np.asarray(point, dtype=float)))
        res = 1j * dt + 0.5 * np.trace(hess) - v * val
        return BasisEval(val, grad, hess, dt, res)


@dataclass(frozen=True)
class ExponentialMember:
    """``exp(i (kappa (x - x_K) - kappa^2 (t - t_K) / 2))``."""

    center: tuple[float, float]
    kappa: float

    def evaluate(self, point, potential: PotentialModel | None = None) -> BasisEval:
        x, t = np.asarray(point, dtype=float) - np.array(self.center)
        k = self.kappa
        val = np.exp(1j * (k * x - 0.5 * k * k * t))
        hess = np.array([[-(k * k) * val]])
        dt = -0.5j * k * k * val
        v = 0.0 if potential is None else float(potential.eval(np.asarray(point, dtype=float)))
        res = 1j * dt + 0.5 * hess[0, 0] - v * val
        return BasisEval(val, np.array([1j * k * val]), hess, dt, res)


def evaluate(member, point, potential: PotentialModel | None = None) -> BasisEval:
    """Value, derivatives and Schrodinger residual of one basis member."""
    return member.evaluate(point, potential)


# -- batched evaluation --------------------------------------------------------


@dataclass
class BasisValues:
    """Arrays of shape ``(ne, nq, nb)`` (``grad`` has a trailing ``d`` axis)."""

    value: np.ndarray
    grad: np.ndarray
    lap: np.ndarray
    dt: np.ndarray

    def residual(self, V: np.ndarray) -> np.ndarray:
        """``S b = i b_t + lap(b)/2 - V b`` with ``V`` of shape ``(ne, nq)``."""
        return 1j * self.dt + 0.5 * self.lap - V[..., None] * self.value


@lru_cache(maxsize=None)
def _exponents(nvars: int, p: int) -> np.ndarray:
    return np.array(multi_indices(nvars, p), dtype=int)


def _monomial_values(z: np.ndarray, p: int, h: np.ndarray, d: int):
    """Scaled monomials and their derivatives.

    ``z``: scaled coordinates ``(ne, nq, d+1)``; returns value, grad (..., d),
    laplacian, time derivative, each ``(ne, nq, r)``.
    """
    nv = d + 1
    E = _exponents(nv, p)  # (r, nv)
    powers = np.ones((*z.shape[:2], nv, p + 1))
    for k in range(1, p + 1):
        powers[..., k] = powers[..., k - 1] * z
    # factor[k][a] = z_k^{E[a,k]}
    fac = np.stack([powers[:, :, k, E[:, k]] for k in range(nv)], axis=-1)  # (ne,nq,r,nv)

    def deriv_factor(k, order):
        e = E[:, k]
        coef = np.ones(len(e))
        for s in range(order):
            coef = coef * np.maximum(e - s, 0)
        lower = np.maximum(e - order, 0)
        return coef * powers[:, :, k, lower]

    def product_except(skip):
        out = np.ones(fac.shape[:3])
        for k in range(nv):
            if k not in skip:
                out = out * fac[..., k]
        return out

    inv_h = (1.0 / h)[:, None, None]
    value = product_except(())
    grad = np.stack([deriv_factor(k, 1) * product_except((k,)) * inv_h for k in range(d)], axis=-1)
    lap = sum(deriv_factor(k, 2) * product_except((k,)) for k in range(d)) * inv_h**2
    dt = deriv_factor(d, 1) * product_except((d,)) * inv_h
    return value, grad, lap, dt


class BasisSet:
    """Bases of one kind on a group of elements (normally one time slab)."""

    def __init__(self, kind: SpaceKind, p: int, d: int, centers, h_K, coeffs=None, kappas=None):
        self.kind = SpaceKind(kind)
        self.p = int(p)
        self.d = int(d)
        self.centers = np.asarray(centers, dtype=float)
        self.h_K = np.asarray(h_K, dtype=float)
        self.coeffs = coeffs  # (ne, r, nb) for polynomial kinds
        self.kappas = kappas  # (ne, nb) for exponentials
        if self.kind is SpaceKind.TREFFTZ_EXP:
            self.dim = self.kappas.shape[1]
        else:
            self.dim = self.coeffs.shape[2]

    @property
    def num_elements(self) -> int:
        return len(self.centers)

    def take(self, ids) -> BasisSet:
        """Bases of the elements ``ids`` (indices into this set)."""
        ids = np.asarray(ids, dtype=int)
        return BasisSet(
            self.kind, self.p, self.d, self.centers[ids], self.h_K[ids],
            coeffs=None if self.coeffs is None else self.coeffs[ids],
            kappas=None if self.kappas is None else self.kappas[ids],
        )

    def moved(self, centers) -> BasisSet:
        """Same local functions translated to new element centres."""
        return BasisSet(self.kind, self.p, self.d, centers, self.h_K,
                        coeffs=self.coeffs, kappas=self.kappas)

    def evaluate(self, points: np.ndarray) -> BasisValues:
        """Evaluate all members at ``points`` of shape ``(ne, nq, d+1)``."""
        points = np.asarray(points, dtype=float)
        if self.kind is SpaceKind.TREFFTZ_EXP:
            return self._evaluate_exp(points)
        z = (points - self.centers[:, None, :]) / self.h_K[:, None, None]
        mv, mg, ml, mt = _monomial_values(z, self.p, self.h_K, self.d)
        C = self.coeffs
        grad = np.matmul(np.moveaxis(mg, -1, 1), C[:, None])  # (ne, d, nq, nb)
        return BasisValues(
            value=np.matmul(mv, C),
            grad=np.moveaxis(grad, 1, -1),
            lap=np.matmul(ml, C),
            dt=np.matmul(mt, C),
        )

    def _evaluate_exp(self, points):
        shift = points - self.centers[:, None, :]
        x = shift[..., 0][..., None]
        t = shift[..., 1][..., None]
        k = self.kappas[:, None, :]
        val = np.exp(1j * (k * x - 0.5 * k * k * t))
        return BasisValues(
            value=val,
            grad=(1j * k * val)[..., None],
            lap=-(k * k) * val,
            dt=-0.5j * k * k * val,
        )

    def member(self, e: int, b: int):
        center = tuple(self.centers[e])
        if self.kind is SpaceKind.TREFFTZ_EXP:
            return ExponentialMember(center, float(self.kappas[e, b]))
        return ScaledMonomialExpansion(center, float(self.h_K[e]), self.p, self.coeffs[e, :, b].copy())


@dataclass(frozen=True)
class LocalBasis:
    kind: SpaceKind
    element: Element
    degree: int
    functions: tuple
    dim: int
    basis_set: BasisSet


def _local(bset: BasisSet, element: Element) -> LocalBasis:
    funcs = tuple(bset.member(0, b) for b in range(bset.dim))
    return LocalBasis(bset.kind, element, bset.p, funcs, bset.dim, bset)


# -- construction ---------------------------------------------------------------


def _full_coeffs(ne, d, p):
    r = full_dim(d, p)
    return np.broadcast_to(np.eye(r, dtype=complex), (ne, r, r)).copy()


@lru_cache(maxsize=None)
def _qt_plan(d: int, p: int):
    """Seed positions and recurrence stencils for the quasi-Trefftz build."""
    nv = d + 1
    lookup = index_map(nv, p)
    seeds = []
    for rest in multi_indices(d, p):  # variables (x_2..x_d, t)
        seeds.append(lookup[(0, *rest)])
    for rest in multi_indices(d, p - 1):
        seeds.append(lookup[(1, *rest)])
    steps = []
    if p >= 2:
        vlookup = index_map(nv, p - 2)
        for k1 in range(2, p + 1):
            for j in multi_indices(nv, p - 2):
                if j[0] != k1 - 2:
                    continue
                target = lookup[(j[0] + 2, *j[1:])]
                jt = j[-1]
                time_term = lookup[(*j[:-1], jt + 1)]
                lateral = []
                for l in range(1, d):
                    jl = list(j)
                    jl[l] += 2
                    lateral.append(((j[l] + 1) * (j[l] + 2), lookup[tuple(jl)]))
                conv = []
                for z in multi_indices(nv, sum(j)):
                    if all(a <= b for a, b in zip(z, j)):
                        diff = tuple(b - a for a, b in zip(z, j))
                        conv.append((vlookup[diff], lookup[z]))
                steps.append((target, (j[0] + 1) * (j[0] + 2), jt + 1, time_term, lateral, conv))
    return np.array(seeds), steps


def quasi_trefftz_coeffs(d: int, p: int, h_K, V_scaled) -> np.ndarray:
    """Coefficients ``(ne, r, n)`` of the quasi-Trefftz basis.

    ``V_scaled[k, e]`` is the Taylor coefficient ``D^k V / k!`` of element
    ``e`` multiplied by ``h_K^|k|`` (jet order ``p - 2``).
    """
    h = np.asarray(h_K, dtype=float)
    ne = len(h)
    seeds, steps = _qt_plan(d, p)
    n = len(seeds)
    r = full_dim(d, p)
    C = np.zeros((r, ne, n), dtype=complex)
    C[seeds, :, np.arange(n)] = 1.0
    hh = h[:, None]
    for target, denom, jt1, time_term, lateral, conv in steps:
        acc = -2j * hh * jt1 * C[time_term]
        for w, idx in lateral:
            acc -= w * C[idx]
        pot = 0
        for vk, cz in conv:
            pot = pot + V_scaled[vk][:, None] * C[cz]
        acc += 2.0 * hh**2 * pot
        C[target] = acc / denom
    return np.ascontiguousarray(np.moveaxis(C, 0, 1))


def _scaled_potential_jets(potential, centers, lower, upper, h_K, order):
    nv = centers.shape[1]
    jet = potential.element_jets(centers, lower, upper, order)
    scale = np.array([[hk ** sum(j) for hk in h_K] for j in multi_indices(nv, order)])
    return (jet.coeffs.real * scale).astype(complex)


def trefftz_wavenumbers(p: int, mode: str, h_x: float) -> np.ndarray:
    if mode == "orthogonal":
        return 2.0 * pi * np.arange(1, 2 * p + 2) / h_x
    if mode == "nonorthogonal":
        return np.arange(-p, p + 1, dtype=float)
    raise ValueError(f"unknown exponential basis mode {mode!r}")


def build_basis_set(mesh, element_ids, kind, p: int, potential: PotentialModel | None = None,
                    mode: str = "nonorthogonal") -> BasisSet:
    """Build the local bases on ``element_ids`` of ``mesh``."""
    kind = SpaceKind(kind)
    if p < 1:
        raise ValueError("polynomial degree must be >= 1")
    ids = np.asarray(element_ids, dtype=int)
    d = mesh.dim
    centers = mesh.centers[ids]
    h = mesh.h_K[ids]
    if kind is SpaceKind.FULL_POLY:
        return BasisSet(kind, p, d, centers, h, coeffs=_full_coeffs(len(ids), d, p))
    if kind is SpaceKind.QUASI_TREFFTZ:
        if potential is None:
            raise ValueError("the quasi-Trefftz space needs a potential")
        order = max(p - 2, 0)
        if order > potential.capability:
            raise CapabilityError(f"potential supplies jets only up to order {potential.capability}")
        Vs = _scaled_potential_jets(potential, centers, mesh.lower[ids], mesh.upper[ids], h, order)
        return BasisSet(kind, p, d, centers, h, coeffs=quasi_trefftz_coeffs(d, p, h, Vs))
    if d != 1:
        raise ValueError("exponential Trefftz bases are only available for d = 1")
    kap = np.stack([trefftz_wavenumbers(p, mode, hx) for hx in mesh.h_x[ids]])
    return BasisSet(kind, p, d, centers, h, kappas=kap)


class _SingleElementMesh:
    def __init__(self, element: Element):
        d = len(element.space_cell)
        self.dim = d
        self.centers = np.array([element.center])
        self.h_K = np.array([element.h_K])
        self.h_x = np.array([element.h_x])
        self.lower = np.array([[*(a for a, _ in element.space_cell), element.time_cell[0]]])
        self.upper = np.array([[*(b for _, b in element.space_cell), element.time_cell[1]]])


def build_full_poly_basis(element: Element, p: int) -> LocalBasis:
    return _local(build_basis_set(_SingleElementMesh(element), [0], SpaceKind.FULL_POLY, p), element)


def build_quasi_trefftz_basis(element: Element, p: int, potential: PotentialModel) -> LocalBasis:
    bset = build_basis_set(_SingleElementMesh(element), [0], SpaceKind.QUASI_TREFFTZ, p, potential)
    return _local(bset, element)


def build_exponential_trefftz_basis(element: Element, p: int, mode: str = "nonorthogonal") -> LocalBasis:
    if len(element.space_cell) != 1:
        raise ValueError("exponential Trefftz bases are only available for d = 1")
    bset = build_basis_set(_SingleElementMesh(element), [0], SpaceKind.TREFFTZ_EXP, p, mode=mode)
    return _local(bset, element)


# -- Taylor/residual utilities ------------------------------------------------------


def schrodinger_jet(q: TaylorJet, V: TaylorJet) -> TaylorJet:
    """Jet of ``S q`` of order ``q.order - 2`` from the jets of ``q`` and ``V``."""
    nv = q.nvars
    m = q.order - 2
    if m < 0:
        raise ValueError("need a jet of order >= 2")
    unit = np.eye(nv, dtype=int)
    out = 1j * q.differentiate(unit[-1]).truncate(m)
    for k in range(nv - 1):
        out = out + 0.5 * q.differentiate(2 * unit[k])
    out = out - V.truncate(m) * q.truncate(m)
    return out


def quasi_trefftz_constraint_matrix(d: int, p: int, h_K: float, V_jet: TaylorJet) -> np.ndarray:
    """Matrix mapping scaled coefficients to ``D^j S q(center) / j!`` for
    ``|j| <= p - 2``; its kernel is the quasi-Trefftz space."""
    nv = d + 1
    mis = multi_indices(nv, p)
    rows = num_multi_indices(nv, p - 2)
    M = np.zeros((rows, len(mis)), dtype=complex)
    center = V_jet.center
    for a, j in enumerate(mis):
        coeffs = np.zeros(len(mis), dtype=complex)
        coeffs[a] = h_K ** -sum(j)
        M[:, a] = schrodinger_jet(TaylorJet(center, p, coeffs), V_jet.truncate(p - 2)
                                  if V_jet.order >= p - 2 else V_jet).coeffs
    return M


def taylor_of_exact_solution(solution, element: Element, m: int) -> ScaledMonomialExpansion:
    """Taylor polynomial of order ``m`` (degree ``m - 1``) at the element
    centre, written in the element's scaled monomials."""
    if not hasattr(solution, "jet_at"):
        raise CapabilityError("solution provides no Taylor jets")
    center = np.array(element.center)
    jet = solution.jet_at(center, m - 1)
    scale = np.array([element.h_K ** sum(j) for j in multi_indices(len(center), m - 1)])
    return ScaledMonomialExpansion(tuple(center), element.h_K, m - 1, jet.coeffs * scale)
