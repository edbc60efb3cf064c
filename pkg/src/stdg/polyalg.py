"""Multi-indices, truncated multivariate Taylor arithmetic and Gauss quadrature.

Multi-indices over ``nvars`` variables are tuples whose last entry is the time
exponent.  They are enumerated in graded lexicographic order: by total degree,
then lexicographically descending in the leading variable, e.g. for two
variables ``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...``.

A :class:`TaylorJet` holds the coefficients ``D^j f(c) / j!`` for all
``|j| <= order``.  Coefficient arrays may carry trailing batch dimensions so
that many jets (one per element centre, say) are processed at once.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np
from numpy.polynomial import polynomial as P

__all__ = [
    "MultiIndex",
    "multi_indices",
    "index_map",
    "num_multi_indices",
    "TaylorJet",
    "jet_arithmetic",
    "elementary_jet",
    "QuadratureRule",
    "gauss_rule",
    "gauss_legendre_01",
    "SingularityError",
]


class SingularityError(ArithmeticError):
    """Raised when a function is evaluated where it is not defined."""


@dataclass(frozen=True)
class MultiIndex:
    space_part: tuple[int, ...]
    time_part: int

    @property
    def order(self) -> int:
        return sum(self.space_part) + self.time_part

    def as_tuple(self) -> tuple[int, ...]:
        return (*self.space_part, self.time_part)

    @classmethod
    def from_tuple(cls, j) -> MultiIndex:
        j = tuple(int(v) for v in j)
        return cls(j[:-1], j[-1])

    @property
    def factorial(self) -> int:
        out = 1
        for v in self.as_tuple():
            out *= factorial(v)
        return out


def num_multi_indices(nvars: int, order: int) -> int:
    """Number of multi-indices in ``nvars`` variables with ``|j| <= order``."""
    if order < 0:
        return 0
    return comb(nvars + order, nvars)


def _compositions(total: int, nvars: int):
    # lexicographically descending in the leading entry
    if nvars == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, nvars - 1):
            yield (first, *rest)


@lru_cache(maxsize=None)
def multi_indices(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices with ``|j| <= order`` in graded lexicographic order."""
    out = []
    for deg in range(order + 1):
        out.extend(_compositions(deg, nvars))
    return tuple(out)


@lru_cache(maxsize=None)
def index_map(nvars: int, order: int) -> dict[tuple[int, ...], int]:
    return {j: k for k, j in enumerate(multi_indices(nvars, order))}


@lru_cache(maxsize=None)
def _product_table(nvars: int, order: int):
    mis = multi_indices(nvars, order)
    lookup = index_map(nvars, order)
    ia, ib, ic = [], [], []
    for a, ja in enumerate(mis):
        for b, jb in enumerate(mis):
            jc = tuple(x + y for x, y in zip(ja, jb))
            c = lookup.get(jc)
            if c is not None:
                ia.append(a)
                ib.append(b)
                ic.append(c)
    return np.array(ia), np.array(ib), np.array(ic)


class TaylorJet:
    """Truncated Taylor expansion ``sum_j coeffs[j] (z - center)^j``.

    ``coeffs`` has shape ``(num_multi_indices(nvars, order), *batch)`` and
    ``center`` has shape ``(nvars, *batch)`` (or broadcastable to it).
    """

    __slots__ = ("center", "order", "nvars", "coeffs")

    def __init__(self, center, order: int, coeffs):
        center = np.asarray(center, dtype=float)
        coeffs = np.asarray(coeffs, dtype=complex)
        nvars = center.shape[0]
        if coeffs.shape[0] != num_multi_indices(nvars, order):
            raise ValueError(
                f"expected {num_multi_indices(nvars, order)} coefficients for "
                f"nvars={nvars}, order={order}, got {coeffs.shape[0]}"
            )
        self.center = center
        self.order = int(order)
        self.nvars = nvars
        self.coeffs = coeffs

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, center, order: int) -> TaylorJet:
        center = np.asarray(center, dtype=float)
        value = np.asarray(value, dtype=complex)
        n = num_multi_indices(center.shape[0], order)
        batch = np.broadcast_shapes(value.shape, center.shape[1:])
        coeffs = np.zeros((n, *batch), dtype=complex)
        coeffs[0] = value
        return cls(center, order, coeffs)

    @classmethod
    def variable(cls, k: int, center, order: int) -> TaylorJet:
        """Jet of the coordinate function ``z_k``."""
        center = np.asarray(center, dtype=float)
        nvars = center.shape[0]
        jet = cls.constant(center[k], center, order)
        if order >= 1:
            unit = tuple(1 if i == k else 0 for i in range(nvars))
            jet.coeffs[index_map(nvars, order)[unit]] = 1.0
        return jet

    @classmethod
    def variables(cls, center, order: int) -> list[TaylorJet]:
        return [cls.variable(k, center, order) for k in range(len(center))]

    # access -----------------------------------------------------------
    def __getitem__(self, j) -> np.ndarray:
        return self.coeffs[index_map(self.nvars, self.order)[tuple(j)]]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def derivative(self, j) -> np.ndarray:
        """``D^j f(center)``, i.e. ``j!`` times the stored coefficient."""
        return MultiIndex.from_tuple(j).factorial * self[j]

    def differentiate(self, j) -> TaylorJet:
        """Jet of ``D^j f`` of order ``order - |j|``; exact coefficient shift."""
        j = tuple(j)
        new_order = self.order - sum(j)
        if new_order < 0:
            raise ValueError("derivative order exceeds jet order")
        src = index_map(self.nvars, self.order)
        out = np.empty(
            (num_multi_indices(self.nvars, new_order), *self.coeffs.shape[1:]),
            dtype=complex,
        )
        for k, z in enumerate(multi_indices(self.nvars, new_order)):
            zj = tuple(a + b for a, b in zip(z, j))
            scale = 1
            for a, b in zip(z, zj):
                scale *= factorial(b) // factorial(a)
            out[k] = scale * self.coeffs[src[zj]]
        return TaylorJet(self.center, new_order, out)

    def truncate(self, order: int) -> TaylorJet:
        n = num_multi_indices(self.nvars, order)
        return TaylorJet(self.center, order, self.coeffs[:n].copy())

    def __call__(self, point) -> np.ndarray:
        """Evaluate the Taylor polynomial at ``point``."""
        point = np.asarray(point, dtype=float)
        shift = point - self.center
        total = np.zeros(self.coeffs.shape[1:], dtype=complex)
        for k, j in enumerate(multi_indices(self.nvars, self.order)):
            mono = 1.0
            for s, e in zip(shift, j):
                mono = mono * s**e
            total = total + self.coeffs[k] * mono
        return total

    # arithmetic -------------------------------------------------------
    def _check(self, other: TaylorJet):
        if self.order != other.order or self.nvars != other.nvars:
            raise ValueError("jets have mismatched orders or dimensions")
        if not np.allclose(self.center, other.center, rtol=0, atol=1e-14):
            raise ValueError("jets have mismatched centers")

    def _lift(self, other) -> TaylorJet:
        if isinstance(other, TaylorJet):
            self._check(other)
            return other
        return TaylorJet.constant(other, self.center, self.order)

    def __add__(self, other):
        other = self._lift(other)
        return TaylorJet(self.center, self.order, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return TaylorJet(self.center, self.order, -self.coeffs)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, TaylorJet):
            return TaylorJet(self.center, self.order, self.coeffs * np.asarray(other))
        self._check(other)
        ia, ib, ic = _product_table(self.nvars, self.order)
        batch = np.broadcast_shapes(self.coeffs.shape[1:], other.coeffs.shape[1:])
        out = np.zeros((self.coeffs.shape[0], *batch), dtype=complex)
        np.add.at(out, ic, self.coeffs[ia] * other.coeffs[ib])
        return TaylorJet(self.center, self.order, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TaylorJet):
            return self * elementary_jet("reciprocal", other)
        return self * (1.0 / np.asarray(other))

    def __rtruediv__(self, other):
        return elementary_jet("reciprocal", self) * other

    def __pow__(self, exponent):
        return elementary_jet("power", self, exponent=exponent)

    def __repr__(self):
        return f"TaylorJet(order={self.order}, nvars={self.nvars}, batch={self.coeffs.shape[1:]})"


def jet_arithmetic(a: TaylorJet, b, op: str) -> TaylorJet:
    """Truncated-series arithmetic: ``op`` in {add, mul, neg, scale}.

    For ``scale`` the second argument is a scalar; for ``neg`` it is ignored.
    """
    if op == "add":
        if not isinstance(b, TaylorJet):
            raise ValueError("add requires two jets")
        return a + b
    if op == "mul":
        if not isinstance(b, TaylorJet):
            raise ValueError("mul requires two jets")
        return a * b
    if op == "neg":
        return -a
    if op == "scale":
        return a * b
    raise ValueError(f"unknown jet operation {op!r}")


def _series_coefficients(func: str, a0: np.ndarray, order: int, exponent=None):
    """``f^(k)(a0) / k!`` for k = 0..order."""
    a0 = np.asarray(a0, dtype=complex)
    if func == "exp":
        e = np.exp(a0)
        return [e / factorial(k) for k in range(order + 1)]
    if func == "reciprocal":
        if np.any(a0 == 0):
            raise SingularityError("reciprocal of a jet with zero constant term")
        return [(-1) ** k / a0 ** (k + 1) for k in range(order + 1)]
    if func == "power":
        if exponent is None:
            raise ValueError("power requires an exponent")
        alpha = exponent
        integral = float(alpha).is_integer() and alpha >= 0
        if not integral and np.any(a0 == 0):
            raise SingularityError("non-integer power of a jet with zero constant term")
        out = []
        binom = 1.0
        for k in range(order + 1):
            if integral and k > alpha:
                out.append(np.zeros_like(a0))
            else:
                out.append(binom * a0 ** (alpha - k))
            binom = binom * (alpha - k) / (k + 1)
        return out
    if func in ("tanh", "sech"):
        T = np.tanh(a0)
        one_minus_sq = np.array([1.0, 0.0, -1.0])
        if func == "tanh":
            poly = np.array([0.0, 1.0])
            prefactor = 1.0
        else:
            poly = np.array([1.0])
            prefactor = 1.0 / np.cosh(a0)
        out = []
        for k in range(order + 1):
            out.append(prefactor * P.polyval(T, poly) / factorial(k))
            nxt = P.polymul(P.polyder(poly), one_minus_sq) if len(poly) > 1 else np.zeros(1)
            if func == "sech":
                nxt = P.polysub(nxt, P.polymul(poly, [0.0, 1.0]))
            poly = np.atleast_1d(nxt)
        return out
    raise ValueError(f"unknown elementary function {func!r}")


def elementary_jet(func: str, inner: TaylorJet, exponent=None) -> TaylorJet:
    """Compose an elementary function with a jet.

    ``func`` is one of ``exp``, ``tanh``, ``sech``, ``reciprocal`` or
    ``power`` (with ``exponent``).  Writes ``inner = a0 + r`` with ``r``
    nilpotent and sums ``f^(k)(a0) r^k / k!`` by Horner's rule.
    """
    a0 = inner.coeffs[0]
    cs = _series_coefficients(func, a0, inner.order, exponent)
    rest = TaylorJet(inner.center, inner.order, inner.coeffs.copy())
    rest.coeffs[0] = 0.0
    out = TaylorJet.constant(cs[-1], inner.center, inner.order)
    for c in reversed(cs[:-1]):
        out = out * rest
        out.coeffs[0] = out.coeffs[0] + c
    return out


# quadrature -----------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, dim)
    weights: np.ndarray  # (nq,)
    exactness_degree: int

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate samples whose leading axis runs over the points."""
        return np.tensordot(self.weights, values, axes=(0, 0))


@lru_cache(maxsize=None)
def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes and weights on [0, 1]."""
    if n < 1:
        raise ValueError("need at least one quadrature point")
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_rule(box, points_per_axis: int) -> QuadratureRule:
    """Tensor Gauss-Legendre rule on an axis-aligned box ``[(a0, b0), ...]``."""
    if points_per_axis < 1:
        raise ValueError("points_per_axis must be >= 1")
    x01, w01 = gauss_legendre_01(points_per_axis)
    nodes, weights = [], []
    for a, b in box:
        nodes.append(a + (b - a) * x01)
        weights.append((b - a) * w01)
    pts = np.array(list(itertools.product(*nodes)), dtype=float).reshape(-1, len(box))
    wts = np.array([np.prod(w) for w in itertools.product(*weights)], dtype=float)
    return QuadratureRule(pts, wts, 2 * points_per_axis - 1)
