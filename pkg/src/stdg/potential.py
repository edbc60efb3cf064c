"""Potentials ``V(x, t)``: point values, element sup bounds and Taylor jets.

Smooth built-ins are written once as expressions over "numbers" that may be
numpy arrays or :class:`~stdg.polyalg.TaylorJet` objects, so the point
evaluation and the jets come from the same formula.
"""
from __future__ import annotations

from math import sqrt

import numpy as np

from .polyalg import SingularityError, TaylorJet, elementary_jet

__all__ = [
    "PotentialModel",
    "Zero",
    "HarmonicOscillator",
    "Reflectionless",
    "Morse",
    "SquareWell",
    "RationalSingular",
    "TanhTimeDependent",
    "Custom",
    "CapabilityError",
    "make_potential",
]


class CapabilityError(RuntimeError):
    """The potential cannot supply the requested derivative information."""


def _exp(z):
    return elementary_jet("exp", z) if isinstance(z, TaylorJet) else np.exp(z)


def _tanh(z):
    return elementary_jet("tanh", z) if isinstance(z, TaylorJet) else np.tanh(z)


def _sech(z):
    return elementary_jet("sech", z) if isinstance(z, TaylorJet) else 1.0 / np.cosh(z)


def _recip(z):
    return elementary_jet("reciprocal", z) if isinstance(z, TaylorJet) else 1.0 / z


def _split(points):
    points = np.asarray(points, dtype=float)
    return [points[..., k] for k in range(points.shape[-1])]


class PotentialModel:
    """Base class.  ``dim`` is the number of spatial variables."""

    name = "custom"
    time_dependent = False
    polynomial_degree: int | None = None  # None if not a polynomial
    capability = 64
    # |V| on a box attains its max at a corner
    corner_bounded = False

    def __init__(self, dim: int = 1):
        self.dim = dim

    def params(self) -> dict:
        return {}

    # formula shared by eval and jet_at; args are x_1..x_d, t
    def _formula(self, *z):
        raise NotImplementedError

    def eval(self, points) -> np.ndarray:
        """``V`` at points of shape ``(..., d + 1)``; coordinates last."""
        points = np.asarray(points, dtype=float)
        self._check_regular(points)
        with np.errstate(all="ignore"):
            out = self._formula(*_split(points))
        return np.broadcast_to(np.real(out), points.shape[:-1]).astype(float)

    __call__ = eval

    def _check_regular(self, points):
        pass

    def jet_at(self, center, order: int) -> TaylorJet:
        """Taylor jet of ``V`` at ``center`` (shape ``(d + 1, *batch)``)."""
        if order > self.capability:
            raise CapabilityError(f"{self.name}: jets only up to order {self.capability}")
        center = np.asarray(center, dtype=float)
        self._check_regular(np.moveaxis(center, 0, -1))
        zs = TaylorJet.variables(center, order)
        jet = self._formula(*zs)
        if not isinstance(jet, TaylorJet):
            jet = TaylorJet.constant(jet, center, order)
        jet.coeffs = jet.coeffs.real.astype(complex)
        return jet

    def sup_bound(self, lower, upper) -> float:
        """Upper bound for ``max |V|`` on the box ``[lower, upper]``."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        npts = 2 if self.corner_bounded else 5
        axes = [np.linspace(a, b, npts) for a, b in zip(lower, upper)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lower))
        vmax = float(np.max(np.abs(self.eval(grid))))
        return vmax if self.corner_bounded else 1.05 * vmax

    def element_jets(self, centers, lower, upper, order: int) -> TaylorJet:
        """Jets at a batch of element centres ``(ne, d + 1)``."""
        return self.jet_at(np.asarray(centers, dtype=float).T, order)

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class Zero(PotentialModel):
    name = "zero"
    polynomial_degree = 0
    corner_bounded = True

    def _formula(self, *z):
        return 0.0 * z[0]


class HarmonicOscillator(PotentialModel):
    """``omega^2 |x|^2 / 2``."""

    name = "harmonic"
    polynomial_degree = 2
    corner_bounded = True

    def __init__(self, omega: float = 10.0, dim: int = 1):
        super().__init__(dim)
        self.omega = float(omega)

    def params(self):
        return {"omega": self.omega}

    def _formula(self, *z):
        xs = z[:-1]
        total = xs[0] * xs[0]
        for x in xs[1:]:
            total = total + x * x
        return 0.5 * self.omega**2 * total


class Reflectionless(PotentialModel):
    """``-a^2 sech^2(a x)``."""

    name = "reflectionless"

    def __init__(self, a: float = 1.0, dim: int = 1):
        super().__init__(dim)
        self.a = float(a)

    def params(self):
        return {"a": self.a}

    def _formula(self, *z):
        s = _sech(self.a * z[0])
        return -(self.a**2) * s * s


class Morse(PotentialModel):
    """``D (1 - exp(-alpha x))^2``."""

    name = "morse"
    corner_bounded = True

    def __init__(self, D: float = 8.0, alpha: float = 4.0, dim: int = 1):
        super().__init__(dim)
        self.D = float(D)
        self.alpha = float(alpha)

    def params(self):
        return {"D": self.D, "alpha": self.alpha}

    def _formula(self, *z):
        w = 1.0 - _exp(-self.alpha * z[0])
        return self.D * w * w


class SquareWell(PotentialModel):
    """0 inside ``well``, ``V_star`` elsewhere.

    Jets are per element: the value is taken from the element centre, so the
    mesh must be aligned with the well edges.
    """

    name = "square_well"
    polynomial_degree = 0
    corner_bounded = True

    def __init__(self, V_star: float = 20.0, well=(-1 / sqrt(2), 1 / sqrt(2)), dim: int = 1):
        super().__init__(dim)
        self.V_star = float(V_star)
        self.well = (float(well[0]), float(well[1]))

    def params(self):
        return {"V_star": self.V_star, "well": list(self.well)}

    def _formula(self, *z):
        x = z[0]
        if isinstance(x, TaylorJet):
            inside = (x.value.real > self.well[0]) & (x.value.real < self.well[1])
            return TaylorJet.constant(np.where(inside, 0.0, self.V_star), x.center, x.order)
        inside = (x > self.well[0]) & (x < self.well[1])
        return np.where(inside, 0.0, self.V_star)

    def breakpoints(self):
        return [list(self.well)]

    def element_jets(self, centers, lower, upper, order):
        lower = np.asarray(lower)
        upper = np.asarray(upper)
        for edge in self.well:
            if np.any((lower[:, 0] < edge - 1e-12) & (upper[:, 0] > edge + 1e-12)):
                raise CapabilityError("square-well jets need a mesh aligned with the well edges")
        return super().element_jets(centers, lower, upper, order)

    def sup_bound(self, lower, upper):
        inside = lower[0] >= self.well[0] and upper[0] <= self.well[1]
        return 0.0 if inside else self.V_star


class RationalSingular(PotentialModel):
    """``1/x^2 + 1/y^2 - 1``, singular on the axes."""

    name = "rational"

    def __init__(self, dim: int = 2):
        super().__init__(dim)

    def _check_regular(self, points):
        points = np.asarray(points)
        if np.any(points[..., : self.dim] == 0.0):
            raise SingularityError("rational potential is singular at x = 0 or y = 0")

    def _formula(self, *z):
        xs = z[:-1]
        total = -1.0 + 0.0 * xs[0]
        for x in xs:
            r = _recip(x)
            total = total + r * r
        return total


class TanhTimeDependent(PotentialModel):
    """``2 tanh^2(sqrt2 x) - 4 (t - 1/2)^3 + 2 tanh^2(sqrt2 y) - 2``."""

    name = "tanh_time"
    time_dependent = True

    def __init__(self, dim: int = 2):
        super().__init__(dim)

    def _formula(self, *z):
        xs, t = z[:-1], z[-1]
        s = t - 0.5
        total = -4.0 * s * s * s - 2.0
        for x in xs:
            th = _tanh(sqrt(2.0) * x)
            total = total + 2.0 * th * th
        return total


class Custom(PotentialModel):
    """User potential given by a point function and a jet function."""

    name = "custom"

    def __init__(self, eval_fn, jet_fn, dim: int = 1, time_dependent: bool = True,
                 capability: int = 64):
        super().__init__(dim)
        self._eval = eval_fn
        self._jet = jet_fn
        self.time_dependent = time_dependent
        self.capability = capability

    def eval(self, points):
        return np.asarray(self._eval(np.asarray(points, dtype=float)), dtype=float)

    def jet_at(self, center, order):
        if order > self.capability:
            raise CapabilityError(f"custom potential: jets only up to order {self.capability}")
        return self._jet(np.asarray(center, dtype=float), order)


_BUILTINS = {
    "zero": Zero,
    "harmonic": HarmonicOscillator,
    "reflectionless": Reflectionless,
    "morse": Morse,
    "square_well": SquareWell,
    "rational": RationalSingular,
    "tanh_time": TanhTimeDependent,
}


def make_potential(name: str, dim: int = 1, **params) -> PotentialModel:
    try:
        cls = _BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown potential {name!r}") from None
    return cls(dim=dim, **params)
