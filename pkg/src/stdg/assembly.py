"""Slab-wise assembly of the ultra-weak space-time DG system.

Matrix entries follow ``A[J, L] = A(b_L, b_J)``: rows are test functions,
columns trial functions, and the test slot is conjugated.  Within a slab the
degrees of freedom are ordered element by element (slab-local element index
times basis size plus basis index).

All local terms reduce to integrals of the form ``int X conj(Y)`` where ``X``
is a linear combination of trial traces and ``Y`` of test traces.  For
polynomial bases those integrals use tensor Gauss rules; for plane-wave bases
they are evaluated in closed form, since highly oscillatory members defeat any
fixed quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Real

import numpy as np
import scipy.sparse as sp

from .basis import BasisSet, SpaceKind, build_basis_set
from .mesh import FacetKind, SpaceTimeMesh
from .polyalg import gauss_rule
from .potential import PotentialModel

__all__ = [
    "StabilizationConfig",
    "SlabSystem",
    "SlabAssembler",
    "ConfigurationError",
    "FacetBatch",
    "volume_points",
    "assemble_volume",
    "assemble_spacelike",
    "assemble_timelike",
    "assemble_boundary",
    "default_quadrature_points",
    "write_matrix",
]


class ConfigurationError(ValueError):
    """Problem data or settings do not fit the mesh or the discrete space."""


def _rule_value(rule, base, name):
    if isinstance(rule, Real) and not isinstance(rule, bool):
        return np.full_like(base, float(rule))
    if rule == "zero":
        return np.zeros_like(base)
    raise ConfigurationError(f"unknown {name} rule {rule!r}")


@dataclass
class StabilizationConfig:
    """Stabilisation functions.

    ``alpha``: ``"reciprocal_hFx"``, ``"zero"`` or a constant.
    ``beta``: ``"hFx"``, ``"zero"`` or a constant.
    ``mu``: ``"squared_max"`` / ``"squared_min"`` (max / min of h_t^2, h_x^2),
    ``"max_h"`` (max of h_t, h_x), ``"zero"`` or a constant.
    ``theta`` is the Robin impedance; ``delta = min(theta h_Kx, 1/2)``.
    """

    alpha: str | float = "reciprocal_hFx"
    beta: str | float = "hFx"
    mu: str | float = "squared_max"
    theta: float = 1.0

    @classmethod
    def standard(cls, theta: float = 1.0) -> StabilizationConfig:
        return cls(theta=theta)

    @classmethod
    def zero(cls, theta: float = 1.0) -> StabilizationConfig:
        return cls("zero", "zero", "zero", theta)

    def alpha_values(self, h_fx) -> np.ndarray:
        h_fx = np.asarray(h_fx, dtype=float)
        if self.alpha == "reciprocal_hFx":
            return 1.0 / h_fx
        return _rule_value(self.alpha, h_fx, "alpha")

    def beta_values(self, h_fx) -> np.ndarray:
        h_fx = np.asarray(h_fx, dtype=float)
        if self.beta == "hFx":
            return h_fx.copy()
        return _rule_value(self.beta, h_fx, "beta")

    def mu_values(self, h_t, h_x) -> np.ndarray:
        h_t = np.asarray(h_t, dtype=float)
        h_x = np.asarray(h_x, dtype=float)
        if self.mu == "max_h":
            return np.maximum(h_t, h_x)
        if self.mu == "squared_min":
            return np.minimum(h_t, h_x) ** 2
        if self.mu == "squared_max":
            return np.maximum(h_t, h_x) ** 2
        return _rule_value(self.mu, h_t, "mu")

    def delta_values(self, h_x) -> np.ndarray:
        return np.minimum(self.theta * np.asarray(h_x, dtype=float), 0.5)

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "mu": self.mu, "theta": self.theta}


def default_quadrature_points(p: int, potential: PotentialModel, kind: SpaceKind) -> int:
    """Gauss points per axis.

    ``p + 2 + ceil(deg V / 2)`` for a polynomial potential, which integrates
    ``mu |S b|^2`` exactly, and ``p + 4`` otherwise.
    """
    if SpaceKind(kind) is SpaceKind.TREFFTZ_EXP:
        return p + 4
    deg = potential.polynomial_degree
    if deg is None:
        return p + 4
    return p + 2 + (deg + 1) // 2


# quadrature points ---------------------------------------------------------

def volume_points(mesh: SpaceTimeMesh, element_ids, n: int):
    """Tensor Gauss points ``(ne, nq, d+1)`` and weights ``(ne, nq)``."""
    ids = np.asarray(element_ids, dtype=int)
    ref = gauss_rule([(0.0, 1.0)] * (mesh.dim + 1), n)
    lo, size = mesh.lower[ids], mesh.size[ids]
    pts = lo[:, None, :] + size[:, None, :] * ref.points[None]
    wts = np.prod(size, axis=1)[:, None] * ref.weights[None]
    return pts, wts


def facet_points(mesh: SpaceTimeMesh, facet_ids, n: int):
    """Gauss points ``(nf, nq, d+1)`` and weights ``(nf, nq)`` on facets."""
    fids = np.asarray(facet_ids, dtype=int)
    nv = mesh.dim + 1
    ref = gauss_rule([(0.0, 1.0)] * mesh.dim, n)
    full = np.stack([np.insert(ref.points, k, 0.0, axis=1) for k in range(nv)])
    axis = mesh.facet_axis[fids]
    lo = mesh.facet_lower[fids]
    size = mesh.facet_upper[fids] - lo
    pts = lo[:, None, :] + size[:, None, :] * full[axis]
    meas = np.prod(np.where(np.arange(nv)[None, :] == axis[:, None], 1.0, size), axis=1)
    return pts, meas[:, None] * ref.weights[None]


# traces ---------------------------------------------------------------------

class Trace:
    """Linear combination of one side's basis traces on a batch of facets.

    ``data`` is ``(nf, nq, nb)`` at quadrature points, or ``(nf, nb)``
    multiplying the plane waves of ``side`` when ``analytic`` is set.
    """

    # let numpy arrays defer to __rmul__
    __array_ufunc__ = None

    def __init__(self, data, side, analytic=False):
        self.data = data
        self.side = side
        self.analytic = analytic

    def _coef(self, c):
        c = np.asarray(c)
        if c.ndim == 0:
            return c
        return c.reshape(c.shape + (1,) * (self.data.ndim - c.ndim))

    def __mul__(self, c):
        return Trace(self.data * self._coef(c), self.side, self.analytic)

    __rmul__ = __mul__

    def __add__(self, other):
        if other.side != self.side:
            raise ValueError("cannot add traces from different sides")
        return Trace(self.data + other.data, self.side, self.analytic)

    def __sub__(self, other):
        return self + (-1.0) * other


def _pair_quadrature(w, X, Y):
    """``out[f, J, L] = sum_q w[f,q] X[f,q,L] conj(Y[f,q,J])``."""
    return np.einsum("fq,fqL,fqJ->fJL", w, X, Y.conj(), optimize=True)


class FacetBatch:
    """Traces of the owner (side 0) and neighbour (side 1) bases on facets.

    ``sides`` maps side -> (BasisSet, slab-local element ids).  Normal
    derivatives are taken along the owner's outward normal on every side.
    """

    def __init__(self, mesh: SpaceTimeMesh, facet_ids, sides: dict, n_quad: int):
        self.mesh = mesh
        self.fids = np.asarray(facet_ids, dtype=int)
        self.axis = mesh.facet_axis[self.fids]
        self.sign = mesh.facet_sign[self.fids].astype(float)
        self.points, self.weights = facet_points(mesh, self.fids, n_quad)
        d = mesh.dim
        self.sides = sides
        self._gauss = {}
        self.analytic = any(b.kind is SpaceKind.TREFFTZ_EXP for b, _ in sides.values())
        self._G = {}
        # outward spatial normal of the owner at each point, (nf, nq, d)
        normal = np.zeros((len(self.fids), d))
        timelike = self.axis < d
        normal[np.flatnonzero(timelike), self.axis[timelike]] = self.sign[timelike]
        self.normal = np.broadcast_to(normal[:, None, :], (*self.points.shape[:2], d))

    def __len__(self):
        return len(self.fids)

    def _evaluate(self, side):
        if side not in self._gauss:
            bset, ids = self.sides[side]
            vals = bset.take(ids).evaluate(self.points)
            dn = np.einsum("fqbk,fqk->fqb", vals.grad, self.normal)
            self._gauss[side] = (vals.value, dn)
        return self._gauss[side]

    def value_q(self, side) -> np.ndarray:
        """Basis values at the quadrature points, ``(nf, nq, nb)``."""
        return self._evaluate(side)[0]

    def dn_q(self, side) -> np.ndarray:
        return self._evaluate(side)[1]

    def value(self, side) -> Trace:
        if self.analytic:
            bset, ids = self.sides[side]
            return Trace(np.ones((len(self.fids), bset.dim), dtype=complex), side, True)
        return Trace(self.value_q(side), side)

    def dn(self, side) -> Trace:
        if self.analytic:
            bset, ids = self.sides[side]
            kap = bset.kappas[ids]
            on_x = (self.axis < self.mesh.dim)[:, None]
            return Trace(np.where(on_x, 1j * kap * self.sign[:, None], 0.0), side, True)
        return Trace(self.dn_q(side), side)

    def _plane_wave_gram(self, trial_side, test_side):
        """Exact ``int exp_L conj(exp_J)`` over each facet, ``(nf, nJ, nL)``."""
        key = (trial_side, test_side)
        if key not in self._G:
            bb, ib = self.sides[trial_side]
            ba, ia = self.sides[test_side]
            kL = bb.kappas[ib][:, None, :]
            kJ = ba.kappas[ia][:, :, None]
            cb = bb.centers[ib]
            ca = ba.centers[ia]
            phase = (-kL * cb[:, 0, None, None] + kJ * ca[:, 0, None, None]
                     + 0.5 * (kL**2 * cb[:, 1, None, None] - kJ**2 * ca[:, 1, None, None]))
            freq = [kL - kJ, -0.5 * (kL**2 - kJ**2)]
            lo = self.mesh.facet_lower[self.fids]
            hi = self.mesh.facet_upper[self.fids]
            G = np.exp(1j * phase)
            for k in range(2):
                a = lo[:, k, None, None]
                length = (hi - lo)[:, k, None, None]
                mid = a + 0.5 * length
                fixed = (self.axis == k)[:, None, None]
                w = freq[k]
                integral = length * np.sinc(w * length / (2 * np.pi)) * np.exp(1j * w * mid)
                G = G * np.where(fixed, np.exp(1j * w * a), integral)
            self._G[key] = G
        return self._G[key]

    def pair(self, X: Trace, Y: Trace) -> np.ndarray:
        """``int X conj(Y)`` per facet as ``(nf, nbY, nbX)``."""
        if self.analytic:
            G = self._plane_wave_gram(X.side, Y.side)
            return X.data[:, None, :] * Y.data.conj()[:, :, None] * G
        return _pair_quadrature(self.weights, X.data, Y.data)

    def load(self, g, Y: Trace) -> np.ndarray:
        """``int g conj(Y)`` per facet as ``(nf, nbY)``; ``Y`` at quadrature points."""
        return np.einsum("fq,fq,fqJ->fJ", self.weights, g, Y.data.conj())

    def trace_q(self, side, c_value, c_dn) -> Trace:
        """Quadrature-point trace ``c_value * b + c_dn * dn b``."""
        return Trace(
            self.value_q(side) * _col(c_value) + self.dn_q(side) * _col(c_dn), side
        )


def _col(c):
    c = np.asarray(c)
    return c if c.ndim == 0 else c[:, None, None]


# local terms --------------------------------------------------------------

def assemble_volume(mesh: SpaceTimeMesh, bset: BasisSet, element_ids, potential: PotentialModel,
                    mu, n_quad: int) -> np.ndarray:
    """Volume blocks ``int_K b_L conj(S b_J) + i mu (S b_L) conj(S b_J)``, ``(ne, nb, nb)``."""
    ids = np.asarray(element_ids, dtype=int)
    nb = bset.dim
    if bset.kind is SpaceKind.TREFFTZ_EXP:
        if potential.polynomial_degree != 0 or np.any(potential.eval(mesh.centers[ids])):
            raise ConfigurationError("plane-wave Trefftz bases need V = 0")
        return np.zeros((len(ids), nb, nb), dtype=complex)
    pts, wts = volume_points(mesh, ids, n_quad)
    vals = bset.evaluate(pts)
    S = vals.residual(potential.eval(pts))
    mu = np.asarray(mu, dtype=float)
    X = vals.value + 1j * mu[:, None, None] * S
    return _pair_quadrature(wts, X, S)


def assemble_spacelike(batch: FacetBatch, kind: str) -> np.ndarray:
    """Upwind space-like blocks.

    ``kind="before"``: ``i int u^- conj(s^-)`` (top of an element, also the
    final facet).  ``kind="coupling"``: ``i int u^- conj(s^+)``, the block
    moved to the right-hand side of the later slab.
    """
    if kind == "before":
        return batch.pair(1j * batch.value(0), batch.value(0))
    if kind == "coupling":
        return batch.pair(1j * batch.value(0), batch.value(1))
    raise ValueError(f"unknown space-like block {kind!r}")


def assemble_timelike(batch: FacetBatch, alpha, beta) -> dict:
    """Blocks ``(test side, trial side) -> (nf, nb, nb)`` on internal time-like facets."""
    sigma = {0: 1.0, 1: -1.0}
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    blocks = {}
    v = {s: batch.value(s) for s in (0, 1)}
    dn = {s: batch.dn(s) for s in (0, 1)}
    for a in (0, 1):
        for b in (0, 1):
            sa, sb = sigma[a], sigma[b]
            X1 = 0.5 * sa * (0.5 * dn[b] + (1j * sb) * alpha * v[b])
            X2 = 0.5 * sa * ((-0.5) * v[b] + (1j * sb) * beta * dn[b])
            blocks[(a, b)] = batch.pair(X1, v[a]) + batch.pair(X2, dn[a])
    return blocks


def assemble_boundary(batch: FacetBatch, kind: FacetKind, config: StabilizationConfig,
                      data=None, h_x=None):
    """Matrix blocks ``(nf, nb, nb)`` and load ``(nf, nb)`` on boundary facets.

    ``data`` is the boundary datum at the quadrature points, ``(nf, nq)``;
    ``None`` skips the load.  ``h_x`` (element diameters) is needed for Robin.
    """
    kind = FacetKind(kind)
    v, dn = batch.value(0), batch.dn(0)
    hfx = batch.mesh.facet_hfx[batch.fids]
    if kind is FacetKind.DIRICHLET:
        a = config.alpha_values(hfx)
        mat = batch.pair(0.5 * (dn + 1j * a * v), v)
    elif kind is FacetKind.NEUMANN:
        b = config.beta_values(hfx)
        mat = batch.pair(0.5 * ((-1.0) * v + 1j * b * dn), dn)
    elif kind is FacetKind.ROBIN:
        th = config.theta
        delta = config.delta_values(h_x)
        mat = batch.pair(0.5 * (delta * dn + 1j * th * (1.0 - delta) * v), v + (-1j / th) * dn)
    else:
        raise ValueError(f"{kind.name} is not a boundary condition facet")
    load = None if data is None else assemble_boundary_load(batch, kind, config, data, h_x)
    return mat, load


# slab systems -------------------------------------------------------------

@dataclass
class SlabSystem:
    """``K_n Psi_n = b_n + R_n Psi_{n-1}``; ``R_n`` is None for the first slab."""

    n: int
    K: sp.csc_matrix
    R: sp.csr_matrix | None
    b: np.ndarray
    dof_map: np.ndarray  # first dof of each slab-local element
    local_dim: int = field(default=0)


def _scatter(blocks, rows, cols, nb, shape):
    """Sparse matrix from blocks ``(nf, nb, nb)`` at element rows/cols."""
    r = (rows[:, None, None] * nb + np.arange(nb)[None, :, None]).repeat(nb, axis=2)
    c = (cols[:, None, None] * nb + np.arange(nb)[None, None, :]).repeat(nb, axis=1)
    return sp.coo_matrix((blocks.ravel(), (r.ravel(), c.ravel())), shape=shape)


class SlabAssembler:
    """Builds ``K_n``, ``R_n`` and the data part of ``b_n`` for each slab."""

    def __init__(self, mesh: SpaceTimeMesh, problem, kind, p: int,
                 config: StabilizationConfig | None = None, mode: str = "nonorthogonal",
                 n_quad: int | None = None):
        self.mesh = mesh
        self.problem = problem
        self.potential = problem.potential
        self.kind = SpaceKind(kind)
        self.p = int(p)
        self.config = config or StabilizationConfig(theta=getattr(problem, "theta", 1.0))
        self.mode = mode
        self.n_quad = n_quad or default_quadrature_points(self.p, self.potential, self.kind)
        if self.kind is SpaceKind.TREFFTZ_EXP and mesh.dim != 1:
            raise ConfigurationError("plane-wave Trefftz bases are only available for d = 1")
        self.cps = mesh.cells_per_slab
        self.reusable = (not self.potential.time_dependent) and mesh.is_uniform_in_time
        self._basis_cache = {}
        self._K_cache = None
        self._R_cache = None
        self._classify_facets()
        self.local_dim = self.basis(0).dim
        self.slab_dofs = self.cps * self.local_dim
        self._check_data()

    def _classify_facets(self):
        m = self.mesh
        kind = m.facet_kind
        owner_slab = m.slab_of[m.facet_owner]
        nbr = np.where(m.facet_neighbor >= 0, m.facet_neighbor, 0)
        nbr_slab = np.where(m.facet_neighbor >= 0, m.slab_of[nbr], -1)
        self._groups = []
        for n in range(m.num_slabs):
            own = owner_slab == n
            space = kind == FacetKind.SPACE_INTERNAL
            self._groups.append({
                "top": np.flatnonzero(own & (space | (kind == FacetKind.FINAL))),
                "bottom": np.flatnonzero(space & (nbr_slab == n)),
                "initial": np.flatnonzero(own & (kind == FacetKind.INITIAL)),
                "time": np.flatnonzero(own & (kind == FacetKind.TIME_INTERNAL)),
                FacetKind.DIRICHLET: np.flatnonzero(own & (kind == FacetKind.DIRICHLET)),
                FacetKind.NEUMANN: np.flatnonzero(own & (kind == FacetKind.NEUMANN)),
                FacetKind.ROBIN: np.flatnonzero(own & (kind == FacetKind.ROBIN)),
            })

    def _check_data(self):
        names = {FacetKind.DIRICHLET: "g_D", FacetKind.NEUMANN: "g_N", FacetKind.ROBIN: "g_R"}
        present = set(FacetKind(k) for k in np.unique(self.mesh.facet_kind))
        for fk, attr in names.items():
            if fk in present and getattr(self.problem, attr, None) is None:
                raise ConfigurationError(f"boundary facets of kind {fk.name} need data {attr}")
        if getattr(self.problem, "psi0", None) is None:
            raise ConfigurationError("the problem has no initial datum psi0")

    def facets(self, n: int, group) -> np.ndarray:
        return self._groups[n][group]

    def basis(self, n: int) -> BasisSet:
        if n not in self._basis_cache:
            ids = self.mesh.slab_elements(n)
            if self.reusable and n > 0:
                bset = self.basis(0).moved(self.mesh.centers[ids])
            else:
                bset = build_basis_set(self.mesh, ids, self.kind, self.p, self.potential, self.mode)
            if len(self._basis_cache) > 4:
                self._basis_cache.pop(next(k for k in self._basis_cache if k != 0))
            self._basis_cache[n] = bset
        return self._basis_cache[n]

    def local(self, eids) -> np.ndarray:
        return np.asarray(eids, dtype=int) % self.cps

    def batch(self, fids, neighbor: bool = False, n_quad=None) -> FacetBatch:
        """Facet batch with the owner bases and optionally the neighbour bases.

        The facets must share the owner slab (and the neighbour slab).
        """
        m = self.mesh
        fids = np.asarray(fids, dtype=int)
        own = m.facet_owner[fids]
        sides = {0: (self.basis(int(m.slab_of[own[0]])), self.local(own))}
        if neighbor:
            nbr = m.facet_neighbor[fids]
            sides[1] = (self.basis(int(m.slab_of[nbr[0]])), self.local(nbr))
        return FacetBatch(m, fids, sides, n_quad or self.n_quad)

    # matrices -----------------------------------------------------------
    def matrix(self, n: int) -> sp.csc_matrix:
        if self.reusable and self._K_cache is not None:
            return self._K_cache
        K = self._assemble_matrix(n)
        if self.reusable:
            self._K_cache = K
        return K

    def _assemble_matrix(self, n: int) -> sp.csc_matrix:
        m, cfg, nb = self.mesh, self.config, self.local_dim
        shape = (self.slab_dofs, self.slab_dofs)
        ids = m.slab_elements(n)
        loc = self.local(ids)
        mu = cfg.mu_values(m.h_t[ids], m.h_x[ids])
        parts = [_scatter(assemble_volume(m, self.basis(n), ids, self.potential, mu, self.n_quad),
                          loc, loc, nb, shape)]
        top = self.facets(n, "top")
        rows = self.local(m.facet_owner[top])
        parts.append(_scatter(assemble_spacelike(self.batch(top), "before"), rows, rows, nb, shape))
        tl = self.facets(n, "time")
        if len(tl):
            b = self.batch(tl, neighbor=True)
            hfx = m.facet_hfx[tl]
            blocks = assemble_timelike(b, cfg.alpha_values(hfx), cfg.beta_values(hfx))
            ends = {0: self.local(m.facet_owner[tl]), 1: self.local(m.facet_neighbor[tl])}
            for (a, s), blk in blocks.items():
                parts.append(_scatter(blk, ends[a], ends[s], nb, shape))
        for fk in (FacetKind.DIRICHLET, FacetKind.NEUMANN, FacetKind.ROBIN):
            fids = self.facets(n, fk)
            if len(fids):
                owner = m.facet_owner[fids]
                mat, _ = assemble_boundary(self.batch(fids), fk, cfg, None, m.h_x[owner])
                r = self.local(owner)
                parts.append(_scatter(mat, r, r, nb, shape))
        # concatenating triplets keeps exact zeros of the block pattern
        rows = np.concatenate([q.row for q in parts])
        cols = np.concatenate([q.col for q in parts])
        data = np.concatenate([q.data for q in parts])
        return sp.csc_matrix((data, (rows, cols)), shape=shape)

    def coupling(self, n: int) -> sp.csr_matrix | None:
        """``R_n`` mapping slab ``n-1`` coefficients into the load of slab ``n``."""
        if n == 0:
            return None
        if self.reusable and self._R_cache is not None:
            return self._R_cache
        m, nb = self.mesh, self.local_dim
        fids = self.facets(n, "bottom")
        blocks = assemble_spacelike(self.batch(fids, neighbor=True), "coupling")
        R = sp.csr_matrix(_scatter(blocks, self.local(m.facet_neighbor[fids]),
                                   self.local(m.facet_owner[fids]), nb,
                                   (self.slab_dofs, self.slab_dofs)))
        if self.reusable:
            self._R_cache = R
        return R

    def load(self, n: int) -> np.ndarray:
        """Initial and boundary data part of ``b_n``."""
        m, cfg, nb, pr = self.mesh, self.config, self.local_dim, self.problem
        rhs = np.zeros(self.slab_dofs, dtype=complex)
        init = self.facets(n, "initial")
        if len(init):
            b = self.batch(init)
            vals = 1j * np.asarray(pr.psi0(b.points), dtype=complex)
            blk = b.load(vals, Trace(b.value_q(0), 0))
            self._add_load(rhs, blk, m.facet_owner[init])
        for fk, attr in ((FacetKind.DIRICHLET, "g_D"), (FacetKind.NEUMANN, "g_N"),
                         (FacetKind.ROBIN, "g_R")):
            fids = self.facets(n, fk)
            if not len(fids):
                continue
            b = self.batch(fids)
            fn = getattr(pr, attr)
            data = fn(b.points) if fk is FacetKind.DIRICHLET else fn(b.points, b.normal)
            owner = m.facet_owner[fids]
            blk = assemble_boundary_load(b, fk, cfg, np.asarray(data, dtype=complex), m.h_x[owner])
            self._add_load(rhs, blk, owner)
        return rhs

    def _add_load(self, rhs, blk, owners):
        idx = self.local(owners)[:, None] * self.local_dim + np.arange(self.local_dim)[None, :]
        np.add.at(rhs, idx.ravel(), blk.ravel())

    def system(self, n: int) -> SlabSystem:
        nb = self.local_dim
        return SlabSystem(n, self.matrix(n), self.coupling(n), self.load(n),
                          np.arange(self.cps) * nb, nb)


def assemble_boundary_load(batch: FacetBatch, kind: FacetKind, config: StabilizationConfig,
                           data, h_x=None) -> np.ndarray:
    """Load of a boundary condition, ``(nf, nb)``."""
    hfx = batch.mesh.facet_hfx[batch.fids]
    if kind is FacetKind.DIRICHLET:
        Y = batch.trace_q(0, -0.5j * config.alpha_values(hfx), 0.5)
    elif kind is FacetKind.NEUMANN:
        Y = batch.trace_q(0, -0.5, -0.5j * config.beta_values(hfx))
    elif kind is FacetKind.ROBIN:
        delta = config.delta_values(h_x)
        Y = batch.trace_q(0, 0.5 * (delta - 1.0), -0.5j * delta / config.theta)
    else:
        raise ValueError(f"{FacetKind(kind).name} is not a boundary condition facet")
    return batch.load(data, Y)


def write_matrix(path, matrix) -> None:
    """Text dump: ``rows cols`` header, then ``row col re im`` per stored entry."""
    coo = sp.coo_matrix(matrix)
    coo.sum_duplicates()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")
