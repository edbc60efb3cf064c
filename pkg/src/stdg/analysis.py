"""Error norms, energy balance and convergence rates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import FacetBatch, volume_points
from .mesh import FacetKind

__all__ = [
    "UnsupportedError",
    "ErrorReport",
    "dg_norm_terms",
    "dg_norm",
    "dg_norm_error",
    "dg_plus_norm_error",
    "l2_final_error",
    "energy_series",
    "energy_loss",
    "convergence_rates",
    "error_report",
]


class UnsupportedError(ValueError):
    """The requested quantity is not defined for this problem."""


def _trace(batch: FacetBatch, side, c):
    """Values and normal derivatives of ``w`` on one side, ``(nf, nq)`` each."""
    return (np.einsum("fqb,fb->fq", batch.value_q(side), c),
            np.einsum("fqb,fb->fq", batch.dn_q(side), c))


def _exact_trace(batch: FacetBatch, exact):
    val, grad = exact.value_and_gradient(batch.points)
    return val, np.sum(grad * batch.normal, axis=-1)


def _sq(batch: FacetBatch, f, weight=None):
    vals = np.abs(f) ** 2
    if weight is not None:
        vals = vals * np.asarray(weight)[:, None]
    return float(np.sum(batch.weights * vals))


def dg_norm_terms(solution, exact=None, coeffs=None, norm_mu=None, data=None) -> dict:
    """Squared DG-norm contributions of ``e = exact - w`` (``-w`` if no exact).

    Uses the stabilisation of the solve; ``norm_mu`` replaces the rule for the
    volume residual weight.  ``coeffs`` overrides the solution's coefficients
    (shape ``(num_slabs, slab_dofs)``).  Without an exact solution, ``data``
    (a problem) makes the Dirichlet and Neumann terms measure the mismatch
    with ``g_D`` and ``g_N``.
    """
    asm = solution.assembler
    mesh, cfg, nb = asm.mesh, asm.config, asm.local_dim
    if norm_mu is not None:
        cfg = replace(cfg, mu=norm_mu)
    C = solution.coeffs if coeffs is None else np.asarray(coeffs)
    cs = C.reshape(mesh.num_slabs, asm.cps, nb)
    nq = asm.n_quad
    terms = dict.fromkeys(
        ["residual", "space_jump", "final", "initial", "time_jump", "grad_jump",
         "dirichlet", "neumann", "robin"], 0.0)

    def coeff_of(eids):
        return cs[mesh.slab_of[eids], eids % asm.cps]

    def batch(fids, neighbor=False):
        return asm.batch(fids, neighbor=neighbor, n_quad=nq)

    for n in range(mesh.num_slabs):
        ids = mesh.slab_elements(n)
        mu = cfg.mu_values(mesh.h_t[ids], mesh.h_x[ids])
        if np.any(mu):
            pts, wts = volume_points(mesh, ids, nq)
            vals = asm.basis(n).evaluate(pts)
            Sw = np.einsum("eqb,eb->eq", vals.residual(asm.potential.eval(pts)), cs[n])
            terms["residual"] += float(np.sum(wts * mu[:, None] * np.abs(Sw) ** 2))
        g = asm._groups[n]
        top = g["top"]
        internal = top[mesh.facet_kind[top] == FacetKind.SPACE_INTERNAL]
        final = top[mesh.facet_kind[top] == FacetKind.FINAL]
        if len(internal):
            b = batch(internal, neighbor=True)
            jump = (_trace(b, 0, coeff_of(mesh.facet_owner[internal]))[0]
                    - _trace(b, 1, coeff_of(mesh.facet_neighbor[internal]))[0])
            terms["space_jump"] += 0.5 * _sq(b, jump)
        for key, fids in (("final", final), ("initial", g["initial"])):
            if len(fids):
                b = batch(fids)
                e = -_trace(b, 0, coeff_of(mesh.facet_owner[fids]))[0]
                if exact is not None:
                    e = e + exact.value(b.points)
                terms[key] += 0.5 * _sq(b, e)
        tl = g["time"]
        if len(tl):
            b = batch(tl, neighbor=True)
            v0, d0 = _trace(b, 0, coeff_of(mesh.facet_owner[tl]))
            v1, d1 = _trace(b, 1, coeff_of(mesh.facet_neighbor[tl]))
            hfx = mesh.facet_hfx[tl]
            terms["time_jump"] += 0.5 * _sq(b, v0 - v1, cfg.alpha_values(hfx))
            terms["grad_jump"] += 0.5 * _sq(b, d0 - d1, cfg.beta_values(hfx))
        for fk in (FacetKind.DIRICHLET, FacetKind.NEUMANN, FacetKind.ROBIN):
            fids = g[fk]
            if not len(fids):
                continue
            b = batch(fids)
            owner = mesh.facet_owner[fids]
            v, d = _trace(b, 0, coeff_of(owner))
            ev, ed = -v, -d
            if exact is not None:
                xv, xd = _exact_trace(b, exact)
                ev, ed = ev + xv, ed + xd
            elif data is not None and fk is FacetKind.DIRICHLET:
                ev = ev + np.asarray(data.g_D(b.points), dtype=complex)
            elif data is not None and fk is FacetKind.NEUMANN:
                ed = ed + np.asarray(data.g_N(b.points, b.normal), dtype=complex)
            hfx = mesh.facet_hfx[fids]
            if fk is FacetKind.DIRICHLET:
                terms["dirichlet"] += 0.5 * _sq(b, ev, cfg.alpha_values(hfx))
            elif fk is FacetKind.NEUMANN:
                terms["neumann"] += 0.5 * _sq(b, ed, cfg.beta_values(hfx))
            else:
                th = cfg.theta
                delta = cfg.delta_values(mesh.h_x[owner])
                terms["robin"] += 0.5 * (_sq(b, ev, th * (1.0 - delta)) + _sq(b, ed, delta / th))
    return terms


def dg_norm(solution, coeffs=None) -> float:
    """DG norm of the discrete function itself."""
    return math.sqrt(sum(dg_norm_terms(solution, None, coeffs).values()))


def _need_exact(problem):
    if problem.exact is None:
        raise UnsupportedError(f"problem {problem.name!r} has no exact solution")
    return problem.exact


def dg_norm_error(solution, exact, norm_mu=None) -> float:
    """DG norm of ``exact - solution``; the exact residual is taken as zero."""
    if exact is None:
        raise UnsupportedError("the DG error needs an exact solution")
    return math.sqrt(sum(dg_norm_terms(solution, exact, norm_mu=norm_mu).values()))


def dg_plus_norm_error(solution, exact) -> float:
    """DG+ norm of the error (diagnostic only).

    Adds the ``h_t``-scaled space-like traces, the ``alpha^{-1}``/``beta^{-1}``
    weighted averages on time-like facets and ``mu^{-1}`` weighted volume L2
    norm of the error to the DG norm.
    """
    if exact is None:
        raise UnsupportedError("the DG+ error needs an exact solution")
    asm = solution.assembler
    mesh, cfg = asm.mesh, asm.config
    total = sum(dg_norm_terms(solution, exact).values())
    cs = solution.coeffs.reshape(mesh.num_slabs, asm.cps, asm.local_dim)
    for n in range(mesh.num_slabs):
        ids = mesh.slab_elements(n)
        mu = cfg.mu_values(mesh.h_t[ids], mesh.h_x[ids])
        pts, wts = volume_points(mesh, ids, asm.n_quad)
        w = np.einsum("eqb,eb->eq", asm.basis(n).evaluate(pts).value, cs[n])
        err = np.abs(exact.value(pts) - w) ** 2
        with np.errstate(divide="ignore"):
            inv = np.where(mu > 0, 1.0 / mu, 0.0)
        total += float(np.sum(wts * inv[:, None] * err))
    return math.sqrt(total)


def l2_final_error(solution, exact) -> float:
    """``||exact - solution||`` on the final-time facets."""
    asm = solution.assembler
    mesh = asm.mesh
    fids = mesh.facets_by_kind(FacetKind.FINAL)
    b = asm.batch(fids)
    c = solution.slab_coeffs(mesh.num_slabs - 1)[asm.local(mesh.facet_owner[fids])]
    e = exact.value(b.points) - _trace(b, 0, c)[0]
    return math.sqrt(_sq(b, e))


def energy_series(solution) -> list[tuple[float, float]]:
    """``(t_n, E(t_n))`` at slab boundaries from the later-slab trace; the last
    entry uses the final-time trace."""
    asm = solution.assembler
    mesh = asm.mesh
    out = []
    for n in range(mesh.num_slabs):
        g = asm._groups[n]
        if n == 0:
            fids, side = g["initial"], 0
            owners = mesh.facet_owner[fids]
        else:
            fids, side = g["bottom"], 1
            owners = mesh.facet_neighbor[fids]
        b = asm.batch(fids, neighbor=side == 1)
        c = solution.slab_coeffs(n)[asm.local(owners)]
        out.append((float(mesh.time_nodes[n]), 0.5 * _sq(b, _trace(b, side, c)[0])))
    fids = mesh.facets_by_kind(FacetKind.FINAL)
    b = asm.batch(fids)
    c = solution.slab_coeffs(mesh.num_slabs - 1)[asm.local(mesh.facet_owner[fids])]
    out.append((float(mesh.time_nodes[-1]), 0.5 * _sq(b, _trace(b, 0, c)[0])))
    return out


@dataclass
class EnergyBalance:
    loss: float  # delta_E + 1/2 ||psi0 - w||^2 on F_0
    direct: float  # E(0; psi0) - E(T; w)
    delta: float


def energy_loss(solution, problem=None) -> EnergyBalance:
    """Energy loss from the dissipation identity, with the direct difference
    ``E(0; psi0) - E(T; w)`` for cross-checking.

    Boundary terms measure the mismatch with the boundary data; the two
    values agree when the data vanish.
    """
    asm = solution.assembler
    problem = problem or asm.problem
    mesh = asm.mesh
    if np.any(mesh.facet_kind == FacetKind.ROBIN):
        raise UnsupportedError("the energy identity does not cover Robin boundaries")
    terms = dg_norm_terms(solution, None, data=problem)
    delta = sum(v for k, v in terms.items() if k not in ("final", "initial"))
    fids = mesh.facets_by_kind(FacetKind.INITIAL)
    b = asm.batch(fids)
    psi0 = np.asarray(problem.psi0(b.points), dtype=complex)
    w0 = _trace(b, 0, solution.slab_coeffs(0)[asm.local(mesh.facet_owner[fids])])[0]
    mismatch = 0.5 * _sq(b, psi0 - w0)
    e0 = 0.5 * _sq(b, psi0)
    eT = energy_series(solution)[-1][1]
    return EnergyBalance(delta + mismatch, e0 - eT, delta)


def convergence_rates(h, errors) -> list:
    """``log(e_i / e_{i+1}) / log(h_i / h_{i+1})``; ``None`` where undefined."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if len(h) != len(e) or len(h) < 2:
        raise ValueError("need at least two (h, error) pairs")
    if np.any(np.diff(h) >= 0):
        raise ValueError("h must be strictly decreasing")
    rates = []
    for i in range(len(h) - 1):
        if e[i] <= 0 or e[i + 1] <= 0 or not np.isfinite(e[i]) or not np.isfinite(e[i + 1]):
            rates.append(None)
        else:
            rates.append(float(np.log(e[i] / e[i + 1]) / np.log(h[i] / h[i + 1])))
    return rates


@dataclass
class ErrorReport:
    h: float
    p: int
    space: str
    dofs: int
    dg_error: float
    l2_final: float
    energy_loss: float
    energy_series: list = field(default_factory=list)
    wall_ms: float = 0.0


def error_report(solution, problem=None, wall_ms: float = 0.0, norm_mu=None) -> ErrorReport:
    asm = solution.assembler
    problem = problem or asm.problem
    exact = _need_exact(problem)
    mesh = asm.mesh
    robin = np.any(mesh.facet_kind == FacetKind.ROBIN)
    loss = float("nan") if robin else energy_loss(solution, problem).loss
    return ErrorReport(
        h=float(np.max(mesh.h_K)), p=asm.p, space=asm.kind.value, dofs=solution.dofs,
        dg_error=dg_norm_error(solution, exact, norm_mu), l2_final=l2_final_error(solution, exact),
        energy_loss=loss, energy_series=energy_series(solution), wall_ms=wall_ms,
    )
