"""Sequential time-slab solver and conditioning diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import SlabAssembler, StabilizationConfig

__all__ = ["SolverError", "DiscreteSolution", "solve", "solve_monolithic", "global_matrix",
           "condition_number"]


class SolverError(RuntimeError):
    """A slab system could not be solved."""


@dataclass(frozen=True)
class DiscreteSolution:
    """Coefficients ``coeffs[n]`` of slab ``n`` in the assembler's dof order."""

    assembler: SlabAssembler
    coeffs: np.ndarray  # (num_slabs, slab_dofs)
    residuals: tuple = field(default=())

    @property
    def mesh(self):
        return self.assembler.mesh

    @property
    def dofs(self) -> int:
        return int(self.coeffs.size)

    def slab_coeffs(self, n: int) -> np.ndarray:
        """``(cells_per_slab, local_dim)`` coefficients of slab ``n``."""
        return self.coeffs[n].reshape(self.assembler.cps, self.assembler.local_dim)

    def element_coeffs(self, eid: int) -> np.ndarray:
        cps = self.assembler.cps
        return self.slab_coeffs(eid // cps)[eid % cps]

    def evaluate(self, eid: int, points) -> np.ndarray:
        """Values on element ``eid`` at points ``(nq, d+1)``."""
        asm = self.assembler
        n, loc = divmod(eid, asm.cps)
        vals = asm.basis(n).take([loc]).evaluate(np.asarray(points, dtype=float)[None])
        return vals.value[0] @ self.element_coeffs(eid)


class _SlabFactor:
    def __init__(self, K, n):
        try:
            self.lu = spla.splu(sp.csc_matrix(K))
        except RuntimeError as exc:
            raise SolverError(f"factorization of slab {n} failed: {exc}") from exc
        self.K = K

    def solve(self, b, n):
        x = self.lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SolverError(f"slab {n}: non-finite solution (singular matrix)")
        scale = max(np.linalg.norm(b), np.finfo(float).tiny)
        res = np.linalg.norm(self.K @ x - b) / scale
        if res > 1e-12:
            x = x + self.lu.solve(b - self.K @ x)
            res = np.linalg.norm(self.K @ x - b) / scale
        if res > 1e-10 and np.linalg.norm(b) > 0:
            raise SolverError(f"slab {n}: relative residual {res:.3e} exceeds 1e-10")
        return x, res


def solve(mesh, problem, kind, p: int, config: StabilizationConfig | None = None,
          mode: str = "nonorthogonal", n_quad: int | None = None, reuse: bool = True,
          assembler: SlabAssembler | None = None) -> DiscreteSolution:
    """Solve slab by slab: ``K_n Psi_n = b_n + R_n Psi_{n-1}``.

    With ``reuse`` the matrices and the factorization of the first slab are
    reused when the potential is time independent and the slabs are uniform.
    """
    asm = assembler or SlabAssembler(mesh, problem, kind, p, config, mode, n_quad)
    if not reuse:
        asm.reusable = False
    coeffs = np.zeros((mesh.num_slabs, asm.slab_dofs), dtype=complex)
    residuals = []
    factor = None
    for n in range(mesh.num_slabs):
        if factor is None or not asm.reusable:
            factor = _SlabFactor(asm.matrix(n), n)
        b = asm.load(n)
        if n > 0:
            b = b + asm.coupling(n) @ coeffs[n - 1]
        coeffs[n], res = factor.solve(b, n)
        residuals.append(res)
    return DiscreteSolution(asm, coeffs, tuple(residuals))


def global_matrix(asm: SlabAssembler):
    """Monolithic matrix over all slabs and its load vector."""
    N = asm.mesh.num_slabs
    blocks = [[None] * N for _ in range(N)]
    for n in range(N):
        blocks[n][n] = asm.matrix(n)
        if n > 0:
            blocks[n][n - 1] = -asm.coupling(n)
    A = sp.bmat(blocks, format="csc")
    b = np.concatenate([asm.load(n) for n in range(N)])
    return A, b


def solve_monolithic(mesh, problem, kind, p: int, config: StabilizationConfig | None = None,
                     mode: str = "nonorthogonal", n_quad: int | None = None) -> DiscreteSolution:
    """Solve the global system in one factorization (reference for slab decoupling)."""
    asm = SlabAssembler(mesh, problem, kind, p, config, mode, n_quad)
    A, b = global_matrix(asm)
    x = spla.spsolve(A, b)
    return DiscreteSolution(asm, x.reshape(mesh.num_slabs, asm.slab_dofs))


def _dense_extremes(A):
    s = la.svdvals(A)
    return s[0], s[-1]


def condition_number(matrix) -> float:
    """2-norm condition number; ``inf`` for numerically singular matrices.

    Full SVD up to dimension 2000, Lanczos on ``A`` and ``A^{-1}`` above.
    """
    shape = matrix.shape
    if len(shape) != 2 or shape[0] != shape[1] or shape[0] == 0:
        raise ValueError("condition_number needs a nonempty square matrix")
    n = shape[0]
    if n <= 2000:
        A = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        if not np.all(np.isfinite(A)):
            return float("inf")
        smax, smin = _dense_extremes(A)
    else:
        A = sp.csc_matrix(matrix)
        smax = spla.svds(A, k=1, return_singular_vectors=False)[0]
        try:
            lu = spla.splu(A)
        except RuntimeError:
            return float("inf")
        inv = spla.LinearOperator(
            shape, matvec=lu.solve, rmatvec=lambda y: lu.solve(y, trans="H"), dtype=A.dtype
        )
        smin = 1.0 / spla.svds(inv, k=1, return_singular_vectors=False)[0]
    if smin <= n * np.finfo(float).eps * smax:
        return float("inf")
    return float(smax / smin)
