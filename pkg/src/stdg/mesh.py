"""Cartesian-product space-time meshes of ``Omega x (0, T)``.

Elements are numbered slab by slab; inside a slab they follow the C-order of
the spatial lattice (last spatial axis fastest).  Facets are generated in a
fixed order from lattice coordinates, so identifiers are reproducible.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "BoundaryCondition",
    "FacetKind",
    "SpaceTimeDomain",
    "Element",
    "Facet",
    "SlabIndex",
    "SpaceTimeMesh",
    "build_cartesian_mesh",
]


class BoundaryCondition(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    ROBIN = "robin"


class FacetKind(enum.IntEnum):
    SPACE_INTERNAL = 0
    TIME_INTERNAL = 1
    INITIAL = 2
    FINAL = 3
    DIRICHLET = 4
    NEUMANN = 5
    ROBIN = 6

    @property
    def is_timelike(self) -> bool:
        return self in (FacetKind.TIME_INTERNAL, FacetKind.DIRICHLET,
                        FacetKind.NEUMANN, FacetKind.ROBIN)


_BC_KIND = {
    BoundaryCondition.DIRICHLET: FacetKind.DIRICHLET,
    BoundaryCondition.NEUMANN: FacetKind.NEUMANN,
    BoundaryCondition.ROBIN: FacetKind.ROBIN,
}


@dataclass(frozen=True)
class SpaceTimeDomain:
    """Space box ``prod [a_k, b_k]`` times ``(0, T)``.

    ``boundary_partition`` maps ``(axis, side)`` with ``side`` in {0, 1}
    (lower, upper face) to a boundary condition; missing faces are Dirichlet.
    """

    space_box: tuple[tuple[float, float], ...]
    T: float
    boundary_partition: dict = field(default_factory=dict)

    def __post_init__(self):
        box = tuple((float(a), float(b)) for a, b in self.space_box)
        object.__setattr__(self, "space_box", box)
        if len(box) not in (1, 2):
            raise ValueError("only d = 1 or d = 2 is supported")
        for a, b in box:
            if not b > a:
                raise ValueError(f"empty axis interval ({a}, {b})")
        if not self.T > 0:
            raise ValueError("final time must be positive")
        part = {}
        for key, bc in dict(self.boundary_partition).items():
            axis, side = key
            if not (0 <= axis < len(box) and side in (0, 1)):
                raise ValueError(f"invalid boundary face {key}")
            part[(int(axis), int(side))] = BoundaryCondition(bc)
        object.__setattr__(self, "boundary_partition", part)

    @property
    def dim(self) -> int:
        return len(self.space_box)

    def condition(self, axis: int, side: int) -> BoundaryCondition:
        return self.boundary_partition.get((axis, side), BoundaryCondition.DIRICHLET)

    @property
    def space_measure(self) -> float:
        return float(np.prod([b - a for a, b in self.space_box]))


@dataclass(frozen=True)
class Element:
    id: int
    space_cell: tuple[tuple[float, float], ...]
    time_cell: tuple[float, float]
    h_x: float
    h_t: float
    h_K: float
    center: tuple[float, ...]
    slab: int


@dataclass(frozen=True)
class Facet:
    """An axis-aligned facet.  ``geometry`` is a box with one degenerate axis.

    ``neighbors`` is ``(before, after)`` for space-like facets,
    ``(owner, neighbor)`` for internal time-like ones and ``(owner,)`` on the
    boundary.  ``normal`` points from the first neighbour to the second on
    internal facets, outward on time-like boundary facets, and is ``+e_t`` on
    ``F_0`` and ``F_T``.
    """

    id: int
    kind: FacetKind
    geometry: tuple[tuple[float, float], ...]
    normal: tuple[float, ...]
    neighbors: tuple[int, ...]
    h_Fx: float

    @property
    def measure(self) -> float:
        return float(np.prod([b - a for a, b in self.geometry if b > a]))


@dataclass(frozen=True)
class SlabIndex:
    slab_boundaries: np.ndarray
    elements_by_slab: tuple[np.ndarray, ...]


def _axis_nodes(a, b, cells, breakpoints=None):
    if breakpoints is None:
        return np.linspace(a, b, cells + 1)
    pts = sorted({a, b, *[float(x) for x in breakpoints if a < x < b]})
    lengths = np.diff(pts)
    counts = np.maximum(1, np.rint(cells * lengths / (b - a)).astype(int))
    nodes = [np.linspace(lo, hi, c + 1)[:-1] for lo, hi, c in zip(pts[:-1], pts[1:], counts)]
    return np.concatenate([*nodes, [b]])


class SpaceTimeMesh:
    """Immutable tensor-product space-time mesh with classified facets."""

    def __init__(self, domain: SpaceTimeDomain, space_nodes, time_nodes):
        self.domain = domain
        self.space_nodes = tuple(np.asarray(n, dtype=float) for n in space_nodes)
        self.time_nodes = np.asarray(time_nodes, dtype=float)
        for n in (*self.space_nodes, self.time_nodes):
            if np.any(np.diff(n) <= 0):
                raise ValueError("mesh nodes must be strictly increasing")
        self.dim = domain.dim
        self.cells = tuple(len(n) - 1 for n in self.space_nodes)
        self.num_slabs = len(self.time_nodes) - 1
        self.cells_per_slab = int(np.prod(self.cells))
        self.num_elements = self.cells_per_slab * self.num_slabs
        self._build_elements()
        self._build_facets()

    # elements ---------------------------------------------------------
    def _build_elements(self):
        d = self.dim
        lattice = np.array(list(np.ndindex(*self.cells)), dtype=int).reshape(-1, d)
        lo = np.empty((self.num_elements, d + 1))
        hi = np.empty((self.num_elements, d + 1))
        slab = np.repeat(np.arange(self.num_slabs), self.cells_per_slab)
        spatial = np.tile(lattice, (self.num_slabs, 1))
        for k in range(d):
            lo[:, k] = self.space_nodes[k][spatial[:, k]]
            hi[:, k] = self.space_nodes[k][spatial[:, k] + 1]
        lo[:, d] = self.time_nodes[slab]
        hi[:, d] = self.time_nodes[slab + 1]
        self.lattice = spatial
        self.slab_of = slab
        self.lower = lo
        self.upper = hi
        self.size = hi - lo
        self.centers = 0.5 * (lo + hi)
        self.h_x = np.sqrt(np.sum(self.size[:, :d] ** 2, axis=1))
        self.h_t = self.size[:, d].copy()
        self.h_K = np.sqrt(self.h_x**2 + self.h_t**2)

    def element_id(self, lattice_index, slab: int) -> int:
        return slab * self.cells_per_slab + int(np.ravel_multi_index(tuple(lattice_index), self.cells))

    def element(self, eid: int) -> Element:
        self._check_element(eid)
        d = self.dim
        return Element(
            id=int(eid),
            space_cell=tuple((float(self.lower[eid, k]), float(self.upper[eid, k])) for k in range(d)),
            time_cell=(float(self.lower[eid, d]), float(self.upper[eid, d])),
            h_x=float(self.h_x[eid]),
            h_t=float(self.h_t[eid]),
            h_K=float(self.h_K[eid]),
            center=tuple(float(c) for c in self.centers[eid]),
            slab=int(self.slab_of[eid]),
        )

    def _check_element(self, eid):
        if not (isinstance(eid, (int, np.integer)) and 0 <= eid < self.num_elements):
            raise ValueError(f"unknown element id {eid!r}")

    @property
    def elements(self) -> list[Element]:
        return [self.element(i) for i in range(self.num_elements)]

    def slab_elements(self, n: int) -> np.ndarray:
        return np.arange(n * self.cells_per_slab, (n + 1) * self.cells_per_slab)

    @cached_property
    def slab_index(self) -> SlabIndex:
        return SlabIndex(self.time_nodes.copy(),
                         tuple(self.slab_elements(n) for n in range(self.num_slabs)))

    @property
    def is_uniform_in_time(self) -> bool:
        dt = np.diff(self.time_nodes)
        return bool(np.allclose(dt, dt[0], rtol=1e-12, atol=0))

    # facets -----------------------------------------------------------
    def _build_facets(self):
        """Fill the facet arrays.

        ``facet_axis`` is the normal axis (``d`` for time).  ``facet_sign`` is
        the outward sign of the owner's normal along that axis.
        """
        d = self.dim
        kinds, axes, owners, nbrs, signs, lows, highs, hfx = [], [], [], [], [], [], [], []

        def add(kind, axis, owner, nbr, sign, lo, hi, h):
            kinds.append(kind)
            axes.append(axis)
            owners.append(owner)
            nbrs.append(nbr)
            signs.append(sign)
            lows.append(lo)
            highs.append(hi)
            hfx.append(h)

        cps = self.cells_per_slab
        for n in range(self.num_slabs):
            base = n * cps
            # space-like: initial facets or internal facets below this slab
            for s in range(cps):
                e = base + s
                lo = self.lower[e].copy()
                hi = self.upper[e].copy()
                hi[d] = lo[d]
                if n == 0:
                    add(FacetKind.INITIAL, d, e, -1, -1, lo, hi, self.h_x[e])
                else:
                    add(FacetKind.SPACE_INTERNAL, d, e - cps, e, 1, lo, hi, self.h_x[e])
            # time-like, axis by axis, lattice order
            for k in range(d):
                for s in range(cps):
                    e = base + s
                    idx = self.lattice[e]
                    lo = self.lower[e].copy()
                    hi = self.upper[e].copy()
                    lo[k] = hi[k]
                    if idx[k] + 1 < self.cells[k]:
                        idx2 = idx.copy()
                        idx2[k] += 1
                        e2 = self.element_id(idx2, n)
                        h = 0.5 * (self.h_x[e] + self.h_x[e2])
                        add(FacetKind.TIME_INTERNAL, k, e, e2, 1, lo, hi, h)
                    else:
                        kind = _BC_KIND[self.domain.condition(k, 1)]
                        add(kind, k, e, -1, 1, lo, hi, self.h_x[e])
                    if idx[k] == 0:
                        lo0 = self.lower[e].copy()
                        hi0 = self.upper[e].copy()
                        hi0[k] = lo0[k]
                        kind = _BC_KIND[self.domain.condition(k, 0)]
                        add(kind, k, e, -1, -1, lo0, hi0, self.h_x[e])
        base = (self.num_slabs - 1) * cps
        for s in range(cps):
            e = base + s
            lo = self.lower[e].copy()
            hi = self.upper[e].copy()
            lo[d] = hi[d]
            add(FacetKind.FINAL, d, e, -1, 1, lo, hi, self.h_x[e])

        self.facet_kind = np.array(kinds, dtype=int)
        self.facet_axis = np.array(axes, dtype=int)
        self.facet_owner = np.array(owners, dtype=int)
        self.facet_neighbor = np.array(nbrs, dtype=int)
        self.facet_sign = np.array(signs, dtype=int)
        self.facet_lower = np.array(lows, dtype=float)
        self.facet_upper = np.array(highs, dtype=float)
        self.facet_hfx = np.array(hfx, dtype=float)
        self.num_facets = len(kinds)

    def facet(self, fid: int) -> Facet:
        d = self.dim
        kind = FacetKind(int(self.facet_kind[fid]))
        axis = int(self.facet_axis[fid])
        normal = [0.0] * (d + 1)
        if kind in (FacetKind.INITIAL, FacetKind.FINAL, FacetKind.SPACE_INTERNAL):
            normal[d] = 1.0
        else:
            normal[axis] = float(self.facet_sign[fid])
        owner = int(self.facet_owner[fid])
        nbr = int(self.facet_neighbor[fid])
        return Facet(
            id=int(fid),
            kind=kind,
            geometry=tuple((float(a), float(b)) for a, b in zip(self.facet_lower[fid], self.facet_upper[fid])),
            normal=tuple(normal),
            neighbors=(owner,) if nbr < 0 else (owner, nbr),
            h_Fx=float(self.facet_hfx[fid]),
        )

    @property
    def facets(self) -> list[Facet]:
        return [self.facet(f) for f in range(self.num_facets)]

    def facets_by_kind(self, kind: FacetKind) -> np.ndarray:
        return np.flatnonzero(self.facet_kind == int(kind))

    @cached_property
    def _incidence(self):
        inc = [[] for _ in range(self.num_elements)]
        for f in range(self.num_facets):
            kind = FacetKind(int(self.facet_kind[f]))
            owner = self.facet_owner[f]
            nbr = self.facet_neighbor[f]
            if kind == FacetKind.INITIAL:
                inc[owner].append((f, -1))
            elif nbr < 0:
                inc[owner].append((f, 1 if kind == FacetKind.FINAL else int(self.facet_sign[f])))
            else:
                inc[owner].append((f, 1))
                inc[nbr].append((f, -1))
        return inc

    def facets_of(self, eid: int) -> list[tuple[Facet, int]]:
        """Facets of an element with the sign of its outward normal relative
        to ``Facet.normal`` (+1 if they agree)."""
        self._check_element(eid)
        return [(self.facet(f), o) for f, o in self._incidence[eid]]

    def counts(self) -> dict[FacetKind, int]:
        return {k: int(np.sum(self.facet_kind == int(k))) for k in FacetKind}


def build_cartesian_mesh(domain: SpaceTimeDomain, cells_per_space_axis, time_slabs: int,
                         breakpoints=None) -> SpaceTimeMesh:
    """Uniform Cartesian mesh; ``breakpoints[k]`` lists interior points of axis
    ``k`` that must be mesh nodes (cells are split proportionally)."""
    if isinstance(cells_per_space_axis, (int, np.integer)):
        cells_per_space_axis = (int(cells_per_space_axis),) * domain.dim
    cells = tuple(int(c) for c in cells_per_space_axis)
    if len(cells) != domain.dim:
        raise ValueError("one cell count per spatial axis is required")
    if any(c < 1 for c in cells) or int(time_slabs) < 1:
        raise ValueError("cell and slab counts must be >= 1")
    breakpoints = breakpoints or [None] * domain.dim
    nodes = [_axis_nodes(a, b, c, bp) for (a, b), c, bp in zip(domain.space_box, cells, breakpoints)]
    tnodes = np.linspace(0.0, domain.T, int(time_slabs) + 1)
    return SpaceTimeMesh(domain, nodes, tnodes)
