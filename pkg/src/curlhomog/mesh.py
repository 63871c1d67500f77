"""Uniform staggered grids on boxes and their mimetic difference operators.

Degrees of freedom follow the lowest-order Yee / Whitney layout:

* nodes carry scalar potentials,
* edges carry the tangential component of a vector field (averaged along
  the edge),
* faces carry the normal component (averaged over the face),
* cells carry densities.

All operators are built from integer incidence matrices whose rows are then
scaled by a single spacing, so ``curl @ grad`` and ``div @ curl`` are
structurally zero.  Every stratum is enumerated lexicographically in C order
(x index slowest), orientation blocks in the order x, y, z.  Positive axis
directions define edge and face orientation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import GridMismatch, InvalidArgument

STRATA = ("node", "edge", "face", "cell")


def _diff(n: int) -> sp.csr_matrix:
    """(n, n+1) forward difference with entries -1, +1."""
    return sp.diags([-np.ones(n), np.ones(n)], [0, 1], shape=(n, n + 1), format="csr")


def _avg(n: int) -> sp.csr_matrix:
    return sp.diags([0.5 * np.ones(n), 0.5 * np.ones(n)], [0, 1], shape=(n, n + 1), format="csr")


def _pdiff(n: int) -> sp.csr_matrix:
    """Periodic forward difference (n, n)."""
    D = sp.lil_matrix((n, n))
    for i in range(n):
        D[i, i] -= 1.0
        D[i, (i + 1) % n] += 1.0
    return D.tocsr()


def _pavg(n: int) -> sp.csr_matrix:
    M = sp.lil_matrix((n, n))
    for i in range(n):
        M[i, i] += 0.5
        M[i, (i + 1) % n] += 0.5
    return M.tocsr()


def _eye(n: int) -> sp.csr_matrix:
    return sp.identity(n, format="csr")


def _kron3(a, b, c) -> sp.csr_matrix:
    return sp.kron(sp.kron(a, b), c, format="csr")


def _end_weights(n: int) -> np.ndarray:
    """Dual-length weights along one axis for n+1 points: 1/2 at the ends."""
    w = np.ones(n + 1)
    w[0] = w[-1] = 0.5
    return w


def _points(axes):
    X = np.meshgrid(*axes, indexing="ij")
    return np.stack([x.ravel() for x in X], axis=1)


class _GridBase:
    """Operator assembly shared by the box grid and the periodic torus."""

    # subclasses provide: h (3,), node_shape, edge_shapes, face_shapes,
    # cell_shape, _d(axis), _a(axis), _e(axis, kind)

    @cached_property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    @cached_property
    def n_edges(self) -> int:
        return int(sum(np.prod(s) for s in self.edge_shapes))

    @cached_property
    def n_faces(self) -> int:
        return int(sum(np.prod(s) for s in self.face_shapes))

    @cached_property
    def n_cells(self) -> int:
        return int(np.prod(self.cell_shape))

    def count(self, stratum: str) -> int:
        return {"node": self.n_nodes, "edge": self.n_edges,
                "face": self.n_faces, "cell": self.n_cells}[stratum]

    @cached_property
    def edge_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([np.prod(s) for s in self.edge_shapes])]).astype(int)

    @cached_property
    def face_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([np.prod(s) for s in self.face_shapes])]).astype(int)

    @cached_property
    def edge_dirs(self) -> np.ndarray:
        return np.repeat(np.arange(3), np.diff(self.edge_offsets))

    @cached_property
    def face_dirs(self) -> np.ndarray:
        return np.repeat(np.arange(3), np.diff(self.face_offsets))

    def edge_block(self, values, axis):
        """View of the orientation-``axis`` block of an edge array, reshaped."""
        o = self.edge_offsets
        return np.asarray(values)[o[axis]:o[axis + 1]].reshape(self.edge_shapes[axis])

    def face_block(self, values, axis):
        o = self.face_offsets
        return np.asarray(values)[o[axis]:o[axis + 1]].reshape(self.face_shapes[axis])

    # -- incidence ---------------------------------------------------------
    def _ops(self, axis, kinds):
        """Kronecker product with kinds[k] in {'d', 'a', 'i'} applied per axis."""
        mats = []
        for k in range(3):
            mats.append({"d": self._d, "a": self._a, "i": self._i}[kinds[k]](k))
        return _kron3(*mats)

    @cached_property
    def grad(self) -> sp.csr_matrix:
        """Nodes -> edges, value = difference / edge length."""
        h = self.h
        blocks = [self._ops(0, "dii") / h[0], self._ops(1, "idi") / h[1], self._ops(2, "iid") / h[2]]
        return sp.vstack(blocks, format="csr")

    @cached_property
    def curl(self) -> sp.csr_matrix:
        """Edges -> faces, value = circulation / face area."""
        h = self.h
        Z = [None] * 3
        # x-faces: d_y u_z - d_z u_y
        Z[0] = [None, -self._face_edge(0, 1, 2) / h[2], self._face_edge(0, 2, 1) / h[1]]
        # y-faces: d_z u_x - d_x u_z
        Z[1] = [self._face_edge(1, 0, 2) / h[2], None, -self._face_edge(1, 2, 0) / h[0]]
        # z-faces: d_x u_y - d_y u_x
        Z[2] = [-self._face_edge(2, 0, 1) / h[1], self._face_edge(2, 1, 0) / h[0], None]
        blocks = []
        for f in range(3):
            row = []
            for e in range(3):
                blk = Z[f][e]
                if blk is None:
                    blk = sp.csr_matrix((int(np.prod(self.face_shapes[f])), int(np.prod(self.edge_shapes[e]))))
                row.append(blk)
            blocks.append(row)
        return sp.bmat(blocks, format="csr")

    def _face_edge(self, face_axis, edge_axis, diff_axis):
        """Difference of ``edge_axis`` edges along ``diff_axis`` landing on ``face_axis`` faces."""
        kinds = ["i", "i", "i"]
        kinds[diff_axis] = "d"
        return self._ops(None, kinds)

    @cached_property
    def div(self) -> sp.csr_matrix:
        """Faces -> cells, value = net outward flux / cell volume."""
        h = self.h
        blocks = [self._ops(0, "dii") / h[0], self._ops(1, "idi") / h[1], self._ops(2, "iid") / h[2]]
        return sp.hstack(blocks, format="csr")

    # -- averaging to cells ------------------------------------------------
    @cached_property
    def edge_to_cell(self):
        """Per orientation, (n_cells, n_edges) averaging of the 4 parallel cell edges."""
        out = []
        for axis in range(3):
            kinds = ["a", "a", "a"]
            kinds[axis] = "i"
            blk = self._ops(None, kinds)
            cols = [sp.csr_matrix((self.n_cells, int(np.prod(s)))) for s in self.edge_shapes]
            cols[axis] = blk
            out.append(sp.hstack(cols, format="csr"))
        return out

    @cached_property
    def face_to_cell(self):
        """Per orientation, (n_cells, n_faces) averaging of the 2 parallel cell faces."""
        out = []
        for axis in range(3):
            kinds = ["i", "i", "i"]
            kinds[axis] = "a"
            blk = self._ops(None, kinds)
            cols = [sp.csr_matrix((self.n_cells, int(np.prod(s)))) for s in self.face_shapes]
            cols[axis] = blk
            out.append(sp.hstack(cols, format="csr"))
        return out

    @cached_property
    def node_to_cell(self):
        return self._ops(None, "aaa")

    def cell_vectors(self, values, stratum):
        """Average an edge or face field to a (n_cells, 3) array of cell vectors."""
        avg = self.edge_to_cell if stratum == "edge" else self.face_to_cell
        return np.stack([A @ values for A in avg], axis=1)

    # -- coefficient-weighted mass matrices --------------------------------
    def _tensor_mass(self, stratum, tensor):
        """Quadrature of (T v, w) for edge or face fields.

        Diagonal entries of T are sampled at the DOF locations and weighted
        by the dual volumes; off-diagonal couplings use cell-centre samples
        acting on cell averages of the parallel DOFs.  Transposing T
        transposes the returned matrix exactly.
        """
        if stratum == "edge":
            pts, dirs, vol, avg = self.edge_points, self.edge_dirs, self.edge_volumes, self.edge_to_cell
        else:
            pts, dirs, vol, avg = self.face_points, self.face_dirs, self.face_volumes, self.face_to_cell
        if tensor is None:
            return sp.diags(vol, format="csr")
        T_dof = tensor(pts)
        diag = vol * T_dof[np.arange(len(dirs)), dirs, dirs]
        M = sp.diags(diag, format="csr")
        T_cell = tensor(self.cell_points)
        cv = self.cell_volumes
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                w = cv * T_cell[:, i, j]
                if not np.any(w):
                    continue
                M = M + avg[i].T @ sp.diags(w) @ avg[j]
        return M.tocsr()

    def edge_mass(self, tensor=None) -> sp.csr_matrix:
        """Edge mass matrix, optionally weighted by a tensor field ``tensor(points) -> (m, 3, 3)``."""
        return self._tensor_mass("edge", tensor)

    def face_mass(self, tensor=None) -> sp.csr_matrix:
        return self._tensor_mass("face", tensor)


@dataclass(frozen=True, eq=False)
class StaggeredGrid(_GridBase):
    """Uniform staggered grid on the box ``origin + [0, extent]``."""

    origin: tuple
    extent: tuple
    cells: tuple

    def __eq__(self, other):
        return (isinstance(other, StaggeredGrid) and self.origin == other.origin
                and self.extent == other.extent and self.cells == other.cells)

    def __hash__(self):
        return hash((self.origin, self.extent, self.cells))

    def __repr__(self):
        return f"StaggeredGrid(origin={self.origin}, extent={self.extent}, cells={self.cells})"

    @cached_property
    def h(self) -> np.ndarray:
        return np.asarray(self.extent, dtype=float) / np.asarray(self.cells)

    @property
    def periodic(self) -> bool:
        return False

    @cached_property
    def node_shape(self):
        nx, ny, nz = self.cells
        return (nx + 1, ny + 1, nz + 1)

    @cached_property
    def cell_shape(self):
        return tuple(self.cells)

    @cached_property
    def edge_shapes(self):
        nx, ny, nz = self.cells
        return [(nx, ny + 1, nz + 1), (nx + 1, ny, nz + 1), (nx + 1, ny + 1, nz)]

    @cached_property
    def face_shapes(self):
        nx, ny, nz = self.cells
        return [(nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz + 1)]

    def _d(self, k):
        return _diff(self.cells[k])

    def _a(self, k):
        return _avg(self.cells[k])

    def _i(self, k):
        return _eye(self.cells[k] + 1)

    def _ops(self, axis, kinds):
        # 'i' on an axis that is differenced elsewhere must match the
        # stratum: cell-sized identities where the operand lives on cells.
        mats = []
        for k in range(3):
            c = kinds[k]
            mats.append({"d": self._d, "a": self._a, "i": self._i, "c": lambda k: _eye(self.cells[k])}[c](k))
        return _kron3(*mats)

    @cached_property
    def grad(self):
        h = self.h
        return sp.vstack([self._ops(0, "dii") / h[0], self._ops(1, "idi") / h[1],
                          self._ops(2, "iid") / h[2]], format="csr")

    def _face_edge(self, face_axis, edge_axis, diff_axis):
        # edge of orientation edge_axis has cell-length along edge_axis and
        # node-length elsewhere; the face of orientation face_axis has
        # node-length along face_axis and cell-length elsewhere.
        kinds = []
        for k in range(3):
            if k == diff_axis:
                kinds.append("d")
            elif k == edge_axis:
                kinds.append("c")
            else:  # k == face_axis
                kinds.append("i")
        return self._ops(None, kinds)

    @cached_property
    def div(self):
        h = self.h
        return sp.hstack([self._ops(0, "dcc") / h[0], self._ops(1, "cdc") / h[1],
                          self._ops(2, "ccd") / h[2]], format="csr")

    @cached_property
    def edge_to_cell(self):
        out = []
        for axis in range(3):
            kinds = ["a", "a", "a"]
            kinds[axis] = "c"
            blk = self._ops(None, kinds)
            cols = [sp.csr_matrix((self.n_cells, int(np.prod(s)))) for s in self.edge_shapes]
            cols[axis] = blk
            out.append(sp.hstack(cols, format="csr"))
        return out

    @cached_property
    def face_to_cell(self):
        out = []
        for axis in range(3):
            kinds = ["c", "c", "c"]
            kinds[axis] = "a"
            blk = self._ops(None, kinds)
            cols = [sp.csr_matrix((self.n_cells, int(np.prod(s)))) for s in self.face_shapes]
            cols[axis] = blk
            out.append(sp.hstack(cols, format="csr"))
        return out

    # -- geometry ------------------------------------------------------------
    def _axis_nodes(self, k):
        return self.origin[k] + self.h[k] * np.arange(self.cells[k] + 1)

    def _axis_centres(self, k):
        return self.origin[k] + self.h[k] * (np.arange(self.cells[k]) + 0.5)

    @cached_property
    def node_points(self):
        return _points([self._axis_nodes(k) for k in range(3)])

    @cached_property
    def cell_points(self):
        return _points([self._axis_centres(k) for k in range(3)])

    @cached_property
    def edge_points(self):
        out = []
        for axis in range(3):
            out.append(_points([self._axis_centres(k) if k == axis else self._axis_nodes(k) for k in range(3)]))
        return np.concatenate(out)

    @cached_property
    def face_points(self):
        out = []
        for axis in range(3):
            out.append(_points([self._axis_nodes(k) if k == axis else self._axis_centres(k) for k in range(3)]))
        return np.concatenate(out)

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @cached_property
    def cell_volumes(self):
        return np.full(self.n_cells, self.cell_volume)

    @cached_property
    def node_volumes(self):
        w = [_end_weights(n) for n in self.cells]
        return self.cell_volume * np.einsum("i,j,k->ijk", *w).ravel()

    @cached_property
    def edge_volumes(self):
        out = []
        for axis in range(3):
            w = [np.ones(self.cells[k]) if k == axis else _end_weights(self.cells[k]) for k in range(3)]
            out.append(np.einsum("i,j,k->ijk", *w).ravel())
        return self.cell_volume * np.concatenate(out)

    @cached_property
    def face_volumes(self):
        out = []
        for axis in range(3):
            w = [_end_weights(self.cells[k]) if k == axis else np.ones(self.cells[k]) for k in range(3)]
            out.append(np.einsum("i,j,k->ijk", *w).ravel())
        return self.cell_volume * np.concatenate(out)

    @cached_property
    def edge_lengths(self):
        return self.h[self.edge_dirs]

    @cached_property
    def face_areas(self):
        return self.cell_volume / self.h[self.face_dirs]

    # -- boundary strata -----------------------------------------------------
    @cached_property
    def boundary_node_mask(self):
        i, j, k = np.indices(self.node_shape)
        nx, ny, nz = self.cells
        return ((i == 0) | (i == nx) | (j == 0) | (j == ny) | (k == 0) | (k == nz)).ravel()

    @cached_property
    def boundary_edge_mask(self):
        out = []
        for axis, shape in enumerate(self.edge_shapes):
            idx = np.indices(shape)
            m = np.zeros(shape, dtype=bool)
            for k in range(3):
                if k != axis:
                    m |= (idx[k] == 0) | (idx[k] == self.cells[k])
            out.append(m.ravel())
        return np.concatenate(out)

    @cached_property
    def boundary_face_mask(self):
        out = []
        for axis, shape in enumerate(self.face_shapes):
            idx = np.indices(shape)[axis]
            out.append(((idx == 0) | (idx == self.cells[axis])).ravel())
        return np.concatenate(out)

    @cached_property
    def boundary_nodes(self):
        return np.flatnonzero(self.boundary_node_mask)

    @cached_property
    def interior_nodes(self):
        return np.flatnonzero(~self.boundary_node_mask)

    @cached_property
    def boundary_edges(self):
        return np.flatnonzero(self.boundary_edge_mask)

    @cached_property
    def interior_edges(self):
        return np.flatnonzero(~self.boundary_edge_mask)

    @cached_property
    def boundary_faces(self):
        return np.flatnonzero(self.boundary_face_mask)

    @cached_property
    def interior_faces(self):
        return np.flatnonzero(~self.boundary_face_mask)

    @cached_property
    def boundary_face_normal_sign(self):
        """Outward normal sign (+1/-1) of each boundary face, along its axis."""
        out = []
        for axis, shape in enumerate(self.face_shapes):
            idx = np.indices(shape)[axis].ravel()
            s = np.zeros(idx.shape)
            s[idx == 0] = -1.0
            s[idx == self.cells[axis]] = 1.0
            out.append(s)
        return np.concatenate(out)[self.boundary_faces]

    @cached_property
    def boundary_face_side(self):
        """Side label 0..5 (2*axis + (0 low, 1 high)) of each boundary face."""
        axes = self.face_dirs[self.boundary_faces]
        return 2 * axes + (self.boundary_face_normal_sign > 0)

    @cached_property
    def boundary_area(self) -> float:
        return float(self.face_areas[self.boundary_faces].sum())

    @cached_property
    def centre(self):
        return np.asarray(self.origin) + 0.5 * np.asarray(self.extent)


@dataclass(frozen=True, eq=False)
class PeriodicGrid(_GridBase):
    """Uniform staggered grid on the flat torus ``[0, extent)`` with periodic wrap.

    Nodes, cells and each orientation block of edges and faces all carry
    ``prod(cells)`` DOFs.
    """

    extent: tuple
    cells: tuple

    def __eq__(self, other):
        return isinstance(other, PeriodicGrid) and self.extent == other.extent and self.cells == other.cells

    def __hash__(self):
        return hash(("torus", self.extent, self.cells))

    @property
    def periodic(self) -> bool:
        return True

    @cached_property
    def origin(self):
        return (0.0, 0.0, 0.0)

    @cached_property
    def h(self):
        return np.asarray(self.extent, dtype=float) / np.asarray(self.cells)

    @cached_property
    def node_shape(self):
        return tuple(self.cells)

    @cached_property
    def cell_shape(self):
        return tuple(self.cells)

    @cached_property
    def edge_shapes(self):
        return [tuple(self.cells)] * 3

    @cached_property
    def face_shapes(self):
        return [tuple(self.cells)] * 3

    def _d(self, k):
        return _pdiff(self.cells[k])

    def _a(self, k):
        return _pavg(self.cells[k])

    def _i(self, k):
        return _eye(self.cells[k])

    def _face_edge(self, face_axis, edge_axis, diff_axis):
        kinds = ["i", "i", "i"]
        kinds[diff_axis] = "d"
        return _GridBase._ops(self, None, kinds)

    def _axis(self, k, shift):
        return self.h[k] * (np.arange(self.cells[k]) + shift)

    @cached_property
    def node_points(self):
        return _points([self._axis(k, 0.0) for k in range(3)])

    @cached_property
    def cell_points(self):
        return _points([self._axis(k, 0.5) for k in range(3)])

    @cached_property
    def edge_points(self):
        return np.concatenate([_points([self._axis(k, 0.5 if k == a else 0.0) for k in range(3)]) for a in range(3)])

    @cached_property
    def face_points(self):
        return np.concatenate([_points([self._axis(k, 0.0 if k == a else 0.5) for k in range(3)]) for a in range(3)])

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @cached_property
    def cell_volumes(self):
        return np.full(self.n_cells, self.cell_volume)

    @cached_property
    def node_volumes(self):
        return np.full(self.n_nodes, self.cell_volume)

    @cached_property
    def edge_volumes(self):
        return np.full(self.n_edges, self.cell_volume)

    @cached_property
    def face_volumes(self):
        return np.full(self.n_faces, self.cell_volume)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))


def build_grid(origin, extent, cells) -> StaggeredGrid:
    """Build a uniform staggered grid on an axis-aligned box.

    Raises :class:`InvalidArgument` for nonpositive extents or fewer than two
    cells along any axis.
    """
    origin = tuple(float(x) for x in np.broadcast_to(np.asarray(origin, dtype=float), (3,)))
    extent = tuple(float(x) for x in np.broadcast_to(np.asarray(extent, dtype=float), (3,)))
    cells_arr = np.broadcast_to(np.asarray(cells), (3,))
    if not np.all(np.asarray(extent) > 0) or not np.all(np.isfinite(extent)):
        raise InvalidArgument(f"extent must be positive, got {extent}")
    if np.any(cells_arr != np.floor(cells_arr)) or np.any(cells_arr < 2):
        raise InvalidArgument(f"need at least 2 cells per axis, got {tuple(cells_arr)}")
    return StaggeredGrid(origin, extent, tuple(int(c) for c in cells_arr))


def build_torus(cells, extent=1.0) -> PeriodicGrid:
    cells_arr = np.broadcast_to(np.asarray(cells), (3,))
    if np.any(cells_arr < 2):
        raise InvalidArgument(f"need at least 2 cells per axis, got {tuple(cells_arr)}")
    extent = tuple(float(x) for x in np.broadcast_to(np.asarray(extent, dtype=float), (3,)))
    return PeriodicGrid(extent, tuple(int(c) for c in cells_arr))


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

class Field:
    """Values attached to one stratum of a grid."""

    stratum = None

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size != grid.count(self.stratum):
            raise InvalidArgument(
                f"{type(self).__name__} needs {grid.count(self.stratum)} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidArgument(f"{type(self).__name__} values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.count(cls.stratum)))

    def _check(self, other):
        if type(other) is not type(self):
            raise GridMismatch(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.grid != self.grid:
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return type(self)(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return type(self)(self.grid, self.values - other.values)

    def __neg__(self):
        return type(self)(self.grid, -self.values)

    def __mul__(self, c):
        return type(self)(self.grid, float(c) * self.values)

    __rmul__ = __mul__

    def __repr__(self):
        return f"{type(self).__name__}(n={self.values.size}, max={np.abs(self.values).max(initial=0):.3g})"

    @property
    def points(self):
        return getattr(self.grid, f"{self.stratum}_points")


class NodeField(Field):
    stratum = "node"

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, np.asarray(fn(grid.node_points), dtype=float).reshape(-1))


class CellField(Field):
    stratum = "cell"

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, np.asarray(fn(grid.cell_points), dtype=float).reshape(-1))


class EdgeField(Field):
    stratum = "edge"

    @classmethod
    def from_function(cls, grid, fn):
        """Sample the tangential component of ``fn(points) -> (m, 3)`` at edge midpoints."""
        v = np.asarray(fn(grid.edge_points), dtype=float)
        return cls(grid, v[np.arange(grid.n_edges), grid.edge_dirs])

    def block(self, axis):
        return self.grid.edge_block(self.values, axis)

    def cell_vectors(self):
        return self.grid.cell_vectors(self.values, "edge")


class FaceField(Field):
    stratum = "face"

    @classmethod
    def from_function(cls, grid, fn):
        """Sample the normal component of ``fn(points) -> (m, 3)`` at face centres."""
        v = np.asarray(fn(grid.face_points), dtype=float)
        return cls(grid, v[np.arange(grid.n_faces), grid.face_dirs])

    def block(self, axis):
        return self.grid.face_block(self.values, axis)

    def cell_vectors(self):
        return self.grid.cell_vectors(self.values, "face")


def _same_grid(field, cls):
    if not isinstance(field, cls):
        raise GridMismatch(f"expected {cls.__name__}, got {type(field).__name__}")
    return field.grid


def discrete_grad(p: NodeField) -> EdgeField:
    grid = _same_grid(p, NodeField)
    return EdgeField(grid, grid.grad @ p.values)


def discrete_curl(u: EdgeField) -> FaceField:
    grid = _same_grid(u, EdgeField)
    return FaceField(grid, grid.curl @ u.values)


def discrete_div(v: FaceField) -> CellField:
    grid = _same_grid(v, FaceField)
    return CellField(grid, grid.div @ v.values)


# ---------------------------------------------------------------------------
# Boundary traces
# ---------------------------------------------------------------------------

class BoundaryTrace:
    """Boundary data of a box grid.

    ``tangential`` holds, for every boundary edge (ordered as
    ``grid.boundary_edges``), the tangential component u.t of a field u along
    the positively oriented edge.  On a boundary face with outward normal n
    these values encode the rotated field n x u: its in-surface flux across
    an edge of the face is minus the counter-clockwise circulation density.
    ``normal`` optionally holds n.v on boundary faces (ordered as
    ``grid.boundary_faces``), with n the outward normal.
    """

    def __init__(self, grid: StaggeredGrid, tangential=None, normal=None):
        self.grid = grid
        nb_e, nb_f = grid.boundary_edges.size, grid.boundary_faces.size
        self.tangential = np.zeros(nb_e) if tangential is None else np.asarray(tangential, dtype=float)
        self.normal = None if normal is None else np.asarray(normal, dtype=float)
        if self.tangential.shape != (nb_e,):
            raise InvalidArgument(f"tangential trace needs {nb_e} values, got {self.tangential.shape}")
        if self.normal is not None and self.normal.shape != (nb_f,):
            raise InvalidArgument(f"normal trace needs {nb_f} values, got {self.normal.shape}")
        if not np.all(np.isfinite(self.tangential)) or (self.normal is not None and not np.all(np.isfinite(self.normal))):
            raise InvalidArgument("boundary trace values must be finite")

    @classmethod
    def zeros(cls, grid):
        return cls(grid)

    @classmethod
    def from_function(cls, grid, fn):
        """Tangential trace of a vector function sampled at boundary-edge midpoints."""
        return tangential_trace(EdgeField.from_function(grid, fn))

    def is_tangential(self, tol=1e-12) -> bool:
        if self.normal is None:
            return True
        scale = max(1.0, np.abs(self.tangential).max(initial=0.0))
        return bool(np.abs(self.normal).max(initial=0.0) <= tol * scale)

    def __repr__(self):
        return f"BoundaryTrace(edges={self.tangential.size}, max={np.abs(self.tangential).max(initial=0):.3g})"


def tangential_trace(u: EdgeField) -> BoundaryTrace:
    grid = _same_grid(u, EdgeField)
    return BoundaryTrace(grid, u.values[grid.boundary_edges])


def normal_trace(v: FaceField) -> BoundaryTrace:
    """n.v on boundary faces (outward normal), with an empty tangential part."""
    grid = _same_grid(v, FaceField)
    return BoundaryTrace(grid, normal=grid.boundary_face_normal_sign * v.values[grid.boundary_faces])


def _surface_curl_matrix(grid):
    # rows of curl for boundary faces only touch boundary edges
    return grid.curl[grid.boundary_faces][:, grid.boundary_edges].tocsr()


def surface_divergence(f: BoundaryTrace, tol: float = 1e-12) -> np.ndarray:
    """Surface divergence of the tangential field n x u encoded by ``f``.

    Returns one value per boundary face (ordered as ``grid.boundary_faces``).
    Equals minus the outward normal component of the discrete curl of any
    edge field whose tangential trace is ``f``; the values integrate to zero
    over the closed boundary.
    """
    if not f.is_tangential(tol):
        raise InvalidArgument("boundary data has a nonzero normal component")
    grid = f.grid
    S = grid.__dict__.get("_surface_curl")
    if S is None:
        S = _surface_curl_matrix(grid)
        grid.__dict__["_surface_curl"] = S
    return -(grid.boundary_face_normal_sign * (S @ f.tangential))


def boundary_face_areas(grid) -> np.ndarray:
    return grid.face_areas[grid.boundary_faces]
