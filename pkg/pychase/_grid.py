# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

"""
2D process grid, data distributions and collectives.

Ranks are cooperative workers inside one process, driven in lockstep by the
caller: every operation below loops over the ranks it concerns and the only
cross-rank data flow goes through a communicator's collectives. A rank is
addressed by its grid coordinates ``(i, j)``; ``i`` indexes grid rows and
``j`` grid columns.

Layouts of a global matrix over a p x q grid:

* full-2D (H): rank (i, j) owns rows R_i and columns K_j.
* column-1D (C, C2): rank (i, j) owns rows R_i, all columns; the blocks of
  one column communicator concatenate to the global matrix and every column
  communicator holds the same copy.
* row-1D (B, B2): rank (i, j) owns rows K_j, all columns; mirror image
  within row communicators.
"""

import abc
import dataclasses
import enum
import math
import time

import numpy as np

from ._kernels import gemm


class GridError(ValueError):
    pass


class UnsupportedRedistributionError(GridError):
    pass


class Layout(enum.Enum):
    FULL_2D = 'full-2D'
    COLUMN_1D = 'column-1D'
    ROW_1D = 'row-1D'


class DistKind(enum.Enum):
    BLOCK = 'block'
    BLOCK_CYCLIC = 'block-cyclic'


@dataclasses.dataclass(frozen=True)
class Distribution:
    kind: DistKind = DistKind.BLOCK
    mb: int = 1
    nb: int = 1

    def __post_init__(self):
        if self.mb < 1 or self.nb < 1:
            raise GridError('Block sizes must be positive, got mb=%d, nb=%d.'
                            % (self.mb, self.nb))

    @classmethod
    def block(cls):
        return cls(DistKind.BLOCK)

    @classmethod
    def block_cyclic(cls, mb, nb):
        return cls(DistKind.BLOCK_CYCLIC, mb, nb)

    def row_indices(self, n, p, i):
        """Global row indices owned by grid row `i`, ascending."""
        return self._owned(n, p, i, self.mb)

    def col_indices(self, n, q, j):
        """Global column indices owned by grid column `j`, ascending."""
        return self._owned(n, q, j, self.nb)

    def _owned(self, n, nprocs, idx, block):
        if self.kind is DistKind.BLOCK:
            # the first (n mod nprocs) grid rows get one extra index
            base, extra = divmod(n, nprocs)
            start = idx * base + min(idx, extra)
            return np.arange(start, start + base + (idx < extra))
        g = np.arange(n)
        return g[(g // block) % nprocs == idx]

    def owner(self, g, n, nprocs, block):
        """Grid index and local index of global index `g`."""
        if self.kind is DistKind.BLOCK:
            base, extra = divmod(n, nprocs)
            wide = extra * (base + 1)
            if g < wide:
                return divmod(g, base + 1)
            idx, local = divmod(g - wide, base)
            return extra + idx, local
        blk, offset = divmod(g, block)
        return blk % nprocs, (blk // nprocs) * block + offset


class CollectiveBackend(abc.ABC):
    """The contract a collective backend implements.

    Collectives take one contribution per member, in the communicator's
    member order, and return one result per member. They are the only
    synchronization points between ranks.
    """
    observer = None

    @abc.abstractmethod
    def allreduce_sum(self, ranks, contributions):
        """Element-wise sum, delivered to every member."""

    @abc.abstractmethod
    def bcast(self, ranks, buf, root):
        """Copy of `buf` (held by member `root`) for every member."""

    @abc.abstractmethod
    def barrier(self, ranks):
        """Synchronize the members."""


class InProcessBackend(CollectiveBackend):
    """Collectives between ranks living in this process.

    Sums are reduced along a fixed binary tree over the member order, so the
    result does not depend on scheduling and is bitwise reproducible.
    """

    def __init__(self, observer=None):
        self.observer = observer

    def allreduce_sum(self, ranks, contributions):
        contributions = [np.asarray(c) for c in contributions]
        if len(contributions) != len(ranks):
            raise GridError('Expected %d contributions, got %d.'
                            % (len(ranks), len(contributions)))
        shapes = sorted({c.shape for c in contributions})
        if len(shapes) != 1:
            raise GridError('Shape mismatch across members: %s.'
                            % ', '.join(str(s) for s in shapes))

        start = time.perf_counter()
        level = contributions
        while len(level) > 1:
            reduced = [level[k] + level[k + 1]
                       for k in range(0, len(level) - 1, 2)]
            if len(level) % 2:
                reduced.append(level[-1])
            level = reduced
        total = level[0]
        results = [np.array(total, copy=True) for _ in ranks]
        self._notify(ranks, total.size, time.perf_counter() - start)
        return results

    def bcast(self, ranks, buf, root):
        if root not in ranks:
            raise GridError('Root %r is not a member of %s.'
                            % (root, list(ranks)))
        start = time.perf_counter()
        buf = np.asarray(buf)
        results = [np.array(buf, copy=True) for _ in ranks]
        self._notify(ranks, buf.size, time.perf_counter() - start)
        return results

    def barrier(self, ranks):
        # lockstep execution: every member has already arrived
        pass

    def _notify(self, ranks, words, seconds):
        if self.observer is not None and len(ranks) > 1:
            self.observer.on_collective(ranks, words, seconds)


@dataclasses.dataclass(frozen=True)
class Communicator:
    coords: tuple
    ranks: tuple
    backend: CollectiveBackend

    @property
    def size(self):
        return len(self.coords)

    def allreduce_sum(self, contributions):
        return self.backend.allreduce_sum(self.ranks, contributions)

    def bcast(self, buf, root):
        """Broadcast `buf` from the member at grid coordinates `root`."""
        return self.backend.bcast(self.ranks, buf, self._rank_of(root))

    def gather(self, contributions, root):
        """Every member's contribution, delivered to `root` only.

        Each non-root member sends to the root over a two-member broadcast.
        """
        root_rank = self._rank_of(root)
        out = []
        for rank, x in zip(self.ranks, contributions):
            if rank == root_rank:
                out.append(np.array(x, copy=True))
            else:
                out.append(self.backend.bcast((rank, root_rank), x,
                                              rank)[1])
        return out

    def scatter(self, pieces, root):
        """Piece k, held by `root`, delivered to member k."""
        root_rank = self._rank_of(root)
        out = []
        for rank, x in zip(self.ranks, pieces):
            if rank == root_rank:
                out.append(np.array(x, copy=True))
            else:
                out.append(self.backend.bcast((root_rank, rank), x,
                                              root_rank)[1])
        return out

    def _rank_of(self, root):
        if root not in self.coords:
            raise GridError('Root %r is not a member of this communicator.'
                            % (root,))
        return self.ranks[self.coords.index(root)]

    def barrier(self):
        self.backend.barrier(self.ranks)


def allreduce_sum(local, comm):
    return comm.allreduce_sum(local)


def bcast(buf, root, comm):
    return comm.bcast(buf, root)


class GridTopology:
    """A p x q grid of ranks with its row and column communicators.

    Rank ids are row-major: rank(i, j) = i*q + j. Row communicator `i` holds
    the q ranks of grid row i, column communicator `j` the p ranks of grid
    column j.
    """

    def __init__(self, p, q, backend=None):
        if p < 1 or q < 1:
            raise GridError('Grid dimensions must be positive, got %dx%d.'
                            % (p, q))
        self.p = p
        self.q = q
        self.backend = backend if backend is not None else InProcessBackend()
        self._row_comms = tuple(
            self._communicator([(i, j) for j in range(q)]) for i in range(p))
        self._col_comms = tuple(
            self._communicator([(i, j) for i in range(p)]) for j in range(q))

    def _communicator(self, coords):
        return Communicator(tuple(coords),
                            tuple(self.rank(c) for c in coords),
                            self.backend)

    @property
    def shape(self):
        return self.p, self.q

    @property
    def size(self):
        return self.p * self.q

    def rank(self, coord):
        i, j = coord
        return i * self.q + j

    def coords(self):
        return [(i, j) for i in range(self.p) for j in range(self.q)]

    def row_comm(self, i):
        return self._row_comms[i]

    def col_comm(self, j):
        return self._col_comms[j]

    def __repr__(self):
        return 'GridTopology(%dx%d)' % (self.p, self.q)


def create_grid(num_ranks, backend=None):
    """As-square-as-possible p x q grid with p >= q and p*q = num_ranks."""
    if num_ranks < 1:
        raise GridError('Need at least one rank, got %d.' % num_ranks)
    for q in range(math.isqrt(num_ranks), 0, -1):
        if num_ranks % q == 0:
            return GridTopology(num_ranks // q, q, backend)


def parse_grid(text):
    """Parse ``PxQ`` into ``(p, q)``."""
    try:
        p, q = (int(part) for part in text.lower().split('x'))
    except ValueError:
        raise GridError('Grid must be given as PxQ, got %r.' % text)
    if p < 1 or q < 1:
        raise GridError('Grid dimensions must be positive, got %r.' % text)
    return p, q


class DistributedMatrix:
    """The per-rank blocks of a global matrix in one of the three layouts.
    """

    def __init__(self, topo, dist, layout, shape, blocks):
        self.topo = topo
        self.dist = dist
        self.layout = layout
        self.shape = tuple(shape)
        self.blocks = blocks

    @property
    def n_rows(self):
        return self.shape[0]

    @property
    def dtype(self):
        return next(iter(self.blocks.values())).dtype

    def __getitem__(self, coord):
        return self.blocks[coord]

    def row_indices(self, coord):
        i, j = coord
        n = self.shape[0]
        if self.layout is Layout.ROW_1D:
            return self.dist.col_indices(n, self.topo.q, j)
        return self.dist.row_indices(n, self.topo.p, i)

    def col_indices(self, coord):
        if self.layout is Layout.FULL_2D:
            return self.dist.col_indices(self.shape[1], self.topo.q, coord[1])
        return np.arange(self.shape[1])

    def diagonal_positions(self, coord):
        """Local (row, col) positions of global diagonal entries."""
        _, rows, cols = np.intersect1d(
            self.row_indices(coord), self.col_indices(coord),
            assume_unique=True, return_indices=True)
        return rows, cols

    def entry(self, g_row, g_col):
        """Element (g_row, g_col) of a full-2D matrix, read on its owner."""
        if self.layout is not Layout.FULL_2D:
            raise GridError('Entry lookup needs a full-2D matrix.')
        i, r = self.dist.owner(g_row, self.shape[0], self.topo.p,
                               self.dist.mb)
        j, c = self.dist.owner(g_col, self.shape[1], self.topo.q,
                               self.dist.nb)
        return self.blocks[(i, j)][r, c]

    def gather(self, check_replicas=False):
        """Reassemble the global matrix.

        1D layouts are read from the first column (row) communicator. With
        `check_replicas` every other replica must match it exactly.
        """
        out = np.zeros(self.shape, dtype=self.dtype, order='F')
        if self.layout is Layout.FULL_2D:
            sources = self.topo.coords()
        elif self.layout is Layout.COLUMN_1D:
            sources = self.topo.col_comm(0).coords
        else:
            sources = self.topo.row_comm(0).coords
        for coord in sources:
            out[np.ix_(self.row_indices(coord),
                       self.col_indices(coord))] = self.blocks[coord]

        if check_replicas and self.layout is not Layout.FULL_2D:
            for coord in self.topo.coords():
                expected = out[np.ix_(self.row_indices(coord),
                                      self.col_indices(coord))]
                if not np.array_equal(expected, self.blocks[coord]):
                    raise GridError('Replica on rank %r differs from the '
                                    'reference copy.' % (coord,))
        return out


def distribute(matrix, dist, topo, layout=Layout.FULL_2D):
    """Split a global matrix into per-rank blocks."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise GridError('Expected a 2D matrix, got %d dimensions.'
                        % matrix.ndim)
    n, m = matrix.shape
    needed = {Layout.FULL_2D: (topo.p, topo.q),
              Layout.COLUMN_1D: (topo.p, 1),
              Layout.ROW_1D: (topo.q, 1)}[layout]
    if layout is Layout.FULL_2D and n != m:
        raise GridError('A full-2D layout needs a square matrix, got %dx%d.'
                        % (n, m))
    if n < needed[0] or m < needed[1]:
        raise GridError('A %dx%d matrix cannot be split over a %dx%d grid '
                        'in the %s layout.'
                        % (n, m, topo.p, topo.q, layout.value))

    result = DistributedMatrix(topo, dist, layout, (n, m), {})
    for coord in topo.coords():
        rows = result.row_indices(coord)
        cols = result.col_indices(coord)
        if rows.size == 0 or cols.size == 0:
            raise GridError('Rank %r would own an empty block of the %dx%d '
                            'matrix; reduce the block size or the grid.'
                            % (coord, n, m))
        result.blocks[coord] = np.asfortranarray(matrix[np.ix_(rows, cols)])
    return result


def memory_model(n, n_e, p, q):
    """Elements held per rank: N^2/pq + 2N n_e/p + 2N n_e/q + n_e^2.

    An int when every term divides evenly, a float otherwise.
    """
    terms = [(n * n, p * q), (2 * n * n_e, p), (2 * n * n_e, q)]
    if all(num % den == 0 for num, den in terms):
        return sum(num // den for num, den in terms) + n_e * n_e
    return sum(num / den for num, den in terms) + n_e * n_e


@dataclasses.dataclass
class RankBuffers:
    H: np.ndarray
    C: np.ndarray
    C2: np.ndarray
    B: np.ndarray
    B2: np.ndarray
    A: np.ndarray

    def element_count(self):
        return sum(getattr(self, f.name).size
                   for f in dataclasses.fields(self))


_C_TYPE = ('C', 'C2')
_B_TYPE = ('B', 'B2')


class Workspace:
    """The solver's buffers on every rank of the grid."""

    def __init__(self, H, n_e):
        if H.layout is not Layout.FULL_2D:
            raise GridError('The operator must be distributed full-2D.')
        if not 1 <= n_e <= H.n_rows:
            raise GridError('Subspace size %d is not within [1, %d].'
                            % (n_e, H.n_rows))
        self.H = H
        self.topo = H.topo
        self.dist = H.dist
        self.n = H.n_rows
        self.n_e = n_e
        self.dtype = H.dtype
        self.buffers = {}
        for coord in self.topo.coords():
            n_r = H.row_indices(coord).size
            n_c = H.col_indices(coord).size
            shape_c = (n_r, n_e)
            shape_b = (n_c, n_e)
            self.buffers[coord] = RankBuffers(
                H=H.blocks[coord],
                C=np.zeros(shape_c, self.dtype, order='F'),
                C2=np.zeros(shape_c, self.dtype, order='F'),
                B=np.zeros(shape_b, self.dtype, order='F'),
                B2=np.zeros(shape_b, self.dtype, order='F'),
                A=np.zeros((n_e, n_e), self.dtype, order='F'))

    def view(self, name):
        return {coord: getattr(buf, name)
                for coord, buf in self.buffers.items()}

    def _layout(self, name):
        if name in _C_TYPE:
            return Layout.COLUMN_1D
        if name in _B_TYPE:
            return Layout.ROW_1D
        raise GridError('%r is not a C- or B-type buffer.' % name)

    def scatter(self, name, matrix):
        """Fill a C- or B-type buffer from a global N x n_e matrix."""
        matrix = np.asarray(matrix)
        if matrix.shape != (self.n, self.n_e):
            raise GridError('Expected a %dx%d matrix, got %s.'
                            % (self.n, self.n_e, matrix.shape))
        local = distribute(matrix, self.dist, self.topo, self._layout(name))
        for coord, block in local.blocks.items():
            getattr(self.buffers[coord], name)[...] = block

    def as_distributed(self, name, cols=slice(None)):
        blocks = {coord: buf[:, cols]
                  for coord, buf in self.view(name).items()}
        n_cols = next(iter(blocks.values())).shape[1]
        return DistributedMatrix(self.topo, self.dist, self._layout(name),
                                 (self.n, n_cols), blocks)

    def gather(self, name, cols=slice(None)):
        return self.as_distributed(name, cols).gather()

    def permute_columns(self, perm, names=_C_TYPE):
        for buf in self.buffers.values():
            for name in names:
                block = getattr(buf, name)
                block[...] = block[:, perm]

    def element_count(self, coord):
        return self.buffers[coord].element_count()


def check_redistribution(topo, dist):
    """Raise if C -> B redistribution is undefined for this grid."""
    if topo.size == 1 or dist.kind is DistKind.BLOCK:
        return
    if topo.p != topo.q or dist.mb != dist.nb:
        raise UnsupportedRedistributionError(
            'Redistributing C into B is not supported for a block-cyclic '
            'distribution on a %dx%d grid with mb=%d, nb=%d; use a square '
            'grid with mb == nb or a block distribution.'
            % (topo.p, topo.q, dist.mb, dist.nb))


def redistribute_c_to_b(H, src, dst, cols=slice(None)):
    """Copy a column-1D buffer into a row-1D buffer.

    Within every column communicator each member that owns rows needed by
    the B layout broadcasts them once: one broadcast per communicator on
    square grids, p of them on p x 1 grids, none on 1 x q grids.
    """
    topo, dist, n = H.topo, H.dist, H.n_rows
    check_redistribution(topo, dist)
    for j in range(topo.q):
        comm = topo.col_comm(j)
        target = dist.col_indices(n, topo.q, j)
        for i, root in enumerate(comm.coords):
            rows = dist.row_indices(n, topo.p, i)
            _, src_pos, dst_pos = np.intersect1d(
                rows, target, assume_unique=True, return_indices=True)
            if src_pos.size == 0:
                continue
            received = comm.bcast(src[root][src_pos, cols], root)
            for member, piece in zip(comm.coords, received):
                dst[member][dst_pos, cols] = piece


def _update(block, cols, product, alpha, beta):
    if beta == 0:
        block[:, cols] = alpha * product
    else:
        block[:, cols] = alpha * product + beta * block[:, cols]


def hemm_c_to_b(H, src, dst, alpha=1.0, beta=0.0, cols=slice(None)):
    """``dst <- alpha * H^H src + beta * dst``, column-1D into row-1D."""
    for j in range(H.topo.q):
        comm = H.topo.col_comm(j)
        partial = [gemm(1.0, H.blocks[c], src[c][:, cols], op_a='C')
                   for c in comm.coords]
        for coord, total in zip(comm.coords, comm.allreduce_sum(partial)):
            _update(dst[coord], cols, total, alpha, beta)


def hemm_b_to_c(H, src, dst, alpha=1.0, beta=0.0, cols=slice(None)):
    """``dst <- alpha * H src + beta * dst``, row-1D into column-1D."""
    for i in range(H.topo.p):
        comm = H.topo.row_comm(i)
        partial = [gemm(1.0, H.blocks[c], src[c][:, cols])
                   for c in comm.coords]
        for coord, total in zip(comm.coords, comm.allreduce_sum(partial)):
            _update(dst[coord], cols, total, alpha, beta)


def column_inner(H, x, y):
    """``x^H y`` for column-1D blocks, reduced within column communicators.

    Every column communicator computes the same product; the copy of the
    first one is returned.
    """
    results = []
    for j in range(H.topo.q):
        comm = H.topo.col_comm(j)
        partial = [gemm(1.0, x[c], y[c], op_a='C') for c in comm.coords]
        results.append(comm.allreduce_sum(partial)[0])
    return results[0]
