# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import dataclasses
import enum
import logging
import time

import numpy as np

from ._caqr import QR_MODES, cond_est, orthonormalize
from ._config import ConfigError
from ._filter import (DegreeSchedule, chebyshev_filter, degree_opt,
                      sort_by_degree)
from ._format import SCALAR_DTYPES
from ._grid import (DistKind, Distribution, DistributedMatrix, GridError,
                    Layout, Workspace, check_redistribution, hemm_c_to_b,
                    redistribute_c_to_b)
from ._kernels import heevd, unit_roundoff
from ._lanczos import lanczos_bounds, update_bounds
from ._matgen import random_initial_vectors
from ._profiler import Kernel, Profiler


logger = logging.getLogger(__name__)

HERMITIAN_SAMPLES = 64
HERMITIAN_RTOL = 1e-8

DIST_KINDS = {kind.value: kind for kind in DistKind}


class SolverError(RuntimeError):
    def __init__(self, message, iteration):
        super().__init__('Iteration %d: %s' % (iteration, message))
        self.iteration = iteration


class Status(enum.Enum):
    CONVERGED = 'converged'
    NOT_CONVERGED = 'not-converged'


@dataclasses.dataclass
class SolverConfig:
    nev: int
    nex: int
    tol: float = 1e-10
    deg_init: int = 20
    deg_max: int = 36
    max_iter: int = 25
    opt: bool = True
    seed: int = 0
    qr: str = 'auto'
    lanczos_steps: int = 25
    lanczos_vectors: int = 4
    debug: bool = False
    scalar: str = 'r64'
    grid: tuple = None
    dist: str = 'block'
    mb: int = 32
    nb: int = 32

    def __post_init__(self):
        positive = ('nev', 'nex', 'max_iter', 'lanczos_vectors', 'mb', 'nb')
        for name in positive:
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError('%s must be a positive integer, got %r.'
                                  % (name, value))
        if not self.tol > 0:
            raise ConfigError('tol must be positive, got %r.' % self.tol)
        if self.deg_max < 2:
            raise ConfigError('deg_max must be at least 2, got %r.'
                              % self.deg_max)
        if self.deg_init % 2 or not 2 <= self.deg_init <= self.deg_max:
            raise ConfigError('deg_init must be even and within [2, %d], '
                              'got %r.' % (self.deg_max, self.deg_init))
        if self.lanczos_steps < 2:
            raise ConfigError('lanczos_steps must be at least 2, got %r.'
                              % self.lanczos_steps)
        if self.seed < 0:
            raise ConfigError('seed must be non-negative, got %r.'
                              % self.seed)
        if self.qr not in QR_MODES:
            raise ConfigError('qr must be one of %s, got %r.'
                              % (', '.join(QR_MODES), self.qr))
        if self.scalar not in SCALAR_DTYPES:
            raise ConfigError('scalar must be one of %s, got %r.'
                              % (', '.join(SCALAR_DTYPES), self.scalar))
        if self.dist not in DIST_KINDS:
            raise ConfigError('dist must be one of %s, got %r.'
                              % (', '.join(DIST_KINDS), self.dist))
        if self.grid is not None:
            self.grid = tuple(self.grid)
            if len(self.grid) != 2 or min(self.grid) < 1:
                raise ConfigError('grid must be a pair of positive integers, '
                                  'got %r.' % (self.grid,))

    @property
    def n_e(self):
        return self.nev + self.nex

    def check_size(self, n):
        if self.n_e > n:
            raise ConfigError('nev + nex = %d exceeds the matrix dimension '
                              '%d.' % (self.n_e, n))

    def distribution(self):
        return Distribution(DIST_KINDS[self.dist], self.mb, self.nb)


@dataclasses.dataclass
class SolverState:
    locked: int
    iteration: int
    ritzv: np.ndarray
    resd: np.ndarray
    degs: DegreeSchedule
    bounds: object


@dataclasses.dataclass
class SolverStats:
    matvecs: int = 0
    iterations: int = 0
    records: list = dataclasses.field(default_factory=list)
    qr_trace: list = dataclasses.field(default_factory=list)
    wall_s: float = 0.0

    def kernel_seconds(self, kernel):
        kernel = Kernel(kernel)
        return sum(r.compute_s + r.comm_s + r.copy_s
                   for r in self.records if r.kernel is kernel)


@dataclasses.dataclass
class SolverResult:
    status: Status
    eigenvalues: np.ndarray
    residuals: np.ndarray
    eigenvectors: DistributedMatrix
    locked: int
    stats: SolverStats
    scale: float

    @property
    def converged(self):
        return self.status is Status.CONVERGED

    def gather_eigenvectors(self):
        return self.eigenvectors.gather()


def check_hermitian(H, seed, samples=HERMITIAN_SAMPLES, rtol=HERMITIAN_RTOL):
    """Compare a seeded sample of entry pairs ``H[i, j]``, ``H[j, i]``."""
    rng = np.random.default_rng(seed)
    n = H.n_rows
    for i, j in rng.integers(0, n, size=(samples, 2)):
        upper = H.entry(i, j)
        lower = np.conj(H.entry(j, i))
        if abs(upper - lower) > rtol * max(1.0, abs(upper)):
            raise ValueError('Matrix is not Hermitian: H[%d, %d] = %r but '
                             'conj(H[%d, %d]) = %r.'
                             % (i, j, upper, j, i, lower))


def _row_comm_reduce(ws, partial):
    """Allreduce per-rank contributions over every row communicator."""
    out = {}
    for i in range(ws.topo.p):
        comm = ws.topo.row_comm(i)
        summed = comm.allreduce_sum([partial[c] for c in comm.coords])
        out.update(zip(comm.coords, summed))
    return out


def rayleigh_ritz(ws, locked=0, debug=False):
    """Project H onto the active columns and rotate them to Ritz vectors.

    Expects ``ws.C2`` to hold the orthonormalized C. Returns the active
    Ritz values, ascending.
    """
    H = ws.H
    cols = slice(locked, None)
    k = ws.n_e - locked
    C2, B, B2 = (ws.view(name) for name in ('C2', 'B', 'B2'))

    redistribute_c_to_b(H, C2, B2, cols)
    hemm_c_to_b(H, C2, B, cols=cols)
    partial = {coord: B2[coord][:, cols].conj().T @ B[coord][:, cols]
               for coord in ws.topo.coords()}
    for coord, a in _row_comm_reduce(ws, partial).items():
        ws.buffers[coord].A[:k, :k] = a

    solutions = {coord: heevd(ws.buffers[coord].A[:k, :k])
                 for coord in ws.topo.coords()}
    if debug:
        ref_vals, ref_vecs = solutions[(0, 0)]
        for coord, (vals, vecs) in solutions.items():
            if not (np.array_equal(vals, ref_vals)
                    and np.array_equal(vecs, ref_vecs)):
                raise RuntimeError('Projected eigenproblem on rank %r '
                                   'differs from rank (0, 0).' % (coord,))

    for coord, (_, vecs) in solutions.items():
        buf = ws.buffers[coord]
        buf.C[:, cols] = buf.C2[:, cols] @ vecs
        buf.C2[:, cols] = buf.C[:, cols]
    return solutions[(0, 0)][0]


def residuals(ws, ritzv, locked=0, scale=1.0):
    """Scaled residual norms ``||H v - l v|| / scale`` of the active Ritz
    pairs held in ``ws.C``.
    """
    H = ws.H
    cols = slice(locked, None)
    C, B, B2 = (ws.view(name) for name in ('C', 'B', 'B2'))
    active = np.asarray(ritzv)[locked:]

    redistribute_c_to_b(H, C, B2, cols)
    hemm_c_to_b(H, C, B, cols=cols)
    partial = {}
    for coord in ws.topo.coords():
        B[coord][:, cols] -= B2[coord][:, cols] * active
        partial[coord] = np.sum(np.abs(B[coord][:, cols]) ** 2, axis=0)
    norms = _row_comm_reduce(ws, partial)[(0, 0)]
    return np.sqrt(norms) / scale


def lock_converged(ws, ritzv, resd, degs, tol, locked=0):
    """Move converged active columns to the front of the active range.

    Converged columns are ordered by ascending Ritz value, the others keep
    their order. The permutation is applied to C, C2 and the arrays in
    place. Returns the number of newly converged columns.
    """
    active = np.arange(locked, len(ritzv))
    done = resd[locked:] <= tol
    converged = active[done]
    if converged.size == 0:
        return 0
    converged = converged[np.argsort(ritzv[converged], kind='stable')]
    perm = np.concatenate([np.arange(locked), converged, active[~done]])
    for array in (ritzv, resd, degs):
        array[...] = array[perm]
    ws.permute_columns(perm)
    return int(converged.size)


def lowest_locked(ritzv, locked, nev):
    """Whether the `nev` smallest current Ritz values all sit in the locked
    prefix. Ties go to the locked columns.
    """
    if locked < nev:
        return False
    order = np.argsort(ritzv, kind='stable')[:nev]
    return bool(np.all(order < locked))


def _residual_scale(bounds):
    scale = max(abs(bounds.mu_1), abs(bounds.b_sup))
    return scale if scale > 0 else 1.0


def _fill_initial_vectors(ws, seed):
    topo = ws.topo
    for i, j in topo.coords():
        buf = ws.buffers[(i, j)]
        buf.C[...] = random_initial_vectors(buf.C.shape[0], ws.n_e, i, seed,
                                            0, ws.dtype)


def _result(ws, state, status, stats, scale, nev):
    locked = state.locked
    pool = np.arange(locked) if status is Status.CONVERGED \
        else np.arange(ws.n_e)
    idx = pool[np.argsort(state.ritzv[pool], kind='stable')][:nev]
    blocks = {coord: np.asfortranarray(buf.C[:, idx])
              for coord, buf in ws.buffers.items()}
    vectors = DistributedMatrix(ws.topo, ws.dist, Layout.COLUMN_1D,
                                (ws.n, idx.size), blocks)
    return SolverResult(status, state.ritzv[idx].copy(),
                        state.resd[idx].copy(), vectors, locked, stats,
                        scale)


def solve(H, config, profiler=None):
    """Lowest `config.nev` eigenpairs of a distributed Hermitian matrix.

    Parameters
    ----------
    H : DistributedMatrix
        Full-2D operator. Its diagonal is shifted in place while filtering
        and restored afterwards.
    config : SolverConfig
        Solver parameters.
    profiler : Profiler, optional
        Collects per-kernel records; a fresh one is used when omitted.

    Returns
    -------
    SolverResult
        ``status`` is NOT_CONVERGED when `max_iter` iterations did not lock
        the `nev` lowest pairs; the lowest `nev` Ritz pairs are returned
        regardless.

    Raises
    ------
    SolverError
        A kernel failed; the original exception is chained.
    """
    if H.layout is not Layout.FULL_2D or H.shape[0] != H.shape[1]:
        raise GridError('The operator must be a square full-2D matrix.')
    n = H.n_rows
    config.check_size(n)
    check_redistribution(H.topo, H.dist)
    check_hermitian(H, config.seed)

    topo = H.topo
    ws = Workspace(H, config.n_e)
    if profiler is None:
        profiler = Profiler(topo.size, precision=H.dtype)
    u = unit_roundoff(H.dtype)
    stats = SolverStats()
    start = time.perf_counter()

    with profiler.attached(topo.backend):
        _fill_initial_vectors(ws, config.seed)
        with profiler.span(Kernel.LANCZOS, 0):
            bounds = lanczos_bounds(H, config.n_e, config.lanczos_steps,
                                    config.lanczos_vectors, config.seed)
        state = SolverState(
            locked=0, iteration=0,
            ritzv=np.zeros(config.n_e), resd=np.full(config.n_e, np.inf),
            degs=DegreeSchedule.uniform(config.n_e, config.deg_init,
                                        config.deg_max),
            bounds=bounds)
        try:
            status = _iterate(ws, state, config, stats, profiler, u)
        except (ArithmeticError, np.linalg.LinAlgError, RuntimeError,
                MemoryError) as e:
            raise SolverError(str(e), state.iteration) from e

    stats.iterations = state.iteration
    stats.records = profiler.merged()
    stats.wall_s = time.perf_counter() - start
    scale = _residual_scale(state.bounds)
    return _result(ws, state, status, stats, scale, config.nev)


def _iterate(ws, state, config, stats, profiler, u):
    degs = state.degs.degs
    while True:
        state.iteration += 1
        it = state.iteration
        locked = state.locked

        if it > 1:
            mu_1, mu_ne = update_bounds(state.ritzv, locked)
            state.bounds = state.bounds.with_ritz(mu_1, mu_ne).safeguarded()
            logger.debug('Bounds at iteration %d: mu_1=%.6e, mu_ne=%.6e, '
                         'b_sup=%.6e', it, state.bounds.mu_1,
                         state.bounds.mu_ne, state.bounds.b_sup)
            if config.opt:
                degs[locked:] = degree_opt(
                    config.tol, state.resd, state.ritzv, state.bounds.c,
                    state.bounds.e, config.deg_max, locked)[locked:]
            sort_by_degree(ws, state.ritzv, state.resd, degs, locked)
        bounds = state.bounds

        with profiler.span(Kernel.FILTER, it):
            stats.matvecs += chebyshev_filter(ws, degs, bounds, bounds.mu_1,
                                              locked)

        if it == 1:
            est = 1.0 / u
        else:
            est = cond_est(state.ritzv, bounds.c, bounds.e, degs, locked)
        with profiler.span(Kernel.QR, it):
            choice = orthonormalize(ws, est, config.qr, locked, it)
            for buf in ws.buffers.values():
                buf.C2[:, locked:] = buf.C[:, locked:]
        stats.qr_trace.append(choice)

        with profiler.span(Kernel.RR, it):
            state.ritzv[locked:] = rayleigh_ritz(ws, locked, config.debug)

        scale = _residual_scale(bounds)
        with profiler.span(Kernel.RESID, it):
            state.resd[locked:] = residuals(ws, state.ritzv, locked, scale)

        state.locked += lock_converged(ws, state.ritzv, state.resd, degs,
                                       config.tol, locked)
        logger.info('Iteration %d: locked %d/%d, QR %s (est. cond %.2e), '
                    'max active residual %.2e', it, state.locked,
                    config.nev, choice.executed.value, choice.est_cond,
                    np.max(state.resd[locked:]))

        if lowest_locked(state.ritzv, state.locked, config.nev):
            return Status.CONVERGED
        if it >= config.max_iter:
            logger.warning('No convergence after %d iterations: %d of %d '
                           'pairs locked.', it, state.locked, config.nev)
            return Status.NOT_CONVERGED
