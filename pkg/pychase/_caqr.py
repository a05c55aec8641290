# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

"""
Orthonormalization of tall-skinny blocks distributed over the rows of a
column communicator.

Each member of the communicator holds a row slice of the global m x n block
X, as a list in member order. The CholeskyQR family only exchanges n x n
Gram matrices; the Householder fallback gathers X on one member.
"""

import dataclasses
import enum
import logging

import numpy as np
import psutil

from ._kernels import (herk_gram, householder_qr, potrf, trsm_right,
                       unit_roundoff)


logger = logging.getLogger(__name__)

CHOL1_THRESHOLD = 20.0
SHIFTED_THRESHOLD = 1e8
MAX_SHIFTED_STEPS = 3

QR_MODES = ('auto', 'hhqr', 'chol1', 'chol2', 'shifted')


class CholeskyError(ArithmeticError):
    def __init__(self, info, rounds=0):
        super().__init__('Cholesky factorization of the Gram matrix failed '
                         'at pivot %d.' % info)
        self.info = info
        self.rounds = rounds


class QrVariant(enum.Enum):
    CHOL1 = 'chol1'
    CHOL2 = 'chol2'
    SHIFTED_CHOL2 = 'shifted'
    HOUSEHOLDER = 'hhqr'


@dataclasses.dataclass(frozen=True)
class QrVariantChoice:
    """The variant dispatch selected and what actually produced Q.

    `fallback` is the variant that took over after a Cholesky failure, or
    None when the selected variant succeeded. `rounds` counts the
    Gram/potrf/trsm rounds executed.
    """
    variant: QrVariant
    est_cond: float
    rounds: int = 0
    iteration: int = None
    fallback: QrVariant = None

    @property
    def executed(self):
        return self.fallback if self.fallback is not None else self.variant


def choose_variant(est_cond):
    if not est_cond >= 1:
        raise ValueError('Estimated condition number must be at least 1, '
                         'got %r.' % est_cond)
    if est_cond < CHOL1_THRESHOLD:
        return QrVariant.CHOL1
    if est_cond > SHIFTED_THRESHOLD:
        return QrVariant.SHIFTED_CHOL2
    return QrVariant.CHOL2


def shift(m, n, norm, u):
    """Diagonal shift making the Gram matrix of an m x n block factorable.
    """
    return 11 * (m * n + n * (n + 1)) * u * norm


def _gram(blocks, comm):
    return comm.allreduce_sum([herk_gram(x) for x in blocks])


def _factor(grams, diag_shift=0.0):
    factors = []
    for g in grams:
        if diag_shift:
            g = g + diag_shift * np.eye(g.shape[0], dtype=g.dtype)
        r, info = potrf(g)
        if info:
            raise CholeskyError(info)
        factors.append(r)
    return factors


def cholesky_qr(blocks, comm, chol_degree=1):
    """Repeated CholeskyQR of a distributed block.

    Returns
    -------
    list of np.ndarray, int
        The orthonormalized blocks and the number of rounds executed.

    Raises
    ------
    CholeskyError
        When a Gram matrix is not numerically positive definite; `rounds`
        on the exception counts the rounds completed before it.
    """
    if chol_degree not in (1, 2):
        raise ValueError('CholeskyQR degree must be 1 or 2, got %r.'
                         % chol_degree)
    for rnd in range(chol_degree):
        try:
            factors = _factor(_gram(blocks, comm))
        except CholeskyError as e:
            e.rounds = rnd
            raise
        blocks = [trsm_right(x, r) for x, r in zip(blocks, factors)]
    return blocks, chol_degree


def _shifted_step(blocks, comm, n_rows):
    n = blocks[0].shape[1]
    u = unit_roundoff(blocks[0].dtype)
    grams = _gram(blocks, comm)
    norms = comm.allreduce_sum(
        [np.array([np.vdot(x, x).real]) for x in blocks])
    s = shift(n_rows, n, float(norms[0][0]), u)
    factors = _factor(grams, s)
    return [trsm_right(x, r) for x, r in zip(blocks, factors)]


def _shifted_cholesky_qr2(blocks, comm, n_rows):
    """Shifted CholeskyQR followed by CholeskyQR2.

    When CholeskyQR2 breaks down the shifted step is applied again to its
    input, up to `MAX_SHIFTED_STEPS` times.
    """
    shifted = 0
    while True:
        try:
            blocks = _shifted_step(blocks, comm, n_rows)
        except CholeskyError as e:
            e.rounds = shifted
            raise
        shifted += 1
        try:
            out, rounds = cholesky_qr(blocks, comm, 2)
        except CholeskyError as e:
            if shifted >= MAX_SHIFTED_STEPS:
                e.rounds += shifted
                raise
            logger.info('CholeskyQR2 failed at pivot %d after %d shifted '
                        'step(s), shifting again.', e.info, shifted)
            continue
        return out, rounds + shifted


def _check_memory(n_rows, n_cols, dtype):
    # gathered X, Q and the Householder workspace
    needed = 3 * n_rows * n_cols * np.dtype(dtype).itemsize
    available = psutil.virtual_memory().available
    if needed > available:
        raise MemoryError('Householder fallback needs %d bytes on the '
                          'gathering rank, only %d are available.'
                          % (needed, available))


def householder_fallback(blocks, comm):
    """Gather on the first member, Householder QR, scatter Q back."""
    heights = [x.shape[0] for x in blocks]
    n = blocks[0].shape[1]
    _check_memory(sum(heights), n, blocks[0].dtype)

    root = comm.coords[0]
    q = householder_qr(np.vstack(comm.gather(blocks, root)))
    offsets = np.cumsum([0] + heights)
    pieces = [q[lo:hi] for lo, hi in zip(offsets[:-1], offsets[1:])]
    return [np.asfortranarray(piece) for piece in comm.scatter(pieces, root)]


def _shifted_or_fallback(blocks, comm, n_rows):
    try:
        return _shifted_cholesky_qr2(blocks, comm, n_rows), None
    except CholeskyError as e:
        logger.warning('Shifted CholeskyQR2 failed at pivot %d, reverting '
                       'to Householder QR.', e.info)
        q = householder_fallback(blocks, comm)
        return (q, 0), QrVariant.HOUSEHOLDER


def caqr_dispatch(blocks, est_cond, comm, n_rows, mode='auto'):
    """Orthonormalize with the variant suited to the estimated condition.

    Parameters
    ----------
    blocks : list of np.ndarray
        Row slices of X, one per member of `comm`.
    est_cond : float
        Estimated condition number of X, at least 1.
    comm : Communicator
        Column communicator holding X.
    n_rows : int
        Global row count of X, used by the shift.
    mode : str
        'auto' dispatches on `est_cond`; the other modes force a variant.
        In 'auto' mode a Cholesky failure of CholeskyQR or CholeskyQR2
        escalates to shifted CholeskyQR2.

    Returns
    -------
    list of np.ndarray, QrVariantChoice
    """
    if mode not in QR_MODES:
        raise ValueError('Unknown QR mode %r, expected one of %s.'
                         % (mode, ', '.join(QR_MODES)))
    if mode == 'auto':
        variant = choose_variant(est_cond)
    else:
        variant = QrVariant(mode)
    logger.debug('QR variant %s for estimated condition %.3e',
                 variant.value, est_cond)

    fallback = None
    if variant is QrVariant.HOUSEHOLDER:
        out, rounds = householder_fallback(blocks, comm), 0
    elif variant is QrVariant.SHIFTED_CHOL2:
        (out, rounds), fallback = _shifted_or_fallback(blocks, comm, n_rows)
    else:
        degree = 1 if variant is QrVariant.CHOL1 else 2
        try:
            out, rounds = cholesky_qr(blocks, comm, degree)
        except CholeskyError as e:
            if mode != 'auto':
                raise
            logger.warning('%s failed at pivot %d with estimated condition '
                           '%.3e, escalating to shifted CholeskyQR2.',
                           variant.value, e.info, est_cond)
            (out, extra), fallback = _shifted_or_fallback(blocks, comm,
                                                          n_rows)
            rounds = e.rounds + 1 + extra
            if fallback is None:
                fallback = QrVariant.SHIFTED_CHOL2
    return out, QrVariantChoice(variant, float(est_cond), rounds,
                                fallback=fallback)


def orthonormalize(ws, est_cond, mode='auto', locked=0, iteration=None):
    """Orthonormalize ``ws.C`` on every column communicator.

    All columns take part so the active ones end up orthogonal to the
    locked ones; the first `locked` columns are then restored from
    ``ws.C2``, bit for bit.
    """
    choice = None
    for j in range(ws.topo.q):
        comm = ws.topo.col_comm(j)
        blocks = [ws.buffers[c].C for c in comm.coords]
        out, member_choice = caqr_dispatch(blocks, est_cond, comm, ws.n,
                                           mode)
        for coord, block in zip(comm.coords, out):
            buf = ws.buffers[coord]
            buf.C[...] = block
            buf.C[:, :locked] = buf.C2[:, :locked]
        if choice is None:
            choice = member_choice
    return dataclasses.replace(choice, iteration=iteration)


def _growth(t):
    t = complex(t)
    root = np.sqrt(t * t - 1)
    return max(abs(t - root), abs(t + root))


def cond_est(ritzv, c, e, degs, locked=0):
    """Estimated condition number of the filtered active block.

    The column of the lowest active Ritz value is amplified by
    ``rho^d``; columns of higher degree are bounded by the growth at the
    lowest Ritz value over their extra steps.
    """
    if not e > 0:
        raise ValueError('Half-width must be positive, got %r.' % e)
    ritzv = np.asarray(ritzv, dtype=float)
    degs = np.asarray(degs)
    rho_low = _growth((ritzv[0] - c) / e)
    rho = _growth((ritzv[locked] - c) / e)
    d = int(degs[locked])
    d_max = int(np.max(degs[locked:]))
    with np.errstate(over='ignore'):
        est = np.float64(rho) ** d * np.float64(rho_low) ** (d_max - d)
    return max(float(est), 1.0)
