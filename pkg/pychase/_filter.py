# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import contextlib
import dataclasses

import numpy as np

from ._grid import hemm_b_to_c, hemm_c_to_b


DEFAULT_DEG_INIT = 20
DEFAULT_DEG_MAX = 36


def _largest_even(value):
    return value - value % 2


@dataclasses.dataclass
class DegreeSchedule:
    """Per-column filter degrees; the first `locked` entries are inert."""
    degs: np.ndarray
    deg_max: int = DEFAULT_DEG_MAX
    deg_init: int = DEFAULT_DEG_INIT

    @classmethod
    def uniform(cls, n_e, deg_init=DEFAULT_DEG_INIT,
                deg_max=DEFAULT_DEG_MAX):
        return cls(np.full(n_e, deg_init, dtype=int), deg_max, deg_init)

    def active(self, locked):
        return self.degs[locked:]

    def validate(self, locked):
        active = self.active(locked)
        if np.any(active % 2):
            raise ValueError('Filter degrees must be even, got %s.'
                             % active[active % 2 == 1].tolist())
        if np.any(active < 2) or np.any(active > self.deg_max):
            raise ValueError('Filter degrees must lie within [2, %d].'
                             % self.deg_max)
        if np.any(np.diff(active) < 0):
            raise ValueError('Active filter degrees must be sorted.')


@dataclasses.dataclass(frozen=True)
class FilterParams:
    """Center and half-width of the damped interval."""
    c: float
    e: float

    def __post_init__(self):
        if not self.e > 0:
            raise ValueError('Half-width of the damped interval must be '
                             'positive, got %r.' % self.e)

    @classmethod
    def from_bounds(cls, bounds):
        return cls(bounds.c, bounds.e)

    def recurrence(self, mu_1, degree):
        """Yield ``(alpha, beta)`` for steps 1..degree.

        Step 1 is ``alpha (H - cI) x`` with ``beta = 0``; step i+1 is
        ``alpha (H - cI) x_i + beta x_{i-1}``.
        """
        sigma_1 = self.e / (mu_1 - self.c)
        sigma = sigma_1
        yield sigma_1 / self.e, 0.0
        for _ in range(1, degree):
            sigma_new = 1.0 / (2.0 / sigma_1 - sigma)
            yield 2.0 * sigma_new / self.e, -sigma * sigma_new
            sigma = sigma_new


@contextlib.contextmanager
def shifted_diagonal(H, shift):
    """Subtract `shift` from the diagonal of `H` on its owning ranks.

    The original diagonal entries are written back on exit.
    """
    saved = {}
    for coord in H.topo.coords():
        rows, cols = H.diagonal_positions(coord)
        block = H.blocks[coord]
        saved[coord] = (rows, cols, block[rows, cols].copy())
        block[rows, cols] -= shift
    try:
        yield H
    finally:
        for coord, (rows, cols, values) in saved.items():
            H.blocks[coord][rows, cols] = values


def chebyshev_filter(ws, degs, bounds, mu_1, locked=0):
    """Filter the active columns of ``ws.C`` in place.

    Column ``k`` is replaced by ``p_d(H) C[:, k]`` where ``d = degs[k]`` and
    ``p_d`` is the Chebyshev polynomial of degree d mapping the damped
    interval ``[mu_ne, b_sup]`` onto [-1, 1], normalized at `mu_1`. Odd
    steps write into ``ws.B``, even steps back into ``ws.C``. A column
    leaves the recurrence once its degree is reached.

    Returns
    -------
    int
        Number of single-vector products, the sum of the active degrees.
    """
    degs = np.asarray(degs)
    active = degs[locked:]
    if active.size == 0:
        return 0
    if np.any(active % 2) or np.any(active < 2):
        raise ValueError('Filter degrees must be even and at least 2, got '
                         '%s.' % sorted(set(active.tolist())))
    if np.any(np.diff(active) < 0):
        raise ValueError('Active filter degrees must be sorted.')
    params = FilterParams.from_bounds(bounds)

    H = ws.H
    C = ws.view('C')
    B = ws.view('B')
    with shifted_diagonal(H, params.c):
        steps = params.recurrence(mu_1, int(active[-1]))
        for step, (alpha, beta) in enumerate(steps, start=1):
            first = locked + int(np.searchsorted(active, step, side='left'))
            cols = slice(first, None)
            if step % 2:
                hemm_c_to_b(H, C, B, alpha, beta, cols)
            else:
                hemm_b_to_c(H, B, C, alpha, beta, cols)
    return int(active.sum())


def degree_opt(tol, res, ritzv, c, e, deg_max, locked=0):
    """Smallest even degree that should bring each residual under `tol`.

    For Ritz value ``l`` the filter amplifies its component by
    ``rho = max |t +- sqrt(t^2 - 1)|`` per step, ``t = (l - c)/e``. Columns
    inside the damped interval (``rho`` at 1) get `deg_max`. Locked
    entries are set to 0.
    """
    if not e > 0:
        raise ValueError('Half-width must be positive, got %r.' % e)
    res = np.asarray(res, dtype=float)
    ritzv = np.asarray(ritzv, dtype=float)
    cap = _largest_even(deg_max)
    if cap < 2:
        raise ValueError('Maximal degree must be at least 2, got %d.'
                         % deg_max)

    t = ((ritzv[locked:] - c) / e).astype(complex)
    root = np.sqrt(t * t - 1)
    rho = np.maximum(np.abs(t - root), np.abs(t + root))
    r = res[locked:]

    degs = np.zeros(ritzv.size, dtype=int)
    with np.errstate(divide='ignore', invalid='ignore'):
        wanted = np.ceil(np.log(tol / r) / np.log(1 / rho))
    inside = rho <= 1 + 16 * np.finfo(float).eps
    wanted = np.where(r <= tol, 2, wanted)
    wanted = np.where(inside, cap, wanted)
    wanted = np.clip(np.nan_to_num(wanted, nan=cap), 2, cap).astype(int)
    degs[locked:] = wanted + wanted % 2
    return degs


def sort_by_degree(ws, ritzv, resd, degs, locked=0):
    """Order active columns by (degree, Ritz value), in place.

    The permutation is applied to C, C2 and the three arrays; the locked
    prefix keeps its place. Returns the permutation.
    """
    order = np.lexsort((ritzv[locked:], degs[locked:]))
    perm = np.concatenate([np.arange(locked), locked + order])
    for array in (ritzv, resd, degs):
        array[...] = array[perm]
    ws.permute_columns(perm)
    return perm
