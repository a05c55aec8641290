# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import dataclasses
import logging

import numpy as np
import scipy.linalg

from ._grid import column_inner, hemm_b_to_c, redistribute_c_to_b
from ._kernels import unit_roundoff
from ._matgen import random_initial_vectors


logger = logging.getLogger(__name__)

DEGENERATE_EPS = 1e-8


@dataclasses.dataclass(frozen=True)
class SpectralBounds:
    """Estimates of the lowest eigenvalue, the n_e-th eigenvalue and an
    upper bound of the spectrum; ``[mu_ne, b_sup]`` is the damped interval.
    """
    mu_1: float
    mu_ne: float
    b_sup: float

    @property
    def c(self):
        return (self.b_sup + self.mu_ne) / 2

    @property
    def e(self):
        return (self.b_sup - self.mu_ne) / 2

    def safeguarded(self, eps=DEGENERATE_EPS):
        """Widen a degenerate interval so that ``e > 0``."""
        width = eps * max(1.0, abs(self.b_sup))
        mu_ne = self.mu_ne
        if self.b_sup - mu_ne < width:
            mu_ne = self.b_sup - width
        return SpectralBounds(min(self.mu_1, mu_ne), mu_ne, self.b_sup)

    def with_ritz(self, mu_1, mu_ne):
        return SpectralBounds(mu_1, mu_ne, self.b_sup)


def _block(blocks, col):
    return {coord: block[:, col:col + 1] for coord, block in blocks.items()}


def _start_vector(H, seed, stream, dtype):
    topo, dist, n = H.topo, H.dist, H.n_rows
    return {(i, j): random_initial_vectors(
                dist.row_indices(n, topo.p, i).size, 1, i, seed, stream,
                dtype)
            for i, j in topo.coords()}


def _orthogonalize(H, basis, count, w):
    """Two classical Gram-Schmidt passes of `w` against ``basis[:, :count]``.

    Returns the coefficients of the first pass.
    """
    first = None
    for _ in range(2):
        prev = {c: b[:, :count] for c, b in basis.items()}
        h = column_inner(H, prev, w)
        for coord in w:
            w[coord] -= prev[coord] @ h
        if first is None:
            first = h
    return first[:, 0]


def _norm(H, w):
    return float(np.sqrt(abs(column_inner(H, w, w)[0, 0].real)))


def _lanczos_run(H, k, seed, stream):
    """One k-step Lanczos run with full reorthogonalization.

    Returns the Ritz values, their quadrature weights and the norm of the
    final residual.
    """
    topo, dist, n, dtype = H.topo, H.dist, H.n_rows, H.dtype
    basis = {}
    b = {}
    for i, j in topo.coords():
        n_r = dist.row_indices(n, topo.p, i).size
        n_c = dist.col_indices(n, topo.q, j).size
        basis[(i, j)] = np.zeros((n_r, k), dtype, order='F')
        b[(i, j)] = np.zeros((n_c, 1), dtype, order='F')

    v = _start_vector(H, seed, stream, dtype)
    nrm = _norm(H, v)
    for coord in basis:
        basis[coord][:, 0:1] = v[coord] / nrm

    u = unit_roundoff(dtype)
    alpha, beta = [], []
    residual = 0.0
    for step in range(k):
        v = _block(basis, step)
        w = {coord: np.zeros_like(block) for coord, block in v.items()}
        redistribute_c_to_b(H, v, b)
        hemm_b_to_c(H, b, w)
        coeffs = _orthogonalize(H, basis, step + 1, w)
        alpha.append(coeffs[step].real)
        nrm = _norm(H, w)
        if step == k - 1:
            residual = nrm
            break

        breakdown = n * u * max(1.0, np.max(np.abs(alpha)))
        if nrm > breakdown:
            beta.append(nrm)
            for coord in basis:
                basis[coord][:, step + 1:step + 2] = w[coord] / nrm
            continue

        logger.debug('Lanczos breakdown at step %d (beta=%.3e), restarting '
                     'with a fresh random vector.', step, nrm)
        w = _start_vector(H, seed, stream * 1000 + step + 1, dtype)
        _orthogonalize(H, basis, step + 1, w)
        nrm = _norm(H, w)
        if nrm <= breakdown:
            # the basis already spans the whole space
            break
        beta.append(0.0)
        for coord in basis:
            basis[coord][:, step + 1:step + 2] = w[coord] / nrm

    theta, s = scipy.linalg.eigh_tridiagonal(
        np.array(alpha), np.array(beta[:len(alpha) - 1]))
    return theta, np.abs(s[0, :]) ** 2, residual


def lanczos_bounds(H, n_e, k=25, nvec=4, seed=0):
    """Spectral bounds of a distributed Hermitian matrix.

    Parameters
    ----------
    H : DistributedMatrix
        Full-2D operator.
    n_e : int
        Index of the eigenvalue estimated by ``mu_ne``.
    k : int
        Lanczos steps per run, capped at the matrix dimension.
    nvec : int
        Number of independent runs. Run ``r`` starts from stream ``r + 1``.
    seed : int
        Seed of the start vectors.

    Returns
    -------
    SpectralBounds
        ``b_sup`` is the largest Ritz value plus the final residual norm,
        maximized over runs. ``mu_ne`` is read off the density of states
        pooled over all runs. The degenerate-interval safeguard is applied.
    """
    n = H.n_rows
    if k < 2:
        raise ValueError('Lanczos needs at least 2 steps, got %d.' % k)
    if nvec < 1:
        raise ValueError('Lanczos needs at least one run, got %d.' % nvec)
    if not 1 <= n_e <= n:
        raise ValueError('Subspace size %d is not within [1, %d].' % (n_e, n))
    k = min(k, n)

    thetas, weights = [], []
    b_sup = -np.inf
    for run in range(nvec):
        theta, weight, residual = _lanczos_run(H, k, seed, run + 1)
        thetas.append(theta)
        weights.append(weight)
        b_sup = max(b_sup, theta[-1] + residual)

    theta = np.concatenate(thetas)
    order = np.argsort(theta, kind='stable')
    theta = theta[order]
    counts = np.cumsum(np.concatenate(weights)[order]) * (n / nvec)
    idx = min(int(np.searchsorted(counts, n_e * (1 - 1e-12))),
              theta.size - 1)

    bounds = SpectralBounds(float(theta[0]), float(theta[idx]), float(b_sup))
    logger.debug('Lanczos bounds: mu_1=%.6e, mu_ne=%.6e, b_sup=%.6e',
                 bounds.mu_1, bounds.mu_ne, bounds.b_sup)
    return bounds.safeguarded()


def update_bounds(ritzv, locked=0):
    """Smallest and largest current Ritz value, locked ones included."""
    ritzv = np.asarray(ritzv)
    return float(np.min(ritzv)), float(np.max(ritzv))
