# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import unittest

import numpy as np
import numpy.testing as npt
from numpy.polynomial import chebyshev

from pychase._filter import (DegreeSchedule, FilterParams, chebyshev_filter,
                             degree_opt, shifted_diagonal, sort_by_degree)
from pychase._grid import Distribution, GridTopology, Workspace, distribute
from pychase._lanczos import SpectralBounds
from pychase._matgen import SpectrumSpec, generate


def workspace(matrix, n_e, p=1, q=1, dist=None):
    dist = dist if dist is not None else Distribution.block()
    return Workspace(distribute(matrix, dist, GridTopology(p, q)), n_e)


def filter_oracle(matrix, x, degs, bounds, mu_1):
    """p_d(H) x through the eigendecomposition of H."""
    values, vectors = np.linalg.eigh(matrix)
    t = (values - bounds.c) / bounds.e
    t_1 = (mu_1 - bounds.c) / bounds.e
    out = np.empty_like(x)
    for k, d in enumerate(degs):
        coef = np.zeros(d + 1)
        coef[d] = 1.0
        scale = chebyshev.chebval(t, coef) / chebyshev.chebval(t_1, coef)
        out[:, k] = vectors @ (scale * (vectors.T @ x[:, k]))
    return out


class FilterParamsTests(unittest.TestCase):
    def test_scalar_recurrence(self):
        # the scaled recurrence on a scalar reproduces T_d(t) / T_d(t_1)
        params = FilterParams(c=0.65, e=0.35)
        mu_1, lam = 0.0, 0.2
        t = (lam - params.c) / params.e
        t_1 = (mu_1 - params.c) / params.e
        prev, cur = 1.0, None
        for step, (alpha, beta) in enumerate(params.recurrence(mu_1, 8), 1):
            new = alpha * (lam - params.c) * (prev if cur is None else cur)
            if cur is not None:
                new += beta * prev
                prev = cur
            cur = new
            coef = np.zeros(step + 1)
            coef[step] = 1.0
            expected = chebyshev.chebval(t, coef) / chebyshev.chebval(t_1,
                                                                      coef)
            self.assertAlmostEqual(cur, expected, delta=1e-13)

    def test_first_step(self):
        alpha, beta = next(FilterParams(2.0, 1.0).recurrence(0.0, 4))
        self.assertEqual(alpha, -0.5)
        self.assertEqual(beta, 0.0)

    def test_step_count(self):
        self.assertEqual(len(list(FilterParams(2.0, 1.0).recurrence(0.0, 6))),
                         6)

    def test_nonpositive_half_width(self):
        with self.assertRaises(ValueError):
            FilterParams(1.0, 0.0)


class ChebyshevFilterTests(unittest.TestCase):
    def setUp(self):
        self.matrix = generate(SpectrumSpec(40, 0.0, 1.0), seed=3)
        self.bounds = SpectralBounds(0.0, 0.3, 1.0)
        rng = np.random.default_rng(8)
        self.x = rng.standard_normal((40, 6))
        self.degs = np.array([2, 2, 4, 6, 8, 10])

    def run_filter(self, p=1, q=1, dist=None, locked=0):
        ws = workspace(self.matrix, 6, p, q, dist)
        ws.scatter('C', self.x)
        count = chebyshev_filter(ws, self.degs, self.bounds,
                                 self.bounds.mu_1, locked)
        return ws, count

    def test_eigendecomposition_oracle(self):
        ws, _ = self.run_filter()
        expected = filter_oracle(self.matrix, self.x, self.degs, self.bounds,
                                 self.bounds.mu_1)
        npt.assert_allclose(ws.gather('C'), expected, rtol=0, atol=1e-11)

    def test_eigenvector_is_scaled(self):
        _, vectors = np.linalg.eigh(self.matrix)
        x = vectors[:, :6].copy()
        ws = workspace(self.matrix, 6)
        ws.scatter('C', x)
        chebyshev_filter(ws, self.degs, self.bounds, self.bounds.mu_1)
        out = ws.gather('C')
        for k in range(6):
            ratio = out[:, k] @ x[:, k]
            npt.assert_allclose(out[:, k], ratio * x[:, k], atol=1e-12)

    def test_matvec_count(self):
        _, count = self.run_filter()
        self.assertEqual(count, 32)

    def test_locked_columns_untouched(self):
        ws, count = self.run_filter(locked=2)
        self.assertEqual(count, 28)
        npt.assert_array_equal(ws.gather('C', slice(0, 2)), self.x[:, :2])
        expected = filter_oracle(self.matrix, self.x, self.degs, self.bounds,
                                 self.bounds.mu_1)
        npt.assert_allclose(ws.gather('C', slice(2, None)), expected[:, 2:],
                            rtol=0, atol=1e-11)

    def test_grid_invariance(self):
        reference = self.run_filter()[0].gather('C')
        for p, q, dist in [(2, 2, None), (2, 1, None), (1, 3, None),
                           (2, 2, Distribution.block_cyclic(3, 3))]:
            out = self.run_filter(p, q, dist)[0].gather('C')
            npt.assert_allclose(out, reference, rtol=0, atol=1e-12)

    def test_diagonal_restored(self):
        ws = workspace(self.matrix, 6, 2, 2)
        before = {c: b.copy() for c, b in ws.H.blocks.items()}
        ws.scatter('C', self.x)
        chebyshev_filter(ws, self.degs, self.bounds, self.bounds.mu_1)
        for coord, block in ws.H.blocks.items():
            self.assertEqual(block.tobytes(), before[coord].tobytes())

    def test_odd_degree(self):
        ws = workspace(self.matrix, 6)
        with self.assertRaisesRegex(ValueError, 'even'):
            chebyshev_filter(ws, [2, 2, 3, 4, 4, 4], self.bounds, 0.0)

    def test_unsorted_degrees(self):
        ws = workspace(self.matrix, 6)
        with self.assertRaisesRegex(ValueError, 'sorted'):
            chebyshev_filter(ws, [4, 2, 2, 2, 2, 2], self.bounds, 0.0)

    def test_all_locked(self):
        ws, count = self.run_filter(locked=6)
        self.assertEqual(count, 0)
        npt.assert_array_equal(ws.gather('C'), self.x)


class ShiftedDiagonalTests(unittest.TestCase):
    def test_shift_and_restore(self):
        matrix = np.arange(36.0).reshape(6, 6)
        H = distribute(matrix, Distribution.block_cyclic(2, 2),
                       GridTopology(2, 2))
        with shifted_diagonal(H, 0.5):
            npt.assert_array_equal(H.gather(), matrix - 0.5 * np.eye(6))
        npt.assert_array_equal(H.gather(), matrix)

    def test_restored_on_error(self):
        matrix = np.eye(4) * 3.0
        H = distribute(matrix, Distribution.block(), GridTopology(2, 1))
        with self.assertRaises(RuntimeError):
            with shifted_diagonal(H, 1.0):
                raise RuntimeError('interrupted')
        npt.assert_array_equal(H.gather(), matrix)


class DegreeOptTests(unittest.TestCase):
    def test_hand_evaluated(self):
        # rho = 2 at t = -1.25: ceil(ln(1e-8) / ln(0.5)) = 27, made even
        degs = degree_opt(1e-10, [1e-2], [-1.25], 0.0, 1.0, 36)
        npt.assert_array_equal(degs, [28])

    def test_converged_column(self):
        degs = degree_opt(1e-10, [1e-10], [-1.25], 0.0, 1.0, 36)
        npt.assert_array_equal(degs, [2])

    def test_large_growth(self):
        degs = degree_opt(1e-10, [1e-2], [-1e6], 0.0, 1.0, 36)
        npt.assert_array_equal(degs, [2])

    def test_inside_damped_interval(self):
        degs = degree_opt(1e-10, [1e-2], [0.5], 0.0, 1.0, 36)
        npt.assert_array_equal(degs, [36])

    def test_capped(self):
        degs = degree_opt(1e-10, [1.0], [-1.0001], 0.0, 1.0, 37)
        npt.assert_array_equal(degs, [36])

    def test_even_and_in_range(self):
        rng = np.random.default_rng(4)
        ritzv = rng.uniform(-3.0, 1.0, 50)
        res = 10.0 ** rng.uniform(-12, 0, 50)
        degs = degree_opt(1e-10, res, ritzv, 0.0, 1.0, 36)
        self.assertTrue(np.all(degs % 2 == 0))
        self.assertTrue(np.all((degs >= 2) & (degs <= 36)))

    def test_locked_entries(self):
        degs = degree_opt(1e-10, [0.0, 1e-2, 1e-2], [-2.0, -1.25, -1.25],
                          0.0, 1.0, 36, locked=1)
        npt.assert_array_equal(degs, [0, 28, 28])

    def test_invalid(self):
        with self.assertRaises(ValueError):
            degree_opt(1e-10, [1e-2], [-1.25], 0.0, 0.0, 36)
        with self.assertRaises(ValueError):
            degree_opt(1e-10, [1e-2], [-1.25], 0.0, 1.0, 1)


class DegreeScheduleTests(unittest.TestCase):
    def test_uniform(self):
        schedule = DegreeSchedule.uniform(4, 10, 20)
        npt.assert_array_equal(schedule.degs, [10, 10, 10, 10])
        schedule.validate(0)

    def test_validate(self):
        with self.assertRaisesRegex(ValueError, 'even'):
            DegreeSchedule(np.array([2, 3]), 36).validate(0)
        with self.assertRaisesRegex(ValueError, 'within'):
            DegreeSchedule(np.array([2, 38]), 36).validate(0)
        with self.assertRaisesRegex(ValueError, 'sorted'):
            DegreeSchedule(np.array([4, 2]), 36).validate(0)
        DegreeSchedule(np.array([0, 2, 4]), 36).validate(1)


class SortByDegreeTests(unittest.TestCase):
    def setUp(self):
        self.ws = workspace(np.eye(6), 4)
        self.x = np.arange(24.0).reshape(6, 4)
        self.ws.scatter('C', self.x)
        self.ws.scatter('C2', -self.x)

    def test_sort(self):
        ritzv = np.array([0.1, 0.5, 0.2, 0.0])
        resd = np.array([1.0, 2.0, 3.0, 4.0])
        degs = np.array([4, 2, 2, 6])
        perm = sort_by_degree(self.ws, ritzv, resd, degs)
        npt.assert_array_equal(perm, [2, 1, 0, 3])
        npt.assert_array_equal(degs, [2, 2, 4, 6])
        npt.assert_array_equal(ritzv, [0.2, 0.5, 0.1, 0.0])
        npt.assert_array_equal(resd, [3.0, 2.0, 1.0, 4.0])
        npt.assert_array_equal(self.ws.gather('C'), self.x[:, perm])
        npt.assert_array_equal(self.ws.gather('C2'), -self.x[:, perm])

    def test_locked_prefix_stays(self):
        ritzv = np.array([0.1, 0.5, 0.2, 0.0])
        resd = np.zeros(4)
        degs = np.array([0, 2, 2, 6])
        perm = sort_by_degree(self.ws, ritzv, resd, degs, locked=1)
        npt.assert_array_equal(perm, [0, 2, 1, 3])
        npt.assert_array_equal(self.ws.gather('C')[:, 0], self.x[:, 0])


if __name__ == '__main__':
    unittest.main()
