# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import importlib.resources
import os
import tempfile
import unittest

import numpy as np
import numpy.testing as npt

from pychase._format import (MatrixFile, MatrixSizeError, read_eigenvalues,
                             scalar_kind, write_eigenvalues)
from pychase._matgen import (SpectrumSpec, generate, random_initial_vectors,
                             read_matrix, write_matrix)


def get_data_path(name):
    return str(importlib.resources.files('pychase.tests') / 'data' / name)


class SpectrumSpecTests(unittest.TestCase):
    def test_uniform_placement(self):
        values = SpectrumSpec(5, 0.0, 1.0).eigenvalues()
        npt.assert_allclose(values, [0.0, 0.25, 0.5, 0.75, 1.0])
        self.assertEqual(values[-1], 1.0)

    def test_single_value(self):
        npt.assert_array_equal(SpectrumSpec(1, 2.0, 3.0).eigenvalues(), [2.0])

    def test_constant(self):
        npt.assert_array_equal(SpectrumSpec(4, 1.0, 1.0).eigenvalues(),
                               np.ones(4))

    def test_invalid(self):
        with self.assertRaisesRegex(ValueError, 'empty'):
            SpectrumSpec(4, 1.0, 0.0)
        with self.assertRaisesRegex(ValueError, 'positive'):
            SpectrumSpec(0, 0.0, 1.0)
        with self.assertRaisesRegex(ValueError, 'kind'):
            SpectrumSpec(4, 0.0, 1.0, kind='normal')


class GenerateTests(unittest.TestCase):
    def test_identity_spectrum(self):
        a = generate(SpectrumSpec(20, 1.0, 1.0), seed=3)
        npt.assert_allclose(a, np.eye(20), atol=1e-14)

    def test_spectrum_fidelity(self):
        spec = SpectrumSpec(50, 0.0, 1.0)
        a = generate(spec, seed=1)
        npt.assert_allclose(np.linalg.eigvalsh(a), spec.eigenvalues(),
                            rtol=0, atol=1e-12)

    def test_complex_spectrum_fidelity(self):
        spec = SpectrumSpec(40, -2.0, 3.0)
        a = generate(spec, seed=2, dtype=np.complex128)
        self.assertEqual(a.dtype, np.complex128)
        npt.assert_allclose(np.linalg.eigvalsh(a), spec.eigenvalues(),
                            rtol=0, atol=3e-12)

    def test_exactly_hermitian(self):
        for dtype in (np.float64, np.complex128):
            a = generate(SpectrumSpec(30, 0.0, 1.0), seed=4, dtype=dtype)
            npt.assert_array_equal(a, a.conj().T)
            self.assertTrue(a.flags.f_contiguous)

    def test_deterministic(self):
        spec = SpectrumSpec(25, 0.0, 1.0)
        a = generate(spec, seed=9)
        b = generate(spec, seed=9)
        self.assertEqual(a.tobytes(), b.tobytes())
        self.assertNotEqual(a.tobytes(), generate(spec, seed=10).tobytes())

    def test_explicit_eigenvalues(self):
        values = np.arange(1.0, 11.0)
        a = generate(SpectrumSpec(10, 1.0, 10.0), 0, eigenvalues=values)
        npt.assert_allclose(np.linalg.eigvalsh(a), values, atol=1e-12)
        with self.assertRaises(ValueError):
            generate(SpectrumSpec(10, 1.0, 10.0), 0, eigenvalues=values[:3])


class InitialVectorsTests(unittest.TestCase):
    def test_same_col_rank_same_block(self):
        a = random_initial_vectors(6, 3, col_rank=1, seed=5)
        b = random_initial_vectors(6, 3, col_rank=1, seed=5)
        npt.assert_array_equal(a, b)

    def test_different_col_rank(self):
        a = random_initial_vectors(6, 3, col_rank=0, seed=5)
        b = random_initial_vectors(6, 3, col_rank=1, seed=5)
        self.assertFalse(np.array_equal(a, b))

    def test_streams_are_independent(self):
        a = random_initial_vectors(6, 3, 0, 5, stream=0)
        b = random_initial_vectors(6, 3, 0, 5, stream=1)
        self.assertFalse(np.array_equal(a, b))

    def test_full_rank(self):
        blocks = [random_initial_vectors(50, 10, i, seed=1) for i in range(4)]
        s = np.linalg.svd(np.vstack(blocks), compute_uv=False)
        self.assertGreater(s[-1], 0.1)

    def test_complex(self):
        block = random_initial_vectors(4, 2, 0, 1, dtype=np.complex128)
        self.assertEqual(block.dtype, np.complex128)
        self.assertTrue(np.any(block.imag != 0))


class MatrixFileTests(unittest.TestCase):
    def test_reads_fixture(self):
        m = read_matrix(get_data_path('two_by_two_r64.bin'), 2)
        npt.assert_array_equal(m, [[1.0, 2.0], [3.0, 4.0]])

    def test_layout(self):
        with tempfile.TemporaryDirectory() as output_dir:
            path = os.path.join(output_dir, 'm.bin')
            write_matrix(np.array([[1.0, 2.0], [3.0, 4.0]]), path)
            self.assertEqual(os.path.getsize(path), 32)
            with open(path, 'rb') as fh:
                data = fh.read()
            with open(get_data_path('two_by_two_r64.bin'), 'rb') as fh:
                self.assertEqual(data, fh.read())
            self.assertEqual(np.frombuffer(data[:8], '<f8')[0], 1.0)

    def test_complex_round_trip(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        with tempfile.TemporaryDirectory() as output_dir:
            path = os.path.join(output_dir, 'm.bin')
            write_matrix(m, path)
            self.assertEqual(os.path.getsize(path), 16 * 16 * 16)
            back = read_matrix(path, 16, 'c128')
        self.assertEqual(back.tobytes(order='F'), m.tobytes(order='F'))

    def test_truncated(self):
        with tempfile.TemporaryDirectory() as output_dir:
            path = os.path.join(output_dir, 'm.bin')
            with open(path, 'wb') as fh:
                fh.write(b'\x00' * 24)
            with self.assertRaisesRegex(MatrixSizeError, '24 bytes'):
                read_matrix(path, 2)

    def test_wrong_scalar_kind(self):
        with self.assertRaises(MatrixSizeError):
            read_matrix(get_data_path('two_by_two_r64.bin'), 2, 'c128')
        with self.assertRaisesRegex(ValueError, 'Unknown scalar kind'):
            MatrixFile('m.bin', 2, scalar='i32')

    def test_rectangular(self):
        m = np.arange(6.0).reshape(3, 2)
        with tempfile.TemporaryDirectory() as output_dir:
            path = os.path.join(output_dir, 'm.bin')
            MatrixFile(path, 3, 2).write(m)
            npt.assert_array_equal(read_matrix(path, 3, n_cols=2), m)
            with self.assertRaises(MatrixSizeError):
                MatrixFile(path, 2, 3).write(m)

    def test_scalar_kind(self):
        self.assertEqual(scalar_kind(np.float64), 'r64')
        self.assertEqual(scalar_kind(np.complex128), 'c128')


class EigenvalueFileTests(unittest.TestCase):
    def test_round_trip(self):
        values = np.array([-1.5, 0.1, 1.0 / 3.0, 2.0])
        with tempfile.TemporaryDirectory() as output_dir:
            path = os.path.join(output_dir, 'evals.txt')
            write_eigenvalues(values, path)
            with open(path) as fh:
                lines = fh.read().splitlines()
            back = read_eigenvalues(path)
        self.assertEqual(len(lines), 4)
        self.assertEqual(lines[0], '-1.5000000000000000e+00')
        npt.assert_array_equal(back, values)


if __name__ == '__main__':
    unittest.main()
