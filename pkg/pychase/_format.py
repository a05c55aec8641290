# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import os

import numpy as np


class MatrixSizeError(ValueError):
    pass


# little-endian, complex stored as interleaved (re, im)
SCALAR_DTYPES = {
    'r32': np.dtype('<f4'),
    'r64': np.dtype('<f8'),
    'c64': np.dtype('<c8'),
    'c128': np.dtype('<c16'),
}


def scalar_dtype(scalar):
    try:
        return SCALAR_DTYPES[scalar]
    except KeyError:
        raise ValueError('Unknown scalar kind %r, expected one of %s.'
                         % (scalar, ', '.join(SCALAR_DTYPES)))


def scalar_kind(dtype):
    dtype = np.dtype(dtype).newbyteorder('<')
    for name, known in SCALAR_DTYPES.items():
        if known == dtype:
            return name
    raise ValueError('No scalar kind for dtype %s.' % dtype)


class MatrixFile:
    """A headerless, column-major, little-endian matrix file.

    The shape and scalar kind are not stored in the file; they are supplied
    by the caller.
    """

    def __init__(self, path, n_rows, n_cols=None, scalar='r64'):
        if n_rows < 1:
            raise ValueError('Matrix dimension must be positive, got %d.'
                             % n_rows)
        self.path = str(path)
        self.n_rows = n_rows
        self.n_cols = n_rows if n_cols is None else n_cols
        self.scalar = scalar
        self.dtype = scalar_dtype(scalar)

    @property
    def shape(self):
        return self.n_rows, self.n_cols

    @property
    def nbytes(self):
        return self.n_rows * self.n_cols * self.dtype.itemsize

    def validate(self):
        actual = os.path.getsize(self.path)
        if actual != self.nbytes:
            raise MatrixSizeError(
                '%s holds %d bytes, a %dx%d %s matrix needs %d.'
                % (self.path, actual, self.n_rows, self.n_cols, self.scalar,
                   self.nbytes))

    def read(self):
        self.validate()
        values = np.fromfile(self.path, dtype=self.dtype)
        # native byte order for computation
        values = values.astype(self.dtype.newbyteorder('='), copy=False)
        return values.reshape(self.shape, order='F')

    def write(self, matrix):
        matrix = np.asarray(matrix)
        if matrix.shape != self.shape:
            raise MatrixSizeError('Cannot write a %s matrix to a %dx%d file.'
                                  % (matrix.shape, self.n_rows, self.n_cols))
        with open(self.path, 'wb') as fh:
            fh.write(matrix.astype(self.dtype).tobytes(order='F'))


def write_eigenvalues(values, path):
    with open(str(path), 'w') as fh:
        for value in np.asarray(values, dtype=float):
            fh.write('{:.16e}\n'.format(value))


def read_eigenvalues(path):
    with open(str(path)) as fh:
        return np.array([float(line) for line in fh if line.strip()])
