# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

__version__ = '0.1.0'

from ._grid import (GridError, UnsupportedRedistributionError, Layout,
                    DistKind, Distribution, CollectiveBackend,
                    InProcessBackend, Communicator, GridTopology,
                    DistributedMatrix, RankBuffers, Workspace, create_grid,
                    distribute, allreduce_sum, bcast, memory_model,
                    hemm_c_to_b, hemm_b_to_c, redistribute_c_to_b,
                    check_redistribution)
from ._kernels import (EigensolverError, gemm, herk_gram, potrf, trsm_right,
                       householder_qr, heevd, unit_roundoff)
from ._format import (MatrixFile, MatrixSizeError, write_eigenvalues,
                      read_eigenvalues)
from ._matgen import (SpectrumSpec, generate, random_initial_vectors,
                      write_matrix, read_matrix)
from ._lanczos import SpectralBounds, lanczos_bounds, update_bounds
from ._filter import (DegreeSchedule, FilterParams, chebyshev_filter,
                      degree_opt, sort_by_degree)
from ._caqr import (CholeskyError, QrVariant, QrVariantChoice, cholesky_qr,
                    caqr_dispatch, householder_fallback, cond_est, shift)
from ._profiler import (Kernel, KernelRecord, Profiler, export_csv,
                        read_stats_csv)
from ._config import ConfigError, load_config
from ._solver import (Status, SolverConfig, SolverState, SolverStats,
                      SolverResult, SolverError, solve, rayleigh_ritz,
                      residuals, lock_converged)


__all__ = ['GridError', 'UnsupportedRedistributionError', 'Layout',
           'DistKind', 'Distribution', 'CollectiveBackend',
           'InProcessBackend', 'Communicator', 'GridTopology',
           'DistributedMatrix', 'RankBuffers', 'Workspace', 'create_grid',
           'distribute', 'allreduce_sum', 'bcast', 'memory_model',
           'hemm_c_to_b', 'hemm_b_to_c', 'redistribute_c_to_b',
           'check_redistribution', 'EigensolverError', 'gemm', 'herk_gram',
           'potrf', 'trsm_right', 'householder_qr', 'heevd', 'unit_roundoff',
           'MatrixFile', 'MatrixSizeError', 'write_eigenvalues',
           'read_eigenvalues', 'SpectrumSpec', 'generate',
           'random_initial_vectors', 'write_matrix', 'read_matrix',
           'SpectralBounds', 'lanczos_bounds', 'update_bounds',
           'DegreeSchedule', 'FilterParams', 'chebyshev_filter',
           'degree_opt', 'sort_by_degree', 'CholeskyError', 'QrVariant',
           'QrVariantChoice', 'cholesky_qr', 'caqr_dispatch',
           'householder_fallback', 'cond_est', 'shift', 'Kernel',
           'KernelRecord', 'Profiler', 'export_csv', 'read_stats_csv',
           'ConfigError', 'load_config', 'Status', 'SolverConfig',
           'SolverState', 'SolverStats', 'SolverResult', 'SolverError',
           'solve', 'rayleigh_ritz', 'residuals', 'lock_converged']
