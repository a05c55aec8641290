# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import argparse
import logging
import sys

import numpy as np
import psutil

from . import __version__
from ._caqr import QR_MODES
from ._config import ConfigError, load_config
from ._format import (SCALAR_DTYPES, MatrixFile, MatrixSizeError,
                      scalar_dtype, write_eigenvalues)
from ._grid import (GridError, GridTopology, check_redistribution,
                    distribute, memory_model, parse_grid)
from ._matgen import SpectrumSpec, generate, write_matrix
from ._profiler import Profiler, export_csv
from ._solver import SolverConfig, SolverError, solve


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NOT_CONVERGED = 3

# options that map one-to-one onto SolverConfig fields
_SOLVER_FIELDS = ('nev', 'nex', 'tol', 'deg_init', 'deg_max', 'max_iter',
                  'opt', 'seed', 'qr', 'lanczos_steps', 'lanczos_vectors',
                  'debug', 'scalar', 'grid', 'dist', 'mb', 'nb')


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '%s: error: %s\n' % (self.prog, message))


def _add_common(parser):
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='INFO logging with -v, DEBUG with -vv')
    parser.add_argument('--scalar', choices=sorted(SCALAR_DTYPES),
                        default=None, help='scalar kind (default: r64)')
    parser.add_argument('--n', type=int, default=None,
                        help='matrix dimension')
    parser.add_argument('--seed', type=int, default=None,
                        help='random seed (default: 0)')


def build_parser():
    parser = _Parser(prog='pychase',
                     description='Chebyshev-filtered subspace iteration for '
                                 'dense Hermitian eigenproblems on a '
                                 'simulated process grid.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    gen = sub.add_parser('generate', help='write a test matrix with a '
                                          'prescribed spectrum')
    _add_common(gen)
    gen.add_argument('--uniform', required=True, metavar='LO,HI',
                     help='eigenvalues evenly spaced in [LO, HI]')
    gen.add_argument('--out', required=True, help='output matrix file')

    slv = sub.add_parser('solve', help='compute the lowest eigenpairs')
    _add_common(slv)
    slv.add_argument('--config', default=None,
                     help='YAML file of option values; flags override it')
    source = slv.add_mutually_exclusive_group()
    source.add_argument('--uniform', default=None, metavar='LO,HI',
                        help='generate the matrix in memory')
    source.add_argument('--matrix-file', default=None,
                        help='read the matrix from a headerless binary file')
    slv.add_argument('--nev', type=int, default=None)
    slv.add_argument('--nex', type=int, default=None)
    slv.add_argument('--tol', type=float, default=None)
    slv.add_argument('--deg', dest='deg_init', type=int, default=None,
                     help='initial filter degree (default: 20)')
    slv.add_argument('--deg-max', type=int, default=None,
                     help='maximal filter degree (default: 36)')
    slv.add_argument('--max-iter', type=int, default=None)
    slv.add_argument('--no-opt', dest='opt', action='store_const',
                     const=False, default=None,
                     help='keep every filter degree at its initial value')
    slv.add_argument('--qr', choices=QR_MODES, default=None)
    slv.add_argument('--grid', default=None, metavar='PxQ')
    slv.add_argument('--dist', choices=('block', 'block-cyclic'),
                     default=None)
    slv.add_argument('--mb', type=int, default=None)
    slv.add_argument('--nb', type=int, default=None)
    slv.add_argument('--lanczos-steps', type=int, default=None)
    slv.add_argument('--lanczos-vectors', type=int, default=None)
    slv.add_argument('--debug', action='store_const', const=True,
                     default=None,
                     help='check the projected problem across ranks')
    slv.add_argument('--out-evals', default=None)
    slv.add_argument('--out-evecs', default=None)
    slv.add_argument('--stats', default=None)
    return parser


_FILE_KEYS = ('n', 'seed', 'scalar', 'uniform', 'matrix_file', 'nev', 'nex',
              'tol', 'deg', 'deg_max', 'max_iter', 'no_opt', 'qr', 'grid',
              'dist', 'mb', 'nb', 'lanczos_steps', 'lanczos_vectors', 'debug',
              'out_evals', 'out_evecs', 'stats')


def _file_options(path):
    """Configuration file values, keyed like the parsed arguments."""
    options = load_config(path, _FILE_KEYS)
    if 'deg' in options:
        options['deg_init'] = options.pop('deg')
    if 'no_opt' in options:
        options['opt'] = not options.pop('no_opt')
    return options


def parse_uniform(value):
    """``'lo,hi'`` (or a two-item sequence) into two floats."""
    if isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        parts = str(value).split(',')
    try:
        lo, hi = (float(p) for p in parts)
    except (TypeError, ValueError):
        raise UsageError('Spectrum range must be given as LO,HI, got %r.'
                         % (value,))
    if not lo <= hi:
        raise UsageError('Spectrum range %r is empty.' % (value,))
    return lo, hi


def _configure_logging(verbosity):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity,
                                                       logging.DEBUG)
    logging.basicConfig(level=level,
                        format='%(asctime)s %(name)s %(levelname)s: '
                               '%(message)s')
    logging.getLogger('pychase').setLevel(level)


def cmd_generate(args):
    if args.n is None or args.n < 1:
        raise UsageError('--n must be a positive integer.')
    lo, hi = parse_uniform(args.uniform)
    scalar = args.scalar or 'r64'
    seed = 0 if args.seed is None else args.seed
    if seed < 0:
        raise UsageError('--seed must be non-negative.')
    spec = SpectrumSpec(args.n, lo, hi)
    matrix = generate(spec, seed, scalar_dtype(scalar))
    write_matrix(matrix, args.out)
    print('N=%d spectrum=[%r, %r] seed=%d scalar=%s out=%s'
          % (args.n, lo, hi, seed, scalar, args.out))
    return EXIT_OK


def _merge_options(args):
    options = {}
    if args.config is not None:
        options.update(_file_options(args.config))
    for key, value in vars(args).items():
        if value is not None and key not in ('config', 'verbose', 'command'):
            options[key] = value
    if options.get('uniform') is not None and \
            options.get('matrix_file') is not None:
        raise UsageError('--uniform and --matrix-file are mutually '
                         'exclusive.')
    return options


def _warn_memory(n, n_e, topo, dtype):
    elements = memory_model(n, n_e, topo.p, topo.q)
    needed = elements * topo.size * np.dtype(dtype).itemsize
    logger.info('Memory model: %.0f elements per rank, %.0f bytes for the '
                'grid.', elements, needed)
    available = psutil.virtual_memory().available
    if needed > available:
        logger.warning('The %dx%d grid needs about %d bytes, only %d are '
                       'available.', topo.p, topo.q, needed, available)


def _load_matrix(options, scalar, seed):
    n = options.get('n')
    if n is None or n < 1:
        raise UsageError('--n must be a positive integer.')
    dtype = scalar_dtype(scalar)
    if options.get('uniform') is not None:
        lo, hi = parse_uniform(options['uniform'])
        return generate(SpectrumSpec(n, lo, hi), seed, dtype)
    if options.get('matrix_file') is not None:
        return MatrixFile(options['matrix_file'], n, scalar=scalar).read()
    raise UsageError('One of --uniform or --matrix-file is required.')


def cmd_solve(args):
    options = _merge_options(args)
    grid = options.get('grid')
    if isinstance(grid, str):
        options['grid'] = parse_grid(grid)
    if options.get('nev') is None or options.get('nex') is None:
        raise UsageError('--nev and --nex are required.')
    config = SolverConfig(**{k: options[k] for k in _SOLVER_FIELDS
                             if k in options})

    p, q = config.grid or (1, 1)
    topo = GridTopology(p, q)
    check_redistribution(topo, config.distribution())

    matrix = _load_matrix(options, config.scalar, config.seed)
    config.check_size(matrix.shape[0])
    _warn_memory(matrix.shape[0], config.n_e, topo, matrix.dtype)
    H = distribute(matrix, config.distribution(), topo)
    del matrix

    profiler = Profiler(topo.size, precision=H.dtype)
    result = solve(H, config, profiler)

    if options.get('out_evals') is not None:
        write_eigenvalues(result.eigenvalues, options['out_evals'])
    if options.get('out_evecs') is not None:
        vectors = result.gather_eigenvectors()
        MatrixFile(options['out_evecs'], vectors.shape[0], vectors.shape[1],
                   config.scalar).write(vectors)
    if options.get('stats') is not None:
        export_csv(result.stats.records, options['stats'],
                   precision=H.dtype)

    stats = result.stats
    print('iters=%d matvecs=%d locked=%d time_s=%.3f'
          % (stats.iterations, stats.matvecs, min(result.locked, config.nev),
             stats.wall_s))
    if not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _fail(code, message):
    print('pychase: error: %s' % message, file=sys.stderr)
    return code


def join_negative_values(argv, options=('--uniform',)):
    """Attach a value starting with '-' to its option, as ``--opt=value``.

    argparse takes ``-1,1`` for an unknown flag otherwise.
    """
    out = []
    it = iter(argv)
    for arg in it:
        if arg in options:
            value = next(it, None)
            if value is not None and value.startswith('-') \
                    and not value.startswith('--'):
                out.append('%s=%s' % (arg, value))
                continue
            out.append(arg)
            if value is not None:
                out.append(value)
            continue
        out.append(arg)
    return out


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(join_negative_values(argv))
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    _configure_logging(args.verbose)

    try:
        if args.command == 'generate':
            return cmd_generate(args)
        return cmd_solve(args)
    except (MatrixSizeError, OSError) as e:
        return _fail(EXIT_IO, e)
    except (UsageError, ConfigError, GridError) as e:
        return _fail(EXIT_USAGE, e)
    except SolverError as e:
        return _fail(EXIT_NOT_CONVERGED, e)
    except ValueError as e:
        return _fail(EXIT_USAGE, e)
