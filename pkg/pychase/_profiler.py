# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import contextlib
import dataclasses
import enum
import time

import pandas as pd


class Kernel(enum.Enum):
    LANCZOS = 'Lanczos'
    FILTER = 'Filter'
    QR = 'QR'
    RR = 'RR'
    RESID = 'Resid'

    @property
    def order(self):
        return list(Kernel).index(self)


PHASES = ('compute', 'comm', 'copy')

CSV_COLUMNS = ['kernel', 'iteration', 'compute_s', 'comm_s', 'copy_s',
               'messages', 'words']


@dataclasses.dataclass
class KernelRecord:
    kernel: Kernel
    iteration: int
    compute_s: float = 0.0
    comm_s: float = 0.0
    copy_s: float = 0.0
    messages: int = 0
    words: int = 0

    @property
    def key(self):
        return self.iteration, self.kernel.order

    def merge_max(self, other):
        return KernelRecord(
            self.kernel, self.iteration,
            max(self.compute_s, other.compute_s),
            max(self.comm_s, other.comm_s),
            max(self.copy_s, other.copy_s),
            max(self.messages, other.messages),
            max(self.words, other.words))


class Profiler:
    """Per-rank kernel timings and collective counters.

    Attach the profiler to a collective backend and wrap each kernel in a
    span; collectives that happen inside the span are charged to its
    communication phase on every participating rank, the remaining wall
    time to its compute phase.
    """

    def __init__(self, num_ranks, precision='float64'):
        self.num_ranks = num_ranks
        self.precision = str(precision)
        self._ranks = [dict() for _ in range(num_ranks)]
        self._active = None
        self._span_comm = 0.0

    def _entry(self, kernel, iteration, rank):
        records = self._ranks[rank]
        key = (kernel, iteration)
        if key not in records:
            records[key] = KernelRecord(kernel, iteration)
        return records[key]

    def record(self, kernel, phase, duration, messages=0, words=0,
               iteration=0, rank=0):
        """Accumulate into the (kernel, iteration) record of `rank`."""
        if phase not in PHASES:
            raise ValueError('Unknown phase %r, expected one of %s.'
                             % (phase, ', '.join(PHASES)))
        if duration < 0 or messages < 0 or words < 0:
            raise ValueError('Durations and counters must be non-negative.')
        entry = self._entry(Kernel(kernel), iteration, rank)
        setattr(entry, phase + '_s', getattr(entry, phase + '_s') + duration)
        entry.messages += messages
        entry.words += words

    def on_collective(self, ranks, words, seconds):
        if self._active is None:
            return
        kernel, iteration = self._active
        self._span_comm += seconds
        for rank in ranks:
            self.record(kernel, 'comm', seconds, 1, words, iteration, rank)

    @contextlib.contextmanager
    def span(self, kernel, iteration):
        if self._active is not None:
            raise RuntimeError('Kernel span %s is already open.'
                               % self._active[0].value)
        self._active = (Kernel(kernel), iteration)
        self._span_comm = 0.0
        start = time.perf_counter()
        try:
            yield self
        finally:
            elapsed = time.perf_counter() - start
            compute = max(elapsed - self._span_comm, 0.0)
            for rank in range(self.num_ranks):
                self.record(kernel, 'compute', compute, iteration=iteration,
                            rank=rank)
            self._active = None

    @contextlib.contextmanager
    def attached(self, backend):
        previous = backend.observer
        backend.observer = self
        try:
            yield self
        finally:
            backend.observer = previous

    def rank_records(self, rank):
        return sorted(self._ranks[rank].values(), key=lambda r: r.key)

    def merged(self):
        """Records of all ranks merged by element-wise maximum."""
        merged = {}
        for records in self._ranks:
            for key, entry in records.items():
                if key in merged:
                    merged[key] = merged[key].merge_max(entry)
                else:
                    merged[key] = dataclasses.replace(entry)
        return sorted(merged.values(), key=lambda r: r.key)


def stats_frame(records):
    rows = [[r.kernel.value, r.iteration, r.compute_s, r.comm_s, r.copy_s,
             r.messages, r.words] for r in records]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def export_csv(records, path, precision='float64'):
    with open(str(path), 'w') as fh:
        fh.write('# precision=%s\n' % precision)
        stats_frame(sorted(records, key=lambda r: r.key)).to_csv(
            fh, index=False)


def read_stats_csv(path):
    df = pd.read_csv(str(path), comment='#')
    return [KernelRecord(Kernel(row.kernel), int(row.iteration),
                         float(row.compute_s), float(row.comm_s),
                         float(row.copy_s), int(row.messages),
                         int(row.words))
            for row in df.itertuples(index=False)]


def read_precision(path):
    with open(str(path)) as fh:
        first = fh.readline().strip()
    if first.startswith('#') and '=' in first:
        return first.split('=', 1)[1]
    return None
