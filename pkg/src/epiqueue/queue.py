"""M/G/1 queue with catastrophes under processor sharing and preemptive LIFO.

Customers arrive at rate ``lam`` with i.i.d. workloads ``L``; catastrophes
form an independent Poisson(``delta``) stream that keeps running while the
queue is empty. Only the queue length at the first catastrophe is of interest.

:func:`time_change_transform` maps a recorded branching trajectory onto the
queue clock, stretching every stretch of branching time during which ``k``
individuals are alive by the factor ``k``.
"""
import csv
import enum
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .branching import BranchTrajectory, EventKind, MalformedTrajectory
from .replication import EventCaps, run_replications
from .stats import EmpiricalDistribution

PS, LIFO = "ps", "lifo"


class QueueStatus(enum.IntEnum):
    QUEUE_HIT = kernels.QUEUE_HIT
    EMPTY_AT_CATASTROPHE = kernels.EMPTY_AT_CATASTROPHE
    FIRST_BUSY_PERIOD_ENDED = kernels.BUSY_PERIOD_ENDED
    CENSORED = kernels.QUEUE_CENSORED

    @property
    def label(self):
        return self.name.lower()


class QueueEvent(enum.IntEnum):
    ARRIVAL = kernels.ARRIVAL
    DEPARTURE = kernels.DEPARTURE
    CATASTROPHE = kernels.CATASTROPHE


@dataclass(frozen=True)
class CatastropheOutcome:
    status: QueueStatus
    q_at_catastrophe: int
    time: float
    n_events: int
    trace: "QueueEventTrace | None" = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class QueueEventTrace:
    """Queue-clock events ``(u, kind, q_after)``."""

    u: np.ndarray
    kinds: np.ndarray
    q_after: np.ndarray

    def __len__(self):
        return len(self.u)

    def to_jsonl(self):
        lines = [json.dumps({"u": float(u), "kind": QueueEvent(int(k)).name.lower(), "q_after": int(q)})
                 for u, k, q in zip(self.u, self.kinds, self.q_after)]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, text):
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls(np.array([r["u"] for r in rows], dtype=float),
                   np.array([QueueEvent[r["kind"].upper()] for r in rows], dtype=np.int64),
                   np.array([r["q_after"] for r in rows], dtype=np.int64))


class QueueState:
    """Explicit single-server queue bookkeeping.

    Every customer carries its own remaining work, decremented on each
    :meth:`advance`. This is O(queue length) per step; the simulators use a
    lazy equivalent, and this class exists to state and check the service
    rules directly.
    """

    def __init__(self, discipline=PS):
        if discipline not in (PS, LIFO):
            raise ValueError(f"unknown discipline {discipline!r}")
        self.discipline = discipline
        self.now = 0.0
        self.customers = []  # [arrival_time, remaining_work], in arrival order

    def __len__(self):
        return len(self.customers)

    def arrive(self, work):
        if not work > 0:
            raise ValueError("workload must be > 0")
        self.customers.append([self.now, float(work)])

    def time_to_next_departure(self):
        if not self.customers:
            return np.inf
        if self.discipline == PS:
            return min(c[1] for c in self.customers) * len(self.customers)
        return self.customers[-1][1]

    def advance(self, dt):
        """Serve for ``dt`` time units; ``dt`` must not pass the next departure."""
        if dt < 0:
            raise ValueError("cannot go back in time")
        self.now += dt
        if not self.customers:
            return
        if self.discipline == PS:
            share = dt / len(self.customers)
            for c in self.customers:
                c[1] -= share
        else:
            self.customers[-1][1] -= dt

    def depart(self):
        """Remove the customer whose work is done (ties go to the earliest arrival)."""
        if self.discipline == PS:
            idx = min(range(len(self.customers)), key=lambda i: (self.customers[i][1], i))
        else:
            idx = len(self.customers) - 1
        return self.customers.pop(idx)


def _simulate(kernel, params, rng, caps, start_busy, stop_when_empty, record):
    code, a, b = params.lifetime.code
    status, q, t, n_events, ev_t, ev_k, ev_q = kernel(
        rng, float(params.lam), float(params.delta), code, a, b, int(caps.max_events),
        start_busy, stop_when_empty, bool(record))
    trace = QueueEventTrace(ev_t, ev_k, ev_q) if record else None
    return CatastropheOutcome(QueueStatus(status), int(q), float(t), int(n_events), trace)


def simulate_ps_from_empty(params, rng, caps=EventCaps(), record=False):
    """PS queue empty at time 0, run to the first catastrophe."""
    return _simulate(kernels.ps_first_catastrophe, params, rng, caps, False, False, record)


def simulate_ps_first_busy_period(params, rng, caps=EventCaps(), record=False):
    """PS queue with one customer arriving at time 0, stopped when it first empties."""
    return _simulate(kernels.ps_first_catastrophe, params, rng, caps, True, True, record)


def simulate_lifo_first_busy_period(params, rng, caps=EventCaps(), record=False):
    """Preemptive-resume LIFO counterpart of :func:`simulate_ps_first_busy_period`."""
    return _simulate(kernels.lifo_first_catastrophe, params, rng, caps, True, True, record)


def simulate_lifo_from_empty(params, rng, caps=EventCaps(), record=False):
    return _simulate(kernels.lifo_first_catastrophe, params, rng, caps, False, False, record)


RECORD_DTYPE = np.dtype([("status", np.int8), ("q", np.int64), ("time", np.float64),
                         ("n_events", np.int64)])

# (discipline, from_empty) -> kernel flags
MODES = {
    "ps_from_empty": (PS, False, False),
    "ps_busy": (PS, True, True),
    "lifo_busy": (LIFO, True, True),
    "lifo_from_empty": (LIFO, False, False),
}


def _block(rng, n, lifo, lam, delta, code, a, b, max_events, start_busy, stop_when_empty):
    return kernels.queue_block(rng, n, lifo, lam, delta, code, a, b, max_events,
                               start_busy, stop_when_empty)


@dataclass(frozen=True, eq=False)
class QueueBatch:
    records: np.ndarray
    seed: int
    mode: str

    @property
    def replications(self):
        return len(self.records)

    def status_count(self, status):
        return int(np.count_nonzero(self.records["status"] == status))

    @property
    def censored_count(self):
        return self.status_count(QueueStatus.CENSORED)

    @property
    def hit(self):
        return self.records["status"] == QueueStatus.QUEUE_HIT

    @property
    def hit_fraction(self):
        return self.status_count(QueueStatus.QUEUE_HIT) / self.replications

    @property
    def empty_fraction(self):
        """Fraction of replications with an empty queue at the catastrophe."""
        return self.status_count(QueueStatus.EMPTY_AT_CATASTROPHE) / self.replications

    def hit_distribution(self):
        """Queue length at the catastrophe, given it is positive."""
        return EmpiricalDistribution.from_samples(self.records["q"][self.hit], 1)

    def catastrophe_distribution(self):
        """Queue length at the catastrophe including zeros (from-empty modes)."""
        mask = ((self.records["status"] == QueueStatus.QUEUE_HIT)
                | (self.records["status"] == QueueStatus.EMPTY_AT_CATASTROPHE))
        return EmpiricalDistribution.from_samples(self.records["q"][mask], 0)

    def to_csv(self, fh=None):
        own = fh is None
        fh = fh or io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "status", "q_at_catastrophe", "time"])
        for i, r in enumerate(self.records):
            w.writerow([i, QueueStatus(int(r["status"])).label, int(r["q"]), repr(float(r["time"]))])
        return fh.getvalue() if own else None


def run_batch(params, mode, replications, seed, caps=EventCaps(), workers=1):
    """Batch of queue replications; ``mode`` is one of :data:`MODES`."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {sorted(MODES)}")
    discipline, start_busy, stop_when_empty = MODES[mode]
    code, a, b = params.lifetime.code
    args = (discipline == LIFO, float(params.lam), float(params.delta), code, a, b,
            int(caps.max_events), start_busy, stop_when_empty)
    recs = run_replications(_block, args, replications, seed, RECORD_DTYPE, workers)
    return QueueBatch(recs, int(seed), mode)


_KIND_MAP = {EventKind.BIRTH: QueueEvent.ARRIVAL, EventKind.DEATH: QueueEvent.DEPARTURE,
             EventKind.DETECTION: QueueEvent.CATASTROPHE}


def time_change_transform(traj: BranchTrajectory) -> QueueEventTrace:
    """Re-time a branching trajectory on the queue clock.

    Between consecutive events the population is some constant ``k >= 1``;
    that stretch lasts ``k`` times longer on the queue clock. Births, deaths
    and detections become arrivals, departures and catastrophes.
    """
    traj.validate()
    times = np.asarray(traj.times, dtype=float)
    pops = np.asarray(traj.populations, dtype=np.int64)
    before = np.concatenate(([1], pops[:-1]))
    gaps = np.diff(times, prepend=0.0)
    u = np.cumsum(before * gaps)
    if len(u) and np.any(np.diff(u) <= 0):
        raise MalformedTrajectory("queue-clock times are not strictly increasing")
    kinds = np.array([_KIND_MAP[EventKind(int(k))] for k in traj.kinds], dtype=np.int64)
    return QueueEventTrace(u, kinds, pops.copy())
