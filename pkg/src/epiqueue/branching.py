"""Branching process with detections.

Individuals live i.i.d. lifetimes ``L``, give birth at rate ``lam`` and are
detected at rate ``delta`` while alive. The process starts from a single
newborn ancestor at time 0 and is followed up to the first detection.
"""
import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .replication import EventCaps, run_replications
from .stats import EmpiricalDistribution


class Status(enum.IntEnum):
    DETECTED = kernels.DETECTED
    EXTINCT = kernels.EXTINCT
    CENSORED = kernels.CENSORED

    @property
    def label(self):
        return self.name.lower()


class EventKind(enum.IntEnum):
    BIRTH = kernels.BIRTH
    DEATH = kernels.DEATH
    DETECTION = kernels.DETECTION


class MalformedTrajectory(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BranchTrajectory:
    """Recorded events ``(time, kind, population_after)``; population is 1 at time 0."""

    times: np.ndarray
    kinds: np.ndarray
    populations: np.ndarray

    def __len__(self):
        return len(self.times)

    def validate(self):
        """Raise :class:`MalformedTrajectory` unless the event log is consistent."""
        times = np.asarray(self.times, dtype=float)
        kinds = np.asarray(self.kinds)
        pops = np.asarray(self.populations)
        if not (len(times) == len(kinds) == len(pops)):
            raise MalformedTrajectory("times, kinds and populations differ in length")
        if len(times) == 0:
            return
        if times[0] <= 0 or np.any(np.diff(times) <= 0):
            raise MalformedTrajectory("event times must be positive and strictly increasing")
        before = np.concatenate(([1], pops[:-1]))
        if np.any(before < 1):
            raise MalformedTrajectory("event after extinction")
        step = np.select([kinds == EventKind.BIRTH, kinds == EventKind.DEATH,
                          kinds == EventKind.DETECTION], [1, -1, 0], default=99)
        if np.any(step == 99):
            raise MalformedTrajectory("unknown event kind")
        if np.any(pops - before != step):
            raise MalformedTrajectory("population change does not match event kind")


@dataclass(frozen=True)
class DetectionOutcome:
    status: Status
    total_born: int
    n_events: int
    count_at_detection: int | None = None
    detection_time: float | None = None
    trajectory: BranchTrajectory | None = field(default=None, repr=False)


def _block(rng, n, lam, delta, code, a, b, max_events):
    return kernels.branching_block(rng, n, lam, delta, code, a, b, max_events)


def simulate_first_detection(params, rng, caps=EventCaps(), record_trajectory=False):
    """Run one replication of the branching process up to its first detection."""
    code, a, b = params.lifetime.code
    status, count, t, born, n_events, ev_t, ev_k, ev_z = kernels.branching_first_detection(
        rng, float(params.lam), float(params.delta), code, a, b, int(caps.max_events),
        bool(record_trajectory))
    status = Status(status)
    traj = BranchTrajectory(ev_t, ev_k, ev_z) if record_trajectory else None
    if status is Status.DETECTED:
        return DetectionOutcome(status, born, n_events, count, t, traj)
    return DetectionOutcome(status, born, n_events, trajectory=traj)


RECORD_DTYPE = np.dtype([("status", np.int8), ("count", np.int64), ("total_born", np.int64),
                         ("detection_time", np.float64), ("n_events", np.int64)])


@dataclass(frozen=True, eq=False)
class BranchingBatch:
    """Per-replication records of a batch, indexed by replication number."""

    records: np.ndarray
    seed: int

    @property
    def replications(self):
        return len(self.records)

    @property
    def detected(self):
        return self.records["status"] == Status.DETECTED

    @property
    def censored_count(self):
        return int(np.count_nonzero(self.records["status"] == Status.CENSORED))

    @property
    def detected_count(self):
        return int(np.count_nonzero(self.detected))

    @property
    def detected_fraction(self):
        return self.detected_count / self.replications

    @property
    def uncensored(self):
        return self.replications - self.censored_count

    def count_distribution(self):
        """Population at first detection, given detection."""
        return EmpiricalDistribution.from_samples(self.records["count"][self.detected], 1)

    def total_born_distribution(self):
        """Individuals ever born (ancestor included) by first detection, given detection."""
        return EmpiricalDistribution.from_samples(self.records["total_born"][self.detected], 1)

    def to_csv(self, fh=None):
        own = fh is None
        fh = fh or io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "status", "count", "total_born", "detection_time"])
        for i, r in enumerate(self.records):
            det = r["status"] == Status.DETECTED
            w.writerow([i, Status(int(r["status"])).label, int(r["count"]) if det else "",
                        int(r["total_born"]), repr(float(r["detection_time"])) if det else ""])
        return fh.getvalue() if own else None


def run_batch(params, replications, seed, caps=EventCaps(), workers=1):
    """Independent replications, seeded block-wise (see :mod:`epiqueue.replication`)."""
    code, a, b = params.lifetime.code
    args = (float(params.lam), float(params.delta), code, a, b, int(caps.max_events))
    recs = run_replications(_block, args, replications, seed, RECORD_DTYPE, workers)
    return BranchingBatch(recs, int(seed))


def simulate_birth_death(lam2, mu, tau, initial, rng):
    """Size at ``tau`` of a linear birth-death process started from ``initial`` individuals."""
    return int(kernels.birth_death_at(rng, float(lam2), float(mu), float(tau), int(initial)))


def sample_birth_death(lam2, mu, tau, initial, rng):
    """Vectorised :func:`simulate_birth_death` over an array of initial sizes."""
    init = np.asarray(initial, dtype=np.int64)
    return kernels.birth_death_batch(rng, float(lam2), float(mu), float(tau), init)
