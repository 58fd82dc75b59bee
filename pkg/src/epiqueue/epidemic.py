"""Finite-population SIR and SEIR epidemics with detections.

Every pair of individuals meets at rate ``lam / (n - 1)``, which is simulated
as each infective contacting a uniformly chosen other individual at rate
``lam``. Infectives are detected at rate ``delta`` each. With a latent law
the newly infected first spend a latent period in the exposed class, during
which they neither infect nor can be detected.
"""
import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .analytic import ModelParams
from .lifetimes import Deterministic, LifetimeSpec
from .replication import EventCaps, run_replications
from .stats import EmpiricalDistribution


class EpidemicStatus(enum.IntEnum):
    DETECTED = kernels.DETECTED
    DIED_OUT = kernels.EXTINCT
    CENSORED = kernels.CENSORED

    @property
    def label(self):
        return self.name.lower()


@dataclass(frozen=True)
class PopulationParams:
    n: int
    model: ModelParams
    latent: LifetimeSpec | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"population size must be an integer >= 2, got {self.n!r}")
        if not isinstance(self.model, ModelParams):
            raise TypeError("model must be ModelParams")
        if self.latent is not None and not isinstance(self.latent, LifetimeSpec):
            raise TypeError("latent must be a LifetimeSpec or None")

    @property
    def pair_rate(self):
        return self.model.lam / (self.n - 1)


@dataclass(frozen=True)
class EpidemicOutcome:
    status: EpidemicStatus
    infectious_at_detection: int
    exposed_at_detection: int
    susceptibles_remaining: int
    detection_time: float
    total_ever_infected: int
    n_events: int
    history: np.ndarray | None = field(default=None, repr=False)  # rows (t, S, E, I, R)


def _args(pp, seir):
    icode, ia, ib = pp.model.lifetime.code
    lcode, la, lb = (pp.latent or Deterministic(0.0)).code
    return (int(pp.n), float(pp.model.lam), float(pp.model.delta), icode, ia, ib,
            lcode, la, lb, bool(seir))


def _simulate(pp, rng, caps, seir, record):
    status, i, e, s, t, n_events, hist = kernels.epidemic_first_detection(
        rng, *_args(pp, seir), int(caps.max_events), bool(record))
    return EpidemicOutcome(EpidemicStatus(status), int(i), int(e), int(s), float(t),
                           int(pp.n - s), int(n_events), hist if record else None)


def simulate_sir_first_detection(pp, rng, caps=EventCaps(), record=False):
    """SIR epidemic from one fresh infective, up to first detection or fade-out."""
    if pp.latent is not None:
        raise ValueError("SIR run given a latent period; use simulate_seir_first_detection")
    return _simulate(pp, rng, caps, False, record)


def simulate_seir_first_detection(pp, rng, caps=EventCaps(), record=False):
    if pp.latent is None:
        raise ValueError("SEIR run needs a latent period law")
    return _simulate(pp, rng, caps, True, record)


RECORD_DTYPE = np.dtype([("status", np.int8), ("infectious", np.int64), ("exposed", np.int64),
                         ("susceptible", np.int64), ("detection_time", np.float64),
                         ("total_ever_infected", np.int64), ("n_events", np.int64)])


def _block(rng, n_reps, n, lam, delta, icode, ia, ib, lcode, la, lb, seir, max_events):
    return kernels.epidemic_block(rng, n_reps, n, lam, delta, icode, ia, ib, lcode, la, lb,
                                  seir, max_events)


@dataclass(frozen=True, eq=False)
class EpidemicBatch:
    records: np.ndarray
    seed: int
    seir: bool

    @property
    def replications(self):
        return len(self.records)

    @property
    def detected(self):
        return self.records["status"] == EpidemicStatus.DETECTED

    @property
    def detected_fraction(self):
        return int(np.count_nonzero(self.detected)) / self.replications

    @property
    def censored_count(self):
        return int(np.count_nonzero(self.records["status"] == EpidemicStatus.CENSORED))

    def infectious_distribution(self):
        """Infectives at first detection, given detection."""
        return EmpiricalDistribution.from_samples(self.records["infectious"][self.detected], 1)

    def infected_distribution(self):
        """Exposed plus infectious at first detection, given detection."""
        r = self.records[self.detected]
        return EmpiricalDistribution.from_samples(r["infectious"] + r["exposed"], 1)

    def to_csv(self, fh=None):
        own = fh is None
        fh = fh or io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "status", "I_at_detection", "E_at_detection", "S_remaining",
                    "total_ever_infected", "detection_time"])
        for i, r in enumerate(self.records):
            det = r["status"] == EpidemicStatus.DETECTED
            w.writerow([i, EpidemicStatus(int(r["status"])).label,
                        int(r["infectious"]) if det else "", int(r["exposed"]) if det else "",
                        int(r["susceptible"]), int(r["total_ever_infected"]),
                        repr(float(r["detection_time"])) if det else ""])
        return fh.getvalue() if own else None


def run_batch(pp, replications, seed, caps=EventCaps(), workers=1):
    """SIR batch when ``pp.latent`` is None, SEIR otherwise."""
    seir = pp.latent is not None
    args = _args(pp, seir) + (int(caps.max_events),)
    recs = run_replications(_block, args, replications, seed, RECORD_DTYPE, workers)
    return EpidemicBatch(recs, int(seed), seir)
