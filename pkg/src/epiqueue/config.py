"""Experiment configuration files and the batch runner behind the CLI.

A config is one JSON document::

    {
      "model": {"lambda": 2.0, "delta": 0.5,
                "lifetime": {"kind": "exponential", "rate": 1.0}},
      "process": "branching",
      "replications": 100000,
      "seed": 20240101,
      "caps": {"max_events": 10000000},
      "output": {"format": "csv", "path": "branching.csv"}
    }

``population_n`` is required for ``sir``/``seir`` and ``latent`` for ``seir``;
both are rejected for other processes.
"""
import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np
import scipy

from . import __version__, branching, epidemic, queue
from . import lifetimes as lt
from .analytic import ModelParams, geometric_pmf, solve_pi
from .replication import EventCaps
from .stats import InsufficientData, chi_square_gof, geometric_mle

PROCESSES = ("sir", "seir", "branching", "queue_ps", "queue_ps_busy", "queue_lifo")
_QUEUE_MODES = {"queue_ps": "ps_from_empty", "queue_ps_busy": "ps_busy", "queue_lifo": "lifo_busy"}
_TOP_FIELDS = {"model", "process", "population_n", "latent", "replications", "seed", "caps",
               "output", "workers"}


class ConfigError(ValueError):
    """Invalid configuration; ``where`` names the offending field or line."""

    def __init__(self, where, message):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class OutputSpec:
    format: str = "csv"
    path: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams
    process: str
    replications: int
    seed: int
    population_n: int | None = None
    latent: lt.LifetimeSpec | None = None
    caps: EventCaps = field(default_factory=EventCaps)
    output: OutputSpec = field(default_factory=OutputSpec)
    workers: int = 1

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "process": self.process,
            "population_n": self.population_n,
            "latent": self.latent.to_dict() if self.latent is not None else None,
            "replications": self.replications,
            "seed": self.seed,
            "caps": {"max_events": self.caps.max_events},
            "output": {"format": self.output.format, "path": self.output.path},
        }

    def digest(self):
        """SHA-256 of the canonical JSON form (output location and workers excluded)."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        out = {}
        if "format" in kw or "path" in kw:
            out["output"] = OutputSpec(kw.pop("format", self.output.format),
                                       kw.pop("path", self.output.path))
        if "max_events" in kw:
            out["caps"] = _caps({"max_events": kw.pop("max_events")})
        for k in ("replications", "seed", "workers"):
            if k in kw:
                out[k] = _int(kw.pop(k), k, minimum=1 if k != "seed" else 0)
        if kw:
            raise ConfigError("overrides", f"unknown fields {sorted(kw)}")
        return replace(self, **out)


def _int(v, where, minimum=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(where, f"must be an integer, got {v!r}")
    v = int(v)
    if minimum is not None and v < minimum:
        raise ConfigError(where, f"must be >= {minimum}, got {v}")
    return v


def _num(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(where, f"must be a number, got {v!r}")
    return float(v)


def _lifetime(obj, where):
    try:
        return lt.from_dict(obj)
    except (ValueError, TypeError) as exc:
        raise ConfigError(where, str(exc)) from None


def _caps(obj):
    if not isinstance(obj, dict):
        raise ConfigError("caps", "must be an object")
    extra = set(obj) - {"max_events"}
    if extra:
        raise ConfigError("caps", f"unknown fields {sorted(extra)}")
    return EventCaps(_int(obj.get("max_events", EventCaps().max_events), "caps.max_events", 1))


def parse_model(obj):
    if not isinstance(obj, dict):
        raise ConfigError("model", "must be an object")
    extra = set(obj) - {"lambda", "delta", "lifetime"}
    if extra:
        raise ConfigError("model", f"unknown fields {sorted(extra)}")
    for k in ("lambda", "delta", "lifetime"):
        if k not in obj:
            raise ConfigError(f"model.{k}", "missing")
    lam = _num(obj["lambda"], "model.lambda")
    delta = _num(obj["delta"], "model.delta")
    if not lam > 0:
        raise ConfigError("model.lambda", f"must be > 0, got {lam}")
    if not delta > 0:
        raise ConfigError("model.delta", f"must be > 0, got {delta}")
    life = _lifetime(obj["lifetime"], "model.lifetime")
    try:
        return ModelParams(lam, delta, life)
    except (ValueError, TypeError) as exc:
        raise ConfigError("model.lifetime", str(exc)) from None


def parse_config(obj):
    """Validate a decoded JSON document into an :class:`ExperimentConfig`."""
    if not isinstance(obj, dict):
        raise ConfigError("config", "top level must be an object")
    extra = set(obj) - _TOP_FIELDS
    if extra:
        raise ConfigError("config", f"unknown fields {sorted(extra)}")
    for k in ("model", "process", "replications", "seed"):
        if k not in obj:
            raise ConfigError(k, "missing")
    model = parse_model(obj["model"])
    process = obj["process"]
    if process not in PROCESSES:
        raise ConfigError("process", f"must be one of {list(PROCESSES)}, got {process!r}")
    n = obj.get("population_n")
    latent = obj.get("latent")
    if process in ("sir", "seir"):
        if n is None:
            raise ConfigError("population_n", f"required for process {process!r}")
        n = _int(n, "population_n", 2)
    elif n is not None:
        raise ConfigError("population_n", f"not allowed for process {process!r}")
    if process == "seir":
        if latent is None:
            raise ConfigError("latent", "required for process 'seir'")
        latent = _lifetime(latent, "latent")
    elif latent is not None:
        raise ConfigError("latent", f"only allowed for process 'seir', not {process!r}")
    out = obj.get("output", {}) or {}
    if not isinstance(out, dict):
        raise ConfigError("output", "must be an object")
    extra = set(out) - {"format", "path"}
    if extra:
        raise ConfigError("output", f"unknown fields {sorted(extra)}")
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("output.format", f"must be 'csv' or 'json', got {fmt!r}")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path", "must be a string")
    return ExperimentConfig(
        model=model, process=process,
        replications=_int(obj["replications"], "replications", 1),
        seed=_int(obj["seed"], "seed", 0),
        population_n=n, latent=latent,
        caps=_caps(obj.get("caps", {})),
        output=OutputSpec(fmt, path),
        workers=_int(obj.get("workers", 1), "workers", 1),
    )


def loads_config(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return parse_config(obj)


def load_config(path):
    with open(path) as fh:
        return loads_config(fh.read())


class ExperimentResult:
    """A finished batch plus the bits every report needs."""

    def __init__(self, config, batch):
        self.config = config
        self.batch = batch

    @property
    def process(self):
        return self.config.process

    def conditioned_distribution(self):
        """Counts the geometric law is claimed for (detection / queue hit given)."""
        b = self.batch
        if self.process == "branching":
            return b.count_distribution()
        if self.process == "sir":
            return b.infectious_distribution()
        if self.process == "seir":
            return b.infected_distribution()
        return b.hit_distribution()

    def status_counts(self):
        b = self.batch
        enum_cls = {"branching": branching.Status, "sir": epidemic.EpidemicStatus,
                    "seir": epidemic.EpidemicStatus}.get(self.process, queue.QueueStatus)
        return {s.label: int(np.count_nonzero(b.records["status"] == s)) for s in enum_cls}

    def hit_fraction(self):
        b = self.batch
        if self.process in ("branching", "sir", "seir"):
            return b.detected_fraction
        return b.hit_fraction

    def csv(self):
        return self.batch.to_csv()

    def summary(self):
        cfg = self.config
        dist = self.conditioned_distribution()
        out = {
            "config_hash": cfg.digest(),
            "config": cfg.to_dict(),
            "versions": {"epiqueue": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__},
            "seed": cfg.seed,
            "replications": cfg.replications,
            "status_counts": self.status_counts(),
            "censored": int(self.batch.censored_count),
            "hit_fraction": self.hit_fraction(),
            "conditioned_distribution": dist.to_dict(),
            "p_hat": geometric_mle(dist) if dist.total else None,
        }
        if self.process == "queue_ps":
            out["empty_fraction"] = self.batch.empty_fraction
        if self.process == "seir":
            out["infectious_distribution"] = self.batch.infectious_distribution().to_dict()
        sol = solve_pi(cfg.model)
        out["analytic"] = sol.to_dict()
        try:
            out["gof"] = chi_square_gof(dist, geometric_pmf(sol.p)).to_dict()
        except InsufficientData as exc:
            out["gof"] = {"error": str(exc)}
        return out


def run_experiment(cfg):
    if cfg.process == "branching":
        batch = branching.run_batch(cfg.model, cfg.replications, cfg.seed, cfg.caps, cfg.workers)
    elif cfg.process in ("sir", "seir"):
        pp = epidemic.PopulationParams(cfg.population_n, cfg.model, cfg.latent)
        batch = epidemic.run_batch(pp, cfg.replications, cfg.seed, cfg.caps, cfg.workers)
    else:
        batch = queue.run_batch(cfg.model, _QUEUE_MODES[cfg.process], cfg.replications, cfg.seed,
                                cfg.caps, cfg.workers)
    return ExperimentResult(cfg, batch)
