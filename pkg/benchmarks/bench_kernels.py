"""Compiled kernels vs the pure-Python fallback.

Each backend runs in its own interpreter because the choice is made at
import time from ``EPIQUEUE_NO_NUMBA``. Compilation is excluded by a warm-up
batch. Both backends must produce byte-identical batches; the script checks
this with a digest of the CSV output.

    python3 benchmarks/bench_kernels.py --replications 20000
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import hashlib, json, sys, time
from epiqueue import _accel, branching, epidemic, queue
from epiqueue.analytic import ModelParams
from epiqueue.lifetimes import Exponential, Gamma

reps = int(sys.argv[1])
params = ModelParams(2.0, 0.5, Exponential(1.0))
gamma = ModelParams(2.0, 0.5, Gamma(2.0, 0.5))
slow_detect = ModelParams(2.0, 0.05, Exponential(1.0))  # longer paths
cases = {
    "branching/exp": lambda n: branching.run_batch(params, n, seed=1),
    "branching/delta=0.05": lambda n: branching.run_batch(slow_detect, n, seed=5),
    "ps_from_empty/gamma": lambda n: queue.run_batch(gamma, "ps_from_empty", n, seed=2),
    "lifo_busy/exp": lambda n: queue.run_batch(params, "lifo_busy", n, seed=3),
    "sir/n=1e4": lambda n: epidemic.run_batch(epidemic.PopulationParams(10**4, params), n, seed=4),
}
out = {"backend": _accel.backend(), "cases": {}}
for name, run in cases.items():
    run(50)  # compile / warm caches
    t0 = time.perf_counter()
    batch = run(reps)
    dt = time.perf_counter() - t0
    digest = hashlib.sha256(batch.to_csv().encode()).hexdigest()[:16]
    out["cases"][name] = {"seconds": dt, "per_second": reps / dt, "digest": digest}
print(json.dumps(out))
"""


def run_backend(disable, reps):
    env = dict(os.environ)
    env.pop("EPIQUEUE_NO_NUMBA", None)
    if disable:
        env["EPIQUEUE_NO_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKER, str(reps)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replications", type=int, default=20_000)
    ap.add_argument("--json", help="also write raw timings here")
    args = ap.parse_args(argv)

    fast = run_backend(False, args.replications)
    slow = run_backend(True, args.replications)
    if fast["backend"] != "numba":
        print("numba is not importable; only the fallback was timed", file=sys.stderr)

    print(f"{'case':22s} {'numba s':>9s} {'python s':>9s} {'speedup':>8s}  identical")
    same = True
    for name, f in fast["cases"].items():
        s = slow["cases"][name]
        ok = f["digest"] == s["digest"]
        same &= ok
        print(f"{name:22s} {f['seconds']:9.2f} {s['seconds']:9.2f} "
              f"{s['seconds'] / f['seconds']:7.1f}x  {'yes' if ok else 'NO'}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"replications": args.replications, "numba": fast, "python": slow}, fh, indent=2)
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
