"""Event-loop kernels for every simulated process.

Each kernel runs one replication against an explicit
``numpy.random.Generator`` and returns plain scalars plus (optionally)
recorded event arrays. Lifetime laws travel as the ``(code, a, b)`` triple
from :attr:`epiqueue.lifetimes.LifetimeSpec.code`.

Aggregate memoryless clocks (births + detections, arrivals + catastrophes,
contacts + detections) are re-drawn after every event; scheduled lifetimes
live in a binary heap.
"""
import heapq

import numpy as np

from ._accel import jit

# branching / epidemic statuses
DETECTED, EXTINCT, CENSORED = 0, 1, 2
# queue statuses
QUEUE_HIT, EMPTY_AT_CATASTROPHE, BUSY_PERIOD_ENDED, QUEUE_CENSORED = 0, 1, 2, 3
# branching event kinds; the queue reuses the numbering for arrival/departure/catastrophe
BIRTH, DEATH, DETECTION = 0, 1, 2
ARRIVAL, DEPARTURE, CATASTROPHE = 0, 1, 2
# scheduled epidemic events
RECOVERY, LATENCY_END = 0, 1


@jit
def draw_lifetime(gen, code, a, b):
    if code == 0:
        return gen.exponential(1.0 / a)
    elif code == 1:
        return a
    elif code == 2:
        return gen.gamma(a, b)
    elif code == 3:
        return gen.uniform(a, b)
    else:
        return gen.lognormal(a, b)


@jit
def branching_first_detection(gen, lam, delta, code, a, b, max_events, record):
    """Branching process with detections, run until detection/extinction/cap.

    Returns ``(status, count, time, total_born, n_events, ev_time, ev_kind, ev_pop)``.
    """
    t = 0.0
    z = 1
    born = 1
    deaths = [draw_lifetime(gen, code, a, b)]
    ev_time = [0.0]
    ev_kind = [0]
    ev_pop = [0]
    ev_time.pop()
    ev_kind.pop()
    ev_pop.pop()
    rate = lam + delta
    n_events = 0
    status = CENSORED
    count = 0
    while True:
        if z == 0:
            status = EXTINCT
            break
        if n_events >= max_events:
            status = CENSORED
            break
        dt = gen.exponential(1.0 / (rate * z))
        if t + dt < deaths[0]:
            t += dt
            if gen.random() * rate < lam:
                z += 1
                born += 1
                heapq.heappush(deaths, t + draw_lifetime(gen, code, a, b))
                kind = BIRTH
            else:
                kind = DETECTION
        else:
            t = heapq.heappop(deaths)
            z -= 1
            kind = DEATH
        n_events += 1
        if record:
            ev_time.append(t)
            ev_kind.append(kind)
            ev_pop.append(z)
        if kind == DETECTION:
            status = DETECTED
            count = z
            break
    return (status, count, t, born, n_events,
            np.array(ev_time, dtype=np.float64), np.array(ev_kind, dtype=np.int64),
            np.array(ev_pop, dtype=np.int64))


@jit
def ps_first_catastrophe(gen, lam, delta, code, a, b, max_events, start_busy, stop_when_empty, record):
    """M/G/1 processor-sharing queue with catastrophes.

    Remaining work is tracked lazily: ``v`` is the service every present
    customer has received since the current busy period began, and each
    customer is keyed in the heap by ``v_at_arrival + workload``. The next
    departure is the heap minimum, reached after ``(key - v) * q`` time units.

    Returns ``(status, q, time, n_events, ev_time, ev_kind, ev_q)``.
    """
    t = 0.0
    v = 0.0
    q = 0
    heap = [(0.0, 0)]
    heap.pop()
    next_id = 0
    if start_busy:
        heapq.heappush(heap, (draw_lifetime(gen, code, a, b), next_id))
        next_id += 1
        q = 1
    ev_time = [0.0]
    ev_kind = [0]
    ev_q = [0]
    ev_time.pop()
    ev_kind.pop()
    ev_q.pop()
    rate = lam + delta
    n_events = 0
    status = QUEUE_CENSORED
    while True:
        if n_events >= max_events:
            status = QUEUE_CENSORED
            break
        dt = gen.exponential(1.0 / rate)
        if q > 0:
            dep_dt = (heap[0][0] - v) * q
        else:
            dep_dt = np.inf
        if dt < dep_dt:
            t += dt
            if q > 0:
                v += dt / q
            if gen.random() * rate < lam:
                heapq.heappush(heap, (v + draw_lifetime(gen, code, a, b), next_id))
                next_id += 1
                q += 1
                kind = ARRIVAL
            else:
                kind = CATASTROPHE
        else:
            t += dep_dt
            key, _ = heapq.heappop(heap)
            v = key
            q -= 1
            if q == 0:
                v = 0.0
            kind = DEPARTURE
        n_events += 1
        if record:
            ev_time.append(t)
            ev_kind.append(kind)
            ev_q.append(q)
        if kind == CATASTROPHE:
            status = QUEUE_HIT if q > 0 else EMPTY_AT_CATASTROPHE
            break
        if kind == DEPARTURE and q == 0 and stop_when_empty:
            status = BUSY_PERIOD_ENDED
            break
    return (status, q, t, n_events,
            np.array(ev_time, dtype=np.float64), np.array(ev_kind, dtype=np.int64),
            np.array(ev_q, dtype=np.int64))


@jit
def lifo_first_catastrophe(gen, lam, delta, code, a, b, max_events, start_busy, stop_when_empty, record):
    """M/G/1 preemptive-resume LIFO queue with catastrophes.

    Only the top of the stack is served. Same return layout as
    :func:`ps_first_catastrophe`.
    """
    t = 0.0
    stack = [0.0]
    stack.pop()
    if start_busy:
        stack.append(draw_lifetime(gen, code, a, b))
    ev_time = [0.0]
    ev_kind = [0]
    ev_q = [0]
    ev_time.pop()
    ev_kind.pop()
    ev_q.pop()
    rate = lam + delta
    n_events = 0
    status = QUEUE_CENSORED
    while True:
        if n_events >= max_events:
            status = QUEUE_CENSORED
            break
        dt = gen.exponential(1.0 / rate)
        q = len(stack)
        if q > 0:
            dep_dt = stack[q - 1]
        else:
            dep_dt = np.inf
        if dt < dep_dt:
            t += dt
            if q > 0:
                stack[q - 1] -= dt
            if gen.random() * rate < lam:
                stack.append(draw_lifetime(gen, code, a, b))
                kind = ARRIVAL
            else:
                kind = CATASTROPHE
        else:
            t += dep_dt
            stack.pop()
            kind = DEPARTURE
        n_events += 1
        q = len(stack)
        if record:
            ev_time.append(t)
            ev_kind.append(kind)
            ev_q.append(q)
        if kind == CATASTROPHE:
            status = QUEUE_HIT if q > 0 else EMPTY_AT_CATASTROPHE
            break
        if kind == DEPARTURE and q == 0 and stop_when_empty:
            status = BUSY_PERIOD_ENDED
            break
    return (status, len(stack), t, n_events,
            np.array(ev_time, dtype=np.float64), np.array(ev_kind, dtype=np.int64),
            np.array(ev_q, dtype=np.int64))


@jit
def epidemic_first_detection(gen, n, lam, delta, icode, ia, ib, lcode, la, lb, seir, max_events, record):
    """SIR (``seir=False``) or SEIR epidemic in a closed population of ``n``.

    Each infective contacts a uniformly chosen other individual at rate
    ``lam``; contacts with non-susceptibles are no-ops. Detection happens at
    rate ``delta`` per infective. The index case is infectious at time 0.

    Returns ``(status, infectious, exposed, susceptible, time, n_events, rec)``
    where ``rec`` holds one ``(t, S, E, I, R)`` row per event when recording.
    """
    s = n - 1
    e = 0
    i = 1
    r = 0
    t = 0.0
    heap = [(draw_lifetime(gen, icode, ia, ib), RECOVERY)]
    rec = [(0.0, s, e, i, r)]
    if not record:
        rec.pop()
    rate = lam + delta
    others = n - 1.0
    n_events = 0
    status = CENSORED
    while True:
        if i == 0 and e == 0:
            status = EXTINCT
            break
        if n_events >= max_events:
            status = CENSORED
            break
        if i > 0:
            dt = gen.exponential(1.0 / (rate * i))
        else:
            dt = np.inf
        detected = False
        if t + dt < heap[0][0]:
            t += dt
            if gen.random() * rate < lam:
                if gen.random() * others < s:
                    s -= 1
                    if seir:
                        e += 1
                        heapq.heappush(heap, (t + draw_lifetime(gen, lcode, la, lb), LATENCY_END))
                    else:
                        i += 1
                        heapq.heappush(heap, (t + draw_lifetime(gen, icode, ia, ib), RECOVERY))
            else:
                detected = True
        else:
            tt, what = heapq.heappop(heap)
            t = tt
            if what == RECOVERY:
                i -= 1
                r += 1
            else:
                e -= 1
                i += 1
                heapq.heappush(heap, (t + draw_lifetime(gen, icode, ia, ib), RECOVERY))
        n_events += 1
        if record:
            rec.append((t, s, e, i, r))
        if detected:
            status = DETECTED
            break
    out = np.empty((len(rec), 5))
    for k in range(len(rec)):
        row = rec[k]
        out[k, 0] = row[0]
        out[k, 1] = row[1]
        out[k, 2] = row[2]
        out[k, 3] = row[3]
        out[k, 4] = row[4]
    return status, i, e, s, t, n_events, out


@jit
def birth_death_at(gen, lam2, mu, tau, initial):
    """Size at ``tau`` of a linear birth-death process started from ``initial``."""
    z = initial
    t = 0.0
    rate = lam2 + mu
    while z > 0:
        t += gen.exponential(1.0 / (rate * z))
        if t > tau:
            break
        if gen.random() * rate < lam2:
            z += 1
        else:
            z -= 1
    return z


@jit
def birth_death_batch(gen, lam2, mu, tau, initial):
    out = np.empty(initial.shape[0], dtype=np.int64)
    for k in range(initial.shape[0]):
        out[k] = birth_death_at(gen, lam2, mu, tau, initial[k])
    return out


# Block drivers: one compiled call runs ``n`` consecutive replications on a
# single generator, so the per-call cost of crossing into compiled code is
# paid once per block instead of once per replication.

@jit
def branching_block(gen, n, lam, delta, code, a, b, max_events):
    status = np.empty(n, dtype=np.int8)
    count = np.empty(n, dtype=np.int64)
    born = np.empty(n, dtype=np.int64)
    time = np.empty(n, dtype=np.float64)
    events = np.empty(n, dtype=np.int64)
    for k in range(n):
        s, c, t, bn, ne, _, _, _ = branching_first_detection(gen, lam, delta, code, a, b,
                                                             max_events, False)
        status[k] = s
        count[k] = c
        born[k] = bn
        time[k] = t
        events[k] = ne
    return status, count, born, time, events


@jit
def queue_block(gen, n, lifo, lam, delta, code, a, b, max_events, start_busy, stop_when_empty):
    status = np.empty(n, dtype=np.int8)
    q = np.empty(n, dtype=np.int64)
    time = np.empty(n, dtype=np.float64)
    events = np.empty(n, dtype=np.int64)
    for k in range(n):
        if lifo:
            s, qq, t, ne, _, _, _ = lifo_first_catastrophe(gen, lam, delta, code, a, b, max_events,
                                                           start_busy, stop_when_empty, False)
        else:
            s, qq, t, ne, _, _, _ = ps_first_catastrophe(gen, lam, delta, code, a, b, max_events,
                                                         start_busy, stop_when_empty, False)
        status[k] = s
        q[k] = qq
        time[k] = t
        events[k] = ne
    return status, q, time, events


@jit
def epidemic_block(gen, n_reps, n, lam, delta, icode, ia, ib, lcode, la, lb, seir, max_events):
    status = np.empty(n_reps, dtype=np.int8)
    inf = np.empty(n_reps, dtype=np.int64)
    exp = np.empty(n_reps, dtype=np.int64)
    sus = np.empty(n_reps, dtype=np.int64)
    time = np.empty(n_reps, dtype=np.float64)
    ever = np.empty(n_reps, dtype=np.int64)
    events = np.empty(n_reps, dtype=np.int64)
    for k in range(n_reps):
        s, i, e, ss, t, ne, _ = epidemic_first_detection(gen, n, lam, delta, icode, ia, ib,
                                                         lcode, la, lb, seir, max_events, False)
        status[k] = s
        inf[k] = i
        exp[k] = e
        sus[k] = ss
        time[k] = t
        ever[k] = n - ss
        events[k] = ne
    return status, inf, exp, sus, time, ever, events
