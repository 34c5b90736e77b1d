"""Independent reference implementations used to check the package.

None of these import the code under test beyond plain data types.
"""

import itertools
import math
from collections import deque

import numpy as np
from scipy.special import ellipe, ellipk

MU0 = 1.25663706127e-6  # CODATA 2022 vacuum permeability


def bfs_reachable(layout_dict, start_zone):
    """Zones reachable from ``start_zone`` over the raw JSON adjacency."""
    adj = {}

    def link(a, b):
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)

    for t in layout_dict.get("tracks", []):
        link(("t", t["id"]), ("z", t["zone"]))
        for o in t.get("connects", []):
            link(("t", t["id"]), ("t", o))
    for j in layout_dict.get("junctions", []):
        for a in j["arms"]:
            link(("j", j["id"]), ("t", a))
    seen = {("z", start_zone)}
    q = deque(seen)
    while q:
        n = q.popleft()
        for m in adj.get(n, ()):
            if m not in seen:
                seen.add(m)
                q.append(m)
    return {n[1] for n in seen if n[0] == "z"}


def replay_plan(steps, budget, well_pairs):
    """Replay plan steps; ``well_pairs(sid, idx)`` maps a well index to the
    pair ids that must be driven (index and both neighbours, None = off track).

    Returns a list of violation strings.
    """
    bad = []
    active = {}
    for k, st in enumerate(steps):
        for dac, seg in st.assign:
            if seg in active and active[seg] != dac:
                bad.append(f"{k}: pair {seg} on two DACs")
            active[seg] = dac
        if len(set(active.values())) > budget:
            bad.append(f"{k}: {len(set(active.values()))} DAC pairs")
        for seg in st.release:
            active.pop(seg, None)
        for sid, idx in st.wells.items():
            for p in well_pairs(sid, idx):
                if p is not None and p not in active:
                    bad.append(f"{k}: well {sid}@{idx} pair {p} undriven")
    return bad


def majority_tail_bruteforce(p, n):
    """P(at least n//2+1 of n independent flips) by enumerating all outcomes."""
    m = n // 2 + 1
    total = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        k = sum(bits)
        if k >= m:
            total += p ** k * (1 - p) ** (n - k)
    return total


def bisect_root(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def loop_field_on_axis(radius, current, z):
    return MU0 * current * radius ** 2 / (2 * (radius ** 2 + z ** 2) ** 1.5)


def loop_field_elliptic(radius, current, z0, point):
    """Exact field of a circular loop (axis z, centre at z0) via elliptic integrals."""
    x, y, z = point
    z = z - z0
    rho = math.hypot(x, y)
    a = radius
    if rho < 1e-15:
        return np.array([0.0, 0.0, loop_field_on_axis(a, current, z)])
    alpha2 = a * a + rho * rho + z * z - 2 * a * rho
    beta2 = a * a + rho * rho + z * z + 2 * a * rho
    k2 = 1 - alpha2 / beta2
    K, E = ellipk(k2), ellipe(k2)
    C = MU0 * current / math.pi
    beta = math.sqrt(beta2)
    b_rho = C * z / (2 * alpha2 * beta * rho) * ((a * a + rho * rho + z * z) * E - alpha2 * K)
    b_z = C / (2 * alpha2 * beta) * ((a * a - rho * rho - z * z) * E + alpha2 * K)
    return np.array([b_rho * x / rho, b_rho * y / rho, b_z])


def blocking_pipeline_departures(durations, n_jobs, arrivals=None):
    """Departure time of each job from the last stage of a blocking tandem line."""
    m = len(durations)
    arrivals = arrivals or [0.0] * n_jobs
    prev = [-math.inf] * m
    out = []
    for k in range(n_jobs):
        cur = [0.0] * m
        enter = max(arrivals[k], prev[0])
        for i, s in enumerate(durations):
            done = enter + s
            cur[i] = max(done, prev[i + 1]) if i + 1 < m else done
            enter = cur[i]
        out.append(cur[-1])
        prev = cur
    return out
