"""Exact optimal-cost schedulers for the two additive objectives.

* total completion time on identical machines (SPT, round-robin),
* energy under continuous speed scaling (power ``s**alpha``) with release
  dates 0, preemption and migration allowed.

Every oracle returns a :class:`ScheduleOutcome`; costs are attributed to the
owner of the machine on which they are incurred.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .instance import Coalition, Instance, Objective

#: lattice points the grid oracle is willing to enumerate
GRID_LIMIT = 2_000_000


class SolverError(RuntimeError):
    """The convex energy solver did not reach the requested accuracy."""

    def __init__(self, message, best_value=None, gap=None):
        super().__init__(message)
        self.best_value = best_value
        self.gap = gap


class SizeLimitError(ValueError):
    """Brute-force routine refused an instance above its size cap."""


@dataclass(frozen=True)
class Placement:
    """One contiguous piece of a job on one machine."""
    job: object          # index into the oracle input, or (org, job) in coalition_cost
    machine: int
    start: float
    end: float
    speed: Optional[float] = None
    owner: Optional[int] = None


@dataclass
class ScheduleOutcome:
    total_cost: float
    per_org_cost: dict
    placement: list = field(default_factory=list)
    machine_cost: list = field(default_factory=list)
    method: str = ""

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "total_cost": self.total_cost,
            "per_org_cost": {str(k): v for k, v in sorted(self.per_org_cost.items())},
            "machine_cost": list(self.machine_cost),
            "placement": [
                {"job": list(p.job) if isinstance(p.job, tuple) else p.job,
                 "owner": p.owner, "machine": p.machine, "start": p.start,
                 "end": p.end, "speed": p.speed}
                for p in self.placement
            ],
        }


def _outcome(machine_cost, placement, owners, method) -> ScheduleOutcome:
    if owners is None:
        owners = list(range(len(machine_cost)))
    per_org = {}
    for owner in owners:
        per_org.setdefault(owner, [])
    for i, c in enumerate(machine_cost):
        per_org[owners[i]].append(c)
    per_org = {k: math.fsum(v) for k, v in per_org.items()}
    placement = [replace(p, owner=owners[p.machine]) for p in placement]
    return ScheduleOutcome(math.fsum(per_org.values()), per_org, placement,
                           list(machine_cost), method)


def _mcnaughton(items, m, start, length):
    """Wrap-around packing of ``(job, duration, speed)`` items into ``m``
    machines over ``[start, start + length)``. Each duration must be <= length
    and the durations must sum to at most ``m * length``."""
    eps = 1e-12 * length
    pieces = []
    machine, offset = 0, 0.0
    for job, duration, speed in items:
        remaining = duration
        while remaining > eps:
            room = length - offset
            if room <= eps:
                machine, offset = machine + 1, 0.0
                continue
            if machine >= m:
                raise ValueError("wrap-around overflow: loads exceed machine capacity")
            d = min(remaining, room)
            pieces.append(Placement(job, machine, start + offset, start + offset + d, speed))
            offset += d
            remaining -= d
    return pieces


# --------------------------------------------------------------------------
# total completion time

def schedule_sum_completion(proc_times: Sequence[float], m: int,
                            owners: Optional[Sequence[int]] = None) -> ScheduleOutcome:
    """SPT list order with round-robin machine assignment; optimal for
    sum of completion times on identical machines. Ties keep input order."""
    if m < 1:
        raise ValueError("need at least one machine")
    order = sorted(range(len(proc_times)), key=lambda j: proc_times[j])
    clock = [0.0] * m
    completions = [[] for _ in range(m)]
    placement = []
    for rank, j in enumerate(order):
        i = rank % m
        start = clock[i]
        clock[i] = start + proc_times[j]
        completions[i].append(clock[i])
        placement.append(Placement(j, i, start, clock[i]))
    machine_cost = [math.fsum(c) for c in completions]
    return _outcome(machine_cost, placement, owners, "spt")


def brute_force_sum_completion(proc_times: Sequence[float], m: int) -> float:
    """Exhaustive optimum over all machine assignments (n <= 8, m <= 3)."""
    n = len(proc_times)
    if n > 8 or m > 3:
        raise SizeLimitError("brute force limited to n <= 8 jobs and m <= 3 machines")
    best = math.inf
    for assign in itertools.product(range(m), repeat=n):
        total = 0.0
        for i in range(m):
            clock = 0.0
            for p in sorted(proc_times[j] for j in range(n) if assign[j] == i):
                clock += p
                total += clock
        best = min(best, total)
    return 0.0 if n == 0 else best


# --------------------------------------------------------------------------
# energy, common deadline

def schedule_energy_common_deadline(n: int, m: int, deadline: float, alpha: float,
                                    owners: Optional[Sequence[int]] = None,
                                    no_migration: bool = False) -> ScheduleOutcome:
    """``n`` unit jobs sharing ``deadline`` on ``m`` machines.

    With migration every busy machine runs at ``n / (m * deadline)`` when
    ``n >= m``; otherwise each job gets its own machine at speed
    ``1 / deadline``. ``no_migration`` forces integral job counts per machine.
    """
    if m < 1 or deadline <= 0:
        raise ValueError("need m >= 1 and a positive deadline")
    D = float(deadline)
    machine_cost = [0.0] * m
    placement = []
    if n == 0:
        pass
    elif no_migration or n < m:
        q, r = divmod(n, m)
        job = 0
        for i in range(m):
            load = q + (1 if i < r else 0)
            if load == 0:
                continue
            speed = load / D
            machine_cost[i] = speed ** alpha * D
            for k in range(load):
                placement.append(Placement(job, i, k * D / load, (k + 1) * D / load, speed))
                job += 1
    else:
        speed = n / (m * D)
        per_machine = speed ** alpha * D
        machine_cost = [per_machine] * m
        placement = _mcnaughton(((j, 1.0 / speed, speed) for j in range(n)), m, 0.0, D)
    return _outcome(machine_cost, placement, owners, "common_deadline")


# --------------------------------------------------------------------------
# energy, one machine

def schedule_energy_single_machine_yds(deadlines: Sequence[float], volumes: Sequence[float],
                                       alpha: float,
                                       owners: Optional[Sequence[int]] = None) -> ScheduleOutcome:
    """Critical-interval peeling for one machine with all releases at 0.

    Repeatedly pick the deadline prefix of maximum density (work / time left),
    run it at that constant speed in EDF order and continue after it. On equal
    densities the longer prefix wins.
    """
    n = len(deadlines)
    order = sorted(range(n), key=lambda j: (deadlines[j], j))
    placement = []
    block_costs = []
    t0, idx = 0.0, 0
    while idx < n:
        best, best_end, cum = -1.0, idx, 0.0
        for k in range(idx, n):
            cum += volumes[order[k]]
            if k + 1 < n and deadlines[order[k + 1]] == deadlines[order[k]]:
                continue
            density = cum / (deadlines[order[k]] - t0)
            if density >= best * (1 - 1e-12):
                best, best_end = density, k + 1
        end = deadlines[order[best_end - 1]]
        block_costs.append(best ** alpha * (end - t0))
        clock = t0
        for k in range(idx, best_end):
            j = order[k]
            dur = volumes[j] / best
            placement.append(Placement(j, 0, clock, min(clock + dur, end), best))
            clock += dur
        t0, idx = end, best_end
    return _outcome([math.fsum(block_costs)], placement, owners, "yds")


# --------------------------------------------------------------------------
# energy, general migratory multiprocessor

def _interval_energy(w: np.ndarray, m: int, length: float, alpha: float):
    """Optimal energy for fixed per-job work ``w`` inside one interval.

    Jobs too large to share run alone on a machine; the rest share the
    remaining machines at one common speed. Returns (energy, per-job speed,
    marginal speed for jobs with no work here).
    """
    speeds = np.zeros_like(w)
    pos = w > 0
    npos = int(pos.sum())
    if npos == 0:
        return 0.0, speeds, 0.0
    if npos <= m:
        speeds = w / length
        floor = speeds[pos].min() if npos == m else 0.0
        return float(np.sum(speeds[pos] ** alpha) * length), speeds, floor
    order = np.argsort(-w, kind="stable")
    ws = w[order]
    suffix = np.cumsum(ws[::-1])[::-1]
    k = 0
    while k < m - 1 and ws[k] * (m - k) > suffix[k]:
        k += 1
    shared = suffix[k] / ((m - k) * length)
    speeds[order[:k]] = ws[:k] / length
    speeds[order[k:]] = shared
    energy = float(np.sum((ws[:k] / length) ** alpha) * length + (m - k) * length * shared ** alpha)
    return energy, speeds, shared


def _project_rows(v: np.ndarray, mask: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto {x >= 0, sum x = total, x = 0 off mask}."""
    out = np.zeros_like(v)
    for j in range(v.shape[0]):
        idx = np.flatnonzero(mask[j])
        x = v[j, idx]
        if idx.size == 1:
            out[j, idx] = totals[j]
            continue
        u = np.sort(x)[::-1]
        css = np.cumsum(u) - totals[j]
        rho = np.nonzero(u * np.arange(1, u.size + 1) > css)[0][-1]
        theta = css[rho] / (rho + 1.0)
        out[j, idx] = np.maximum(x - theta, 0.0)
    return out


class _EnergyProgram:
    def __init__(self, deadlines, volumes, m, alpha):
        self.alpha = float(alpha)
        self.m = int(m)
        self.volumes = np.asarray(volumes, dtype=float)
        d = np.asarray(deadlines, dtype=float)
        self.bounds = np.unique(d)
        self.starts = np.concatenate(([0.0], self.bounds[:-1]))
        self.lengths = self.bounds - self.starts
        self.mask = d[:, None] >= self.bounds[None, :]

    def evaluate(self, W):
        """Objective and gradient (masked) of the reduced convex program."""
        a = self.alpha
        total = 0.0
        G = np.zeros_like(W)
        for t, L in enumerate(self.lengths):
            col = self.mask[:, t]
            if not col.any():
                continue
            e, speeds, floor = _interval_energy(W[col, t], self.m, L, a)
            total += e
            s = np.where(W[col, t] > 0, speeds, floor)
            G[col, t] = a * s ** (a - 1)
        return total, G

    def fw_gap(self, W, G):
        """Frank-Wolfe duality gap; upper-bounds objective minus optimum."""
        masked = np.where(self.mask, G, np.inf)
        return float(np.sum(G * W) - np.sum(self.volumes * masked.min(axis=1)))

    def initial(self):
        W = np.where(self.mask, self.lengths[None, :], 0.0)
        return W * (self.volumes / W.sum(axis=1))[:, None]


def schedule_energy_general(deadlines: Sequence[float], volumes: Sequence[float], m: int,
                            alpha: float, tol: float = 1e-9, max_iter: int = 100_000,
                            owners: Optional[Sequence[int]] = None) -> ScheduleOutcome:
    """Migratory optimum for arbitrary deadlines and volumes on ``m`` machines.

    Time is cut at the distinct deadlines. For fixed per-interval work the
    occupation times have a closed form, which leaves a smooth convex problem
    over work splits; it is solved by accelerated projected gradient with
    backtracking until the Frank-Wolfe gap falls below ``tol`` relative.
    """
    if m < 1 or tol <= 0:
        raise ValueError("need m >= 1 and tol > 0")
    if len(deadlines) == 0:
        return _outcome([0.0] * m, [], owners, "convex")
    prog = _EnergyProgram(deadlines, volumes, m, alpha)
    x = prog.initial()
    fx, gx = prog.evaluate(x)
    free = prog.mask.sum(axis=1) > 1
    if free.any():
        x, fx = _solve(prog, x, fx, gx, tol, max_iter)
    return _realize(prog, x, owners)


def _solve(prog, x, fx, gx, tol, max_iter, window=50):
    y, fy, gy = x, fx, gx
    t = 1.0
    step = 1.0 / max(1e-300, float(np.abs(gx).max()))
    history = [fx]
    gap = prog.fw_gap(x, gx)
    for _ in range(max_iter):
        while True:
            z = _project_rows(y - step * gy, prog.mask, prog.volumes)
            fz, gz = prog.evaluate(z)
            d = z - y
            if fz <= fy + np.sum(gy * d) + np.sum(d * d) / (2 * step) + 1e-15 * abs(fy):
                break
            step *= 0.5
            if step < 1e-300:
                raise SolverError("line search collapsed", fx, gap)
        if fz > fx:
            # momentum overshoot: restart from the last iterate
            y, fy, gy, t = x, fx, prog.evaluate(x)[1], 1.0
            history.append(fx)
        else:
            gap = prog.fw_gap(z, gz)
            t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
            y = z + ((t - 1) / t_next) * (z - x)
            x, fx, t = z, fz, t_next
            history.append(fx)
            if gap <= tol * max(fx, 1e-300):
                return x, fx
            fy, gy = prog.evaluate(y)
            step *= 1.5
        # stagnation: relative change over the window below tol
        if len(history) > window and history[-window - 1] - fx <= 1e-3 * tol * abs(fx):
            return x, fx
    raise SolverError(f"no convergence in {max_iter} iterations", fx, gap)


def _realize(prog, W, owners):
    m, a = prog.m, prog.alpha
    machine_cost = [[] for _ in range(m)]
    placement = []
    for t, (start, L) in enumerate(zip(prog.starts, prog.lengths)):
        col = np.flatnonzero(prog.mask[:, t])
        w = W[col, t]
        if not (w > 0).any():
            continue
        _, speeds, _ = _interval_energy(w, m, L, a)
        items = [(int(col[i]), min(L, w[i] / speeds[i]), float(speeds[i]))
                 for i in range(len(col)) if w[i] > 0]
        for p in _mcnaughton(items, m, float(start), float(L)):
            placement.append(p)
            machine_cost[p.machine].append(p.speed ** a * (p.end - p.start))
    return _outcome([math.fsum(c) for c in machine_cost], placement, owners, "convex")


# --------------------------------------------------------------------------
# grid oracle (tests)

def _interval_energy_bisect(w, m, length, alpha):
    """Same quantity as _interval_energy, via bisection on the shared speed."""
    w = [x for x in w if x > 0]
    if len(w) <= m:
        return sum((x / length) ** alpha * length for x in w)
    lo, hi = 0.0, sum(w) / (m * length)
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid == 0 or sum(min(length, x / mid) for x in w) > m * length:
            lo = mid
        else:
            hi = mid
    sigma = hi
    return sum(x ** alpha / min(length, x / sigma) ** (alpha - 1) for x in w)


def grid_energy_oracle(deadlines: Sequence[float], volumes: Sequence[float], m: int,
                       alpha: float, step: float = 1 / 64) -> float:
    """Minimum energy over work splits on a lattice of spacing ``step``.

    An upper bound on the true optimum that tightens as ``step`` shrinks.
    Refuses more than 8 jobs, more than 3 machines or too many lattice points.
    """
    n = len(deadlines)
    if n > 8 or m > 3 or step <= 0:
        raise SizeLimitError("grid oracle limited to n <= 8, m <= 3, step > 0")
    if n == 0:
        return 0.0
    bounds = sorted(set(deadlines))
    lengths = [b - a for a, b in zip([0.0] + bounds[:-1], bounds)]
    options = []
    size = 1
    for d, vol in zip(deadlines, volumes):
        allowed = [t for t, b in enumerate(bounds) if b <= d]
        units = max(1, round(vol / step))
        splits = []
        for cuts in itertools.combinations(range(units + len(allowed) - 1), len(allowed) - 1):
            parts, prev = [], -1
            for c in cuts + (units + len(allowed) - 1,):
                parts.append(c - prev - 1)
                prev = c
            vec = [0.0] * len(bounds)
            for t, q in zip(allowed, parts):
                vec[t] = vol * q / units
            splits.append(vec)
        size *= len(splits)
        if size > GRID_LIMIT:
            raise SizeLimitError("grid oracle lattice too large")
        options.append(splits)
    best = math.inf
    for combo in itertools.product(*options):
        total = 0.0
        for t, L in enumerate(lengths):
            total += _interval_energy_bisect([c[t] for c in combo], m, L, alpha)
            if total >= best:
                break
        best = min(best, total)
    return best


# --------------------------------------------------------------------------
# coalition dispatch

def coalition_cost(inst: Instance, members: Coalition, tol: float = 1e-9,
                   no_migration: bool = False) -> ScheduleOutcome:
    """Optimal cost of scheduling every job of ``members`` on all their machines.

    Dispatches to the cheapest exact oracle that applies. Costs are keyed by
    the organization owning the machine where they are incurred.
    """
    owners = [k for k in members for _ in range(inst.organizations[k].machine_count)]
    refs = [(k, i) for k in members for i in range(len(inst.organizations[k].jobs))]
    jobs = [inst.organizations[k].jobs[i] for k, i in refs]
    if not members or not jobs:
        out = _outcome([0.0] * len(owners), [], owners, "empty")
        out.per_org_cost = {k: 0.0 for k in members}
        return out
    m = len(owners)
    if inst.objective == Objective.SUM_COMPLETION:
        out = schedule_sum_completion([j.proc_time for j in jobs], m, owners)
    else:
        deadlines = [j.deadline for j in jobs]
        volumes = [j.volume for j in jobs]
        if len(set(deadlines)) == 1 and all(v == 1.0 for v in volumes):
            out = schedule_energy_common_deadline(len(jobs), m, deadlines[0], inst.alpha,
                                                  owners, no_migration)
        elif m == 1:
            out = schedule_energy_single_machine_yds(deadlines, volumes, inst.alpha, owners)
        else:
            out = schedule_energy_general(deadlines, volumes, m, inst.alpha, tol, owners=owners)
    out.placement = [replace(p, job=refs[p.job]) for p in out.placement]
    return out
