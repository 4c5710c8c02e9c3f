"""Event-driven simulation of mixed always-on and intermittent compute pools.

Pools are independent machines (one queue each) fed by a shared dispatcher.
Each pool schedules FCFS with EASY backfill: the queue head gets a
reservation at the earliest feasible time, and later jobs may start now only
if they cannot delay that reservation.  Pools backed by an availability
schedule additionally never start a job whose walltime exceeds the time left
in the current up-window, so nothing is ever running when a window closes;
jobs still queued at window close migrate back to the always-on pools in
original submit order.

The dispatcher cycles round-robin over all pools.  Jobs whose walltime
exceeds the remaining up-window at submission skip intermittent pools.  While
the intermittent side is down, every arrival goes to an always-on pool.

Event order at equal times: window transitions, then completions, then
arrivals, then scheduling passes; ties broken by insertion order.  The
engine itself is deterministic; `seed` is carried only for provenance.
"""

import heapq
import json
import math
from bisect import insort
from dataclasses import dataclass, field

import numpy as np

from .availability import AvailabilitySchedule
from .errors import ValidationError
from .workload import HOUR_S, MIRA_NODES

INF = math.inf

_PRI_WINDOW = 0
_PRI_COMPLETION = 1
_PRI_ARRIVAL = 2

POLICY_EASY = "easy"
POLICY_FCFS = "fcfs"


@dataclass(frozen=True)
class Pool:
    """One machine: a node count and an optional uptime schedule."""

    name: str
    nodes: int
    schedule: AvailabilitySchedule | None = None   # None = always up

    def __post_init__(self):
        if self.nodes <= 0:
            raise ValidationError("pool must have at least one node")


@dataclass(frozen=True)
class SystemConfig:
    """A scheduling experiment: always-on units plus intermittent units."""

    ctr_units: int = 1
    z_units: int = 0
    z_schedule: AvailabilitySchedule | None = None
    policy: str = POLICY_EASY
    dispatcher: str = "round-robin"
    unit_nodes: int = MIRA_NODES
    backfill_depth: int = 100
    kill_at_shutdown: bool = False    # non-oracle mode: kill + resubmit to Ctr

    def validate(self):
        if self.ctr_units < 1:
            raise ValidationError("at least one always-on unit is required")
        if self.z_units < 0:
            raise ValidationError("z_units must be non-negative")
        if self.z_units > 0 and self.z_schedule is None:
            raise ValidationError("intermittent units require a schedule")
        if self.policy not in (POLICY_EASY, POLICY_FCFS):
            raise ValidationError(f"unknown policy {self.policy!r}")
        if self.dispatcher != "round-robin":
            raise ValidationError(f"unknown dispatcher {self.dispatcher!r}")
        if self.unit_nodes <= 0:
            raise ValidationError("unit_nodes must be positive")

    @property
    def label(self):
        if self.z_units == 0:
            return f"{self.ctr_units}Ctr"
        ctr = "Ctr" if self.ctr_units == 1 else f"{self.ctr_units}Ctr"
        return f"{ctr}+{self.z_units}Z"


@dataclass(frozen=True)
class SimResult:
    """Throughput and service quality of one simulation run."""

    label: str
    horizon_s: float
    jobs_submitted: int
    jobs_completed: int
    jobs_unfinished: int
    throughput_per_day: float
    node_hours_delivered: float
    utilization: dict
    mean_wait_h: float
    p95_wait_h: float

    def validate(self):
        if self.jobs_completed + self.jobs_unfinished != self.jobs_submitted:
            raise ValidationError("job conservation violated")
        for name, u in self.utilization.items():
            if not (0.0 <= u <= 1.0 + 1e-9):
                raise ValidationError(f"pool {name} utilization out of range: {u}")

    def to_row(self):
        row = {
            "config": self.label,
            "jobs_submitted": self.jobs_submitted,
            "jobs_completed": self.jobs_completed,
            "jobs_unfinished": self.jobs_unfinished,
            "throughput_per_day": self.throughput_per_day,
            "node_hours_delivered": self.node_hours_delivered,
            "mean_wait_h": self.mean_wait_h,
            "p95_wait_h": self.p95_wait_h,
        }
        for name in sorted(self.utilization):
            row[f"util_{name}"] = self.utilization[name]
        return row


class _PoolState:
    __slots__ = ("name", "nodes", "free", "is_ctr", "queue", "running",
                 "busy_ns", "shadow", "extra", "resv_valid")

    def __init__(self, name, nodes, is_ctr):
        self.name = name
        self.nodes = nodes
        self.free = nodes
        self.is_ctr = is_ctr
        self.queue = []          # jobs ordered by (submit, id)
        self.running = {}        # job id -> (end_time, nodes, start_time)
        self.busy_ns = 0.0       # node-seconds actually occupied
        self.shadow = INF        # head reservation time (cache)
        self.extra = INF         # nodes spare at the reservation (cache)
        self.resv_valid = False


def _queue_key(job):
    return (job.submit, job.id)


class _Engine:
    def __init__(self, config, trace, event_log=None):
        config.validate()
        trace.validate()
        for job in trace.jobs:
            if job.nodes > config.unit_nodes:
                raise ValidationError(
                    f"job {job.id} needs {job.nodes} nodes; pools have {config.unit_nodes}")
        self.config = config
        self.trace = trace
        self.horizon = float(trace.horizon_s)
        self.log = event_log

        self.pools = []
        for i in range(config.ctr_units):
            self.pools.append(_PoolState(f"ctr{i}", config.unit_nodes, True))
        for i in range(config.z_units):
            self.pools.append(_PoolState(f"z{i}", config.unit_nodes, False))
        self.ctr_pools = self.pools[:config.ctr_units]
        self.z_pools = self.pools[config.ctr_units:]

        self.z_up = False
        self.window_end = 0.0
        self.cursor = 0
        self.mig_cursor = 0
        self.depth = config.backfill_depth if config.policy == POLICY_EASY else 0
        self.oracle = not config.kill_at_shutdown

        self.completed = 0
        self.delivered_ns = 0.0
        self.waits = []
        self.first_start = {}
        self.stamp = {}          # job id -> start generation (for kill mode)
        self._job_by_id = {} if self.oracle else {j.id: j for j in trace.jobs}

        self.heap = []
        self.seq = 0
        for job in trace.jobs:
            self._push(job.submit, _PRI_ARRIVAL, ("arrive", job))
        self.z_uptime_s = 0.0
        if config.z_units > 0:
            for s, e in config.z_schedule.up_intervals:
                if s >= self.horizon:
                    break
                e = min(e, self.horizon)
                self.z_uptime_s += e - s
                self._push(float(s), _PRI_WINDOW, ("up", float(e)))
                if e < self.horizon:
                    self._push(float(e), _PRI_WINDOW, ("down", None))

    def _push(self, t, pri, payload):
        self.seq += 1
        heapq.heappush(self.heap, (t, pri, self.seq, payload))

    def _emit(self, t, kind, **fields):
        if self.log is not None:
            rec = {"t": t, "event": kind}
            rec.update(fields)
            self.log.write(json.dumps(rec, sort_keys=True) + "\n")

    # -- dispatch ---------------------------------------------------------

    def _dispatch(self, job, t):
        pools = self.pools
        n = len(pools)
        for _ in range(n):
            pool = pools[self.cursor % n]
            self.cursor += 1
            if pool.is_ctr:
                return pool
            if self.z_up and (not self.oracle or t + job.walltime <= self.window_end):
                return pool
        raise AssertionError("dispatcher found no pool")  # ctr_units >= 1

    # -- scheduling -------------------------------------------------------

    def _start(self, pool, job, t):
        pool.free -= job.nodes
        end = t + job.runtime
        stamp = self.stamp.get(job.id, 0) + 1
        self.stamp[job.id] = stamp
        pool.running[job.id] = (end, job.nodes, t)
        if job.id not in self.first_start:
            self.first_start[job.id] = t
            self.waits.append(t - job.submit)
        if end <= self.horizon:
            self._push(end, _PRI_COMPLETION, ("complete", (job, pool, stamp)))
        self._emit(t, "start", job=job.id, pool=pool.name)

    def _reservation(self, pool, need, t):
        """Earliest time `need` nodes are free, and the spare nodes then."""
        avail = pool.free
        at = t
        for end, nodes, _ in sorted(pool.running.values()):
            if avail >= need:
                break
            avail += nodes
            at = end
        return at, avail - need

    def _pass(self, pool, t):
        """Start every job the policy allows; refresh the reservation cache."""
        if not pool.is_ctr and not self.z_up:
            pool.resv_valid = False
            return
        w = INF if (pool.is_ctr or not self.oracle) else self.window_end
        queue = pool.queue
        i = 0
        shadow = INF
        extra = INF
        blocked = False
        while i < len(queue):
            job = queue[i]
            if t + job.walltime > w:
                i += 1                     # cannot finish in this window
                continue
            if job.nodes <= pool.free:
                self._start(pool, queue.pop(i), t)
                continue
            at, spare = self._reservation(pool, job.nodes, t)
            if at + job.walltime > w:
                i += 1                     # cannot run this window at all
                continue
            shadow, extra = at, spare
            blocked = True
            break
        if blocked:
            j = i + 1
            scanned = 0
            while j < len(queue) and scanned < self.depth:
                job = queue[j]
                scanned += 1
                if job.nodes <= pool.free and t + job.walltime <= w:
                    fits_before = t + job.walltime <= shadow
                    if fits_before or job.nodes <= extra:
                        self._start(pool, queue.pop(j), t)
                        if not fits_before:
                            extra -= job.nodes
                        continue
                j += 1
        pool.shadow = shadow
        pool.extra = extra
        pool.resv_valid = True

    def _try_quick_start(self, pool, job, t):
        """Start an arriving job without a full pass when clearly legal."""
        if not pool.is_ctr and not self.z_up:
            return False
        if job.nodes > pool.free:
            return False
        w = INF if (pool.is_ctr or not self.oracle) else self.window_end
        if t + job.walltime > w:
            return False
        if not pool.queue:
            self._start(pool, job, t)
            return True
        if not pool.resv_valid or self.depth == 0:
            return False
        fits_before = t + job.walltime <= pool.shadow
        if fits_before or job.nodes <= pool.extra:
            self._start(pool, job, t)
            if not fits_before:
                pool.extra -= job.nodes
            return True
        return False

    # -- window transitions ------------------------------------------------

    def _window_down(self, t):
        self.z_up = False
        migrated = []
        for pool in self.z_pools:
            if self.oracle:
                for end, _, _ in pool.running.values():
                    if end > t + 1e-9:
                        raise AssertionError("job running past a window close")
            else:
                # Kill mode: abandon progress, send the job back to the queue.
                for jid, (end, nodes, start) in list(pool.running.items()):
                    pool.busy_ns += nodes * (t - start)
                    pool.free += nodes
                    self.stamp[jid] += 1       # cancels the completion event
                    job = self._job_by_id[jid]
                    migrated.append(job)
                    self._emit(t, "kill", job=jid, pool=pool.name)
                pool.running.clear()
            migrated.extend(pool.queue)
            pool.queue.clear()
            pool.resv_valid = False
        migrated.sort(key=_queue_key)
        n_ctr = len(self.ctr_pools)
        for job in migrated:
            target = self.ctr_pools[self.mig_cursor % n_ctr]
            self.mig_cursor += 1
            insort(target.queue, job, key=_queue_key)
            self._emit(t, "migrate", job=job.id, pool=target.name)
        return set(self.ctr_pools) if migrated else set()

    # -- main loop ----------------------------------------------------------

    def run(self):
        heap = self.heap
        horizon = self.horizon
        while heap and heap[0][0] <= horizon:
            t = heap[0][0]
            dirty = set()
            while heap and heap[0][0] == t:
                _, _, _, (kind, payload) = heapq.heappop(heap)
                if kind == "up":
                    self.z_up = True
                    self.window_end = payload
                    dirty.update(self.z_pools)
                    self._emit(t, "window_up")
                elif kind == "down":
                    dirty -= set(self.z_pools)
                    dirty |= self._window_down(t)
                    self._emit(t, "window_down")
                elif kind == "complete":
                    job, pool, stamp = payload
                    if self.stamp.get(job.id) != stamp:
                        continue                    # killed before finishing
                    end, nodes, start = pool.running.pop(job.id)
                    pool.free += nodes
                    pool.busy_ns += nodes * job.runtime
                    self.delivered_ns += nodes * job.runtime
                    self.completed += 1
                    pool.resv_valid = False
                    dirty.add(pool)
                    self._emit(t, "complete", job=job.id, pool=pool.name)
                else:  # arrive
                    job = payload
                    pool = self._dispatch(job, t)
                    self._emit(t, "arrive", job=job.id, pool=pool.name)
                    if not self._try_quick_start(pool, job, t):
                        pool.queue.append(job)
                        # FCFS has no backfill shortcut; rerun the full pass.
                        if not pool.resv_valid or self.depth == 0:
                            dirty.add(pool)
            for pool in sorted(dirty, key=lambda p: p.name):
                self._pass(pool, t)
        return self._tally()

    def _tally(self):
        horizon = self.horizon
        for pool in self.pools:
            for end, nodes, start in pool.running.values():
                ran = max(0.0, horizon - start)
                pool.busy_ns += nodes * ran
                self.delivered_ns += nodes * ran
        util = {}
        for pool in self.pools:
            up = horizon if pool.is_ctr else self.z_uptime_s
            util[pool.name] = pool.busy_ns / (pool.nodes * up) if up > 0 else 0.0
        waits = np.array(self.waits) if self.waits else np.array([0.0])
        submitted = len(self.trace.jobs)
        result = SimResult(
            label=self.config.label,
            horizon_s=horizon,
            jobs_submitted=submitted,
            jobs_completed=self.completed,
            jobs_unfinished=submitted - self.completed,
            throughput_per_day=self.completed / (horizon / 86400.0),
            node_hours_delivered=self.delivered_ns / HOUR_S,
            utilization=util,
            mean_wait_h=float(waits.mean()) / HOUR_S,
            p95_wait_h=float(np.percentile(waits, 95)) / HOUR_S,
        )
        result.validate()
        return result


def simulate(config, trace, seed=0, event_log=None):
    """Run one deterministic simulation of `trace` on `config`.

    `seed` is recorded by callers for provenance; the engine has no internal
    randomness.  `event_log`, when given, receives newline-delimited JSON
    events (a file-like object).
    """
    del seed
    return _Engine(config, trace, event_log=event_log).run()


def throughput_curve(configs, trace):
    """Simulate each config on the shared trace.

    Returns (config, SimResult) pairs sorted by (total units, duty factor).
    """
    results = [(cfg, simulate(cfg, trace)) for cfg in configs]

    def key(pair):
        cfg = pair[0]
        df = cfg.z_schedule.duty_factor if (cfg.z_units and cfg.z_schedule) else 0.0
        return (cfg.ctr_units + cfg.z_units, df, cfg.label)

    return sorted(results, key=key)
