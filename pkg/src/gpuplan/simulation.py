"""Deterministic discrete-event simulation and utilization accounting.

Time is integer minutes. At equal timestamps the engine processes all
completions, then all submissions (each in ascending job id), then runs
exactly one scheduling pass. One month is 730 hours (43,800 minutes).
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass, field

from .cluster import ValidatedCluster
from .scheduler import (
    DuplicateJobIdError,
    JobRequest,
    QueueState,
    ScheduleMode,
    authorize,
    release,
    schedule_step,
    submit,
)

MINUTES_PER_MONTH = 43_800  # 730-hour month

SUBMIT = "SUBMIT"
START = "START"
COMPLETE = "COMPLETE"
DENY = "DENY"


class MalformedTraceError(Exception):
    pass


@dataclass(frozen=True)
class TraceEvent:
    time_min: int
    kind: str
    job_id: int
    node_id: str | None = None
    gpu_type: str | None = None  # concrete allocation, carried for replay checks


@dataclass
class SimulationTrace:
    events: list[TraceEvent]
    horizon_min: int
    cluster: ValidatedCluster
    jobs: dict[int, JobRequest] = field(default_factory=dict)
    start_min: int = 0  # start of the observation window; horizon_min is its end


@dataclass(frozen=True)
class WaitStats:
    min_min: float
    mean_min: float
    max_min: float


@dataclass(frozen=True)
class UtilizationReport:
    gpu_hours: float
    total_gpu_capacity_hours: float
    grade_of_operation: float
    mean_monthly_usage_hours: float
    per_node_busy_fraction: dict[str, float]
    wait_time: WaitStats


def run(cluster: ValidatedCluster, jobs: list[JobRequest],
        mode: ScheduleMode = ScheduleMode.STRICT,
        horizon_min: int | None = None) -> SimulationTrace:
    """Simulate the workload and return the event trace.

    Events after ``horizon_min`` are clipped: jobs still running then stay
    recorded as started without a COMPLETE, mirroring how a monitoring
    window truncates observations. With no horizon the simulation runs
    until the queue drains.
    """
    by_id: dict[int, JobRequest] = {}
    for job in jobs:
        if job.job_id in by_id:
            raise DuplicateJobIdError(f"job id {job.job_id} appears twice in the workload")
        by_id[job.job_id] = job

    state = QueueState(cluster)
    events: list[TraceEvent] = []
    # heap entries: (time, order, job_id); completions (order 0) precede submissions (order 1)
    heap: list[tuple[int, int, int]] = [
        (job.submit_time_min, 1, job.job_id) for job in by_id.values()
    ]
    heapq.heapify(heap)

    while heap and (horizon_min is None or heap[0][0] <= horizon_min):
        now = heap[0][0]
        completions: list[int] = []
        submissions: list[int] = []
        while heap and heap[0][0] == now:
            _, order, job_id = heapq.heappop(heap)
            (completions if order == 0 else submissions).append(job_id)

        for job_id in completions:
            done = release(job_id, state, now)
            events.append(TraceEvent(now, COMPLETE, job_id, done.node_id, done.gpu_type))

        for job_id in submissions:
            job = by_id[job_id]
            decision = authorize(job, cluster.policies.get(job.group), state)
            if decision.allowed:
                submit(job, state)
                events.append(TraceEvent(now, SUBMIT, job_id))
            else:
                events.append(TraceEvent(now, DENY, job_id))

        for job, node_id in schedule_step(state, now, mode):
            entry = state.running[job.job_id]
            events.append(TraceEvent(now, START, job.job_id, node_id, entry.gpu_type))
            heapq.heappush(heap, (now + job.duration_min, 0, job.job_id))

        state.check_invariants()

    if horizon_min is None:
        horizon_min = events[-1].time_min if events else 0
    return SimulationTrace(events=events, horizon_min=horizon_min, cluster=cluster, jobs=by_id)


def _busy_intervals(trace: SimulationTrace) -> dict[int, tuple[int, int, str]]:
    """job_id -> (start, clipped end, node) for every started job."""
    starts: dict[int, tuple[int, str]] = {}
    submitted: set[int] = set()
    intervals: dict[int, tuple[int, int, str]] = {}
    for event in trace.events:
        if event.job_id not in trace.jobs:
            raise MalformedTraceError(f"event references unknown job {event.job_id}")
        if event.kind == SUBMIT:
            submitted.add(event.job_id)
        elif event.kind == START:
            if event.job_id not in submitted:
                raise MalformedTraceError(f"job {event.job_id} started without a prior SUBMIT")
            starts[event.job_id] = (event.time_min, event.node_id or "")
        elif event.kind == COMPLETE:
            if event.job_id not in starts:
                raise MalformedTraceError(f"job {event.job_id} completed without a prior START")
            start, node_id = starts.pop(event.job_id)
            intervals[event.job_id] = (start, event.time_min, node_id)
    for job_id, (start, node_id) in starts.items():  # still running at horizon
        intervals[job_id] = (start, trace.horizon_min, node_id)
    return intervals


def utilization(trace: SimulationTrace) -> UtilizationReport:
    """GPU-hour accounting over the trace window.

    Jobs still running at the horizon are truncated at the horizon
    boundary. Mean monthly usage divides total GPU-hours by the number of
    whole 730-hour months in the window (minimum one).
    """
    window_min = trace.horizon_min - trace.start_min
    cluster = trace.cluster
    intervals = _busy_intervals(trace)

    busy_gpu_min_total = 0.0
    busy_gpu_min_per_node: dict[str, float] = {nid: 0.0 for nid in cluster.installed}
    waits: list[int] = []
    for job_id, (start, end, node_id) in intervals.items():
        job = trace.jobs[job_id]
        span = max(0, min(end, trace.horizon_min) - max(start, trace.start_min))
        busy_gpu_min_total += job.gpu_count * span
        busy_gpu_min_per_node[node_id] += job.gpu_count * span
        waits.append(start - job.submit_time_min)

    gpu_hours = busy_gpu_min_total / 60.0
    capacity_hours = cluster.total_gpus * window_min / 60.0
    grade = gpu_hours / capacity_hours if capacity_hours > 0 else 0.0
    whole_months = max(1, round(window_min / MINUTES_PER_MONTH))
    per_node = {}
    for nid in cluster.installed:
        installed = cluster.installed_total(nid)
        denom = installed * window_min
        per_node[nid] = busy_gpu_min_per_node[nid] / denom if denom > 0 else 0.0
    wait_stats = WaitStats(
        min_min=float(min(waits)) if waits else 0.0,
        mean_min=sum(waits) / len(waits) if waits else 0.0,
        max_min=float(max(waits)) if waits else 0.0,
    )
    return UtilizationReport(
        gpu_hours=gpu_hours,
        total_gpu_capacity_hours=capacity_hours,
        grade_of_operation=grade,
        mean_monthly_usage_hours=gpu_hours / whole_months,
        per_node_busy_fraction=per_node,
        wait_time=wait_stats,
    )


def write_trace_csv(trace: SimulationTrace, path):
    """Export the trace as time_min,kind,job_id,node_id rows."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["time_min", "kind", "job_id", "node_id"])
        for event in trace.events:
            writer.writerow([event.time_min, event.kind, event.job_id, event.node_id or ""])
