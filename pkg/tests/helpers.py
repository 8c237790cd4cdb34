"""Shared builders and trace-replay checks used across the test suite.

The replay helpers derive running sets and busy counts from trace events
alone, independently of the engine's internal bookkeeping.
"""

from __future__ import annotations

from pathlib import Path

from gpuplan.cluster import (
    ClusterSpec,
    GpuType,
    GroupPolicy,
    NodeSpec,
    ValidatedCluster,
    validate_cluster,
)
from gpuplan.simulation import COMPLETE, DENY, START, SUBMIT, SimulationTrace

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

RTX = GpuType("rtx2080ti", 11)
A6000 = GpuType("a6000", 48)


def table2_cluster() -> ValidatedCluster:
    """The shipped three-node cluster: interface node plus C1/C2."""
    return validate_cluster(ClusterSpec(
        nodes=(
            NodeSpec("I", (), "1x AMD EPYC 7302P, 3.00 GHz", 126, 460),
            NodeSpec("C1", ((RTX, 8),), "2x Intel Xeon Silver 4114, 2.20 GHz", 230, 8230, 2600),
            NodeSpec("C2", ((A6000, 3),), "2x AMD EPYC 7452, 2.35 GHz", 512, 8240),
        ),
        groups=(
            GroupPolicy("faculty"),
            GroupPolicy("students", allowed_nodes=frozenset({"C1"}), max_running_jobs=1,
                        max_gpus_per_job=2, max_runtime_hours=24),
        ),
    ))


def single_node_cluster(gpus: int = 8, ram_gb: int = 230,
                        group_kwargs: dict | None = None) -> ValidatedCluster:
    """One GPU node and one group (default: unrestricted)."""
    return validate_cluster(ClusterSpec(
        nodes=(NodeSpec("n1", ((RTX, gpus),), "", ram_gb, 100),),
        groups=(GroupPolicy("users", **(group_kwargs or {})),),
    ))


def job_lifetimes(trace: SimulationTrace) -> dict[int, tuple[int, int | None, str]]:
    """job_id -> (start, end or None if still running, node) from events."""
    out: dict[int, tuple[int, int | None, str]] = {}
    for event in trace.events:
        if event.kind == START:
            out[event.job_id] = (event.time_min, None, event.node_id)
        elif event.kind == COMPLETE:
            start, _, node = out[event.job_id]
            out[event.job_id] = (start, event.time_min, node)
    return out


def denied_ids(trace: SimulationTrace) -> set[int]:
    return {e.job_id for e in trace.events if e.kind == DENY}


def max_concurrent(trace: SimulationTrace, job_ids: set[int]) -> int:
    """Peak number of the given jobs running at once, replayed from events."""
    peak = 0
    active = 0
    for event in trace.events:
        if event.job_id not in job_ids:
            continue
        if event.kind == START:
            active += 1
            peak = max(peak, active)
        elif event.kind == COMPLETE:
            active -= 1
    return peak


def assert_capacity_safe(trace: SimulationTrace):
    """Replay the trace and check per-node per-type busy GPUs and memory
    never exceed installed capacity."""
    busy_gpus: dict[tuple[str, str], int] = {}
    busy_mem: dict[str, int] = {}
    for event in trace.events:
        job = trace.jobs[event.job_id]
        if event.kind == START:
            if event.gpu_type is not None:
                key = (event.node_id, event.gpu_type)
                busy_gpus[key] = busy_gpus.get(key, 0) + job.gpu_count
                installed = trace.cluster.installed[event.node_id].get(event.gpu_type, 0)
                assert busy_gpus[key] <= installed, (
                    f"{busy_gpus[key]} busy {event.gpu_type} GPUs on {event.node_id}, "
                    f"only {installed} installed")
            busy_mem[event.node_id] = busy_mem.get(event.node_id, 0) + job.mem_gb
            assert busy_mem[event.node_id] <= trace.cluster.node(event.node_id).ram_gb
        elif event.kind == COMPLETE:
            if event.gpu_type is not None:
                busy_gpus[(event.node_id, event.gpu_type)] -= job.gpu_count
                assert busy_gpus[(event.node_id, event.gpu_type)] >= 0
            busy_mem[event.node_id] -= job.mem_gb
            assert busy_mem[event.node_id] >= 0


def assert_trace_consistent(trace: SimulationTrace):
    """Every START has a prior SUBMIT, every COMPLETE a prior START, and
    completed spans equal the job's duration."""
    submitted: set[int] = set()
    started: dict[int, int] = {}
    last_time = None
    for event in trace.events:
        if last_time is not None:
            assert event.time_min >= last_time, "events out of time order"
        last_time = event.time_min
        if event.kind == SUBMIT:
            submitted.add(event.job_id)
        elif event.kind == START:
            assert event.job_id in submitted, f"START without SUBMIT for {event.job_id}"
            started[event.job_id] = event.time_min
        elif event.kind == COMPLETE:
            assert event.job_id in started, f"COMPLETE without START for {event.job_id}"
            duration = trace.jobs[event.job_id].duration_min
            assert event.time_min - started[event.job_id] == duration
