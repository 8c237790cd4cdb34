"""FIFO queueing, policy authorization, and least-loaded node placement.

QueueState mutations are single-threaded by contract; the simulation
engine serializes all operations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .cluster import GroupPolicy, ValidatedCluster


class ScheduleMode(enum.Enum):
    """STRICT: a blocked queue head blocks everything behind it.
    SKIP: later jobs may start past a blocked head (backfill-like)."""

    STRICT = "strict"
    SKIP = "skip"


class DenyReason(enum.Enum):
    GPU_TYPE_FORBIDDEN = "GpuTypeForbidden"
    TOO_MANY_GPUS = "TooManyGpus"
    RUNTIME_EXCEEDED = "RuntimeExceeded"


@dataclass(frozen=True)
class PolicyDecision:
    allowed: bool
    reason: DenyReason | None = None

    def __post_init__(self):
        if not self.allowed and self.reason is None:
            raise ValueError("a deny decision must carry a reason")


class SchedulerError(Exception):
    pass


class UnknownGroupError(SchedulerError):
    pass


class DuplicateJobIdError(SchedulerError):
    pass


class UnknownJobError(SchedulerError):
    pass


class NotRunningError(SchedulerError):
    pass


@dataclass(frozen=True)
class JobRequest:
    """A resource demand submitted by a user in a group.

    ``gpu_type`` None means any type acceptable to the group's policy.
    """

    job_id: int
    user: str
    group: str
    gpu_count: int = 0
    gpu_type: str | None = None
    mem_gb: int = 0
    duration_min: int = 1
    submit_time_min: int = 0

    def __post_init__(self):
        if self.gpu_type == "ANY":
            object.__setattr__(self, "gpu_type", None)
        if not self.group:
            raise ValueError(f"job {self.job_id}: group must be non-empty")
        if self.gpu_count < 0:
            raise ValueError(f"job {self.job_id}: gpu_count must be >= 0")
        if self.mem_gb < 0:
            raise ValueError(f"job {self.job_id}: mem_gb must be >= 0")
        if self.duration_min <= 0:
            raise ValueError(f"job {self.job_id}: duration_min must be > 0")
        if self.submit_time_min < 0:
            raise ValueError(f"job {self.job_id}: submit_time_min must be >= 0")


@dataclass(frozen=True)
class RunningJob:
    job: JobRequest
    node_id: str
    gpu_type: str | None  # concrete type allocated, None for GPU-less jobs
    start_min: int


@dataclass(frozen=True)
class FinishedJob:
    job: JobRequest
    node_id: str
    gpu_type: str | None
    start_min: int
    end_min: int


class QueueState:
    """Pending queue, running set, and per-node free resources.

    A job id is in at most one of pending/running/finished; free counters
    always equal installed capacity minus running allocations.
    """

    def __init__(self, cluster: ValidatedCluster):
        self.cluster = cluster
        self.pending: list[JobRequest] = []
        self.running: dict[int, RunningJob] = {}
        self.finished: dict[int, FinishedJob] = {}
        self.free_gpus: dict[str, dict[str, int]] = {
            nid: dict(per_node) for nid, per_node in cluster.installed.items()
        }
        self.free_mem: dict[str, int] = {n.node_id: n.ram_gb for n in cluster.nodes}
        self._seen_ids: set[int] = set()
        self._group_running: dict[str, int] = {}

    def busy_gpu_count(self, node_id: str) -> int:
        installed = self.cluster.installed[node_id]
        free = self.free_gpus[node_id]
        return sum(installed.values()) - sum(free.values())

    def group_running_count(self, group: str) -> int:
        return self._group_running.get(group, 0)

    def job_ids(self) -> set[int]:
        return set(self._seen_ids)

    def _allocate(self, job: JobRequest, node_id: str, gpu_type: str | None, now_min: int):
        if gpu_type is not None:
            self.free_gpus[node_id][gpu_type] -= job.gpu_count
        self.free_mem[node_id] -= job.mem_gb
        self.running[job.job_id] = RunningJob(job, node_id, gpu_type, now_min)
        self._group_running[job.group] = self._group_running.get(job.group, 0) + 1

    def check_invariants(self):
        """Capacity safety and conservation; raises AssertionError on breach."""
        busy_gpus: dict[str, dict[str, int]] = {nid: {} for nid in self.free_gpus}
        busy_mem: dict[str, int] = {nid: 0 for nid in self.free_mem}
        for entry in self.running.values():
            if entry.gpu_type is not None:
                per = busy_gpus[entry.node_id]
                per[entry.gpu_type] = per.get(entry.gpu_type, 0) + entry.job.gpu_count
            busy_mem[entry.node_id] += entry.job.mem_gb
        for nid, installed in self.cluster.installed.items():
            for type_name, count in installed.items():
                free = self.free_gpus[nid][type_name]
                busy = busy_gpus[nid].get(type_name, 0)
                if not (0 <= free <= count):
                    raise AssertionError(f"free {type_name} on {nid} out of range: {free}/{count}")
                if free + busy != count:
                    raise AssertionError(f"GPU conservation broken on {nid}/{type_name}")
            node = self.cluster.node(nid)
            if not (0 <= self.free_mem[nid] <= node.ram_gb):
                raise AssertionError(f"free memory on {nid} out of range")
            if self.free_mem[nid] + busy_mem[nid] != node.ram_gb:
                raise AssertionError(f"memory conservation broken on {nid}")
        ids_pending = {j.job_id for j in self.pending}
        if ids_pending & set(self.running) or ids_pending & set(self.finished) \
                or set(self.running) & set(self.finished):
            raise AssertionError("a job appears in more than one of pending/running/finished")
        counts: dict[str, int] = {}
        for entry in self.running.values():
            counts[entry.job.group] = counts.get(entry.job.group, 0) + 1
        for group, count in counts.items():
            cap = self.cluster.policies[group].max_running_jobs
            if cap is not None and count > cap:
                raise AssertionError(f"group {group!r} exceeds max_running_jobs")


def authorize(job: JobRequest, policy: GroupPolicy | None, state: QueueState) -> PolicyDecision:
    """Static policy check for a submitted job.

    Denies when the requested GPU type/count can never be satisfied on the
    group's allowed nodes, when the count exceeds the per-job cap, or when
    the duration exceeds the runtime cap. Concurrency caps are not checked
    here: they defer jobs at scheduling time, they do not reject them.

    Raises UnknownGroupError when the job's group has no policy.
    """
    if policy is None:
        raise UnknownGroupError(f"job {job.job_id} references unknown group {job.group!r}")

    if job.gpu_count > 0:
        if job.gpu_type is not None:
            wanted = {job.gpu_type} & policy.allowed_gpu_types
        else:
            wanted = set(policy.allowed_gpu_types)
        feasible = any(
            state.cluster.installed[node_id].get(type_name, 0) >= job.gpu_count
            for node_id in policy.allowed_nodes
            for type_name in wanted
        )
        if not feasible:
            return PolicyDecision(False, DenyReason.GPU_TYPE_FORBIDDEN)

    if policy.max_gpus_per_job is not None and job.gpu_count > policy.max_gpus_per_job:
        return PolicyDecision(False, DenyReason.TOO_MANY_GPUS)

    if policy.max_runtime_hours is not None and job.duration_min > 60 * policy.max_runtime_hours:
        return PolicyDecision(False, DenyReason.RUNTIME_EXCEEDED)

    return PolicyDecision(True)


def submit(job: JobRequest, state: QueueState):
    """Append an authorized job at the tail of the pending queue."""
    if job.job_id in state._seen_ids:
        raise DuplicateJobIdError(f"job id {job.job_id} was already submitted")
    state._seen_ids.add(job.job_id)
    state.pending.append(job)


def _pick_gpu_type(job: JobRequest, policy: GroupPolicy, state: QueueState,
                   node_id: str) -> str | None:
    """Smallest-named allowed type with enough free units on the node."""
    if job.gpu_type is not None:
        candidates = [job.gpu_type] if job.gpu_type in policy.allowed_gpu_types else []
    else:
        candidates = sorted(policy.allowed_gpu_types)
    free = state.free_gpus[node_id]
    for type_name in candidates:
        if free.get(type_name, 0) >= job.gpu_count:
            return type_name
    return None


def _find_placement(job: JobRequest, state: QueueState,
                    policy: GroupPolicy) -> tuple[str, str | None] | None:
    best_key = None
    best: tuple[str, str | None] | None = None
    for node in state.cluster.nodes:
        node_id = node.node_id
        if node_id not in policy.allowed_nodes:
            continue
        if state.cluster.installed_total(node_id) == 0:
            continue  # GPU-less interface nodes are never placement targets
        if state.free_mem[node_id] < job.mem_gb:
            continue
        gpu_type = None
        if job.gpu_count > 0:
            gpu_type = _pick_gpu_type(job, policy, state, node_id)
            if gpu_type is None:
                continue
        key = (state.busy_gpu_count(node_id), node_id)
        if best_key is None or key < best_key:
            best_key = key
            best = (node_id, gpu_type)
    return best


def place(job: JobRequest, state: QueueState, policy: GroupPolicy) -> str | None:
    """Choose a node for an authorized job, or None when nothing fits.

    Candidates are the policy's allowed nodes with enough free GPUs of a
    matching allowed type and enough free memory; among them the node with
    the fewest busy GPUs wins, ties broken by lexicographically smallest
    node id. Jobs never span nodes.
    """
    found = _find_placement(job, state, policy)
    return found[0] if found else None


def _try_start(job: JobRequest, state: QueueState, now_min: int) -> str | None:
    policy = state.cluster.policies.get(job.group)
    if policy is None:
        raise UnknownGroupError(f"job {job.job_id} references unknown group {job.group!r}")
    cap = policy.max_running_jobs
    if cap is not None and state.group_running_count(job.group) >= cap:
        return None
    found = _find_placement(job, state, policy)
    if found is None:
        return None
    node_id, gpu_type = found
    state._allocate(job, node_id, gpu_type, now_min)
    return node_id


def schedule_step(state: QueueState, now_min: int,
                  mode: ScheduleMode = ScheduleMode.STRICT) -> list[tuple[JobRequest, str]]:
    """One scheduling pass over the pending queue; returns start assignments.

    STRICT walks head-first and stops at the first job that cannot start
    (no fitting node, or its group's concurrency cap is reached). SKIP
    walks the whole queue in order and starts everything that fits.
    A step that starts nothing is valid.
    """
    started: list[tuple[JobRequest, str]] = []
    if mode is ScheduleMode.STRICT:
        while state.pending:
            job = state.pending[0]
            node_id = _try_start(job, state, now_min)
            if node_id is None:
                break
            state.pending.pop(0)
            started.append((job, node_id))
    else:
        remaining: list[JobRequest] = []
        for job in state.pending:
            node_id = _try_start(job, state, now_min)
            if node_id is None:
                remaining.append(job)
            else:
                started.append((job, node_id))
        state.pending = remaining
    return started


def release(job_id: int, state: QueueState, now_min: int) -> FinishedJob:
    """Move a running job to finished and return its resources to the pool."""
    entry = state.running.get(job_id)
    if entry is None:
        if job_id in state._seen_ids:
            raise NotRunningError(f"job {job_id} is not running")
        raise UnknownJobError(f"unknown job id {job_id}")
    del state.running[job_id]
    if entry.gpu_type is not None:
        state.free_gpus[entry.node_id][entry.gpu_type] += entry.job.gpu_count
    state.free_mem[entry.node_id] += entry.job.mem_gb
    self_count = state._group_running[entry.job.group] - 1
    if self_count:
        state._group_running[entry.job.group] = self_count
    else:
        del state._group_running[entry.job.group]
    done = FinishedJob(entry.job, entry.node_id, entry.gpu_type, entry.start_min, now_min)
    state.finished[job_id] = done
    return done
