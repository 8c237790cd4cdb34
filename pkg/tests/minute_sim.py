"""Naive minute-stepping reference simulator.

Independent check for the event-driven engine: time advances one minute at
a time and free resources are re-derived from scratch before every
scheduling pass. Shares only the input data types with the engine; all
queueing, authorization, placement, and cap logic is reimplemented here.
"""

from __future__ import annotations

import random

from gpuplan.cluster import (
    ClusterSpec,
    GpuType,
    GroupPolicy,
    NodeSpec,
    ValidatedCluster,
    validate_cluster,
)
from gpuplan.scheduler import JobRequest, ScheduleMode


def _is_denied(job: JobRequest, policy: GroupPolicy, cluster: ValidatedCluster) -> bool:
    if job.gpu_count > 0:
        if job.gpu_type is not None:
            type_names = [job.gpu_type] if job.gpu_type in policy.allowed_gpu_types else []
        else:
            type_names = list(policy.allowed_gpu_types)
        hosts = [
            node_id
            for node_id in policy.allowed_nodes
            for name in type_names
            if cluster.installed[node_id].get(name, 0) >= job.gpu_count
        ]
        if not hosts:
            return True
    if policy.max_gpus_per_job is not None and job.gpu_count > policy.max_gpus_per_job:
        return True
    if policy.max_runtime_hours is not None and job.duration_min > 60 * policy.max_runtime_hours:
        return True
    return False


def simulate_by_minutes(cluster: ValidatedCluster, jobs: list[JobRequest],
                        mode: ScheduleMode, horizon_min: int):
    """Returns ({job_id: (start, end_or_None, node_id)}, denied_job_ids)."""
    by_submit: dict[int, list[JobRequest]] = {}
    for job in jobs:
        by_submit.setdefault(job.submit_time_min, []).append(job)

    queue: list[JobRequest] = []
    running: dict[int, tuple[JobRequest, str, str | None, int]] = {}
    outcomes: dict[int, tuple[int, int | None, str]] = {}
    denied: set[int] = set()

    for now in range(horizon_min + 1):
        # 1. completions first
        for job_id in sorted(running):
            job, node_id, _, start = running[job_id]
            if start + job.duration_min == now:
                outcomes[job_id] = (start, now, node_id)
                del running[job_id]

        # 2. arrivals, ascending job id
        for job in sorted(by_submit.get(now, []), key=lambda j: j.job_id):
            policy = cluster.policies[job.group]
            if _is_denied(job, policy, cluster):
                denied.add(job.job_id)
            else:
                queue.append(job)

        # 3. one scheduling pass, free resources rebuilt from scratch
        free_gpus = {nid: dict(per) for nid, per in cluster.installed.items()}
        free_mem = {node.node_id: node.ram_gb for node in cluster.nodes}
        group_counts: dict[str, int] = {}
        for job, node_id, gpu_type, _ in running.values():
            if gpu_type is not None:
                free_gpus[node_id][gpu_type] -= job.gpu_count
            free_mem[node_id] -= job.mem_gb
            group_counts[job.group] = group_counts.get(job.group, 0) + 1

        def try_place(job: JobRequest):
            policy = cluster.policies[job.group]
            cap = policy.max_running_jobs
            if cap is not None and group_counts.get(job.group, 0) >= cap:
                return None
            best = None
            best_key = None
            for node in cluster.nodes:
                node_id = node.node_id
                installed = cluster.installed[node_id]
                if node_id not in policy.allowed_nodes or sum(installed.values()) == 0:
                    continue
                if free_mem[node_id] < job.mem_gb:
                    continue
                chosen_type = None
                if job.gpu_count > 0:
                    if job.gpu_type is not None:
                        names = [job.gpu_type] if job.gpu_type in policy.allowed_gpu_types else []
                    else:
                        names = sorted(policy.allowed_gpu_types)
                    for name in names:
                        if free_gpus[node_id].get(name, 0) >= job.gpu_count:
                            chosen_type = name
                            break
                    if chosen_type is None:
                        continue
                busy = sum(installed.values()) - sum(free_gpus[node_id].values())
                key = (busy, node_id)
                if best_key is None or key < best_key:
                    best_key = key
                    best = (node_id, chosen_type)
            return best

        def start_job(job: JobRequest, node_id: str, gpu_type: str | None):
            if gpu_type is not None:
                free_gpus[node_id][gpu_type] -= job.gpu_count
            free_mem[node_id] -= job.mem_gb
            group_counts[job.group] = group_counts.get(job.group, 0) + 1
            running[job.job_id] = (job, node_id, gpu_type, now)
            outcomes[job.job_id] = (now, None, node_id)

        if mode is ScheduleMode.STRICT:
            while queue:
                placement = try_place(queue[0])
                if placement is None:
                    break
                job = queue.pop(0)
                start_job(job, *placement)
        else:
            kept = []
            for job in queue:
                placement = try_place(job)
                if placement is None:
                    kept.append(job)
                else:
                    start_job(job, *placement)
            queue = kept

    return outcomes, denied


# random small instances for the oracle-equivalence and property suites

TYPE_POOL = (GpuType("ta", 8), GpuType("tb", 24))


def random_instance(rng: random.Random, max_nodes: int = 3, max_jobs: int = 10,
                    horizon_min: int = 120):
    """A random ≤ max_nodes / ≤ max_jobs instance: (cluster, jobs, horizon)."""
    n_nodes = rng.randint(1, max_nodes)
    nodes = []
    present_types = set()
    for index in range(n_nodes):
        gpus = []
        for gpu_type in TYPE_POOL:
            count = rng.randint(0, 3)
            if count:
                gpus.append((gpu_type, count))
                present_types.add(gpu_type.name)
        nodes.append(NodeSpec(f"n{index}", tuple(gpus), "", ram_gb=rng.randint(4, 32),
                              storage_gb=10))
    node_ids = [n.node_id for n in nodes]

    groups = []
    for name in ("g1", "g2")[: rng.randint(1, 2)]:
        allowed = None
        if rng.random() < 0.4:
            allowed = frozenset(rng.sample(node_ids, rng.randint(1, len(node_ids))))
        allowed_types = None
        if present_types and rng.random() < 0.3:
            allowed_types = frozenset({rng.choice(sorted(present_types))})
        groups.append(GroupPolicy(
            group_name=name,
            allowed_nodes=allowed,
            allowed_gpu_types=allowed_types,
            max_running_jobs=rng.choice((None, 1, 2)),
            max_gpus_per_job=rng.choice((None, 1, 2, 3)),
            max_runtime_hours=rng.choice((None, 0.25, 1.0)),
        ))
    cluster = validate_cluster(ClusterSpec(nodes=tuple(nodes), groups=tuple(groups)))

    jobs = []
    for job_id in range(1, rng.randint(1, max_jobs) + 1):
        jobs.append(JobRequest(
            job_id=job_id,
            user=f"u{job_id}",
            group=rng.choice(groups).group_name,
            gpu_count=rng.randint(0, 3),
            gpu_type=rng.choice((None, None, "ta", "tb")),
            mem_gb=rng.randint(0, 16),
            duration_min=rng.randint(1, 30),
            submit_time_min=rng.randint(0, 60),
        ))
    return cluster, jobs, horizon_min
