import pytest

from gpuplan.cluster import ClusterSpec, GroupPolicy, NodeSpec, validate_cluster
from gpuplan.scheduler import (
    DenyReason,
    DuplicateJobIdError,
    JobRequest,
    NotRunningError,
    QueueState,
    ScheduleMode,
    UnknownGroupError,
    UnknownJobError,
    authorize,
    place,
    release,
    schedule_step,
    submit,
)
from helpers import RTX, table2_cluster


def job(job_id, group="faculty", gpus=1, gpu_type=None, mem=0, duration=60, submit_at=0):
    return JobRequest(job_id, f"u{job_id}", group, gpus, gpu_type, mem, duration, submit_at)


def fresh_state():
    return QueueState(table2_cluster())


# authorization


def test_student_request_for_gpu_outside_allowed_nodes_denied():
    state = fresh_state()
    decision = authorize(job(1, "students", gpus=1, gpu_type="a6000"),
                         state.cluster.policies["students"], state)
    assert not decision.allowed
    assert decision.reason is DenyReason.GPU_TYPE_FORBIDDEN


def test_faculty_any_type_any_feasible_count_allowed():
    state = fresh_state()
    policy = state.cluster.policies["faculty"]
    for gpus, gpu_type in ((1, None), (8, None), (8, "rtx2080ti"), (3, "a6000")):
        assert authorize(job(1, "faculty", gpus=gpus, gpu_type=gpu_type), policy, state).allowed


def test_memory_only_job_allowed_under_default_policy():
    state = fresh_state()
    decision = authorize(job(1, "faculty", gpus=0, mem=64),
                         state.cluster.policies["faculty"], state)
    assert decision.allowed


def test_count_no_single_node_can_ever_host_is_denied():
    state = fresh_state()
    decision = authorize(job(1, "faculty", gpus=9), state.cluster.policies["faculty"], state)
    assert decision.reason is DenyReason.GPU_TYPE_FORBIDDEN


def test_too_many_gpus_for_group_cap():
    state = fresh_state()
    decision = authorize(job(1, "students", gpus=4), state.cluster.policies["students"], state)
    assert decision.reason is DenyReason.TOO_MANY_GPUS


def test_runtime_cap():
    state = fresh_state()
    decision = authorize(job(1, "students", gpus=1, duration=25 * 60),
                         state.cluster.policies["students"], state)
    assert decision.reason is DenyReason.RUNTIME_EXCEEDED


def test_duration_at_exact_runtime_cap_allowed():
    state = fresh_state()
    decision = authorize(job(1, "students", gpus=1, duration=24 * 60),
                         state.cluster.policies["students"], state)
    assert decision.allowed


def test_unknown_group_raises():
    state = fresh_state()
    with pytest.raises(UnknownGroupError):
        authorize(job(1, "nobody"), None, state)


# submission


def test_submit_preserves_order():
    state = fresh_state()
    submit(job(1), state)
    submit(job(2), state)
    assert [j.job_id for j in state.pending] == [1, 2]


def test_duplicate_job_id_rejected():
    state = fresh_state()
    submit(job(1), state)
    with pytest.raises(DuplicateJobIdError):
        submit(job(1), state)
    assert [j.job_id for j in state.pending] == [1]  # state unchanged


# scheduling step

def two_node_cluster(gpus_per_node=2, ram=64):
    return validate_cluster(ClusterSpec(
        nodes=(NodeSpec("a", ((RTX, gpus_per_node),), "", ram, 10),
               NodeSpec("b", ((RTX, gpus_per_node),), "", ram, 10)),
        groups=(GroupPolicy("users"),),
    ))


def test_strict_blocks_behind_head_but_skip_passes():
    # 8-GPU node with 4 already busy: head wants 8, the next job wants 2.
    cluster = validate_cluster(ClusterSpec(
        nodes=(NodeSpec("n", ((RTX, 8),), "", 64, 10),),
        groups=(GroupPolicy("users"),),
    ))
    for mode, expected in ((ScheduleMode.STRICT, []), (ScheduleMode.SKIP, [2])):
        state = QueueState(cluster)
        submit(JobRequest(99, "u", "users", 4, None, 0, 1000, 0), state)
        assert [j.job_id for j, _ in schedule_step(state, 0)] == [99]
        submit(JobRequest(1, "u", "users", 8, None, 0, 10, 0), state)
        submit(JobRequest(2, "u", "users", 2, None, 0, 10, 0), state)
        started = schedule_step(state, 1, mode)
        assert [j.job_id for j, _ in started] == expected
        state.check_invariants()


def test_empty_pending_step_is_a_noop():
    state = fresh_state()
    assert schedule_step(state, 0) == []
    assert not state.running


def test_place_prefers_least_busy_node():
    cluster = two_node_cluster()
    state = QueueState(cluster)
    submit(JobRequest(1, "u", "users", 1, None, 0, 100, 0), state)
    schedule_step(state, 0)
    assert state.running[1].node_id == "a"  # tie at 0 busy broken by node id
    # brute force: b now has strictly fewer busy GPUs than a
    busy = {nid: state.busy_gpu_count(nid) for nid in ("a", "b")}
    best = min(sorted(busy), key=lambda nid: (busy[nid], nid))
    chosen = place(JobRequest(2, "u", "users", 1, None, 0, 100, 0), state,
                   cluster.policies["users"])
    assert chosen == best == "b"


def test_place_exact_fit_single_candidate():
    cluster = two_node_cluster()
    state = QueueState(cluster)
    state.free_gpus["a"]["rtx2080ti"] = 0
    chosen = place(JobRequest(1, "u", "users", 2, None, 0, 10, 0), state,
                   cluster.policies["users"])
    assert chosen == "b"


def test_four_single_gpu_jobs_spread_evenly():
    cluster = two_node_cluster()
    state = QueueState(cluster)
    for job_id in range(1, 5):
        submit(JobRequest(job_id, "u", "users", 1, None, 0, 100, 0), state)
    schedule_step(state, 0)
    assert state.busy_gpu_count("a") == 2
    assert state.busy_gpu_count("b") == 2


def test_gpu_less_interface_node_never_a_target():
    state = fresh_state()
    chosen = place(job(1, "faculty", gpus=0, mem=16), state, state.cluster.policies["faculty"])
    assert chosen in ("C1", "C2")  # never the interface node I


def test_concurrency_cap_defers_rather_than_rejects():
    state = fresh_state()
    submit(job(1, "students", gpus=1, duration=100), state)
    submit(job(2, "students", gpus=1, duration=100), state)
    started = schedule_step(state, 0)
    assert [j.job_id for j, _ in started] == [1]
    # free GPUs remain on C1, but the second student job must wait
    assert state.free_gpus["C1"]["rtx2080ti"] == 7
    assert [j.job_id for j in state.pending] == [2]


def test_release_returns_resources_and_unblocks_head():
    state = fresh_state()
    submit(job(1, "faculty", gpus=8, duration=50), state)
    submit(job(2, "faculty", gpus=8, duration=50), state)
    schedule_step(state, 0)
    assert 1 in state.running and [j.job_id for j in state.pending] == [2]
    release(1, state, 50)
    assert state.free_gpus["C1"]["rtx2080ti"] == 8  # conservation
    started = schedule_step(state, 50, ScheduleMode.STRICT)
    assert [j.job_id for j, _ in started] == [2]
    assert state.finished[1].end_min == 50
    state.check_invariants()


def test_release_unknown_and_not_running():
    state = fresh_state()
    with pytest.raises(UnknownJobError):
        release(42, state, 0)
    submit(job(7), state)
    with pytest.raises(NotRunningError):
        release(7, state, 0)


def test_job_request_invariants():
    with pytest.raises(ValueError):
        JobRequest(1, "u", "g", gpu_count=-1)
    with pytest.raises(ValueError):
        JobRequest(1, "u", "g", duration_min=0)
    with pytest.raises(ValueError):
        JobRequest(1, "u", "", duration_min=5)
    assert JobRequest(1, "u", "g", gpu_type="ANY").gpu_type is None
