"""Cluster data model: GPU types, nodes, group policies, and validation."""

from __future__ import annotations

from dataclasses import dataclass, field


def _as_frozenset(value):
    if value is None:
        return None
    return frozenset(value)


@dataclass(frozen=True)
class GpuType:
    """A GPU model, matched everywhere by its exact identifier string."""

    name: str
    vram_gb: int


@dataclass(frozen=True)
class NodeSpec:
    """One machine: its GPU inventory, RAM, storage and power draw.

    A node with zero GPUs is valid (e.g. a login/interface node) but is
    never a placement target for jobs.
    """

    node_id: str
    gpus: tuple[tuple[GpuType, int], ...] = ()
    cpu_desc: str = ""
    ram_gb: int = 0
    storage_gb: int = 0
    max_power_watts: int = 0  # whole-node draw; 0 = excluded from electricity modeling

    def __post_init__(self):
        object.__setattr__(self, "gpus", tuple((t, int(c)) for t, c in self.gpus))

    @property
    def total_gpus(self) -> int:
        return sum(count for _, count in self.gpus)


@dataclass(frozen=True)
class GroupPolicy:
    """Per-group usage restrictions.

    ``None`` means unrestricted: all nodes, all GPU types, or no limit.
    """

    group_name: str
    allowed_nodes: frozenset[str] | None = None
    allowed_gpu_types: frozenset[str] | None = None
    max_running_jobs: int | None = None
    max_gpus_per_job: int | None = None
    max_runtime_hours: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "allowed_nodes", _as_frozenset(self.allowed_nodes))
        object.__setattr__(self, "allowed_gpu_types", _as_frozenset(self.allowed_gpu_types))


@dataclass(frozen=True)
class ClusterSpec:
    """Unvalidated cluster description: nodes plus group policies."""

    nodes: tuple[NodeSpec, ...]
    groups: tuple[GroupPolicy, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "groups", tuple(self.groups))


# Issue codes reported by validate_cluster.
EMPTY_CLUSTER = "EmptyCluster"
DUPLICATE_NODE_ID = "DuplicateNodeId"
DUPLICATE_GROUP = "DuplicateGroup"
UNKNOWN_POLICY_REFERENCE = "UnknownPolicyReference"
NON_POSITIVE_LIMIT = "NonPositiveLimit"
INVALID_GPU_TYPE = "InvalidGpuType"
INCONSISTENT_GPU_TYPE = "InconsistentGpuType"
NEGATIVE_GPU_COUNT = "NegativeGpuCount"
NEGATIVE_RESOURCE = "NegativeResource"


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


class ClusterValidationError(Exception):
    """Raised by validate_cluster; carries every violation, not just the first."""

    def __init__(self, issues: list[ValidationIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    def codes(self) -> set[str]:
        return {i.code for i in self.issues}


@dataclass(frozen=True)
class ValidatedCluster:
    """Immutable cluster handle produced by validate_cluster.

    Policies are resolved: ``allowed_nodes`` / ``allowed_gpu_types`` are
    concrete sets (never None), so downstream checks need no ALL handling.
    Safe to share across concurrent readers.
    """

    nodes: tuple[NodeSpec, ...]
    policies: dict[str, GroupPolicy]
    installed: dict[str, dict[str, int]]  # node_id -> gpu type name -> count
    gpu_types: dict[str, GpuType]  # name -> GpuType

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.node_id for n in self.nodes)

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def installed_total(self, node_id: str) -> int:
        return sum(self.installed[node_id].values())

    @property
    def total_gpus(self) -> int:
        return sum(self.installed_total(nid) for nid in self.installed)


def validate_cluster(spec: ClusterSpec) -> ValidatedCluster:
    """Check every cluster invariant and return an immutable handle.

    Raises ClusterValidationError listing all violations. Validating the
    spec of an already-validated cluster yields equal handle content.
    """
    issues: list[ValidationIssue] = []

    if not spec.nodes:
        issues.append(ValidationIssue(EMPTY_CLUSTER, "cluster must contain at least one node"))

    seen_nodes: set[str] = set()
    gpu_types: dict[str, GpuType] = {}
    installed: dict[str, dict[str, int]] = {}
    for node in spec.nodes:
        if not node.node_id:
            issues.append(ValidationIssue(DUPLICATE_NODE_ID, "node with empty node_id"))
        if node.node_id in seen_nodes:
            issues.append(ValidationIssue(DUPLICATE_NODE_ID, f"duplicate node id {node.node_id!r}"))
        seen_nodes.add(node.node_id)
        if node.ram_gb < 0 or node.storage_gb < 0 or node.max_power_watts < 0:
            issues.append(ValidationIssue(
                NEGATIVE_RESOURCE, f"node {node.node_id!r} has a negative RAM/storage/power value"))

        per_node: dict[str, int] = {}
        for gpu_type, count in node.gpus:
            if not gpu_type.name:
                issues.append(ValidationIssue(INVALID_GPU_TYPE, f"node {node.node_id!r} lists a GPU type with an empty name"))
                continue
            if gpu_type.vram_gb <= 0:
                issues.append(ValidationIssue(
                    INVALID_GPU_TYPE, f"GPU type {gpu_type.name!r} must have vram_gb > 0"))
            if count < 0:
                issues.append(ValidationIssue(
                    NEGATIVE_GPU_COUNT, f"node {node.node_id!r} has a negative count for {gpu_type.name!r}"))
                continue
            known = gpu_types.get(gpu_type.name)
            if known is not None and known != gpu_type:
                issues.append(ValidationIssue(
                    INCONSISTENT_GPU_TYPE,
                    f"GPU type {gpu_type.name!r} declared with differing specs across nodes"))
            gpu_types.setdefault(gpu_type.name, gpu_type)
            if gpu_type.name in per_node:
                issues.append(ValidationIssue(
                    INVALID_GPU_TYPE, f"node {node.node_id!r} lists {gpu_type.name!r} twice"))
            per_node[gpu_type.name] = per_node.get(gpu_type.name, 0) + count
        installed[node.node_id] = per_node

    policies: dict[str, GroupPolicy] = {}
    all_nodes = frozenset(seen_nodes)
    all_types = frozenset(gpu_types)
    for group in spec.groups:
        if not group.group_name:
            issues.append(ValidationIssue(DUPLICATE_GROUP, "group with empty group_name"))
        if group.group_name in policies:
            issues.append(ValidationIssue(DUPLICATE_GROUP, f"duplicate group {group.group_name!r}"))

        for node_id in sorted(group.allowed_nodes or ()):
            if node_id not in seen_nodes:
                issues.append(ValidationIssue(
                    UNKNOWN_POLICY_REFERENCE,
                    f"group {group.group_name!r} references unknown node {node_id!r}"))
        for type_name in sorted(group.allowed_gpu_types or ()):
            if type_name not in gpu_types:
                issues.append(ValidationIssue(
                    UNKNOWN_POLICY_REFERENCE,
                    f"group {group.group_name!r} references unknown GPU type {type_name!r}"))
        for limit_name in ("max_running_jobs", "max_gpus_per_job", "max_runtime_hours"):
            value = getattr(group, limit_name)
            if value is not None and value <= 0:
                issues.append(ValidationIssue(
                    NON_POSITIVE_LIMIT,
                    f"group {group.group_name!r}: {limit_name} must be strictly positive, got {value}"))

        policies[group.group_name] = GroupPolicy(
            group_name=group.group_name,
            allowed_nodes=group.allowed_nodes if group.allowed_nodes is not None else all_nodes,
            allowed_gpu_types=(group.allowed_gpu_types
                               if group.allowed_gpu_types is not None else all_types),
            max_running_jobs=group.max_running_jobs,
            max_gpus_per_job=group.max_gpus_per_job,
            max_runtime_hours=group.max_runtime_hours,
        )

    if issues:
        raise ClusterValidationError(issues)

    return ValidatedCluster(
        nodes=spec.nodes,
        policies=policies,
        installed=installed,
        gpu_types=gpu_types,
    )


def gpu_inventory(cluster: ValidatedCluster) -> dict[GpuType, int]:
    """Total installed GPUs per type across the cluster; zero totals omitted."""
    totals: dict[GpuType, int] = {}
    for node_id, per_node in cluster.installed.items():
        for type_name, count in per_node.items():
            if count == 0:
                continue
            gpu_type = cluster.gpu_types[type_name]
            totals[gpu_type] = totals.get(gpu_type, 0) + count
    return totals
