"""Scenario file loading: strict JSON schema with located errors.

Unknown keys anywhere in the file are rejected (typo protection); error
messages carry a JSON-pointer-style location such as /cluster/nodes/0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .cluster import (
    ClusterSpec,
    ClusterValidationError,
    GpuType,
    GroupPolicy,
    NodeSpec,
    ValidatedCluster,
    validate_cluster,
)
from .costs import (
    CloudOffering,
    FixedElectricity,
    ModeledElectricity,
    OnPremScenario,
    PricingMode,
)
from .scheduler import JobRequest, ScheduleMode
from .workload import Choices, Dist, Fixed, InvalidDistributionError, Uniform, WorkloadParams


class ScenarioError(Exception):
    pass


class ScenarioSyntaxError(ScenarioError):
    pass


class SchemaError(ScenarioError):
    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


class ScenarioValidationError(ScenarioError):
    pass


USAGE_FIXED = "FIXED"
USAGE_SIMULATED = "SIMULATED"


@dataclass(frozen=True)
class CostConfig:
    onprem: OnPremScenario
    offerings: tuple[CloudOffering, ...]
    usage_source: str
    fixed_gpu_hours_per_month: float | None = None


@dataclass(frozen=True)
class Scenario:
    cluster: ValidatedCluster | None
    mode: ScheduleMode
    jobs: tuple[JobRequest, ...] | None
    workload_params: WorkloadParams | None
    cost: CostConfig | None
    out_dir: str
    formats: frozenset[str]


def _mapping(value, loc: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(loc, f"expected an object, got {type(value).__name__}")
    return value


def _array(value, loc: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(loc, f"expected an array, got {type(value).__name__}")
    return value


def _check_keys(mapping: dict, allowed: set[str], loc: str):
    for key in mapping:
        if key not in allowed:
            raise SchemaError(f"{loc}/{key}", "unknown key")


def _require(mapping: dict, key: str, loc: str):
    if key not in mapping:
        raise SchemaError(loc, f"missing required key {key!r}")
    return mapping[key]


def _str(value, loc: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(loc, f"expected a string, got {type(value).__name__}")
    return value


def _int(value, loc: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(loc, f"expected an integer, got {type(value).__name__}")
    return value


def _num(value, loc: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(loc, f"expected a number, got {type(value).__name__}")
    return float(value)


def _limit(mapping: dict, key: str, loc: str, integer: bool):
    """A policy limit: absent or "UNLIMITED" mean no limit."""
    if key not in mapping:
        return None
    value = mapping[key]
    if value == "UNLIMITED":
        return None
    return _int(value, f"{loc}/{key}") if integer else _num(value, f"{loc}/{key}")


def _parse_gpu_types(items, loc: str) -> dict[str, GpuType]:
    types: dict[str, GpuType] = {}
    for index, item in enumerate(_array(items, loc)):
        item_loc = f"{loc}/{index}"
        obj = _mapping(item, item_loc)
        _check_keys(obj, {"name", "vram_gb"}, item_loc)
        name = _str(_require(obj, "name", item_loc), f"{item_loc}/name")
        vram = _int(_require(obj, "vram_gb", item_loc), f"{item_loc}/vram_gb")
        types[name] = GpuType(name=name, vram_gb=vram)
    return types


def _parse_nodes(items, gpu_types: dict[str, GpuType], loc: str) -> list[NodeSpec]:
    nodes = []
    for index, item in enumerate(_array(items, loc)):
        item_loc = f"{loc}/{index}"
        obj = _mapping(item, item_loc)
        _check_keys(obj, {"node_id", "gpus", "cpu_desc", "ram_gb", "storage_gb",
                          "max_power_watts"}, item_loc)
        gpus = []
        for type_name, count in _mapping(obj.get("gpus", {}), f"{item_loc}/gpus").items():
            if type_name not in gpu_types:
                raise SchemaError(f"{item_loc}/gpus/{type_name}",
                                  "GPU type not declared in /cluster/gpu_types")
            gpus.append((gpu_types[type_name], _int(count, f"{item_loc}/gpus/{type_name}")))
        nodes.append(NodeSpec(
            node_id=_str(_require(obj, "node_id", item_loc), f"{item_loc}/node_id"),
            gpus=tuple(gpus),
            cpu_desc=_str(obj.get("cpu_desc", ""), f"{item_loc}/cpu_desc"),
            ram_gb=_int(obj.get("ram_gb", 0), f"{item_loc}/ram_gb"),
            storage_gb=_int(obj.get("storage_gb", 0), f"{item_loc}/storage_gb"),
            max_power_watts=_int(obj.get("max_power_watts", 0), f"{item_loc}/max_power_watts"),
        ))
    return nodes


def _parse_groups(items, loc: str) -> list[GroupPolicy]:
    groups = []
    for index, item in enumerate(_array(items, loc)):
        item_loc = f"{loc}/{index}"
        obj = _mapping(item, item_loc)
        _check_keys(obj, {"group_name", "allowed_nodes", "allowed_gpu_types",
                          "max_running_jobs", "max_gpus_per_job", "max_runtime_hours"}, item_loc)

        def id_set(key):
            if key not in obj or obj[key] == "ALL":
                return None
            return frozenset(_str(v, f"{item_loc}/{key}") for v in _array(obj[key], f"{item_loc}/{key}"))

        groups.append(GroupPolicy(
            group_name=_str(_require(obj, "group_name", item_loc), f"{item_loc}/group_name"),
            allowed_nodes=id_set("allowed_nodes"),
            allowed_gpu_types=id_set("allowed_gpu_types"),
            max_running_jobs=_limit(obj, "max_running_jobs", item_loc, integer=True),
            max_gpus_per_job=_limit(obj, "max_gpus_per_job", item_loc, integer=True),
            max_runtime_hours=_limit(obj, "max_runtime_hours", item_loc, integer=False),
        ))
    return groups


def _parse_dist(value, loc: str, allow_strings: bool = False) -> Dist:
    obj = _mapping(value, loc)
    _check_keys(obj, {"fixed", "uniform", "choices"}, loc)
    if len(obj) != 1:
        raise SchemaError(loc, "a distribution is exactly one of fixed/uniform/choices")
    try:
        if "fixed" in obj:
            if allow_strings and isinstance(obj["fixed"], str):
                return Fixed(obj["fixed"])
            return Fixed(_num(obj["fixed"], f"{loc}/fixed"))
        if "uniform" in obj:
            bounds = _array(obj["uniform"], f"{loc}/uniform")
            if len(bounds) != 2:
                raise SchemaError(f"{loc}/uniform", "expected [lo, hi]")
            return Uniform(_int(bounds[0], f"{loc}/uniform"), _int(bounds[1], f"{loc}/uniform"))
        options = []
        for index, pair in enumerate(_array(obj["choices"], f"{loc}/choices")):
            pair = _array(pair, f"{loc}/choices/{index}")
            if len(pair) != 2:
                raise SchemaError(f"{loc}/choices/{index}", "expected [value, weight]")
            value_item = pair[0]
            if not (allow_strings and isinstance(value_item, str)):
                value_item = _num(value_item, f"{loc}/choices/{index}")
            options.append((value_item, _num(pair[1], f"{loc}/choices/{index}")))
        return Choices(tuple(options))
    except InvalidDistributionError as exc:
        raise ScenarioValidationError(f"{loc}: {exc}") from exc


def _parse_workload_params(obj: dict, loc: str) -> WorkloadParams:
    _check_keys(obj, {"seed", "n_jobs", "horizon_min", "mean_interarrival_min",
                      "interarrival", "duration_min", "gpu_count", "group", "mem_gb"}, loc)
    try:
        return WorkloadParams(
            seed=_int(_require(obj, "seed", loc), f"{loc}/seed"),
            n_jobs=_int(obj["n_jobs"], f"{loc}/n_jobs") if "n_jobs" in obj else None,
            horizon_min=_int(obj["horizon_min"], f"{loc}/horizon_min") if "horizon_min" in obj else None,
            mean_interarrival_min=_num(_require(obj, "mean_interarrival_min", loc),
                                       f"{loc}/mean_interarrival_min"),
            interarrival=_str(obj.get("interarrival", "exponential"), f"{loc}/interarrival"),
            duration_min=_parse_dist(_require(obj, "duration_min", loc), f"{loc}/duration_min"),
            gpu_count=_parse_dist(_require(obj, "gpu_count", loc), f"{loc}/gpu_count"),
            group=_parse_dist(_require(obj, "group", loc), f"{loc}/group", allow_strings=True),
            mem_gb=_parse_dist(obj.get("mem_gb", {"fixed": 0}), f"{loc}/mem_gb"),
        )
    except InvalidDistributionError as exc:
        raise ScenarioValidationError(f"{loc}: {exc}") from exc


def _parse_jobs(items, loc: str) -> list[JobRequest]:
    jobs = []
    for index, item in enumerate(_array(items, loc)):
        item_loc = f"{loc}/{index}"
        obj = _mapping(item, item_loc)
        _check_keys(obj, {"job_id", "user", "group", "gpu_count", "gpu_type", "mem_gb",
                          "duration_min", "submit_time_min"}, item_loc)
        gpu_type = obj.get("gpu_type")
        if gpu_type is not None:
            gpu_type = _str(gpu_type, f"{item_loc}/gpu_type")
        try:
            jobs.append(JobRequest(
                job_id=_int(_require(obj, "job_id", item_loc), f"{item_loc}/job_id"),
                user=_str(obj.get("user", ""), f"{item_loc}/user"),
                group=_str(_require(obj, "group", item_loc), f"{item_loc}/group"),
                gpu_count=_int(obj.get("gpu_count", 0), f"{item_loc}/gpu_count"),
                gpu_type=gpu_type,
                mem_gb=_int(obj.get("mem_gb", 0), f"{item_loc}/mem_gb"),
                duration_min=_int(_require(obj, "duration_min", item_loc), f"{item_loc}/duration_min"),
                submit_time_min=_int(_require(obj, "submit_time_min", item_loc),
                                     f"{item_loc}/submit_time_min"),
            ))
        except ValueError as exc:
            raise ScenarioValidationError(f"{item_loc}: {exc}") from exc
    return jobs


def _parse_electricity(value, loc: str):
    obj = _mapping(value, loc)
    mode = _str(_require(obj, "mode", loc), f"{loc}/mode")
    if mode == "FIXED":
        _check_keys(obj, {"mode", "eur_per_month"}, loc)
        return FixedElectricity(_num(_require(obj, "eur_per_month", loc), f"{loc}/eur_per_month"))
    if mode == "MODELED":
        _check_keys(obj, {"mode", "power_max_kw", "idle_fraction", "tariff_eur_per_kwh",
                          "solar_offset_fraction"}, loc)
        return ModeledElectricity(
            power_max_kw=_num(_require(obj, "power_max_kw", loc), f"{loc}/power_max_kw"),
            idle_fraction=_num(_require(obj, "idle_fraction", loc), f"{loc}/idle_fraction"),
            tariff_eur_per_kwh=_num(_require(obj, "tariff_eur_per_kwh", loc),
                                    f"{loc}/tariff_eur_per_kwh"),
            solar_offset_fraction=_num(obj.get("solar_offset_fraction", 0.0),
                                       f"{loc}/solar_offset_fraction"),
        )
    raise SchemaError(f"{loc}/mode", f"expected FIXED or MODELED, got {mode!r}")


def _parse_cost(value, loc: str) -> CostConfig:
    obj = _mapping(value, loc)
    _check_keys(obj, {"onprem", "cloud", "usage"}, loc)

    onprem_obj = _mapping(_require(obj, "onprem", loc), f"{loc}/onprem")
    onprem_loc = f"{loc}/onprem"
    _check_keys(onprem_obj, {"procurement_eur", "electricity", "manpower_hours_by_month",
                             "manpower_rate_eur_per_hour"}, onprem_loc)
    try:
        onprem = OnPremScenario(
            procurement_eur=_num(_require(onprem_obj, "procurement_eur", onprem_loc),
                                 f"{onprem_loc}/procurement_eur"),
            electricity=_parse_electricity(_require(onprem_obj, "electricity", onprem_loc),
                                           f"{onprem_loc}/electricity"),
            manpower_hours_by_month=tuple(
                _num(h, f"{onprem_loc}/manpower_hours_by_month/{i}")
                for i, h in enumerate(_array(
                    _require(onprem_obj, "manpower_hours_by_month", onprem_loc),
                    f"{onprem_loc}/manpower_hours_by_month"))),
            manpower_rate_eur_per_hour=_num(
                _require(onprem_obj, "manpower_rate_eur_per_hour", onprem_loc),
                f"{onprem_loc}/manpower_rate_eur_per_hour"),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioValidationError(f"{onprem_loc}: {exc}") from exc

    offerings = []
    for index, item in enumerate(_array(obj.get("cloud", []), f"{loc}/cloud")):
        item_loc = f"{loc}/cloud/{index}"
        entry = _mapping(item, item_loc)
        _check_keys(entry, {"name", "pricing", "commitment_months"}, item_loc)
        pricing = _mapping(_require(entry, "pricing", item_loc), f"{item_loc}/pricing")
        mode = _str(_require(pricing, "mode", f"{item_loc}/pricing"), f"{item_loc}/pricing/mode")
        if mode == "FLAT":
            _check_keys(pricing, {"mode", "eur_per_month"}, f"{item_loc}/pricing")
            pricing_mode = PricingMode.FLAT
            rate = _num(_require(pricing, "eur_per_month", f"{item_loc}/pricing"),
                        f"{item_loc}/pricing/eur_per_month")
        elif mode == "PER_GPU_HOUR":
            _check_keys(pricing, {"mode", "eur_per_gpu_hour"}, f"{item_loc}/pricing")
            pricing_mode = PricingMode.PER_GPU_HOUR
            rate = _num(_require(pricing, "eur_per_gpu_hour", f"{item_loc}/pricing"),
                        f"{item_loc}/pricing/eur_per_gpu_hour")
        else:
            raise SchemaError(f"{item_loc}/pricing/mode",
                              f"expected FLAT or PER_GPU_HOUR, got {mode!r}")
        try:
            offerings.append(CloudOffering(
                name=_str(_require(entry, "name", item_loc), f"{item_loc}/name"),
                pricing_mode=pricing_mode,
                rate=rate,
                commitment_months=_int(entry.get("commitment_months", 0),
                                       f"{item_loc}/commitment_months"),
            ))
        except ValueError as exc:
            raise ScenarioValidationError(f"{item_loc}: {exc}") from exc

    usage_obj = _mapping(_require(obj, "usage", loc), f"{loc}/usage")
    usage_loc = f"{loc}/usage"
    _check_keys(usage_obj, {"source", "gpu_hours_per_month"}, usage_loc)
    source = _str(_require(usage_obj, "source", usage_loc), f"{usage_loc}/source")
    fixed_hours = None
    if source == USAGE_FIXED:
        fixed_hours = _num(_require(usage_obj, "gpu_hours_per_month", usage_loc),
                           f"{usage_loc}/gpu_hours_per_month")
        if fixed_hours < 0:
            raise ScenarioValidationError(f"{usage_loc}/gpu_hours_per_month: must be >= 0")
    elif source == USAGE_SIMULATED:
        if "gpu_hours_per_month" in usage_obj:
            raise SchemaError(f"{usage_loc}/gpu_hours_per_month",
                              "not allowed with source SIMULATED")
    else:
        raise SchemaError(f"{usage_loc}/source", f"expected FIXED or SIMULATED, got {source!r}")

    return CostConfig(onprem=onprem, offerings=tuple(offerings), usage_source=source,
                      fixed_gpu_hours_per_month=fixed_hours)


def parse_scenario(data: dict) -> Scenario:
    """Validate raw JSON into a fully checked Scenario."""
    root = _mapping(data, "/")
    _check_keys(root, {"cluster", "groups", "scheduler", "workload", "cost", "output"}, "")

    gpu_types: dict[str, GpuType] = {}
    nodes: list[NodeSpec] = []
    if "cluster" in root:
        cluster_obj = _mapping(root["cluster"], "/cluster")
        _check_keys(cluster_obj, {"gpu_types", "nodes"}, "/cluster")
        gpu_types = _parse_gpu_types(cluster_obj.get("gpu_types", []), "/cluster/gpu_types")
        nodes = _parse_nodes(_require(cluster_obj, "nodes", "/cluster"), gpu_types, "/cluster/nodes")

    groups = _parse_groups(root.get("groups", []), "/groups") if "groups" in root else []

    cluster: ValidatedCluster | None = None
    if "cluster" in root:
        try:
            cluster = validate_cluster(ClusterSpec(nodes=tuple(nodes), groups=tuple(groups)))
        except ClusterValidationError as exc:
            raise ScenarioValidationError(f"/cluster: {exc}") from exc
    elif groups:
        raise ScenarioValidationError("/groups: groups require a cluster section")

    mode = ScheduleMode.STRICT
    if "scheduler" in root:
        sched_obj = _mapping(root["scheduler"], "/scheduler")
        _check_keys(sched_obj, {"mode"}, "/scheduler")
        mode_name = _str(_require(sched_obj, "mode", "/scheduler"), "/scheduler/mode").upper()
        if mode_name not in ("STRICT", "SKIP"):
            raise SchemaError("/scheduler/mode", f"expected STRICT or SKIP, got {mode_name!r}")
        mode = ScheduleMode.STRICT if mode_name == "STRICT" else ScheduleMode.SKIP

    jobs = None
    params = None
    if "workload" in root:
        workload_obj = _mapping(root["workload"], "/workload")
        _check_keys(workload_obj, {"jobs", "params"}, "/workload")
        if ("jobs" in workload_obj) == ("params" in workload_obj):
            raise SchemaError("/workload", "provide exactly one of jobs / params")
        if "jobs" in workload_obj:
            jobs = tuple(_parse_jobs(workload_obj["jobs"], "/workload/jobs"))
        else:
            params = _parse_workload_params(
                _mapping(workload_obj["params"], "/workload/params"), "/workload/params")

    cost = _parse_cost(root["cost"], "/cost") if "cost" in root else None

    out_dir = "out"
    formats = frozenset({"csv", "json"})
    if "output" in root:
        output_obj = _mapping(root["output"], "/output")
        _check_keys(output_obj, {"directory", "formats"}, "/output")
        out_dir = _str(output_obj.get("directory", "out"), "/output/directory")
        if "formats" in output_obj:
            values = [_str(v, "/output/formats") for v in _array(output_obj["formats"], "/output/formats")]
            for value in values:
                if value not in ("csv", "json"):
                    raise SchemaError("/output/formats", f"unknown format {value!r}")
            formats = frozenset(values)

    scenario = Scenario(cluster=cluster, mode=mode, jobs=jobs, workload_params=params,
                        cost=cost, out_dir=out_dir, formats=formats)
    _cross_validate(scenario)
    return scenario


def _cross_validate(scenario: Scenario):
    if scenario.cluster is not None:
        known_groups = set(scenario.cluster.policies)
        known_types = set(scenario.cluster.gpu_types)
        if scenario.jobs:
            for job in scenario.jobs:
                if job.group not in known_groups:
                    raise ScenarioValidationError(
                        f"/workload/jobs: job {job.job_id} references unknown group {job.group!r}")
                if job.gpu_type is not None and job.gpu_type not in known_types:
                    raise ScenarioValidationError(
                        f"/workload/jobs: job {job.job_id} references unknown GPU type "
                        f"{job.gpu_type!r}")
        if scenario.workload_params is not None:
            group_dist = scenario.workload_params.group
            names = ([group_dist.value] if isinstance(group_dist, Fixed)
                     else [v for v, _ in group_dist.options] if isinstance(group_dist, Choices)
                     else [])
            for name in names:
                if name not in known_groups:
                    raise ScenarioValidationError(
                        f"/workload/params/group: unknown group {name!r}")
    if scenario.cost is not None and scenario.cost.usage_source == USAGE_SIMULATED:
        if scenario.jobs is None and scenario.workload_params is None:
            raise ScenarioValidationError(
                "/cost/usage: source SIMULATED requires a workload section")


def load_scenario(path) -> Scenario:
    """Read, parse and validate a scenario file.

    Raises FileNotFoundError, ScenarioSyntaxError (bad JSON, with line and
    column), SchemaError (unknown/invalid keys, with location) or
    ScenarioValidationError (semantic violations).
    """
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_scenario(data)
