"""GPU cluster capacity planning: scheduling simulation and TCO comparison."""

from .cluster import (
    ClusterSpec,
    ClusterValidationError,
    GpuType,
    GroupPolicy,
    NodeSpec,
    ValidatedCluster,
    gpu_inventory,
    validate_cluster,
)
from .costs import (
    CloudOffering,
    CostSeries,
    FixedElectricity,
    ModeledElectricity,
    OnPremScenario,
    PricingMode,
    UsageProfile,
    break_even,
    cloud_monthly,
    cumulative_series,
    electricity_cost,
    onprem_monthly,
    usage_sweep,
)
from .scenario import Scenario, load_scenario
from .scheduler import (
    DenyReason,
    JobRequest,
    PolicyDecision,
    QueueState,
    ScheduleMode,
    authorize,
    place,
    release,
    schedule_step,
    submit,
)
from .simulation import (
    SimulationTrace,
    TraceEvent,
    UtilizationReport,
    run,
    utilization,
    write_trace_csv,
)
from .workload import Choices, Fixed, Uniform, WorkloadParams, generate_workload

__all__ = [
    "ClusterSpec", "ClusterValidationError", "GpuType", "GroupPolicy", "NodeSpec",
    "ValidatedCluster", "gpu_inventory", "validate_cluster",
    "CloudOffering", "CostSeries", "FixedElectricity", "ModeledElectricity",
    "OnPremScenario", "PricingMode", "UsageProfile", "break_even", "cloud_monthly",
    "cumulative_series", "electricity_cost", "onprem_monthly", "usage_sweep",
    "Scenario", "load_scenario",
    "DenyReason", "JobRequest", "PolicyDecision", "QueueState", "ScheduleMode",
    "authorize", "place", "release", "schedule_step", "submit",
    "SimulationTrace", "TraceEvent", "UtilizationReport", "run", "utilization",
    "write_trace_csv",
    "Choices", "Fixed", "Uniform", "WorkloadParams", "generate_workload",
]

__version__ = "0.1.0"
