"""On-premises vs. cloud total-cost-of-ownership arithmetic.

All operations are pure functions of their inputs. Costs are carried as
unrounded EUR floats; rounding happens only when reports are written.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

HOURS_PER_MONTH = 730.0


class UnknownOfferingError(KeyError):
    pass


@dataclass(frozen=True)
class FixedElectricity:
    """Constant electricity bill, independent of usage."""

    eur_per_month: float


@dataclass(frozen=True)
class ModeledElectricity:
    """Idle-floor-plus-usage electricity model.

    A fixed idle fraction of the maximum draw is always consumed; the rest
    scales with the busy fraction. A solar offset reduces the billed share.
    """

    power_max_kw: float
    idle_fraction: float
    tariff_eur_per_kwh: float
    solar_offset_fraction: float = 0.0


@dataclass(frozen=True)
class OnPremScenario:
    procurement_eur: float
    electricity: FixedElectricity | ModeledElectricity
    manpower_hours_by_month: tuple[float, ...]  # last entry repeats forever
    manpower_rate_eur_per_hour: float

    def __post_init__(self):
        object.__setattr__(self, "manpower_hours_by_month",
                           tuple(float(h) for h in self.manpower_hours_by_month))
        if self.procurement_eur < 0 or self.manpower_rate_eur_per_hour < 0:
            raise ValueError("monetary values must be >= 0")
        if not self.manpower_hours_by_month:
            raise ValueError("manpower_hours_by_month must not be empty")
        if isinstance(self.electricity, ModeledElectricity):
            elec = self.electricity
            if not (0.0 <= elec.idle_fraction <= 1.0):
                raise ValueError("idle_fraction must be in [0, 1]")
            if not (0.0 <= elec.solar_offset_fraction <= 1.0):
                raise ValueError("solar_offset_fraction must be in [0, 1]")


class PricingMode(enum.Enum):
    FLAT = "FLAT"
    PER_GPU_HOUR = "PER_GPU_HOUR"


@dataclass(frozen=True)
class CloudOffering:
    name: str
    pricing_mode: PricingMode
    rate: float  # EUR per month (FLAT) or EUR per GPU-hour (PER_GPU_HOUR)
    commitment_months: int = 0  # informational; not part of the cost arithmetic

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"offering {self.name!r}: rate must be >= 0")


@dataclass(frozen=True)
class UsageProfile:
    """Monthly usage, given either as GPU-hours or a utilization fraction.

    Converting between the two needs ``total_gpus`` (730 h/month implied).
    """

    gpu_hours_per_month: float | None = None
    utilization_fraction: float | None = None
    total_gpus: int | None = None

    def __post_init__(self):
        if (self.gpu_hours_per_month is None) == (self.utilization_fraction is None):
            raise ValueError("set exactly one of gpu_hours_per_month / utilization_fraction")
        if self.gpu_hours_per_month is not None and self.gpu_hours_per_month < 0:
            raise ValueError("gpu_hours_per_month must be >= 0")
        if self.utilization_fraction is not None and not (0.0 <= self.utilization_fraction <= 1.0):
            raise ValueError("utilization_fraction must be in [0, 1]")

    def _capacity(self) -> float:
        if self.total_gpus is None:
            raise ValueError("total_gpus is required to convert between hours and fraction")
        return self.total_gpus * HOURS_PER_MONTH

    @property
    def hours_per_month(self) -> float:
        if self.gpu_hours_per_month is not None:
            return self.gpu_hours_per_month
        return self.utilization_fraction * self._capacity()

    @property
    def busy_fraction(self) -> float:
        if self.utilization_fraction is not None:
            return self.utilization_fraction
        if self.gpu_hours_per_month == 0:
            return 0.0
        return min(1.0, self.gpu_hours_per_month / self._capacity())


@dataclass(frozen=True)
class CostComponents:
    procurement: float
    electricity: float
    manpower: float

    @property
    def total(self) -> float:
        return self.procurement + self.electricity + self.manpower


@dataclass(frozen=True)
class CostColumn:
    monthly: tuple[float, ...]
    cumulative: tuple[float, ...]


@dataclass(frozen=True)
class CostSeries:
    months: tuple[int, ...]
    onprem: CostColumn
    clouds: dict[str, CostColumn]


def electricity_cost(power_max_kw: float, idle_fraction: float, busy_fraction: float,
                     tariff_eur_per_kwh: float, hours_in_month: float = HOURS_PER_MONTH,
                     solar_offset_fraction: float = 0.0) -> float:
    """EUR for one month of power at the given busy fraction.

    tariff * power * hours * (idle + (1 - idle) * busy) * (1 - solar_offset)
    """
    load = idle_fraction + (1.0 - idle_fraction) * busy_fraction
    return tariff_eur_per_kwh * power_max_kw * hours_in_month * load * (1.0 - solar_offset_fraction)


def onprem_monthly(scenario: OnPremScenario, month: int, usage: UsageProfile) -> CostComponents:
    """Cost components for one month; procurement is charged at month 1 only."""
    if month < 1:
        raise ValueError("months are 1-based")
    procurement = scenario.procurement_eur if month == 1 else 0.0
    hours = scenario.manpower_hours_by_month[min(month, len(scenario.manpower_hours_by_month)) - 1]
    manpower = hours * scenario.manpower_rate_eur_per_hour
    if isinstance(scenario.electricity, FixedElectricity):
        electricity = scenario.electricity.eur_per_month
    else:
        elec = scenario.electricity
        electricity = electricity_cost(
            elec.power_max_kw, elec.idle_fraction, usage.busy_fraction,
            elec.tariff_eur_per_kwh, solar_offset_fraction=elec.solar_offset_fraction)
    return CostComponents(procurement=procurement, electricity=electricity, manpower=manpower)


def cloud_monthly(offering: CloudOffering, usage: UsageProfile) -> float:
    """EUR for one month of the cloud offering at the given usage."""
    if offering.pricing_mode is PricingMode.FLAT:
        return offering.rate
    return offering.rate * usage.hours_per_month


def cumulative_series(scenario: OnPremScenario, offerings: list[CloudOffering],
                      usage: UsageProfile, n_months: int) -> CostSeries:
    """Monthly and running-sum cost columns for months 1..n_months."""
    if n_months < 1:
        raise ValueError("n_months must be >= 1")
    months = tuple(range(1, n_months + 1))

    onprem_monthly_values = [onprem_monthly(scenario, m, usage).total for m in months]
    columns: dict[str, CostColumn] = {}
    for offering in offerings:
        monthly = [cloud_monthly(offering, usage)] * n_months
        columns[offering.name] = CostColumn(tuple(monthly), _running_sum(monthly))
    return CostSeries(
        months=months,
        onprem=CostColumn(tuple(onprem_monthly_values), _running_sum(onprem_monthly_values)),
        clouds=columns,
    )


def _running_sum(values: list[float]) -> tuple[float, ...]:
    out = []
    acc = 0.0
    for value in values:
        acc += value
        out.append(acc)
    return tuple(out)


def break_even(series: CostSeries, cloud_name: str) -> int | None:
    """First month where cumulative on-premises cost is no greater than the
    named cloud's; None when that never happens within the series."""
    if cloud_name not in series.clouds:
        raise UnknownOfferingError(cloud_name)
    cloud = series.clouds[cloud_name].cumulative
    for index, month in enumerate(series.months):
        if series.onprem.cumulative[index] <= cloud[index]:
            return month
    return None


@dataclass(frozen=True)
class SweepBand:
    """Per-month envelope of cumulative costs over the swept band."""

    months: tuple[int, ...]
    onprem_low: tuple[float, ...]
    onprem_high: tuple[float, ...]
    cloud_low: tuple[float, ...]
    cloud_high: tuple[float, ...]


@dataclass(frozen=True)
class SweepResult:
    fractions: tuple[float, ...]
    series: dict[float, CostSeries]  # keyed by usage fraction
    band: SweepBand


BAND_LOW = 0.10
BAND_HIGH = 0.70


def usage_sweep(scenario: OnPremScenario, offering: CloudOffering,
                usage_fractions: list[float], n_months: int,
                total_gpus: int) -> SweepResult:
    """Cumulative cost series per usage fraction, plus the band envelope.

    The cloud column is linear in the fraction for PER_GPU_HOUR pricing;
    the on-premises column varies only through usage-linked terms
    (modeled electricity). The envelope spans fractions inside
    [0.10, 0.70].
    """
    if not usage_fractions:
        raise ValueError("usage_fractions must not be empty")
    if any(not (0.0 <= u <= 1.0) for u in usage_fractions):
        raise ValueError("usage fractions must lie in [0, 1]")
    fractions = tuple(usage_fractions)
    series: dict[float, CostSeries] = {}
    for fraction in fractions:
        usage = UsageProfile(utilization_fraction=fraction, total_gpus=total_gpus)
        series[fraction] = cumulative_series(scenario, [offering], usage, n_months)

    in_band = [u for u in fractions if BAND_LOW <= u <= BAND_HIGH] or list(fractions)
    months = tuple(range(1, n_months + 1))
    onprem_low, onprem_high, cloud_low, cloud_high = [], [], [], []
    for index in range(n_months):
        onprem_values = [series[u].onprem.cumulative[index] for u in in_band]
        cloud_values = [series[u].clouds[offering.name].cumulative[index] for u in in_band]
        onprem_low.append(min(onprem_values))
        onprem_high.append(max(onprem_values))
        cloud_low.append(min(cloud_values))
        cloud_high.append(max(cloud_values))
    band = SweepBand(months, tuple(onprem_low), tuple(onprem_high),
                     tuple(cloud_low), tuple(cloud_high))
    return SweepResult(fractions=fractions, series=series, band=band)
