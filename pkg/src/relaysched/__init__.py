"""Uplink scheduling over two-hop decode-and-forward relays.

Monte Carlo simulation and closed-form analysis of outage, diversity order,
fairness, and access delay for round-robin, opportunistic, and grouped
(k-user) schedulers, plus a distributed backoff-contention protocol that
realizes the grouped scheduler without a central coordinator.

Hot per-slot kernels run through a compiled extension when it is available
and fall back to pure numpy otherwise; both produce bit-identical results
(see relaysched.kernels.BACKEND).
"""

from .analytics import (
    OutageCurve,
    estimate_diversity_order,
    measure_gap_db,
    outage_exact,
    outage_high_snr,
    outage_lower_bound,
    outage_relaxed_tdma,
    outage_tdma,
    outage_tdma_high_snr,
    outage_two_user_highsnr,
    power_gap_db,
)
from .configfile import (
    ConfigError,
    load_plan,
    manifest_from_csv,
    parse_config_text,
    plan_from_text,
    serialize_plan,
)
from .fairness import (
    AirtimeLedger,
    DelaySamples,
    DelayStatistics,
    UserDelayStats,
    delay_statistics,
    doppler_unit_slots,
    fi_lower_bound,
    jain_index,
    windowed_fi_series,
)
from .kernels import BACKEND, available_backends, get_backend
from .model import (
    ChannelRealization,
    FadingProcess,
    NetworkConfig,
    bessel_j0,
    doppler_to_rho,
)
from .protocol import (
    OverheadReport,
    ProtocolParams,
    ProtocolRun,
    ProtocolTrace,
    RelayNodeState,
    backoff_map,
    default_protocol_params,
    make_relay_states,
    overhead_report,
    relay_local_select,
    run_contention,
    simulate_protocol,
)
from .scheduling import (
    GROUPING_STRATEGIES,
    GroupingPattern,
    SlotOutcome,
    make_grouping,
    schedule_fixed_tdma,
    schedule_greedy,
    schedule_relaxed_tdma,
)
from .selection import (
    SelectionResult,
    decoding_set,
    is_outage,
    select_relay_decoding_set,
    select_relay_min_max,
)
from .simulator import (
    ExperimentPlan,
    FairnessCurve,
    MetricsAccumulator,
    PointRow,
    PolicyEntry,
    analytic_outage,
    run_fairness_experiment,
    run_point,
    run_sweep,
    summarize_point,
    wilson_interval,
)

__version__ = "0.1.0"

__all__ = [
    "AirtimeLedger",
    "BACKEND",
    "ChannelRealization",
    "ConfigError",
    "DelaySamples",
    "DelayStatistics",
    "ExperimentPlan",
    "FadingProcess",
    "FairnessCurve",
    "GROUPING_STRATEGIES",
    "GroupingPattern",
    "MetricsAccumulator",
    "NetworkConfig",
    "OutageCurve",
    "OverheadReport",
    "PointRow",
    "PolicyEntry",
    "ProtocolParams",
    "ProtocolRun",
    "ProtocolTrace",
    "RelayNodeState",
    "SelectionResult",
    "SlotOutcome",
    "UserDelayStats",
    "analytic_outage",
    "available_backends",
    "get_backend",
    "backoff_map",
    "bessel_j0",
    "decoding_set",
    "default_protocol_params",
    "delay_statistics",
    "doppler_to_rho",
    "doppler_unit_slots",
    "estimate_diversity_order",
    "fi_lower_bound",
    "is_outage",
    "jain_index",
    "load_plan",
    "make_grouping",
    "make_relay_states",
    "manifest_from_csv",
    "measure_gap_db",
    "outage_exact",
    "outage_high_snr",
    "outage_lower_bound",
    "outage_relaxed_tdma",
    "outage_tdma",
    "outage_tdma_high_snr",
    "outage_two_user_highsnr",
    "overhead_report",
    "parse_config_text",
    "plan_from_text",
    "power_gap_db",
    "relay_local_select",
    "run_contention",
    "serialize_plan",
    "run_fairness_experiment",
    "run_point",
    "run_sweep",
    "schedule_fixed_tdma",
    "schedule_greedy",
    "schedule_relaxed_tdma",
    "select_relay_decoding_set",
    "select_relay_min_max",
    "simulate_protocol",
    "summarize_point",
    "wilson_interval",
    "windowed_fi_series",
]
