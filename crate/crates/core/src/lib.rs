//! Exhaustive enumeration and shortlisting of DC protection configurations
//! for offshore energy hubs.
//!
//! A configuration places DC circuit breakers between hub busbars and assigns
//! every hub cable and converter to a busbar. Each configuration is scored by
//! the loss of infeed its worst fault causes, per scenario and per AC zone,
//! and the design space is narrowed by successive argmin filters.
//!
//! ```
//! use gridshort::{build_test_case, count_closed_form, TestCase};
//!
//! let (spec, _) = build_test_case(TestCase::Small);
//! assert_eq!(count_closed_form(&spec, 3).unwrap(), 8921);
//! ```

pub mod arrangement;
pub mod cases;
pub mod enumerate;
pub mod error;
pub mod flow;
pub mod metrics;
pub mod model;
pub mod network;
pub mod power;
pub mod shortlist;
pub mod zoning;

pub use arrangement::{breaker_arrangements, breaker_arrangements_with_limit, BreakerArrangement, DEFAULT_MAX_BREAKERS};
pub use cases::{build_test_case, TestCase};
pub use enumerate::{
    count_closed_form, enumerate_configurations, enumerate_with_limits, ConfigStream, Configuration,
    EnumerationLimits, HubElements, PruneRules,
};
pub use error::{Error, Result};
pub use flow::{loss_of_infeed, solve_flow, FlowResult, LossConvention, LossOfInfeed};
pub use metrics::{
    backup_failure_loi, length_weighted_expected_loi, worst_case_loi, Evaluator, FaultScope, ImpactReport, ScenarioImpact,
    WorstCase,
};
pub use model::{
    ensure_valid, validate, Edge, EdgeId, EdgeKind, Locality, NetworkSpec, Node, NodeId, NodeKind, PowerFlowScenario,
    Violation,
};
pub use network::realize;
pub use power::Power;
pub use shortlist::{
    design_principle_rates, fully_selective_baseline, heat_map, mean_rate, minimax_worst, run_pipeline, Baseline, Branch, BranchMode,
    FilterStep, HeatMap, MetricKind, PipelineOptions, PipelineResult, Principle, PrincipleRates, ShortlistResult,
};
pub use zoning::{faulted_state, post_fault_state, protection_zones, FaultCase, FaultSite, ZonePartition};
