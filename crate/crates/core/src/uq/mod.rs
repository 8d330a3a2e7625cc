//! Credible regions and coverage metrics.

pub mod metrics;
pub mod region;
pub mod target;

pub use metrics::{replication_metrics, ReplicationMetrics, ReplicationRecord};
pub use region::{
    contains, hpd_ellipsoid, hpd_ellipsoid_from_draws, hpd_interval, hpd_interval_from_draws,
    CredibleRegion, RegionKind,
};
pub use target::{RegionBuilder, Target};
