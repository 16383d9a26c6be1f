//! Link metrics for the constrained shortest-path search.
//!
//! The solver only consults a metric for links that can still carry the
//! flow, so implementations need not check capacity themselves.

use std::sync::Arc;

use super::delay::incremental_delay_weight;
use crate::registry::Registry;
use crate::topo::Link;

pub trait LinkMetric: Send + Sync {
    /// Cost of routing `rate` more b/s over `link`, which carries `load`.
    fn weight(&self, link: &Link, load: f64, rate: f64) -> f64;
}

/// Marginal M/M/1 delay, the flow-deviation link length.
#[derive(Debug, Default)]
pub struct IncrementalDelay;

impl LinkMetric for IncrementalDelay {
    fn weight(&self, link: &Link, load: f64, rate: f64) -> f64 {
        incremental_delay_weight(link, load, rate).unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Default)]
pub struct HopCount;

impl LinkMetric for HopCount {
    fn weight(&self, _: &Link, _: f64, _: f64) -> f64 {
        1.0
    }
}

#[derive(Debug, Default)]
pub struct IgpCost;

impl LinkMetric for IgpCost {
    fn weight(&self, link: &Link, _: f64, _: f64) -> f64 {
        link.cost as f64
    }
}

pub const DEFAULT_METRIC: &str = "incremental-delay";

pub fn metrics() -> Registry<dyn LinkMetric> {
    Registry::<dyn LinkMetric>::new("link metric")
        .register("incremental-delay", Arc::new(IncrementalDelay))
        .register("hop-count", Arc::new(HopCount))
        .register("igp-cost", Arc::new(IgpCost))
}
