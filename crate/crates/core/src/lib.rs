pub mod migmodel;
pub mod netgraph;
pub mod planner;
pub mod scenario;
pub mod baselines;
pub mod metrics;
pub mod sim;
pub mod workload;
