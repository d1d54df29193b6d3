//! Scenario files: parsing, validation, defaults, and run orchestration.
//!
//! File units follow operator conventions — bandwidth in Mbps, memory in GB,
//! time in seconds — and are converted to bits and bits/s internally.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::metrics::{build_report, MetricsReport};
use crate::migmodel::MigrationSpec;
use crate::netgraph::{
    build_fat_tree, build_wan, Deployment, Flavor, HostResources, InstanceId, PhysicalTopology,
    SharingPolicy, VirtualTopology, VtopoKind, WanLink, WanSpec,
};
use crate::planner::{
    self, CostWeights, DeadlineSpec, MigrationTask, PlanContext, TaskId,
};
use crate::sim::{PowerModel, Schedule, ScheduleMode, SimConfig, Simulation, TraceEvent};
use crate::workload::StreamSpec;

const MBPS: f64 = 1e6;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_yaml::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{field}: unknown flavor `{name}`")]
    UnknownFlavor { field: String, name: String },
    #[error("{field}: unknown host `{name}`")]
    UnknownHost { field: String, name: String },
    #[error("{field}: unknown instance `{name}`")]
    UnknownInstance { field: String, name: String },
    #[error("topology: {0}")]
    Topology(#[from] crate::netgraph::TopologyError),
    #[error("placement: {0}")]
    Placement(#[from] crate::netgraph::PlacementError),
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.to_string(), message: message.into() }
}

// ---- file schema ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Simulation horizon, seconds.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default = "default_paths")]
    pub paths_per_migration: usize,
    #[serde(default)]
    pub parallel_cap: Option<usize>,
    pub topology: TopologyDoc,
    #[serde(default)]
    pub host: Option<HostDoc>,
    pub flavors: Vec<FlavorDoc>,
    #[serde(default)]
    pub vtopos: Vec<VtopoDoc>,
    #[serde(default)]
    pub migrations: Vec<MigrationDoc>,
    #[serde(default)]
    pub streams: Vec<StreamDoc>,
    #[serde(default)]
    pub defaults: Option<ModelDefaultsDoc>,
    #[serde(default)]
    pub weights: Option<WeightsDoc>,
    #[serde(default)]
    pub power: Option<PowerDoc>,
    /// Ordered groups of instance names executed as given, bypassing the
    /// planner. Used for fixed-order experiments.
    #[serde(default)]
    pub imposed_plan: Option<Vec<Vec<String>>>,
}

fn default_horizon() -> f64 {
    10_000.0
}
fn default_policy() -> String {
    "ratio".into()
}
fn default_paths() -> usize {
    1
}

/// Exactly one of `fattree` or `wan` must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fattree: Option<FattreeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wan: Option<WanDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FattreeDoc {
    pub pods: usize,
    pub host_bw_mbps: f64,
    pub link_bw_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WanDoc {
    pub routers: Vec<String>,
    pub links: Vec<WanLinkDoc>,
    pub clusters: Vec<ClusterDoc>,
    #[serde(default)]
    pub gateway_bw_mbps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WanLinkDoc {
    pub a: String,
    pub b: String,
    #[serde(default)]
    pub capacity_mbps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterDoc {
    pub router: String,
    pub hosts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostDoc {
    #[serde(default = "d_cores")]
    pub cores: u32,
    #[serde(default = "d_mips")]
    pub mips: f64,
    #[serde(default = "d_ram")]
    pub ram_gb: f64,
    #[serde(default = "d_storage")]
    pub storage_gb: f64,
}

fn d_cores() -> u32 {
    24
}
fn d_mips() -> f64 {
    10_000.0
}
fn d_ram() -> f64 {
    10_240.0
}
fn d_storage() -> f64 {
    10_000_000.0
}

impl Default for HostDoc {
    fn default() -> Self {
        HostDoc { cores: d_cores(), mips: d_mips(), ram_gb: d_ram(), storage_gb: d_storage() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlavorDoc {
    pub name: String,
    pub mem_gb: f64,
    pub cores: u32,
    pub disk_gb: f64,
    #[serde(default)]
    pub mipo: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VtopoDoc {
    pub name: String,
    #[serde(default = "default_kind")]
    pub kind: VtopoKind,
    #[serde(default)]
    pub deadline: Option<f64>,
    pub instances: Vec<InstanceDoc>,
    #[serde(default)]
    pub links: Vec<VlinkDoc>,
}

fn default_kind() -> VtopoKind {
    VtopoKind::Single
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub name: String,
    pub flavor: String,
    pub host: String,
    #[serde(default)]
    pub dirty_rate_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VlinkDoc {
    pub from: String,
    pub to: String,
    pub bandwidth_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MigrationDoc {
    pub instance: String,
    pub dest: String,
    #[serde(default)]
    pub arrival: f64,
    /// Absolute completion deadline, seconds.
    #[serde(default)]
    pub deadline: Option<f64>,
    /// SLO-derived deadline window.
    #[serde(default)]
    pub slo: Option<SloDoc>,
    /// Derive the deadline from the virtual topology's group deadline.
    #[serde(default)]
    pub group_deadline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SloDoc {
    pub threshold: f64,
    #[serde(default)]
    pub accumulated: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamDoc {
    /// Ordered instance chain the packets traverse; consecutive pairs must be
    /// connected by declared virtual links.
    pub path: Vec<String>,
    pub rate: f64,
    pub packet_mbits: f64,
    #[serde(default)]
    pub start: f64,
    #[serde(default)]
    pub stop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDefaultsDoc {
    #[serde(default = "d_compression")]
    pub compression: f64,
    #[serde(default = "d_pre")]
    pub pre_time: f64,
    #[serde(default = "d_post")]
    pub post_time: f64,
    #[serde(default = "d_resume")]
    pub resume_time: f64,
    #[serde(default = "d_rounds")]
    pub max_rounds: u32,
    #[serde(default = "d_thd")]
    pub downtime_threshold: f64,
}

fn d_compression() -> f64 {
    1.0
}
fn d_pre() -> f64 {
    0.8
}
fn d_post() -> f64 {
    1.2
}
fn d_resume() -> f64 {
    0.3
}
fn d_rounds() -> u32 {
    30
}
fn d_thd() -> f64 {
    0.5
}

impl Default for ModelDefaultsDoc {
    fn default() -> Self {
        ModelDefaultsDoc {
            compression: d_compression(),
            pre_time: d_pre(),
            post_time: d_post(),
            resume_time: d_resume(),
            max_rounds: d_rounds(),
            downtime_threshold: d_thd(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsDoc {
    #[serde(default = "w_alpha")]
    pub alpha: f64,
    #[serde(default = "w_beta")]
    pub beta: f64,
    #[serde(default = "w_gamma")]
    pub gamma: f64,
    #[serde(default = "w_half")]
    pub impact_direct: f64,
    #[serde(default = "w_half")]
    pub impact_potential: f64,
    #[serde(default = "w_sign")]
    pub slack_sign: f64,
}

fn w_alpha() -> f64 {
    0.5
}
fn w_beta() -> f64 {
    0.3
}
fn w_gamma() -> f64 {
    0.2
}
fn w_half() -> f64 {
    0.5
}
fn w_sign() -> f64 {
    -1.0
}

impl Default for WeightsDoc {
    fn default() -> Self {
        WeightsDoc {
            alpha: w_alpha(),
            beta: w_beta(),
            gamma: w_gamma(),
            impact_direct: w_half(),
            impact_potential: w_half(),
            slack_sign: w_sign(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerDoc {
    #[serde(default = "p_idle")]
    pub host_idle: f64,
    #[serde(default = "p_peak")]
    pub host_peak: f64,
    #[serde(default = "p_static")]
    pub switch_static: f64,
    #[serde(default = "p_port")]
    pub switch_port: f64,
}

fn p_idle() -> f64 {
    100.0
}
fn p_peak() -> f64 {
    250.0
}
fn p_static() -> f64 {
    66.0
}
fn p_port() -> f64 {
    1.0
}

impl Default for PowerDoc {
    fn default() -> Self {
        PowerDoc { host_idle: p_idle(), host_peak: p_peak(), switch_static: p_static(), switch_port: p_port() }
    }
}

// ---- compiled scenario ----------------------------------------------------

/// Fully validated scenario with all cross-references resolved and all units
/// converted to bits and seconds.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    pub topo: PhysicalTopology,
    pub deployment: Deployment,
    pub tasks: Vec<MigrationTask>,
    pub streams: Vec<StreamSpec>,
    pub policy: SharingPolicy,
    pub weights: CostWeights,
    pub power: PowerModel,
    /// Imposed plan as ordered groups of task indices.
    pub imposed: Option<Vec<Vec<usize>>>,
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario_str(&text)
}

/// Parses and validates from in-memory text (YAML or JSON).
pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_yaml::from_str(text)?;
    compile(doc)
}

/// The document with every default made explicit; serializing this and
/// parsing it again yields the same scenario.
pub fn echo(doc: &ScenarioDoc) -> ScenarioDoc {
    let mut d = doc.clone();
    d.host = Some(d.host.unwrap_or_default());
    d.defaults = Some(d.defaults.clone().unwrap_or_default());
    d.weights = Some(d.weights.clone().unwrap_or_default());
    d.power = Some(d.power.clone().unwrap_or_default());
    for s in &mut d.streams {
        s.stop = Some(s.stop.unwrap_or(d.horizon));
    }
    d
}

pub fn compile(doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
    let doc = echo(&doc);
    let host_doc = doc.host.clone().unwrap_or_default();
    let host = HostResources {
        cores: host_doc.cores,
        mips: host_doc.mips,
        ram_gb: host_doc.ram_gb,
        storage_gb: host_doc.storage_gb,
    };
    if doc.horizon <= 0.0 {
        return Err(invalid("horizon", "must be positive"));
    }
    let policy: SharingPolicy = doc
        .policy
        .parse()
        .map_err(|e: String| invalid("policy", e))?;

    let topo = match (&doc.topology.fattree, &doc.topology.wan) {
        (Some(ft), None) => {
            if ft.host_bw_mbps <= 0.0 || ft.link_bw_mbps <= 0.0 {
                return Err(invalid("topology.fattree", "bandwidth must be positive"));
            }
            build_fat_tree(ft.pods, ft.host_bw_mbps * MBPS, ft.link_bw_mbps * MBPS, host)?
        }
        (None, Some(WanDoc { routers, links, clusters, gateway_bw_mbps })) => {
            for (i, l) in links.iter().enumerate() {
                if let Some(c) = l.capacity_mbps {
                    if c <= 0.0 {
                        return Err(invalid(
                            &format!("topology.wan.links[{i}].capacity_mbps"),
                            "must be positive",
                        ));
                    }
                }
            }
            let spec = WanSpec {
                routers: routers.clone(),
                links: links
                    .iter()
                    .map(|l| WanLink { a: l.a.clone(), b: l.b.clone(), capacity: l.capacity_mbps.map(|c| c * MBPS) })
                    .collect(),
                clusters: clusters.iter().map(|c| (c.router.clone(), c.hosts)).collect(),
            };
            build_wan(&spec, gateway_bw_mbps.map(|g| g * MBPS).unwrap_or(0.0), host)?
        }
        _ => return Err(invalid("topology", "exactly one of `fattree` or `wan` must be given")),
    };

    let mut flavors: BTreeMap<String, Flavor> = BTreeMap::new();
    for (i, f) in doc.flavors.iter().enumerate() {
        if f.mem_gb <= 0.0 {
            return Err(invalid(&format!("flavors[{i}].mem_gb"), "must be positive"));
        }
        if flavors
            .insert(
                f.name.clone(),
                Flavor { name: f.name.clone(), mem_gb: f.mem_gb, cores: f.cores, disk_gb: f.disk_gb, mipo: f.mipo },
            )
            .is_some()
        {
            return Err(invalid(&format!("flavors[{i}].name"), format!("duplicate flavor `{}`", f.name)));
        }
    }

    let mut dep = Deployment::new(&topo);
    let mut inst_by_name: BTreeMap<String, InstanceId> = BTreeMap::new();
    let mut vlink_by_pair: BTreeMap<(InstanceId, InstanceId), crate::netgraph::VlinkId> = BTreeMap::new();
    for (vi, vt) in doc.vtopos.iter().enumerate() {
        let vtopo_idx = dep.vtopos.len();
        let mut inst_ids = Vec::new();
        for (ii, inst) in vt.instances.iter().enumerate() {
            let field = format!("vtopos[{vi}].instances[{ii}]");
            let flavor = flavors
                .get(&inst.flavor)
                .ok_or_else(|| ScenarioError::UnknownFlavor { field: format!("{field}.flavor"), name: inst.flavor.clone() })?
                .clone();
            let h = topo
                .lookup(&inst.host)
                .filter(|h| topo.node(*h).is_host())
                .ok_or_else(|| ScenarioError::UnknownHost { field: format!("{field}.host"), name: inst.host.clone() })?;
            if inst_by_name.contains_key(&inst.name) {
                return Err(invalid(&format!("{field}.name"), format!("duplicate instance `{}`", inst.name)));
            }
            let id = dep.add_instance(inst.name.clone(), flavor, h, inst.dirty_rate_mbps * MBPS, vtopo_idx);
            inst_by_name.insert(inst.name.clone(), id);
            inst_ids.push(id);
        }
        let mut link_ids = Vec::new();
        for (li, l) in vt.links.iter().enumerate() {
            let field = format!("vtopos[{vi}].links[{li}]");
            let from = *inst_by_name.get(&l.from).ok_or_else(|| ScenarioError::UnknownInstance {
                field: format!("{field}.from"),
                name: l.from.clone(),
            })?;
            let to = *inst_by_name.get(&l.to).ok_or_else(|| ScenarioError::UnknownInstance {
                field: format!("{field}.to"),
                name: l.to.clone(),
            })?;
            if l.bandwidth_mbps <= 0.0 {
                return Err(invalid(&format!("{field}.bandwidth_mbps"), "must be positive"));
            }
            let id = dep.add_vlink(&topo, from, to, l.bandwidth_mbps * MBPS)?;
            vlink_by_pair.insert((from, to), id);
            link_ids.push(id);
        }
        dep.vtopos.push(VirtualTopology {
            name: vt.name.clone(),
            kind: vt.kind,
            deadline: vt.deadline,
            instances: inst_ids,
            links: link_ids,
        });
    }

    let defaults = doc.defaults.clone().unwrap_or_default();
    let mut tasks = Vec::new();
    for (mi, m) in doc.migrations.iter().enumerate() {
        let field = format!("migrations[{mi}]");
        let inst = *inst_by_name.get(&m.instance).ok_or_else(|| ScenarioError::UnknownInstance {
            field: format!("{field}.instance"),
            name: m.instance.clone(),
        })?;
        let dest = topo
            .lookup(&m.dest)
            .filter(|h| topo.node(*h).is_host())
            .ok_or_else(|| ScenarioError::UnknownHost { field: format!("{field}.dest"), name: m.dest.clone() })?;
        let vinst = dep.instance(inst);
        let deadline_spec = match (&m.deadline, &m.slo, m.group_deadline) {
            (Some(d), None, false) => DeadlineSpec::Explicit(*d),
            (None, Some(s), false) => {
                if s.rate <= 0.0 {
                    return Err(invalid(&format!("{field}.slo.rate"), "must be positive"));
                }
                DeadlineSpec::Slo { threshold: s.threshold, accumulated: s.accumulated, rate: s.rate }
            }
            (None, None, true) => DeadlineSpec::Group,
            (None, None, false) => DeadlineSpec::None,
            _ => {
                return Err(invalid(&field, "at most one of deadline, slo, group_deadline may be set"));
            }
        };
        let spec = MigrationSpec {
            memory: vinst.flavor.memory_bits(),
            dirty_rate: vinst.dirty_rate,
            compression: defaults.compression,
            downtime_threshold: defaults.downtime_threshold,
            max_rounds: defaults.max_rounds,
            pre_time: defaults.pre_time,
            post_time: defaults.post_time,
            resume_time: defaults.resume_time,
        };
        spec.validate().map_err(|e| invalid(&field, e.to_string()))?;
        let mut task = MigrationTask::new(TaskId(mi), inst, vinst.host, dest, spec, deadline_spec);
        task.arrival = m.arrival;
        tasks.push(task);
    }

    let mut streams = Vec::new();
    for (si, s) in doc.streams.iter().enumerate() {
        let field = format!("streams[{si}]");
        if s.path.len() < 2 {
            return Err(invalid(&format!("{field}.path"), "needs at least two instances"));
        }
        if s.rate <= 0.0 || s.packet_mbits <= 0.0 {
            return Err(invalid(&field, "rate and packet_mbits must be positive"));
        }
        let mut vlinks = Vec::new();
        for pair in s.path.windows(2) {
            let a = *inst_by_name.get(&pair[0]).ok_or_else(|| ScenarioError::UnknownInstance {
                field: format!("{field}.path"),
                name: pair[0].clone(),
            })?;
            let b = *inst_by_name.get(&pair[1]).ok_or_else(|| ScenarioError::UnknownInstance {
                field: format!("{field}.path"),
                name: pair[1].clone(),
            })?;
            let v = vlink_by_pair.get(&(a, b)).ok_or_else(|| {
                invalid(&format!("{field}.path"), format!("no virtual link `{}` -> `{}`", pair[0], pair[1]))
            })?;
            vlinks.push(*v);
        }
        streams.push(StreamSpec {
            id: si,
            vlinks,
            rate: s.rate,
            packet_bits: s.packet_mbits * MBPS,
            start: s.start,
            stop: s.stop.unwrap_or(doc.horizon),
        });
    }

    let imposed = match &doc.imposed_plan {
        None => None,
        Some(groups) => {
            let mut task_of_inst: BTreeMap<&str, usize> = BTreeMap::new();
            for (i, t) in tasks.iter().enumerate() {
                task_of_inst.insert(dep.instance(t.instance).name.as_str(), i);
            }
            let mut out = Vec::new();
            for (gi, g) in groups.iter().enumerate() {
                let mut group = Vec::new();
                for name in g {
                    let idx = task_of_inst.get(name.as_str()).ok_or_else(|| ScenarioError::UnknownInstance {
                        field: format!("imposed_plan[{gi}]"),
                        name: name.clone(),
                    })?;
                    group.push(*idx);
                }
                out.push(group);
            }
            Some(out)
        }
    };

    let w = doc.weights.clone().unwrap_or_default();
    let p = doc.power.clone().unwrap_or_default();
    Ok(Scenario {
        topo,
        deployment: dep,
        tasks,
        streams,
        policy,
        weights: CostWeights {
            alpha: w.alpha,
            beta: w.beta,
            gamma: w.gamma,
            impact_direct: w.impact_direct,
            impact_potential: w.impact_potential,
            slack_sign: w.slack_sign,
        },
        power: PowerModel {
            host_idle: p.host_idle,
            host_peak: p.host_peak,
            switch_static: p.switch_static,
            switch_port: p.switch_port,
        },
        imposed,
        doc,
    })
}

// ---- run orchestration ----------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Slamig,
    OneByOne,
    Cqncr,
    Fptas,
    Oracle,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Slamig => "slamig",
            Algorithm::OneByOne => "onebyone",
            Algorithm::Cqncr => "cqncr",
            Algorithm::Fptas => "fptas",
            Algorithm::Oracle => "oracle",
        }
    }
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Slamig, Algorithm::OneByOne, Algorithm::Cqncr, Algorithm::Fptas, Algorithm::Oracle];
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "slamig" => Ok(Algorithm::Slamig),
            "onebyone" => Ok(Algorithm::OneByOne),
            "cqncr" => Ok(Algorithm::Cqncr),
            "fptas" => Ok(Algorithm::Fptas),
            "oracle" => Ok(Algorithm::Oracle),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub trace: Vec<TraceEvent>,
    /// Tasks with assigned deadlines, aligned with report task indices.
    pub tasks: Vec<MigrationTask>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("simulation failed: {0}")]
    Simulation(String),
}

/// Runs one (algorithm, policy, seed) cell of the experiment matrix.
pub fn run_simulation(
    scenario: &Scenario,
    algo: Algorithm,
    policy: Option<SharingPolicy>,
    seed: Option<u64>,
    collect_alloc: bool,
) -> Result<RunOutput, RunError> {
    let policy = policy.unwrap_or(scenario.policy);
    let seed = seed.unwrap_or(scenario.doc.seed);
    let cfg = SimConfig {
        policy,
        horizon: scenario.doc.horizon,
        collect_alloc,
        power: scenario.power,
        seed,
    };
    let ctx = PlanContext {
        topo: &scenario.topo,
        deployment: &scenario.deployment,
        weights: scenario.weights,
        now: 0.0,
        horizon: scenario.doc.horizon,
        paths_per_migration: scenario.doc.paths_per_migration,
        parallel_cap: scenario.doc.parallel_cap,
    };
    let mut tasks = scenario.tasks.clone();
    let planner_start = std::time::Instant::now();
    // deadlines are assigned identically for every algorithm so reports stay
    // comparable
    planner::prepare_tasks(&mut tasks, &ctx);
    planner::assign_deadlines(&mut tasks, &ctx);
    let schedule = if let Some(groups) = &scenario.imposed {
        let mut units = Vec::new();
        let mut unit_groups = Vec::new();
        for g in groups {
            let mut ug = Vec::new();
            for &t in g {
                ug.push(units.len());
                units.push(vec![t]);
            }
            unit_groups.push(ug);
        }
        Schedule { units, groups: unit_groups, mode: ScheduleMode::StrictGroups }
    } else {
        match algo {
            Algorithm::Slamig => {
                let plan = planner::plan(&mut tasks, &ctx);
                Schedule::from_plan(&plan, &tasks)
            }
            Algorithm::OneByOne => baselines::one_by_one(tasks.len()),
            Algorithm::Fptas => baselines::rate_maximization(tasks.len()),
            Algorithm::Cqncr => baselines::grouped_predictive(&mut tasks, &ctx),
            Algorithm::Oracle => {
                let planner_runtime = planner_start.elapsed().as_secs_f64();
                let (_, res) = baselines::exhaustive_optimal(
                    &scenario.topo,
                    &scenario.deployment,
                    &tasks,
                    &scenario.streams,
                    &cfg,
                );
                let report = build_report(
                    &res.trace,
                    &res.tasks,
                    cfg.horizon,
                    algo.as_str(),
                    policy.as_str(),
                    seed,
                    planner_runtime,
                );
                return Ok(RunOutput { report, trace: res.trace, tasks: res.tasks });
            }
        }
    };
    let planner_runtime = planner_start.elapsed().as_secs_f64();
    let res = Simulation::new(
        &scenario.topo,
        scenario.deployment.clone(),
        tasks,
        schedule,
        scenario.streams.clone(),
        cfg.clone(),
    )
    .run();
    let report = build_report(
        &res.trace,
        &res.tasks,
        cfg.horizon,
        algo.as_str(),
        policy.as_str(),
        seed,
        planner_runtime,
    );
    Ok(RunOutput { report, trace: res.trace, tasks: res.tasks })
}
