//! Deadline-aware planning of concurrent migration groups.
//!
//! The pipeline: assign deadlines, merge co-path small migrations, build the
//! resource-dependency graph, decompose it into complete dependency subgraphs,
//! score every migration (time, slack, direct and potential impact on the
//! others) and pack mutually-independent migrations into ordered concurrent
//! groups.

use serde::{Deserialize, Serialize};

use crate::migmodel::{estimate_constant_rate, MigrationEstimate, MigrationSpec};
use crate::netgraph::{Deployment, InstanceId, NodeId, PathSet, PhysicalTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId(pub usize);

/// How a task's deadline is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DeadlineSpec {
    /// No deadline; slack uses the scenario horizon.
    None,
    /// Absolute completion deadline in simulation seconds.
    Explicit(f64),
    /// SLO-derived: window = (threshold - accumulated) / rate.
    Slo { threshold: f64, accumulated: f64, rate: f64 },
    /// Derived from the deadline of the whole virtual topology.
    Group,
}

/// One migration request, enriched by the planner with paths, a prediction
/// and an assigned deadline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MigrationTask {
    pub id: TaskId,
    pub instance: InstanceId,
    pub source: NodeId,
    pub dest: NodeId,
    pub deadline_spec: DeadlineSpec,
    /// Absolute deadline, filled by `assign_deadlines`.
    pub deadline: Option<f64>,
    /// Set when the group-deadline arithmetic left no positive window.
    pub deadline_infeasible: bool,
    pub arrival: f64,
    pub spec: MigrationSpec,
    #[serde(skip)]
    pub paths: PathSet,
    #[serde(skip)]
    pub estimate: Option<MigrationEstimate>,
}

impl MigrationTask {
    pub fn new(
        id: TaskId,
        instance: InstanceId,
        source: NodeId,
        dest: NodeId,
        spec: MigrationSpec,
        deadline_spec: DeadlineSpec,
    ) -> Self {
        MigrationTask {
            id,
            instance,
            source,
            dest,
            deadline_spec,
            deadline: None,
            deadline_infeasible: false,
            arrival: 0.0,
            spec,
            paths: Vec::new(),
            estimate: None,
        }
    }
}

/// Cost coefficients. `slack_sign` controls the direction of the slack term;
/// the default -1 makes tight deadlines score low (scheduled early).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Mix of direct impact; `impact_direct + impact_potential = 1`.
    pub impact_direct: f64,
    pub impact_potential: f64,
    pub slack_sign: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            alpha: 0.5,
            beta: 0.3,
            gamma: 0.2,
            impact_direct: 0.5,
            impact_potential: 0.5,
            slack_sign: -1.0,
        }
    }
}

/// Undirected resource-sharing graph over plan units.
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    n: usize,
    adj: Vec<Vec<bool>>,
}

impl DependencyGraph {
    pub fn new(n: usize) -> Self {
        DependencyGraph { n, adj: vec![vec![false; n]; n] }
    }
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a][b] = true;
            self.adj[b][a] = true;
        }
    }
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.adj[a][b]
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Partition of plan units into complete dependency subgraphs.
pub type CliqueSet = Vec<Vec<usize>>;

/// A set of tasks migrated in parallel over the same (source, destination)
/// pair, treated as one schedulable unit. Usually a singleton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanUnit {
    pub tasks: Vec<TaskId>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationGroup {
    pub units: Vec<PlanUnit>,
    pub cost: f64,
}

impl MigrationGroup {
    pub fn task_ids(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.units.iter().flat_map(|u| u.tasks.iter().copied())
    }
}

/// Ordered list of concurrent migration groups, cheapest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MigrationPlan {
    pub groups: Vec<MigrationGroup>,
}

impl MigrationPlan {
    pub fn task_count(&self) -> usize {
        self.groups.iter().map(|g| g.task_ids().count()).sum()
    }
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Planner inputs that stay fixed across one planning round.
pub struct PlanContext<'a> {
    pub topo: &'a PhysicalTopology,
    pub deployment: &'a Deployment,
    pub weights: CostWeights,
    /// Planning instant, used to turn absolute deadlines into windows.
    pub now: f64,
    /// Scenario horizon, the slack stand-in for deadline-free tasks.
    pub horizon: f64,
    /// Paths considered per migration.
    pub paths_per_migration: usize,
    /// Optional cap on how many migrations may be merged onto one path.
    pub parallel_cap: Option<usize>,
}

/// Bandwidth the network could assign to a task right now: the summed
/// residual of its admissible paths, capped by both host interfaces.
pub fn allocatable_bandwidth(
    task: &MigrationTask,
    topo: &PhysicalTopology,
    dep: &Deployment,
) -> f64 {
    let paths: f64 = task.paths.iter().map(|p| dep.path_residual(topo, &p.links)).sum();
    paths.min(topo.iface_out(task.source)).min(topo.iface_in(task.dest))
}

/// Floor keeps estimates finite for starved tasks; they sort last naturally.
const BANDWIDTH_FLOOR: f64 = 1.0;

fn estimate_at(task: &MigrationTask, bandwidth: f64) -> MigrationEstimate {
    estimate_constant_rate(&task.spec, bandwidth.max(BANDWIDTH_FLOOR))
        .expect("task spec validated at construction")
}

/// Computes admissible paths and the baseline prediction for every task.
pub fn prepare_tasks(tasks: &mut [MigrationTask], ctx: &PlanContext) {
    for t in tasks.iter_mut() {
        if t.paths.is_empty() {
            t.paths = crate::netgraph::k_paths(ctx.topo, t.source, t.dest, ctx.paths_per_migration);
        }
        let bw = allocatable_bandwidth(t, ctx.topo, ctx.deployment);
        t.estimate = Some(estimate_at(t, bw));
    }
}

/// Assigns absolute deadlines: SLO windows, group-deadline arithmetic, or
/// pass-through of explicit windows. A non-positive group window yields a
/// zero deadline flagged infeasible.
pub fn assign_deadlines(tasks: &mut [MigrationTask], ctx: &PlanContext) {
    // Worst-case execution time per virtual topology, for group deadlines.
    let exec: Vec<f64> = tasks
        .iter()
        .map(|t| t.estimate.map(|e| e.total_time).unwrap_or(0.0))
        .collect();
    for i in 0..tasks.len() {
        match tasks[i].deadline_spec {
            DeadlineSpec::Explicit(d) => tasks[i].deadline = Some(d),
            DeadlineSpec::None => tasks[i].deadline = None,
            DeadlineSpec::Slo { threshold, accumulated, rate } => {
                if rate > 0.0 {
                    tasks[i].deadline = Some(tasks[i].arrival + (threshold - accumulated) / rate);
                } else {
                    tasks[i].deadline = None;
                }
            }
            DeadlineSpec::Group => {
                let vtopo = ctx.deployment.instance(tasks[i].instance).vtopo;
                let group_deadline = ctx.deployment.vtopos[vtopo].deadline;
                let Some(dg) = group_deadline else {
                    tasks[i].deadline = None;
                    continue;
                };
                let others: f64 = (0..tasks.len())
                    .filter(|&k| {
                        k != i
                            && matches!(tasks[k].deadline_spec, DeadlineSpec::Group)
                            && ctx.deployment.instance(tasks[k].instance).vtopo == vtopo
                    })
                    .map(|k| exec[k])
                    .sum();
                let d = dg - others;
                if d > ctx.now {
                    tasks[i].deadline = Some(d);
                } else {
                    tasks[i].deadline = Some(ctx.now.max(0.0));
                    tasks[i].deadline_infeasible = true;
                }
            }
        }
    }
}

fn window(task: &MigrationTask, ctx: &PlanContext) -> f64 {
    task.deadline.unwrap_or(ctx.horizon) - ctx.now
}

/// Merges co-path migrations into parallel units when splitting the path
/// bandwidth still meets every member's deadline and beats running them back
/// to back. Returns one unit per schedulable entity.
pub fn preprocess_parallel(tasks: &[MigrationTask], ctx: &PlanContext) -> Vec<Vec<TaskId>> {
    use std::collections::BTreeMap;
    let mut by_pair: BTreeMap<(NodeId, NodeId), Vec<usize>> = BTreeMap::new();
    for (i, t) in tasks.iter().enumerate() {
        by_pair.entry((t.source, t.dest)).or_default().push(i);
    }
    let mut unit_of = vec![usize::MAX; tasks.len()];
    let mut units: Vec<Vec<TaskId>> = Vec::new();
    for (_, idxs) in by_pair {
        // Small-memory tasks first: those are the merge candidates.
        let mut order = idxs.clone();
        order.sort_by(|&a, &b| {
            tasks[a]
                .spec
                .memory
                .partial_cmp(&tasks[b].spec.memory)
                .unwrap()
                .then(tasks[a].id.cmp(&tasks[b].id))
        });
        let mut i = 0;
        while i < order.len() {
            let mut bundle = vec![order[i]];
            loop {
                if let Some(cap) = ctx.parallel_cap {
                    if bundle.len() >= cap {
                        break;
                    }
                }
                let Some(&next) = order.get(i + bundle.len()) else { break };
                let mut candidate = bundle.clone();
                candidate.push(next);
                if merge_improves(tasks, &candidate, ctx) {
                    bundle = candidate;
                } else {
                    break;
                }
            }
            i += bundle.len();
            let unit_id = units.len();
            for &t in &bundle {
                unit_of[t] = unit_id;
            }
            units.push(bundle.into_iter().map(|t| tasks[t].id).collect());
        }
    }
    // Keep unit order aligned with ascending minimum task id for determinism.
    units.sort_by_key(|u| u.iter().min().copied());
    units
}

fn merge_improves(tasks: &[MigrationTask], bundle: &[usize], ctx: &PlanContext) -> bool {
    let bw = allocatable_bandwidth(&tasks[bundle[0]], ctx.topo, ctx.deployment);
    if bw <= 0.0 {
        return false;
    }
    let split = bw / bundle.len() as f64;
    let mut merged_completion: f64 = 0.0;
    for &i in bundle {
        let e = estimate_at(&tasks[i], split);
        if !e.converged {
            return false;
        }
        merged_completion = merged_completion.max(e.total_time);
    }
    let sequential: f64 = bundle.iter().map(|&i| estimate_at(&tasks[i], bw).total_time).sum();
    if merged_completion >= sequential {
        return false;
    }
    bundle.iter().all(|&i| merged_completion <= window(&tasks[i], ctx))
}

/// Resource independence of two migrations (multi-path aware).
///
/// Same ordered (source, destination) pair or a single shared endpoint means
/// dependent. Otherwise both tasks must retain enough bandwidth on their
/// non-intersecting paths to be unaffected by the other.
pub fn is_independent(
    j: &MigrationTask,
    k: &MigrationTask,
    topo: &PhysicalTopology,
    dep: &Deployment,
) -> bool {
    if j.id == k.id {
        return false;
    }
    if j.paths.is_empty() || k.paths.is_empty() {
        return false; // unroutable tasks are conservatively dependent on all
    }
    if j.source == k.source && j.dest == k.dest {
        return false;
    }
    let endpoint_match = j.source == k.source || j.dest == k.dest;
    if endpoint_match {
        return false;
    }
    half_independent(j, k, topo, dep) && half_independent(k, j, topo, dep)
}

fn half_independent(
    j: &MigrationTask,
    k: &MigrationTask,
    topo: &PhysicalTopology,
    dep: &Deployment,
) -> bool {
    let u_all: f64 = j.paths.iter().map(|p| dep.path_residual(topo, &p.links)).sum();
    let u_shared: f64 = j
        .paths
        .iter()
        .filter(|p| k.paths.iter().any(|q| p.shares_link_with(q)))
        .map(|p| dep.path_residual(topo, &p.links))
        .sum();
    let need = u_all.min(topo.iface_out(j.source)).min(topo.iface_in(j.dest));
    u_all - u_shared >= need
}

/// Builds the dependency graph over plan units: an edge whenever any member
/// pair is not independent.
pub fn build_dependency_graph(
    tasks: &[MigrationTask],
    units: &[Vec<TaskId>],
    ctx: &PlanContext,
) -> DependencyGraph {
    let by_id = task_index(tasks);
    let mut g = DependencyGraph::new(units.len());
    for a in 0..units.len() {
        for b in (a + 1)..units.len() {
            let dependent = units[a].iter().any(|&ta| {
                units[b].iter().any(|&tb| {
                    !is_independent(&tasks[by_id[&ta]], &tasks[by_id[&tb]], ctx.topo, ctx.deployment)
                })
            });
            if dependent {
                g.add_edge(a, b);
            }
        }
    }
    g
}

fn task_index(tasks: &[MigrationTask]) -> std::collections::BTreeMap<TaskId, usize> {
    tasks.iter().enumerate().map(|(i, t)| (t.id, i)).collect()
}

/// Greedy decomposition into complete dependency subgraphs: visit units in
/// ascending id order and grow each clique with the smallest-id unvisited
/// neighbor that stays adjacent to every member.
pub fn complete_dependency_subgraphs(graph: &DependencyGraph) -> CliqueSet {
    let n = graph.len();
    let mut visited = vec![false; n];
    let mut cliques = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut clique = vec![start];
        loop {
            let next = (0..n).find(|&c| {
                !visited[c] && clique.iter().all(|&m| graph.has_edge(m, c))
            });
            match next {
                Some(c) => {
                    visited[c] = true;
                    clique.push(c);
                }
                None => break,
            }
        }
        cliques.push(clique);
    }
    cliques
}

/// Score of one migration: weighted execution time, slack and impact on the
/// other migrations. Lower scores schedule earlier.
pub fn unit_cost(
    tasks: &[MigrationTask],
    unit: &[TaskId],
    graph: &DependencyGraph,
    units: &[Vec<TaskId>],
    unit_idx: usize,
    ctx: &PlanContext,
) -> f64 {
    let by_id = task_index(tasks);
    unit.iter().map(|&t| task_cost(tasks, by_id[&t], graph, units, unit_idx, ctx, &by_id)).sum()
}

fn task_cost(
    tasks: &[MigrationTask],
    j: usize,
    graph: &DependencyGraph,
    units: &[Vec<TaskId>],
    unit_idx: usize,
    ctx: &PlanContext,
    by_id: &std::collections::BTreeMap<TaskId, usize>,
) -> f64 {
    let w = ctx.weights;
    let task = &tasks[j];
    let t_mig = task.estimate.expect("prepared").total_time;
    let slack_term = t_mig - window(task, ctx);

    // Hypothetical state once this migration has completed and its virtual
    // links have been rerouted; impact is evaluated along affected paths.
    let mut after = ctx.deployment.clone();
    let moved = after.commit_placement(ctx.topo, task.instance, task.dest).is_ok();

    let mut direct = 0.0;
    let mut potent = 0.0;
    if w.gamma != 0.0 {
        for (u_idx, unit) in units.iter().enumerate() {
            for &other_id in unit {
                let k = by_id[&other_id];
                if k == j {
                    continue;
                }
                let other = &tasks[k];
                let t_exe_k = other.estimate.expect("prepared").total_time;
                let after_bw = if moved {
                    allocatable_bandwidth(other, ctx.topo, &after)
                } else {
                    allocatable_bandwidth(other, ctx.topo, ctx.deployment)
                };
                let t_exe_k_after = estimate_at(other, after_bw).total_time;
                let waits = graph.has_edge(unit_idx, u_idx);
                let t_mig_k_after = t_exe_k_after + if waits { t_mig } else { 0.0 };
                // Both Eq-21 terms: execution-time change plus slack change.
                direct += (t_exe_k_after - t_exe_k) + (t_mig_k_after - t_exe_k);

                if moved {
                    for p in &other.paths {
                        let increased: Vec<f64> = p
                            .links
                            .iter()
                            .filter_map(|l| {
                                let before = ctx.deployment.residual(ctx.topo, *l);
                                let now = after.residual(ctx.topo, *l);
                                (now > before).then_some(now)
                            })
                            .collect();
                        if increased.is_empty() || p.links.is_empty() {
                            continue;
                        }
                        let frac = increased.len() as f64 / p.links.len() as f64;
                        let u_bar = increased.iter().copied().fold(f64::INFINITY, f64::min);
                        let bw = u_bar
                            .min(ctx.topo.iface_out(other.source))
                            .min(ctx.topo.iface_in(other.dest));
                        let t_k_new = estimate_at(other, bw).total_time;
                        potent += frac * (t_k_new - t_exe_k);
                    }
                }
            }
        }
    }
    let impact = w.impact_direct * direct + w.impact_potential * potent;
    w.alpha * t_mig + w.slack_sign * w.beta * slack_term + w.gamma * impact
}

/// Packs scored units into concurrent groups: cheapest unit first, each into
/// the first group it has no dependency edge into, then groups ordered by
/// total cost.
pub fn concurrent_groups(
    units: &[Vec<TaskId>],
    costs: &[f64],
    graph: &DependencyGraph,
) -> MigrationPlan {
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| {
        costs[a]
            .partial_cmp(&costs[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(units[a].iter().min().cmp(&units[b].iter().min()))
    });
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &u in &order {
        let slot = groups
            .iter_mut()
            .find(|g| g.iter().all(|&m| !graph.has_edge(m, u)));
        match slot {
            Some(g) => g.push(u),
            None => groups.push(vec![u]),
        }
    }
    let mut built: Vec<MigrationGroup> = groups
        .into_iter()
        .map(|members| {
            let units_built: Vec<PlanUnit> = members
                .iter()
                .map(|&u| PlanUnit { tasks: units[u].clone(), cost: costs[u] })
                .collect();
            let cost = units_built.iter().map(|u| u.cost).sum();
            MigrationGroup { units: units_built, cost }
        })
        .collect();
    built.sort_by(|a, b| a.cost.partial_cmp(&b.cost).unwrap_or(std::cmp::Ordering::Equal));
    MigrationPlan { groups: built }
}

/// End-to-end planning pipeline.
pub fn plan(tasks: &mut Vec<MigrationTask>, ctx: &PlanContext) -> MigrationPlan {
    if tasks.is_empty() {
        return MigrationPlan::default();
    }
    prepare_tasks(tasks, ctx);
    assign_deadlines(tasks, ctx);
    let units = preprocess_parallel(tasks, ctx);
    let graph = build_dependency_graph(tasks, &units, ctx);
    let _cliques = complete_dependency_subgraphs(&graph);
    let costs: Vec<f64> =
        (0..units.len()).map(|u| unit_cost(tasks, &units[u], &graph, &units, u, ctx)).collect();
    concurrent_groups(&units, &costs, &graph)
}

/// Replanning: drop ongoing migrations from consideration and plan the
/// pending and newly-arrived tasks against the current network state.
pub fn replan(
    ongoing: &[TaskId],
    pending_and_new: &mut Vec<MigrationTask>,
    ctx: &PlanContext,
) -> MigrationPlan {
    pending_and_new.retain(|t| !ongoing.contains(&t.id));
    // Estimates and paths must reflect the current residual state.
    for t in pending_and_new.iter_mut() {
        t.paths.clear();
        t.estimate = None;
    }
    plan(pending_and_new, ctx)
}
