//! Reference scheduling strategies the planner is compared against.

use crate::netgraph::{Deployment, PhysicalTopology};
use crate::planner::{build_dependency_graph, prepare_tasks, MigrationTask, PlanContext};
use crate::sim::{Schedule, ScheduleMode, SimConfig, SimResult, Simulation, TraceEvent};
use crate::workload::StreamSpec;

/// One migration at a time, in ascending task order.
pub fn one_by_one(n: usize) -> Schedule {
    Schedule::sequential(&(0..n).collect::<Vec<_>>())
}

/// Start any migration that can obtain any positive bandwidth, rechecked at
/// every network event. No interface exclusivity, no start-bandwidth bar.
pub fn rate_maximization(n: usize) -> Schedule {
    Schedule {
        units: (0..n).map(|i| vec![i]).collect(),
        groups: (0..n).map(|u| vec![u]).collect(),
        mode: ScheduleMode::Greedy,
    }
}

/// Greedy group construction with start times fixed from planning-time
/// predictions. Groups are released at their predicted instants without any
/// runtime feasibility check, so stale predictions are executed as-is.
pub fn grouped_predictive(tasks: &mut Vec<MigrationTask>, ctx: &PlanContext) -> Schedule {
    prepare_tasks(tasks, ctx);
    let units: Vec<Vec<crate::planner::TaskId>> = tasks.iter().map(|t| vec![t.id]).collect();
    let graph = build_dependency_graph(tasks, &units, ctx);
    // first-fit grouping by ascending id: a task joins the first group it has
    // no resource dependency with
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for u in 0..units.len() {
        match groups.iter_mut().find(|g| g.iter().all(|&m| !graph.has_edge(m, u))) {
            Some(g) => g.push(u),
            None => groups.push(vec![u]),
        }
    }
    // predicted makespan of each group at planning-time bandwidth
    let mut starts = Vec::new();
    let mut t = 0.0;
    for g in &groups {
        for &u in g {
            starts.push((t, u));
        }
        let span = g
            .iter()
            .map(|&u| tasks[u].estimate.expect("prepared").total_time)
            .fold(0.0, f64::max);
        t += span;
    }
    Schedule {
        units: (0..tasks.len()).map(|i| vec![i]).collect(),
        groups,
        mode: ScheduleMode::FixedTimes(starts),
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    let mut used = vec![false; n];
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(n, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, &mut out);
    out
}

fn makespan(res: &SimResult, n: usize, horizon: f64) -> f64 {
    if res.completed < n {
        return horizon * 2.0;
    }
    let mut first = f64::INFINITY;
    let mut last = 0.0f64;
    for e in &res.trace {
        match e {
            TraceEvent::MigPre { t, .. } => first = first.min(*t),
            TraceEvent::MigPost { t, .. } => last = last.max(*t),
            _ => {}
        }
    }
    last - first
}

/// Splits `0..n` positions into every ordered sequence of non-empty
/// consecutive groups (2^(n-1) compositions).
fn compositions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for mask in 0..(1u32 << n.saturating_sub(1)) {
        let mut groups = vec![vec![0]];
        for i in 1..n {
            if mask & (1 << (i - 1)) != 0 {
                groups.push(Vec::new());
            }
            groups.last_mut().unwrap().push(i);
        }
        out.push(groups);
    }
    out
}

/// Exhaustive search over task orderings (up to 6 tasks): every permutation
/// is evaluated strictly sequentially and under every ordered grouping into
/// feasibility-gated concurrent groups; the shortest overall migration time
/// wins. The identity sequential ordering is always a candidate, so the
/// result is never worse than migrating one by one.
pub fn exhaustive_optimal(
    topo: &PhysicalTopology,
    dep: &Deployment,
    tasks: &[MigrationTask],
    streams: &[StreamSpec],
    cfg: &SimConfig,
) -> (Schedule, SimResult) {
    let n = tasks.len();
    assert!(n <= 6, "exhaustive search is limited to 6 tasks, got {n}");
    let mut best: Option<(f64, Schedule, SimResult)> = None;
    for perm in permutations(n) {
        let mut candidates = vec![Schedule::sequential(&perm)];
        for groups in compositions(n) {
            candidates.push(Schedule {
                units: perm.iter().map(|&i| vec![i]).collect(),
                groups,
                mode: ScheduleMode::Grouped,
            });
        }
        for sched in candidates {
            let res = Simulation::new(
                topo,
                dep.clone(),
                tasks.to_vec(),
                sched.clone(),
                streams.to_vec(),
                cfg.clone(),
            )
            .run();
            let span = makespan(&res, n, cfg.horizon);
            if best.as_ref().map_or(true, |(b, _, _)| span < *b) {
                best = Some((span, sched, res));
            }
        }
    }
    let (_, sched, res) = best.expect("at least one permutation");
    (sched, res)
}
