//! Discrete-event execution of a migration plan against a shared network.
//!
//! The engine models migration memory-copy rounds and service packets as
//! fluid flows with piecewise-constant rates. Rates are recomputed whenever
//! the flow population changes; a flow's remaining volume and completion
//! event are only touched when its own rate actually changes, so flows that
//! are unaffected by an event keep bit-identical trajectories.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::netgraph::{
    share_bandwidth, Deployment, FlowClass, FlowDemand, LinkId, PhysicalTopology, SharingPolicy,
};
use crate::planner::{MigrationPlan, MigrationTask, TaskId};
use crate::workload::{StreamSpec, StreamState};

/// Host and switch power coefficients, watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub host_idle: f64,
    pub host_peak: f64,
    pub switch_static: f64,
    pub switch_port: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel { host_idle: 100.0, host_peak: 250.0, switch_static: 66.0, switch_port: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub policy: SharingPolicy,
    /// Simulation end time, seconds.
    pub horizon: f64,
    /// Record per-flow rate changes in the trace.
    pub collect_alloc: bool,
    pub power: PowerModel,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            policy: SharingPolicy::Ratio,
            horizon: 10_000.0,
            collect_alloc: false,
            power: PowerModel::default(),
            seed: 0,
        }
    }
}

/// How planned units are released into the network.
#[derive(Debug, Clone)]
pub enum ScheduleMode {
    /// Concurrent groups with the feasibility gate; groups open in order and
    /// the window advances one group at a time.
    Grouped,
    /// Strictly one unit at a time, in plan order.
    Sequential,
    /// Groups run strictly in order: a group opens only when every unit of
    /// the previous groups has completed. Used for imposed orderings.
    StrictGroups,
    /// Units start at externally predicted instants, with no feasibility
    /// check at all.
    FixedTimes(Vec<(f64, usize)>),
    /// Start any pending migration that can get any positive bandwidth,
    /// re-examined at every network event.
    Greedy,
}

/// Execution schedule: units (task-index bundles) partitioned into ordered
/// groups. Built from a [`MigrationPlan`] or directly by a baseline.
#[derive(Debug, Clone)]
pub struct Schedule {
    /// Each unit lists indices into the task vector.
    pub units: Vec<Vec<usize>>,
    /// Groups list unit indices.
    pub groups: Vec<Vec<usize>>,
    pub mode: ScheduleMode,
}

impl Schedule {
    /// Grouped schedule from a planner output.
    pub fn from_plan(plan: &MigrationPlan, tasks: &[MigrationTask]) -> Self {
        let index: std::collections::BTreeMap<TaskId, usize> =
            tasks.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
        let mut units = Vec::new();
        let mut groups = Vec::new();
        for g in &plan.groups {
            let mut group = Vec::new();
            for u in &g.units {
                group.push(units.len());
                units.push(u.tasks.iter().map(|t| index[t]).collect());
            }
            groups.push(group);
        }
        Schedule { units, groups, mode: ScheduleMode::Grouped }
    }

    /// One singleton unit per task, in the given order, one group per unit.
    pub fn sequential(order: &[usize]) -> Self {
        Schedule {
            units: order.iter().map(|&i| vec![i]).collect(),
            groups: (0..order.len()).map(|u| vec![u]).collect(),
            mode: ScheduleMode::Sequential,
        }
    }
}

/// Everything the simulation writes down as it runs. Reports are derived
/// purely from this record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    MigPre { t: f64, task: usize },
    MigStart { t: f64, task: usize },
    RoundComplete { t: f64, task: usize, round: u32, volume: f64 },
    VmPause { t: f64, task: usize },
    VmResume { t: f64, task: usize },
    MigPost {
        t: f64,
        task: usize,
        exec_time: f64,
        downtime: f64,
        transferred: f64,
        converged: bool,
    },
    RateChange { t: f64, flow: usize, class: String, rate: f64 },
    PacketDelivered { t: f64, stream: usize, bits: f64, transmission: f64 },
    SimEnd { t: f64, host_energy_j: f64, switch_energy_j: f64, packets: u64, transmission_total: f64 },
}

impl TraceEvent {
    pub fn time(&self) -> f64 {
        match self {
            TraceEvent::MigPre { t, .. }
            | TraceEvent::MigStart { t, .. }
            | TraceEvent::RoundComplete { t, .. }
            | TraceEvent::VmPause { t, .. }
            | TraceEvent::VmResume { t, .. }
            | TraceEvent::MigPost { t, .. }
            | TraceEvent::RateChange { t, .. }
            | TraceEvent::PacketDelivered { t, .. }
            | TraceEvent::SimEnd { t, .. } => *t,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub trace: Vec<TraceEvent>,
    pub deployment: Deployment,
    /// Tasks with their assigned deadlines as executed.
    pub tasks: Vec<MigrationTask>,
    pub completed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Pending,
    Pre,
    Copying,
    StopCopy,
    Done,
}

struct TaskState {
    task: MigrationTask,
    phase: Phase,
    route: Vec<LinkId>,
    flow: Option<usize>,
    round: u32,
    round_start: f64,
    round_volume: f64,
    start_time: f64,
    pause_time: f64,
    downtime: f64,
    transferred: f64,
    converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Payload {
    Migration { task: usize },
    Packet { packet: usize },
}

struct Flow {
    route: Vec<LinkId>,
    class: FlowClass,
    /// Reserved rate for service flows; ignored for migrations, which demand
    /// full link capacity.
    demand: f64,
    remaining: f64,
    rate: f64,
    last_update: f64,
    gen: u64,
    payload: Payload,
    alive: bool,
}

struct Packet {
    stream: usize,
    hop: usize,
    bits: f64,
    hop_enqueued: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Ev {
    FlowComplete { flow: usize, gen: u64 },
    VmResume { task: usize },
    MigPost { task: usize },
    ServiceDone { packet: usize },
    PacketArrival { stream: usize },
    Scheduler,
    UnitStart { unit: usize },
    MigStart { task: usize },
}

impl Ev {
    fn priority(&self) -> u8 {
        match self {
            Ev::FlowComplete { .. } => 0,
            Ev::VmResume { .. } => 1,
            Ev::MigPost { .. } => 2,
            Ev::ServiceDone { .. } => 3,
            Ev::PacketArrival { .. } => 4,
            Ev::Scheduler => 5,
            Ev::UnitStart { .. } => 6,
            Ev::MigStart { .. } => 7,
        }
    }
}

#[derive(PartialEq)]
struct QueuedEv {
    t: f64,
    prio: u8,
    seq: u64,
    ev: Ev,
}

impl Eq for QueuedEv {}
impl PartialOrd for QueuedEv {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueuedEv {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.prio.cmp(&other.prio))
            .then(self.seq.cmp(&other.seq))
    }
}

struct Channel {
    queue: VecDeque<usize>,
    busy: bool,
}

pub struct Simulation<'a> {
    topo: &'a PhysicalTopology,
    dep: Deployment,
    cfg: SimConfig,
    tasks: Vec<TaskState>,
    schedule: Schedule,
    cursor: usize,
    flows: Vec<Flow>,
    link_flows: Vec<Vec<usize>>,
    heap: BinaryHeap<Reverse<QueuedEv>>,
    seq: u64,
    now: f64,
    streams: Vec<StreamState>,
    packets: Vec<Packet>,
    channels: Vec<Channel>,
    trace: Vec<TraceEvent>,
    // energy integration
    last_power_t: f64,
    host_power: f64,
    switch_power: f64,
    host_energy: f64,
    switch_energy: f64,
    packets_done: u64,
    transmission_total: f64,
    completed: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(
        topo: &'a PhysicalTopology,
        deployment: Deployment,
        tasks: Vec<MigrationTask>,
        schedule: Schedule,
        streams: Vec<StreamSpec>,
        cfg: SimConfig,
    ) -> Self {
        let nchannels = deployment.vlinks.len();
        let seed = cfg.seed;
        let task_states: Vec<TaskState> = tasks
            .into_iter()
            .map(|t| {
                let route = t
                    .paths
                    .first()
                    .map(|p| p.links.clone())
                    .or_else(|| {
                        crate::netgraph::shortest_path(topo, t.source, t.dest).map(|p| p.links)
                    })
                    .unwrap_or_default();
                TaskState {
                    task: t,
                    phase: Phase::Pending,
                    route,
                    flow: None,
                    round: 0,
                    round_start: 0.0,
                    round_volume: 0.0,
                    start_time: 0.0,
                    pause_time: 0.0,
                    downtime: 0.0,
                    transferred: 0.0,
                    converged: true,
                }
            })
            .collect();
        let mut sim = Simulation {
            topo,
            dep: deployment,
            tasks: task_states,
            cursor: 0,
            schedule,
            flows: Vec::new(),
            link_flows: vec![Vec::new(); topo.link_count()],
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            streams: streams.into_iter().map(|s| StreamState::new(s, seed)).collect(),
            packets: Vec::new(),
            channels: (0..nchannels).map(|_| Channel { queue: VecDeque::new(), busy: false }).collect(),
            trace: Vec::new(),
            last_power_t: 0.0,
            host_power: 0.0,
            switch_power: 0.0,
            host_energy: 0.0,
            switch_energy: 0.0,
            packets_done: 0,
            transmission_total: 0.0,
            completed: 0,
            cfg,
        };
        sim.refresh_power();
        sim
    }

    fn push(&mut self, t: f64, ev: Ev) {
        let prio = ev.priority();
        self.seq += 1;
        self.heap.push(Reverse(QueuedEv { t, prio, seq: self.seq, ev }));
    }

    // ---- power/energy ----------------------------------------------------

    fn accumulate_energy(&mut self) {
        let dt = self.now - self.last_power_t;
        if dt > 0.0 {
            self.host_energy += self.host_power * dt;
            self.switch_energy += self.switch_power * dt;
        }
        self.last_power_t = self.now;
    }

    fn refresh_power(&mut self) {
        let mut host = 0.0;
        for &h in self.topo.hosts() {
            let res = self.topo.host_resources(h);
            let cores: u32 = self.dep.placed_on(h).map(|i| i.flavor.cores).sum();
            if cores > 0 {
                let u = (cores as f64 / res.cores as f64).min(1.0);
                host += self.cfg.power.host_idle + (self.cfg.power.host_peak - self.cfg.power.host_idle) * u;
            }
        }
        let link_active = |l: LinkId| {
            self.dep.reserved[l.0] > 0.0 || !self.link_flows[l.0].is_empty()
        };
        let mut switch = 0.0;
        for n in self.topo.nodes() {
            if !n.is_switch() {
                continue;
            }
            let ports = self
                .topo
                .neighbors(n.id)
                .iter()
                .filter(|(peer, out)| {
                    link_active(*out)
                        || self
                            .topo
                            .neighbors_in(n.id)
                            .iter()
                            .any(|(p2, inl)| p2 == peer && link_active(*inl))
                })
                .count();
            if ports > 0 {
                switch += self.cfg.power.switch_static + self.cfg.power.switch_port * ports as f64;
            }
        }
        self.host_power = host;
        self.switch_power = switch;
    }

    /// Call around any change to flows or placement.
    fn power_changed(&mut self) {
        self.accumulate_energy();
        self.refresh_power();
    }

    // ---- flow engine -----------------------------------------------------

    fn add_flow(&mut self, flow: Flow) -> usize {
        let id = self.flows.len();
        for l in &flow.route {
            self.link_flows[l.0].push(id);
        }
        self.flows.push(flow);
        self.power_changed();
        self.recompute_rates();
        id
    }

    fn remove_flow(&mut self, id: usize) {
        let route = self.flows[id].route.clone();
        self.flows[id].alive = false;
        self.flows[id].gen += 1;
        for l in &route {
            self.link_flows[l.0].retain(|&f| f != id);
        }
        self.power_changed();
        self.recompute_rates();
    }

    /// Per-link allocations for the flows currently on `link`.
    fn link_alloc(&self, link: LinkId) -> Vec<f64> {
        let cap = self.topo.link(link).capacity;
        let on = &self.link_flows[link.0];
        let demands: Vec<FlowDemand> = on
            .iter()
            .map(|&f| {
                let fl = &self.flows[f];
                FlowDemand {
                    class: fl.class,
                    demand: if fl.class == FlowClass::Migration { cap } else { fl.demand },
                }
            })
            .collect();
        match self.cfg.policy {
            SharingPolicy::Ratio | SharingPolicy::Free => {
                share_bandwidth(self.cfg.policy, cap, &demands)
            }
            SharingPolicy::Reserved => {
                // Services get their reservation regardless of activity;
                // migrations only ever see capacity minus total reservations.
                let svc_total: f64 = demands
                    .iter()
                    .filter(|d| d.class == FlowClass::Service)
                    .map(|d| d.demand)
                    .sum();
                let svc_scale = if svc_total > cap { cap / svc_total } else { 1.0 };
                let leftover = (cap - self.dep.reserved[link.0]).max(0.0);
                let migs = demands.iter().filter(|d| d.class == FlowClass::Migration).count();
                demands
                    .iter()
                    .map(|d| match d.class {
                        FlowClass::Service => d.demand * svc_scale,
                        FlowClass::Migration => leftover / migs as f64,
                    })
                    .collect()
            }
        }
    }

    /// Recomputes every flow's rate and reschedules completions only for
    /// flows whose rate changed.
    fn recompute_rates(&mut self) {
        let mut new_rate: Vec<f64> = self
            .flows
            .iter()
            .map(|f| if f.alive && !f.route.is_empty() { f64::INFINITY } else { 0.0 })
            .collect();
        for l in 0..self.link_flows.len() {
            if self.link_flows[l].is_empty() {
                continue;
            }
            let alloc = self.link_alloc(LinkId(l));
            for (pos, &f) in self.link_flows[l].iter().enumerate() {
                new_rate[f] = new_rate[f].min(alloc[pos]);
            }
        }
        let mut changes = Vec::new();
        for (id, flow) in self.flows.iter_mut().enumerate() {
            if !flow.alive {
                continue;
            }
            let r = new_rate[id];
            if r != flow.rate {
                flow.remaining -= flow.rate * (self.now - flow.last_update);
                flow.remaining = flow.remaining.max(0.0);
                flow.last_update = self.now;
                flow.rate = r;
                flow.gen += 1;
                if r > 0.0 || flow.remaining <= 0.0 {
                    let dt = if r > 0.0 { flow.remaining / r } else { 0.0 };
                    changes.push((self.now + dt, id, flow.gen));
                }
                if self.cfg.collect_alloc {
                    let class = match flow.class {
                        FlowClass::Service => "service",
                        FlowClass::Migration => "migration",
                    }
                    .to_string();
                    self.trace.push(TraceEvent::RateChange { t: self.now, flow: id, class, rate: r });
                }
            }
        }
        for (t, id, gen) in changes {
            self.push(t, Ev::FlowComplete { flow: id, gen });
        }
    }

    /// Rate a new migration flow over `route` would receive right now, with
    /// `count` identical companions starting together.
    fn probe_rate(&self, route: &[LinkId], count: usize) -> f64 {
        let mut rate = f64::INFINITY;
        for l in route {
            let cap = self.topo.link(*l).capacity;
            let mut demands: Vec<FlowDemand> = self.link_flows[l.0]
                .iter()
                .map(|&f| {
                    let fl = &self.flows[f];
                    FlowDemand {
                        class: fl.class,
                        demand: if fl.class == FlowClass::Migration { cap } else { fl.demand },
                    }
                })
                .collect();
            for _ in 0..count {
                demands.push(FlowDemand { class: FlowClass::Migration, demand: cap });
            }
            let alloc = match self.cfg.policy {
                SharingPolicy::Ratio | SharingPolicy::Free => {
                    share_bandwidth(self.cfg.policy, cap, &demands)
                }
                SharingPolicy::Reserved => {
                    let leftover = (cap - self.dep.reserved[l.0]).max(0.0);
                    let migs = demands.iter().filter(|d| d.class == FlowClass::Migration).count();
                    demands
                        .iter()
                        .map(|d| match d.class {
                            FlowClass::Service => d.demand,
                            FlowClass::Migration => leftover / migs as f64,
                        })
                        .collect()
                }
            };
            rate = rate.min(alloc[demands.len() - 1]);
        }
        if rate.is_finite() {
            rate
        } else {
            0.0
        }
    }

    // ---- migration lifecycle ---------------------------------------------

    fn start_unit(&mut self, unit: usize) {
        for &t in &self.schedule.units[unit].clone() {
            if self.tasks[t].phase != Phase::Pending {
                continue;
            }
            self.tasks[t].phase = Phase::Pre;
            self.tasks[t].start_time = self.now;
            self.trace.push(TraceEvent::MigPre { t: self.now, task: t });
            let pre = self.tasks[t].task.spec.pre_time;
            self.push(self.now + pre, Ev::MigStart { task: t });
        }
    }

    fn on_mig_start(&mut self, t: usize) {
        self.trace.push(TraceEvent::MigStart { t: self.now, task: t });
        self.tasks[t].phase = Phase::Copying;
        self.tasks[t].round = 0;
        let volume = self.tasks[t].task.spec.compression * self.tasks[t].task.spec.memory;
        self.begin_round(t, volume);
    }

    fn begin_round(&mut self, t: usize, volume: f64) {
        self.tasks[t].round_start = self.now;
        self.tasks[t].round_volume = volume;
        let route = self.tasks[t].route.clone();
        let flow = self.add_flow(Flow {
            route,
            class: FlowClass::Migration,
            demand: 0.0,
            remaining: volume,
            rate: 0.0,
            last_update: self.now,
            gen: 0,
            payload: Payload::Migration { task: t },
            alive: true,
        });
        // rates were just recomputed inside add_flow
        self.tasks[t].flow = Some(flow);
        let spec = self.tasks[t].task.spec;
        if spec.dirty_rate > 0.0 {
            let rate_now = self.flows[flow].rate;
            let stop = volume <= spec.downtime_threshold * rate_now
                || self.tasks[t].round >= spec.max_rounds;
            if stop && self.tasks[t].phase == Phase::Copying {
                self.tasks[t].phase = Phase::StopCopy;
                self.tasks[t].pause_time = self.now;
                // whether the stop was triggered by the volume threshold
                self.tasks[t].converged = volume <= spec.downtime_threshold * rate_now;
                self.trace.push(TraceEvent::VmPause { t: self.now, task: t });
            }
        }
        if self.flows[flow].remaining <= 0.0 {
            let gen = self.flows[flow].gen;
            self.push(self.now, Ev::FlowComplete { flow, gen });
        }
    }

    fn on_round_complete(&mut self, t: usize) {
        let flow = self.tasks[t].flow.take().expect("active flow");
        let spec = self.tasks[t].task.spec;
        let rate_at_end = self.flows[flow].rate;
        let duration = self.now - self.tasks[t].round_start;
        let volume = self.tasks[t].round_volume;
        self.tasks[t].transferred += volume;
        self.trace.push(TraceEvent::RoundComplete {
            t: self.now,
            task: t,
            round: self.tasks[t].round,
            volume,
        });
        self.remove_flow(flow);
        match self.tasks[t].phase {
            Phase::Copying if spec.dirty_rate > 0.0 => {
                let next = spec.compression * duration * spec.dirty_rate;
                self.tasks[t].round += 1;
                self.begin_round(t, next);
            }
            Phase::Copying => {
                // zero dirty rate: single full copy, pause only to resume
                self.finish_memcopy(t, spec.resume_time, true);
            }
            Phase::StopCopy => {
                let downtime = (self.now - self.tasks[t].pause_time) + spec.resume_time;
                let converged = self.tasks[t].converged
                    || spec.compression * spec.dirty_rate < rate_at_end;
                self.finish_memcopy(t, downtime, converged);
            }
            _ => unreachable!("round completion in phase {:?}", self.tasks[t].phase),
        }
    }

    fn finish_memcopy(&mut self, t: usize, downtime: f64, converged: bool) {
        let spec = self.tasks[t].task.spec;
        if spec.dirty_rate == 0.0 {
            self.trace.push(TraceEvent::VmPause { t: self.now, task: t });
        }
        self.tasks[t].converged = converged;
        self.tasks[t].downtime = downtime;
        self.push(self.now + spec.resume_time, Ev::VmResume { task: t });
        self.push(self.now + spec.post_time, Ev::MigPost { task: t });
    }

    fn on_mig_post(&mut self, t: usize) {
        let st = &self.tasks[t];
        let exec = self.now - st.start_time;
        let downtime = st.downtime;
        let transferred = st.transferred;
        let converged = st.converged;
        let inst = st.task.instance;
        let dest = st.task.dest;
        self.tasks[t].phase = Phase::Done;
        self.completed += 1;
        // commit the placement and reroute reserved virtual links
        if self.dep.commit_placement(self.topo, inst, dest).is_ok() {
            self.power_changed();
            self.recompute_rates();
        }
        self.trace.push(TraceEvent::MigPost {
            t: self.now,
            task: t,
            exec_time: exec,
            downtime,
            transferred,
            converged,
        });
        self.push(self.now, Ev::Scheduler);
    }

    fn unit_pending(&self, u: usize) -> bool {
        self.schedule.units[u].iter().all(|&t| self.tasks[t].phase == Phase::Pending)
    }

    fn any_active(&self) -> bool {
        self.tasks.iter().any(|t| matches!(t.phase, Phase::Pre | Phase::Copying | Phase::StopCopy))
    }

    /// Interface exclusivity plus the start-bandwidth bar: the unit's hosts
    /// must be idle for migration traffic and the new flows must receive more
    /// than the compressed dirty rate.
    fn unit_feasible(&self, u: usize) -> bool {
        let members = &self.schedule.units[u];
        let src = self.tasks[members[0]].task.source;
        let dst = self.tasks[members[0]].task.dest;
        for t in self.tasks.iter() {
            if matches!(t.phase, Phase::Pre | Phase::Copying | Phase::StopCopy)
                && (t.task.source == src || t.task.dest == dst)
            {
                return false;
            }
        }
        let count = members.len();
        members.iter().all(|&t| {
            let st = &self.tasks[t];
            if st.route.is_empty() {
                return false;
            }
            let rate = self.probe_rate(&st.route, count);
            rate > st.task.spec.compression * st.task.spec.dirty_rate && rate > 0.0
        })
    }

    fn on_scheduler(&mut self) {
        match self.schedule.mode.clone() {
            ScheduleMode::Grouped => {
                let groups = self.schedule.groups.clone();
                if groups.is_empty() {
                    return;
                }
                // phase 1: fill open groups
                let open = self.cursor.min(groups.len() - 1);
                for g in groups.iter().take(open + 1) {
                    for &u in g {
                        if self.unit_pending(u) && self.unit_feasible(u) {
                            self.start_unit(u);
                        }
                    }
                }
                // phase 2: probe only the next group; advance on success
                if self.cursor + 1 < groups.len() {
                    let mut advanced = false;
                    for &u in &groups[self.cursor + 1] {
                        if self.unit_pending(u) && self.unit_feasible(u) {
                            self.start_unit(u);
                            advanced = true;
                        }
                    }
                    if advanced {
                        self.cursor += 1;
                    }
                }
            }
            ScheduleMode::Sequential => {
                if self.any_active() {
                    return;
                }
                let next = (0..self.schedule.units.len()).find(|&u| self.unit_pending(u));
                if let Some(u) = next {
                    self.start_unit(u);
                }
            }
            ScheduleMode::StrictGroups => {
                let groups = self.schedule.groups.clone();
                while self.cursor < groups.len() {
                    let done = groups[self.cursor]
                        .iter()
                        .all(|&u| self.schedule.units[u].iter().all(|&t| self.tasks[t].phase == Phase::Done));
                    if !done {
                        break;
                    }
                    self.cursor += 1;
                }
                if let Some(g) = groups.get(self.cursor) {
                    for &u in g {
                        if self.unit_pending(u) && self.unit_feasible(u) {
                            self.start_unit(u);
                        }
                    }
                }
            }
            ScheduleMode::FixedTimes(_) => {}
            ScheduleMode::Greedy => self.greedy_pass(),
        }
    }

    fn greedy_pass(&mut self) {
        for u in 0..self.schedule.units.len() {
            if self.unit_pending(u) {
                let members = &self.schedule.units[u];
                let can = members.iter().all(|&t| {
                    !self.tasks[t].route.is_empty()
                        && self.probe_rate(&self.tasks[t].route, members.len()) > 0.0
                });
                if can {
                    self.start_unit(u);
                }
            }
        }
    }

    // ---- service traffic -------------------------------------------------

    fn schedule_first_arrivals(&mut self) {
        for s in 0..self.streams.len() {
            let start = self.streams[s].spec.start;
            let gap = self.streams[s].next_gap();
            let t = start + gap;
            if t < self.streams[s].spec.stop {
                self.push(t, Ev::PacketArrival { stream: s });
            }
        }
    }

    fn on_packet_arrival(&mut self, s: usize) {
        let bits = self.streams[s].next_size();
        let gap = self.streams[s].next_gap();
        let next = self.now + gap;
        if next < self.streams[s].spec.stop {
            self.push(next, Ev::PacketArrival { stream: s });
        }
        let id = self.packets.len();
        self.packets.push(Packet { stream: s, hop: 0, bits, hop_enqueued: self.now });
        self.enqueue_packet(id);
    }

    fn enqueue_packet(&mut self, p: usize) {
        let stream = self.packets[p].stream;
        let hop = self.packets[p].hop;
        let vlink = self.streams[stream].spec.vlinks[hop];
        self.packets[p].hop_enqueued = self.now;
        self.channels[vlink.0].queue.push_back(p);
        if !self.channels[vlink.0].busy {
            self.pump_channel(vlink.0);
        }
    }

    fn pump_channel(&mut self, ch: usize) {
        let Some(&p) = self.channels[ch].queue.front() else {
            self.channels[ch].busy = false;
            return;
        };
        self.channels[ch].busy = true;
        let vlink = &self.dep.vlinks[ch];
        let route = vlink.route.clone();
        let demand = vlink.reserved;
        let bits = self.packets[p].bits;
        if route.is_empty() {
            // co-located endpoints: instantaneous delivery
            self.channels[ch].queue.pop_front();
            self.channels[ch].busy = false;
            self.complete_hop(p, 0.0);
            if !self.channels[ch].queue.is_empty() {
                self.pump_channel(ch);
            }
            return;
        }
        self.add_flow(Flow {
            route,
            class: FlowClass::Service,
            demand,
            remaining: bits,
            rate: 0.0,
            last_update: self.now,
            gen: 0,
            payload: Payload::Packet { packet: p },
            alive: true,
        });
    }

    fn on_packet_flow_complete(&mut self, flow: usize) {
        let Payload::Packet { packet } = self.flows[flow].payload else { unreachable!() };
        self.remove_flow(flow);
        let stream = self.packets[packet].stream;
        let hop = self.packets[packet].hop;
        let vlink = self.streams[stream].spec.vlinks[hop];
        self.channels[vlink.0].queue.pop_front();
        self.channels[vlink.0].busy = false;
        let transmission = self.now - self.packets[packet].hop_enqueued;
        self.complete_hop(packet, transmission);
        if !self.channels[vlink.0].queue.is_empty() {
            self.pump_channel(vlink.0);
        }
    }

    fn complete_hop(&mut self, p: usize, transmission: f64) {
        self.transmission_total += transmission;
        let stream = self.packets[p].stream;
        let hop = self.packets[p].hop;
        let spec_len = self.streams[stream].spec.vlinks.len();
        // processing delay at the receiving instance, when it is a VNF
        let vlink = self.streams[stream].spec.vlinks[hop];
        let dst_inst = self.dep.vlinks[vlink.0].to;
        let delay = {
            let inst = self.dep.instance(dst_inst);
            match inst.flavor.mipo {
                Some(mipo) if mipo > 0.0 => {
                    let mips = self.topo.host_resources(inst.host).mips;
                    mipo / mips
                }
                _ => 0.0,
            }
        };
        if hop + 1 < spec_len {
            self.packets[p].hop += 1;
            if delay > 0.0 {
                self.push(self.now + delay, Ev::ServiceDone { packet: p });
            } else {
                self.enqueue_packet(p);
            }
        } else {
            self.packets_done += 1;
            if self.cfg.collect_alloc {
                let bits = self.packets[p].bits;
                self.trace.push(TraceEvent::PacketDelivered {
                    t: self.now,
                    stream,
                    bits,
                    transmission,
                });
            }
        }
    }

    // ---- main loop -------------------------------------------------------

    pub fn run(mut self) -> SimResult {
        self.schedule_first_arrivals();
        match &self.schedule.mode {
            ScheduleMode::FixedTimes(times) => {
                for (t, u) in times.clone() {
                    self.push(t, Ev::UnitStart { unit: u });
                }
            }
            _ => self.push(0.0, Ev::Scheduler),
        }
        while let Some(Reverse(q)) = self.heap.pop() {
            if q.t > self.cfg.horizon {
                break;
            }
            self.now = q.t;
            let greedy_retrigger = matches!(self.schedule.mode, ScheduleMode::Greedy)
                && matches!(q.ev, Ev::FlowComplete { .. } | Ev::MigPost { .. });
            match q.ev {
                Ev::FlowComplete { flow, gen } => {
                    if self.flows[flow].alive && self.flows[flow].gen == gen {
                        match self.flows[flow].payload {
                            Payload::Migration { task } => self.on_round_complete(task),
                            Payload::Packet { .. } => self.on_packet_flow_complete(flow),
                        }
                    }
                }
                Ev::VmResume { task } => {
                    self.trace.push(TraceEvent::VmResume { t: self.now, task });
                }
                Ev::MigPost { task } => self.on_mig_post(task),
                Ev::ServiceDone { packet } => self.enqueue_packet(packet),
                Ev::PacketArrival { stream } => self.on_packet_arrival(stream),
                Ev::Scheduler => self.on_scheduler(),
                Ev::UnitStart { unit } => self.start_unit(unit),
                Ev::MigStart { task } => self.on_mig_start(task),
            }
            if greedy_retrigger {
                self.greedy_pass();
            }
        }
        self.now = self.cfg.horizon.max(self.now);
        self.accumulate_energy();
        self.trace.push(TraceEvent::SimEnd {
            t: self.now,
            host_energy_j: self.host_energy,
            switch_energy_j: self.switch_energy,
            packets: self.packets_done,
            transmission_total: self.transmission_total,
        });
        SimResult {
            trace: self.trace,
            deployment: self.dep,
            tasks: self.tasks.into_iter().map(|t| t.task).collect(),
            completed: self.completed,
        }
    }
}
