//! Physical topologies, path computation, residual-bandwidth accounting and
//! bandwidth-sharing policies.

mod build;
mod paths;
mod virt;

pub use build::{aarnet_spec, build_fat_tree, build_wan, WanLink, WanSpec, WAN_GATEWAY_BW, WAN_ROUTER_BW};
pub use paths::{k_paths, shortest_path, Path, PathSet};
pub use virt::{
    Deployment, Flavor, InstanceId, PlacementError, VirtualInstance, VirtualLink, VirtualTopology,
    VlinkId, VtopoKind,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub usize);

/// Compute/memory/storage capacity of a physical host.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HostResources {
    pub cores: u32,
    /// Instructions per second per core, in MIPS.
    pub mips: f64,
    pub ram_gb: f64,
    pub storage_gb: f64,
}

impl Default for HostResources {
    fn default() -> Self {
        // 24 cores at 10000 MIPS, 10240 GB RAM, 10 PB storage.
        HostResources { cores: 24, mips: 10_000.0, ram_gb: 10_240.0, storage_gb: 10_000_000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Host(HostResources),
    Switch,
    Router,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_host(&self) -> bool {
        matches!(self.kind, NodeKind::Host(_))
    }
    pub fn is_switch(&self) -> bool {
        matches!(self.kind, NodeKind::Switch | NodeKind::Router)
    }
}

/// Directed capacitated link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    /// Capacity in bits/s.
    pub capacity: f64,
}

/// Physical data-center network. Links are directed; builders install both
/// directions of every physical cable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysicalTopology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    /// Outgoing adjacency, sorted by neighbor id.
    adj: Vec<Vec<(NodeId, LinkId)>>,
    /// Incoming adjacency, sorted by neighbor id.
    radj: Vec<Vec<(NodeId, LinkId)>>,
    names: BTreeMap<String, NodeId>,
    hosts: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("pods must be even and at least 2, got {0}")]
    BadPodCount(usize),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
}

impl PhysicalTopology {
    pub fn new() -> Self {
        PhysicalTopology {
            nodes: Vec::new(),
            links: Vec::new(),
            adj: Vec::new(),
            radj: Vec::new(),
            names: BTreeMap::new(),
            hosts: Vec::new(),
        }
    }

    pub fn add_node(&mut self, name: impl Into<String>, kind: NodeKind) -> NodeId {
        let name = name.into();
        assert!(!self.names.contains_key(&name), "duplicate node name {name}");
        let id = NodeId(self.nodes.len());
        self.names.insert(name.clone(), id);
        if matches!(kind, NodeKind::Host(_)) {
            self.hosts.push(id);
        }
        self.nodes.push(Node { id, name, kind });
        self.adj.push(Vec::new());
        self.radj.push(Vec::new());
        id
    }

    /// Adds one directed link.
    pub fn add_link(&mut self, from: NodeId, to: NodeId, capacity: f64) -> LinkId {
        let id = LinkId(self.links.len());
        self.links.push(Link { id, from, to, capacity });
        self.adj[from.0].push((to, id));
        self.adj[from.0].sort_unstable_by_key(|(n, _)| *n);
        self.radj[to.0].push((from, id));
        self.radj[to.0].sort_unstable_by_key(|(n, _)| *n);
        id
    }

    /// Adds both directions of a physical cable with the same capacity.
    pub fn add_duplex(&mut self, a: NodeId, b: NodeId, capacity: f64) -> (LinkId, LinkId) {
        (self.add_link(a, b, capacity), self.add_link(b, a, capacity))
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }
    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }
    pub fn links(&self) -> &[Link] {
        &self.links
    }
    pub fn hosts(&self) -> &[NodeId] {
        &self.hosts
    }
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
    pub fn link_count(&self) -> usize {
        self.links.len()
    }
    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        self.names.get(name).copied()
    }
    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, LinkId)] {
        &self.adj[id.0]
    }
    pub fn neighbors_in(&self, id: NodeId) -> &[(NodeId, LinkId)] {
        &self.radj[id.0]
    }

    pub fn host_resources(&self, id: NodeId) -> &HostResources {
        match &self.nodes[id.0].kind {
            NodeKind::Host(r) => r,
            _ => panic!("{} is not a host", self.nodes[id.0].name),
        }
    }

    /// Outbound interface capacity of a host: the smallest capacity among its
    /// outgoing access links.
    pub fn iface_out(&self, host: NodeId) -> f64 {
        self.adj[host.0]
            .iter()
            .map(|(_, l)| self.links[l.0].capacity)
            .fold(f64::INFINITY, f64::min)
    }

    /// Inbound interface capacity of a host.
    pub fn iface_in(&self, host: NodeId) -> f64 {
        self.radj[host.0]
            .iter()
            .map(|(_, l)| self.links[l.0].capacity)
            .fold(f64::INFINITY, f64::min)
    }
}

impl Default for PhysicalTopology {
    fn default() -> Self {
        Self::new()
    }
}

/// Bandwidth sharing policy between migration flows and reserved service
/// traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SharingPolicy {
    /// Migrations only get capacity left over by current service throughput.
    Free,
    /// Migrations get capacity minus the sum of service reservations.
    Reserved,
    /// Everyone shares proportionally to reservation when oversubscribed.
    Ratio,
}

impl SharingPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            SharingPolicy::Free => "free",
            SharingPolicy::Reserved => "reserved",
            SharingPolicy::Ratio => "ratio",
        }
    }
}

impl std::str::FromStr for SharingPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free" => Ok(SharingPolicy::Free),
            "reserved" => Ok(SharingPolicy::Reserved),
            "ratio" => Ok(SharingPolicy::Ratio),
            other => Err(format!("unknown sharing policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowClass {
    Service,
    Migration,
}

/// One flow competing for a link: its class and reserved/demanded rate.
#[derive(Debug, Clone, Copy)]
pub struct FlowDemand {
    pub class: FlowClass,
    pub demand: f64,
}

/// Per-link bandwidth split under a sharing policy. Returns one allocation per
/// demand, in input order. Allocations never exceed capacity in total and are
/// never negative.
pub fn share_bandwidth(policy: SharingPolicy, capacity: f64, demands: &[FlowDemand]) -> Vec<f64> {
    let total: f64 = demands.iter().map(|d| d.demand).sum();
    match policy {
        SharingPolicy::Ratio => {
            if total <= capacity {
                demands.iter().map(|d| d.demand).collect()
            } else {
                demands.iter().map(|d| capacity * d.demand / total).collect()
            }
        }
        SharingPolicy::Free | SharingPolicy::Reserved => {
            // Services take their reservations first (scaled down if they
            // alone oversubscribe the link); migrations split the leftover
            // proportionally to demand, capped at demand.
            let svc_total: f64 = demands
                .iter()
                .filter(|d| d.class == FlowClass::Service)
                .map(|d| d.demand)
                .sum();
            let svc_scale = if svc_total > capacity { capacity / svc_total } else { 1.0 };
            let leftover = (capacity - svc_total * svc_scale).max(0.0);
            let mig_total: f64 = demands
                .iter()
                .filter(|d| d.class == FlowClass::Migration)
                .map(|d| d.demand)
                .sum();
            demands
                .iter()
                .map(|d| match d.class {
                    FlowClass::Service => d.demand * svc_scale,
                    FlowClass::Migration => {
                        if mig_total <= leftover {
                            d.demand
                        } else if mig_total > 0.0 {
                            leftover * d.demand / mig_total
                        } else {
                            0.0
                        }
                    }
                })
                .collect()
        }
    }
}
