//! Topology builders: k-ary FatTree and WAN with router-fronted clusters.

use serde::{Deserialize, Serialize};

use super::{HostResources, NodeId, NodeKind, PhysicalTopology, TopologyError};

/// Builds a standard three-tier k-ary FatTree.
///
/// `pods` is the arity k (must be even): (k/2)^2 core switches, k pods each
/// with k/2 aggregation and k/2 edge switches, and k^3/4 hosts. Host access
/// links run at `host_iface_bw`, switch-to-switch links at `link_bw` (bits/s).
pub fn build_fat_tree(
    pods: usize,
    host_iface_bw: f64,
    link_bw: f64,
    host: HostResources,
) -> Result<PhysicalTopology, TopologyError> {
    if pods < 2 || pods % 2 != 0 {
        return Err(TopologyError::BadPodCount(pods));
    }
    let k = pods;
    let half = k / 2;
    let mut topo = PhysicalTopology::new();

    let cores: Vec<NodeId> =
        (0..half * half).map(|i| topo.add_node(format!("c{i}"), NodeKind::Switch)).collect();

    let mut host_idx = 0usize;
    for p in 0..k {
        let aggs: Vec<NodeId> =
            (0..half).map(|a| topo.add_node(format!("p{p}a{a}"), NodeKind::Switch)).collect();
        let edges: Vec<NodeId> =
            (0..half).map(|e| topo.add_node(format!("p{p}e{e}"), NodeKind::Switch)).collect();
        for (a, &agg) in aggs.iter().enumerate() {
            // Aggregation switch a connects to core row a.
            for c in 0..half {
                topo.add_duplex(agg, cores[a * half + c], link_bw);
            }
            for &edge in &edges {
                topo.add_duplex(agg, edge, link_bw);
            }
        }
        for &edge in &edges {
            for _ in 0..half {
                let h = topo.add_node(format!("h{host_idx}"), NodeKind::Host(host));
                topo.add_duplex(edge, h, host_iface_bw);
                host_idx += 1;
            }
        }
    }
    Ok(topo)
}

/// Declarative WAN layout: routers interconnected by capacitated links, each
/// router fronting a local host cluster through a gateway link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WanSpec {
    pub routers: Vec<String>,
    pub links: Vec<WanLink>,
    /// Hosts attached behind each router, `(router, count)`.
    pub clusters: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WanLink {
    pub a: String,
    pub b: String,
    /// Bits/s; defaults to 10 Gbps when omitted.
    #[serde(default)]
    pub capacity: Option<f64>,
}

pub const WAN_ROUTER_BW: f64 = 10e9;
pub const WAN_GATEWAY_BW: f64 = 40e9;

/// Builds an inter-data-center WAN. Router links default to 10 Gbps, gateway
/// links to `gateway_bw` (40 Gbps when 0 is passed). Hosts behind router `r`
/// are named `r-h0`, `r-h1`, ...
pub fn build_wan(
    spec: &WanSpec,
    gateway_bw: f64,
    host: HostResources,
) -> Result<PhysicalTopology, TopologyError> {
    let gateway_bw = if gateway_bw > 0.0 { gateway_bw } else { WAN_GATEWAY_BW };
    let mut topo = PhysicalTopology::new();
    for r in &spec.routers {
        if topo.lookup(r).is_some() {
            return Err(TopologyError::DuplicateNode(r.clone()));
        }
        topo.add_node(r.clone(), NodeKind::Router);
    }
    for l in &spec.links {
        let a = topo.lookup(&l.a).ok_or_else(|| TopologyError::UnknownNode(l.a.clone()))?;
        let b = topo.lookup(&l.b).ok_or_else(|| TopologyError::UnknownNode(l.b.clone()))?;
        topo.add_duplex(a, b, l.capacity.unwrap_or(WAN_ROUTER_BW));
    }
    for (router, count) in &spec.clusters {
        let r = topo.lookup(router).ok_or_else(|| TopologyError::UnknownNode(router.clone()))?;
        for i in 0..*count {
            let h = topo.add_node(format!("{router}-h{i}"), NodeKind::Host(host));
            topo.add_duplex(r, h, gateway_bw);
        }
    }
    Ok(topo)
}

/// Fixture modeled on the AARNET inter-capital backbone: 10 Gbps uniform
/// router links over the published connectivity, one small cluster per city.
pub fn aarnet_spec(hosts_per_city: usize) -> WanSpec {
    let cities = [
        "adelaide", "brisbane", "cairns", "canberra", "darwin", "hobart", "melbourne", "perth",
        "sydney", "townsville",
    ];
    let links = [
        ("adelaide", "melbourne"),
        ("adelaide", "perth"),
        ("adelaide", "darwin"),
        ("adelaide", "sydney"),
        ("brisbane", "sydney"),
        ("brisbane", "townsville"),
        ("cairns", "townsville"),
        ("canberra", "melbourne"),
        ("canberra", "sydney"),
        ("hobart", "melbourne"),
        ("melbourne", "sydney"),
        ("perth", "darwin"),
    ];
    WanSpec {
        routers: cities.iter().map(|c| c.to_string()).collect(),
        links: links
            .iter()
            .map(|(a, b)| WanLink { a: a.to_string(), b: b.to_string(), capacity: None })
            .collect(),
        clusters: cities.iter().map(|c| (c.to_string(), hosts_per_city)).collect(),
    }
}
