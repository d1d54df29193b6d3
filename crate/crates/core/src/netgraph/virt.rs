//! Virtual topologies: instances with flavors, reserved virtual links that
//! reroute after each placement change, and residual-bandwidth accounting.

use serde::{Deserialize, Serialize};

use super::{shortest_path, LinkId, NodeId, PhysicalTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VlinkId(pub usize);

/// Instance size class (memory in GB, CPU cores, disk in GB).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flavor {
    pub name: String,
    pub mem_gb: f64,
    pub cores: u32,
    pub disk_gb: f64,
    /// Million instructions per network operation; only meaningful for VNFs.
    #[serde(default)]
    pub mipo: Option<f64>,
}

impl Flavor {
    pub fn memory_bits(&self) -> f64 {
        self.mem_gb * 8e9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VtopoKind {
    Single,
    StarToSlave,
    Sfc,
    Wiki,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VirtualInstance {
    pub id: InstanceId,
    pub name: String,
    pub flavor: Flavor,
    pub host: NodeId,
    /// Average dirty page rate, bits/s.
    pub dirty_rate: f64,
    pub vtopo: usize,
}

/// Reserved bandwidth between two instances, routed over the physical network
/// whenever its endpoints sit on different hosts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VirtualLink {
    pub id: VlinkId,
    pub from: InstanceId,
    pub to: InstanceId,
    /// Reserved bandwidth, bits/s.
    pub reserved: f64,
    /// Current physical route; empty when the endpoints are co-located.
    pub route: Vec<LinkId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VirtualTopology {
    pub name: String,
    pub kind: VtopoKind,
    pub deadline: Option<f64>,
    pub instances: Vec<InstanceId>,
    pub links: Vec<VlinkId>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlacementError {
    #[error("host `{host}` lacks {resource} for instance `{instance}`")]
    Capacity { host: String, instance: String, resource: &'static str },
    #[error("no route between `{0}` and `{1}`")]
    NoRoute(String, String),
}

/// All deployed virtual topologies plus the per-physical-link sum of routed
/// reservations. Owned and mutated by a single simulation run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Deployment {
    pub instances: Vec<VirtualInstance>,
    pub vlinks: Vec<VirtualLink>,
    pub vtopos: Vec<VirtualTopology>,
    /// Per physical link: total reserved service bandwidth routed over it.
    pub reserved: Vec<f64>,
}

impl Deployment {
    pub fn new(topo: &PhysicalTopology) -> Self {
        Deployment {
            instances: Vec::new(),
            vlinks: Vec::new(),
            vtopos: Vec::new(),
            reserved: vec![0.0; topo.link_count()],
        }
    }

    pub fn instance(&self, id: InstanceId) -> &VirtualInstance {
        &self.instances[id.0]
    }
    pub fn vlink(&self, id: VlinkId) -> &VirtualLink {
        &self.vlinks[id.0]
    }

    pub fn add_instance(
        &mut self,
        name: impl Into<String>,
        flavor: Flavor,
        host: NodeId,
        dirty_rate: f64,
        vtopo: usize,
    ) -> InstanceId {
        let id = InstanceId(self.instances.len());
        self.instances.push(VirtualInstance { id, name: name.into(), flavor, host, dirty_rate, vtopo });
        id
    }

    /// Adds and routes a virtual link.
    pub fn add_vlink(
        &mut self,
        topo: &PhysicalTopology,
        from: InstanceId,
        to: InstanceId,
        bw: f64,
    ) -> Result<VlinkId, PlacementError> {
        let id = VlinkId(self.vlinks.len());
        self.vlinks.push(VirtualLink { id, from, to, reserved: bw, route: Vec::new() });
        self.reroute_vlink(topo, id)?;
        Ok(id)
    }

    /// Residual bandwidth of a physical link: capacity minus routed service
    /// reservations.
    pub fn residual(&self, topo: &PhysicalTopology, link: LinkId) -> f64 {
        (topo.link(link).capacity - self.reserved[link.0]).max(0.0)
    }

    /// Bottleneck residual along a path.
    pub fn path_residual(&self, topo: &PhysicalTopology, links: &[LinkId]) -> f64 {
        links.iter().map(|l| self.residual(topo, *l)).fold(f64::INFINITY, f64::min)
    }

    /// Instances currently placed on a host.
    pub fn placed_on(&self, host: NodeId) -> impl Iterator<Item = &VirtualInstance> {
        self.instances.iter().filter(move |i| i.host == host)
    }

    fn free_capacity_for(
        &self,
        topo: &PhysicalTopology,
        host: NodeId,
        inst: InstanceId,
    ) -> Result<(), PlacementError> {
        let res = topo.host_resources(host);
        let mut cores = 0u32;
        let mut ram = 0.0;
        let mut disk = 0.0;
        for i in self.placed_on(host) {
            if i.id == inst {
                continue;
            }
            cores += i.flavor.cores;
            ram += i.flavor.mem_gb;
            disk += i.flavor.disk_gb;
        }
        let f = &self.instances[inst.0].flavor;
        let name = || self.instances[inst.0].name.clone();
        let hostname = || topo.node(host).name.clone();
        if cores + f.cores > res.cores {
            return Err(PlacementError::Capacity { host: hostname(), instance: name(), resource: "cores" });
        }
        if ram + f.mem_gb > res.ram_gb {
            return Err(PlacementError::Capacity { host: hostname(), instance: name(), resource: "RAM" });
        }
        if disk + f.disk_gb > res.storage_gb {
            return Err(PlacementError::Capacity { host: hostname(), instance: name(), resource: "storage" });
        }
        Ok(())
    }

    fn reroute_vlink(&mut self, topo: &PhysicalTopology, id: VlinkId) -> Result<(), PlacementError> {
        let (from, to, reserved) = {
            let v = &self.vlinks[id.0];
            (self.instances[v.from.0].host, self.instances[v.to.0].host, v.reserved)
        };
        let old = std::mem::take(&mut self.vlinks[id.0].route);
        for l in &old {
            self.reserved[l.0] -= reserved;
        }
        if from != to {
            let path = shortest_path(topo, from, to).ok_or_else(|| {
                PlacementError::NoRoute(topo.node(from).name.clone(), topo.node(to).name.clone())
            })?;
            for l in &path.links {
                self.reserved[l.0] += reserved;
            }
            self.vlinks[id.0].route = path.links;
        }
        Ok(())
    }

    /// Moves an instance to a new host and reroutes every incident virtual
    /// link. Rejects the move (state unchanged) when the host lacks capacity.
    pub fn commit_placement(
        &mut self,
        topo: &PhysicalTopology,
        inst: InstanceId,
        new_host: NodeId,
    ) -> Result<(), PlacementError> {
        self.free_capacity_for(topo, new_host, inst)?;
        self.instances[inst.0].host = new_host;
        let incident: Vec<VlinkId> = self
            .vlinks
            .iter()
            .filter(|v| v.from == inst || v.to == inst)
            .map(|v| v.id)
            .collect();
        for v in incident {
            self.reroute_vlink(topo, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{build_fat_tree, HostResources, NodeKind};

    fn flavor(name: &str, mem: f64, cores: u32) -> Flavor {
        Flavor { name: name.into(), mem_gb: mem, cores, disk_gb: 10.0, mipo: None }
    }

    fn two_host_topo() -> PhysicalTopology {
        let mut t = PhysicalTopology::new();
        let s = t.add_node("s0", NodeKind::Switch);
        for i in 0..2 {
            let h = t.add_node(format!("h{i}"), NodeKind::Host(HostResources::default()));
            t.add_duplex(s, h, 10e9);
        }
        t
    }

    #[test]
    fn colocated_vlink_consumes_no_bandwidth() {
        let t = two_host_topo();
        let h0 = t.lookup("h0").unwrap();
        let h1 = t.lookup("h1").unwrap();
        let mut d = Deployment::new(&t);
        let a = d.add_instance("a", flavor("small", 4.0, 2), h0, 0.0, 0);
        let b = d.add_instance("b", flavor("small", 4.0, 2), h1, 0.0, 0);
        d.add_vlink(&t, a, b, 1e9).unwrap();
        assert!(d.reserved.iter().any(|r| *r == 1e9));
        d.commit_placement(&t, a, h1).unwrap();
        assert!(d.reserved.iter().all(|r| *r == 0.0));
        assert!(d.vlinks[0].route.is_empty());
    }

    #[test]
    fn consolidation_frees_exactly_the_reserved_bandwidth() {
        let t = build_fat_tree(4, 10e9, 10e9, HostResources::default()).unwrap();
        let h0 = t.lookup("h0").unwrap();
        let h4 = t.lookup("h4").unwrap();
        let mut d = Deployment::new(&t);
        let a = d.add_instance("a", flavor("small", 4.0, 2), h0, 0.0, 0);
        let b = d.add_instance("b", flavor("small", 4.0, 2), h4, 0.0, 0);
        d.add_vlink(&t, a, b, 2e9).unwrap();
        let loaded: Vec<usize> =
            d.reserved.iter().enumerate().filter(|(_, r)| **r > 0.0).map(|(i, _)| i).collect();
        assert_eq!(loaded.len(), 6); // cross-pod shortest path
        d.commit_placement(&t, b, h0).unwrap();
        assert!(d.reserved.iter().all(|r| *r == 0.0));
        // link count and endpoints preserved
        assert_eq!(d.vlinks.len(), 1);
        assert_eq!((d.vlinks[0].from, d.vlinks[0].to), (a, b));
    }

    #[test]
    fn rerouted_reservations_change_residuals() {
        let t = two_host_topo();
        let h0 = t.lookup("h0").unwrap();
        let h1 = t.lookup("h1").unwrap();
        let mut d = Deployment::new(&t);
        let a = d.add_instance("a", flavor("small", 4.0, 2), h0, 0.0, 0);
        let b = d.add_instance("b", flavor("small", 4.0, 2), h0, 0.0, 0);
        d.add_vlink(&t, a, b, 3e9).unwrap();
        let h1_in: Vec<LinkId> = t.neighbors_in(h1).iter().map(|(_, l)| *l).collect();
        assert_eq!(d.path_residual(&t, &h1_in), 10e9);
        d.commit_placement(&t, b, h1).unwrap();
        assert_eq!(d.path_residual(&t, &h1_in), 7e9);
    }

    #[test]
    fn capacity_violation_rejected_without_state_change() {
        let t = two_host_topo();
        let h0 = t.lookup("h0").unwrap();
        let h1 = t.lookup("h1").unwrap();
        let mut d = Deployment::new(&t);
        let big = d.add_instance("big", flavor("huge", 4.0, 20), h0, 0.0, 0);
        let other = d.add_instance("other", flavor("huge2", 4.0, 10), h1, 0.0, 0);
        let _ = other;
        let err = d.commit_placement(&t, big, h1);
        assert!(matches!(err, Err(PlacementError::Capacity { .. })));
        assert_eq!(d.instance(big).host, h0);
    }
}
