//! Workload generators shared by the criterion benchmarks.

use migsim_core::migmodel::MigrationSpec;
use migsim_core::netgraph::{build_fat_tree, Deployment, Flavor, HostResources, PhysicalTopology};
use migsim_core::planner::{DeadlineSpec, MigrationTask, TaskId};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// An 8-pod FatTree (128 hosts) with `n` random migrations between distinct
/// hosts: 1-8 GB of memory, 50-500 Mbps dirty rates.
pub fn planner_workload(seed: u64, n: usize) -> (PhysicalTopology, Deployment, Vec<MigrationTask>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topo = build_fat_tree(8, 10e9, 10e9, HostResources::default()).unwrap();
    let hosts: Vec<_> = topo.hosts().to_vec();
    let mut dep = Deployment::new(&topo);
    let mut tasks = Vec::with_capacity(n);
    for i in 0..n {
        let src = hosts[rng.gen_range(0..hosts.len())];
        let dst = loop {
            let d = hosts[rng.gen_range(0..hosts.len())];
            if d != src {
                break d;
            }
        };
        let mem_gb = rng.gen_range(1.0..8.0);
        let dirty = rng.gen_range(50e6..500e6);
        let flavor = Flavor { name: "f".into(), mem_gb, cores: 1, disk_gb: 1.0, mipo: None };
        let inst = dep.add_instance(format!("v{i}"), flavor, src, dirty, 0);
        tasks.push(MigrationTask::new(
            TaskId(i),
            inst,
            src,
            dst,
            MigrationSpec::new(mem_gb * 8e9, dirty),
            DeadlineSpec::None,
        ));
    }
    (topo, dep, tasks)
}
