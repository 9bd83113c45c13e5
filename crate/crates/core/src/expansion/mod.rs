//! Small/large field decomposition, polymer functions, the cluster and
//! determinant expansions, reblocking `ℒ` and relevant-term extraction.

mod cluster;
mod detexp;
mod largefield;
mod polyfn;
mod reblock;
mod relevant;

pub use cluster::{
    brute_force_log_partition, cluster_expand, ClusterInstance, ClusterResult, CubeInteraction, MixedPoly,
};
pub use detexp::{det_expand, restrict_to_cubes};
pub use largefield::{
    cube_plaquettes, largefield_bound_audit, partition_of_unity, region_sum_identity, smallfield_indicator,
    swoosh_check, LargeFieldAudit, RegionDecomposition, SmallFieldThreshold, SwooshCheck,
};
pub use polyfn::{build_v0, mean_v0, DecayAudit, PolymerFunction, V0Pieces};
pub use reblock::{reblock_scale, NormGrowth};
pub use relevant::{aggregate_energy, extract_relevant, Relevant};
