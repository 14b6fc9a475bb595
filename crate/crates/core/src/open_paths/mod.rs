//! Open paths of the critical system: exact transform and tree sampling.

mod coupling;
mod mc;
mod probes;
mod transform;
mod tree;

pub use coupling::{coupling_check, CouplingReport, CouplingRow};
pub use mc::{mc_estimate, mc_estimate_vec, sample_rng, McEstimate};
pub use probes::{
    deviation_probe, transform_mc_check, DeviationReport, McSettings, SmallDeviationRow,
    TransformCheck,
};
pub use transform::{
    transform_init, transform_step, transform_trace, OpenPathTransform, TransformRecord,
};
pub use tree::{
    enumerate_definitional, fold_leaves, sample_coupled, sample_yn_pair, CoupledSample,
    CoupledSampler, CriticalSampler, JointLaw, TreeSample, YnSample, BLOCK_ATOM_CAP,
    DEFAULT_NODE_BUDGET, DEFINITIONAL_LEAF_CAP,
};
