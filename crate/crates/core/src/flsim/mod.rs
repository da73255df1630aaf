//! Desk-scale FedAvg simulation with compressed client updates.

mod fedavg;
mod net;
mod run;
mod task;

pub use fedavg::fedavg_aggregate;
pub use net::{evaluate, init_tinynet, local_train, loss_and_grad, Params, TinyNetDims};
pub use run::{
    run_experiment, run_round, sweep_epsilon, ClientMetrics, ExperimentReport, FLConfig,
    RoundMetrics, Simulation, Timing,
};
pub use task::{gen_task, Dataset, Partitioning, SyntheticTask, TaskData};

/// Stable per-(seed, stream) sub-seed.
pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
