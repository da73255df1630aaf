//! The FedAvg round loop.
//!
//! Per round every client trains locally, compresses its state dict into an
//! update (unless no codec is configured), sends it over its emulated link,
//! and the server decompresses, averages by sample count and evaluates.
//! Clients are processed in index order and each owns its link, so a
//! round's communication time is the slowest client's
//! `t_C + transfer + t_D`.

use alloc::vec;
use alloc::vec::Vec;

use super::net::{evaluate, init_tinynet, local_train, TinyNetDims};
use super::task::{gen_task, SyntheticTask, TaskData};
use super::{fedavg_aggregate, mix_seed};
use crate::ebcodec::{CodecBenchRecord, CodecSpec};
use crate::netsim::cost::emulate_send_at;
use crate::netsim::{transfer_time_at, Clock, GridCell, NetworkModel, SelectionGrid, VirtualClock};
use crate::pipeline::{RoutingRule, UpdateCodec};
use crate::stats::mean;
use crate::tensor::{checkpoint_size, decode_checkpoint, encode_checkpoint, flatten, StateDict};
use crate::{Error, Result};

/// How compute and transfer time are accounted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Timing {
    /// Compress / decompress time is `S / throughput`; transfers advance a
    /// per-client virtual clock. Fully deterministic.
    Virtual { compress_bytes_per_sec: f64, decompress_bytes_per_sec: f64 },
    /// Compute is timed and transfers sleep on the caller's clock.
    Real,
}

impl Default for Timing {
    fn default() -> Self {
        Timing::Virtual { compress_bytes_per_sec: 25e6, decompress_bytes_per_sec: 50e6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FLConfig {
    pub clients: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub hidden: usize,
    /// `None` sends raw `FSZT` checkpoints.
    pub codec: Option<CodecSpec>,
    pub rule: RoutingRule,
    pub network: NetworkModel,
    pub timing: Timing,
    pub task: SyntheticTask,
    pub seed: u64,
}

impl Default for FLConfig {
    fn default() -> Self {
        Self {
            clients: 4,
            rounds: 20,
            local_epochs: 1,
            lr: 0.05,
            batch_size: 32,
            hidden: 64,
            codec: Some(CodecSpec::pq_rel(1e-2)),
            rule: RoutingRule::default(),
            network: NetworkModel::new(10e6),
            timing: Timing::default(),
            task: SyntheticTask::default(),
            seed: 7,
        }
    }
}

impl FLConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clients == 0 || self.rounds == 0 || self.local_epochs == 0 {
            return Err(Error::InvalidConfig("clients, rounds and local epochs must be at least 1"));
        }
        if self.batch_size == 0 || self.hidden == 0 || !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidConfig("batch size and hidden width must be positive, lr non-negative"));
        }
        if let Timing::Virtual { compress_bytes_per_sec: c, decompress_bytes_per_sec: d } = self.timing {
            if !(c > 0.0 && d > 0.0) {
                return Err(Error::InvalidConfig("virtual codec throughputs must be positive"));
            }
        }
        if let Some(spec) = &self.codec {
            spec.validate()?;
        }
        self.rule.validate()?;
        self.network.validate()
    }

    pub fn dims(&self) -> TinyNetDims {
        TinyNetDims { input: self.task.input_dim, hidden: self.hidden, classes: self.task.num_classes }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientMetrics {
    pub client: usize,
    pub samples: usize,
    pub compress_seconds: f64,
    pub decompress_seconds: f64,
    /// `S`: uncompressed checkpoint size.
    pub original_bytes: usize,
    /// `S'`: bytes actually sent.
    pub compressed_bytes: usize,
    pub transfer_seconds: f64,
    /// Over lossy-routed elements; zero when nothing went lossy.
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    /// Largest per-tensor absolute bound among lossy entries.
    pub max_eps_abs: f64,
}

impl ClientMetrics {
    pub fn comm_seconds(&self) -> f64 {
        self.compress_seconds + self.transfer_seconds + self.decompress_seconds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub accuracy: f64,
    pub clients: Vec<ClientMetrics>,
    /// Slowest client's measured `t_C + transfer + t_D`.
    pub comm_seconds: f64,
    /// Slowest client's `t_C + t_D + S'·8/B`.
    pub predicted_comm_seconds: f64,
    pub wall_clock_seconds: f64,
}

impl RoundMetrics {
    pub fn original_bytes(&self) -> usize {
        self.clients.iter().map(|c| c.original_bytes).sum()
    }

    pub fn compressed_bytes(&self) -> usize {
        self.clients.iter().map(|c| c.compressed_bytes).sum()
    }

    pub fn ratio(&self) -> f64 {
        self.original_bytes() as f64 / self.compressed_bytes() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub codec: Option<CodecSpec>,
    pub rounds: Vec<RoundMetrics>,
    pub final_accuracy: f64,
    pub total_comm_seconds: f64,
    pub total_original_bytes: usize,
    pub total_compressed_bytes: usize,
}

impl ExperimentReport {
    pub fn mean_ratio(&self) -> f64 {
        self.total_original_bytes as f64 / self.total_compressed_bytes as f64
    }
}

/// A configured simulation with its generated data.
pub struct Simulation {
    cfg: FLConfig,
    data: TaskData,
    codec: Option<UpdateCodec>,
}

impl Simulation {
    pub fn new(cfg: FLConfig) -> Result<Self> {
        cfg.validate()?;
        let data = gen_task(&cfg.task, cfg.clients)?;
        let codec = cfg.codec.map(|spec| UpdateCodec::new(spec, cfg.rule.clone()));
        Ok(Self { cfg, data, codec })
    }

    pub fn config(&self) -> &FLConfig {
        &self.cfg
    }

    pub fn data(&self) -> &TaskData {
        &self.data
    }

    pub fn initial_state(&self) -> StateDict {
        init_tinynet(self.cfg.dims(), mix_seed(self.cfg.seed, 0, 0))
    }

    fn client_round(
        &self,
        client: usize,
        global: &StateDict,
        round: usize,
        wall: &dyn Clock,
    ) -> Result<(StateDict, ClientMetrics)> {
        let cfg = &self.cfg;
        let data = &self.data.clients[client];
        let local = local_train(
            global,
            data,
            cfg.local_epochs,
            cfg.lr,
            cfg.batch_size,
            mix_seed(cfg.seed, round as u64 + 1, client as u64 + 1),
        )?;
        let bps = cfg.network.bandwidth_for(client);
        let lane = VirtualClock::new();
        let link: &dyn Clock = match cfg.timing {
            Timing::Virtual { .. } => &lane,
            Timing::Real => wall,
        };
        let original_bytes = checkpoint_size(&local);
        let mut m = ClientMetrics {
            client,
            samples: data.len(),
            compress_seconds: 0.0,
            decompress_seconds: 0.0,
            original_bytes,
            compressed_bytes: original_bytes,
            transfer_seconds: 0.0,
            max_abs_error: 0.0,
            mean_abs_error: 0.0,
            max_eps_abs: 0.0,
        };

        let Some(codec) = &self.codec else {
            let bytes = encode_checkpoint(&local);
            m.transfer_seconds = emulate_send_at(bytes.len() as f64, bps, link);
            return Ok((decode_checkpoint(&bytes)?, m));
        };

        let t0 = wall.now();
        let update = codec.compress(&local)?;
        let bytes = update.to_bytes();
        let t1 = wall.now();
        m.compressed_bytes = bytes.len();
        m.transfer_seconds = emulate_send_at(bytes.len() as f64, bps, link);
        let t2 = wall.now();
        let received = codec.decompress(&bytes)?;
        let t3 = wall.now();
        match cfg.timing {
            Timing::Virtual { compress_bytes_per_sec, decompress_bytes_per_sec } => {
                m.compress_seconds = original_bytes as f64 / compress_bytes_per_sec;
                m.decompress_seconds = original_bytes as f64 / decompress_bytes_per_sec;
            }
            Timing::Real => {
                m.compress_seconds = t1 - t0;
                m.decompress_seconds = t3 - t2;
            }
        }

        let mut err_sum = 0.0;
        let mut err_n = 0usize;
        for (name, eps) in update.lossy_bounds()? {
            let a = flatten(local.get(&name).expect("entry exists"))?;
            let b = flatten(received.get(&name).expect("entry exists"))?;
            for (&x, &y) in a.iter().zip(b) {
                let e = (f64::from(x) - f64::from(y)).abs();
                m.max_abs_error = m.max_abs_error.max(e);
                err_sum += e;
            }
            err_n += a.len();
            m.max_eps_abs = m.max_eps_abs.max(eps);
        }
        if err_n > 0 {
            m.mean_abs_error = err_sum / err_n as f64;
        }
        Ok((received, m))
    }

    pub fn run_round(
        &self,
        global: &StateDict,
        round: usize,
        wall: &dyn Clock,
    ) -> Result<(StateDict, RoundMetrics)> {
        let start = wall.now();
        let mut received = Vec::with_capacity(self.cfg.clients);
        let mut clients = Vec::with_capacity(self.cfg.clients);
        for c in 0..self.cfg.clients {
            let (state, m) = self.client_round(c, global, round, wall)?;
            received.push(state);
            clients.push(m);
        }
        let weights: Vec<f64> = clients.iter().map(|m| m.samples as f64).collect();
        let next = fedavg_aggregate(&received, &weights)?;
        let accuracy = evaluate(&next, &self.data.eval)?;
        let comm_seconds = clients.iter().map(ClientMetrics::comm_seconds).fold(0.0, f64::max);
        let predicted_comm_seconds = clients
            .iter()
            .map(|m| {
                m.compress_seconds
                    + m.decompress_seconds
                    + transfer_time_at(m.compressed_bytes as f64, self.cfg.network.bandwidth_for(m.client))
            })
            .fold(0.0, f64::max);
        let wall_clock_seconds = match self.cfg.timing {
            Timing::Virtual { .. } => comm_seconds,
            Timing::Real => wall.now() - start,
        };
        Ok((
            next,
            RoundMetrics { round, accuracy, clients, comm_seconds, predicted_comm_seconds, wall_clock_seconds },
        ))
    }

    pub fn run(&self, wall: &dyn Clock) -> Result<ExperimentReport> {
        let mut state = self.initial_state();
        let mut rounds = Vec::with_capacity(self.cfg.rounds);
        for r in 0..self.cfg.rounds {
            let (next, m) = self.run_round(&state, r, wall)?;
            state = next;
            rounds.push(m);
        }
        Ok(ExperimentReport {
            codec: self.cfg.codec,
            final_accuracy: rounds.last().map_or(0.0, |m| m.accuracy),
            total_comm_seconds: rounds.iter().map(|m| m.comm_seconds).sum(),
            total_original_bytes: rounds.iter().map(RoundMetrics::original_bytes).sum(),
            total_compressed_bytes: rounds.iter().map(RoundMetrics::compressed_bytes).sum(),
            rounds,
        })
    }
}

/// One round from `global_state`; regenerates the task data from `cfg`.
pub fn run_round(
    cfg: &FLConfig,
    global_state: &StateDict,
    round: usize,
    wall: &dyn Clock,
) -> Result<(StateDict, RoundMetrics)> {
    Simulation::new(cfg.clone())?.run_round(global_state, round, wall)
}

pub fn run_experiment(cfg: &FLConfig, wall: &dyn Clock) -> Result<ExperimentReport> {
    Simulation::new(cfg.clone())?.run(wall)
}

/// Runs an uncompressed baseline plus one experiment per epsilon and
/// collects them as a one-codec selection grid.
pub fn sweep_epsilon(cfg: &FLConfig, epsilons: &[f64], wall: &dyn Clock) -> Result<SelectionGrid> {
    if epsilons.is_empty() {
        return Err(Error::InvalidConfig("epsilon list is empty"));
    }
    let base_spec = cfg.codec.unwrap_or_else(|| CodecSpec::pq_rel(1e-2));
    let baseline = run_experiment(&FLConfig { codec: None, ..cfg.clone() }, wall)?;
    let mut cells = Vec::with_capacity(epsilons.len());
    let mut original_elements = 0;
    for &eps in epsilons {
        let spec = base_spec.with_epsilon(eps);
        let sim = Simulation::new(FLConfig { codec: Some(spec), ..cfg.clone() })?;
        original_elements = sim.initial_state().total_elements();
        let report = sim.run(wall)?;
        let all: Vec<&ClientMetrics> = report.rounds.iter().flat_map(|r| &r.clients).collect();
        let n = all.len() as f64;
        let record = CodecBenchRecord {
            codec: spec.codec,
            epsilon: eps,
            eps_abs: all.iter().map(|m| m.max_eps_abs).fold(0.0, f64::max),
            compress_seconds: mean(&all.iter().map(|m| m.compress_seconds).collect::<Vec<_>>()),
            decompress_seconds: mean(&all.iter().map(|m| m.decompress_seconds).collect::<Vec<_>>()),
            original_bytes: libm::round(report.total_original_bytes as f64 / n) as usize,
            compressed_bytes: libm::round(report.total_compressed_bytes as f64 / n) as usize,
            ratio: report.mean_ratio(),
            max_abs_error: all.iter().map(|m| m.max_abs_error).fold(0.0, f64::max),
            mean_abs_error: mean(&all.iter().map(|m| m.mean_abs_error).collect::<Vec<_>>()),
        };
        cells.push(GridCell { spec, record, accuracy: Some(report.final_accuracy) });
    }
    let original_bytes = baseline.total_original_bytes / (cfg.clients * cfg.rounds);
    let candidates = vec![base_spec.with_epsilon(epsilons[0])];
    SelectionGrid::new(candidates, epsilons.to_vec(), cells, original_bytes, original_elements)?
        .with_baseline(baseline.final_accuracy)
}
