//! Codec and error-bound selection over a benchmarked grid.
//!
//! Codec selection keeps cells with `0 < T < S·8/B` and `1 <= R <= S_elems`,
//! builds the (max R, min T) Pareto front and picks from it by policy.
//! Error-bound selection minimizes the summed per-client end-to-end time
//! subject to an accuracy-gap constraint.

use alloc::vec::Vec;
use core::cmp::Ordering;

use super::cost::transfer_time_at;
use super::NetworkModel;
use crate::ebcodec::{CodecBenchRecord, CodecSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub spec: CodecSpec,
    pub record: CodecBenchRecord,
    /// Top-1 accuracy reached with this cell, if measured.
    pub accuracy: Option<f64>,
}

/// Row-major (candidate, epsilon) grid of bench results.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionGrid {
    pub candidates: Vec<CodecSpec>,
    pub epsilons: Vec<f64>,
    pub cells: Vec<GridCell>,
    /// Accuracy without compression.
    pub baseline_accuracy: Option<f64>,
    pub original_bytes: usize,
    pub original_elements: usize,
}

impl SelectionGrid {
    pub fn new(
        candidates: Vec<CodecSpec>,
        epsilons: Vec<f64>,
        cells: Vec<GridCell>,
        original_bytes: usize,
        original_elements: usize,
    ) -> Result<Self> {
        if cells.len() != candidates.len() * epsilons.len() {
            return Err(Error::InvalidConfig("grid is not rectangular"));
        }
        let grid = Self { candidates, epsilons, cells, baseline_accuracy: None, original_bytes, original_elements };
        grid.check_accuracies()?;
        Ok(grid)
    }

    pub fn with_baseline(mut self, accuracy: f64) -> Result<Self> {
        self.baseline_accuracy = Some(accuracy);
        self.check_accuracies()?;
        Ok(self)
    }

    fn check_accuracies(&self) -> Result<()> {
        let in_unit = |a: f64| (0.0..=1.0).contains(&a);
        let cells_ok = self.cells.iter().filter_map(|c| c.accuracy).all(in_unit);
        if !cells_ok || !self.baseline_accuracy.is_none_or(in_unit) {
            return Err(Error::InvalidConfig("accuracies must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn cell(&self, candidate: usize, epsilon: usize) -> &GridCell {
        &self.cells[candidate * self.epsilons.len() + epsilon]
    }

    fn feasible_for_codec(&self, cell: &GridCell, bps: f64) -> bool {
        let t = cell.record.overhead_seconds();
        let r = cell.record.ratio;
        0.0 < t
            && t < transfer_time_at(self.original_bytes as f64, bps)
            && 1.0 <= r
            && r <= self.original_elements as f64
    }

    fn end_to_end(&self, cell: &GridCell, bps: f64) -> f64 {
        cell.record.overhead_seconds() + transfer_time_at(cell.record.compressed_bytes as f64, bps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionPolicy {
    /// Minimize `t_C + t_D + S'·8/B`.
    #[default]
    MinEndToEnd,
    MaxRatio,
    MinOverhead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub cell: usize,
    pub spec: CodecSpec,
    pub objective: f64,
}

/// Indices of feasible cells not dominated in (higher ratio, lower overhead).
pub fn pareto_front(grid: &SelectionGrid, model: &NetworkModel) -> Vec<usize> {
    let bps = model.bandwidth_bps;
    let feasible: Vec<usize> =
        (0..grid.cells.len()).filter(|&i| grid.feasible_for_codec(&grid.cells[i], bps)).collect();
    feasible
        .iter()
        .copied()
        .filter(|&i| {
            let a = &grid.cells[i].record;
            !feasible.iter().any(|&j| {
                let b = &grid.cells[j].record;
                b.ratio >= a.ratio
                    && b.overhead_seconds() <= a.overhead_seconds()
                    && (b.ratio > a.ratio || b.overhead_seconds() < a.overhead_seconds())
            })
        })
        .collect()
}

pub fn select_codec(
    grid: &SelectionGrid,
    model: &NetworkModel,
    policy: SelectionPolicy,
) -> Result<Selection> {
    model.validate()?;
    let bps = model.bandwidth_bps;
    let score = |i: usize| {
        let c = &grid.cells[i];
        match policy {
            SelectionPolicy::MinEndToEnd => grid.end_to_end(c, bps),
            SelectionPolicy::MaxRatio => -c.record.ratio,
            SelectionPolicy::MinOverhead => c.record.overhead_seconds(),
        }
    };
    let best = pareto_front(grid, model)
        .into_iter()
        .min_by(|&a, &b| {
            let (ca, cb) = (&grid.cells[a], &grid.cells[b]);
            score(a)
                .total_cmp(&score(b))
                .then(cb.record.ratio.total_cmp(&ca.record.ratio))
                .then(ca.spec.codec.cmp(&cb.spec.codec))
                .then(a.cmp(&b))
        })
        .ok_or(Error::NoFeasibleCandidate)?;
    let cell = &grid.cells[best];
    Ok(Selection { cell: best, spec: cell.spec, objective: score(best) })
}

/// Summed per-client end-to-end time of a cell, or `None` if any client
/// would be slower than sending raw.
fn fleet_cost(grid: &SelectionGrid, cell: &GridCell, model: &NetworkModel, clients: usize) -> Option<f64> {
    let mut total = 0.0;
    for i in 0..clients {
        let bps = model.bandwidth_for(i);
        let p = grid.end_to_end(cell, bps);
        if !(0.0 < p && p < transfer_time_at(grid.original_bytes as f64, bps)) {
            return None;
        }
        total += p;
    }
    Some(total)
}

/// Among cells with `|I' - I(eps)| <= accuracy_slack` and feasible client
/// costs, the one minimizing the summed cost; ties go to larger epsilon.
pub fn select_epsilon(
    grid: &SelectionGrid,
    model: &NetworkModel,
    clients: usize,
    accuracy_slack: f64,
) -> Result<Selection> {
    model.validate()?;
    if clients == 0 {
        return Err(Error::InvalidConfig("at least one client is required"));
    }
    if accuracy_slack.is_nan() || accuracy_slack < 0.0 {
        return Err(Error::InvalidConfig("accuracy slack must be non-negative"));
    }
    let baseline = grid
        .baseline_accuracy
        .ok_or(Error::InvalidConfig("grid has no baseline accuracy"))?;
    let mut best: Option<(usize, f64)> = None;
    for (i, cell) in grid.cells.iter().enumerate() {
        let Some(acc) = cell.accuracy else { continue };
        if (baseline - acc).abs() > accuracy_slack {
            continue;
        }
        let Some(cost) = fleet_cost(grid, cell, model, clients) else { continue };
        let better = match best {
            None => true,
            Some((j, bc)) => {
                let other = &grid.cells[j];
                match cost.total_cmp(&bc) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        match cell.spec.bound.epsilon.total_cmp(&other.spec.bound.epsilon) {
                            Ordering::Greater => true,
                            Ordering::Less => false,
                            Ordering::Equal => cell.spec.codec < other.spec.codec,
                        }
                    }
                }
            }
        };
        if better {
            best = Some((i, cost));
        }
    }
    let (i, cost) = best.ok_or(Error::NoFeasibleEpsilon)?;
    Ok(Selection { cell: i, spec: grid.cells[i].spec, objective: cost })
}
