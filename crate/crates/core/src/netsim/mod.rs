//! Communication cost model, bandwidth emulation and codec / bound selection.

mod clock;
pub(crate) mod cost;
mod select;

pub use clock::{Clock, VirtualClock};
pub use cost::{
    breakeven_bandwidth, emulate_send, transfer_time, transfer_time_at, worthwhile, CostInputs,
    NetworkModel,
};
pub use select::{
    pareto_front, select_codec, select_epsilon, GridCell, Selection, SelectionGrid, SelectionPolicy,
};
