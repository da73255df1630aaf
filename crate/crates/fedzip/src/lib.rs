//! Files, wall-clock timing, reports and the `fedzip` command line on top of
//! [`fedzip_core`].

pub mod cli;
pub mod clock;
pub mod io;
pub mod report;

pub use clock::SystemClock;
pub use io::{load_checkpoint, load_update, save_checkpoint, save_update, FileError};
pub use report::{read_grid, save_report, write_report, Report, ReportFormat};
