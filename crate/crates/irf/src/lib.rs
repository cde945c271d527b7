//! File formats, the synthetic benchmark harness and the command-line front
//! end for [`irf_core`].

pub mod bench;
pub mod cli;
pub mod csv_io;
mod error;
pub mod model_file;

pub use csv_io::{load_csv, save_csv, LabeledData};
pub use error::{IrfError, Result};
pub use model_file::{load_model, save_model, SavedModel};
