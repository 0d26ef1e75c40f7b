//! Bit-metric decoding rate: estimation, AWGN curves, BMDR-to-CER tables
//! and predictors.

mod mc;
pub mod mi;
mod predict;
pub mod table;

pub use mc::{bmdr_of_set, bmdr_sample, estimate_bmdr_mc, estimate_prepared, mean_of, siso_bmdr_mc, BmdrEstimate};
pub use mi::{awgn_bit_rate, MiCurve, MiCurves};
pub use predict::{
    build_predictor, predict_bmdr, predict_set, BmdrPredictor, MiTablePredictor, MonteCarloPredictor, PredictorKind,
};
pub use table::{
    auto_grid, build_awgn_table, isotonic_non_increasing, snr_grid, table_file_name, target_bmdr, BmdrCerTable,
    TableBudget, TableRow, TableSet, TargetSource,
};
