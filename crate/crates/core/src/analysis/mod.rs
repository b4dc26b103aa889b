//! Extraction-efficiency computation, waiting-time histogram fitting, and a
//! desk-scale statistical randomness battery.

pub mod battery;
pub mod efficiency;
pub mod histogram;
pub mod ks;
pub mod special;

pub use battery::{randomness_battery, BatteryReport, TestResult};
pub use efficiency::{
    efficiency, efficiency_csv, efficiency_curve, expected_bits_per_class, EfficiencyPoint,
    SymbolDist,
};
pub use histogram::{waiting_time_histogram, HistogramFit};
