//! Dataset files, splits and experiment reports.

pub mod io;
pub mod report;
pub mod split;

pub use io::{load_dataset, standardize, write_dense_csv, write_sparse, DataFormat, DatasetSummary, LoadedDataset};
pub use report::{mean_rows, read_report, write_report, FitRecord, ReportRow, ReportSidecar, SeedKey};
pub use split::{make_split, Split, SplitSpec};
