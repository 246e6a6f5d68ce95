//! Parameter selection, encrypted tables and the filter+aggregate query.

pub mod bench;
pub mod plan;
pub mod report;
pub mod select;
pub mod synth;
pub mod table;
pub mod verify;

pub use bench::{bench, BenchConfig, BenchOutcome, BenchRow};
pub use plan::{plan_params, reference_answer, run_query, Predicate, QueryOutcome, QueryPlan};
pub use report::{CostReport, ReportParams, REPORT_SCHEMA, STAGES};
pub use synth::{lineitem_query, synthetic_lineitems};
pub use select::{feasible, rank_candidates, select_params, select_params_with, Candidate, Headroom, SelectOptions};
pub use verify::{verify, VerifyMode, VerifyReport};
pub use table::{decrypt_table, encrypt_table, ingest_csv, ColumnHandles, ColumnSpec, EncryptedTable, Table, TableSpec};
