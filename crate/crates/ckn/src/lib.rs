//! File formats, directory ingestion, data generation, and the `ckn`
//! command-line tool, layered on the `ckn-core` engine.
//!
//! The core crate owns the graph and the algorithms; this crate owns
//! everything that needs an operating system: store files, campaign specs,
//! run logs, watched directories, matrix/heatmap files, query request
//! documents, and the CLI itself.

pub mod cli;
pub mod error;
pub mod harness;
pub mod ingest_dir;
pub mod matrix_io;
pub mod query_file;
pub mod run_log;
pub mod spec_file;
pub mod store_io;

pub use cli::run;
pub use error::{Error, Result};
pub use harness::{generate_campaign, GenerationReport};
pub use ingest_dir::{ingest_directory, DirectoryIngestor, IngestReport};
pub use matrix_io::{matrix_to_pgm, matrix_to_tsv, parse_matrix_tsv};
pub use query_file::{parse_query_request, read_query_file, QueryRequest};
pub use run_log::{parse_run_log, read_run_log, run_log_to_text};
pub use spec_file::{parse_spec, read_spec, spec_to_json};
pub use store_io::{load_store, save_store};
