//! File formats: response panels, persisted posterior samples, run
//! configuration and versioned reports.

mod config;
mod report;
mod responses;
mod samples;

pub use config::{ModelKind, RunConfig};
pub use report::{check_schema, csv_reader, csv_writer, read_json, write_json, SCHEMA_VERSION};
pub use responses::{
    dichotomize, load_responses, load_responses_labeled, parse_responses, save_responses, write_responses,
    DichotomizeRule, LabeledResponses,
};
pub use samples::{
    load_andersen, load_samples, load_samples_expecting, manifest_model, persist_andersen, persist_samples,
    AndersenManifest, Manifest,
};
