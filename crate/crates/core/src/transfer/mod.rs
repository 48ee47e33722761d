//! Uncertainty-labelled experience sharing: transfer buffers, source election,
//! content filtering and the coordinator that ties them to the training loop.

mod buffer;
mod content;
mod engine;
mod source;


pub use buffer::{LabeledTransition, TransferBuffer};
pub use content::{
    delta_conf, hdc_select, lec_scores, lec_select, median, minmax_normalize, rdc_eligible, rdc_select, top_by_score,
    ContentSelection,
};
pub use engine::{select_content, transfer_step, Efontl, TargetRecord, TransferConfig, TransferRecord};
pub use source::{argmin, select_source_by_performance, select_source_by_uncertainty, SourceSelection};
