//! Model comparison, convergence and fit diagnostics.

mod acceptance;
mod ppc;
mod psrf;
mod waic;

pub use acceptance::{acceptance_report, AcceptanceReport, BlockRate};
pub use ppc::{posterior_predictive, posterior_predictive_with, PpcResult, PpcRow};
pub use psrf::{min_ess, psrf_cutoff, psrf_multivariate, PsrfResult};
pub use waic::{waic, waic_pointwise, WaicResult};
