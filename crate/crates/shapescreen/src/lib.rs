//! Ligand-based virtual screening with Gaussian shape overlays and learned
//! color features.
//!
//! The pipeline: parse 3D molecules ([`mol`]), assign pharmacophore "color"
//! atoms ([`colorff`]), align a library molecule onto a query by maximizing
//! Gaussian volume overlap ([`overlay`]), turn the overlap volumes into
//! similarity scores and feature vectors ([`features`]), train per-query
//! logistic-regression screeners ([`model`]), and score everything with ROC
//! statistics ([`eval`]). [`bench`](mod@bench) orchestrates full
//! cross-validated screening experiments and emits a JSON report.

pub mod bench;
pub mod colorff;
pub mod eval;
pub mod features;
pub mod model;
pub mod mol;
pub mod overlay;
