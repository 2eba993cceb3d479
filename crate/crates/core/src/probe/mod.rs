//! Separability baseline: a softmax linear probe, and the correlation
//! statistics used to relate probe accuracy to ALP.

mod correlation;
mod linear;

pub use correlation::{correlate, pearson, spearman, Coefficient, CorrelationResult};
pub use linear::{
    loss_and_gradient, probe_accuracy, train_linear_probe, Gradient, LinearProbe, ProbeConfig,
};
