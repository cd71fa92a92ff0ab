//! Binary neural network optimization seen as gradient filtering.
//!
//! * [`iir`]: linear IIR filter engine (EMA, cascades, the second-order BNN filter).
//! * [`binopt`]: latent-weight SGD and the filtered-gradient optimizer.
//! * [`bitmetrics`]: flip counting and FF ratios.
//! * [`tinynet`]: a small hand-backpropagated MLP with binary layers.
//! * [`expcli`]: configuration, experiment runners and CSV logs.

pub mod binopt;
pub mod bitmetrics;
pub mod expcli;
pub mod iir;
pub mod tinynet;
