//! Reference data-generating processes with known ground truth.
//!
//! [`lotka_volterra`] integrates the predator-prey ODE; [`toy`] holds the
//! static, non-stationary, dynamic and anticausal toy systems together with
//! the influencing-factor knobs (interventions, context, latent drift,
//! confounder, environment) that perturb them. The causal mechanism itself
//! is fixed by the chosen model, and the task by the model family.

pub mod lotka_volterra;
pub mod toy;

pub use lotka_volterra::{lv_simulate, lv_trace, LotkaVolterraParams, LvState};
pub use toy::{
    generate_trace, ContextProcess, ContextSignal, GatedGain, InputProcess, Intervention, PsdKnobs, ToyConfig,
    ToyModel, ToySystem,
};
