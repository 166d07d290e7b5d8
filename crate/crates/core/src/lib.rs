//! Hybrid-data distillation at desk scale.
//!
//! A pre-trained teacher guides a conditional GAN trained on scarce,
//! class-imbalanced collected data; the generator then produces synthetic
//! examples that are mixed with inflated collected data, and a student
//! network is distilled on the mixture by classifier-sharing feature
//! alignment. A theory module verifies the distributional identities the
//! training scheme relies on, numerically and to tight tolerances.
//!
//! Modules:
//! - [`tensor`], [`optim`]: scratch reverse-mode autodiff engine and optimizers
//! - [`models`]: MLP feature extractors, classifier heads, the conditional
//!   generator and the discriminator with a 2C-way real/fake class head
//! - [`data`]: Gaussian-mixture synthesis, scarce collection sampling,
//!   inflation and hybrid mixing
//! - [`generation`]: teacher-guided GAN losses and training loop
//! - [`distillation`]: feature-alignment student training and evaluation
//! - [`theory`]: total-variation and optimal-classifier identities
//! - [`harness`]: configuration, seeding, persistence and the CLI pipeline

pub mod data;
pub mod distillation;
pub mod generation;
pub mod harness;
pub mod models;
pub mod optim;
pub mod tensor;
pub mod theory;
