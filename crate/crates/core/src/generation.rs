//! Teacher-guided GAN training on scarce, imbalanced collected data.
//!
//! The discriminator carries an adversarial head and a 2C-way real/fake
//! class head; its loss adds a feature-integration pair under a frozen
//! teacher: a gated blending term that cross-matches teacher features of
//! real examples against discriminator features of fakes (and vice versa),
//! and a transfer term that matches them on the same inputs. The generator
//! loss adds a balance regularizer driven by an EMA of per-class counts of
//! teacher predictions on the synthetic batch.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset, Provenance};
use crate::models::{
    collect_grads, AdcDiscriminator, BoundDiscriminator, ConditionalGenerator, FeatureNetwork,
    ModelError, Network,
};
use crate::optim::{Adam, OptimError};
use crate::tensor::{Tape, Tensor, TensorError, Var};
use crate::theory::entropy;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("empty batch in {0}")]
    EmptyBatch(&'static str),
    #[error("{phase} diverged at epoch {epoch}: loss = {value}")]
    Diverged {
        phase: &'static str,
        epoch: usize,
        value: f64,
    },
    #[error("class frequency tracker holds zero total mass")]
    ZeroFrequencyMass,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Losses above this magnitude (or non-finite) abort training.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

pub fn divergence_guard(value: f64, phase: &'static str, epoch: usize) -> Result<(), TrainError> {
    if !value.is_finite() || value.abs() > DIVERGENCE_LIMIT {
        return Err(TrainError::Diverged { phase, epoch, value });
    }
    Ok(())
}

// ── class frequency smoothing ───────────────────────────────────────────

/// Exponential moving average of per-class counts of synthetic examples:
/// `n_c <- (1-gamma)*n_c + gamma*count_c`.
#[derive(Debug, Clone)]
pub struct ClassFrequencyTracker {
    n: Vec<f64>,
    gamma: f64,
    steps: u64,
}

impl ClassFrequencyTracker {
    pub fn new(classes: usize, gamma: f64, initial: f64) -> Result<Self, TrainError> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(TrainError::Config(format!("gamma {} outside [0, 1]", gamma)));
        }
        if initial < 0.0 {
            return Err(TrainError::Config(format!(
                "initial frequency {} negative",
                initial
            )));
        }
        Ok(ClassFrequencyTracker {
            n: vec![initial; classes],
            gamma,
            steps: 0,
        })
    }

    pub fn update(&mut self, counts: &[usize]) {
        debug_assert_eq!(counts.len(), self.n.len());
        for (n, &c) in self.n.iter_mut().zip(counts) {
            *n = (1.0 - self.gamma) * *n + self.gamma * c as f64;
        }
        self.steps += 1;
    }

    pub fn values(&self) -> &[f64] {
        &self.n
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Frequencies normalized to sum to 1.
    pub fn normalized(&self) -> Result<Vec<f64>, TrainError> {
        let sum: f64 = self.n.iter().sum();
        if sum <= 0.0 {
            return Err(TrainError::ZeroFrequencyMass);
        }
        Ok(self.n.iter().map(|v| v / sum).collect())
    }
}

// ── loss functions ──────────────────────────────────────────────────────

fn batch_rows(x: &Tensor, what: &'static str) -> Result<usize, TrainError> {
    let rows = x.shape()[0];
    if rows == 0 {
        return Err(TrainError::EmptyBatch(what));
    }
    Ok(rows)
}

/// Discriminator adversarial loss (minimization form): binary cross-entropy
/// pushing real scores toward 1 and fake scores toward 0.
pub fn adv_loss_d<'t>(
    tape: &'t Tape,
    d: &BoundDiscriminator<'t>,
    real_x: &Tensor,
    fake_x: &Tensor,
) -> Result<Var<'t>, TrainError> {
    batch_rows(real_x, "adv_loss_d")?;
    batch_rows(fake_x, "adv_loss_d")?;
    let s_real = d.adv_logits(d.features(tape.constant(real_x.clone()))?)?;
    let s_fake = d.adv_logits(d.features(tape.constant(fake_x.clone()))?)?;
    let real_term = s_real.log_sigmoid().mean_all()?.scale(-1.0);
    let fake_term = s_fake.scale(-1.0).log_sigmoid().mean_all()?.scale(-1.0);
    Ok(real_term.add(fake_term)?)
}

/// Discriminator classification loss: negative log-likelihood of real
/// examples under the real-class columns and of fakes under the fake-class
/// columns of the joint 2C-way softmax.
pub fn class_loss_d<'t>(
    tape: &'t Tape,
    d: &BoundDiscriminator<'t>,
    real_x: &Tensor,
    real_y: &[usize],
    fake_x: &Tensor,
    fake_y: &[usize],
    classes: usize,
) -> Result<Var<'t>, TrainError> {
    batch_rows(real_x, "class_loss_d")?;
    batch_rows(fake_x, "class_loss_d")?;
    let ls_real = d
        .class_logits(d.features(tape.constant(real_x.clone()))?)?
        .log_softmax()?;
    let ls_fake = d
        .class_logits(d.features(tape.constant(fake_x.clone()))?)?
        .log_softmax()?;
    let fake_cols: Vec<usize> = fake_y.iter().map(|&y| classes + y).collect();
    let real_term = ls_real.pick(real_y)?.mean_all()?.scale(-1.0);
    let fake_term = ls_fake.pick(&fake_cols)?.mean_all()?.scale(-1.0);
    Ok(real_term.add(fake_term)?)
}

/// Full discriminator objective of the auxiliary-discriminative-classifier
/// GAN, in minimization form.
pub fn loss_adc_d<'t>(
    tape: &'t Tape,
    d: &BoundDiscriminator<'t>,
    real_x: &Tensor,
    real_y: &[usize],
    fake_x: &Tensor,
    fake_y: &[usize],
    classes: usize,
) -> Result<Var<'t>, TrainError> {
    let adv = adv_loss_d(tape, d, real_x, fake_x)?;
    let class = class_loss_d(tape, d, real_x, real_y, fake_x, fake_y, classes)?;
    Ok(adv.add(class)?)
}

/// Generator adversarial loss: `E[log(1 - sigmoid(s(fake)))]`. Minimizing
/// it drives fake scores toward 1; it saturates once the discriminator is
/// confident on fakes.
pub fn adv_loss_g<'t>(d: &BoundDiscriminator<'t>, fake: Var<'t>) -> Result<Var<'t>, TrainError> {
    let s_fake = d.adv_logits(d.features(fake)?)?;
    Ok(s_fake.scale(-1.0).log_sigmoid().mean_all()?)
}

/// Generator classification loss: pushes fakes toward the real-class
/// columns and away from the fake-class columns.
pub fn class_loss_g<'t>(
    d: &BoundDiscriminator<'t>,
    fake: Var<'t>,
    fake_y: &[usize],
    classes: usize,
) -> Result<Var<'t>, TrainError> {
    if fake_y.is_empty() {
        return Err(TrainError::EmptyBatch("class_loss_g"));
    }
    let ls = d.class_logits(d.features(fake)?)?.log_softmax()?;
    let fake_cols: Vec<usize> = fake_y.iter().map(|&y| classes + y).collect();
    let plus = ls.pick(fake_y)?.mean_all()?.scale(-1.0);
    let minus = ls.pick(&fake_cols)?.mean_all()?;
    Ok(plus.add(minus)?)
}

/// Full generator objective of the auxiliary-discriminative-classifier GAN.
pub fn loss_adc_g<'t>(
    d: &BoundDiscriminator<'t>,
    fake: Var<'t>,
    fake_y: &[usize],
    classes: usize,
) -> Result<Var<'t>, TrainError> {
    let adv = adv_loss_g(d, fake)?;
    let class = class_loss_g(d, fake, fake_y, classes)?;
    Ok(adv.add(class)?)
}

/// Whether the blending term fires for this step's uniform draw `p`.
/// The literal gate is `p > q`; `invert` complements it.
pub fn blend_gate(p: f64, q: f64, invert: bool) -> bool {
    if invert {
        p <= q
    } else {
        p > q
    }
}

/// Gated feature blending: cross-matches teacher features of real examples
/// against discriminator features of fakes (and vice versa), pairing the
/// i-th real with the i-th fake. Exactly zero when the gate is closed.
/// Gradients reach the discriminator only; the teacher is frozen.
#[allow(clippy::too_many_arguments)]
pub fn loss_blend<'t>(
    tape: &'t Tape,
    teacher_phi: &FeatureNetwork,
    d: &BoundDiscriminator<'t>,
    real_x: &Tensor,
    fake_x: &Tensor,
    p: f64,
    q: f64,
    invert: bool,
) -> Result<Var<'t>, TrainError> {
    let rows = batch_rows(real_x, "loss_blend")?;
    if fake_x.shape()[0] != rows {
        return Err(TrainError::Config(format!(
            "blend pairs index-wise: real batch {} vs fake batch {}",
            rows,
            fake_x.shape()[0]
        )));
    }
    if !blend_gate(p, q, invert) {
        return Ok(tape.constant(Tensor::scalar(0.0)));
    }
    let t_real = tape.constant(teacher_phi.forward(real_x)?);
    let t_fake = tape.constant(teacher_phi.forward(fake_x)?);
    let d_real = d.features(tape.constant(real_x.clone()))?;
    let d_fake = d.features(tape.constant(fake_x.clone()))?;
    let cross = t_real.l2_dist(d_fake)?.add(t_fake.l2_dist(d_real)?)?;
    Ok(cross.mean_all()?)
}

/// Feature transfer: matches discriminator features to frozen teacher
/// features on the same inputs, for both the real and the fake batch.
pub fn loss_trans<'t>(
    tape: &'t Tape,
    teacher_phi: &FeatureNetwork,
    d: &BoundDiscriminator<'t>,
    real_x: &Tensor,
    fake_x: &Tensor,
) -> Result<Var<'t>, TrainError> {
    batch_rows(real_x, "loss_trans")?;
    batch_rows(fake_x, "loss_trans")?;
    let t_real = tape.constant(teacher_phi.forward(real_x)?);
    let t_fake = tape.constant(teacher_phi.forward(fake_x)?);
    let d_real = d.features(tape.constant(real_x.clone()))?;
    let d_fake = d.features(tape.constant(fake_x.clone()))?;
    let matched = t_real.l2_dist(d_real)?.add(t_fake.l2_dist(d_fake)?)?;
    Ok(matched.mean_all()?)
}

/// Smallest normalized frequency admitted in the regularizer denominator,
/// bounding the per-class weight at 1/FREQ_FLOOR. A vanishing floor lets a
/// transiently absent class produce enormous weights that destabilize the
/// generator before conditioning is established.
pub const FREQ_FLOOR: f64 = 1e-2;

/// Generator balance regularizer: `sum_c p_c * log(p_c) / n_hat_c`, where
/// `p` is the batch mean of the frozen teacher's softmax on the synthetic
/// batch. Gradients flow to the generator through `p`.
pub fn loss_reg<'t>(
    tape: &'t Tape,
    teacher: &Network,
    fake: Var<'t>,
    n_hat: &[f64],
) -> Result<Var<'t>, TrainError> {
    let shape = fake.shape();
    if shape[0] == 0 {
        return Err(TrainError::EmptyBatch("loss_reg"));
    }
    if n_hat.len() != teacher.classes() {
        return Err(TrainError::Config(format!(
            "{} frequencies for {} classes",
            n_hat.len(),
            teacher.classes()
        )));
    }
    let phi = teacher.phi.bind(tape, false);
    let head = teacher.head.bind(tape, false);
    let probs = head.logits(phi.forward(fake)?)?.log_softmax()?.exp();
    let p_mean = probs.mean_rows()?;
    let weights: Vec<f64> = n_hat.iter().map(|&n| 1.0 / n.max(FREQ_FLOOR)).collect();
    let w = tape.constant(Tensor::vector(weights));
    Ok(p_mean.xlogx().mul(w)?.sum_all())
}

// ── training loop ───────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GanTrainConfig {
    pub z_dim: usize,
    pub embed_dim: usize,
    pub gen_hidden: usize,
    pub disc_hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub lambda_d: f64,
    pub lambda_g: f64,
    pub blend_q: f64,
    pub freq_gamma: f64,
    pub seed: u64,
    pub disable_blend: bool,
    pub disable_trans: bool,
    pub disable_reg: bool,
    pub invert_blend_gate: bool,
    /// Count conditioning labels instead of teacher predictions in the
    /// class frequency tracker.
    pub count_conditioning_labels: bool,
    /// Draw conditioning labels uniformly instead of from the collected
    /// class prior.
    pub uniform_conditioning: bool,
}

impl Default for GanTrainConfig {
    fn default() -> Self {
        GanTrainConfig {
            z_dim: 8,
            embed_dim: 8,
            gen_hidden: 64,
            disc_hidden: 64,
            epochs: 500,
            batch_size: 32,
            lr_g: 1e-4,
            lr_d: 4e-4,
            lambda_d: 0.1,
            lambda_g: 0.1,
            blend_q: 0.7,
            freq_gamma: 0.5,
            seed: 0,
            disable_blend: false,
            disable_trans: false,
            disable_reg: false,
            invert_blend_gate: false,
            count_conditioning_labels: false,
            uniform_conditioning: false,
        }
    }
}

impl GanTrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.lambda_d < 0.0 || self.lambda_g < 0.0 {
            return Err(TrainError::Config("lambda weights must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.blend_q) || !(0.0..=1.0).contains(&self.freq_gamma) {
            return Err(TrainError::Config(
                "blend_q and freq_gamma must lie in [0, 1]".into(),
            ));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(TrainError::Config("epochs and batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Per-epoch training metrics: batch means of each loss term plus
/// discriminator accuracy and the teacher-predicted class histogram entropy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GanEpochRow {
    pub epoch: usize,
    pub loss_d: f64,
    pub adc_d: f64,
    pub adv_d: f64,
    pub class_d: f64,
    pub blend: f64,
    pub trans: f64,
    pub blend_rate: f64,
    pub loss_g: f64,
    pub adc_g: f64,
    pub adv_g: f64,
    pub class_g: f64,
    pub reg: f64,
    pub hist_entropy: f64,
    /// Teacher-predicted class frequencies over the epoch's fakes.
    pub hist: Vec<f64>,
    /// Normalized tracker state at the end of the epoch.
    pub n_hat: Vec<f64>,
    pub d_real_acc: f64,
    pub d_fake_acc: f64,
}

pub struct GanTrainResult {
    pub generator: ConditionalGenerator,
    pub discriminator: AdcDiscriminator,
    pub metrics: Vec<GanEpochRow>,
}

pub fn train_gan(
    config: &GanTrainConfig,
    teacher: &Network,
    collected: &Dataset,
) -> Result<GanTrainResult, TrainError> {
    config.validate()?;
    if collected.is_empty() {
        return Err(TrainError::EmptyBatch("train_gan"));
    }
    if teacher.classes() != collected.classes() {
        return Err(TrainError::Config(format!(
            "teacher has {} classes, collected data {}",
            teacher.classes(),
            collected.classes()
        )));
    }
    let classes = collected.classes();
    let data_dim = collected.dim();
    let feature_dim = teacher.feature_dim();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut generator = ConditionalGenerator::new(
        classes,
        config.z_dim,
        config.embed_dim,
        &[config.gen_hidden, config.gen_hidden],
        data_dim,
        &mut rng,
    )?;
    let mut discriminator = AdcDiscriminator::new(
        &[data_dim, config.disc_hidden, feature_dim],
        classes,
        &mut rng,
    )?;

    // Conditioning labels are drawn from the collected class prior, so the
    // generator's training mirrors the data imbalance the regularizer is
    // meant to counteract; a toggle restores uniform draws.
    let label_cdf: Vec<f64> = {
        let total: f64 = collected.class_counts().iter().sum::<usize>() as f64;
        let mut acc = 0.0;
        collected
            .class_counts()
            .iter()
            .map(|&c| {
                acc += if config.uniform_conditioning {
                    1.0 / classes as f64
                } else {
                    c as f64 / total
                };
                acc
            })
            .collect()
    };

    let mut tracker = ClassFrequencyTracker::new(
        classes,
        config.freq_gamma,
        config.batch_size as f64 / classes as f64,
    )?;
    let mut adam_g = Adam::with_defaults();
    let mut adam_d = Adam::with_defaults();
    let mut metrics = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..collected.len()).collect();
        order.shuffle(&mut rng);

        let mut acc = EpochAccumulator::new(classes);
        for chunk in order.chunks(config.batch_size) {
            let real_x = collected.batch_features(chunk);
            let real_y = collected.batch_labels(chunk);
            let batch = chunk.len();

            let z = sample_noise(batch, config.z_dim, &mut rng);
            let fake_y: Vec<usize> = (0..batch)
                .map(|_| sample_label(&label_cdf, rng.gen()))
                .collect();
            let p_draw: f64 = rng.gen();
            let fake_x = generator.generate(&z, &fake_y)?;

            // Discriminator accuracy on this batch, before the update.
            let real_scores = discriminator.adv_logits(&real_x)?;
            let fake_scores = discriminator.adv_logits(&fake_x)?;
            acc.d_real_acc += fraction(real_scores.data(), |s| s > 0.0);
            acc.d_fake_acc += fraction(fake_scores.data(), |s| s <= 0.0);

            // Discriminator step.
            let tape = Tape::new();
            let bd = discriminator.bind(&tape, true);
            let adv_d = adv_loss_d(&tape, &bd, &real_x, &fake_x)?;
            let class_d = class_loss_d(&tape, &bd, &real_x, &real_y, &fake_x, &fake_y, classes)?;
            let adc_d = adv_d.add(class_d)?;
            let blend = if config.disable_blend {
                tape.constant(Tensor::scalar(0.0))
            } else {
                loss_blend(
                    &tape,
                    &teacher.phi,
                    &bd,
                    &real_x,
                    &fake_x,
                    p_draw,
                    config.blend_q,
                    config.invert_blend_gate,
                )?
            };
            let trans = if config.disable_trans {
                tape.constant(Tensor::scalar(0.0))
            } else {
                loss_trans(&tape, &teacher.phi, &bd, &real_x, &fake_x)?
            };
            let loss_d = adc_d.add(blend.add(trans)?.scale(config.lambda_d))?;
            divergence_guard(loss_d.item(), "gan-discriminator", epoch)?;

            let grads = tape.backward(loss_d)?;
            let gvals = collect_grads(&bd.param_vars(), &discriminator.params(), &grads);
            adam_d.step(config.lr_d, &mut discriminator.params_mut(), &gvals)?;

            // Class frequency update from this iteration's synthetic batch.
            let teacher_preds = teacher.predict(&fake_x)?;
            let counts = if config.count_conditioning_labels {
                count_classes(&fake_y, classes)
            } else {
                count_classes(&teacher_preds, classes)
            };
            tracker.update(&counts);
            let n_hat = tracker.normalized()?;
            acc.add_histogram(&teacher_preds);

            // Generator step against the just-updated discriminator.
            let tape_g = Tape::new();
            let bg = generator.bind(&tape_g, true);
            let bd_frozen = discriminator.bind(&tape_g, false);
            let fake = bg.generate(&tape_g, &z, &fake_y)?;
            let adv_g = adv_loss_g(&bd_frozen, fake)?;
            let class_g = class_loss_g(&bd_frozen, fake, &fake_y, classes)?;
            let adc_g = adv_g.add(class_g)?;
            let reg = if config.disable_reg {
                tape_g.constant(Tensor::scalar(0.0))
            } else {
                loss_reg(&tape_g, teacher, fake, &n_hat)?
            };
            let loss_g = adc_g.add(reg.scale(config.lambda_g))?;
            divergence_guard(loss_g.item(), "gan-generator", epoch)?;

            let grads_g = tape_g.backward(loss_g)?;
            let gvals_g = collect_grads(&bg.param_vars(), &generator.params(), &grads_g);
            adam_g.step(config.lr_g, &mut generator.params_mut(), &gvals_g)?;

            acc.add_losses(LossSample {
                loss_d: loss_d.item(),
                adc_d: adc_d.item(),
                adv_d: adv_d.item(),
                class_d: class_d.item(),
                blend: blend.item(),
                trans: trans.item(),
                blend_fired: blend_gate(p_draw, config.blend_q, config.invert_blend_gate),
                loss_g: loss_g.item(),
                adc_g: adc_g.item(),
                adv_g: adv_g.item(),
                class_g: class_g.item(),
                reg: reg.item(),
            });
        }
        metrics.push(acc.finish(epoch, &tracker.normalized()?));
    }

    Ok(GanTrainResult {
        generator,
        discriminator,
        metrics,
    })
}

pub fn sample_noise(batch: usize, z_dim: usize, rng: &mut impl Rng) -> Tensor {
    let data = (0..batch * z_dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Tensor::new(vec![batch, z_dim], data).expect("noise shape")
}

fn fraction(values: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    values.iter().filter(|&&v| pred(v)).count() as f64 / values.len() as f64
}

/// Index of the first CDF entry at or above the draw.
fn sample_label(cdf: &[f64], draw: f64) -> usize {
    for (c, &edge) in cdf.iter().enumerate() {
        if draw < edge {
            return c;
        }
    }
    cdf.len() - 1
}

pub fn count_classes(labels: &[usize], classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; classes];
    for &y in labels {
        counts[y] += 1;
    }
    counts
}

struct LossSample {
    loss_d: f64,
    adc_d: f64,
    adv_d: f64,
    class_d: f64,
    blend: f64,
    trans: f64,
    blend_fired: bool,
    loss_g: f64,
    adc_g: f64,
    adv_g: f64,
    class_g: f64,
    reg: f64,
}

struct EpochAccumulator {
    batches: usize,
    loss_d: f64,
    adc_d: f64,
    adv_d: f64,
    class_d: f64,
    blend: f64,
    trans: f64,
    blend_hits: usize,
    loss_g: f64,
    adc_g: f64,
    adv_g: f64,
    class_g: f64,
    reg: f64,
    d_real_acc: f64,
    d_fake_acc: f64,
    histogram: Vec<usize>,
}

impl EpochAccumulator {
    fn new(classes: usize) -> Self {
        EpochAccumulator {
            batches: 0,
            loss_d: 0.0,
            adc_d: 0.0,
            adv_d: 0.0,
            class_d: 0.0,
            blend: 0.0,
            trans: 0.0,
            blend_hits: 0,
            loss_g: 0.0,
            adc_g: 0.0,
            adv_g: 0.0,
            class_g: 0.0,
            reg: 0.0,
            d_real_acc: 0.0,
            d_fake_acc: 0.0,
            histogram: vec![0; classes],
        }
    }

    fn add_losses(&mut self, s: LossSample) {
        self.batches += 1;
        self.loss_d += s.loss_d;
        self.adc_d += s.adc_d;
        self.adv_d += s.adv_d;
        self.class_d += s.class_d;
        self.blend += s.blend;
        self.trans += s.trans;
        self.blend_hits += s.blend_fired as usize;
        self.loss_g += s.loss_g;
        self.adc_g += s.adc_g;
        self.adv_g += s.adv_g;
        self.class_g += s.class_g;
        self.reg += s.reg;
    }

    fn add_histogram(&mut self, preds: &[usize]) {
        for &y in preds {
            self.histogram[y] += 1;
        }
    }

    fn finish(self, epoch: usize, n_hat: &[f64]) -> GanEpochRow {
        let n = self.batches.max(1) as f64;
        let total: usize = self.histogram.iter().sum();
        let freqs: Vec<f64> = self
            .histogram
            .iter()
            .map(|&c| c as f64 / total.max(1) as f64)
            .collect();
        GanEpochRow {
            epoch,
            loss_d: self.loss_d / n,
            adc_d: self.adc_d / n,
            adv_d: self.adv_d / n,
            class_d: self.class_d / n,
            blend: self.blend / n,
            trans: self.trans / n,
            blend_rate: self.blend_hits as f64 / n,
            loss_g: self.loss_g / n,
            adc_g: self.adc_g / n,
            adv_g: self.adv_g / n,
            class_g: self.class_g / n,
            reg: self.reg / n,
            hist_entropy: entropy(&freqs),
            hist: freqs,
            n_hat: n_hat.to_vec(),
            d_real_acc: self.d_real_acc / n,
            d_fake_acc: self.d_fake_acc / n,
        }
    }
}

// ── synthetic data and histograms ───────────────────────────────────────

/// Generates a labeled synthetic dataset; labels are the conditioning
/// labels. Deterministic per seed.
pub fn generate_synthetic(
    generator: &ConditionalGenerator,
    per_class_counts: &[usize],
    seed: u64,
) -> Result<Dataset, TrainError> {
    if per_class_counts.len() != generator.classes() {
        return Err(TrainError::Config(format!(
            "{} counts for {} classes",
            per_class_counts.len(),
            generator.classes()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (c, &count) in per_class_counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let z = sample_noise(count, generator.z_dim(), &mut rng);
        let batch_labels = vec![c; count];
        let out = generator.generate(&z, &batch_labels)?;
        features.extend_from_slice(out.data());
        labels.extend_from_slice(&batch_labels);
    }
    Ok(Dataset::from_parts(
        generator.data_dim(),
        generator.classes(),
        features,
        labels,
        Provenance::Synthetic,
    )?)
}

/// Teacher-view statistics of a generator: histogram of teacher predictions
/// over a balanced conditioned sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorHistogram {
    pub frequencies: Vec<f64>,
    pub entropy: f64,
    pub min_frequency: f64,
    /// Fraction of samples whose teacher prediction matches the
    /// conditioning label.
    pub teacher_agreement: f64,
}

pub fn class_histogram(
    generator: &ConditionalGenerator,
    teacher: &Network,
    samples_per_class: usize,
    seed: u64,
) -> Result<GeneratorHistogram, TrainError> {
    if samples_per_class == 0 {
        return Err(TrainError::EmptyBatch("class_histogram"));
    }
    let classes = generator.classes();
    let synthetic = generate_synthetic(generator, &vec![samples_per_class; classes], seed)?;
    let preds = teacher.predict(&synthetic.features_tensor())?;
    let counts = count_classes(&preds, classes);
    let total = preds.len() as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let agreement = preds
        .iter()
        .zip(synthetic.labels())
        .filter(|(p, y)| p == y)
        .count() as f64
        / total;
    Ok(GeneratorHistogram {
        entropy: entropy(&frequencies),
        min_frequency: frequencies.iter().cloned().fold(f64::INFINITY, f64::min),
        frequencies,
        teacher_agreement: agreement,
    })
}
