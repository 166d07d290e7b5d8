//! Student distillation on hybrid data: the student shares the teacher's
//! (frozen) classifier head and only its feature extractor is trained, by
//! minimizing the mean L2 distance between student and teacher features.
//! No example labels are read on this path.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, HybridDataset};
use crate::generation::{divergence_guard, TrainError};
use crate::models::{collect_grads, share_classifier, FeatureNetwork, Network};
use crate::optim::Sgd;
use crate::tensor::{Tape, Tensor};
use crate::theory;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistillConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// Initial learning rate; divided by 10 at the scheduled breakpoints.
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Explicit inflation factor; `None` selects floor(|Ds|/|Dc|).
    pub inflation: Option<usize>,
    pub seed: u64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            hidden: 32,
            epochs: 240,
            batch_size: 64,
            lr: 0.05,
            momentum: 0.9,
            weight_decay: 5e-4,
            inflation: None,
            seed: 0,
        }
    }
}

/// Epochs at which the learning rate is divided by 10: the 150/240,
/// 180/240, 210/240 fractions of the configured epoch count.
pub fn schedule_breakpoints(total_epochs: usize) -> [usize; 3] {
    [
        total_epochs * 150 / 240,
        total_epochs * 180 / 240,
        total_epochs * 210 / 240,
    ]
}

pub fn lr_at_epoch(initial_lr: f64, total_epochs: usize, epoch: usize) -> f64 {
    let drops = schedule_breakpoints(total_epochs)
        .iter()
        .filter(|&&b| epoch >= b)
        .count();
    initial_lr * 0.1f64.powi(drops as i32)
}

/// Feature alignment loss: mean over the batch of
/// `||phi_S(x) - phi_T(x)||_2`. The teacher is frozen; gradients reach the
/// student only. Consumes no labels.
pub fn loss_align<'t>(
    tape: &'t Tape,
    teacher_phi: &FeatureNetwork,
    student_phi: &crate::models::BoundFeatures<'t>,
    x: &Tensor,
) -> Result<crate::tensor::Var<'t>, TrainError> {
    if x.shape()[0] == 0 {
        return Err(TrainError::EmptyBatch("loss_align"));
    }
    if teacher_phi.feature_dim() != student_phi.feature_dim() {
        return Err(TrainError::Config(format!(
            "teacher features have dim {}, student {}",
            teacher_phi.feature_dim(),
            student_phi.feature_dim()
        )));
    }
    let t_feat = tape.constant(teacher_phi.forward(x)?);
    let s_feat = student_phi.forward(tape.constant(x.clone()))?;
    Ok(s_feat.l2_dist(t_feat)?.mean_all()?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudentEpochRow {
    pub epoch: usize,
    pub lr: f64,
    pub align_loss: f64,
    pub test_accuracy: f64,
    /// Mean feature distance to the teacher on the held-out test set.
    pub feature_gap: f64,
}

pub struct StudentTrainResult {
    pub student: Network,
    pub metrics: Vec<StudentEpochRow>,
}

/// Trains a student on hybrid data by feature alignment under the shared,
/// frozen teacher classifier. Only the hybrid features are read; labels are
/// never consumed.
pub fn train_student(
    config: &DistillConfig,
    teacher: &Network,
    hybrid: &HybridDataset,
    test: &Dataset,
) -> Result<StudentTrainResult, TrainError> {
    if hybrid.is_empty() {
        return Err(TrainError::EmptyBatch("train_student"));
    }
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(TrainError::Config("epochs and batch size must be positive".into()));
    }
    let data = hybrid.base();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let student_phi = FeatureNetwork::mlp(
        &[data.dim(), config.hidden, teacher.feature_dim()],
        &mut rng,
    )?;
    let head = share_classifier(&teacher.head, student_phi.feature_dim())?;
    let mut student = Network {
        phi: student_phi,
        head,
    };

    // The teacher is frozen, so its features per example never change;
    // compute them once for the hybrid set and the test set.
    let hybrid_features = data.features_tensor();
    let teacher_features = teacher.phi.forward(&hybrid_features)?;
    let test_features = test.features_tensor();
    let teacher_test_features = teacher.phi.forward(&test_features)?;

    let mut sgd = Sgd::new(config.momentum, config.weight_decay);
    let mut metrics = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..config.epochs {
        let lr = lr_at_epoch(config.lr, config.epochs, epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let x = data.batch_features(chunk);
            let t_feat = teacher_features.gather_rows(chunk)?;

            let tape = Tape::new();
            let bound = student.phi.bind(&tape, true);
            let s_feat = bound.forward(tape.constant(x))?;
            let loss = s_feat.l2_dist(tape.constant(t_feat))?.mean_all()?;
            divergence_guard(loss.item(), "student", epoch)?;

            let grads = tape.backward(loss)?;
            let gvals = collect_grads(&bound.param_vars(), &student.phi.params(), &grads);
            sgd.step(lr, &mut student.phi.params_mut(), &gvals)?;

            loss_sum += loss.item();
            batches += 1;
        }

        let test_accuracy = evaluate(&student, test)?;
        let student_test_features = student.phi.forward(&test_features)?;
        let feature_gap = student_test_features
            .l2_dist(&teacher_test_features)?
            .mean_all()?
            .item();
        metrics.push(StudentEpochRow {
            epoch,
            lr,
            align_loss: loss_sum / batches.max(1) as f64,
            test_accuracy,
            feature_gap,
        });
    }

    Ok(StudentTrainResult { student, metrics })
}

/// Fraction of test examples whose predicted class matches the label.
pub fn evaluate(network: &Network, test: &Dataset) -> Result<f64, TrainError> {
    if test.is_empty() {
        return Err(TrainError::EmptyBatch("evaluate"));
    }
    let preds = network.predict(&test.features_tensor())?;
    let correct = preds
        .iter()
        .zip(test.labels())
        .filter(|(p, y)| p == y)
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Supervised reference student: same architecture, trained by plain
/// cross-entropy on the scarce collected data with its own classifier head.
pub fn train_collected_baseline(
    config: &DistillConfig,
    collected: &Dataset,
    test: &Dataset,
    feature_dim: usize,
) -> Result<StudentTrainResult, TrainError> {
    if collected.is_empty() {
        return Err(TrainError::EmptyBatch("train_collected_baseline"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut student = Network::new(
        &[collected.dim(), config.hidden, feature_dim],
        collected.classes(),
        &mut rng,
    )?;

    let mut sgd = Sgd::new(config.momentum, config.weight_decay);
    let mut metrics = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..collected.len()).collect();

    for epoch in 0..config.epochs {
        let lr = lr_at_epoch(config.lr, config.epochs, epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let x = collected.batch_features(chunk);
            let y = collected.batch_labels(chunk);

            let tape = Tape::new();
            let phi = student.phi.bind(&tape, true);
            let head = student.head.bind(&tape, true);
            let logits = head.logits(phi.forward(tape.constant(x))?)?;
            let loss = logits.log_softmax()?.pick(&y)?.mean_all()?.scale(-1.0);
            divergence_guard(loss.item(), "baseline-student", epoch)?;

            let grads = tape.backward(loss)?;
            let mut vars = phi.param_vars();
            vars.push(head.weight);
            if let Some(b) = head.bias {
                vars.push(b);
            }
            let gvals = collect_grads(&vars, &student.params(), &grads);
            sgd.step(lr, &mut student.params_mut(), &gvals)?;

            loss_sum += loss.item();
            batches += 1;
        }
        let test_accuracy = evaluate(&student, test)?;
        metrics.push(StudentEpochRow {
            epoch,
            lr,
            align_loss: loss_sum / batches.max(1) as f64,
            test_accuracy,
            feature_gap: f64::NAN,
        });
    }
    Ok(StudentTrainResult { student, metrics })
}

// ── distribution gap report ─────────────────────────────────────────────

/// Empirical total-variation gaps between collected (P), synthetic (Q) and
/// hybrid (U) data, measured on a common fixed-grid histogram.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TvdRecord {
    pub bins: usize,
    pub grid_min: Vec<f64>,
    pub grid_max: Vec<f64>,
    pub alpha: f64,
    pub tvd_collected_synthetic: f64,
    pub tvd_hybrid_collected: f64,
    pub tvd_hybrid_synthetic: f64,
    /// `|TVD(U,P) - (1-alpha)*TVD(Q,P)|`
    pub mixture_identity_residual: f64,
    /// `(2-alpha)*TVD(P,Q) - TVD(U,Q)`
    pub bound_slack: f64,
}

/// Histogram of a dataset over an axis-aligned grid with `bins` cells per
/// dimension, normalized to a distribution.
fn grid_histogram(ds: &Dataset, min: &[f64], max: &[f64], bins: usize) -> Vec<f64> {
    let dim = ds.dim();
    let cells = bins.pow(dim as u32);
    let mut hist = vec![0.0; cells];
    for i in 0..ds.len() {
        let mut cell = 0usize;
        for ((&v, &lo), &hi) in ds.feature_row(i).iter().zip(min).zip(max) {
            let width = (hi - lo).max(f64::MIN_POSITIVE);
            let mut b = ((v - lo) / width * bins as f64) as usize;
            if b >= bins {
                b = bins - 1; // points on the upper edge fall in the last bin
            }
            cell = cell * bins + b;
        }
        hist[cell] += 1.0;
    }
    let total = ds.len() as f64;
    for v in &mut hist {
        *v /= total;
    }
    hist
}

pub fn tvd_report(
    collected: &Dataset,
    synthetic: &Dataset,
    hybrid: &HybridDataset,
    bins: usize,
) -> Result<TvdRecord, TrainError> {
    if collected.is_empty() || synthetic.is_empty() || hybrid.is_empty() {
        return Err(TrainError::EmptyBatch("tvd_report"));
    }
    if bins == 0 {
        return Err(TrainError::Config("bins must be positive".into()));
    }
    let dim = collected.dim();
    if synthetic.dim() != dim || hybrid.base().dim() != dim {
        return Err(TrainError::Config("datasets have different feature dims".into()));
    }
    if bins.pow(dim as u32) > 1_000_000 {
        return Err(TrainError::Config(format!(
            "{}^{} histogram cells is too many",
            bins, dim
        )));
    }

    // Common bounding box over all three datasets.
    let mut min = vec![f64::INFINITY; dim];
    let mut max = vec![f64::NEG_INFINITY; dim];
    for ds in [collected, synthetic, hybrid.base()] {
        for i in 0..ds.len() {
            for (j, &v) in ds.feature_row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
    }

    let p = grid_histogram(collected, &min, &max, bins);
    let q = grid_histogram(synthetic, &min, &max, bins);
    let u = grid_histogram(hybrid.base(), &min, &max, bins);
    let alpha = hybrid.alpha();

    let tvd_pq = theory::tvd(&p, &q).map_err(theory_to_train)?;
    let tvd_up = theory::tvd(&u, &p).map_err(theory_to_train)?;
    let tvd_uq = theory::tvd(&u, &q).map_err(theory_to_train)?;

    Ok(TvdRecord {
        bins,
        grid_min: min,
        grid_max: max,
        alpha,
        tvd_collected_synthetic: tvd_pq,
        tvd_hybrid_collected: tvd_up,
        tvd_hybrid_synthetic: tvd_uq,
        mixture_identity_residual: (tvd_up - (1.0 - alpha) * tvd_pq).abs(),
        bound_slack: (2.0 - alpha) * tvd_pq - tvd_uq,
    })
}

fn theory_to_train(e: theory::TheoryError) -> TrainError {
    TrainError::Config(e.to_string())
}
