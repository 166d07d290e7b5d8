//! The experiment pipeline and its on-disk artifacts.
//!
//! Every phase reads its inputs from the run directory and writes its
//! outputs back to it, so a run can be resumed or re-verified from the
//! manifest plus checkpoints alone. `run_all` chains the phases through
//! the same persistence path the standalone subcommands use.
//!
//! Run directory layout:
//!   config.txt, manifest.json, metrics.jsonl, timings.json, report.json
//!   original_train.csv, original_test.csv, collected.csv, synthetic.csv
//!   teacher.{meta,bin}, generator.{meta,bin}, discriminator.{meta,bin},
//!   student.{meta,bin}, baseline.{meta,bin}

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{phase, ExperimentConfig};
use super::HarnessError;
use crate::data::{
    default_inflation_factor, default_means, geometric_weights, inflate, make_gaussian_mixture,
    mix, read_csv, sample_collected, write_csv, Dataset, Provenance,
};
use crate::distillation::{
    evaluate, train_collected_baseline, train_student, tvd_report, StudentTrainResult, TvdRecord,
};
use crate::generation::{
    class_histogram, divergence_guard, generate_synthetic, train_gan, GeneratorHistogram,
};
use crate::models::{collect_grads, AdcDiscriminator, ConditionalGenerator, Network};
use crate::optim::Adam;
use crate::tensor::Tape;

pub const CONFIG_FILE: &str = "config.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const TIMINGS_FILE: &str = "timings.json";
pub const REPORT_FILE: &str = "report.json";

/// Frozen description of a run: config snapshot, per-phase seeds and the
/// artifact map. Its content is a pure function of the config, so writing
/// it again for a later phase reproduces the same bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub phase_seeds: BTreeMap<String, u64>,
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        let phase_seeds = phase::ALL
            .iter()
            .map(|p| (p.to_string(), config.phase_seed(p)))
            .collect();
        let artifacts: BTreeMap<String, String> = [
            ("config", CONFIG_FILE),
            ("metrics", METRICS_FILE),
            ("report", REPORT_FILE),
            ("original_train", "original_train.csv"),
            ("original_test", "original_test.csv"),
            ("collected", "collected.csv"),
            ("synthetic", "synthetic.csv"),
            ("teacher", "teacher.bin"),
            ("generator", "generator.bin"),
            ("discriminator", "discriminator.bin"),
            ("student", "student.bin"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.master_seed,
            config: config.clone(),
            phase_seeds,
            artifacts,
        }
    }
}

/// Writes the manifest and the round-trippable config snapshot. Called at
/// the start of every command; idempotent for a fixed config.
pub fn write_run_preamble(config: &ExperimentConfig, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let manifest = RunManifest::for_config(config);
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    fs::write(dir.join(CONFIG_FILE), config.to_text())?;
    Ok(())
}

fn record_timing(dir: &Path, phase_name: &str, seconds: f64) -> Result<(), HarnessError> {
    let path = dir.join(TIMINGS_FILE);
    let mut timings: BTreeMap<String, f64> = match fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
        Err(_) => BTreeMap::new(),
    };
    timings.insert(phase_name.to_string(), seconds);
    fs::write(path, serde_json::to_string_pretty(&timings)?)?;
    Ok(())
}

/// Append-only JSON-lines metrics writer; each row is tagged with its phase.
pub struct MetricsWriter {
    file: fs::File,
}

#[derive(Serialize)]
struct TaggedRow<'a, T: Serialize> {
    phase: &'a str,
    #[serde(flatten)]
    row: &'a T,
}

impl MetricsWriter {
    pub fn append(dir: &Path) -> Result<Self, HarnessError> {
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(METRICS_FILE))?;
        Ok(MetricsWriter { file })
    }

    pub fn truncate(dir: &Path) -> Result<Self, HarnessError> {
        let file = fs::File::create(dir.join(METRICS_FILE))?;
        Ok(MetricsWriter { file })
    }

    pub fn write_row<T: Serialize>(&mut self, phase_name: &str, row: &T) -> Result<(), HarnessError> {
        let line = serde_json::to_string(&TaggedRow {
            phase: phase_name,
            row,
        })?;
        writeln!(self.file, "{}", line)?;
        Ok(())
    }
}

fn require(path: PathBuf) -> Result<PathBuf, HarnessError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(HarnessError::MissingArtifact { path })
    }
}

// ── teacher pretraining ─────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeacherEpochRow {
    pub epoch: usize,
    pub ce_loss: f64,
    pub test_accuracy: f64,
}

pub struct TeacherPhase {
    pub teacher: Network,
    pub train: Dataset,
    pub test: Dataset,
    pub collected: Dataset,
    pub accuracy: f64,
}

/// Cross-entropy training of a classifier network with Adam. Used for the
/// teacher; deterministic per seed.
#[allow(clippy::too_many_arguments)]
pub fn train_classifier(
    net: &mut Network,
    data: &Dataset,
    test: &Dataset,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    seed: u64,
    phase_name: &'static str,
    mut on_epoch: impl FnMut(&TeacherEpochRow),
) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adam = Adam::with_defaults();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut accuracy = 0.0;
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(batch_size) {
            let x = data.batch_features(chunk);
            let y = data.batch_labels(chunk);
            let tape = Tape::new();
            let phi = net.phi.bind(&tape, true);
            let head = net.head.bind(&tape, true);
            let logits = head.logits(phi.forward(tape.constant(x))?)?;
            let loss = logits.log_softmax()?.pick(&y)?.mean_all()?.scale(-1.0);
            divergence_guard(loss.item(), phase_name, epoch).map_err(HarnessError::from)?;

            let grads = tape.backward(loss)?;
            let mut vars = phi.param_vars();
            vars.push(head.weight);
            if let Some(b) = head.bias {
                vars.push(b);
            }
            let gvals = collect_grads(&vars, &net.params(), &grads);
            adam.step(lr, &mut net.params_mut(), &gvals)
                .map_err(|e| HarnessError::Train(e.into()))?;
            loss_sum += loss.item();
            batches += 1;
        }
        accuracy = evaluate(net, test)?;
        on_epoch(&TeacherEpochRow {
            epoch,
            ce_loss: loss_sum / batches.max(1) as f64,
            test_accuracy: accuracy,
        });
    }
    Ok(accuracy)
}

/// Synthesizes the original data, holds out the test split, samples the
/// scarce collected subset, and pretrains the teacher on the train split.
pub fn pretrain_teacher_phase(
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<TeacherPhase, HarnessError> {
    let inner = || -> Result<TeacherPhase, HarnessError> {
        let start = Instant::now();
        write_run_preamble(config, dir)?;
        let mut metrics = MetricsWriter::truncate(dir)?;

        let means = default_means(config.classes, config.mean_radius);
        let original = make_gaussian_mixture(
            &vec![config.samples_per_class; config.classes],
            &means,
            config.covariance_scale,
            config.phase_seed(phase::DATA),
        )?;
        let (train, test) = original.split(config.test_fraction, config.phase_seed(phase::SPLIT))?;
        let collected = sample_collected(
            &train,
            config.rho,
            &geometric_weights(config.classes, config.imbalance_ratio),
            config.phase_seed(phase::COLLECT),
        )?;
        write_csv(&train, &dir.join("original_train.csv"))?;
        write_csv(&test, &dir.join("original_test.csv"))?;
        write_csv(&collected, &dir.join("collected.csv"))?;

        let teacher_seed = config.phase_seed(phase::TEACHER);
        let mut teacher_rng = ChaCha8Rng::seed_from_u64(teacher_seed);
        let mut teacher = Network::new(
            &[train.dim(), config.teacher_hidden, config.feature_dim],
            config.classes,
            &mut teacher_rng,
        )?;
        let accuracy = train_classifier(
            &mut teacher,
            &train,
            &test,
            config.teacher_epochs,
            config.teacher_batch_size,
            config.teacher_lr,
            teacher_seed ^ 1,
            "teacher",
            |row| {
                let _ = metrics.write_row(phase::TEACHER, row);
            },
        )?;
        teacher.save(dir, "teacher", teacher_seed)?;
        record_timing(dir, phase::TEACHER, start.elapsed().as_secs_f64())?;
        Ok(TeacherPhase {
            teacher,
            train,
            test,
            collected,
            accuracy,
        })
    };
    inner().map_err(HarnessError::in_phase("pretrain-teacher"))
}

// ── GAN phase ───────────────────────────────────────────────────────────

pub struct GanPhase {
    pub generator: ConditionalGenerator,
    pub discriminator: AdcDiscriminator,
    pub histogram: GeneratorHistogram,
}

/// Trains the teacher-guided GAN on the collected data found in the run
/// directory and checkpoints both networks.
pub fn train_gan_phase(config: &ExperimentConfig, dir: &Path) -> Result<GanPhase, HarnessError> {
    let inner = || -> Result<GanPhase, HarnessError> {
        let start = Instant::now();
        write_run_preamble(config, dir)?;
        let teacher = Network::load(dir, "teacher").map_err(|_| HarnessError::MissingArtifact {
            path: dir.join("teacher.meta"),
        })?;
        let collected = read_csv(
            &require(dir.join("collected.csv"))?,
            config.classes,
            Provenance::Collected,
        )?;

        let gan_config = config.gan_config();
        let result = train_gan(&gan_config, &teacher, &collected)?;
        let mut metrics = MetricsWriter::append(dir)?;
        for row in &result.metrics {
            metrics.write_row(phase::GAN, row)?;
        }
        result.generator.save(dir, "generator", gan_config.seed)?;
        result
            .discriminator
            .save(dir, "discriminator", gan_config.seed)?;
        let histogram = class_histogram(
            &result.generator,
            &teacher,
            config.histogram_samples_per_class,
            config.phase_seed(phase::HISTOGRAM),
        )?;
        record_timing(dir, phase::GAN, start.elapsed().as_secs_f64())?;
        Ok(GanPhase {
            generator: result.generator,
            discriminator: result.discriminator,
            histogram,
        })
    };
    inner().map_err(HarnessError::in_phase("train-gan"))
}

// ── distillation phase ──────────────────────────────────────────────────

/// Final report of a full run. Contains no paths, timestamps or timings,
/// so two runs with the same master seed produce byte-identical files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub master_seed: u64,
    pub classes: usize,
    pub rho: f64,
    pub collected_size: usize,
    pub synthetic_size: usize,
    pub hybrid_size: usize,
    pub inflation_factor: usize,
    pub alpha: f64,
    pub teacher_accuracy: f64,
    pub student_accuracy: f64,
    /// Reference: same architecture trained by cross-entropy on the
    /// collected data alone.
    pub baseline_accuracy: f64,
    pub final_align_loss: f64,
    pub generator: GeneratorHistogram,
    pub tvd: TvdRecord,
}

pub fn read_report(dir: &Path) -> Result<RunReport, HarnessError> {
    let path = require(dir.join(REPORT_FILE))?;
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Builds hybrid data from the checkpointed generator and the collected
/// data, distills the student, evaluates it, and writes `report.json`.
pub fn distill_phase(config: &ExperimentConfig, dir: &Path) -> Result<RunReport, HarnessError> {
    let inner = || -> Result<RunReport, HarnessError> {
        let start = Instant::now();
        write_run_preamble(config, dir)?;
        let teacher = Network::load(dir, "teacher").map_err(|_| HarnessError::MissingArtifact {
            path: dir.join("teacher.meta"),
        })?;
        let generator =
            ConditionalGenerator::load(dir, "generator").map_err(|_| HarnessError::MissingArtifact {
                path: dir.join("generator.meta"),
            })?;
        let collected = read_csv(
            &require(dir.join("collected.csv"))?,
            config.classes,
            Provenance::Collected,
        )?;
        let test = read_csv(
            &require(dir.join("original_test.csv"))?,
            config.classes,
            Provenance::Original,
        )?;

        let synthetic = generate_synthetic(
            &generator,
            &vec![config.synthetic_per_class; config.classes],
            config.phase_seed(phase::SYNTHETIC),
        )?;
        write_csv(&synthetic, &dir.join("synthetic.csv"))?;

        let distill_config = config.distill_config();
        let factor = distill_config
            .inflation
            .unwrap_or_else(|| default_inflation_factor(synthetic.len(), collected.len()));
        let inflated = inflate(&collected, factor)?;
        let hybrid = mix(&inflated, &synthetic, factor, config.phase_seed(phase::HYBRID))?;

        let StudentTrainResult { student, metrics } =
            train_student(&distill_config, &teacher, &hybrid, &test)?;
        let mut writer = MetricsWriter::append(dir)?;
        for row in &metrics {
            writer.write_row(phase::STUDENT, row)?;
        }
        student.save(dir, "student", distill_config.seed)?;

        let teacher_accuracy = evaluate(&teacher, &test)?;
        let student_accuracy = evaluate(&student, &test)?;
        let mut baseline_config = distill_config.clone();
        baseline_config.seed = config.phase_seed(phase::BASELINE);
        let baseline = train_collected_baseline(
            &baseline_config,
            &collected,
            &test,
            config.feature_dim,
        )?;
        let baseline_accuracy = evaluate(&baseline.student, &test)?;
        baseline.student.save(dir, "baseline", baseline_config.seed)?;
        let histogram = class_histogram(
            &generator,
            &teacher,
            config.histogram_samples_per_class,
            config.phase_seed(phase::HISTOGRAM),
        )?;
        let tvd = tvd_report(&collected, &synthetic, &hybrid, config.tvd_bins)?;

        let report = RunReport {
            master_seed: config.master_seed,
            classes: config.classes,
            rho: config.rho,
            collected_size: collected.len(),
            synthetic_size: synthetic.len(),
            hybrid_size: hybrid.len(),
            inflation_factor: factor,
            alpha: hybrid.alpha(),
            teacher_accuracy,
            student_accuracy,
            baseline_accuracy,
            final_align_loss: metrics.last().map(|m| m.align_loss).unwrap_or(f64::NAN),
            generator: histogram,
            tvd,
        };
        fs::write(
            dir.join(REPORT_FILE),
            serde_json::to_string_pretty(&report)?,
        )?;
        record_timing(dir, phase::STUDENT, start.elapsed().as_secs_f64())?;
        Ok(report)
    };
    inner().map_err(HarnessError::in_phase("distill"))
}

/// Supervised reference: the same student architecture trained with
/// cross-entropy on the collected data alone.
pub fn baseline_phase(config: &ExperimentConfig, dir: &Path) -> Result<f64, HarnessError> {
    let inner = || -> Result<f64, HarnessError> {
        let start = Instant::now();
        let collected = read_csv(
            &require(dir.join("collected.csv"))?,
            config.classes,
            Provenance::Collected,
        )?;
        let test = read_csv(
            &require(dir.join("original_test.csv"))?,
            config.classes,
            Provenance::Original,
        )?;
        let mut baseline_config = config.distill_config();
        baseline_config.seed = config.phase_seed(phase::BASELINE);
        let result =
            train_collected_baseline(&baseline_config, &collected, &test, config.feature_dim)?;
        let mut writer = MetricsWriter::append(dir)?;
        for row in &result.metrics {
            writer.write_row(phase::BASELINE, row)?;
        }
        result
            .student
            .save(dir, "baseline", baseline_config.seed)?;
        let accuracy = evaluate(&result.student, &test)?;
        record_timing(dir, phase::BASELINE, start.elapsed().as_secs_f64())?;
        Ok(accuracy)
    };
    inner().map_err(HarnessError::in_phase("baseline"))
}

/// Full pipeline: pretrain, GAN training, synthesis, hybrid construction,
/// distillation, evaluation, gap report.
pub fn run_all(config: &ExperimentConfig, dir: &Path) -> Result<RunReport, HarnessError> {
    pretrain_teacher_phase(config, dir)?;
    train_gan_phase(config, dir)?;
    distill_phase(config, dir)
}

// ── ablation and sweeps ─────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationVariant {
    pub name: String,
    pub student_accuracy: f64,
    pub hist_entropy: f64,
    pub hist_min_frequency: f64,
    pub teacher_agreement: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationReport {
    pub baseline_accuracy: f64,
    pub variants: Vec<AblationVariant>,
}

/// Runs the full pipeline plus one variant per disabled generation term,
/// mirroring the single-term ablation rows, and a collected-only baseline.
pub fn ablate(config: &ExperimentConfig, dir: &Path) -> Result<AblationReport, HarnessError> {
    type Tweak = Box<dyn Fn(&mut ExperimentConfig)>;
    let variants: Vec<(&str, Tweak)> = vec![
        ("full", Box::new(|_| {})),
        ("wo_blend", Box::new(|c| c.disable_blend = true)),
        ("wo_trans", Box::new(|c| c.disable_trans = true)),
        ("wo_reg", Box::new(|c| c.disable_reg = true)),
    ];
    let mut report = AblationReport {
        baseline_accuracy: f64::NAN,
        variants: Vec::new(),
    };
    for (name, tweak) in variants {
        let mut variant_config = config.clone();
        tweak(&mut variant_config);
        let subdir = dir.join(name);
        let run = run_all(&variant_config, &subdir)?;
        if name == "full" {
            report.baseline_accuracy = run.baseline_accuracy;
        }
        report.variants.push(AblationVariant {
            name: name.to_string(),
            student_accuracy: run.student_accuracy,
            hist_entropy: run.generator.entropy,
            hist_min_frequency: run.generator.min_frequency,
            teacher_agreement: run.generator.teacher_agreement,
        });
    }
    fs::write(
        dir.join("ablation.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InflationSweepPoint {
    pub factor: usize,
    pub alpha: f64,
    pub hybrid_size: usize,
    pub student_accuracy: f64,
}

/// Reuses one teacher + GAN and re-distills the student at each inflation
/// factor. Results are reported, not asserted.
pub fn sweep_inflation(
    config: &ExperimentConfig,
    dir: &Path,
    factors: &[usize],
) -> Result<Vec<InflationSweepPoint>, HarnessError> {
    if factors.is_empty() {
        return Err(HarnessError::Config("no inflation factors given".into()));
    }
    pretrain_teacher_phase(config, dir)?;
    train_gan_phase(config, dir)?;

    let mut points = Vec::new();
    for &factor in factors {
        if factor == 0 {
            return Err(HarnessError::Config("inflation factor 0 is invalid".into()));
        }
        let mut variant = config.clone();
        variant.inflation_factor = factor;
        let subdir = dir.join(format!("inflation_{}", factor));
        fs::create_dir_all(&subdir)?;
        // The distill phase reads its inputs from its own directory.
        for name in [
            "teacher.meta",
            "teacher.bin",
            "generator.meta",
            "generator.bin",
            "collected.csv",
            "original_test.csv",
        ] {
            fs::copy(dir.join(name), subdir.join(name))?;
        }
        let report = distill_phase(&variant, &subdir)?;
        points.push(InflationSweepPoint {
            factor,
            alpha: report.alpha,
            hybrid_size: report.hybrid_size,
            student_accuracy: report.student_accuracy,
        });
    }
    fs::write(
        dir.join("inflation_sweep.json"),
        serde_json::to_string_pretty(&points)?,
    )?;
    Ok(points)
}
