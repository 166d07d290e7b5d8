//! Command-line interface.
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 numeric
//! divergence during training.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::pipeline;
use super::HarnessError;
use crate::generation::ClassFrequencyTracker;
use crate::theory::{
    kl_equivalence_check, mixture_identities, optimal_adc_classifier, overfit_gradient_probe,
    train_tabular_classifier, DiscreteJoint,
};

#[derive(Parser)]
#[command(
    name = "hybrid-distill",
    version,
    about = "Teacher-guided GAN training on scarce collected data and hybrid-data student distillation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (flat `key = value` lines, `#` comments)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory for artifacts
    #[arg(long)]
    out: PathBuf,
    /// Single-key overrides, e.g. --set rho=0.5 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the datasets and pretrain the teacher
    PretrainTeacher(RunArgs),
    /// Train the teacher-guided GAN on the collected data
    TrainGan(RunArgs),
    /// Generate synthetic data, build the hybrid set, distill the student
    Distill(RunArgs),
    /// Run the full pipeline end to end
    RunAll(RunArgs),
    /// Numerically verify the distributional identities
    VerifyTheory {
        /// Random trials for the distribution identities
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Full pipeline plus one run per disabled generation term
    Ablate(RunArgs),
    /// Re-distill the student across inflation factors
    SweepInflation {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated inflation factors
        #[arg(long, default_value = "1,2,4,6,8,10")]
        factors: String,
    },
    /// Print the report of a finished run
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders usage text itself; unknown flags and bad
            // arguments are usage errors.
            let _ = e.print();
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            if e.is_divergence() {
                2
            } else {
                1
            }
        }
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    for pair in &args.set {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!("--set expects KEY=VALUE, got {:?}", pair))
        })?;
        config.set_key(key.trim(), value.trim())?;
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::PretrainTeacher(args) => {
            let config = load_config(&args)?;
            let phase = pipeline::pretrain_teacher_phase(&config, &args.out)?;
            println!(
                "teacher: accuracy {:.4} on {} held-out examples ({} train, {} collected)",
                phase.accuracy,
                phase.test.len(),
                phase.train.len(),
                phase.collected.len()
            );
            Ok(())
        }
        Command::TrainGan(args) => {
            let config = load_config(&args)?;
            let phase = pipeline::train_gan_phase(&config, &args.out)?;
            println!(
                "gan: histogram entropy {:.4}, min frequency {:.4}, teacher agreement {:.4}",
                phase.histogram.entropy,
                phase.histogram.min_frequency,
                phase.histogram.teacher_agreement
            );
            Ok(())
        }
        Command::Distill(args) => {
            let config = load_config(&args)?;
            let report = pipeline::distill_phase(&config, &args.out)?;
            print_report(&report);
            Ok(())
        }
        Command::RunAll(args) => {
            let config = load_config(&args)?;
            let report = pipeline::run_all(&config, &args.out)?;
            print_report(&report);
            Ok(())
        }
        Command::VerifyTheory { trials, seed } => {
            if verify_theory(trials, seed)? {
                Ok(())
            } else {
                Err(HarnessError::Config(
                    "theory verification failed; see lines above".into(),
                ))
            }
        }
        Command::Ablate(args) => {
            let config = load_config(&args)?;
            let report = pipeline::ablate(&config, &args.out)?;
            println!("baseline (collected-only): accuracy {:.4}", report.baseline_accuracy);
            for v in &report.variants {
                println!(
                    "{:<10} accuracy {:.4}  hist-entropy {:.4}  min-freq {:.4}  agreement {:.4}",
                    v.name, v.student_accuracy, v.hist_entropy, v.hist_min_frequency,
                    v.teacher_agreement
                );
            }
            Ok(())
        }
        Command::SweepInflation { run, factors } => {
            let config = load_config(&run)?;
            let factors = parse_factors(&factors)?;
            let points = pipeline::sweep_inflation(&config, &run.out, &factors)?;
            for p in &points {
                println!(
                    "N = {:<3} alpha {:.4}  hybrid size {:<6} student accuracy {:.4}",
                    p.factor, p.alpha, p.hybrid_size, p.student_accuracy
                );
            }
            Ok(())
        }
        Command::Report { out } => {
            let report = pipeline::read_report(&out)?;
            print_report(&report);
            Ok(())
        }
    }
}

fn parse_factors(text: &str) -> Result<Vec<usize>, HarnessError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| HarnessError::Config(format!("bad inflation factor {:?}", s)))
        })
        .collect()
}

fn print_report(report: &pipeline::RunReport) {
    println!("master seed       {}", report.master_seed);
    println!("teacher accuracy  {:.4}", report.teacher_accuracy);
    println!("student accuracy  {:.4}", report.student_accuracy);
    println!("baseline accuracy {:.4} (cross-entropy on collected data only)", report.baseline_accuracy);
    println!(
        "hybrid data       {} examples = {} collected x {} + {} synthetic (alpha {:.4})",
        report.hybrid_size,
        report.collected_size,
        report.inflation_factor,
        report.synthetic_size,
        report.alpha
    );
    println!(
        "generator         entropy {:.4}, min frequency {:.4}, teacher agreement {:.4}",
        report.generator.entropy, report.generator.min_frequency, report.generator.teacher_agreement
    );
    println!(
        "tvd ({0}x{0} grid)   P~Q {1:.4}  U~P {2:.4}  U~Q {3:.4}  bound slack {4:.3e}",
        report.tvd.bins,
        report.tvd.tvd_collected_synthetic,
        report.tvd.tvd_hybrid_collected,
        report.tvd.tvd_hybrid_synthetic,
        report.tvd.bound_slack
    );
}

// ── theory verification ─────────────────────────────────────────────────

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn report_check(check: &Check) {
    let tag = if check.passed { "[PASS]" } else { "[FAIL]" };
    println!("{} {:<28} {}", tag, check.name, check.detail);
}

/// Runs every identity check with fresh random instances and prints one
/// pass/fail line each. Returns whether all passed.
pub fn verify_theory(trials: usize, seed: u64) -> Result<bool, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // Mixture identity and gap bound on random distribution triples.
    let mut max_residual = 0.0f64;
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let n = rng.gen_range(2..12);
        let p = random_distribution(n, &mut rng);
        let q = random_distribution(n, &mut rng);
        let alpha = rng.gen::<f64>();
        let m = mixture_identities(&p, &q, alpha)?;
        max_residual = max_residual.max(m.identity_residual);
        min_slack = min_slack.min(m.bound_slack);
    }
    checks.push(Check {
        name: "tvd-mixture-identity",
        passed: max_residual <= 1e-12,
        detail: format!("trials={} max residual={:.3e} (tol 1e-12)", trials, max_residual),
    });
    checks.push(Check {
        name: "tvd-gap-bound",
        passed: min_slack >= -1e-9,
        detail: format!("trials={} min slack={:.3e} (>= -1e-9)", trials, min_slack),
    });

    // Classifiability / KL equivalence on random joints.
    let kl_trials = (trials / 10).max(1);
    let mut max_kl_residual = 0.0f64;
    for _ in 0..kl_trials {
        let p = DiscreteJoint::random(3, 3, &mut rng);
        let q = DiscreteJoint::random(3, 3, &mut rng);
        let check = kl_equivalence_check(&p, &q)?;
        max_kl_residual = max_kl_residual.max(check.residual);
    }
    checks.push(Check {
        name: "kl-equivalence",
        passed: max_kl_residual < 1e-10,
        detail: format!(
            "trials={} max residual={:.3e} (tol 1e-10)",
            kl_trials, max_kl_residual
        ),
    });

    // Trained tabular classifier against the closed form.
    let instances = 20;
    let mut max_classifier_err = 0.0f64;
    for _ in 0..instances {
        let p = DiscreteJoint::random(4, 3, &mut rng);
        let q = DiscreteJoint::random(4, 3, &mut rng);
        let trained = train_tabular_classifier(&p, &q, 8000, 0.05)?;
        let optimal = optimal_adc_classifier(&p, &q)?;
        for (i, &x) in optimal.rows.iter().enumerate() {
            for k in 0..2 * p.ny() {
                let err = (trained[x * 2 * p.ny() + k] - optimal.row(i)[k]).abs();
                max_classifier_err = max_classifier_err.max(err);
            }
        }
    }
    checks.push(Check {
        name: "optimal-classifier-training",
        passed: max_classifier_err < 1e-3,
        detail: format!(
            "instances={} max error={:.3e} (tol 1e-3)",
            instances, max_classifier_err
        ),
    });

    // Vanishing generator gradient at a confident discriminator.
    let baseline = overfit_gradient_probe(0.5)?;
    let collapsed = overfit_gradient_probe(1e-6)?;
    let ratio = collapsed / baseline;
    checks.push(Check {
        name: "vanishing-gradient-probe",
        passed: ratio < 1e-5,
        detail: format!("factor(1e-6)/factor(0.5)={:.3e} (tol 1e-5)", ratio),
    });

    // EMA contraction at the stated rates.
    let mut max_ema_dev = 0.0f64;
    for &gamma in &[0.1, 0.5, 0.9] {
        let n0 = 10.0;
        let k = 20usize;
        let mut tracker = ClassFrequencyTracker::new(1, gamma, n0)
            .map_err(HarnessError::Train)?;
        for step in 1..=20i32 {
            tracker.update(&[k]);
            let measured = (tracker.values()[0] - k as f64).abs();
            let expected = (1.0 - gamma).powi(step) * (n0 - k as f64).abs();
            let tol = 64.0 * f64::EPSILON * k as f64 * step as f64;
            let dev = ((measured - expected).abs() / tol).max(0.0);
            max_ema_dev = max_ema_dev.max(dev);
        }
    }
    checks.push(Check {
        name: "ema-contraction",
        passed: max_ema_dev <= 1.0,
        detail: format!(
            "gammas=[0.1,0.5,0.9] worst deviation={:.3} of the rounding budget",
            max_ema_dev
        ),
    });

    let mut all = true;
    for check in &checks {
        report_check(check);
        all &= check.passed;
    }
    Ok(all)
}

fn random_distribution(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-6).collect();
    let s: f64 = p.iter().sum();
    for v in &mut p {
        *v /= s;
    }
    let drift: f64 = p.iter().sum::<f64>() - 1.0;
    p[0] -= drift;
    p
}
