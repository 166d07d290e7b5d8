//! Acceptance suite. One test per criterion; each prints a `[PASS]` line
//! with the measured margin. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see the lines on success).

mod common;

use std::time::{Duration, Instant};

use common::{assert_grads_match, FD_TOL};
use hybrid_distill::data::{default_inflation_factor, inflate, mix, Dataset, Provenance};
use hybrid_distill::distillation::{loss_align, lr_at_epoch, schedule_breakpoints};
use hybrid_distill::generation::{
    adv_loss_d, adv_loss_g, class_loss_d, class_loss_g, loss_adc_d, loss_adc_g, loss_blend,
    loss_reg, loss_trans, ClassFrequencyTracker,
};
use hybrid_distill::harness::config::ExperimentConfig;
use hybrid_distill::harness::pipeline::{run_all, train_gan_phase, REPORT_FILE};
use hybrid_distill::models::{
    collect_grads, AdcDiscriminator, ConditionalGenerator, FeatureNetwork, Network,
};
use hybrid_distill::tensor::{Tape, Tensor};
use hybrid_distill::theory::{
    kl_equivalence_check, mixture_identities, optimal_adc_classifier, overfit_gradient_probe,
    train_tabular_classifier, DiscreteJoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pass(name: &str, detail: String) {
    println!("[PASS] {:<32} {}", name, detail);
}

fn set_params(dst: &mut [&mut Tensor], src: &[Tensor]) {
    assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        d.data_mut().copy_from_slice(s.data());
    }
}

fn cloned_params(params: &[&Tensor]) -> Vec<Tensor> {
    params.iter().map(|p| (*p).clone()).collect()
}

// ── criterion: gradient suite ───────────────────────────────────────────

struct LossCase {
    teacher: Network,
    disc: AdcDiscriminator,
    generator: ConditionalGenerator,
    student_phi: FeatureNetwork,
    real_x: Tensor,
    real_y: Vec<usize>,
    fake_x: Tensor,
    fake_y: Vec<usize>,
    z: Tensor,
    classes: usize,
    n_hat: Vec<f64>,
}

/// Smallest |pre-activation| over the ReLU layers of a forward pass.
/// Central differences are invalid across the ReLU kink, so cases whose
/// margins are within reach of the FD step get redrawn.
fn min_relu_margin(phi: &FeatureNetwork, x: &Tensor) -> f64 {
    use hybrid_distill::models::Activation;
    let params = phi.params();
    let mut margin = f64::INFINITY;
    let mut h = x.clone();
    for (layer, act) in phi.activations().iter().enumerate() {
        let w = params[2 * layer];
        let b = params[2 * layer + 1];
        let pre = h.matmul(w).unwrap().add_row(b).unwrap();
        if *act == Activation::Relu {
            for &v in pre.data() {
                margin = margin.min(v.abs());
            }
            h = pre.relu();
        } else {
            h = pre;
        }
    }
    margin
}

const KINK_MARGIN: f64 = 2e-3;

impl LossCase {
    fn random(seed: u64) -> Self {
        // Redraw until every ReLU pre-activation on every path the losses
        // exercise is safely away from zero.
        let mut attempt = 0;
        loop {
            let case = LossCase::draw(seed + attempt * 0x10000);
            if case.kink_margin() >= KINK_MARGIN {
                return case;
            }
            attempt += 1;
            assert!(attempt < 100, "could not find a kink-free case for seed {}", seed);
        }
    }

    fn kink_margin(&self) -> f64 {
        let fake_gen = self.generator.generate(&self.z, &self.fake_y).unwrap();
        let emb = self.generator.embedding.gather_rows(&self.fake_y).unwrap();
        let gen_in = self.z.concat_cols(&emb).unwrap();
        [
            min_relu_margin(&self.disc.phi, &self.real_x),
            min_relu_margin(&self.disc.phi, &self.fake_x),
            min_relu_margin(&self.disc.phi, &fake_gen),
            min_relu_margin(&self.teacher.phi, &self.real_x),
            min_relu_margin(&self.teacher.phi, &self.fake_x),
            min_relu_margin(&self.teacher.phi, &fake_gen),
            min_relu_margin(&self.generator.body, &gen_in),
            min_relu_margin(&self.student_phi, &self.real_x),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }

    fn draw(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let classes = rng.gen_range(2..5);
        let hidden = rng.gen_range(3..7);
        let feature_dim = rng.gen_range(2..6);
        let batch = rng.gen_range(2..6);
        let z_dim = rng.gen_range(2..5);
        let embed = rng.gen_range(2..5);

        let teacher = Network::new(&[2, hidden, feature_dim], classes, &mut rng).unwrap();
        let disc = AdcDiscriminator::new(&[2, hidden, feature_dim], classes, &mut rng).unwrap();
        let generator =
            ConditionalGenerator::new(classes, z_dim, embed, &[hidden], 2, &mut rng).unwrap();
        let student_phi = FeatureNetwork::mlp(&[2, hidden, feature_dim], &mut rng).unwrap();

        let rand_batch = |rng: &mut ChaCha8Rng| {
            Tensor::new(
                vec![batch, 2],
                (0..batch * 2).map(|_| rng.gen::<f64>() * 3.0 - 1.5).collect(),
            )
            .unwrap()
        };
        let real_x = rand_batch(&mut rng);
        let fake_x = rand_batch(&mut rng);
        let real_y = (0..batch).map(|_| rng.gen_range(0..classes)).collect();
        let fake_y: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..classes)).collect();
        let z = Tensor::new(
            vec![batch, z_dim],
            (0..batch * z_dim).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect(),
        )
        .unwrap();
        let n_hat = {
            let raw: Vec<f64> = (0..classes).map(|_| rng.gen::<f64>() + 0.05).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        };
        LossCase {
            teacher,
            disc,
            generator,
            student_phi,
            real_x,
            real_y,
            fake_x,
            fake_y,
            z,
            classes,
            n_hat,
        }
    }

    /// FD-checks a discriminator-side loss against the discriminator's
    /// parameters.
    fn check_d_loss(
        &self,
        what: &str,
        build: impl for<'t> Fn(&'t Tape, &hybrid_distill::models::BoundDiscriminator<'t>, &LossCase) -> hybrid_distill::tensor::Var<'t>,
    ) -> f64 {
        let params = cloned_params(&self.disc.params());
        let analytic = {
            let tape = Tape::new();
            let bd = self.disc.bind(&tape, true);
            let loss = build(&tape, &bd, self);
            let grads = tape.backward(loss).unwrap();
            collect_grads(&bd.param_vars(), &self.disc.params(), &grads)
        };
        let mut eval = |values: &[Tensor]| -> f64 {
            let mut d = self.disc.clone();
            set_params(&mut d.params_mut(), values);
            let tape = Tape::new();
            let bd = d.bind(&tape, true);
            build(&tape, &bd, self).item()
        };
        assert_grads_match(what, &params, &analytic, &mut eval)
    }

    /// FD-checks a generator-side loss against the generator's parameters;
    /// the discriminator and teacher stay frozen.
    fn check_g_loss(
        &self,
        what: &str,
        build: impl for<'t> Fn(
            &'t Tape,
            hybrid_distill::tensor::Var<'t>,
            &hybrid_distill::models::BoundDiscriminator<'t>,
            &LossCase,
        ) -> hybrid_distill::tensor::Var<'t>,
    ) -> f64 {
        let params = cloned_params(&self.generator.params());
        let analytic = {
            let tape = Tape::new();
            let bg = self.generator.bind(&tape, true);
            let bd = self.disc.bind(&tape, false);
            let fake = bg.generate(&tape, &self.z, &self.fake_y).unwrap();
            let loss = build(&tape, fake, &bd, self);
            let grads = tape.backward(loss).unwrap();
            collect_grads(&bg.param_vars(), &self.generator.params(), &grads)
        };
        let mut eval = |values: &[Tensor]| -> f64 {
            let mut g = self.generator.clone();
            set_params(&mut g.params_mut(), values);
            let tape = Tape::new();
            let bg = g.bind(&tape, true);
            let bd = self.disc.bind(&tape, false);
            let fake = bg.generate(&tape, &self.z, &self.fake_y).unwrap();
            build(&tape, fake, &bd, self).item()
        };
        assert_grads_match(what, &params, &analytic, &mut eval)
    }
}

#[test]
fn acceptance_gradient_suite() {
    let start = Instant::now();
    let cases = 50;
    let mut worst = 0.0f64;

    for i in 0..cases {
        let case = LossCase::random(1000 + i);
        let c = case.classes;

        worst = worst.max(case.check_d_loss("adv_loss_d", |tape, bd, s| {
            adv_loss_d(tape, bd, &s.real_x, &s.fake_x).unwrap()
        }));
        worst = worst.max(case.check_d_loss("class_loss_d", move |tape, bd, s| {
            class_loss_d(tape, bd, &s.real_x, &s.real_y, &s.fake_x, &s.fake_y, c).unwrap()
        }));
        worst = worst.max(case.check_d_loss("loss_adc_d", move |tape, bd, s| {
            loss_adc_d(tape, bd, &s.real_x, &s.real_y, &s.fake_x, &s.fake_y, c).unwrap()
        }));
        worst = worst.max(case.check_d_loss("loss_blend", |tape, bd, s| {
            // Gate forced open: p > q.
            loss_blend(tape, &s.teacher.phi, bd, &s.real_x, &s.fake_x, 0.9, 0.7, false).unwrap()
        }));
        worst = worst.max(case.check_d_loss("loss_trans", |tape, bd, s| {
            loss_trans(tape, &s.teacher.phi, bd, &s.real_x, &s.fake_x).unwrap()
        }));

        worst = worst.max(case.check_g_loss("adv_loss_g", |_tape, fake, bd, _s| {
            adv_loss_g(bd, fake).unwrap()
        }));
        worst = worst.max(case.check_g_loss("class_loss_g", move |_tape, fake, bd, s| {
            class_loss_g(bd, fake, &s.fake_y, c).unwrap()
        }));
        worst = worst.max(case.check_g_loss("loss_adc_g", move |_tape, fake, bd, s| {
            loss_adc_g(bd, fake, &s.fake_y, c).unwrap()
        }));
        worst = worst.max(case.check_g_loss("loss_reg", |tape, fake, _bd, s| {
            loss_reg(tape, &s.teacher, fake, &s.n_hat).unwrap()
        }));

        // Alignment loss against the student's parameters.
        let params = cloned_params(&case.student_phi.params());
        let analytic = {
            let tape = Tape::new();
            let bound = case.student_phi.bind(&tape, true);
            let loss = loss_align(&tape, &case.teacher.phi, &bound, &case.real_x).unwrap();
            let grads = tape.backward(loss).unwrap();
            collect_grads(&bound.param_vars(), &case.student_phi.params(), &grads)
        };
        let mut eval = |values: &[Tensor]| -> f64 {
            let mut phi = case.student_phi.clone();
            set_params(&mut phi.params_mut(), values);
            let tape = Tape::new();
            let bound = phi.bind(&tape, true);
            loss_align(&tape, &case.teacher.phi, &bound, &case.real_x).unwrap().item()
        };
        worst = worst.max(assert_grads_match("loss_align", &params, &analytic, &mut eval));
    }

    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(30),
        "gradient suite took {:?}",
        elapsed
    );
    pass(
        "gradient-suite",
        format!(
            "10 losses x {} cases, max relative error {:.3e} (tol {:.0e}), {:.1?}",
            cases, worst, FD_TOL, elapsed
        ),
    );
}

// ── criterion: theory oracle ────────────────────────────────────────────

#[test]
fn acceptance_theory_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    let random_distribution = |n: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-6).collect();
        let s: f64 = p.iter().sum();
        for v in &mut p {
            *v /= s;
        }
        let drift: f64 = p.iter().sum::<f64>() - 1.0;
        p[0] -= drift;
        p
    };

    // (a) mixture identity and (b) bound slack on 10^4 random triples.
    let trials = 10_000;
    let mut max_residual = 0.0f64;
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let n = rng.gen_range(2..12);
        let p = random_distribution(n, &mut rng);
        let q = random_distribution(n, &mut rng);
        let alpha = rng.gen::<f64>();
        let m = mixture_identities(&p, &q, alpha).unwrap();
        max_residual = max_residual.max(m.identity_residual);
        min_slack = min_slack.min(m.bound_slack);
    }
    assert!(max_residual <= 1e-12, "identity residual {}", max_residual);
    assert!(min_slack >= -1e-9, "bound slack {}", min_slack);

    // (c) KL equivalence on 10^3 random joints.
    let mut max_kl = 0.0f64;
    for _ in 0..1000 {
        let p = DiscreteJoint::random(3, 3, &mut rng);
        let q = DiscreteJoint::random(3, 3, &mut rng);
        max_kl = max_kl.max(kl_equivalence_check(&p, &q).unwrap().residual);
    }
    assert!(max_kl < 1e-10, "kl residual {}", max_kl);

    // (d) trained tabular classifier vs closed form on 20 random 4x3 joints.
    let mut max_cls = 0.0f64;
    for _ in 0..20 {
        let p = DiscreteJoint::random(4, 3, &mut rng);
        let q = DiscreteJoint::random(4, 3, &mut rng);
        let trained = train_tabular_classifier(&p, &q, 8000, 0.05).unwrap();
        let optimal = optimal_adc_classifier(&p, &q).unwrap();
        for (i, &x) in optimal.rows.iter().enumerate() {
            for k in 0..2 * p.ny() {
                max_cls = max_cls.max((trained[x * 2 * p.ny() + k] - optimal.row(i)[k]).abs());
            }
        }
    }
    assert!(max_cls < 1e-3, "classifier error {}", max_cls);

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "theory oracle took {:?}", elapsed);
    pass(
        "theory-oracle",
        format!(
            "identity {:.2e}<=1e-12, slack {:.2e}>=-1e-9, kl {:.2e}<1e-10, classifier {:.2e}<1e-3, {:.1?}",
            max_residual, min_slack, max_kl, max_cls, elapsed
        ),
    );
}

// ── criterion: EMA contraction ──────────────────────────────────────────

#[test]
fn acceptance_ema_contraction() {
    let mut max_budget_used = 0.0f64;
    for &gamma in &[0.1, 0.5, 0.9] {
        let n0 = 10.0;
        let k = 20usize;
        let mut tracker = ClassFrequencyTracker::new(1, gamma, n0).unwrap();
        for step in 1..=20i32 {
            tracker.update(&[k]);
            let measured = (tracker.values()[0] - k as f64).abs();
            let expected = (1.0 - gamma).powi(step) * (n0 - k as f64).abs();
            // Exactness budget: per-step rounding of the EMA recurrence.
            let budget = 64.0 * f64::EPSILON * k as f64 * step as f64;
            let dev = (measured - expected).abs();
            assert!(
                dev <= budget,
                "gamma {} step {}: |{} - {}| = {:e} > {:e}",
                gamma,
                step,
                measured,
                expected,
                dev,
                budget
            );
            max_budget_used = max_budget_used.max(if budget > 0.0 { dev / budget } else { 0.0 });
        }
    }
    // Dyadic gamma contracts bit-exactly.
    let mut tracker = ClassFrequencyTracker::new(1, 0.5, 10.0).unwrap();
    for step in 1..=40i32 {
        tracker.update(&[20]);
        assert_eq!((tracker.values()[0] - 20.0).abs(), 0.5f64.powi(step) * 10.0);
    }
    pass(
        "ema-contraction",
        format!(
            "gammas 0.1/0.5/0.9 exact within fp budget (worst {:.3}x), gamma 0.5 bit-exact to t=40",
            max_budget_used
        ),
    );
}

// ── criterion: vanishing-gradient probe ─────────────────────────────────

#[test]
fn acceptance_vanishing_gradient_probe() {
    let baseline = overfit_gradient_probe(0.5).unwrap();
    let collapsed = overfit_gradient_probe(1e-6).unwrap();
    let ratio = collapsed / baseline;
    assert!(ratio < 1e-5, "ratio {}", ratio);
    pass(
        "vanishing-gradient-probe",
        format!("factor(1e-6)/factor(0.5) = {:.3e} < 1e-5", ratio),
    );
}

// ── criterion: inflation and mix arithmetic ─────────────────────────────

#[test]
fn acceptance_inflation_mix_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for trial in 0..100 {
        let dc = rng.gen_range(1..=50);
        let ds = rng.gen_range(dc..=400);
        let collected = random_dataset(dc, 2, Provenance::Collected, &mut rng);
        let synthetic = random_dataset(ds, 2, Provenance::Synthetic, &mut rng);

        let n = default_inflation_factor(synthetic.len(), collected.len());
        assert_eq!(n, ds / dc, "trial {}: floor rule", trial);

        let inflated = inflate(&collected, n).unwrap();
        assert_eq!(inflated.len(), n * dc);
        // Whole-sequence repetition: copy k of example i is bit-identical.
        for k in 0..n {
            for i in 0..dc {
                assert_eq!(inflated.feature_row(k * dc + i), collected.feature_row(i));
            }
        }

        let hybrid = mix(&inflated, &synthetic, n, trial as u64).unwrap();
        let expected_alpha = (n * dc) as f64 / ((n * dc + ds) as f64);
        assert_eq!(hybrid.alpha(), expected_alpha, "trial {}: alpha", trial);
        assert_eq!(hybrid.len(), n * dc + ds);
    }
    pass(
        "inflation-mix-arithmetic",
        "floor rule and alpha exact over 100 random size pairs".to_string(),
    );
}

fn random_dataset(n: usize, classes: usize, prov: Provenance, rng: &mut ChaCha8Rng) -> Dataset {
    let features = (0..n * 2).map(|_| rng.gen::<f64>() * 8.0 - 4.0).collect();
    let labels = (0..n).map(|i| i % classes).collect();
    Dataset::from_parts(2, classes, features, labels, prov).unwrap()
}

// ── criterion: end-to-end directional ───────────────────────────────────

#[test]
fn acceptance_end_to_end_directional() {
    let seeds = [1u64, 2, 3, 4, 5];
    let mut students = Vec::new();
    let mut baselines = Vec::new();
    let mut minfreq_reg = Vec::new();
    let mut minfreq_noreg = Vec::new();
    let mut entropy_reg = Vec::new();
    let mut entropy_noreg = Vec::new();
    let mut agreement_trained = Vec::new();
    let mut agreement_untrained = Vec::new();
    let mut slowest = Duration::ZERO;

    for &seed in &seeds {
        let config = ExperimentConfig {
            master_seed: seed,
            ..ExperimentConfig::default()
        };

        let dir = tempfile::tempdir().unwrap();
        let started = Instant::now();
        let report = run_all(&config, dir.path()).unwrap();
        let elapsed = started.elapsed();
        slowest = slowest.max(elapsed);
        assert!(
            elapsed < Duration::from_secs(600),
            "pipeline took {:?} on seed {}",
            elapsed,
            seed
        );
        assert!(
            report.teacher_accuracy >= 0.95,
            "teacher accuracy {} on seed {}",
            report.teacher_accuracy,
            seed
        );
        students.push(report.student_accuracy);
        baselines.push(report.baseline_accuracy);
        minfreq_reg.push(report.generator.min_frequency);
        entropy_reg.push(report.generator.entropy);
        agreement_trained.push(report.generator.teacher_agreement);

        // Untrained generator of the same architecture: conditioning
        // agreement near chance.
        {
            let teacher = Network::load(dir.path(), "teacher").unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let untrained = ConditionalGenerator::new(
                config.classes,
                config.z_dim,
                config.embed_dim,
                &[config.gen_hidden, config.gen_hidden],
                2,
                &mut rng,
            )
            .unwrap();
            let h = hybrid_distill::generation::class_histogram(&untrained, &teacher, 250, seed)
                .unwrap();
            agreement_untrained.push(h.teacher_agreement);
        }

        // Regularizer ablation: same seed, same teacher and collected data,
        // GAN retrained without the balance term.
        let dir_noreg = tempfile::tempdir().unwrap();
        for name in ["teacher.meta", "teacher.bin", "collected.csv"] {
            std::fs::copy(dir.path().join(name), dir_noreg.path().join(name)).unwrap();
        }
        let mut config_noreg = config.clone();
        config_noreg.disable_reg = true;
        let gan = train_gan_phase(&config_noreg, dir_noreg.path()).unwrap();
        minfreq_noreg.push(gan.histogram.min_frequency);
        entropy_noreg.push(gan.histogram.entropy);

        println!(
            "  seed {}: student {:.4} baseline {:.4} | min-freq reg {:.3} vs no-reg {:.3} | {:.1?}",
            seed,
            report.student_accuracy,
            report.baseline_accuracy,
            report.generator.min_frequency,
            gan.histogram.min_frequency,
            elapsed
        );
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m_student, m_baseline) = (mean(&students), mean(&baselines));
    let (m_reg, m_noreg) = (mean(&minfreq_reg), mean(&minfreq_noreg));
    let (m_agree, m_untrained) = (mean(&agreement_trained), mean(&agreement_untrained));

    assert!(
        m_student >= m_baseline,
        "mean student accuracy {} < mean baseline {}",
        m_student,
        m_baseline
    );
    assert!(
        m_reg >= m_noreg,
        "mean min-frequency with regularizer {} < without {}",
        m_reg,
        m_noreg
    );
    assert!(
        mean(&entropy_reg) >= mean(&entropy_noreg),
        "mean histogram entropy with regularizer {} < without {}",
        mean(&entropy_reg),
        mean(&entropy_noreg)
    );
    assert!(
        m_agree >= m_untrained,
        "trained agreement {} < untrained {}",
        m_agree,
        m_untrained
    );

    pass(
        "end-to-end-directional",
        format!(
            "student {:.4} >= baseline {:.4}; min-freq reg {:.3} >= no-reg {:.3}; agreement {:.3} >= untrained {:.3}; slowest run {:.1?} < 600s",
            m_student, m_baseline, m_reg, m_noreg, m_agree, m_untrained, slowest
        ),
    );
}

// ── criterion: determinism ──────────────────────────────────────────────

#[test]
fn acceptance_run_all_determinism() {
    let config = ExperimentConfig {
        master_seed: 99,
        ..ExperimentConfig::default()
    };

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_all(&config, dir_a.path()).unwrap();
    run_all(&config, dir_b.path()).unwrap();

    let a = std::fs::read(dir_a.path().join(REPORT_FILE)).unwrap();
    let b = std::fs::read(dir_b.path().join(REPORT_FILE)).unwrap();
    assert_eq!(a, b, "report.json differs between identical runs");
    pass(
        "run-all-determinism",
        format!("report.json byte-identical across two executions ({} bytes)", a.len()),
    );
}

// ── criterion: learning-rate schedule ───────────────────────────────────

#[test]
fn acceptance_lr_schedule() {
    assert_eq!(schedule_breakpoints(240), [150, 180, 210]);
    let expect = [(149, 0.05), (150, 0.005), (180, 0.0005), (210, 0.00005)];
    for (epoch, lr) in expect {
        let got = lr_at_epoch(0.05, 240, epoch);
        assert!(
            (got - lr).abs() < 1e-15,
            "epoch {}: lr {} expected {}",
            epoch,
            got,
            lr
        );
    }
    // Scaled epoch counts keep the 150/240, 180/240, 210/240 fractions.
    assert_eq!(schedule_breakpoints(120), [75, 90, 105]);
    assert_eq!(schedule_breakpoints(24), [15, 18, 21]);
    assert!((lr_at_epoch(0.05, 120, 75) - 0.005).abs() < 1e-15);
    assert!((lr_at_epoch(0.05, 24, 21) - 0.00005).abs() < 1e-15);
    pass(
        "lr-schedule",
        "0.05 / 0.005 / 0.0005 / 0.00005 at the scaled breakpoints".to_string(),
    );
}
