//! Numeric verification of the distributional identities behind hybrid-data
//! training, on finite discrete distributions where they hold exactly:
//!
//! - total variation distance, its triangle inequality, and the mixture
//!   identities `TVD(U,P) = (1-a)*TVD(Q,P)` and
//!   `TVD(U,Q) <= (2-a)*TVD(P,Q)` for `U = a*P + (1-a)*Q`;
//! - the closed-form optimal real/fake classifier
//!   `psi(y+|x) = p(x,y)/(p(x)+q(x))`, `psi(y-|x) = q(x,y)/(p(x)+q(x))`,
//!   cross-checked against a gradient-trained tabular classifier;
//! - the equivalence of the classifiability objective with
//!   `-KL(Q_xy || P_xy)` at the optimal classifier;
//! - the vanishing generator gradient once the discriminator is confident
//!   on fakes.

use rand::Rng;
use thiserror::Error;

use crate::optim::Adam;
use crate::tensor::{Tape, Tensor};

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("distribution is not normalized: mass = {0}")]
    NotNormalized(f64),
}

const MASS_TOLERANCE: f64 = 1e-9;

fn check_distribution(p: &[f64], name: &str) -> Result<(), TheoryError> {
    if p.iter().any(|&v| v < 0.0) {
        return Err(TheoryError::Domain(format!("{} has negative entries", name)));
    }
    let mass: f64 = p.iter().sum();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(TheoryError::NotNormalized(mass));
    }
    Ok(())
}

/// Total variation distance `0.5 * sum |P - Q|` between distributions on a
/// common finite support. Symmetric, in [0, 1].
pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64, TheoryError> {
    if p.len() != q.len() {
        return Err(TheoryError::SupportMismatch(format!(
            "{} vs {} atoms",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p, "P")?;
    check_distribution(q, "Q")?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Shannon entropy in nats, with 0*ln(0) = 0.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).sum::<f64>()
}

/// Scalars of the mixture identities for `U = alpha*P + (1-alpha)*Q`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MixtureIdentities {
    pub alpha: f64,
    pub tvd_qp: f64,
    pub tvd_up: f64,
    pub tvd_uq: f64,
    /// `|TVD(U,P) - (1-alpha)*TVD(Q,P)|`; zero up to rounding.
    pub identity_residual: f64,
    /// `(2-alpha)*TVD(P,Q) - TVD(U,Q)`; nonnegative up to rounding.
    pub bound_slack: f64,
}

pub fn mixture_identities(
    p: &[f64],
    q: &[f64],
    alpha: f64,
) -> Result<MixtureIdentities, TheoryError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(TheoryError::Domain(format!("alpha {} outside [0, 1]", alpha)));
    }
    let u: Vec<f64> = p
        .iter()
        .zip(q)
        .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
        .collect();
    let tvd_qp = tvd(q, p)?;
    let tvd_up = tvd(&u, p)?;
    let tvd_uq = tvd(&u, q)?;
    Ok(MixtureIdentities {
        alpha,
        tvd_qp,
        tvd_up,
        tvd_uq,
        identity_residual: (tvd_up - (1.0 - alpha) * tvd_qp).abs(),
        bound_slack: (2.0 - alpha) * tvd(p, q)? - tvd_uq,
    })
}

/// A joint probability table over X x Y. Entries are nonnegative and sum
/// to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    nx: usize,
    ny: usize,
    table: Vec<f64>, // row-major, table[x*ny + y]
}

impl DiscreteJoint {
    pub fn new(nx: usize, ny: usize, table: Vec<f64>) -> Result<Self, TheoryError> {
        if table.len() != nx * ny {
            return Err(TheoryError::SupportMismatch(format!(
                "{} entries for a {}x{} table",
                table.len(),
                nx,
                ny
            )));
        }
        if table.iter().any(|&v| v < 0.0) {
            return Err(TheoryError::Domain("negative probability".into()));
        }
        let mass: f64 = table.iter().sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(TheoryError::NotNormalized(mass));
        }
        Ok(DiscreteJoint { nx, ny, table })
    }

    /// A strictly positive random joint, normalized.
    pub fn random(nx: usize, ny: usize, rng: &mut impl Rng) -> Self {
        let mut table: Vec<f64> = (0..nx * ny).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let mass: f64 = table.iter().sum();
        for v in &mut table {
            *v /= mass;
        }
        // Division leaves rounding-level drift; absorb it into the last cell
        // so the mass invariant holds exactly enough.
        let drift: f64 = table.iter().sum::<f64>() - 1.0;
        *table.last_mut().unwrap() -= drift;
        DiscreteJoint::new(nx, ny, table).expect("random joint is valid")
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.table[x * self.ny + y]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|x| self.table[x * self.ny..(x + 1) * self.ny].iter().sum())
            .collect()
    }

    pub fn flat(&self) -> &[f64] {
        &self.table
    }
}

/// The closed-form optimal real/fake classifier for fixed distributions:
/// row x holds `[p(x,y)/(p(x)+q(x)) for y] ++ [q(x,y)/(p(x)+q(x)) for y]`.
/// Rows with zero combined mass are dropped and reported via `rows`.
#[derive(Debug, Clone)]
pub struct OptimalClassifier {
    pub rows: Vec<usize>,
    pub table: Vec<f64>, // |rows| x 2*ny
    pub ny: usize,
}

impl OptimalClassifier {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.table[i * 2 * self.ny..(i + 1) * 2 * self.ny]
    }
}

pub fn optimal_adc_classifier(
    p: &DiscreteJoint,
    q: &DiscreteJoint,
) -> Result<OptimalClassifier, TheoryError> {
    if p.nx != q.nx || p.ny != q.ny {
        return Err(TheoryError::SupportMismatch(format!(
            "{}x{} vs {}x{}",
            p.nx, p.ny, q.nx, q.ny
        )));
    }
    let px = p.marginal_x();
    let qx = q.marginal_x();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for x in 0..p.nx {
        let mass = px[x] + qx[x];
        if mass <= 0.0 {
            continue;
        }
        rows.push(x);
        for y in 0..p.ny {
            table.push(p.prob(x, y) / mass);
        }
        for y in 0..p.ny {
            table.push(q.prob(x, y) / mass);
        }
    }
    Ok(OptimalClassifier { rows, table, ny: p.ny })
}

/// Trains a tabular 2Y-way classifier by gradient ascent on the expected
/// log-likelihood objective the discriminator's class head maximizes:
/// `E_P[log psi(y+|x)] + E_Q[log psi(y-|x)]`. Returns softmax probabilities
/// per x, shape nx x 2*ny. At convergence this matches the closed form.
pub fn train_tabular_classifier(
    p: &DiscreteJoint,
    q: &DiscreteJoint,
    steps: usize,
    lr: f64,
) -> Result<Vec<f64>, TheoryError> {
    if p.nx != q.nx || p.ny != q.ny {
        return Err(TheoryError::SupportMismatch(format!(
            "{}x{} vs {}x{}",
            p.nx, p.ny, q.nx, q.ny
        )));
    }
    let (nx, ny) = (p.nx, p.ny);
    // Weight matrix: row x holds [p(x, .) | q(x, .)]; the objective is the
    // weighted sum of log-softmax entries, minimized in negated form.
    let mut weights = Vec::with_capacity(nx * 2 * ny);
    for x in 0..nx {
        weights.extend((0..ny).map(|y| p.prob(x, y)));
        weights.extend((0..ny).map(|y| q.prob(x, y)));
    }
    let weight_t = Tensor::new(vec![nx, 2 * ny], weights).expect("weight shape");

    let mut logits = Tensor::zeros(&[nx, 2 * ny]).with_grad();
    let mut adam = Adam::with_defaults();
    for step in 0..steps {
        // Constant-rate Adam plateaus at lr-scale noise around the optimum;
        // two decade drops give tail convergence.
        let step_lr = if step * 10 < steps * 6 {
            lr
        } else if step * 10 < steps * 85 / 10 {
            lr * 0.1
        } else {
            lr * 0.01
        };
        let tape = Tape::new();
        let l = tape.leaf(logits.clone());
        let w = tape.constant(weight_t.clone());
        let objective = l
            .log_softmax()
            .expect("rank-2 logits")
            .mul(w)
            .expect("same shape")
            .sum_all()
            .scale(-1.0);
        let grads = tape.backward(objective).expect("scalar loss");
        let g = grads.get(l).expect("logits gradient").clone();
        adam.step(step_lr, &mut [&mut logits], &[g]).expect("aligned shapes");
    }
    Ok(logits.log_softmax().expect("rank-2 logits").exp().data().to_vec())
}

/// Both sides of the classifiability equivalence at the optimal classifier.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct KlEquivalence {
    /// `E_Q[log psi(y+|x)] - E_Q[log psi(y-|x)]`
    pub lhs: f64,
    /// `-KL(Q_xy || P_xy)`
    pub rhs: f64,
    pub residual: f64,
}

/// Checks `E_Q[log psi*(y+|x)] - E_Q[log psi*(y-|x)] = -KL(Q_xy || P_xy)`.
/// Cells with q = 0 contribute nothing; q > 0 where p = 0 is a domain error.
pub fn kl_equivalence_check(
    p: &DiscreteJoint,
    q: &DiscreteJoint,
) -> Result<KlEquivalence, TheoryError> {
    let optimal = optimal_adc_classifier(p, q)?;
    let ny = p.ny;
    let mut lhs = 0.0;
    let mut kl = 0.0;
    for (i, &x) in optimal.rows.iter().enumerate() {
        let row = optimal.row(i);
        for y in 0..ny {
            let qxy = q.prob(x, y);
            if qxy == 0.0 {
                continue;
            }
            let pxy = p.prob(x, y);
            if pxy == 0.0 {
                return Err(TheoryError::Domain(format!(
                    "q({}, {}) > 0 but p({}, {}) = 0",
                    x, y, x, y
                )));
            }
            lhs += qxy * (row[y].ln() - row[ny + y].ln());
            kl += qxy * (qxy / pxy).ln();
        }
    }
    // Dropped rows carry q-mass only if q(x) > 0 with p(x)+q(x) = 0, which
    // cannot happen; no correction needed.
    let rhs = -kl;
    Ok(KlEquivalence {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Magnitude of the generator's adversarial gradient factor at a given
/// discriminator fake-score, measured through the tape: the derivative of
/// `log(1 - sigmoid(s(x)))` with respect to the generator output x for a
/// score function with unit slope. Tends to zero with the score.
pub fn overfit_gradient_probe(score: f64) -> Result<f64, TheoryError> {
    if !(0.0 < score && score < 1.0) {
        return Err(TheoryError::Domain(format!("score {} outside (0, 1)", score)));
    }
    let logit = (score / (1.0 - score)).ln();
    let tape = Tape::new();
    let x = tape.leaf(Tensor::scalar(0.0).with_grad());
    // s(x) = x + logit(score), so sigmoid(s(0)) equals the requested score.
    let s = x.add_const(logit);
    let loss = s.scale(-1.0).log_sigmoid(); // log(1 - sigmoid(s))
    let grads = tape.backward(loss).expect("scalar loss");
    Ok(grads.get(x).expect("input gradient").data()[0].abs())
}
