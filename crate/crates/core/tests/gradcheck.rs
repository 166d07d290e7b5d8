//! Finite-difference checks for every primitive tape operation: analytic
//! gradients against central differences on randomized inputs.

mod common;

use common::assert_grads_match;
use hybrid_distill::tensor::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tensor(shape: &[usize], rng: &mut impl Rng, lo: f64, hi: f64) -> Tensor {
    let len = shape.iter().product();
    let data = (0..len).map(|_| lo + rng.gen::<f64>() * (hi - lo)).collect();
    Tensor::new(shape.to_vec(), data).unwrap().with_grad()
}

// One op through the FD harness: `build` maps the leaf vars to the op
// output; the loss is a randomized weighted sum of that output so the
// upstream gradient is non-uniform. A macro rather than a function keeps
// the tape-tied Var lifetimes out of the signature.
macro_rules! op_case {
    ($name:expr, $seed:expr, [$($shape:expr),+], ($lo:expr, $hi:expr), |$tape:ident, $vars:ident| $build:expr) => {{
        let mut rng = ChaCha8Rng::seed_from_u64($seed);
        let shapes: Vec<Vec<usize>> = vec![$($shape.to_vec()),+];
        let params: Vec<Tensor> = shapes.iter().map(|s| random_tensor(s, &mut rng, $lo, $hi)).collect();
        // Random output weights make the upstream gradient non-uniform.
        let weight_seed = $seed ^ 0xabcdef;

        let eval_once = |values: &[Tensor]| -> (f64, Vec<Tensor>) {
            let $tape = Tape::new();
            let $vars: Vec<Var<'_>> = values.iter().map(|t| $tape.leaf(t.clone())).collect();
            let out: Var<'_> = $build;
            let mut wrng = ChaCha8Rng::seed_from_u64(weight_seed);
            let w_len = out.value().len();
            let weights = Tensor::new(
                out.value().shape().to_vec(),
                (0..w_len).map(|_| wrng.gen::<f64>() * 2.0 - 1.0).collect(),
            )
            .unwrap();
            let loss = out.mul($tape.constant(weights)).unwrap().sum_all();
            let grads = $tape.backward(loss).unwrap();
            let gvec = $vars
                .iter()
                .zip(values)
                .map(|(v, p)| grads.get_or_zeros(*v, p.shape()))
                .collect();
            (loss.item(), gvec)
        };

        let (_, analytic) = eval_once(&params);
        assert_grads_match($name, &params, &analytic, &mut |vals| eval_once(vals).0);
    }};
}

#[test]
fn matmul_gradients() {
    op_case!("matmul", 1, [[3, 4], [4, 2]], (-1.0, 1.0), |tape, vars| {
        vars[0].matmul(vars[1]).unwrap()
    });
}

#[test]
fn add_sub_mul_gradients() {
    op_case!("add", 2, [[3, 3], [3, 3]], (-1.0, 1.0), |tape, vars| {
        vars[0].add(vars[1]).unwrap()
    });
    op_case!("sub", 3, [[2, 5], [2, 5]], (-1.0, 1.0), |tape, vars| {
        vars[0].sub(vars[1]).unwrap()
    });
    op_case!("mul", 4, [[4, 2], [4, 2]], (-1.0, 1.0), |tape, vars| {
        vars[0].mul(vars[1]).unwrap()
    });
}

#[test]
fn add_row_gradients() {
    op_case!("add_row", 5, [[4, 3], [3]], (-1.0, 1.0), |tape, vars| {
        vars[0].add_row(vars[1]).unwrap()
    });
}

#[test]
fn scale_and_add_const_gradients() {
    op_case!("scale", 6, [[3, 3]], (-1.0, 1.0), |tape, vars| vars[0].scale(-2.5));
    op_case!("add_const", 7, [[3, 3]], (-1.0, 1.0), |tape, vars| {
        vars[0].add_const(0.75)
    });
}

#[test]
fn relu_gradients_away_from_kink() {
    // Values bounded away from 0 keep the central difference valid.
    op_case!("relu+", 8, [[4, 4]], (0.2, 1.5), |tape, vars| vars[0].relu());
    op_case!("relu-", 9, [[4, 4]], (-1.5, -0.2), |tape, vars| vars[0].relu());
}

#[test]
fn exp_log_xlogx_gradients() {
    op_case!("exp", 10, [[3, 4]], (-1.0, 1.0), |tape, vars| vars[0].exp());
    op_case!("log", 11, [[3, 4]], (0.2, 2.0), |tape, vars| vars[0].log());
    op_case!("xlogx", 12, [[3, 4]], (0.1, 1.0), |tape, vars| vars[0].xlogx());
}

#[test]
fn sigmoid_family_gradients() {
    op_case!("sigmoid", 13, [[3, 4]], (-3.0, 3.0), |tape, vars| vars[0].sigmoid());
    op_case!("log_sigmoid", 14, [[3, 4]], (-3.0, 3.0), |tape, vars| {
        vars[0].log_sigmoid()
    });
}

#[test]
fn log_softmax_gradients() {
    op_case!("log_softmax", 15, [[4, 5]], (-2.0, 2.0), |tape, vars| {
        vars[0].log_softmax().unwrap()
    });
}

#[test]
fn reduction_gradients() {
    op_case!("mean_all", 16, [[4, 3]], (-1.0, 1.0), |tape, vars| {
        vars[0].mean_all().unwrap()
    });
    op_case!("sum_all", 17, [[4, 3]], (-1.0, 1.0), |tape, vars| vars[0].sum_all());
    op_case!("mean_rows", 18, [[5, 3]], (-1.0, 1.0), |tape, vars| {
        vars[0].mean_rows().unwrap()
    });
}

#[test]
fn concat_gradients() {
    op_case!("concat_cols", 19, [[3, 2], [3, 4]], (-1.0, 1.0), |tape, vars| {
        vars[0].concat_cols(vars[1]).unwrap()
    });
}

#[test]
fn distance_gradients() {
    op_case!("sq_dist", 20, [[4, 3], [4, 3]], (-1.0, 1.0), |tape, vars| {
        vars[0].sq_dist(vars[1]).unwrap()
    });
    // Rows kept apart so the norm is differentiable.
    op_case!("l2_dist", 21, [[4, 3], [4, 3]], (2.0, 3.0), |tape, vars| {
        let shifted = vars[1].scale(-1.0);
        vars[0].l2_dist(shifted).unwrap()
    });
}

#[test]
fn pick_and_gather_gradients() {
    op_case!("pick", 22, [[4, 5]], (-1.0, 1.0), |tape, vars| {
        vars[0].pick(&[0, 4, 2, 2]).unwrap()
    });
    op_case!("gather_rows", 23, [[5, 3]], (-1.0, 1.0), |tape, vars| {
        vars[0].gather_rows(&[1, 1, 4, 0]).unwrap()
    });
}

#[test]
fn composite_network_gradient() {
    // A two-layer network with a softmax cross-entropy head, checked as a
    // whole composite expression.
    op_case!("composite", 24, [[3, 4], [4], [4, 3], [3]], (-0.8, 0.8), |tape, vars| {
        let x = tape.constant(
            Tensor::new(vec![5, 3], (0..15).map(|v| (v as f64) * 0.13 - 1.0).collect()).unwrap(),
        );
        let h = x.matmul(vars[0]).unwrap().add_row(vars[1]).unwrap().relu();
        let logits = h.matmul(vars[2]).unwrap().add_row(vars[3]).unwrap();
        logits.log_softmax().unwrap().pick(&[0, 2, 1, 0, 2]).unwrap()
    });
}
