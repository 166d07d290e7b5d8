//! Network definitions: MLP feature extractors, classifier heads, the
//! conditional generator, and the discriminator with an adversarial head
//! plus a 2C-way real/fake class head over a shared feature extractor.
//!
//! Every network is a plain record of parameter tensors. Inference runs on
//! the raw [`Tensor`] kernels; training binds the parameters onto a [`Tape`]
//! (`bind`), which registers them as leaves so gradients can be collected
//! in the same order as [`params`](FeatureNetwork::params).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use thiserror::Error;

use crate::tensor::{Gradients, Tape, Tensor, TensorError, Var};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply_plain(self, x: Tensor) -> Tensor {
        match self {
            Activation::Relu => x.relu(),
            Activation::Identity => x,
        }
    }

    fn apply_var<'t>(self, x: Var<'t>) -> Var<'t> {
        match self {
            Activation::Relu => x.relu(),
            Activation::Identity => x,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    fn parse(s: &str) -> Result<Self, ModelError> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(ModelError::Checkpoint(format!("unknown activation {:?}", other))),
        }
    }
}

/// Glorot-uniform initialization: uniform in ±sqrt(6/(fan_in+fan_out)).
fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * limit)
        .collect();
    Tensor::new(vec![rows, cols], data).expect("init shape").with_grad()
}

#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor, // (in_dim, out_dim)
    pub bias: Tensor,   // (out_dim,)
}

impl Linear {
    fn new(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        Linear {
            weight: glorot(in_dim, out_dim, rng),
            bias: Tensor::zeros(&[out_dim]).with_grad(),
        }
    }

    fn zeroed(in_dim: usize, out_dim: usize) -> Self {
        Linear {
            weight: Tensor::zeros(&[in_dim, out_dim]).with_grad(),
            bias: Tensor::zeros(&[out_dim]).with_grad(),
        }
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor, TensorError> {
        x.matmul(&self.weight)?.add_row(&self.bias)
    }
}

/// Feature extractor: a stack of linear layers with per-layer activations.
#[derive(Debug, Clone)]
pub struct FeatureNetwork {
    layers: Vec<Linear>,
    activations: Vec<Activation>,
}

impl FeatureNetwork {
    /// Builds an MLP over `dims` (input, hidden..., output) with ReLU on
    /// hidden layers and a linear output.
    pub fn mlp(dims: &[usize], rng: &mut impl Rng) -> Result<Self, ModelError> {
        if dims.len() < 2 {
            return Err(ModelError::Config(format!(
                "feature network needs at least input and output dims, got {:?}",
                dims
            )));
        }
        let mut layers = Vec::new();
        let mut activations = Vec::new();
        for w in dims.windows(2) {
            layers.push(Linear::new(w[0], w[1], rng));
            activations.push(Activation::Relu);
        }
        *activations.last_mut().unwrap() = Activation::Identity;
        Ok(FeatureNetwork { layers, activations })
    }

    fn zeroed(dims: &[usize], activations: Vec<Activation>) -> Self {
        let layers = dims.windows(2).map(|w| Linear::zeroed(w[0], w[1])).collect();
        FeatureNetwork { layers, activations }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].weight.shape()[0]
    }

    pub fn feature_dim(&self) -> usize {
        self.layers.last().unwrap().weight.shape()[1]
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.in_dim()];
        dims.extend(self.layers.iter().map(|l| l.weight.shape()[1]));
        dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        if x.shape().len() != 2 || x.shape()[1] != self.in_dim() {
            return Err(ModelError::Config(format!(
                "input shape {:?} does not match network input dim {}",
                x.shape(),
                self.in_dim()
            )));
        }
        let mut h = x.clone();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            h = act.apply_plain(layer.forward(&h)?);
        }
        Ok(h)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> BoundFeatures<'t> {
        let vars = self
            .layers
            .iter()
            .map(|l| {
                let (w, b) = (l.weight.clone(), l.bias.clone());
                if trainable {
                    (tape.leaf(w), tape.leaf(b))
                } else {
                    (tape.constant(w), tape.constant(b))
                }
            })
            .collect();
        BoundFeatures {
            vars,
            activations: self.activations.clone(),
            in_dim: self.in_dim(),
            feature_dim: self.feature_dim(),
        }
    }
}

/// A feature network bound onto a tape for one training step.
pub struct BoundFeatures<'t> {
    vars: Vec<(Var<'t>, Var<'t>)>,
    activations: Vec<Activation>,
    in_dim: usize,
    feature_dim: usize,
}

impl<'t> BoundFeatures<'t> {
    pub fn forward(&self, x: Var<'t>) -> Result<Var<'t>, ModelError> {
        let shape = x.shape();
        if shape.len() != 2 || shape[1] != self.in_dim {
            return Err(ModelError::Config(format!(
                "input shape {:?} does not match network input dim {}",
                shape, self.in_dim
            )));
        }
        let mut h = x;
        for ((w, b), act) in self.vars.iter().zip(&self.activations) {
            h = act.apply_var(h.matmul(*w)?.add_row(*b)?);
        }
        Ok(h)
    }

    pub fn param_vars(&self) -> Vec<Var<'t>> {
        self.vars.iter().flat_map(|(w, b)| [*w, *b]).collect()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }
}

/// Collects gradients for bound parameter vars, zero-filled where a
/// parameter did not participate in the loss.
pub fn collect_grads(vars: &[Var<'_>], params: &[&Tensor], grads: &Gradients) -> Vec<Tensor> {
    vars.iter()
        .zip(params)
        .map(|(v, p)| grads.get_or_zeros(*v, p.shape()))
        .collect()
}

/// Linear classifier over features: logits = feat * W (+ bias).
#[derive(Debug, Clone)]
pub struct ClassifierHead {
    pub weight: Tensor, // (feature_dim, classes)
    pub bias: Option<Tensor>,
}

impl ClassifierHead {
    pub fn new(feature_dim: usize, classes: usize, rng: &mut impl Rng) -> Self {
        ClassifierHead {
            weight: glorot(feature_dim, classes, rng),
            bias: Some(Tensor::zeros(&[classes]).with_grad()),
        }
    }

    fn zeroed(feature_dim: usize, classes: usize, with_bias: bool) -> Self {
        ClassifierHead {
            weight: Tensor::zeros(&[feature_dim, classes]).with_grad(),
            bias: with_bias.then(|| Tensor::zeros(&[classes]).with_grad()),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn classes(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn logits(&self, features: &Tensor) -> Result<Tensor, ModelError> {
        let l = features.matmul(&self.weight)?;
        Ok(match &self.bias {
            Some(b) => l.add_row(b)?,
            None => l,
        })
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut p = vec![&self.weight];
        if let Some(b) = &self.bias {
            p.push(b);
        }
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = vec![&mut self.weight];
        if let Some(b) = &mut self.bias {
            p.push(b);
        }
        p
    }

    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> BoundHead<'t> {
        let reg = |t: Tensor| if trainable { tape.leaf(t) } else { tape.constant(t) };
        BoundHead {
            weight: reg(self.weight.clone()),
            bias: self.bias.clone().map(reg),
        }
    }
}

pub struct BoundHead<'t> {
    pub weight: Var<'t>,
    pub bias: Option<Var<'t>>,
}

impl<'t> BoundHead<'t> {
    pub fn logits(&self, features: Var<'t>) -> Result<Var<'t>, ModelError> {
        let l = features.matmul(self.weight)?;
        Ok(match self.bias {
            Some(b) => l.add_row(b)?,
            None => l,
        })
    }
}

/// Shares a trained classifier head with a student whose feature extractor
/// must produce features of the same dimension. The returned head is a
/// parameter-identical copy; callers keep it out of the student optimizer.
pub fn share_classifier(
    head: &ClassifierHead,
    student_feature_dim: usize,
) -> Result<ClassifierHead, ModelError> {
    if head.feature_dim() != student_feature_dim {
        return Err(ModelError::Config(format!(
            "classifier expects features of dim {}, student produces {}",
            head.feature_dim(),
            student_feature_dim
        )));
    }
    Ok(head.clone())
}

/// A classifier network: feature extractor plus head.
#[derive(Debug, Clone)]
pub struct Network {
    pub phi: FeatureNetwork,
    pub head: ClassifierHead,
}

impl Network {
    pub fn new(phi_dims: &[usize], classes: usize, rng: &mut impl Rng) -> Result<Self, ModelError> {
        let phi = FeatureNetwork::mlp(phi_dims, rng)?;
        let head = ClassifierHead::new(phi.feature_dim(), classes, rng);
        Ok(Network { phi, head })
    }

    pub fn classes(&self) -> usize {
        self.head.classes()
    }

    pub fn feature_dim(&self) -> usize {
        self.phi.feature_dim()
    }

    pub fn logits(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        self.head.logits(&self.phi.forward(x)?)
    }

    /// Row-wise softmax probabilities.
    pub fn softmax(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        Ok(self.logits(x)?.log_softmax()?.exp())
    }

    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>, ModelError> {
        Ok(argmax_rows(&self.logits(x)?))
    }
}

/// Row-wise argmax of a matrix. Ties resolve to the lowest index.
pub fn argmax_rows(t: &Tensor) -> Vec<usize> {
    let rows = t.shape()[0];
    let cols = t.shape()[1];
    (0..rows)
        .map(|i| {
            let row = &t.data()[i * cols..(i + 1) * cols];
            let mut best = 0;
            for j in 1..cols {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Discriminator with a shared feature extractor, an adversarial head, and
/// per-class embeddings for real and fake labels. The 2C class logits are
/// `[feat * W_real | feat * W_fake]`, normalized by a single softmax.
#[derive(Debug, Clone)]
pub struct AdcDiscriminator {
    pub phi: FeatureNetwork,
    pub adv: Linear,          // feature_dim -> 1
    pub class_real: Tensor,   // (feature_dim, classes)
    pub class_fake: Tensor,   // (feature_dim, classes)
}

impl AdcDiscriminator {
    pub fn new(phi_dims: &[usize], classes: usize, rng: &mut impl Rng) -> Result<Self, ModelError> {
        let phi = FeatureNetwork::mlp(phi_dims, rng)?;
        let f = phi.feature_dim();
        Ok(AdcDiscriminator {
            phi,
            adv: Linear::new(f, 1, rng),
            class_real: glorot(f, classes, rng),
            class_fake: glorot(f, classes, rng),
        })
    }

    pub fn classes(&self) -> usize {
        self.class_real.shape()[1]
    }

    pub fn feature_dim(&self) -> usize {
        self.phi.feature_dim()
    }

    /// Pre-sigmoid adversarial scores, shape (batch, 1).
    pub fn adv_logits(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        Ok(self.adv.forward(&self.phi.forward(x)?)?)
    }

    fn class_logits_from(&self, features: &Tensor) -> Result<Tensor, TensorError> {
        features
            .matmul(&self.class_real)?
            .concat_cols(&features.matmul(&self.class_fake)?)
    }

    /// Joint class probabilities, shape (batch, 2C): the first C columns are
    /// real-class probabilities, the last C fake-class. Rows sum to 1.
    pub fn adc_class_probs(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        let feat = self.phi.forward(x)?;
        Ok(self.class_logits_from(&feat)?.log_softmax()?.exp())
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut p = self.phi.params();
        p.push(&self.adv.weight);
        p.push(&self.adv.bias);
        p.push(&self.class_real);
        p.push(&self.class_fake);
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.phi.params_mut();
        p.push(&mut self.adv.weight);
        p.push(&mut self.adv.bias);
        p.push(&mut self.class_real);
        p.push(&mut self.class_fake);
        p
    }

    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> BoundDiscriminator<'t> {
        let reg = |t: Tensor| if trainable { tape.leaf(t) } else { tape.constant(t) };
        BoundDiscriminator {
            phi: self.phi.bind(tape, trainable),
            adv_w: reg(self.adv.weight.clone()),
            adv_b: reg(self.adv.bias.clone()),
            class_real: reg(self.class_real.clone()),
            class_fake: reg(self.class_fake.clone()),
        }
    }
}

pub struct BoundDiscriminator<'t> {
    pub phi: BoundFeatures<'t>,
    adv_w: Var<'t>,
    adv_b: Var<'t>,
    class_real: Var<'t>,
    class_fake: Var<'t>,
}

impl<'t> BoundDiscriminator<'t> {
    pub fn features(&self, x: Var<'t>) -> Result<Var<'t>, ModelError> {
        self.phi.forward(x)
    }

    pub fn adv_logits(&self, features: Var<'t>) -> Result<Var<'t>, ModelError> {
        Ok(features.matmul(self.adv_w)?.add_row(self.adv_b)?)
    }

    /// 2C-way class logits `[feat * W_real | feat * W_fake]`.
    pub fn class_logits(&self, features: Var<'t>) -> Result<Var<'t>, ModelError> {
        Ok(features
            .matmul(self.class_real)?
            .concat_cols(features.matmul(self.class_fake)?)?)
    }

    pub fn param_vars(&self) -> Vec<Var<'t>> {
        let mut v = self.phi.param_vars();
        v.push(self.adv_w);
        v.push(self.adv_b);
        v.push(self.class_real);
        v.push(self.class_fake);
        v
    }
}

/// Conditional generator: a learned label embedding concatenated to the
/// noise vector feeds an MLP body that maps to data space.
#[derive(Debug, Clone)]
pub struct ConditionalGenerator {
    pub embedding: Tensor, // (classes, embed_dim)
    pub body: FeatureNetwork,
}

impl ConditionalGenerator {
    pub fn new(
        classes: usize,
        z_dim: usize,
        embed_dim: usize,
        hidden: &[usize],
        data_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        let mut dims = vec![z_dim + embed_dim];
        dims.extend_from_slice(hidden);
        dims.push(data_dim);
        Ok(ConditionalGenerator {
            embedding: glorot(classes, embed_dim, rng),
            body: FeatureNetwork::mlp(&dims, rng)?,
        })
    }

    pub fn classes(&self) -> usize {
        self.embedding.shape()[0]
    }

    pub fn z_dim(&self) -> usize {
        self.body.in_dim() - self.embedding.shape()[1]
    }

    pub fn data_dim(&self) -> usize {
        self.body.feature_dim()
    }

    fn check_labels(&self, labels: &[usize], batch: usize) -> Result<(), ModelError> {
        if labels.len() != batch {
            return Err(ModelError::Config(format!(
                "{} labels for a batch of {}",
                labels.len(),
                batch
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.classes()) {
            return Err(ModelError::Config(format!(
                "label {} out of range for {} classes",
                bad,
                self.classes()
            )));
        }
        Ok(())
    }

    pub fn generate(&self, z: &Tensor, labels: &[usize]) -> Result<Tensor, ModelError> {
        self.check_labels(labels, z.shape()[0])?;
        let emb = self.embedding.gather_rows(labels)?;
        self.body.forward(&z.concat_cols(&emb)?)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut p = vec![&self.embedding];
        p.extend(self.body.params());
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = vec![&mut self.embedding];
        p.extend(self.body.params_mut());
        p
    }

    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> BoundGenerator<'t> {
        let emb = if trainable {
            tape.leaf(self.embedding.clone())
        } else {
            tape.constant(self.embedding.clone())
        };
        BoundGenerator {
            embedding: emb,
            body: self.body.bind(tape, trainable),
            classes: self.classes(),
        }
    }
}

pub struct BoundGenerator<'t> {
    embedding: Var<'t>,
    body: BoundFeatures<'t>,
    classes: usize,
}

impl<'t> BoundGenerator<'t> {
    /// Generates a differentiable fake batch from constant noise.
    pub fn generate(&self, tape: &'t Tape, z: &Tensor, labels: &[usize]) -> Result<Var<'t>, ModelError> {
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.classes) {
            return Err(ModelError::Config(format!(
                "label {} out of range for {} classes",
                bad, self.classes
            )));
        }
        let z = tape.constant(z.clone());
        let emb = self.embedding.gather_rows(labels)?;
        self.body.forward(z.concat_cols(emb)?)
    }

    pub fn param_vars(&self) -> Vec<Var<'t>> {
        let mut v = vec![self.embedding];
        v.extend(self.body.param_vars());
        v
    }
}

// ── checkpoints ─────────────────────────────────────────────────────────
//
// A checkpoint is a text manifest (key=value lines: kind, layer shapes,
// seed, feature_dim) plus a flat little-endian f64 array holding every
// parameter in `params()` order. Loading is bit-exact.

fn meta_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{}.meta", name))
}

fn bin_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{}.bin", name))
}

fn write_params(path: &Path, params: &[&Tensor]) -> Result<(), ModelError> {
    let mut bytes = Vec::new();
    for p in params {
        for v in p.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

fn read_params(path: &Path, params: &mut [&mut Tensor]) -> Result<(), ModelError> {
    let bytes = fs::read(path)?;
    let expected: usize = params.iter().map(|p| p.len()).sum();
    if bytes.len() != expected * 8 {
        return Err(ModelError::Checkpoint(format!(
            "{}: expected {} parameter values, file holds {} bytes",
            path.display(),
            expected,
            bytes.len()
        )));
    }
    let mut offset = 0;
    for p in params.iter_mut() {
        for v in p.data_mut() {
            let chunk: [u8; 8] = bytes[offset..offset + 8].try_into().unwrap();
            *v = f64::from_le_bytes(chunk);
            offset += 8;
        }
    }
    Ok(())
}

struct Meta {
    entries: Vec<(String, String)>,
}

impl Meta {
    fn new(kind: &str, seed: u64) -> Self {
        Meta {
            entries: vec![
                ("kind".into(), kind.into()),
                ("seed".into(), seed.to_string()),
            ],
        }
    }

    fn push(&mut self, key: &str, value: String) {
        self.entries.push((key.into(), value));
    }

    fn push_dims(&mut self, key: &str, dims: &[usize]) {
        let s = dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        self.push(key, s);
    }

    fn push_acts(&mut self, key: &str, acts: &[Activation]) {
        let s = acts.iter().map(|a| a.name()).collect::<Vec<_>>().join(",");
        self.push(key, s);
    }

    fn write(&self, path: &Path) -> Result<(), ModelError> {
        let body: String = self
            .entries
            .iter()
            .map(|(k, v)| format!("{}={}\n", k, v))
            .collect();
        fs::write(path, body)?;
        Ok(())
    }

    fn read(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path)?;
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ModelError::Checkpoint(format!("{}: malformed line {:?}", path.display(), line))
            })?;
            entries.push((k.to_string(), v.to_string()));
        }
        Ok(Meta { entries })
    }

    fn get(&self, key: &str) -> Result<&str, ModelError> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| ModelError::Checkpoint(format!("missing key {:?}", key)))
    }

    fn get_dims(&self, key: &str) -> Result<Vec<usize>, ModelError> {
        self.get(key)?
            .split(',')
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| ModelError::Checkpoint(format!("bad dims in {:?}", key)))
            })
            .collect()
    }

    fn get_acts(&self, key: &str) -> Result<Vec<Activation>, ModelError> {
        self.get(key)?.split(',').map(Activation::parse).collect()
    }

    fn get_usize(&self, key: &str) -> Result<usize, ModelError> {
        self.get(key)?
            .parse::<usize>()
            .map_err(|_| ModelError::Checkpoint(format!("bad integer in {:?}", key)))
    }

    fn expect_kind(&self, kind: &str) -> Result<(), ModelError> {
        let found = self.get("kind")?;
        if found != kind {
            return Err(ModelError::Checkpoint(format!(
                "checkpoint kind {:?}, expected {:?}",
                found, kind
            )));
        }
        Ok(())
    }
}

impl Network {
    pub fn save(&self, dir: &Path, name: &str, seed: u64) -> Result<(), ModelError> {
        let mut meta = Meta::new("classifier", seed);
        meta.push_dims("phi_dims", &self.phi.dims());
        meta.push_acts("phi_acts", self.phi.activations());
        meta.push("classes", self.classes().to_string());
        meta.push("feature_dim", self.feature_dim().to_string());
        meta.push("head_bias", self.head.bias.is_some().to_string());
        meta.write(&meta_path(dir, name))?;
        write_params(&bin_path(dir, name), &self.params())
    }

    pub fn load(dir: &Path, name: &str) -> Result<Self, ModelError> {
        let meta = Meta::read(&meta_path(dir, name))?;
        meta.expect_kind("classifier")?;
        let dims = meta.get_dims("phi_dims")?;
        let acts = meta.get_acts("phi_acts")?;
        let classes = meta.get_usize("classes")?;
        let with_bias = meta.get("head_bias")? == "true";
        let phi = FeatureNetwork::zeroed(&dims, acts);
        let head = ClassifierHead::zeroed(phi.feature_dim(), classes, with_bias);
        let mut net = Network { phi, head };
        read_params(&bin_path(dir, name), &mut net.params_mut())?;
        Ok(net)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut p = self.phi.params();
        p.extend(self.head.params());
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.phi.params_mut();
        p.extend(self.head.params_mut());
        p
    }
}

impl ConditionalGenerator {
    pub fn save(&self, dir: &Path, name: &str, seed: u64) -> Result<(), ModelError> {
        let mut meta = Meta::new("generator", seed);
        meta.push("classes", self.classes().to_string());
        meta.push("embed_dim", self.embedding.shape()[1].to_string());
        meta.push_dims("body_dims", &self.body.dims());
        meta.push_acts("body_acts", self.body.activations());
        meta.write(&meta_path(dir, name))?;
        write_params(&bin_path(dir, name), &self.params())
    }

    pub fn load(dir: &Path, name: &str) -> Result<Self, ModelError> {
        let meta = Meta::read(&meta_path(dir, name))?;
        meta.expect_kind("generator")?;
        let classes = meta.get_usize("classes")?;
        let embed_dim = meta.get_usize("embed_dim")?;
        let dims = meta.get_dims("body_dims")?;
        let acts = meta.get_acts("body_acts")?;
        let mut gen = ConditionalGenerator {
            embedding: Tensor::zeros(&[classes, embed_dim]).with_grad(),
            body: FeatureNetwork::zeroed(&dims, acts),
        };
        read_params(&bin_path(dir, name), &mut gen.params_mut())?;
        Ok(gen)
    }
}

impl AdcDiscriminator {
    pub fn save(&self, dir: &Path, name: &str, seed: u64) -> Result<(), ModelError> {
        let mut meta = Meta::new("discriminator", seed);
        meta.push_dims("phi_dims", &self.phi.dims());
        meta.push_acts("phi_acts", self.phi.activations());
        meta.push("classes", self.classes().to_string());
        meta.push("feature_dim", self.feature_dim().to_string());
        meta.write(&meta_path(dir, name))?;
        write_params(&bin_path(dir, name), &self.params())
    }

    pub fn load(dir: &Path, name: &str) -> Result<Self, ModelError> {
        let meta = Meta::read(&meta_path(dir, name))?;
        meta.expect_kind("discriminator")?;
        let dims = meta.get_dims("phi_dims")?;
        let acts = meta.get_acts("phi_acts")?;
        let classes = meta.get_usize("classes")?;
        let phi = FeatureNetwork::zeroed(&dims, acts);
        let f = phi.feature_dim();
        let mut disc = AdcDiscriminator {
            phi,
            adv: Linear::zeroed(f, 1),
            class_real: Tensor::zeros(&[f, classes]).with_grad(),
            class_fake: Tensor::zeros(&[f, classes]).with_grad(),
        };
        read_params(&bin_path(dir, name), &mut disc.params_mut())?;
        Ok(disc)
    }
}
