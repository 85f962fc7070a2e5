//! Small dense feed-forward classifier: rectifier hidden layers, softmax output,
//! trained by mini-batch momentum gradient descent on cross-entropy.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tiles::parse_header;

const MODEL_MAGIC: &str = "qectg-mlp";
const MODEL_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out x in`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    pub layers: Vec<Dense>,
    /// Initialization seed, kept for provenance.
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::InvalidDims(format!(
            "need at least input and output, got {dims:?}"
        )));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidDims(format!("zero-width layer in {dims:?}")));
    }
    let out = *dims.last().unwrap();
    if out != 2 && out != 4 {
        return Err(Error::InvalidDims(format!(
            "output must have 2 or 4 classes, got {out}"
        )));
    }
    Ok(())
}

fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

impl MlpModel {
    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn new(dims: &[usize], seed: u64) -> Result<Self> {
        check_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let scale = 1.0 / (fan_in as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || {
                    rng.gen_range(-scale..scale)
                });
                Dense {
                    weights,
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            layers,
            seed,
        })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let layers = dims
            .windows(2)
            .map(|w| Dense {
                weights: Array2::zeros((w[1], w[0])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            layers,
            seed: 0,
        })
    }

    pub fn from_layers(layers: Vec<Dense>, seed: u64) -> Result<Self> {
        let mut dims = Vec::with_capacity(layers.len() + 1);
        for (i, l) in layers.iter().enumerate() {
            let (out, inp) = l.weights.dim();
            if i == 0 {
                dims.push(inp);
            } else if dims[i] != inp {
                return Err(Error::InvalidDims(format!(
                    "layer {i} expects {inp} inputs, previous gives {}",
                    dims[i]
                )));
            }
            if l.bias.len() != out {
                return Err(Error::InvalidDims(format!(
                    "layer {i} bias has {} entries, not {out}",
                    l.bias.len()
                )));
            }
            dims.push(out);
        }
        check_dims(&dims)?;
        Ok(Self { dims, layers, seed })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Class probabilities for each row of `x`.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let last = self.layers.len() - 1;
        let mut a = x.to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = a.dot(&l.weights.t()) + &l.bias;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            } else {
                softmax_rows(&mut z);
            }
            a = z;
        }
        a
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::SizeMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        Ok(self.forward_batch(view).into_raw_vec_and_offset().0)
    }

    /// Index of the most probable class; ties go to the lower index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let p = self.forward(x)?;
        Ok(argmax(&p))
    }

    /// Mean cross-entropy plus `l2/2 * sum(W^2)`, and its exact gradient.
    pub fn loss_grad(
        &self,
        x: ArrayView2<'_, f64>,
        targets: &[usize],
        l2: f64,
    ) -> (f64, Gradients) {
        let batch = x.nrows();
        assert!(
            batch > 0 && targets.len() == batch,
            "batch and targets must match"
        );
        let last = self.layers.len() - 1;
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        let mut logits = None;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = acts[i].dot(&l.weights.t()) + &l.bias;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
                acts.push(z);
            } else {
                logits = Some(z);
            }
        }
        let logits = logits.unwrap();

        let mut loss = 0.0;
        let mut delta = Array2::zeros(logits.dim());
        for (b, (row, &t)) in logits.rows().into_iter().zip(targets).enumerate() {
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
            loss -= row[t] - lse;
            for (k, &v) in row.iter().enumerate() {
                delta[[b, k]] = (v - lse).exp() - if k == t { 1.0 } else { 0.0 };
            }
        }
        loss /= batch as f64;
        delta /= batch as f64;
        if l2 > 0.0 {
            let sq: f64 = self
                .layers
                .iter()
                .map(|l| l.weights.iter().map(|w| w * w).sum::<f64>())
                .sum();
            loss += 0.5 * l2 * sq;
        }

        let mut gw = Vec::with_capacity(self.layers.len());
        let mut gb = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            let mut w = delta.t().dot(&acts[i]);
            if l2 > 0.0 {
                w.scaled_add(l2, &l.weights);
            }
            gw.push(w);
            gb.push(delta.sum_axis(Axis(0)));
            if i > 0 {
                let mut back = delta.dot(&l.weights);
                // acts[i] is post-rectifier, so a zero marks an inactive unit.
                ndarray::Zip::from(&mut back)
                    .and(&acts[i])
                    .for_each(|g, &a| {
                        if a <= 0.0 {
                            *g = 0.0;
                        }
                    });
                delta = back;
            }
        }
        gw.reverse();
        gb.reverse();
        (
            loss,
            Gradients {
                weights: gw,
                bias: gb,
            },
        )
    }

    pub fn to_text(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        let mut s = String::new();
        writeln!(
            s,
            "{MODEL_MAGIC} {MODEL_VERSION} dims={} seed={}",
            dims.join(","),
            self.seed
        )
        .unwrap();
        for (i, l) in self.layers.iter().enumerate() {
            writeln!(s, "layer {i}").unwrap();
            for row in l.weights.rows() {
                let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(s, "{}", vals.join(" ")).unwrap();
            }
            let vals: Vec<String> = l.bias.iter().map(|v| v.to_string()).collect();
            writeln!(s, "{}", vals.join(" ")).unwrap();
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_text().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let mut next = || -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(Error::parse(0, "unexpected end of model file")),
            }
        };
        let (ln, header) = next()?;
        let fields =
            parse_header(&header, MODEL_MAGIC, MODEL_VERSION).map_err(|m| Error::parse(ln, m))?;
        let field = |k: &str| {
            fields
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::parse(ln, format!("missing header field {k}")))
        };
        let dims: Vec<usize> = field("dims")?
            .split(',')
            .map(|v| v.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(ln, "bad dims"))?;
        let seed: u64 = field("seed")?
            .parse()
            .map_err(|_| Error::parse(ln, "bad seed"))?;
        check_dims(&dims)?;

        let parse_row = |ln: usize, line: &str, len: usize| -> Result<Vec<f64>> {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(ln, e.to_string()))?;
            if vals.len() != len {
                return Err(Error::parse(
                    ln,
                    format!("expected {len} values, found {}", vals.len()),
                ));
            }
            Ok(vals)
        };
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (i, w) in dims.windows(2).enumerate() {
            let (inp, out) = (w[0], w[1]);
            let (ln, marker) = next()?;
            if marker.trim() != format!("layer {i}") {
                return Err(Error::parse(ln, format!("expected `layer {i}`")));
            }
            let mut flat = Vec::with_capacity(inp * out);
            for _ in 0..out {
                let (ln, line) = next()?;
                flat.extend(parse_row(ln, &line, inp)?);
            }
            let (ln, line) = next()?;
            let bias = Array1::from(parse_row(ln, &line, out)?);
            let weights = Array2::from_shape_vec((out, inp), flat).expect("shape checked above");
            layers.push(Dense { weights, bias });
        }
        Self::from_layers(layers, seed)
    }
}

pub fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub l2_penalty: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 64,
            epochs: 20,
            l2_penalty: 0.0,
            seed: 1,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite()
            || self.learning_rate <= 0.0
            || self.batch_size == 0
            || !(0.0..1.0).contains(&self.momentum)
        {
            return Err(Error::InvalidDims(format!(
                "invalid training configuration {self:?}"
            )));
        }
        Ok(())
    }
}

/// Indexable labelled examples. Inputs are materialized one row at a time so
/// large datasets can stay in compact form.
pub trait TrainingSet: Sync {
    fn len(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn label(&self, i: usize) -> usize;
    fn fill(&self, i: usize, out: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// In-memory inputs and labels.
#[derive(Debug, Clone)]
pub struct DenseSet {
    pub inputs: Array2<f64>,
    pub labels: Vec<usize>,
}

impl TrainingSet for DenseSet {
    fn len(&self) -> usize {
        self.labels.len()
    }
    fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }
    fn label(&self, i: usize) -> usize {
        self.labels[i]
    }
    fn fill(&self, i: usize, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(self.inputs.row(i)) {
            *o = *v;
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    /// Mean mini-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Fraction of examples whose argmax prediction equals the label.
pub fn accuracy(model: &MlpModel, data: &impl TrainingSet) -> f64 {
    let mut x = vec![0.0; data.input_dim()];
    let hits = (0..data.len())
        .filter(|&i| {
            data.fill(i, &mut x);
            model.predict(&x).unwrap() == data.label(i)
        })
        .count();
    hits as f64 / data.len().max(1) as f64
}

pub fn train(
    mut model: MlpModel,
    data: &impl TrainingSet,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.input_dim() != model.input_dim() {
        return Err(Error::SizeMismatch {
            expected: model.input_dim(),
            found: data.input_dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut vel_w: Vec<Array2<f64>> = model
        .layers
        .iter()
        .map(|l| Array2::zeros(l.weights.dim()))
        .collect();
    let mut vel_b: Vec<Array1<f64>> = model
        .layers
        .iter()
        .map(|l| Array1::zeros(l.bias.dim()))
        .collect();
    let mut xb = Array2::zeros((cfg.batch_size, model.input_dim()));
    let mut report = TrainReport::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let rows = chunk.len();
            let mut targets = Vec::with_capacity(rows);
            for (r, &i) in chunk.iter().enumerate() {
                data.fill(i, xb.row_mut(r).as_slice_mut().unwrap());
                let t = data.label(i);
                if t >= model.output_dim() {
                    return Err(Error::SizeMismatch {
                        expected: model.output_dim(),
                        found: t + 1,
                    });
                }
                targets.push(t);
            }
            let view = xb.slice(ndarray::s![..rows, ..]);
            let (loss, grads) = model.loss_grad(view, &targets, cfg.l2_penalty);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            total += loss * rows as f64;
            for (i, layer) in model.layers.iter_mut().enumerate() {
                vel_w[i] *= cfg.momentum;
                vel_w[i].scaled_add(-cfg.learning_rate, &grads.weights[i]);
                layer.weights += &vel_w[i];
                vel_b[i] *= cfg.momentum;
                vel_b[i].scaled_add(-cfg.learning_rate, &grads.bias[i]);
                layer.bias += &vel_b[i];
            }
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() || !model.is_finite() {
            return Err(Error::Divergence { epoch, loss: mean });
        }
        report.epoch_losses.push(mean);
    }
    Ok((model, report))
}
