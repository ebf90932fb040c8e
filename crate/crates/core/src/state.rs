//! Fixed-length state vectors for a variable-size feature subset.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::{Adam, Mlp};
use crate::subset::FeatureSubset;

pub type StateVector = Vec<f64>;

pub const N_STATS: usize = 7;
pub const META_DIM: usize = N_STATS * N_STATS;
pub const LATENT_DIM: usize = 32;
pub const AE_HIDDEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateRepr {
    #[default]
    Meta,
    Ae,
}

impl std::str::FromStr for StateRepr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "meta" => Ok(StateRepr::Meta),
            "ae" => Ok(StateRepr::Ae),
            other => Err(Error::InvalidArgument(format!("unknown state representation `{other}`"))),
        }
    }
}

/// mean, std (population), min, 25%, median, 75%, max.
/// Quantiles interpolate linearly between order statistics.
pub fn describe(values: &[f64]) -> [f64; N_STATS] {
    if values.is_empty() {
        return [0.0; N_STATS];
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    [mean, var.sqrt(), sorted[0], q(0.25), q(0.5), q(0.75), sorted[sorted.len() - 1]]
}

/// Statistics of statistics: describe every selected column, then describe
/// each statistic across the columns. Entry `7 * i + j` is statistic `j`
/// taken over the per-column statistic `i`. The empty subset maps to zeros.
pub fn meta_stats(ds: &Dataset, subset: &FeatureSubset) -> StateVector {
    let per_column: Vec<[f64; N_STATS]> = subset.iter().map(|j| describe(ds.column(j))).collect();
    stats_of_stats(&per_column)
}

/// `selected` holds one row of column statistics per selected feature.
fn stats_of_stats(selected: &[[f64; N_STATS]]) -> StateVector {
    if selected.is_empty() {
        return vec![0.0; META_DIM];
    }
    let mut out = Vec::with_capacity(META_DIM);
    let mut buf = Vec::with_capacity(selected.len());
    for i in 0..N_STATS {
        buf.clear();
        buf.extend(selected.iter().map(|row| row[i]));
        out.extend_from_slice(&describe(&buf));
    }
    out
}

/// [`meta_stats`] with per-column statistics computed once up front.
#[derive(Debug, Clone)]
pub struct MetaStats {
    per_column: Vec<[f64; N_STATS]>,
}

impl MetaStats {
    pub fn new(ds: &Dataset) -> Self {
        MetaStats { per_column: ds.columns().iter().map(|c| describe(c)).collect() }
    }

    pub fn encode(&self, subset: &FeatureSubset) -> StateVector {
        let selected: Vec<[f64; N_STATS]> = subset.iter().map(|j| self.per_column[j]).collect();
        stats_of_stats(&selected)
    }
}

/// Encoder `N -> 128 -> 32` and decoder `32 -> 128 -> N`, ReLU hidden layers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Autoencoder {
    encoder: Mlp,
    decoder: Mlp,
    n_features: usize,
    trained: bool,
}

impl Autoencoder {
    pub fn new<R: Rng + ?Sized>(n_features: usize, rng: &mut R) -> Self {
        Autoencoder {
            encoder: Mlp::new(&[n_features, AE_HIDDEN, LATENT_DIM], rng),
            decoder: Mlp::new(&[LATENT_DIM, AE_HIDDEN, n_features], rng),
            n_features,
            trained: false,
        }
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn reconstruction_loss(&self, inputs: &[Vec<f64>]) -> Result<f64> {
        let mut total = 0.0;
        for x in inputs {
            let z = self.encoder.forward(x)?;
            let y = self.decoder.forward(&z)?;
            total += y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64;
        }
        Ok(total / inputs.len().max(1) as f64)
    }

    /// Mini-batch Adam on the mean squared reconstruction error. Returns the
    /// full-data loss after every epoch.
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        inputs: &[Vec<f64>],
        epochs: usize,
        batch: usize,
        lr: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if inputs.is_empty() {
            return Err(Error::InvalidArgument("autoencoder needs training inputs".into()));
        }
        let n_enc = self.encoder.params().len();
        let n_dec = self.decoder.params().len();
        let mut adam = Adam::new(n_enc + n_dec);
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        let mut curve = Vec::with_capacity(epochs);
        let batch = batch.max(1);
        for _ in 0..epochs {
            order.shuffle(rng);
            for chunk in order.chunks(batch) {
                let mut g_enc = vec![0.0; n_enc];
                let mut g_dec = vec![0.0; n_dec];
                let scale = 1.0 / (chunk.len() * self.n_features) as f64;
                for &i in chunk {
                    let x = &inputs[i];
                    let z = self.encoder.forward(x)?;
                    let y = self.decoder.forward(&z)?;
                    let grad_y: Vec<f64> = y.iter().zip(x).map(|(a, b)| 2.0 * (a - b) * scale).collect();
                    let grad_z = self.decoder.accumulate_grad(&z, &grad_y, &mut g_dec)?;
                    self.encoder.accumulate_grad(x, &grad_z, &mut g_enc)?;
                }
                let mut params: Vec<f64> = self.encoder.params().to_vec();
                params.extend_from_slice(self.decoder.params());
                let mut grads = g_enc;
                grads.extend_from_slice(&g_dec);
                adam.step(&mut params, &grads, lr);
                self.encoder.params_mut().copy_from_slice(&params[..n_enc]);
                self.decoder.params_mut().copy_from_slice(&params[n_enc..]);
            }
            curve.push(self.reconstruction_loss(inputs)?);
        }
        self.trained = true;
        Ok(curve)
    }

    pub fn encode(&self, input: &[f64]) -> Result<StateVector> {
        if !self.trained {
            return Err(Error::UntrainedAutoencoder);
        }
        self.encoder.forward(input)
    }
}

/// Autoencoder input for a subset: each selected column's mean, zeros for
/// unselected columns.
pub fn ae_input(column_means: &[f64], subset: &FeatureSubset) -> Vec<f64> {
    let mut v = vec![0.0; column_means.len()];
    for j in subset.iter() {
        v[j] = column_means[j];
    }
    v
}

pub fn column_means(ds: &Dataset) -> Vec<f64> {
    ds.columns().iter().map(|c| c.iter().sum::<f64>() / c.len().max(1) as f64).collect()
}

/// Latent state of the subset under a trained autoencoder.
pub fn autoencode_state(ae: &Autoencoder, ds: &Dataset, subset: &FeatureSubset) -> Result<StateVector> {
    if ae.n_features() != ds.n_features() {
        return Err(Error::ShapeMismatch { expected: ae.n_features(), actual: ds.n_features() });
    }
    ae.encode(&ae_input(&column_means(ds), subset))
}

/// Settings for pretraining the autoencoder on random subsets.
#[derive(Debug, Clone, Copy)]
pub struct AePretrain {
    pub n_subsets: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for AePretrain {
    fn default() -> Self {
        AePretrain { n_subsets: 256, epochs: 60, batch: 16, lr: 1e-3 }
    }
}

/// Random subset inputs (each feature kept with probability 1/2) plus the
/// empty and full subsets.
pub fn pretraining_inputs<R: Rng + ?Sized>(ds: &Dataset, n_subsets: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let means = column_means(ds);
    let n = ds.n_features();
    let mut inputs = vec![ae_input(&means, &FeatureSubset::empty()), ae_input(&means, &FeatureSubset::full(n))];
    for _ in 0..n_subsets {
        let s: FeatureSubset = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        inputs.push(ae_input(&means, &s));
    }
    inputs
}

/// State encoder used by the engine.
#[derive(Debug, Clone)]
pub enum StateEncoder {
    Meta(MetaStats),
    Ae { ae: Box<Autoencoder>, column_means: Vec<f64>, loss_curve: Vec<f64> },
}

impl StateEncoder {
    pub fn build(repr: StateRepr, ds: &Dataset, seed: u64) -> Result<Self> {
        match repr {
            StateRepr::Meta => Ok(StateEncoder::Meta(MetaStats::new(ds))),
            StateRepr::Ae => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let cfg = AePretrain::default();
                let inputs = pretraining_inputs(ds, cfg.n_subsets, &mut rng);
                let mut ae = Autoencoder::new(ds.n_features(), &mut rng);
                let loss_curve = ae.train(&inputs, cfg.epochs, cfg.batch, cfg.lr, &mut rng)?;
                Ok(StateEncoder::Ae { ae: Box::new(ae), column_means: column_means(ds), loss_curve })
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            StateEncoder::Meta(_) => META_DIM,
            StateEncoder::Ae { .. } => LATENT_DIM,
        }
    }

    pub fn encode(&self, subset: &FeatureSubset) -> Result<StateVector> {
        match self {
            StateEncoder::Meta(m) => Ok(m.encode(subset)),
            StateEncoder::Ae { ae, column_means, .. } => ae.encode(&ae_input(column_means, subset)),
        }
    }
}
