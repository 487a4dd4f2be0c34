use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::{Activation, LayerSpec};
use crate::error::{Error, Result};
use crate::features::NormStats;
use crate::scalar::{MatView, Scalar};

/// Affine layer `y = act(x W + b)` with `W` stored row-major `fan_in x fan_out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub epochs_trained: u32,
    pub corpus_digest: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    pub spec: LayerSpec,
    pub layers: Vec<Layer<T>>,
    pub input_stats: Option<NormStats>,
    pub output_stats: Option<NormStats>,
    pub provenance: Provenance,
}

/// Glorot-uniform weights, zero biases.
pub fn init_network<T: Scalar>(spec: &LayerSpec, seed: u64) -> Result<Network<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = spec
        .layers()
        .into_iter()
        .map(|(fan_in, fan_out, activation)| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_in * fan_out).map(|_| T::of(rng.random_range(-limit..=limit))).collect();
            Layer { weights, bias: vec![T::zero(); fan_out], fan_in, fan_out, activation }
        })
        .collect();
    Ok(Network {
        spec: spec.clone(),
        layers,
        input_stats: None,
        output_stats: None,
        provenance: Provenance { seed, ..Default::default() },
    })
}

/// Per-layer activations of one batch, reused between batches.
#[derive(Debug, Default)]
pub struct Workspace<T> {
    pub(crate) acts: Vec<Vec<T>>,
    deltas: Vec<Vec<T>>,
}

/// Gradients of every layer, in layer order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros(net: &Network<T>) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![T::zero(); l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![T::zero(); l.bias.len()]).collect(),
        }
    }
}

impl<T: Scalar> Network<T> {
    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::of(x.f64())).collect();
        Network {
            spec: self.spec.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: conv(&l.weights),
                    bias: conv(&l.bias),
                    fan_in: l.fan_in,
                    fan_out: l.fan_out,
                    activation: l.activation,
                })
                .collect(),
            input_stats: self.input_stats.clone(),
            output_stats: self.output_stats.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Forward pass over `rows` row-major inputs; keeps every layer's
    /// activations in `ws` and returns the output block.
    pub fn forward_into<'w>(&self, x: &[T], rows: usize, ws: &'w mut Workspace<T>) -> &'w [T] {
        assert_eq!(x.len(), rows * self.input_dim());
        ws.acts.resize_with(self.layers.len() + 1, Vec::new);
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (done, rest) = ws.acts.split_at_mut(l + 1);
            let input = &done[l];
            let out = &mut rest[0];
            out.clear();
            for _ in 0..rows {
                out.extend_from_slice(&layer.bias);
            }
            T::gemm(
                T::one(),
                MatView::row_major(input, rows, layer.fan_in),
                MatView::row_major(&layer.weights, layer.fan_in, layer.fan_out),
                T::one(),
                out,
            );
            if layer.activation == Activation::Tanh {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
        }
        &ws.acts[self.layers.len()]
    }

    /// Outputs (normalised space) for a row-major input block.
    pub fn forward(&self, x: &[T], rows: usize) -> Result<Vec<T>> {
        if x.len() != rows * self.input_dim() {
            return Err(Error::SchemaMismatch(format!(
                "input has {} values for {rows} rows, network expects width {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut ws = Workspace::default();
        Ok(self.forward_into(x, rows, &mut ws).to_vec())
    }

    /// Batch loss (squared error summed over outputs, averaged over rows)
    /// and its gradient with respect to every parameter.
    pub fn backward(&self, x: &[T], t: &[T], rows: usize, ws: &mut Workspace<T>, grads: &mut Gradients<T>) -> T {
        let n_layers = self.layers.len();
        self.forward_into(x, rows, ws);
        ws.deltas.resize_with(n_layers, Vec::new);
        let inv_rows = T::one() / T::of(rows as f64);
        let two = T::of(2.0);
        let mut loss = T::zero();
        {
            let out = &ws.acts[n_layers];
            let d = &mut ws.deltas[n_layers - 1];
            d.clear();
            for (y, target) in out.iter().zip(t) {
                let e = *y - *target;
                loss += e * e;
                d.push(two * e * inv_rows);
            }
        }
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let input = &ws.acts[l];
            let (lower, upper) = ws.deltas.split_at_mut(l);
            let delta = &upper[0];
            T::gemm(
                T::one(),
                MatView::row_major(input, rows, layer.fan_in).t(),
                MatView::row_major(delta, rows, layer.fan_out),
                T::zero(),
                &mut grads.weights[l],
            );
            let gb = &mut grads.bias[l];
            gb.iter_mut().for_each(|v| *v = T::zero());
            for r in delta.chunks_exact(layer.fan_out) {
                for (g, d) in gb.iter_mut().zip(r) {
                    *g += *d;
                }
            }
            if l > 0 {
                let prev = &mut lower[l - 1];
                prev.clear();
                prev.resize(rows * layer.fan_in, T::zero());
                T::gemm(
                    T::one(),
                    MatView::row_major(delta, rows, layer.fan_out),
                    MatView::row_major(&layer.weights, layer.fan_in, layer.fan_out).t(),
                    T::zero(),
                    prev,
                );
                if self.layers[l - 1].activation == Activation::Tanh {
                    for (p, a) in prev.iter_mut().zip(input) {
                        *p *= T::one() - *a * *a;
                    }
                }
            }
        }
        loss * inv_rows
    }

    /// `theta -= lr * grad` on the layers from `first_layer` upwards.
    pub fn apply_gradients(&mut self, grads: &Gradients<T>, lr: T, first_layer: usize) {
        for (l, layer) in self.layers.iter_mut().enumerate().skip(first_layer) {
            for (w, g) in layer.weights.iter_mut().zip(&grads.weights[l]) {
                *w -= lr * *g;
            }
            for (b, g) in layer.bias.iter_mut().zip(&grads.bias[l]) {
                *b -= lr * *g;
            }
        }
    }
}
