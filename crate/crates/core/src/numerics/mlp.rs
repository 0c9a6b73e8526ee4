//! Dense feed-forward network with flat parameter storage.
//!
//! Parameters live in one contiguous vector. For every layer the weight
//! matrix comes first (row-major, `out x in`), followed by the bias vector.
//! Gradients use the same layout so optimizers can treat both as plain slices.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(T::zero()),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Tanh => T::one() - y * y,
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::config(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerSpan {
    fan_in: usize,
    fan_out: usize,
    weight_offset: usize,
    bias_offset: usize,
}

/// Multi-layer perceptron: hidden layers use `activation`, the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork<T> {
    layer_sizes: Vec<usize>,
    activation: Activation,
    params: Vec<T>,
    spans: Vec<LayerSpan>,
}

/// Layer activations recorded by [`MlpNetwork::forward`]; `layers[0]` is the input
/// and the last entry is the network output.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    layers: Vec<Vec<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self) -> &[T] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[T] {
        &self.layers[0]
    }
}

fn layout(layer_sizes: &[usize]) -> Result<(Vec<LayerSpan>, usize)> {
    if layer_sizes.len() < 2 {
        return Err(Error::config("a network needs at least an input and an output layer"));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::config(format!("layer sizes must be positive, got {layer_sizes:?}")));
    }
    let mut spans = Vec::with_capacity(layer_sizes.len() - 1);
    let mut offset = 0;
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let weight_offset = offset;
        let bias_offset = weight_offset + fan_in * fan_out;
        offset = bias_offset + fan_out;
        spans.push(LayerSpan { fan_in, fan_out, weight_offset, bias_offset });
    }
    Ok((spans, offset))
}

impl<T: Scalar> MlpNetwork<T> {
    /// All parameters zero.
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        let (spans, n) = layout(layer_sizes)?;
        Ok(Self { layer_sizes: layer_sizes.to_vec(), activation, params: vec![T::zero(); n], spans })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn new<R: Rng + ?Sized>(layer_sizes: &[usize], activation: Activation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, activation)?;
        for span in net.spans.clone() {
            let limit = (6.0 / (span.fan_in + span.fan_out) as f64).sqrt();
            let end = span.weight_offset + span.fan_in * span.fan_out;
            for p in &mut net.params[span.weight_offset..end] {
                *p = T::lit(rng.random_range(-limit..=limit));
            }
        }
        Ok(net)
    }

    /// Builds a network from explicit per-layer weights (row-major `out x in`) and biases.
    pub fn from_layers(
        layer_sizes: &[usize],
        activation: Activation,
        weights: &[Vec<T>],
        biases: &[Vec<T>],
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, activation)?;
        if weights.len() != net.spans.len() || biases.len() != net.spans.len() {
            return Err(Error::config("number of weight/bias blocks does not match layer count"));
        }
        for (i, span) in net.spans.clone().into_iter().enumerate() {
            if weights[i].len() != span.fan_in * span.fan_out || biases[i].len() != span.fan_out {
                return Err(Error::config(format!("layer {i} parameter block has the wrong shape")));
            }
            net.params[span.weight_offset..span.bias_offset].copy_from_slice(&weights[i]);
            net.params[span.bias_offset..span.bias_offset + span.fan_out].copy_from_slice(&biases[i]);
        }
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().expect("validated at construction")
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// Weight matrix of layer `layer`, row-major `out x in`.
    pub fn weights(&self, layer: usize) -> &[T] {
        let s = self.spans[layer];
        &self.params[s.weight_offset..s.bias_offset]
    }

    pub fn biases(&self, layer: usize) -> &[T] {
        let s = self.spans[layer];
        &self.params[s.bias_offset..s.bias_offset + s.fan_out]
    }

    pub fn num_layers(&self) -> usize {
        self.spans.len()
    }

    pub fn zero_gradients(&self) -> Vec<T> {
        vec![T::zero(); self.params.len()]
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(Error::config(format!(
                "input has length {}, network expects {}",
                input.len(),
                self.input_size()
            )));
        }
        Ok(())
    }

    /// Output only, without keeping intermediate activations.
    pub fn predict(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        let last = self.spans.len() - 1;
        for (l, span) in self.spans.iter().enumerate() {
            x = self.layer(span, &x, l < last);
        }
        Ok(x)
    }

    pub fn forward(&self, input: &[T]) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.check_input(input)?;
        let mut layers = Vec::with_capacity(self.spans.len() + 1);
        layers.push(input.to_vec());
        let last = self.spans.len() - 1;
        for (l, span) in self.spans.iter().enumerate() {
            let next = self.layer(span, layers.last().expect("non-empty"), l < last);
            layers.push(next);
        }
        let output = layers.last().expect("non-empty").clone();
        Ok((output, ForwardCache { layers }))
    }

    fn layer(&self, span: &LayerSpan, x: &[T], hidden: bool) -> Vec<T> {
        let w = &self.params[span.weight_offset..span.bias_offset];
        let b = &self.params[span.bias_offset..span.bias_offset + span.fan_out];
        (0..span.fan_out)
            .map(|i| {
                let z = b[i] + dot(&w[i * span.fan_in..(i + 1) * span.fan_in], x);
                if hidden {
                    self.activation.apply(z)
                } else {
                    z
                }
            })
            .collect()
    }

    /// Gradient of a scalar loss with respect to every parameter, given `dL/d(output)`.
    pub fn backward(&self, cache: &ForwardCache<T>, output_gradient: &[T]) -> Result<Vec<T>> {
        let mut grads = self.zero_gradients();
        self.backward_into(cache, output_gradient, &mut grads)?;
        Ok(grads)
    }

    /// Like [`backward`](Self::backward) but accumulates into `grads`.
    pub fn backward_into(&self, cache: &ForwardCache<T>, output_gradient: &[T], grads: &mut [T]) -> Result<()> {
        if cache.layers.len() != self.layer_sizes.len()
            || cache.layers.iter().zip(&self.layer_sizes).any(|(a, &n)| a.len() != n)
        {
            return Err(Error::config("forward cache does not belong to this network"));
        }
        if output_gradient.len() != self.output_size() {
            return Err(Error::config(format!(
                "output gradient has length {}, network output is {}",
                output_gradient.len(),
                self.output_size()
            )));
        }
        if grads.len() != self.params.len() {
            return Err(Error::config("gradient buffer has the wrong length"));
        }
        let mut delta = output_gradient.to_vec();
        for l in (0..self.spans.len()).rev() {
            let span = self.spans[l];
            let x = &cache.layers[l];
            {
                let (gw, gb) = grads[span.weight_offset..span.bias_offset + span.fan_out]
                    .split_at_mut(span.fan_in * span.fan_out);
                for i in 0..span.fan_out {
                    gb[i] = gb[i] + delta[i];
                    axpy(delta[i], x, &mut gw[i * span.fan_in..(i + 1) * span.fan_in]);
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[span.weight_offset..span.bias_offset];
            let mut prev = vec![T::zero(); span.fan_in];
            for i in 0..span.fan_out {
                axpy(delta[i], &w[i * span.fan_in..(i + 1) * span.fan_in], &mut prev);
            }
            for (p, &y) in prev.iter_mut().zip(x.iter()) {
                *p = *p * self.activation.derivative_from_output(y);
            }
            delta = prev;
        }
        Ok(())
    }

    /// Same architecture, parameters converted to another scalar type.
    pub fn cast<U: Scalar>(&self) -> MlpNetwork<U> {
        MlpNetwork {
            layer_sizes: self.layer_sizes.clone(),
            activation: self.activation,
            params: self.params.iter().map(|p| U::lit(p.to_f64_lossy())).collect(),
            spans: self.spans.clone(),
        }
    }
}
