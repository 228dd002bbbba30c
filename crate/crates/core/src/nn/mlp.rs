use rand::Rng;

use super::NnError;
use crate::scalar::Real;

/// Output non-linearity of the last layer. Hidden layers always use `tanh`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
    Softplus,
    Sigmoid,
}

impl Activation {
    fn apply<T: Real>(self, z: T) -> T {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Softplus => z.softplus(),
            Activation::Sigmoid => z.sigmoid(),
        }
    }

    /// Derivative given the pre-activation `z` and the activation output `y`.
    fn derivative<T: Real>(self, z: T, y: T) -> T {
        let one = T::one();
        match self {
            Activation::Identity => one,
            Activation::Tanh => one - y * y,
            Activation::Softplus => z.sigmoid(),
            Activation::Sigmoid => y * (one - y),
        }
    }
}

/// Dense network with exactly two `tanh` hidden layers.
///
/// Parameters live in one flat vector, layer by layer; each layer stores its
/// `out × in` weight matrix row-major followed by its `out` biases. That order is
/// the checkpoint format.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    sizes: [usize; 4],
    output: Activation,
    params: Vec<T>,
    version: u64,
}

/// Cached activations of one forward pass over a batch.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    sizes: [usize; 4],
    version: u64,
    batch: usize,
    /// Inputs to each of the three layers (input, hidden 1, hidden 2).
    layer_inputs: [Vec<T>; 3],
    pre_output: Vec<T>,
    output: Vec<T>,
}

impl<T> Tape<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[T] {
        &self.output
    }
}

/// Gradients of `Σ output·output_gradient` w.r.t. every parameter and every input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub params: Vec<T>,
    pub input: Vec<T>,
}

pub(crate) fn param_count(sizes: &[usize; 4]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] = acc[0] + x[0] * y[0];
        acc[1] = acc[1] + x[1] * y[1];
        acc[2] = acc[2] + x[2] * y[2];
        acc[3] = acc[3] + x[3] * y[3];
    }
    let mut tail = T::zero();
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail = tail + *x * *y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * *xi;
    }
}

impl<T: Real> Mlp<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: [usize; 4], output: Activation, rng: &mut R) -> Self {
        let mut params = Vec::with_capacity(param_count(&sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(T::c(rng.random_range(-limit..=limit)));
            }
            params.extend(std::iter::repeat_n(T::zero(), fan_out));
        }
        Self {
            sizes,
            output,
            params,
            version: 0,
        }
    }

    pub fn zeros(sizes: [usize; 4], output: Activation) -> Self {
        Self {
            sizes,
            output,
            params: vec![T::zero(); param_count(&sizes)],
            version: 0,
        }
    }

    pub fn from_flat(sizes: [usize; 4], output: Activation, params: Vec<T>) -> Result<Self, NnError> {
        let expected = param_count(&sizes);
        if params.len() != expected {
            return Err(NnError::ParamCount {
                expected,
                got: params.len(),
            });
        }
        Ok(Self {
            sizes,
            output,
            params,
            version: 0,
        })
    }

    pub fn sizes(&self) -> [usize; 4] {
        self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[3]
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    /// Mutable parameter access; invalidates outstanding tapes.
    pub fn params_mut(&mut self) -> &mut [T] {
        self.version += 1;
        &mut self.params
    }

    /// Sets every bias of the output layer.
    pub fn set_output_bias(&mut self, value: T) {
        let n = self.sizes[3];
        let len = self.params.len();
        self.params[len - n..].fill(value);
        self.version += 1;
    }

    pub fn flatten(&self) -> Vec<T> {
        self.params.clone()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Overwrites the parameters with another network's of identical shape.
    pub fn copy_from(&mut self, other: &Self) -> Result<(), NnError> {
        if other.sizes != self.sizes {
            return Err(NnError::ShapeMismatch);
        }
        self.params_mut().copy_from_slice(&other.params);
        Ok(())
    }

    fn layer_offsets(&self) -> [(usize, usize, usize, usize); 3] {
        let mut out = [(0, 0, 0, 0); 3];
        let mut off = 0;
        for (l, slot) in out.iter_mut().enumerate() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            *slot = (off, off + n_in * n_out, n_in, n_out);
            off += n_in * n_out + n_out;
        }
        out
    }

    fn affine(&self, layer: (usize, usize, usize, usize), x: &[T], batch: usize) -> Vec<T> {
        let (w_off, b_off, n_in, n_out) = layer;
        let w = &self.params[w_off..w_off + n_in * n_out];
        let b = &self.params[b_off..b_off + n_out];
        let mut out = Vec::with_capacity(batch * n_out);
        for s in 0..batch {
            let xs = &x[s * n_in..(s + 1) * n_in];
            for j in 0..n_out {
                out.push(b[j] + dot(&w[j * n_in..(j + 1) * n_in], xs));
            }
        }
        out
    }

    fn check_input(&self, input: &[T], batch: usize) -> Result<(), NnError> {
        let expected = self.sizes[0] * batch;
        if input.len() != expected {
            return Err(NnError::DimensionMismatch {
                expected,
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Forward pass over `batch` row-major samples, keeping what `backward` needs.
    pub fn forward_batch(&self, input: &[T], batch: usize) -> Result<(Vec<T>, Tape<T>), NnError> {
        self.check_input(input, batch)?;
        let layers = self.layer_offsets();
        let mut h1 = self.affine(layers[0], input, batch);
        h1.iter_mut().for_each(|v| *v = v.tanh());
        let mut h2 = self.affine(layers[1], &h1, batch);
        h2.iter_mut().for_each(|v| *v = v.tanh());
        let pre_output = self.affine(layers[2], &h2, batch);
        let output: Vec<T> = pre_output.iter().map(|&z| self.output.apply(z)).collect();
        let tape = Tape {
            sizes: self.sizes,
            version: self.version,
            batch,
            layer_inputs: [input.to_vec(), h1, h2],
            pre_output,
            output: output.clone(),
        };
        Ok((output, tape))
    }

    pub fn forward(&self, input: &[T]) -> Result<(Vec<T>, Tape<T>), NnError> {
        self.forward_batch(input, 1)
    }

    /// Forward pass without recording a tape.
    pub fn predict(&self, input: &[T]) -> Result<Vec<T>, NnError> {
        self.check_input(input, 1)?;
        let layers = self.layer_offsets();
        let mut h = self.affine(layers[0], input, 1);
        h.iter_mut().for_each(|v| *v = v.tanh());
        let mut h2 = self.affine(layers[1], &h, 1);
        h2.iter_mut().for_each(|v| *v = v.tanh());
        let out = self.affine(layers[2], &h2, 1);
        Ok(out.into_iter().map(|z| self.output.apply(z)).collect())
    }

    /// Batched forward pass without a tape.
    pub fn predict_batch(&self, input: &[T], batch: usize) -> Result<Vec<T>, NnError> {
        self.check_input(input, batch)?;
        let layers = self.layer_offsets();
        let mut h = self.affine(layers[0], input, batch);
        h.iter_mut().for_each(|v| *v = v.tanh());
        let mut h2 = self.affine(layers[1], &h, batch);
        h2.iter_mut().for_each(|v| *v = v.tanh());
        let out = self.affine(layers[2], &h2, batch);
        Ok(out.into_iter().map(|z| self.output.apply(z)).collect())
    }

    /// Reverse-mode pass. Parameter gradients are summed over the batch.
    pub fn backward(&self, tape: &Tape<T>, output_gradient: &[T]) -> Result<Gradients<T>, NnError> {
        let mut params = vec![T::zero(); self.params.len()];
        let input = self.backward_into(tape, output_gradient, &mut params, true)?;
        Ok(Gradients { params, input })
    }

    /// Like [`Mlp::backward`] but accumulates into `param_grads`; the input
    /// gradient is only computed when asked for (empty otherwise).
    pub fn backward_into(
        &self,
        tape: &Tape<T>,
        output_gradient: &[T],
        param_grads: &mut [T],
        want_input_grad: bool,
    ) -> Result<Vec<T>, NnError> {
        if tape.sizes != self.sizes || tape.version != self.version {
            return Err(NnError::StaleTape);
        }
        if param_grads.len() != self.params.len() {
            return Err(NnError::ParamCount {
                expected: self.params.len(),
                got: param_grads.len(),
            });
        }
        let batch = tape.batch;
        if output_gradient.len() != batch * self.sizes[3] {
            return Err(NnError::DimensionMismatch {
                expected: batch * self.sizes[3],
                got: output_gradient.len(),
            });
        }

        let layers = self.layer_offsets();
        let mut delta: Vec<T> = output_gradient
            .iter()
            .zip(tape.pre_output.iter().zip(&tape.output))
            .map(|(&g, (&z, &y))| g * self.output.derivative(z, y))
            .collect();

        for l in (0..3).rev() {
            let (w_off, b_off, n_in, n_out) = layers[l];
            let x = &tape.layer_inputs[l];
            let need_dx = l > 0 || want_input_grad;
            let mut dx = if need_dx {
                vec![T::zero(); batch * n_in]
            } else {
                Vec::new()
            };
            {
                let (gw, gb) = param_grads[w_off..].split_at_mut(n_in * n_out);
                let w = &self.params[w_off..w_off + n_in * n_out];
                for s in 0..batch {
                    let xs = &x[s * n_in..(s + 1) * n_in];
                    for j in 0..n_out {
                        let d = delta[s * n_out + j];
                        if d == T::zero() {
                            continue;
                        }
                        axpy(d, xs, &mut gw[j * n_in..(j + 1) * n_in]);
                        gb[j] = gb[j] + d;
                        if need_dx {
                            axpy(d, &w[j * n_in..(j + 1) * n_in], &mut dx[s * n_in..(s + 1) * n_in]);
                        }
                    }
                }
                debug_assert_eq!(b_off, w_off + n_in * n_out);
            }
            if l > 0 {
                // through the tanh that produced this layer's input
                let one = T::one();
                for (d, &h) in dx.iter_mut().zip(x) {
                    *d = *d * (one - h * h);
                }
            }
            delta = dx;
        }
        Ok(delta)
    }

    /// One Adam update with `grads` laid out like `params()`.
    pub fn apply_adam(&mut self, grads: &[T], state: &mut super::AdamState<T>) -> Result<(), NnError> {
        state.step(self.params_mut(), grads)
    }
}
