//! Neural-network building blocks: parameter storage, MLP construction, and
//! the glue between stored parameters and the autodiff [`Tape`].
//!
//! Parameters live in a [`ParamSet`] — an insertion-ordered map from names
//! like `"actor.w0"` to value/gradient array pairs. Losses are built on a
//! [`Tape`] against leaves created by [`Tape::bind`]; after `backward`,
//! [`Tape::harvest_into`] adds the leaf gradients back into the set, where the
//! optimizer consumes them.

pub mod checkpoint;
pub mod optim;
pub mod stats;
pub mod tape;

use indexmap::IndexMap;
use ndarray::Array2;
use rand::Rng;

use crate::error::NnError;
pub use optim::{ClipReport, OptimState};
pub use tape::{Tape, TensorId};

/// One named parameter array with its accumulated gradient.
#[derive(Debug, Clone)]
pub struct ParamEntry {
    pub values: Array2<f64>,
    pub grads: Array2<f64>,
}

/// Insertion-ordered collection of named parameters.
///
/// Iteration order is the insertion order, which makes gradient clipping,
/// checkpoint layout, and optimizer behavior reproducible run to run.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    entries: IndexMap<String, ParamEntry>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a parameter with zeroed gradient. Panics if the name is taken
    /// or contains whitespace (names must survive the checkpoint format).
    pub fn insert(&mut self, name: impl Into<String>, values: Array2<f64>) {
        let name = name.into();
        assert!(
            !name.chars().any(char::is_whitespace),
            "parameter name '{name}' contains whitespace"
        );
        let grads = Array2::zeros(values.dim());
        let prev = self.entries.insert(name.clone(), ParamEntry { values, grads });
        assert!(prev.is_none(), "duplicate parameter name '{name}'");
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|e| e.values.len()).sum()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Result<&ParamEntry, NnError> {
        self.entries
            .get(name)
            .ok_or_else(|| NnError::UnknownParameter(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut ParamEntry, NnError> {
        self.entries
            .get_mut(name)
            .ok_or_else(|| NnError::UnknownParameter(name.to_string()))
    }

    /// Convenience accessor for a parameter's values.
    pub fn values(&self, name: &str) -> Result<&Array2<f64>, NnError> {
        Ok(&self.get(name)?.values)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut ParamEntry)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    /// Reset every gradient to zero.
    pub fn zero_grads(&mut self) {
        for e in self.entries.values_mut() {
            e.grads.fill(0.0);
        }
    }

    /// Global L2 norm over all gradients.
    pub fn grad_norm(&self) -> f64 {
        self.entries
            .values()
            .map(|e| e.grads.iter().map(|g| g * g).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Output nonlinearity of an [`MlpSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    /// Raw affine output (values, log-scales, regression targets).
    Identity,
    /// Row-wise softmax (action distributions).
    Softmax,
}

/// Architecture of a multilayer perceptron with tanh hidden layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub output_activation: OutputActivation,
}

impl MlpSpec {
    pub fn new(
        input_dim: usize,
        hidden_dims: Vec<usize>,
        output_dim: usize,
        output_activation: OutputActivation,
    ) -> Self {
        let spec = Self {
            input_dim,
            hidden_dims,
            output_dim,
            output_activation,
        };
        spec.validate();
        spec
    }

    fn validate(&self) {
        assert!(self.input_dim > 0, "input_dim must be positive");
        assert!(self.output_dim > 0, "output_dim must be positive");
        assert!(
            self.hidden_dims.iter().all(|&d| d > 0),
            "hidden dims must be positive"
        );
    }

    /// `(fan_in, fan_out)` per affine layer, in forward order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    /// Number of affine layers.
    pub fn num_layers(&self) -> usize {
        self.hidden_dims.len() + 1
    }

    /// Parameter names this spec creates under `prefix`, in forward order.
    pub fn param_names(&self, prefix: &str) -> Vec<String> {
        (0..self.num_layers())
            .flat_map(|i| [format!("{prefix}.w{i}"), format!("{prefix}.b{i}")])
            .collect()
    }

    /// Initialize this MLP's parameters into `params` under `prefix`.
    ///
    /// Weights are Xavier-uniform (`U(-l, l)` with `l = sqrt(6 / (fan_in +
    /// fan_out))`), drawn row-major; biases start at zero. The final layer's
    /// weights are additionally multiplied by `output_gain`, which lets policy
    /// heads start near-uniform and scale heads start near their anchor.
    pub fn init_into(
        &self,
        params: &mut ParamSet,
        prefix: &str,
        output_gain: f64,
        rng: &mut impl Rng,
    ) {
        let dims = self.layer_dims();
        let last = dims.len() - 1;
        for (i, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let gain = if i == last { output_gain } else { 1.0 };
            let w = Array2::from_shape_fn((fan_in, fan_out), |_| {
                let u: f64 = rng.random();
                gain * (-limit + 2.0 * limit * u)
            });
            params.insert(format!("{prefix}.w{i}"), w);
            params.insert(format!("{prefix}.b{i}"), Array2::zeros((1, fan_out)));
        }
    }
}

/// Forward pass without recording: used during rollouts and evaluation.
///
/// `input` is `[batch, input_dim]`; the result is `[batch, output_dim]`.
pub fn mlp_forward(
    spec: &MlpSpec,
    params: &ParamSet,
    prefix: &str,
    input: &Array2<f64>,
) -> Result<Array2<f64>, NnError> {
    if input.ncols() != spec.input_dim {
        return Err(NnError::DimensionMismatch(format!(
            "mlp '{prefix}' expects {} input columns, got {}",
            spec.input_dim,
            input.ncols()
        )));
    }
    let last = spec.num_layers() - 1;
    let mut x = input.clone();
    for i in 0..spec.num_layers() {
        let w = params.values(&format!("{prefix}.w{i}"))?;
        let b = params.values(&format!("{prefix}.b{i}"))?;
        if w.nrows() != x.ncols() {
            return Err(NnError::DimensionMismatch(format!(
                "mlp '{prefix}' layer {i}: input has {} cols, weight expects {}",
                x.ncols(),
                w.nrows()
            )));
        }
        let mut y = x.dot(w);
        y += b;
        if i < last {
            y.mapv_inplace(f64::tanh);
        } else if spec.output_activation == OutputActivation::Softmax {
            y = stats::softmax_rows(&y);
        }
        x = y;
    }
    Ok(x)
}

/// Tape leaves standing in for a [`ParamSet`]'s values during loss building.
pub struct BoundParams {
    ids: IndexMap<String, TensorId>,
}

impl BoundParams {
    pub fn id(&self, name: &str) -> Result<TensorId, NnError> {
        self.ids
            .get(name)
            .copied()
            .ok_or_else(|| NnError::UnknownParameter(name.to_string()))
    }
}

impl Tape {
    /// Copy every parameter of `params` onto the tape as leaves.
    pub fn bind(&mut self, params: &ParamSet) -> BoundParams {
        let mut ids = IndexMap::with_capacity(params.len());
        for (name, entry) in params.iter() {
            ids.insert(name.to_string(), self.leaf(entry.values.clone()));
        }
        BoundParams { ids }
    }

    /// Add the tape gradients of bound leaves into `params.grads`.
    ///
    /// Leaves the loss never touched contribute nothing. Call after
    /// [`Tape::backward`].
    pub fn harvest_into(&self, bound: &BoundParams, params: &mut ParamSet) -> Result<(), NnError> {
        for (name, &id) in bound.ids.iter() {
            if let Some(g) = self.grad(id) {
                params.get_mut(name)?.grads += g;
            }
        }
        Ok(())
    }

    /// Forward pass recorded on the tape; mirrors [`mlp_forward`] exactly.
    pub fn mlp_forward_graph(
        &mut self,
        spec: &MlpSpec,
        bound: &BoundParams,
        prefix: &str,
        input: TensorId,
    ) -> Result<TensorId, NnError> {
        if self.shape(input).1 != spec.input_dim {
            return Err(NnError::DimensionMismatch(format!(
                "mlp '{prefix}' expects {} input columns, got {}",
                spec.input_dim,
                self.shape(input).1
            )));
        }
        let last = spec.num_layers() - 1;
        let mut x = input;
        for i in 0..spec.num_layers() {
            let w = bound.id(&format!("{prefix}.w{i}"))?;
            let b = bound.id(&format!("{prefix}.b{i}"))?;
            let xw = self.matmul(x, w);
            let mut y = self.add(xw, b);
            if i < last {
                y = self.tanh(y);
            } else if spec.output_activation == OutputActivation::Softmax {
                y = self.softmax(y);
            }
            x = y;
        }
        Ok(x)
    }
}
