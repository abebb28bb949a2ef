//! State-dependent intrinsic-reward scaling.
//!
//! A small network maps observations to a bounded positive scale factor
//! `beta(s) = exp(clamp(raw(s), ln beta_min, ln beta_max))`. It is trained —
//! once per iteration, before the policy update — to maximize the batch
//! correlation between the scaled novelty `beta(s_i) * intrinsic_i` and the
//! discounted extrinsic return from each state, with a log-space pull toward
//! the reference value `beta_ref` keeping the factor anchored when the
//! correlation signal is weak or absent.

use ndarray::Array2;
use rand::Rng;

use crate::error::NnError;
use crate::nn::{
    BoundParams, MlpSpec, OptimState, OutputActivation, ParamSet, Tape, TensorId,
};

/// Default numerical floor inside the standardization variances.
pub const DEFAULT_EPS: f64 = 1e-8;

/// The scale network: observation encoder plus a scalar log-factor head.
#[derive(Debug, Clone)]
pub struct BetaNet {
    encoder: MlpSpec,
    head: MlpSpec,
    /// Entries prefixed `benc.`, `bhead.`.
    pub params: ParamSet,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Reference scale the regularizer pulls toward.
    pub beta_ref: f64,
}

/// Result of one scale-network update.
#[derive(Debug, Clone)]
pub struct BetaUpdate {
    /// Correlation term of the minimized loss (negative correlation).
    pub corr_loss: f64,
    /// Log-space regularization term (unweighted).
    pub reg_loss: f64,
    /// Scale factors the update's forward pass produced, one per row —
    /// the pre-update values.
    pub beta_values: Vec<f64>,
}

impl BetaNet {
    /// Build the network: a two-layer tanh encoder of width `encoding_dim`
    /// and a two-layer head emitting one raw log-factor.
    ///
    /// The head's final layer starts at exactly zero (weights and bias), so
    /// an untrained network outputs `beta_ref` for every state.
    pub fn new(
        encoding_dim: usize,
        bounds: (f64, f64),
        beta_ref: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let (beta_min, beta_max) = bounds;
        assert!(
            0.0 < beta_min && beta_min <= beta_ref && beta_ref <= beta_max,
            "need 0 < beta_min <= beta_ref <= beta_max, got ({beta_min}, {beta_ref}, {beta_max})"
        );
        let encoder = MlpSpec::new(
            crate::env::OBS_LEN,
            vec![encoding_dim],
            encoding_dim,
            OutputActivation::Identity,
        );
        let head = MlpSpec::new(encoding_dim, vec![encoding_dim], 1, OutputActivation::Identity);
        let mut params = ParamSet::new();
        encoder.init_into(&mut params, "benc", 1.0, rng);
        head.init_into(&mut params, "bhead", 0.0, rng);
        // Bias toward the reference in log space; with beta_ref = 1 this is
        // zero, and the zero final layer makes the output exact.
        let last = head.num_layers() - 1;
        params
            .get_mut(&format!("bhead.b{last}"))
            .expect("just inserted")
            .values
            .fill(beta_ref.ln());
        BetaNet {
            encoder,
            head,
            params,
            beta_min,
            beta_max,
            beta_ref,
        }
    }

    /// Record the clamped log-factor, `[batch, 1]`.
    fn log_factor_graph(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        obs_id: TensorId,
    ) -> Result<TensorId, NnError> {
        let emb = tape.mlp_forward_graph(&self.encoder, bound, "benc", obs_id)?;
        let raw = tape.mlp_forward_graph(&self.head, bound, "bhead", emb)?;
        Ok(tape.clamp(raw, self.beta_min.ln(), self.beta_max.ln()))
    }

    /// Record `beta(s)` values, `[batch, 1]`, for embedding in a larger
    /// loss graph.
    ///
    /// The exponential of a clamped log can overshoot the bound by one ulp,
    /// so the value is clamped once more in beta space; that outer clamp has
    /// gradient 1 wherever the inner one does (up to the measure-zero ulp
    /// boundary), keeping the exact range invariant without disturbing
    /// training.
    pub fn beta_graph(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        obs_id: TensorId,
    ) -> Result<TensorId, NnError> {
        let log_factor = self.log_factor_graph(tape, bound, obs_id)?;
        let beta = tape.exp(log_factor);
        Ok(tape.clamp(beta, self.beta_min, self.beta_max))
    }

    /// Plain (non-recorded) encoder embeddings, `[batch, encoding_dim]` —
    /// the representation the scale factor is computed from.
    pub fn embed(&self, obs: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        crate::nn::mlp_forward(&self.encoder, &self.params, "benc", obs)
    }

    /// Scale factors for an observation batch, one per row. Plain
    /// evaluation, no gradients; mirrors the recorded version exactly.
    pub fn forward(&self, obs: &Array2<f64>) -> Result<Vec<f64>, NnError> {
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params);
        let obs_id = tape.leaf(obs.clone());
        let beta = self.beta_graph(&mut tape, &bound, obs_id)?;
        Ok(tape.value(beta).column(0).to_vec())
    }

    /// Clamped log-factors for an observation batch.
    pub fn log_factors(&self, obs: &Array2<f64>) -> Result<Vec<f64>, NnError> {
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params);
        let obs_id = tape.leaf(obs.clone());
        let lf = self.log_factor_graph(&mut tape, &bound, obs_id)?;
        Ok(tape.value(lf).column(0).to_vec())
    }

    /// Evaluate the correlation loss without updating.
    pub fn corr_loss(
        &self,
        obs: &Array2<f64>,
        intrinsic: &[f64],
        returns: &[f64],
        eps: f64,
    ) -> Result<f64, NnError> {
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params);
        let obs_id = tape.leaf(obs.clone());
        let beta = self.beta_graph(&mut tape, &bound, obs_id)?;
        let intr = tape.leaf_col(intrinsic);
        let scaled = tape.mul(beta, intr);
        let ret = tape.leaf_col(returns);
        let loss = corr_loss_graph(&mut tape, scaled, ret, eps);
        Ok(tape.scalar_value(loss))
    }

    /// Evaluate the log-space regularizer `E[(log beta - log beta_ref)^2]`.
    pub fn reg_loss(&self, obs: &Array2<f64>) -> Result<f64, NnError> {
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params);
        let obs_id = tape.leaf(obs.clone());
        let loss = self.reg_loss_graph(&mut tape, &bound, obs_id)?;
        Ok(tape.scalar_value(loss))
    }

    /// Record the regularizer on `tape` for embedding in a larger loss graph.
    pub fn reg_loss_graph(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        obs_id: TensorId,
    ) -> Result<TensorId, NnError> {
        let log_factor = self.log_factor_graph(tape, bound, obs_id)?;
        let centered = tape.add_scalar(log_factor, -self.beta_ref.ln());
        let sq = tape.square(centered);
        Ok(tape.mean(sq))
    }

    /// One clipped gradient step on
    /// `corr_loss + lambda_reg * reg_loss`, consuming the whole batch.
    ///
    /// `intrinsic` and `returns` enter as constants: only this network's
    /// parameters receive gradients or change.
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        opt: &mut OptimState,
        obs: &Array2<f64>,
        intrinsic: &[f64],
        returns: &[f64],
        eps: f64,
        lambda_reg: f64,
        max_grad_norm: f64,
    ) -> Result<BetaUpdate, NnError> {
        if obs.nrows() < 2 {
            return Err(NnError::DimensionMismatch(
                "correlation update needs at least 2 rows".into(),
            ));
        }
        if obs.nrows() != intrinsic.len() || obs.nrows() != returns.len() {
            return Err(NnError::DimensionMismatch(format!(
                "batch sizes disagree: {} obs, {} intrinsic, {} returns",
                obs.nrows(),
                intrinsic.len(),
                returns.len()
            )));
        }

        let mut tape = Tape::new();
        let bound = tape.bind(&self.params);
        let obs_id = tape.leaf(obs.clone());
        let beta = self.beta_graph(&mut tape, &bound, obs_id)?;
        let intr = tape.leaf_col(intrinsic);
        let scaled = tape.mul(beta, intr);
        let ret = tape.leaf_col(returns);
        let corr = corr_loss_graph(&mut tape, scaled, ret, eps);
        let reg = self.reg_loss_graph(&mut tape, &bound, obs_id)?;
        let weighted_reg = tape.mul_scalar(reg, lambda_reg);
        let loss = tape.add(corr, weighted_reg);

        tape.backward(loss)?;
        self.params.zero_grads();
        tape.harvest_into(&bound, &mut self.params)?;
        opt.step(&mut self.params, Some(max_grad_norm))?;

        Ok(BetaUpdate {
            corr_loss: tape.scalar_value(corr),
            reg_loss: tape.scalar_value(reg),
            beta_values: tape.value(beta).column(0).to_vec(),
        })
    }
}

/// Record `x_hat = (x - mean) / sqrt(var + eps)` with population variance,
/// keeping the statistics inside the graph so gradients flow through them.
pub fn standardize_graph(tape: &mut Tape, x: TensorId, eps: f64) -> TensorId {
    let mu = tape.mean(x);
    let centered = tape.sub(x, mu);
    let sq = tape.square(centered);
    let var = tape.mean(sq);
    let var_eps = tape.add_scalar(var, eps);
    let sigma = tape.sqrt(var_eps);
    tape.div(centered, sigma)
}

/// Record the correlation loss `-E[standardize(x) * standardize(y)]` for two
/// `[batch, 1]` columns. Equals negative Pearson correlation up to the `eps`
/// regularization of the variances.
pub fn corr_loss_graph(tape: &mut Tape, x: TensorId, y: TensorId, eps: f64) -> TensorId {
    let xs = standardize_graph(tape, x, eps);
    let ys = standardize_graph(tape, y, eps);
    let prod = tape.mul(xs, ys);
    let mean = tape.mean(prod);
    tape.neg(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::OBS_LEN;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_obs(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, OBS_LEN), |_| rng.random::<f64>())
    }

    fn fresh_net(encoding_dim: usize, seed: u64) -> BetaNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BetaNet::new(encoding_dim, (0.1, 2.0), 1.0, &mut rng)
    }

    /// Independently coded sample Pearson correlation (population moments).
    fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (x, y) in xs.iter().zip(ys.iter()) {
            cov += (x - mx) * (y - my);
            vx += (x - mx) * (x - mx);
            vy += (y - my) * (y - my);
        }
        cov / (vx.sqrt() * vy.sqrt())
    }

    #[test]
    fn untrained_network_outputs_the_reference_exactly() {
        let net = fresh_net(16, 1);
        let betas = net.forward(&random_obs(32, 2)).unwrap();
        assert!(betas.iter().all(|&b| b == 1.0), "init must be exactly 1.0");
    }

    #[test]
    fn extreme_raw_log_factors_clamp_to_the_bounds() {
        let mut net = fresh_net(8, 3);
        // Zero final weights leave the head bias as the raw log-factor.
        net.params.get_mut("bhead.b1").unwrap().values.fill(5.0);
        let hi = net.forward(&random_obs(4, 4)).unwrap();
        assert!(
            hi.iter().all(|&b| b <= 2.0 && (b - 2.0).abs() < 1e-12),
            "upper clamp: {hi:?}"
        );
        net.params.get_mut("bhead.b1").unwrap().values.fill(-5.0);
        let lo = net.forward(&random_obs(4, 5)).unwrap();
        assert!(
            lo.iter().all(|&b| b >= 0.1 && (b - 0.1).abs() < 1e-15),
            "lower clamp: {lo:?}"
        );
    }

    #[test]
    fn outputs_stay_in_range_for_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for trial in 0..20 {
            let mut net = fresh_net(8, 100 + trial);
            // Blow up the head so raw outputs swing far past the bounds.
            for name in ["bhead.w0", "bhead.w1", "bhead.b1"] {
                let entry = net.params.get_mut(name).unwrap();
                entry.values = Array2::from_shape_fn(entry.values.dim(), |_| {
                    (rng.random::<f64>() - 0.5) * 20.0
                });
            }
            for &b in &net.forward(&random_obs(100, trial)).unwrap() {
                assert!((0.1..=2.0).contains(&b), "beta {b} out of range");
            }
        }
    }

    #[test]
    fn perfectly_correlated_inputs_reach_minus_one() {
        let net = fresh_net(8, 7);
        let obs = random_obs(16, 8);
        // With beta constant at 1, the scaled novelty equals the raw values.
        let g: Vec<f64> = (0..16).map(|i| i as f64 * 0.3 + 0.5).collect();
        let corr = net.corr_loss(&obs, &g, &g, 1e-8).unwrap();
        assert_relative_eq!(corr, -1.0, epsilon = 1e-6);

        // Anticorrelated: novelty decreasing where returns increase.
        let anti: Vec<f64> = g.iter().map(|v| 10.0 - v).collect();
        let corr = net.corr_loss(&obs, &anti, &g, 1e-8).unwrap();
        assert_relative_eq!(corr, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn correlation_matches_an_independent_pearson_oracle() {
        let mut net = fresh_net(8, 9);
        // Give the head real weights so beta varies across states.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for name in ["bhead.w1", "bhead.b1"] {
            let entry = net.params.get_mut(name).unwrap();
            entry.values =
                Array2::from_shape_fn(entry.values.dim(), |_| (rng.random::<f64>() - 0.5) * 0.2);
        }
        let obs = random_obs(64, 11);
        let intrinsic: Vec<f64> = (0..64).map(|_| rng.random::<f64>() * 3.0).collect();
        let returns: Vec<f64> = (0..64).map(|_| rng.random::<f64>() * 2.0 - 0.5).collect();

        let corr = net.corr_loss(&obs, &intrinsic, &returns, 1e-8).unwrap();
        let betas = net.forward(&obs).unwrap();
        let scaled: Vec<f64> = betas
            .iter()
            .zip(intrinsic.iter())
            .map(|(b, i)| b * i)
            .collect();
        let expected = -pearson(&scaled, &returns);
        assert!(
            (corr - expected).abs() < 1e-6,
            "corr loss {corr} vs pearson oracle {expected}"
        );
        assert!(corr.abs() <= 1.0 + 1e-6);
    }

    #[test]
    fn correlation_is_invariant_to_positive_scaling_of_either_input() {
        let net = fresh_net(8, 12);
        let obs = random_obs(32, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let intrinsic: Vec<f64> = (0..32).map(|_| rng.random::<f64>() + 0.1).collect();
        let returns: Vec<f64> = (0..32).map(|_| rng.random::<f64>() * 4.0).collect();
        let base = net.corr_loss(&obs, &intrinsic, &returns, 1e-8).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let si: Vec<f64> = intrinsic.iter().map(|v| c * v).collect();
            let a = net.corr_loss(&obs, &si, &returns, 1e-8).unwrap();
            assert!((a - base).abs() < 1e-6, "intrinsic scale {c}");
            let sr: Vec<f64> = returns.iter().map(|v| c * v).collect();
            let b = net.corr_loss(&obs, &intrinsic, &sr, 1e-8).unwrap();
            assert!((b - base).abs() < 1e-6, "return scale {c}");
        }
    }

    #[test]
    fn degenerate_batches_stay_finite_and_near_zero() {
        let net = fresh_net(8, 15);
        let obs = random_obs(8, 16);
        // Constant returns: correlation is undefined, the eps floor takes
        // over and the loss collapses toward zero instead of blowing up.
        let intrinsic = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let returns = vec![0.0; 8];
        let corr = net.corr_loss(&obs, &intrinsic, &returns, 1e-8).unwrap();
        assert!(corr.is_finite());
        assert!(corr.abs() < 1e-6);
    }

    #[test]
    fn reg_loss_closed_forms() {
        let net = fresh_net(8, 17);
        let obs = random_obs(10, 18);
        assert_eq!(net.reg_loss(&obs).unwrap(), 0.0);

        let mut high = fresh_net(8, 19);
        high.params.get_mut("bhead.b1").unwrap().values.fill(5.0);
        let expected = 2.0f64.ln().powi(2);
        assert_relative_eq!(high.reg_loss(&obs).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn reg_loss_mixed_batch_is_one_third() {
        // Bounds wide enough to hold a log-factor of 1; weights arranged so
        // one distinguished input maps to log beta = 1 and the zero input to
        // log beta = 0 (= log beta_ref).
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut net = BetaNet::new(4, (0.1, 3.0), 1.0, &mut rng);
        for name in ["benc.w0", "benc.b0", "benc.w1", "benc.b1", "bhead.w0", "bhead.b0", "bhead.w1", "bhead.b1"] {
            net.params.get_mut(name).unwrap().values.fill(0.0);
        }
        net.params.get_mut("benc.w0").unwrap().values[(0, 0)] = 1.0;
        net.params.get_mut("benc.w1").unwrap().values[(0, 0)] = 1.0;
        net.params.get_mut("bhead.w0").unwrap().values[(0, 0)] = 1.0;
        // tanh stack value for input 1.0 (encoder hidden + head hidden),
        // inverted so the raw log-factor lands on 1.
        let v = 1.0f64.tanh().tanh();
        net.params.get_mut("bhead.w1").unwrap().values[(0, 0)] = 1.0 / v;

        let mut obs = Array2::zeros((3, OBS_LEN));
        obs[(2, 0)] = 1.0; // two reference rows, one e-fold row
        let logs = net.log_factors(&obs).unwrap();
        assert_eq!(&logs[..2], &[0.0, 0.0]);
        assert_relative_eq!(logs[2], 1.0, max_relative = 1e-12);
        assert_relative_eq!(net.reg_loss(&obs).unwrap(), 1.0 / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn zero_returns_keep_beta_anchored_at_the_reference() {
        let mut net = fresh_net(16, 21);
        let mut opt = OptimState::new(5e-4, 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let obs = random_obs(64, 23);
        for _ in 0..200 {
            let intrinsic: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
            let returns = vec![0.0; 64];
            net.update(&mut opt, &obs, &intrinsic, &returns, 1e-8, 1e-3, 1.0)
                .unwrap();
        }
        let drift: f64 = net
            .log_factors(&obs)
            .unwrap()
            .iter()
            .map(|lf| lf.abs())
            .sum::<f64>()
            / 64.0;
        assert!(drift < 0.1, "mean |log beta| drifted to {drift}");
    }

    #[test]
    fn beta_rises_where_novelty_predicts_return() {
        // Group A: novelty correlated with return. Group B: zero return.
        let mut net = fresh_net(16, 24);
        let mut opt = OptimState::new(5e-4, 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let mut obs = Array2::zeros((32, OBS_LEN));
        for i in 0..32 {
            for j in 0..OBS_LEN {
                obs[(i, j)] = rng.random::<f64>() * 0.2;
            }
            // Strong distinguishing pattern on the first coordinates.
            if i < 16 {
                obs[(i, 0)] = 1.0;
            } else {
                obs[(i, 1)] = 1.0;
            }
        }
        for _ in 0..300 {
            let intrinsic: Vec<f64> = (0..32).map(|_| rng.random::<f64>() + 0.5).collect();
            let returns: Vec<f64> = intrinsic
                .iter()
                .enumerate()
                .map(|(i, &v)| if i < 16 { v } else { 0.0 })
                .collect();
            net.update(&mut opt, &obs, &intrinsic, &returns, 1e-8, 1e-3, 1.0)
                .unwrap();
        }
        let betas = net.forward(&obs).unwrap();
        let mean_a = betas[..16].iter().sum::<f64>() / 16.0;
        let mean_b = betas[16..].iter().sum::<f64>() / 16.0;
        assert!(
            mean_a - mean_b > 0.1,
            "beta should separate the groups: A {mean_a} vs B {mean_b}"
        );
    }

    #[test]
    fn uniform_beta_shift_has_near_zero_correlation_gradient() {
        // When beta is the same for every state, adding a common offset only
        // rescales the novelty column, which correlation ignores.
        let mut tape = Tape::new();
        let beta = tape.leaf_col(&[1.0; 16]);
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let intrinsic: Vec<f64> = (0..16).map(|_| rng.random::<f64>() + 0.2).collect();
        let returns: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
        let intr = tape.leaf_col(&intrinsic);
        let scaled = tape.mul(beta, intr);
        let ret = tape.leaf_col(&returns);
        let loss = corr_loss_graph(&mut tape, scaled, ret, 1e-8);
        tape.backward(loss).unwrap();
        let grad = tape.grad(beta).unwrap();
        let directional: f64 = grad.iter().sum();
        let magnitude: f64 = grad.iter().map(|g| g.abs()).sum();
        assert!(magnitude > 1e-3, "individual gradients should be nonzero");
        // The variance floor leaves a residual of order eps; anything far
        // below the per-element gradient scale counts as vanished.
        assert!(
            directional.abs() < 1e-6 * magnitude.max(1.0),
            "uniform-shift derivative should vanish: {directional} vs magnitude {magnitude}"
        );
    }

    #[test]
    fn full_loss_gradients_pass_finite_difference_check() {
        let mut net = fresh_net(4, 27);
        // Perturb the head so log-factors are interior but nonzero.
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        for name in ["bhead.w1", "bhead.b1"] {
            let entry = net.params.get_mut(name).unwrap();
            entry.values =
                Array2::from_shape_fn(entry.values.dim(), |_| (rng.random::<f64>() - 0.5) * 0.1);
        }
        let obs = random_obs(6, 29);
        let intrinsic: Vec<f64> = (0..6).map(|_| rng.random::<f64>() + 0.1).collect();
        let returns: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
        let (eps, lambda) = (1e-8, 1e-3);

        let loss_value = |net: &BetaNet| {
            let corr = net.corr_loss(&obs, &intrinsic, &returns, eps).unwrap();
            let reg = net.reg_loss(&obs).unwrap();
            corr + lambda * reg
        };

        // Analytic gradients.
        let mut tape = Tape::new();
        let bound = tape.bind(&net.params);
        let obs_id = tape.leaf(obs.clone());
        let beta = net.beta_graph(&mut tape, &bound, obs_id).unwrap();
        let intr = tape.leaf_col(&intrinsic);
        let scaled = tape.mul(beta, intr);
        let ret = tape.leaf_col(&returns);
        let corr = corr_loss_graph(&mut tape, scaled, ret, eps);
        let reg = net.reg_loss_graph(&mut tape, &bound, obs_id).unwrap();
        let weighted = tape.mul_scalar(reg, lambda);
        let loss = tape.add(corr, weighted);
        tape.backward(loss).unwrap();
        net.params.zero_grads();
        tape.harvest_into(&bound, &mut net.params).unwrap();
        let analytic: Vec<(String, Array2<f64>)> = net
            .params
            .iter()
            .map(|(n, e)| (n.to_string(), e.grads.clone()))
            .collect();

        let h = 1e-5;
        for (name, grads) in &analytic {
            let dims = grads.dim();
            for (i, j) in [(0, 0), (dims.0 - 1, dims.1 - 1), (dims.0 / 2, dims.1 / 2)] {
                let orig = net.params.values(name).unwrap()[(i, j)];
                net.params.get_mut(name).unwrap().values[(i, j)] = orig + h;
                let up = loss_value(&net);
                net.params.get_mut(name).unwrap().values[(i, j)] = orig - h;
                let down = loss_value(&net);
                net.params.get_mut(name).unwrap().values[(i, j)] = orig;
                let numeric = (up - down) / (2.0 * h);
                let a = grads[(i, j)];
                let denom = a.abs().max(numeric.abs()).max(1e-6);
                assert!(
                    ((a - numeric) / denom).abs() < 1e-3,
                    "{name}[{i},{j}]: analytic {a} vs numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn update_reports_pre_update_values_and_changes_only_this_network() {
        let mut net = fresh_net(8, 30);
        let before = net.params.clone();
        let mut opt = OptimState::new(5e-4, 0.0);
        let obs = random_obs(16, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let intrinsic: Vec<f64> = (0..16).map(|_| rng.random::<f64>() + 0.1).collect();
        let returns: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
        let report = net
            .update(&mut opt, &obs, &intrinsic, &returns, 1e-8, 1e-3, 1.0)
            .unwrap();
        // Pre-update betas: the untrained network is exactly at the anchor.
        assert!(report.beta_values.iter().all(|&b| b == 1.0));
        assert_eq!(report.reg_loss, 0.0);
        assert!(report.corr_loss.abs() <= 1.0 + 1e-6);
        // Parameters moved.
        let moved = before
            .names()
            .any(|n| before.values(n).unwrap() != net.params.values(n).unwrap());
        assert!(moved, "update should change parameters");
    }
}
