//! Randomized property checks of arithmetic invariants the training stack
//! relies on. Each property restates a contract from first principles —
//! usually as a slower, more literal computation — and lets the generator
//! hunt for counterexamples.

use ndarray::Array2;
use proptest::prelude::*;

use acwi::analysis::beta_histograms;
use acwi::beta::corr_loss_graph;
use acwi::env::{self, Action, EnvName, NUM_ACTIONS};
use acwi::icm::rectify_normalize;
use acwi::nn::Tape;
use acwi::ppo::{augment_rewards, compute_gae, extrinsic_returns};

/// A trajectory slice: per-step rewards with episode-boundary flags that
/// never mark the same step both successful and timed out.
fn trajectory(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<bool>, Vec<bool>)> {
    prop::collection::vec((-2.0..2.0f64, 0u8..10), 1..=max_len).prop_map(|steps| {
        let rewards: Vec<f64> = steps.iter().map(|&(r, _)| r).collect();
        let terminated: Vec<bool> = steps.iter().map(|&(_, f)| f == 0).collect();
        let truncated: Vec<bool> = steps.iter().map(|&(_, f)| f == 1).collect();
        (rewards, terminated, truncated)
    })
}

proptest! {
    /// The linear-time advantage recursion equals the quadratic double-sum
    /// definition, with the geometric accumulation cut at every episode
    /// boundary.
    #[test]
    fn advantage_recursion_equals_the_double_sum(
        (rewards, terminated, truncated) in trajectory(48),
        values in prop::collection::vec(-2.0..2.0f64, 48),
        next_values in prop::collection::vec(-2.0..2.0f64, 48),
        gamma in 0.8..0.999f64,
        lambda in 0.8..1.0f64,
    ) {
        let n = rewards.len();
        let values = &values[..n];
        let next_values = &next_values[..n];
        let (adv, targets) = compute_gae(
            &rewards, values, next_values, &terminated, &truncated, gamma, lambda,
        );
        for t in 0..n {
            let mut expect = 0.0;
            let mut coef = 1.0;
            for k in t..n {
                let next_v = if terminated[k] { 0.0 } else { next_values[k] };
                expect += coef * (rewards[k] + gamma * next_v - values[k]);
                if terminated[k] || truncated[k] {
                    break;
                }
                coef *= gamma * lambda;
            }
            prop_assert!((adv[t] - expect).abs() < 1e-10);
            prop_assert!((targets[t] - (adv[t] + values[t])).abs() < 1e-12);
        }
    }

    /// Discounted extrinsic returns restart from zero after every episode
    /// boundary and match the direct geometric sum inside each segment.
    #[test]
    fn extrinsic_returns_match_the_segmented_geometric_sum(
        (rewards, terminated, truncated) in trajectory(48),
        gamma in 0.8..0.999f64,
    ) {
        let n = rewards.len();
        let returns = extrinsic_returns(&rewards, &terminated, &truncated, gamma);
        for t in 0..n {
            let mut expect = 0.0;
            let mut coef = 1.0;
            for k in t..n {
                expect += coef * rewards[k];
                if terminated[k] || truncated[k] {
                    break;
                }
                coef *= gamma;
            }
            prop_assert!((returns[t] - expect).abs() < 1e-10);
        }
    }

    /// Rectified normalization is nonnegative, kills constant batches, and
    /// ignores positive rescaling of the raw signal. Scale invariance is
    /// exact only above the variance floor, so batches are assumed to have
    /// real spread and the tolerance covers the floor's residue
    /// (`|z| * eps / (2 * scale^2 * sigma^2)`, at most ~1e-4 here).
    #[test]
    fn rectified_normalization_invariants(
        raw in prop::collection::vec(-3.0..3.0f64, 2..128),
        scale in 0.5..50.0f64,
    ) {
        let n = raw.len() as f64;
        let mean = raw.iter().sum::<f64>() / n;
        let sigma = (raw.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        prop_assume!(sigma > 0.1);

        let base = rectify_normalize(&raw, 1e-8);
        prop_assert!(base.rectified.iter().all(|&v| v >= 0.0));

        let scaled: Vec<f64> = raw.iter().map(|&v| scale * v).collect();
        let rescaled = rectify_normalize(&scaled, 1e-8);
        for (a, b) in base.rectified.iter().zip(&rescaled.rectified) {
            prop_assert!((a - b).abs() < 1e-3);
        }

        // Exact zeros on a constant batch require the batch mean to be exact;
        // a dyadic constant guarantees that (an arbitrary constant picks up
        // mean round-off amplified by `1/eps`).
        let dyadic = (raw[0] * 8.0).round() / 8.0;
        let flat = rectify_normalize(&vec![dyadic; raw.len()], 1e-8);
        prop_assert!(flat.rectified.iter().all(|&v| v == 0.0));
    }

    /// Reward augmentation is exactly `r + alpha * beta * intrinsic`:
    /// zero strength passes rewards through bitwise, and the intrinsic term
    /// scales linearly in alpha.
    #[test]
    fn reward_augmentation_is_linear_in_strength(
        rows in prop::collection::vec((-1.0..1.0f64, 0.1..2.0f64, 0.0..3.0f64), 1..64),
        alpha in 0.0..0.1f64,
    ) {
        let rewards: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let betas: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let intrinsic: Vec<f64> = rows.iter().map(|r| r.2).collect();

        let off = augment_rewards(&rewards, &betas, &intrinsic, 0.0).unwrap();
        prop_assert_eq!(&off, &rewards);

        let on = augment_rewards(&rewards, &betas, &intrinsic, alpha).unwrap();
        for i in 0..rewards.len() {
            let bonus = on[i] - rewards[i];
            prop_assert!((bonus - alpha * betas[i] * intrinsic[i]).abs() < 1e-15);
        }
    }

    /// The correlation loss never leaves `[-1, 1]` (up to the variance-floor
    /// slack), whatever the inputs.
    #[test]
    fn correlation_loss_is_bounded(
        x in prop::collection::vec(-10.0..10.0f64, 2..64),
        y in prop::collection::vec(-10.0..10.0f64, 64),
    ) {
        let y = &y[..x.len()];
        let mut tape = Tape::new();
        let xs = tape.leaf_col(&x);
        let ys = tape.leaf_col(y);
        let loss = corr_loss_graph(&mut tape, xs, ys, 1e-8);
        prop_assert!(tape.scalar_value(loss).abs() <= 1.0 + 1e-6);
    }

    /// Stage histograms conserve mass: every snapshot sample lands in
    /// exactly one bin of exactly one stage window.
    #[test]
    fn histograms_conserve_sample_mass(
        samples in prop::collection::vec((1u64..500, 0.1..2.0f64), 1..256),
        stages in 1usize..8,
    ) {
        let histograms = beta_histograms(&samples, stages, (0.1, 2.0)).unwrap();
        prop_assert_eq!(histograms.len(), stages);
        let total: u64 = histograms.iter().map(|h| h.total()).sum();
        prop_assert_eq!(total, samples.len() as u64);
    }

    /// Environment stepping keeps its counters and flags coherent under
    /// arbitrary action sequences: the step counter advances by exactly one
    /// per step, rewards appear only with success, and an episode is over
    /// exactly when a success or the step limit is reached.
    #[test]
    fn environment_bookkeeping_survives_arbitrary_actions(
        seed in 0u64..1000,
        actions in prop::collection::vec(0usize..NUM_ACTIONS, 1..200),
    ) {
        let mut e = env::make_env(EnvName::DoorKey, 5, seed).unwrap();
        for &a in &actions {
            let before = e.step_count;
            let result = e.step(Action::from_index(a).unwrap()).unwrap();
            prop_assert_eq!(e.step_count, before + 1);
            prop_assert!(!(result.terminated && result.truncated));
            if result.terminated {
                prop_assert!(result.reward > 0.0 && result.reward <= 1.0);
            } else {
                prop_assert_eq!(result.reward, 0.0);
            }
            prop_assert_eq!(result.done(), e.finished);
            if result.done() {
                prop_assert!(e.step(Action::Done).is_err());
                break;
            }
            prop_assert!(e.step_count < e.max_steps);
        }
    }
}

/// Observation flattening stays inside the unit cube for every code the
/// environments can emit — the network inputs have a fixed range.
#[test]
fn flattened_observations_stay_in_the_unit_interval() {
    let mut e = env::make_env(EnvName::RedBlueDoors, 6, 9).unwrap();
    for step in 0..2_000 {
        let flat = e.observe().flatten();
        assert!(flat.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let action = Action::ALL[step % NUM_ACTIONS];
        if e.step(action).unwrap().done() {
            e.reset(step as u64);
        }
    }
}

/// `Array2` round-trip sanity for the batch shapes the losses consume: the
/// tape's column leaves agree with the plain vectors they came from.
#[test]
fn column_leaves_round_trip() {
    let xs = [0.25, -1.5, 3.0, 0.0];
    let mut tape = Tape::new();
    let id = tape.leaf_col(&xs);
    let value: Array2<f64> = tape.value(id).clone();
    assert_eq!(value.dim(), (4, 1));
    for (i, &x) in xs.iter().enumerate() {
        assert_eq!(value[(i, 0)], x);
    }
}
