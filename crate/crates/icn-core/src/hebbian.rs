//! Single-node recurrent-pattern experiment with diagnostic synaptic
//! weights.
//!
//! A stream of k-bit tuples (a fixed pattern mixed into uniform noise)
//! drives one standard [`Node`]. Each dendrite carries a weight that
//! rises when the dendrite was active in the recent window around an
//! output spike and falls otherwise. The weights are a readout only —
//! they never influence the node's spiking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::{validate_bits, Bit};
use crate::error::{Error, Result};
use crate::node::Node;
use crate::scalar::Scalar;

/// Parameters of one run. Defaults reproduce the 5-dendrite setup:
/// pattern 10010 at 25% mixture, weights starting at 0.5 with ±0.01
/// rewards over a 2-step coincidence window, 1000 steps, exact-match
/// spiking (gamma 1).
#[derive(Clone, Debug)]
pub struct HebbianParams<F: Scalar> {
    pub steps: usize,
    pub p_fixed: f64,
    pub fixed_pattern: Vec<Bit>,
    pub initial_weight: F,
    pub weight_delta: F,
    /// Number of most recent timesteps, including the spiking one, in
    /// which presynaptic activity counts as coincident.
    pub window: usize,
    pub gamma: usize,
    pub seed: u64,
}

impl<F: Scalar> Default for HebbianParams<F> {
    fn default() -> Self {
        HebbianParams {
            steps: 1000,
            p_fixed: 0.25,
            fixed_pattern: vec![1, 0, 0, 1, 0],
            initial_weight: F::from_f64(0.5).unwrap(),
            weight_delta: F::from_f64(0.01).unwrap(),
            window: 2,
            gamma: 1,
            seed: 0,
        }
    }
}

/// Full record of one run: stimulus, spikes, weight trajectories and the
/// best-pattern timeline, each indexed by timestep.
#[derive(Clone, Debug)]
pub struct HebbianTrace<F: Scalar> {
    pub params: HebbianParams<F>,
    /// The generated stimulus; row t is the k-bit tuple fed at step t.
    pub stimulus: Vec<Vec<Bit>>,
    /// Output spike per step.
    pub output: Vec<Bit>,
    /// Weights after the update of each step.
    pub weights_over_time: Vec<Vec<F>>,
    /// The node's best pattern after each step's model update.
    pub best_pattern_over_time: Vec<Vec<Bit>>,
}

impl<F: Scalar> HebbianTrace<F> {
    pub fn final_weights(&self) -> &[F] {
        self.weights_over_time.last().expect("at least one step")
    }

    pub fn spike_count(&self) -> usize {
        self.output.iter().filter(|&&b| b == 1).count()
    }

    /// First step from which the best pattern equals `pattern` and never
    /// changes again.
    pub fn locked_from(&self, pattern: &[Bit]) -> Option<usize> {
        let mut from = None;
        for (t, best) in self.best_pattern_over_time.iter().enumerate() {
            if best == pattern {
                from.get_or_insert(t);
            } else {
                from = None;
            }
        }
        from
    }
}

/// Generates the stimulus: per step, the fixed pattern with probability
/// `p_fixed`, otherwise a uniform random tuple of the same length.
pub fn generate_stimulus(
    steps: usize,
    p_fixed: f64,
    fixed_pattern: &[Bit],
    seed: u64,
) -> Result<Vec<Vec<Bit>>> {
    if !(0.0..=1.0).contains(&p_fixed) {
        return Err(Error::InvalidParameter(format!(
            "p_fixed {p_fixed} outside [0, 1]"
        )));
    }
    if fixed_pattern.is_empty() {
        return Err(Error::InvalidParameter("empty fixed pattern".into()));
    }
    validate_bits(fixed_pattern)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..steps)
        .map(|_| {
            if rng.gen_bool(p_fixed) {
                fixed_pattern.to_vec()
            } else {
                (0..fixed_pattern.len()).map(|_| rng.gen_range(0..2) as Bit).collect()
            }
        })
        .collect())
}

/// Runs the experiment: one tuple per step through a standard node; on
/// every output spike each dendrite gains `weight_delta` if it carried a
/// 1 within the window and loses it otherwise, clamped to [0, 1].
pub fn run_hebbian<F: Scalar>(params: &HebbianParams<F>) -> Result<HebbianTrace<F>> {
    if params.steps < 1 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    if params.window < 1 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    let k = params.fixed_pattern.len();
    let stimulus = generate_stimulus(params.steps, params.p_fixed, &params.fixed_pattern, params.seed)?;
    let mut node: Node<F> = Node::new(0, k, params.gamma)?;
    let mut weights = vec![params.initial_weight; k];
    let mut output = Vec::with_capacity(params.steps);
    let mut weights_over_time = Vec::with_capacity(params.steps);
    let mut best_over_time = Vec::with_capacity(params.steps);

    for (t, tuple) in stimulus.iter().enumerate() {
        let spike = node.process_input(tuple)?[0];
        output.push(spike);
        if spike == 1 {
            for (i, w) in weights.iter_mut().enumerate() {
                let active = (0..params.window)
                    .filter_map(|back| t.checked_sub(back))
                    .any(|s| stimulus[s][i] == 1);
                if active {
                    *w = *w + params.weight_delta;
                } else {
                    *w = *w - params.weight_delta;
                }
                *w = w.min(F::one()).max(F::zero());
            }
        }
        weights_over_time.push(weights.clone());
        best_over_time.push(node.best_pattern().to_vec());
    }

    Ok(HebbianTrace {
        params: params.clone(),
        stimulus,
        output,
        weights_over_time,
        best_pattern_over_time: best_over_time,
    })
}
