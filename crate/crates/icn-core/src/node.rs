//! One predictor node: ingests its dendritic bit stream in disjoint
//! k-tuples, updates its model on every tuple, and spikes when the tuple
//! lies within the Hamming tolerance of the current best pattern.

use crate::bits::{validate_bits, Bit};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vmm::VmmModel;

/// Number of positions where two equal-length bit sequences differ.
pub fn hamming_distance(a: &[Bit], b: &[Bit]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// Spiking predictor node around one [`VmmModel`].
///
/// `gamma` is the exclusive Hamming threshold: a tuple at distance
/// strictly below `gamma` from the best pattern emits a 1. With
/// `gamma = 1` only exact matches spike; with `gamma = k + 1` everything
/// does.
#[derive(Clone, Debug)]
pub struct Node<F: Scalar> {
    node_id: usize,
    k: usize,
    gamma: usize,
    model: VmmModel<F>,
    best_pattern: Vec<Bit>,
    pinned: bool,
}

impl<F: Scalar> Node<F> {
    pub fn new(node_id: usize, k: usize, gamma: usize) -> Result<Self> {
        if gamma < 1 {
            return Err(Error::InvalidParameter("gamma must be at least 1".into()));
        }
        Ok(Node {
            node_id,
            k,
            gamma,
            model: VmmModel::new(k)?,
            best_pattern: vec![0; k],
            pinned: false,
        })
    }

    pub fn node_id(&self) -> usize {
        self.node_id
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn model(&self) -> &VmmModel<F> {
        &self.model
    }

    pub(crate) fn model_mut(&mut self) -> &mut VmmModel<F> {
        &mut self.model
    }

    pub fn best_pattern(&self) -> &[Bit] {
        &self.best_pattern
    }

    /// Overrides the tracked best pattern (length must equal k).
    pub fn set_best_pattern(&mut self, pattern: &[Bit]) -> Result<()> {
        if pattern.len() != self.k {
            return Err(Error::InvalidParameter(format!(
                "pattern length {} != k {}",
                pattern.len(),
                self.k
            )));
        }
        validate_bits(pattern)?;
        self.best_pattern = pattern.to_vec();
        Ok(())
    }

    /// When pinned, the best pattern is not recomputed after each tuple.
    /// Model updates still happen; useful for worked examples and probes.
    pub fn set_pinned(&mut self, pinned: bool) {
        self.pinned = pinned;
    }

    pub fn pinned(&self) -> bool {
        self.pinned
    }

    /// Processes one input sequence and returns `floor(|s| / k)` output
    /// bits, one per disjoint k-tuple (a trailing remainder shorter than
    /// k is discarded).
    ///
    /// Per tuple, in order: the model ingests the tuple; the output bit
    /// compares the tuple against the best pattern from before the
    /// tuple; the best pattern is then recomputed.
    pub fn process_input(&mut self, s: &[Bit]) -> Result<Vec<Bit>> {
        if s.len() < self.k {
            return Err(Error::InvalidInput(format!(
                "input of {} bits shorter than tuple length {}",
                s.len(),
                self.k
            )));
        }
        let mut out = Vec::with_capacity(s.len() / self.k);
        for tuple in s.chunks_exact(self.k) {
            self.model.update(tuple)?;
            let distance = hamming_distance(tuple, &self.best_pattern)?;
            out.push((distance < self.gamma) as Bit);
            if !self.pinned {
                self.best_pattern = self.model.best_pattern(self.k)?;
            }
        }
        Ok(out)
    }

    /// Clears the model and resets the best pattern to the all-zero
    /// tuple (the empty-model argmax under the tie-break rule).
    pub fn reset_model(&mut self) {
        self.model.reset();
        self.best_pattern = vec![0; self.k];
    }

    /// Rebuilds a node from checkpointed parts.
    pub(crate) fn from_parts(
        node_id: usize,
        gamma: usize,
        model: VmmModel<F>,
        best_pattern: Vec<Bit>,
        pinned: bool,
    ) -> Self {
        let k = model.max_order();
        Node {
            node_id,
            k,
            gamma,
            model,
            best_pattern,
            pinned,
        }
    }
}
