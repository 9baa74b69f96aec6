//! Test support: independent oracles and synthetic corpora.
//!
//! The functions here are deliberately naive, direct transcriptions of
//! the definitions they encode. They share no code with the incremental
//! implementations they are used to check, and they are only meant for
//! test suites and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::Bit;
use crate::dataset::GrayImage;

/// Explicit count tables built by scanning every (position, order)
/// window of the training sequence; linear search, no trie.
pub fn oracle_counts(seq: &[Bit], max_order: usize) -> Vec<(Vec<Bit>, [u64; 2])> {
    let mut table: Vec<(Vec<Bit>, [u64; 2])> = Vec::new();
    for j in 0..seq.len() {
        for d in 0..=max_order.min(j) {
            let ctx = seq[j - d..j].to_vec();
            let sym = seq[j] as usize;
            match table.iter_mut().find(|(c, _)| *c == ctx) {
                Some((_, counts)) => counts[sym] += 1,
                None => {
                    let mut counts = [0u64; 2];
                    counts[sym] += 1;
                    table.push((ctx, counts));
                }
            }
        }
    }
    table
}

/// PPM-C escape recursion over explicit count tables, without
/// exclusions, uniform base distribution below order 0.
///
/// At each suffix level the symbol receives its count mass and the
/// escape mass (distinct symbols over total plus distinct) is passed to
/// the next shorter suffix; unseen contexts pass straight through.
pub fn oracle_probability(counts: &[(Vec<Bit>, [u64; 2])], symbol: Bit, context: &[Bit]) -> f64 {
    fn recurse(counts: &[(Vec<Bit>, [u64; 2])], symbol: Bit, context: &[Bit]) -> f64 {
        let below = if context.is_empty() {
            0.5
        } else {
            recurse(counts, symbol, &context[1..])
        };
        match counts.iter().find(|(c, _)| c == context) {
            Some((_, c)) if c[0] + c[1] > 0 => {
                let total = (c[0] + c[1]) as f64;
                let distinct = ((c[0] > 0) as u64 + (c[1] > 0) as u64) as f64;
                (c[symbol as usize] as f64 + distinct * below) / (total + distinct)
            }
            _ => below,
        }
    }
    recurse(counts, symbol, context)
}

/// Synthetic labeled digit-like corpus: one random ink prototype per
/// class, each image a noisy copy. Pixels are 0 or 255 so binarization
/// thresholds behave like on real scans.
pub fn synthetic_corpus(
    classes: usize,
    per_class: usize,
    width: usize,
    height: usize,
    flip_prob: f64,
    seed: u64,
) -> Vec<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = width * height;
    let prototypes: Vec<Vec<u8>> = (0..classes)
        .map(|_| (0..pixels).map(|_| if rng.gen_bool(0.25) { 255u8 } else { 0 }).collect())
        .collect();
    let mut images = Vec::with_capacity(classes * per_class);
    for _ in 0..per_class {
        for (label, proto) in prototypes.iter().enumerate() {
            let buf: Vec<u8> = proto
                .iter()
                .map(|&p| if rng.gen_bool(flip_prob) { 255 - p } else { p })
                .collect();
            images.push(GrayImage {
                width,
                height,
                pixels: buf,
                label: label as u8,
            });
        }
    }
    images
}
