//! Pyramid wiring: per layer pair, each upper node reads an overlapping
//! contiguous block of lower sources (ring order) plus a small number of
//! seeded random long-range sources. The raw image is treated as a
//! virtual layer below the first node layer and wired by the same rule.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sources feeding one node, split by how the edge was assigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSources {
    pub deterministic: Vec<usize>,
    pub random: Vec<usize>,
}

impl NodeSources {
    /// All sources in gather order: the contiguous block first, then the
    /// random extras.
    pub fn all(&self) -> impl Iterator<Item = usize> + '_ {
        self.deterministic.iter().chain(self.random.iter()).copied()
    }

    pub fn fan_in(&self) -> usize {
        self.deterministic.len() + self.random.len()
    }
}

/// Immutable pyramid wiring between a virtual input layer and the node
/// layers. Construction is a pure function of (layer sizes, input width,
/// seed, extras per node).
#[derive(Clone, Debug)]
pub struct Topology {
    layer_sizes: Vec<usize>,
    input_width: usize,
    seed: u64,
    random_extra_edges: usize,
    /// edges[x][j] = sources for node j of layer x (0-based layer index;
    /// sources index into layer x-1, or pixels when x == 0).
    edges: Vec<Vec<NodeSources>>,
}

/// Builds the default wiring with one random extra edge per node.
pub fn build_topology(layer_sizes: &[usize], input_width: usize, seed: u64) -> Result<Topology> {
    build_topology_with(layer_sizes, input_width, seed, 1)
}

/// Builds the wiring with a configurable number of random extra edges
/// per node.
pub fn build_topology_with(
    layer_sizes: &[usize],
    input_width: usize,
    seed: u64,
    random_extra_edges: usize,
) -> Result<Topology> {
    if layer_sizes.is_empty() {
        return Err(Error::InvalidTopology("no layers".into()));
    }
    if layer_sizes.iter().any(|&l| l == 0) {
        return Err(Error::InvalidTopology("zero-width layer".into()));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(Error::InvalidTopology(format!(
            "top layer must have exactly 1 node, got {}",
            layer_sizes.last().unwrap()
        )));
    }
    if layer_sizes.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidTopology(format!(
            "layer sizes {layer_sizes:?} are not strictly decreasing"
        )));
    }
    if input_width <= layer_sizes[0] {
        return Err(Error::InvalidTopology(format!(
            "input width {input_width} must exceed first layer size {}",
            layer_sizes[0]
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(layer_sizes.len());
    let mut lower = input_width;
    for &upper in layer_sizes {
        edges.push(wire_pair(lower, upper, random_extra_edges, &mut rng));
        lower = upper;
    }
    Ok(Topology {
        layer_sizes: layer_sizes.to_vec(),
        input_width,
        seed,
        random_extra_edges,
        edges,
    })
}

/// Wires one (lower width, upper width) pair: node j reads the block of
/// `ceil(w/u) + 1` sources starting at `j * ceil(w/u)` (mod w, clamped
/// to w when the block would exceed the layer), then random extras drawn
/// without duplicates. Overlapping blocks cover the whole lower layer.
fn wire_pair(lower: usize, upper: usize, extras: usize, rng: &mut ChaCha8Rng) -> Vec<NodeSources> {
    let stride = lower.div_ceil(upper);
    let block = (stride + 1).min(lower);
    let extras = extras.min(lower - block);
    (0..upper)
        .map(|j| {
            let deterministic: Vec<usize> = (0..block).map(|t| (j * stride + t) % lower).collect();
            let mut random = Vec::with_capacity(extras);
            while random.len() < extras {
                let candidate = rng.gen_range(0..lower);
                if !deterministic.contains(&candidate) && !random.contains(&candidate) {
                    random.push(candidate);
                }
            }
            NodeSources { deterministic, random }
        })
        .collect()
}

impl Topology {
    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn random_extra_edges(&self) -> usize {
        self.random_extra_edges
    }

    /// Total node count across all layers.
    pub fn node_count(&self) -> usize {
        self.layer_sizes.iter().sum()
    }

    pub fn layer_count(&self) -> usize {
        self.layer_sizes.len()
    }

    /// Width of the layer below layer `x` (pixels for x == 0).
    pub fn lower_width(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_width
        } else {
            self.layer_sizes[layer - 1]
        }
    }

    /// Sources for node `node` of layer `layer` (0-based).
    pub fn sources(&self, layer: usize, node: usize) -> &NodeSources {
        &self.edges[layer][node]
    }

    /// Fan-in shared by every node of `layer` (uniform by construction).
    pub fn fan_in(&self, layer: usize) -> usize {
        self.edges[layer][0].fan_in()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
            .iter()
            .flat_map(|layer| layer.iter())
            .map(NodeSources::fan_in)
            .sum()
    }

    /// Deterministic adjacency listing: `layer,target,source,kind` per
    /// edge, deterministic block first. Layers are 1-based in the dump.
    pub fn dump<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (x, layer) in self.edges.iter().enumerate() {
            for (j, sources) in layer.iter().enumerate() {
                for &s in &sources.deterministic {
                    writeln!(w, "{},{},{},deterministic", x + 1, j, s)?;
                }
                for &s in &sources.random {
                    writeln!(w, "{},{},{},random", x + 1, j, s)?;
                }
            }
        }
        Ok(())
    }

    pub fn dump_to_string(&self) -> String {
        let mut buf = Vec::new();
        self.dump(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("dump is ascii")
    }
}
