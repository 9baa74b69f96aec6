//! The assembled pyramid: feeds a binarized image through the node
//! layers, propagating each node's spike code upward, and returns the
//! top node's code. All nodes learn online while processing.

use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::{format_bits, parse_bits, Bit};
use crate::dataset::BinaryImage;
use crate::error::{Error, Result};
use crate::node::Node;
use crate::scalar::Scalar;
use crate::topology::{build_topology_with, Topology};
use crate::vmm::VmmModel;

/// One configured network instance with online-learning node state.
#[derive(Clone, Debug)]
pub struct Icn<F: Scalar> {
    topology: Topology,
    k: usize,
    gamma: usize,
    /// Nodes in layer order; `layer_offsets[x]` is the id of the first
    /// node of layer x.
    nodes: Vec<Node<F>>,
    layer_offsets: Vec<usize>,
    /// Bits entering each node of layer x.
    layer_input_width: Vec<usize>,
    /// Bits each node of layer x emits per image.
    layer_output_bits: Vec<usize>,
}

impl<F: Scalar> Icn<F> {
    /// Builds an instance over `topology` with tuple length `k` and
    /// Hamming tolerance `gamma`, validating that every node receives at
    /// least one full tuple.
    pub fn new(topology: Topology, k: usize, gamma: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if gamma < 1 {
            return Err(Error::InvalidParameter("gamma must be at least 1".into()));
        }
        let mut layer_input_width = Vec::with_capacity(topology.layer_count());
        let mut layer_output_bits = Vec::with_capacity(topology.layer_count());
        let mut unit_bits = 1usize; // bits per lower-layer unit (pixels: 1)
        for layer in 0..topology.layer_count() {
            let input_width = topology.fan_in(layer) * unit_bits;
            if input_width < k {
                return Err(Error::InvalidConfig(format!(
                    "layer {} nodes receive {} bits, fewer than k = {}",
                    layer + 1,
                    input_width,
                    k
                )));
            }
            let out_bits = input_width / k;
            layer_input_width.push(input_width);
            layer_output_bits.push(out_bits);
            unit_bits = out_bits;
        }

        let mut nodes = Vec::with_capacity(topology.node_count());
        let mut layer_offsets = Vec::with_capacity(topology.layer_count());
        for &size in topology.layer_sizes() {
            layer_offsets.push(nodes.len());
            for _ in 0..size {
                nodes.push(Node::new(nodes.len(), k, gamma)?);
            }
        }
        Ok(Icn {
            topology,
            k,
            gamma,
            nodes,
            layer_offsets,
            layer_input_width,
            layer_output_bits,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn nodes(&self) -> &[Node<F>] {
        &self.nodes
    }

    /// Bits entering each node, per layer.
    pub fn layer_input_widths(&self) -> &[usize] {
        &self.layer_input_width
    }

    /// Bits emitted by each node, per layer.
    pub fn layer_output_bits(&self) -> &[usize] {
        &self.layer_output_bits
    }

    /// Length of the code the top node emits per image; constant for a
    /// given configuration.
    pub fn top_code_len(&self) -> usize {
        *self.layer_output_bits.last().expect("at least one layer")
    }

    /// Tuples each node of `layer` ingests per image.
    pub fn tuples_per_image(&self, layer: usize) -> usize {
        self.layer_input_width[layer] / self.k
    }

    /// Runs one image through the pyramid, updating every node online,
    /// and returns the top node's output code.
    pub fn process_image(&mut self, image: &BinaryImage) -> Result<Vec<Bit>> {
        if image.bits.len() != self.topology.input_width() {
            return Err(Error::InvalidInput(format!(
                "image has {} bits, topology expects {}",
                image.bits.len(),
                self.topology.input_width()
            )));
        }
        let mut lower: Vec<Bit> = image.bits.clone();
        let mut lower_unit = 1usize;
        let mut gathered = Vec::new();
        for layer in 0..self.topology.layer_count() {
            let size = self.topology.layer_sizes()[layer];
            let out_bits = self.layer_output_bits[layer];
            let mut upper = Vec::with_capacity(size * out_bits);
            for j in 0..size {
                gathered.clear();
                for src in self.topology.sources(layer, j).all() {
                    let start = src * lower_unit;
                    gathered.extend_from_slice(&lower[start..start + lower_unit]);
                }
                let node = &mut self.nodes[self.layer_offsets[layer] + j];
                upper.extend_from_slice(&node.process_input(&gathered)?);
            }
            lower = upper;
            lower_unit = out_bits;
        }
        Ok(lower)
    }

    /// Processes a dataset in a seed-shuffled order and returns
    /// (label, top code) pairs in the original index order.
    pub fn run_dataset(
        &mut self,
        images: &[BinaryImage],
        order_seed: u64,
    ) -> Result<Vec<(u8, Vec<Bit>)>> {
        if images.is_empty() {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        let mut order: Vec<usize> = (0..images.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(order_seed));
        let mut codes: Vec<Option<(u8, Vec<Bit>)>> = vec![None; images.len()];
        for idx in order {
            let code = self.process_image(&images[idx])?;
            codes[idx] = Some((images[idx].label, code));
        }
        Ok(codes.into_iter().map(|c| c.expect("all processed")).collect())
    }

    /// Deterministic text checkpoint: configuration, wiring parameters
    /// and every node's model counts. Reloading reproduces the instance
    /// bit-exactly.
    pub fn write_checkpoint<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "icn-checkpoint 1")?;
        let sizes: Vec<String> = self.topology.layer_sizes().iter().map(|s| s.to_string()).collect();
        writeln!(w, "layers {}", sizes.join(","))?;
        writeln!(w, "input_width {}", self.topology.input_width())?;
        writeln!(w, "topology_seed {}", self.topology.seed())?;
        writeln!(w, "random_extra_edges {}", self.topology.random_extra_edges())?;
        writeln!(w, "k {}", self.k)?;
        writeln!(w, "gamma {}", self.gamma)?;
        for node in &self.nodes {
            writeln!(
                w,
                "node {} updates={} best={}",
                node.node_id(),
                node.model().total_updates(),
                format_bits(node.best_pattern()),
            )?;
            node.model().dump(w)?;
        }
        writeln!(w, "end")?;
        Ok(())
    }

    /// Restores an instance written by [`Icn::write_checkpoint`].
    pub fn read_checkpoint<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(line))) => Ok((n + 1, line)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::parse("checkpoint", "eof", format!("expected {expect}"))),
            }
        };
        let (_, header) = next("header")?;
        if header != "icn-checkpoint 1" {
            return Err(Error::parse("checkpoint", "line 1", format!("bad header {header:?}")));
        }
        let field = |line: &str, lineno: usize, key: &str| -> Result<String> {
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| {
                    Error::parse("checkpoint", format!("line {lineno}"), format!("expected `{key} ...`, got {line:?}"))
                })
        };
        let parse_num = |s: &str, lineno: usize| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::parse("checkpoint", format!("line {lineno}"), format!("bad number {s:?}")))
        };

        let (n, line) = next("layers")?;
        let layers: Vec<usize> = field(&line, n, "layers")?
            .split(',')
            .map(|s| parse_num(s, n).map(|v| v as usize))
            .collect::<Result<_>>()?;
        let (n, line) = next("input_width")?;
        let input_width = parse_num(&field(&line, n, "input_width")?, n)? as usize;
        let (n, line) = next("topology_seed")?;
        let seed = parse_num(&field(&line, n, "topology_seed")?, n)?;
        let (n, line) = next("random_extra_edges")?;
        let extras = parse_num(&field(&line, n, "random_extra_edges")?, n)? as usize;
        let (n, line) = next("k")?;
        let k = parse_num(&field(&line, n, "k")?, n)? as usize;
        let (n, line) = next("gamma")?;
        let gamma = parse_num(&field(&line, n, "gamma")?, n)? as usize;

        let topology = build_topology_with(&layers, input_width, seed, extras)?;
        let mut instance = Icn::new(topology, k, gamma)?;

        let mut current: Option<usize> = None;
        loop {
            let (n, line) = next("node section or end")?;
            if line == "end" {
                break;
            }
            if let Some(rest) = line.strip_prefix("node ") {
                let mut parts = rest.split_whitespace();
                let id = parse_num(parts.next().unwrap_or(""), n)? as usize;
                if id >= instance.nodes.len() {
                    return Err(Error::parse("checkpoint", format!("line {n}"), format!("node id {id} out of range")));
                }
                let updates = parts
                    .next()
                    .and_then(|s| s.strip_prefix("updates="))
                    .ok_or_else(|| Error::parse("checkpoint", format!("line {n}"), "missing updates field"))
                    .and_then(|s| parse_num(s, n))?;
                let best = parts
                    .next()
                    .and_then(|s| s.strip_prefix("best="))
                    .ok_or_else(|| Error::parse("checkpoint", format!("line {n}"), "missing best field"))?;
                let mut model: VmmModel<F> = VmmModel::new(k)?;
                model.restore_total_updates(updates);
                instance.nodes[id] = Node::from_parts(id, gamma, model, parse_bits(best)?, false);
                current = Some(id);
            } else {
                let id = current.ok_or_else(|| {
                    Error::parse("checkpoint", format!("line {n}"), "counts before any node section")
                })?;
                let mut parts = line.split_whitespace();
                let ctx_str = parts
                    .next()
                    .ok_or_else(|| Error::parse("checkpoint", format!("line {n}"), "empty line"))?;
                let ctx = if ctx_str == "-" { Vec::new() } else { parse_bits(ctx_str)? };
                let c0 = parse_num(parts.next().unwrap_or(""), n)?;
                let c1 = parse_num(parts.next().unwrap_or(""), n)?;
                instance.nodes[id].model_mut().restore_context(&ctx, [c0, c1])?;
            }
        }
        Ok(instance)
    }

    /// Serializes the checkpoint to a string.
    pub fn checkpoint_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_checkpoint(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("checkpoint is ascii")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{binarize_all, BinaryImage};
    use crate::testkit::synthetic_corpus;
    use crate::topology::build_topology;
    use rand::{Rng, SeedableRng};

    fn image(bits: Vec<Bit>, label: u8, width: usize) -> BinaryImage {
        let height = bits.len() / width;
        BinaryImage { width, height, bits, label }
    }

    fn default_instance() -> Icn<f64> {
        let topology = build_topology(&[50, 20, 5, 1], 784, 42).unwrap();
        Icn::new(topology, 5, 2).unwrap()
    }

    #[test]
    fn width_law_for_default_geometry() {
        let icn = default_instance();
        assert_eq!(icn.layer_input_widths(), &[18, 15, 18, 15]);
        assert_eq!(icn.layer_output_bits(), &[3, 3, 3, 3]);
        assert_eq!(icn.top_code_len(), 3);
    }

    #[test]
    fn rejects_starved_nodes() {
        // 5 -> 1 with k = 6: the top node would get 5 bits.
        let topology = build_topology(&[5, 1], 40, 0).unwrap();
        let err = Icn::<f64>::new(topology, 6, 1).unwrap_err();
        assert_eq!(err.tag(), "invalid-config");
        assert!(err.to_string().contains("layer"), "{err}");
    }

    #[test]
    fn all_zero_image_lights_first_layer() {
        let mut icn = default_instance();
        let mut first_layer_outputs = Vec::new();
        // Reproduce the layer-1 pass manually alongside process_image.
        let img = image(vec![0; 784], 0, 28);
        for j in 0..50 {
            let mut node: Node<f64> = Node::new(j, 5, 2).unwrap();
            let zeros = vec![0u8; icn.layer_input_widths()[0]];
            first_layer_outputs.push(node.process_input(&zeros).unwrap());
        }
        assert!(first_layer_outputs.iter().flatten().all(|&b| b == 1));

        let code = icn.process_image(&img).unwrap();
        assert_eq!(code.len(), 3);
        // Layer-1 nodes saw only zero tuples: all spiked on every tuple.
        for j in 0..50 {
            let node = &icn.nodes()[j];
            assert_eq!(node.best_pattern(), &[0, 0, 0, 0, 0]);
        }
    }

    #[test]
    fn code_length_constant_across_images() {
        let mut icn = default_instance();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let bits: Vec<Bit> = (0..784).map(|_| rng.gen_range(0..2) as Bit).collect();
            let code = icn.process_image(&image(bits, 0, 28)).unwrap();
            assert_eq!(code.len(), icn.top_code_len());
        }
    }

    #[test]
    fn image_width_is_validated() {
        let mut icn = default_instance();
        let err = icn.process_image(&image(vec![0; 100], 0, 10)).unwrap_err();
        assert_eq!(err.tag(), "invalid-input");
    }

    #[test]
    fn dataset_run_is_deterministic_and_order_preserving() {
        let corpus = synthetic_corpus(4, 10, 28, 28, 0.02, 77);
        let images = binarize_all(&corpus, 80);
        let run = |mut icn: Icn<f64>| icn.run_dataset(&images, 9).unwrap();
        let a = run(default_instance());
        let b = run(default_instance());
        assert_eq!(a, b);
        // Labels come back in original order.
        for (got, img) in a.iter().zip(&images) {
            assert_eq!(got.0, img.label);
        }
        let mut icn = default_instance();
        assert!(icn.run_dataset(&[], 0).is_err());
        let one = icn.run_dataset(&images[..1], 0).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn update_accounting_law() {
        let corpus = synthetic_corpus(3, 4, 28, 28, 0.02, 8);
        let images = binarize_all(&corpus, 80);
        let mut icn = default_instance();
        icn.run_dataset(&images, 3).unwrap();
        let mut id = 0;
        for layer in 0..icn.topology().layer_count() {
            let per_image = icn.tuples_per_image(layer) * icn.k();
            for _ in 0..icn.topology().layer_sizes()[layer] {
                assert_eq!(
                    icn.nodes()[id].model().total_updates(),
                    (images.len() * per_image) as u64,
                    "node {id}"
                );
                id += 1;
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let corpus = synthetic_corpus(4, 6, 28, 28, 0.02, 21);
        let images = binarize_all(&corpus, 80);
        let mut icn = default_instance();
        let (first, second) = images.split_at(12);
        icn.run_dataset(first, 5).unwrap();

        let saved = icn.checkpoint_string();
        let mut restored: Icn<f64> = Icn::read_checkpoint(&mut saved.as_bytes()).unwrap();
        assert_eq!(saved, restored.checkpoint_string());

        // Continuing from the restored state matches the original.
        let a = icn.run_dataset(second, 6).unwrap();
        let b = restored.run_dataset(second, 6).unwrap();
        assert_eq!(a, b);
        assert_eq!(icn.checkpoint_string(), restored.checkpoint_string());
    }

    #[test]
    fn f32_instance_produces_codes() {
        let topology = build_topology(&[50, 20, 5, 1], 784, 42).unwrap();
        let mut icn: Icn<f32> = Icn::new(topology, 5, 2).unwrap();
        let corpus = synthetic_corpus(2, 3, 28, 28, 0.02, 4);
        let images = binarize_all(&corpus, 80);
        let codes = icn.run_dataset(&images, 1).unwrap();
        assert!(codes.iter().all(|(_, c)| c.len() == icn.top_code_len()));
    }
}
