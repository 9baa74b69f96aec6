//! Clustering error from top-node codes: pick the most frequent code of
//! each digit class as its representative, count every image whose code
//! differs from its class representative as a mismatch. Distinct classes
//! may share a representative; that is reported, not rejected.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::thread;

use crate::bits::{format_bits, Bit};
use crate::dataset::{binarize_all, subsample, GrayImage};
use crate::error::{Error, Result};
use crate::network::Icn;
use crate::scalar::Scalar;
use crate::seeds::derive_seed;
use crate::topology::build_topology_with;

pub type Code = Vec<Bit>;

/// Outcome of scoring one labeled code list.
#[derive(Clone, Debug)]
pub struct EvalReport {
    pub per_image: Vec<(u8, Code)>,
    /// Most frequent code per class, ties to the lexicographically
    /// smallest code.
    pub representatives: BTreeMap<u8, Code>,
    /// Codes claimed by more than one class, with the classes.
    pub shared_representatives: Vec<(Code, Vec<u8>)>,
    /// (label, code) -> occurrence count.
    pub confusion: BTreeMap<(u8, Code), usize>,
    pub mismatches: usize,
    pub error_rate: f64,
    /// Supplementary: fraction of images whose code's majority class
    /// matches their label. Never gates anything.
    pub purity: f64,
}

/// Scores a labeled code list. Codes must be non-empty and uniform in
/// length; input order does not matter.
pub fn compute_error(per_image: &[(u8, Code)]) -> Result<EvalReport> {
    if per_image.is_empty() {
        return Err(Error::InvalidInput("no codes to evaluate".into()));
    }
    let code_len = per_image[0].1.len();
    if per_image.iter().any(|(_, c)| c.len() != code_len) {
        return Err(Error::InvalidInput("ragged code lengths".into()));
    }

    let mut confusion: BTreeMap<(u8, Code), usize> = BTreeMap::new();
    let mut by_class: BTreeMap<u8, BTreeMap<Code, usize>> = BTreeMap::new();
    let mut by_code: BTreeMap<Code, BTreeMap<u8, usize>> = BTreeMap::new();
    for (label, code) in per_image {
        *confusion.entry((*label, code.clone())).or_default() += 1;
        *by_class.entry(*label).or_default().entry(code.clone()).or_default() += 1;
        *by_code.entry(code.clone()).or_default().entry(*label).or_default() += 1;
    }

    // BTreeMap iterates codes in lexicographic order, so keeping the
    // first strict maximum lands on the smallest code among ties.
    let mut representatives = BTreeMap::new();
    for (&label, codes) in &by_class {
        let mut best: Option<(&Code, usize)> = None;
        for (code, &count) in codes {
            if best.map_or(true, |(_, c)| count > c) {
                best = Some((code, count));
            }
        }
        representatives.insert(label, best.expect("class has codes").0.clone());
    }

    let mut claimed: BTreeMap<&Code, Vec<u8>> = BTreeMap::new();
    for (&label, code) in &representatives {
        claimed.entry(code).or_default().push(label);
    }
    let shared_representatives: Vec<(Code, Vec<u8>)> = claimed
        .into_iter()
        .filter(|(_, labels)| labels.len() > 1)
        .map(|(code, labels)| (code.clone(), labels))
        .collect();

    let mismatches = per_image
        .iter()
        .filter(|(label, code)| representatives[label] != *code)
        .count();
    let error_rate = mismatches as f64 / per_image.len() as f64;

    let majority_hits: usize = by_code
        .values()
        .map(|labels| labels.values().copied().max().unwrap_or(0))
        .sum();
    let purity = majority_hits as f64 / per_image.len() as f64;

    Ok(EvalReport {
        per_image: per_image.to_vec(),
        representatives,
        shared_representatives,
        confusion,
        mismatches,
        error_rate,
        purity,
    })
}

/// Network and run parameters shared by every trial.
#[derive(Clone, Debug)]
pub struct TrialSpec {
    pub layer_sizes: Vec<usize>,
    pub input_width: usize,
    pub k: usize,
    pub gamma: usize,
    pub random_extra_edges: usize,
    pub threshold: u8,
    pub base_seed: u64,
}

/// Aggregate over the trials of one subsample size.
#[derive(Clone, Debug)]
pub struct TrialRow {
    pub size: usize,
    pub trials: usize,
    pub mean_error: f64,
    pub std_dev: f64,
    pub errors: Vec<f64>,
}

/// Runs `trials` independent clustering runs for every requested
/// subsample size: fresh subsample, fresh wiring and fresh presentation
/// order per trial, all seeds derived from the spec's base seed. Rows
/// come back sorted ascending by size. `workers` > 1 fans trials out
/// across threads; results are identical regardless of worker count.
pub fn run_trials<F: Scalar>(
    images: &[GrayImage],
    sizes: &[usize],
    trials: usize,
    spec: &TrialSpec,
    workers: usize,
) -> Result<Vec<TrialRow>> {
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("no subsample sizes given".into()));
    }
    let mut sorted_sizes = sizes.to_vec();
    sorted_sizes.sort_unstable();

    let jobs: Vec<(usize, usize)> = sorted_sizes
        .iter()
        .flat_map(|&size| (0..trials).map(move |t| (size, t)))
        .collect();

    let run_job = |&(size, trial): &(usize, usize)| -> Result<f64> {
        Ok(run_single_trial::<F>(images, size, trial, spec)?.error_rate)
    };

    let errors: Vec<f64> = if workers <= 1 || jobs.len() == 1 {
        jobs.iter().map(|j| run_job(j)).collect::<Result<_>>()?
    } else {
        let chunk = jobs.len().div_ceil(workers);
        let results: Vec<Result<Vec<f64>>> = thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .chunks(chunk)
                .map(|slice| scope.spawn(move || slice.iter().map(run_job).collect::<Result<Vec<f64>>>()))
                .collect();
            handles.into_iter().map(|h| h.join().expect("trial worker")).collect()
        });
        let mut flat = Vec::with_capacity(jobs.len());
        for r in results {
            flat.extend(r?);
        }
        flat
    };

    let rows = sorted_sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            let slice = &errors[i * trials..(i + 1) * trials];
            let mean = slice.iter().sum::<f64>() / trials as f64;
            let std_dev = if trials > 1 {
                (slice.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt()
            } else {
                0.0
            };
            TrialRow {
                size,
                trials,
                mean_error: mean,
                std_dev,
                errors: slice.to_vec(),
            }
        })
        .collect();
    Ok(rows)
}

/// One fresh clustering run: subsample, binarize, wire, run, score.
pub fn run_single_trial<F: Scalar>(
    images: &[GrayImage],
    size: usize,
    trial: usize,
    spec: &TrialSpec,
) -> Result<EvalReport> {
    let sub_seed = derive_seed(spec.base_seed, &[size as u64, trial as u64, 0]);
    let topo_seed = derive_seed(spec.base_seed, &[size as u64, trial as u64, 1]);
    let order_seed = derive_seed(spec.base_seed, &[size as u64, trial as u64, 2]);
    let sample = subsample(images, size, sub_seed)?;
    let binary = binarize_all(&sample, spec.threshold);
    let topology = build_topology_with(
        &spec.layer_sizes,
        spec.input_width,
        topo_seed,
        spec.random_extra_edges,
    )?;
    let mut icn: Icn<F> = Icn::new(topology, spec.k, spec.gamma)?;
    let codes = icn.run_dataset(&binary, order_seed)?;
    compute_error(&codes)
}

/// Writes up to `limit` mismatched images as portable graymaps named
/// `label_code_index.pgm` under `out_dir`; returns the written paths.
pub fn dump_misclassified(
    report: &EvalReport,
    images: &[GrayImage],
    limit: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if report.per_image.len() != images.len() {
        return Err(Error::InvalidInput(format!(
            "report covers {} images, got {}",
            report.per_image.len(),
            images.len()
        )));
    }
    let mut written = Vec::new();
    if limit == 0 {
        return Ok(written);
    }
    fs::create_dir_all(out_dir)?;
    for (idx, ((label, code), image)) in report.per_image.iter().zip(images).enumerate() {
        if written.len() >= limit {
            break;
        }
        if report.representatives[label] == *code {
            continue;
        }
        let path = out_dir.join(format!("{}_{}_{}.pgm", label, format_bits(code), idx));
        let mut body = format!("P2\n{} {}\n255\n", image.width, image.height);
        for row in image.pixels.chunks(image.width) {
            let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            body.push_str(&line.join(" "));
            body.push('\n');
        }
        let mut file = fs::File::create(&path)?;
        file.write_all(body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
