//! Seeded Monte Carlo replay of backward models.
//!
//! Each run follows the model's own generative order: outcomes first from
//! the wing marginals, then `λ` from the collider kernel. Postselection
//! keeps only runs whose `λ` equals the prepared label.
//!
//! Randomness comes from `ChaCha20Rng` seeded with a 64-bit seed; shard `i`
//! uses stream `i` of that seed, so a report depends on `(seed, shards)` and
//! never on how many threads ran the shards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::backward::BackwardModel;
use crate::chsh::{backward_model_chsh, chsh_value, ChshConfig};
use crate::error::{Error, Result};
use crate::prob::Prob;
use crate::quantum::{Outcome, SettingSpec};

pub const RNG_ALGORITHM: &str = "ChaCha20Rng";
/// Per-cell statistical gate.
pub const Z_GATE: f64 = 5.0;
/// Default acceptance cap as a multiple of the requested sample size.
pub const DEFAULT_CAP_FACTOR: u64 = 100;

/// One sampled run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub index: u64,
    pub settings: Vec<SettingSpec>,
    pub outcomes: Vec<Outcome>,
    pub label: String,
}

/// A model frozen at one settings tuple, with marginals and kernel rows
/// precomputed in `f64`.
#[derive(Debug, Clone)]
pub struct RunSampler {
    settings: Vec<SettingSpec>,
    labels: Vec<String>,
    plus: Vec<f64>,
    /// `kernel[cell][label]`, cells in canonical outcome order.
    kernel: Vec<Vec<f64>>,
    cells: Vec<Vec<Outcome>>,
}

impl RunSampler {
    pub fn new<P: Prob>(model: &BackwardModel<P>, settings: &[SettingSpec]) -> Result<Self> {
        model.validate_settings(settings)?;
        let cells = Outcome::tuples(model.n_wings());
        let kernel = cells
            .iter()
            .map(|o| {
                (0..model.lambda().len())
                    .map(|l| model.kernel().eval(o, settings, l).to_f64())
                    .collect()
            })
            .collect();
        Ok(RunSampler {
            settings: settings.to_vec(),
            labels: model.lambda().labels().to_vec(),
            plus: model.wings().iter().map(|w| w.marginal(Outcome::Plus).to_f64()).collect(),
            kernel,
            cells,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_outcomes(&self, cell: usize) -> &[Outcome] {
        &self.cells[cell]
    }

    /// Draws one run as `(outcome cell, label index)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let n = self.plus.len();
        let mut cell = 0usize;
        for (i, &p) in self.plus.iter().enumerate() {
            let u: f64 = rng.random();
            if u >= p {
                cell |= 1 << (n - 1 - i);
            }
        }
        let row = &self.kernel[cell];
        let total: f64 = row.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (l, &k) in row.iter().enumerate() {
            if k <= 0.0 {
                continue;
            }
            acc += k;
            last = Some(l);
            if u < acc {
                return (cell, l);
            }
        }
        (cell, last.expect("kernel rows carry positive mass"))
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R, index: u64) -> RunRecord {
        let (cell, label) = self.draw(rng);
        RunRecord {
            index,
            settings: self.settings.clone(),
            outcomes: self.cells[cell].clone(),
            label: self.labels[label].clone(),
        }
    }
}

/// Draws a single run; deterministic given the state of `rng`.
pub fn sample_run<P: Prob, R: Rng + ?Sized>(
    model: &BackwardModel<P>,
    settings: &[SettingSpec],
    rng: &mut R,
) -> Result<RunRecord> {
    Ok(RunSampler::new(model, settings)?.run(rng, 0))
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 step, used to derive independent seeds from one seed.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed.wrapping_add(salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    /// Accepted runs wanted (postselected) or total runs (unconditional).
    pub n: u64,
    pub seed: u64,
    /// Total draw budget; defaults to `100 × n`.
    pub cap: Option<u64>,
    pub shards: usize,
}

impl SampleOptions {
    pub fn new(n: u64, seed: u64) -> Self {
        SampleOptions {
            n,
            seed,
            cap: None,
            shards: 1,
        }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards.max(1);
        self
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = Some(cap);
        self
    }

    fn total_cap(&self) -> u64 {
        self.cap.unwrap_or(self.n.saturating_mul(DEFAULT_CAP_FACTOR))
    }
}

struct Tally {
    /// `counts[cell][label]` over kept runs.
    counts: Vec<Vec<u64>>,
    kept: u64,
    draws: u64,
}

fn run_shards(sampler: &RunSampler, opts: &SampleOptions, target: Option<usize>) -> Result<Tally> {
    let shards = opts.shards.max(1) as u64;
    let cap = opts.total_cap();
    let n_labels = sampler.labels.len();
    let results: Vec<Result<Tally>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let quota = opts.n / shards + u64::from(shard < opts.n % shards);
            let shard_cap = if opts.n == 0 {
                0
            } else {
                ((cap as u128 * quota as u128).div_ceil(opts.n as u128)) as u64
            };
            let mut rng = rng_for(opts.seed, shard);
            let mut t = Tally {
                counts: vec![vec![0; n_labels]; sampler.n_cells()],
                kept: 0,
                draws: 0,
            };
            while t.kept < quota {
                if target.is_some() && t.draws >= shard_cap {
                    return Err(Error::AcceptanceCapExceeded {
                        requested: quota,
                        accepted: t.kept,
                        draws: t.draws,
                    });
                }
                let (cell, label) = sampler.draw(&mut rng);
                t.draws += 1;
                if target.is_none_or(|l| l == label) {
                    t.counts[cell][label] += 1;
                    t.kept += 1;
                }
            }
            Ok(t)
        })
        .collect();

    let mut merged = Tally {
        counts: vec![vec![0; n_labels]; sampler.n_cells()],
        kept: 0,
        draws: 0,
    };
    let mut failure: Option<(u64, u64)> = None;
    for r in results {
        match r {
            Ok(t) => {
                for (row, add) in merged.counts.iter_mut().zip(&t.counts) {
                    for (c, a) in row.iter_mut().zip(add) {
                        *c += a;
                    }
                }
                merged.kept += t.kept;
                merged.draws += t.draws;
            }
            Err(Error::AcceptanceCapExceeded { accepted, draws, .. }) => {
                let f = failure.get_or_insert((0, 0));
                f.0 += accepted;
                f.1 += draws;
                merged.kept += accepted;
                merged.draws += draws;
            }
            Err(e) => return Err(e),
        }
    }
    if failure.is_some() {
        return Err(Error::AcceptanceCapExceeded {
            requested: opts.n,
            accepted: merged.kept,
            draws: merged.draws,
        });
    }
    Ok(merged)
}

/// `(count − n p) / √(n p (1 − p))`; degenerate cells report 0 and count
/// their impossible hits separately.
fn z_score(count: u64, n: u64, p: f64) -> (f64, u64) {
    if p <= 0.0 {
        (0.0, count)
    } else if p >= 1.0 {
        (0.0, n - count)
    } else {
        let n = n as f64;
        ((count as f64 - n * p) / (n * p * (1.0 - p)).sqrt(), 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStat {
    pub assignment: Vec<Outcome>,
    pub exact_p: f64,
    pub empirical_p: f64,
    pub count: u64,
    pub z: f64,
}

fn cell_stats(sampler: &RunSampler, counts: &[u64], exact: &[f64], n: u64) -> (Vec<CellStat>, u64) {
    let mut hits = 0;
    let cells = (0..sampler.n_cells())
        .map(|c| {
            let (z, h) = z_score(counts[c], n, exact[c]);
            hits += h;
            CellStat {
                assignment: sampler.cells[c].clone(),
                exact_p: exact[c],
                empirical_p: if n == 0 { 0.0 } else { counts[c] as f64 / n as f64 },
                count: counts[c],
                z,
            }
        })
        .collect();
    (cells, hits)
}

fn tv(cells: &[CellStat]) -> f64 {
    0.5 * cells.iter().map(|c| (c.empirical_p - c.exact_p).abs()).sum::<f64>()
}

fn max_abs_z(cells: &[CellStat]) -> f64 {
    cells.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub model: String,
    pub label: String,
    pub settings: Vec<SettingSpec>,
    pub requested: u64,
    pub accepted: u64,
    pub draws: u64,
    pub seed: u64,
    pub rng: String,
    pub shards: usize,
    pub acceptance_rate: f64,
    pub expected_acceptance_rate: f64,
    pub acceptance_z: f64,
    pub cells: Vec<CellStat>,
    pub tv_distance: f64,
    pub max_abs_z: f64,
    pub z_gate: f64,
    /// Accepted runs that landed on an exactly-zero cell.
    pub zero_probability_hits: u64,
    pub pass: bool,
}

impl SampleReport {
    /// One row per outcome cell: `assignment,exact_p,empirical_p,count,z`.
    pub fn to_csv(&self) -> Result<String> {
        cells_csv(&self.cells)
    }
}

pub fn cells_csv(cells: &[CellStat]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(["assignment", "exact_p", "empirical_p", "count", "z"]).map_err(ser)?;
    for c in cells {
        let a: Vec<String> = c.assignment.iter().map(|o| format!("{:+}", o.value())).collect();
        w.write_record([
            a.join(" "),
            format!("{:?}", c.exact_p),
            format!("{:?}", c.empirical_p),
            c.count.to_string(),
            format!("{:?}", c.z),
        ])
        .map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

/// Samples until `opts.n` runs with `λ = label` are accepted and compares
/// their outcome frequencies with the exact conditioned distribution.
pub fn sample_postselected<P: Prob>(
    model: &BackwardModel<P>,
    label: usize,
    settings: &[SettingSpec],
    opts: &SampleOptions,
) -> Result<SampleReport> {
    let label_name = model.lambda().label(label)?.to_string();
    if opts.n == 0 {
        return Err(Error::EmptySample("requested zero accepted runs".into()));
    }
    let sampler = RunSampler::new(model, settings)?;
    let tally = run_shards(&sampler, opts, Some(label))?;

    let exact_joint = model.condition_on_lambda(label, settings)?;
    let exact: Vec<f64> = sampler
        .cells
        .iter()
        .map(|o| exact_joint.prob(o).map(|p| p.to_f64()))
        .collect::<Result<_>>()?;
    let q = model.lambda_given_settings(settings)?[label].to_f64();
    let counts: Vec<u64> = tally.counts.iter().map(|row| row[label]).collect();
    let (cells, hits) = cell_stats(&sampler, &counts, &exact, tally.kept);
    let (acceptance_z, _) = z_score(tally.kept, tally.draws, q);
    let worst = max_abs_z(&cells);
    Ok(SampleReport {
        model: model.name().to_string(),
        label: label_name,
        settings: settings.to_vec(),
        requested: opts.n,
        accepted: tally.kept,
        draws: tally.draws,
        seed: opts.seed,
        rng: RNG_ALGORITHM.to_string(),
        shards: opts.shards.max(1),
        acceptance_rate: tally.kept as f64 / tally.draws as f64,
        expected_acceptance_rate: q,
        acceptance_z,
        tv_distance: tv(&cells),
        max_abs_z: worst,
        z_gate: Z_GATE,
        zero_probability_hits: hits,
        pass: worst <= Z_GATE && acceptance_z.abs() <= Z_GATE && hits == 0,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelFrequency {
    pub label: String,
    pub count: u64,
    pub rate: f64,
    pub expected: f64,
    pub z: f64,
}

/// Statistics of runs before any postselection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnconditionalReport {
    pub model: String,
    pub settings: Vec<SettingSpec>,
    pub n: u64,
    pub seed: u64,
    pub rng: String,
    pub shards: usize,
    /// Outcome frequencies against the exact outcome marginal.
    pub cells: Vec<CellStat>,
    /// Empirical `⟨a1 a2⟩`.
    pub correlation: f64,
    pub expected_correlation: f64,
    pub correlation_z: f64,
    pub lambda: Vec<LabelFrequency>,
    pub max_abs_z: f64,
    pub z_gate: f64,
    pub pass: bool,
}

pub fn sample_unconditional<P: Prob>(
    model: &BackwardModel<P>,
    settings: &[SettingSpec],
    opts: &SampleOptions,
) -> Result<UnconditionalReport> {
    if opts.n == 0 {
        return Err(Error::EmptySample("requested zero runs".into()));
    }
    let sampler = RunSampler::new(model, settings)?;
    let tally = run_shards(&sampler, opts, None)?;
    let n = tally.kept;

    let exact: Vec<f64> = sampler.cells.iter().map(|o| model.outcome_weight(o).to_f64()).collect();
    let counts: Vec<u64> = tally.counts.iter().map(|row| row.iter().sum()).collect();
    let (cells, _) = cell_stats(&sampler, &counts, &exact, n);

    let sign = |c: usize| (sampler.cells[c][0].value() * sampler.cells[c][1].value()) as f64;
    let observed: f64 = (0..cells.len()).map(|c| sign(c) * counts[c] as f64).sum::<f64>() / n as f64;
    let expected: f64 = (0..cells.len()).map(|c| sign(c) * exact[c]).sum();
    let var = 1.0 - expected * expected;
    let correlation_z = if var > 0.0 {
        (observed - expected) / (var / n as f64).sqrt()
    } else {
        0.0
    };

    let prior_given = model.lambda_given_settings(settings)?;
    let lambda: Vec<LabelFrequency> = sampler
        .labels
        .iter()
        .enumerate()
        .map(|(l, name)| {
            let count: u64 = tally.counts.iter().map(|row| row[l]).sum();
            let expected = prior_given[l].to_f64();
            LabelFrequency {
                label: name.clone(),
                count,
                rate: count as f64 / n as f64,
                expected,
                z: z_score(count, n, expected).0,
            }
        })
        .collect();

    let worst = lambda
        .iter()
        .map(|f| f.z.abs())
        .fold(max_abs_z(&cells), f64::max)
        .max(correlation_z.abs());
    Ok(UnconditionalReport {
        model: model.name().to_string(),
        settings: settings.to_vec(),
        n,
        seed: opts.seed,
        rng: RNG_ALGORITHM.to_string(),
        shards: opts.shards.max(1),
        cells,
        correlation: observed,
        expected_correlation: expected,
        correlation_z,
        lambda,
        max_abs_z: worst,
        z_gate: Z_GATE,
        pass: worst <= Z_GATE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshEstimate {
    pub value: f64,
    pub std_error: f64,
    /// `E(α1,α2), E(α1,α2′), E(α1′,α2), E(α1′,α2′)`.
    pub correlations: [f64; 4],
    pub exact: f64,
    pub z: f64,
    pub n_per_pair: u64,
    pub seed: u64,
}

/// Estimates the CHSH value from postselected samples at each of the four
/// setting pairs. Pair `j` is sampled with seed `derive_seed(seed, j)`.
pub fn empirical_chsh<P: Prob>(
    model: &BackwardModel<P>,
    label: usize,
    config: &ChshConfig<SettingSpec>,
    n_per_pair: u64,
    seed: u64,
) -> Result<ChshEstimate> {
    if n_per_pair == 0 {
        return Err(Error::EmptySample("no runs per setting pair".into()));
    }
    let mut correlations = [0.0; 4];
    let mut variance = 0.0;
    for (j, (a, b)) in config.pairs().into_iter().enumerate() {
        let opts = SampleOptions::new(n_per_pair, derive_seed(seed, j as u64));
        let r = sample_postselected(model, label, &[a, b], &opts)?;
        let e: f64 = r
            .cells
            .iter()
            .map(|c| (c.assignment[0].value() * c.assignment[1].value()) as f64 * c.count as f64)
            .sum::<f64>()
            / r.accepted as f64;
        correlations[j] = e;
        variance += (1.0 - e * e).max(0.0) / n_per_pair as f64;
    }
    let value = chsh_value(|i: usize, k: usize| correlations[2 * i + k], &ChshConfig::new(0, 1, 0, 1));
    let exact = backward_model_chsh(model, label, config)?.to_f64();
    let std_error = variance.sqrt();
    Ok(ChshEstimate {
        value,
        std_error,
        correlations,
        exact,
        z: if std_error > 0.0 { (value - exact) / std_error } else { 0.0 },
        n_per_pair,
        seed,
    })
}
