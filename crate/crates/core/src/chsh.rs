//! The CHSH functional and its three reference values: 2 for local
//! hidden-variable models, 2√2 for quantum correlations, and 4 for the
//! PR box.

use std::f64::consts::PI;

use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::backward::{
    angle_grid, normalization_constant, BackwardModel, ColliderKernel, LambdaSpace, SettingDomain, Wing,
};
use crate::dist::Joint;
use crate::error::{Error, Result};
use crate::prob::{Prob, Rational};
use crate::quantum::{bell_expectation, pr_joint, pr_prob, Angle, BellState, BinarySetting, Outcome, SettingSpec};

pub const LHV_BOUND: i64 = 2;
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;
pub const PR_BOX_VALUE: i64 = 4;
/// Slack on the Tsirelson assertion for accumulated cosine rounding.
pub const TSIRELSON_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SCAN_RESOLUTION: usize = 16;

/// Two alternative settings per wing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshConfig<S> {
    pub alpha1: S,
    pub alpha1_alt: S,
    pub alpha2: S,
    pub alpha2_alt: S,
}

impl<S: Copy> ChshConfig<S> {
    pub fn new(alpha1: S, alpha1_alt: S, alpha2: S, alpha2_alt: S) -> Self {
        ChshConfig {
            alpha1,
            alpha1_alt,
            alpha2,
            alpha2_alt,
        }
    }

    /// The four `(wing 1, wing 2)` pairs in the order they enter the sum.
    pub fn pairs(&self) -> [(S, S); 4] {
        [
            (self.alpha1, self.alpha2),
            (self.alpha1, self.alpha2_alt),
            (self.alpha1_alt, self.alpha2),
            (self.alpha1_alt, self.alpha2_alt),
        ]
    }
}

impl ChshConfig<SettingSpec> {
    /// `α1 = 0, α1′ = π/2, α2 = π/4, α2′ = 3π/4`.
    pub fn standard_angles() -> Self {
        Self::angles(0.0, PI / 2.0, PI / 4.0, 3.0 * PI / 4.0)
    }

    pub fn angles(a1: f64, a1p: f64, a2: f64, a2p: f64) -> Self {
        ChshConfig::new(
            SettingSpec::angle(a1),
            SettingSpec::angle(a1p),
            SettingSpec::angle(a2),
            SettingSpec::angle(a2p),
        )
    }

    /// `α1, α1′, α2, α2′ = 1, 0, 0, 1`. The PR box anticorrelates only at
    /// `(1, 1)`, and this functional subtracts inside the first term, so the
    /// `(1, 1)` pair has to sit there for the box to reach 4.
    pub fn binary_axes() -> Self {
        let (x, y) = (SettingSpec::Binary(BinarySetting::X), SettingSpec::Binary(BinarySetting::Y));
        ChshConfig::new(y, x, x, y)
    }
}

/// `|E(α1,α2) − E(α1,α2′)| + |E(α1′,α2) + E(α1′,α2′)|`.
pub fn chsh_value<P, S, F>(correlation: F, config: &ChshConfig<S>) -> P
where
    P: Prob,
    S: Copy,
    F: Fn(S, S) -> P,
{
    let [p00, p01, p10, p11] = config.pairs().map(|(a, b)| correlation(a, b));
    (p00 - p01).abs() + (p10 + p11).abs()
}

/// A local deterministic response table: `a1(α1), a1(α1′), a2(α2), a2(α2′)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeterministicStrategy {
    pub responses: [Outcome; 4],
}

impl DeterministicStrategy {
    pub fn all() -> Vec<DeterministicStrategy> {
        Outcome::tuples(4)
            .into_iter()
            .map(|t| DeterministicStrategy {
                responses: [t[0], t[1], t[2], t[3]],
            })
            .collect()
    }

    /// Integer CHSH value of the strategy.
    pub fn chsh(&self) -> i64 {
        let [a, ap, b, bp] = self.responses.map(Outcome::value);
        (a * b - a * bp).abs() + (ap * b + ap * bp).abs()
    }

    /// A strategy is only realizable if it answers identical settings
    /// identically.
    pub fn consistent_with<S: PartialEq>(&self, config: &ChshConfig<S>) -> bool {
        let r = self.responses;
        (config.alpha1 != config.alpha1_alt || r[0] == r[1]) && (config.alpha2 != config.alpha2_alt || r[2] == r[3])
    }
}

/// Maximum CHSH value over the deterministic local strategies realizable
/// for `config` (all 16 when the alternatives differ).
pub fn lhv_max_chsh<S: PartialEq>(config: &ChshConfig<S>) -> i64 {
    DeterministicStrategy::all()
        .iter()
        .filter(|s| s.consistent_with(config))
        .map(DeterministicStrategy::chsh)
        .max()
        .expect("the constant strategy is always consistent")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub state: u8,
    #[serde(rename = "max_S")]
    pub max_s: f64,
    /// `[α1, α1′, α2, α2′]`; lexicographically smallest grid index on ties.
    pub argmax: [f64; 4],
    pub bound: f64,
    pub tolerance: f64,
    pub within_bound: bool,
    pub resolution: usize,
    pub configs_scanned: u64,
}

/// Scans every 4-tuple of `resolution` grid angles for one Bell state.
pub fn quantum_chsh_scan(state: BellState, resolution: usize) -> Result<ScanReport> {
    if resolution < 8 {
        return Err(Error::InvalidModel(format!("scan resolution {resolution} < 8")));
    }
    let grid = angle_grid(resolution);
    let n = resolution;
    let table: Vec<f64> = (0..n * n)
        .map(|k| bell_expectation(state, Angle(grid[k / n]), Angle(grid[k % n])))
        .collect();
    let e = |i: usize, j: usize| table[i * n + j];

    let (best, index) = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for ap in 0..n {
                for b in 0..n {
                    for bp in 0..n {
                        let s = (e(a, b) - e(a, bp)).abs() + (e(ap, b) + e(ap, bp)).abs();
                        if s > best.0 {
                            best = (s, ((a * n + ap) * n + b) * n + bp);
                        }
                    }
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
        );

    let digits = [index / (n * n * n), index / (n * n) % n, index / n % n, index % n];
    Ok(ScanReport {
        state: state.index(),
        max_s: best,
        argmax: digits.map(|d| grid[d]),
        bound: TSIRELSON_BOUND,
        tolerance: TSIRELSON_TOLERANCE,
        within_bound: best <= TSIRELSON_BOUND + TSIRELSON_TOLERANCE,
        resolution,
        configs_scanned: (n as u64).pow(4),
    })
}

/// CHSH value of a two-wing backward model after conditioning on `label`.
pub fn backward_model_chsh<P: Prob>(
    model: &BackwardModel<P>,
    label: usize,
    config: &ChshConfig<SettingSpec>,
) -> Result<P> {
    if model.n_wings() != 2 {
        return Err(Error::InvalidModel("CHSH needs exactly two wings".into()));
    }
    let mut values = Vec::with_capacity(4);
    for (a, b) in config.pairs() {
        let cond = model.condition_on_lambda(label, &[a, b])?;
        values.push(cond.expectation(|x| P::ratio(x.int("a1") * x.int("a2"), 1)));
    }
    // values follow `pairs()` order, so E(i, j) = values[2i + j]
    Ok(chsh_value(|i: usize, j: usize| values[2 * i + j].clone(), &ChshConfig::new(0, 1, 0, 1)))
}

/// PR-box analogue of the Bell model: binary settings, labels
/// `{lambda_pr, lambda_bar}` with prior `½/½`, `𝒩 = 2`, so
/// `P(λ_PR | a, α) = 2 · P_PR(a | α) ∈ {0, 1}`.
pub fn pr_box_backward_model() -> BackwardModel<Rational> {
    let wings: Vec<Wing<Rational>> = vec![Wing::uniform(SettingDomain::Binary), Wing::uniform(SettingDomain::Binary)];
    let lambda = LambdaSpace::uniform(vec!["lambda_pr".to_string(), "lambda_bar".to_string()])
        .expect("two labels with prior 1/2");
    let n0 = normalization_constant(&lambda.prior()[0], &wings);
    let norm = vec![n0.clone(), Rational::one()];
    let kernel = ColliderKernel::new(norm, move |o, s, l| {
        let (x, y) = (s[0].as_binary().expect("binary"), s[1].as_binary().expect("binary"));
        let k0 = n0.clone() * pr_prob(o[0], o[1], x, y);
        if l == 0 {
            k0
        } else {
            Rational::one() - k0
        }
    });
    BackwardModel::new("prbox", wings, lambda, kernel).expect("pr-box model is well formed")
}

/// Oracle target for the PR-box model: `lambda_pr` must reproduce the box.
pub fn pr_target(label: usize, settings: &[SettingSpec]) -> Option<Joint<Rational>> {
    if label != 0 {
        return None;
    }
    Some(pr_joint(settings.first()?.as_binary()?, settings.get(1)?.as_binary()?))
}
