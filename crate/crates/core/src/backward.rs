//! Backward-conditional collider models.
//!
//! Outcomes are drawn from setting-independent wing marginals and `λ` is
//! drawn last, from a collider kernel `P(λ | outcomes, settings)`:
//!
//! ```text
//! P(a1, a2, λ | α1, α2) = P(a1|α1) P(a2|α2) P(λ | a1, a2, α1, α2)
//! ```
//!
//! Conditioning the assembled joint on one `λ` label recovers the target
//! correlations, while summing outcomes out leaves `P(λ | α)` equal to the
//! prior whenever the kernel is fine-tuned for it.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::dist::{Joint, Value, Variable};
use crate::error::{Error, Result};
use crate::prob::{self, Prob, Rational};
use crate::quantum::{bell_joint, bell_prob, Angle, BellState, Outcome, SettingSpec};
use crate::report::{CheckKind, CheckReport, WitnessReport, WorstCase, WorstTracker};

/// Name of the hidden-variable column in assembled joints.
pub const LAMBDA: &str = "lambda";

/// Number of evenly spaced angles per wing in default grids.
pub const DEFAULT_RESOLUTION: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SettingDomain {
    Angle,
    Binary,
}

impl SettingDomain {
    pub fn contains(self, s: &SettingSpec) -> bool {
        match (self, s) {
            (SettingDomain::Angle, SettingSpec::Angle(a)) => a.0.is_finite(),
            (SettingDomain::Binary, SettingSpec::Binary(_)) => true,
            _ => false,
        }
    }
}

/// One measurement wing: its setting domain and `P(a = +1 | α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wing<P: Prob> {
    domain: SettingDomain,
    plus: P,
}

impl<P: Prob> Wing<P> {
    pub fn new(domain: SettingDomain, p_plus: P) -> Result<Self> {
        if p_plus < P::zero() || p_plus > P::one() {
            return Err(Error::InvalidModel(format!(
                "wing marginal P(+1) = {} outside [0, 1]",
                p_plus.encode()
            )));
        }
        Ok(Wing { domain, plus: p_plus })
    }

    pub fn uniform(domain: SettingDomain) -> Self {
        Wing { domain, plus: P::half() }
    }

    pub fn domain(&self) -> SettingDomain {
        self.domain
    }

    pub fn marginal(&self, outcome: Outcome) -> P {
        match outcome {
            Outcome::Plus => self.plus.clone(),
            Outcome::Minus => P::one() - self.plus.clone(),
        }
    }
}

/// Ordered `λ` labels with a strictly positive prior.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSpace<P: Prob> {
    labels: Vec<String>,
    prior: Vec<P>,
}

impl<P: Prob> LambdaSpace<P> {
    pub fn new(labels: Vec<String>, prior: Vec<P>) -> Result<Self> {
        if labels.is_empty() || labels.len() != prior.len() {
            return Err(Error::InvalidModel("labels and prior must be non-empty and aligned".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidModel(format!("duplicate label {l}")));
            }
        }
        if prior.iter().any(|p| *p <= P::zero()) {
            return Err(Error::InvalidModel("every label needs a positive prior".into()));
        }
        let total = prob::sum(prior.iter().cloned());
        if !total.approx_eq(&P::one()) {
            return Err(Error::InvalidModel(format!("prior sums to {}", total.encode())));
        }
        Ok(LambdaSpace { labels, prior })
    }

    pub fn uniform(labels: Vec<String>) -> Result<Self> {
        let n = labels.len() as i64;
        let prior = vec![P::ratio(1, n.max(1)); labels.len()];
        Self::new(labels, prior)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn prior(&self) -> &[P] {
        &self.prior
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, index: usize) -> Result<&str> {
        self.labels
            .get(index)
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownLabel(index.to_string()))
    }

    /// Accepts a full label (`lambda1`), its suffix (`1`, `bar`, `pr`), or
    /// a zero-based `#index`.
    pub fn resolve(&self, selector: &str) -> Result<usize> {
        let selector = selector.trim();
        if let Some(i) = self.labels.iter().position(|l| l == selector) {
            return Ok(i);
        }
        let prefixed = [format!("lambda{selector}"), format!("lambda_{selector}")];
        if let Some(i) = self.labels.iter().position(|l| prefixed.contains(l)) {
            return Ok(i);
        }
        if let Some(idx) = selector.strip_prefix('#').and_then(|s| s.parse::<usize>().ok()) {
            if idx < self.labels.len() {
                return Ok(idx);
            }
        }
        Err(Error::UnknownLabel(selector.to_string()))
    }
}

/// `(wing, own setting, observed (P(a_i = +1), settings))`.
type SignalGroup<P> = (usize, SettingSpec, Vec<(P, Vec<SettingSpec>)>);

pub type KernelFn<P> = dyn Fn(&[Outcome], &[SettingSpec], usize) -> P + Send + Sync;

/// `P(λ | outcomes, settings)` together with the per-label constant `𝒩`
/// used to scale a target distribution into it.
#[derive(Clone)]
pub struct ColliderKernel<P: Prob> {
    func: Arc<KernelFn<P>>,
    normalization: Vec<P>,
}

impl<P: Prob> ColliderKernel<P> {
    pub fn new<F>(normalization: Vec<P>, func: F) -> Self
    where
        F: Fn(&[Outcome], &[SettingSpec], usize) -> P + Send + Sync + 'static,
    {
        ColliderKernel {
            func: Arc::new(func),
            normalization,
        }
    }

    pub fn eval(&self, outcomes: &[Outcome], settings: &[SettingSpec], label: usize) -> P {
        (self.func)(outcomes, settings, label)
    }

    pub fn normalization(&self) -> &[P] {
        &self.normalization
    }
}

impl<P: Prob> fmt::Debug for ColliderKernel<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ColliderKernel")
            .field("normalization", &self.normalization)
            .finish_non_exhaustive()
    }
}

/// `𝒩 = P(λ) / Π_i P(a_i | α_i)` for models whose marginals are flat.
pub fn normalization_constant<P: Prob>(prior: &P, wings: &[Wing<P>]) -> P {
    let denom = prob::product(wings.iter().map(|w| w.marginal(Outcome::Plus)));
    prior.clone() / denom
}

#[derive(Debug, Clone)]
pub struct BackwardModel<P: Prob> {
    name: String,
    wings: Vec<Wing<P>>,
    lambda: LambdaSpace<P>,
    kernel: ColliderKernel<P>,
}

impl<P: Prob> BackwardModel<P> {
    pub fn new(
        name: impl Into<String>,
        wings: Vec<Wing<P>>,
        lambda: LambdaSpace<P>,
        kernel: ColliderKernel<P>,
    ) -> Result<Self> {
        if !(2..=3).contains(&wings.len()) {
            return Err(Error::InvalidModel(format!("{} wings; expected 2 or 3", wings.len())));
        }
        if kernel.normalization.len() != lambda.len() {
            return Err(Error::InvalidModel("one normalization constant per label".into()));
        }
        Ok(BackwardModel {
            name: name.into(),
            wings,
            lambda,
            kernel,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn wings(&self) -> &[Wing<P>] {
        &self.wings
    }

    pub fn n_wings(&self) -> usize {
        self.wings.len()
    }

    pub fn lambda(&self) -> &LambdaSpace<P> {
        &self.lambda
    }

    pub fn kernel(&self) -> &ColliderKernel<P> {
        &self.kernel
    }

    pub fn outcome_names(&self) -> Vec<String> {
        (1..=self.wings.len()).map(|i| format!("a{i}")).collect()
    }

    pub fn validate_settings(&self, settings: &[SettingSpec]) -> Result<()> {
        if settings.len() != self.wings.len() {
            return Err(Error::SettingArity {
                expected: self.wings.len(),
                got: settings.len(),
            });
        }
        for (i, (w, s)) in self.wings.iter().zip(settings).enumerate() {
            if !w.domain.contains(s) {
                return Err(Error::SettingOutOfDomain {
                    wing: i + 1,
                    setting: s.to_string(),
                });
            }
        }
        Ok(())
    }

    /// `Π_i P(a_i | α_i)` for one outcome tuple.
    pub fn outcome_weight(&self, outcomes: &[Outcome]) -> P {
        prob::product(self.wings.iter().zip(outcomes).map(|(w, &o)| w.marginal(o)))
    }

    /// The full joint over outcomes and `λ` at fixed settings.
    pub fn assemble_joint(&self, settings: &[SettingSpec]) -> Result<Joint<P>> {
        self.validate_settings(settings)?;
        let mut variables: Vec<Variable> = self.outcome_names().into_iter().map(Variable::outcome).collect();
        variables.push(Variable::labels(LAMBDA, self.lambda.labels())?);
        let mut entries = Vec::with_capacity((1 << self.wings.len()) * self.lambda.len());
        for outcomes in Outcome::tuples(self.wings.len()) {
            let w = self.outcome_weight(&outcomes);
            for (l, label) in self.lambda.labels.iter().enumerate() {
                let k = self.kernel.eval(&outcomes, settings, l);
                let mut key: Vec<Value> = outcomes.iter().map(|&o| o.into()).collect();
                key.push(Value::Label(label.clone()));
                entries.push((key, w.clone() * k));
            }
        }
        Joint::from_probabilities(variables, entries)
            .map_err(|e| Error::InvalidModel(format!("{} at settings {}: {e}", self.name, fmt_settings(settings))))
    }

    /// `P(λ | settings)` per label, by summing outcomes out of the joint.
    pub fn lambda_given_settings(&self, settings: &[SettingSpec]) -> Result<Vec<P>> {
        let m = self.assemble_joint(settings)?.marginalize(&[LAMBDA])?;
        self.lambda
            .labels
            .iter()
            .map(|l| m.prob(&[Value::Label(l.clone())]))
            .collect()
    }

    /// `P(outcomes | settings, λ = label)`.
    pub fn condition_on_lambda(&self, label: usize, settings: &[SettingSpec]) -> Result<Joint<P>> {
        let name = self.lambda.label(label)?.to_string();
        self.assemble_joint(settings)?
            .condition(&[(LAMBDA, Value::Label(name))])
    }

    /// Statistical Independence: `P(λ | α) = P(λ)` at every grid point.
    pub fn verify_si(&self, grid: &[Vec<SettingSpec>]) -> Result<CheckReport> {
        let mut worst = WorstTracker::<P>::new();
        for settings in grid {
            let lam = self.lambda_given_settings(settings)?;
            for (l, (p, prior)) in lam.into_iter().zip(&self.lambda.prior).enumerate() {
                worst.observe(p - prior.clone(), || WorstCase {
                    settings: Some(settings.clone()),
                    label: Some(self.lambda.labels[l].clone()),
                    ..Default::default()
                });
            }
        }
        Ok(worst.finish(CheckKind::Si))
    }

    /// No-signalling given `λ`: each wing's `P(a_i = +1 | α, λ)` must not
    /// move when only the other wings' settings change. Grid points where
    /// `λ` has zero mass are skipped and counted.
    pub fn verify_no_signalling(&self, label: usize, grid: &[Vec<SettingSpec>]) -> Result<CheckReport> {
        let label_name = self.lambda.label(label)?.to_string();
        let names = self.outcome_names();
        let mut groups: Vec<SignalGroup<P>> = Vec::new();
        let mut skipped = 0usize;
        for settings in grid {
            let cond = match self.condition_on_lambda(label, settings) {
                Ok(c) => c,
                Err(Error::NullEvidence(_)) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            for (i, name) in names.iter().enumerate() {
                let p = cond.marginalize(&[name.as_str()])?.prob(&[Outcome::Plus])?;
                match groups.iter_mut().find(|(w, s, _)| *w == i && *s == settings[i]) {
                    Some((_, _, obs)) => obs.push((p, settings.clone())),
                    None => groups.push((i, settings[i], vec![(p, settings.clone())])),
                }
            }
        }

        let mut worst = WorstTracker::<P>::new();
        let mut range: Option<[f64; 2]> = None;
        let mut varied = false;
        for (wing, _, obs) in &groups {
            varied |= obs.len() >= 2;
            let lo = obs.iter().enumerate().fold(0, |b, (k, o)| if o.0 < obs[b].0 { k } else { b });
            let hi = obs.iter().enumerate().fold(0, |b, (k, o)| if o.0 > obs[b].0 { k } else { b });
            for (p, _) in obs {
                let v = p.to_f64();
                range = Some(match range {
                    None => [v, v],
                    Some([a, b]) => [a.min(v), b.max(v)],
                });
            }
            worst.observe(obs[hi].0.clone() - obs[lo].0.clone(), || WorstCase {
                settings: Some(obs[lo].1.clone()),
                alt_settings: Some(obs[hi].1.clone()),
                label: Some(label_name.clone()),
                wing: Some(wing + 1),
                ..Default::default()
            });
        }
        for _ in 0..skipped {
            worst.skip();
        }
        let mut report = worst.finish(CheckKind::NoSignalling);
        report.marginal_range = range;
        if !varied {
            report.pass = false;
            report.note = Some("grid never varies a remote setting; nothing was compared".into());
        }
        Ok(report)
    }

    /// Compares `Π_i P(a_i | α_i, λ)` with `P(a | α, λ)` at one point.
    pub fn lc_violation_witness(
        &self,
        label: usize,
        settings: &[SettingSpec],
        outcomes: &[Outcome],
    ) -> Result<WitnessReport> {
        if outcomes.len() != self.wings.len() {
            return Err(Error::BadAssignment(format!("{} outcomes for {} wings", outcomes.len(), self.wings.len())));
        }
        let cond = self.condition_on_lambda(label, settings)?;
        let joint = cond.prob(outcomes)?;
        let mut product = P::one();
        for (name, &o) in self.outcome_names().iter().zip(outcomes) {
            product = product * cond.marginalize(&[name.as_str()])?.prob(&[o])?;
        }
        let diff = (product.clone() - joint.clone()).abs();
        let violated = diff > P::tolerance();
        Ok(WitnessReport {
            check: CheckKind::LcWitness,
            pass: violated,
            violated,
            product: product.to_f64(),
            joint: joint.to_f64(),
            product_exact: product.encode(),
            joint_exact: joint.encode(),
            max_deviation: diff.to_f64(),
            worst_case: WorstCase {
                settings: Some(settings.to_vec()),
                outcomes: Some(outcomes.to_vec()),
                label: Some(self.lambda.labels[label].clone()),
                ..Default::default()
            },
            tolerance: P::tolerance().to_f64(),
            backend: P::BACKEND,
        })
    }

    /// Kernel rows sum to one over labels and every value lies in `[0, 1]`.
    pub fn verify_kernel_normalization(&self, grid: &[Vec<SettingSpec>]) -> Result<CheckReport> {
        let mut worst = WorstTracker::<P>::new();
        for settings in grid {
            self.validate_settings(settings)?;
            for outcomes in Outcome::tuples(self.wings.len()) {
                let mut total = P::zero();
                let mut out_of_range = P::zero();
                for l in 0..self.lambda.len() {
                    let k = self.kernel.eval(&outcomes, settings, l);
                    if k < P::zero() {
                        out_of_range = prob::max_of(out_of_range, -k.clone());
                    } else if k > P::one() {
                        out_of_range = prob::max_of(out_of_range, k.clone() - P::one());
                    }
                    total = total + k;
                }
                let dev = prob::max_of((total - P::one()).abs(), out_of_range);
                worst.observe(dev, || WorstCase {
                    settings: Some(settings.clone()),
                    outcomes: Some(outcomes.clone()),
                    ..Default::default()
                });
            }
        }
        Ok(worst.finish(CheckKind::KernelNorm))
    }

    /// Total-variation distance between each conditioned model and its
    /// target. Labels for which `target` returns `None` are not checked.
    pub fn verify_recovery<F>(&self, grid: &[Vec<SettingSpec>], target: F) -> Result<CheckReport>
    where
        F: Fn(usize, &[SettingSpec]) -> Option<Joint<P>>,
    {
        let mut worst = WorstTracker::<P>::new();
        for settings in grid {
            for l in 0..self.lambda.len() {
                let Some(expected) = target(l, settings) else { continue };
                let got = match self.condition_on_lambda(l, settings) {
                    Ok(j) => j,
                    Err(Error::NullEvidence(_)) => {
                        worst.skip();
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let tv = got.tv_distance(&expected)?;
                worst.observe(tv, || WorstCase {
                    settings: Some(settings.clone()),
                    label: Some(self.lambda.labels[l].clone()),
                    ..Default::default()
                });
            }
        }
        Ok(worst.finish(CheckKind::Recovery))
    }

    /// Either the Cartesian product of `resolution` angles per angle-wing or
    /// every binary tuple for binary wings.
    pub fn default_grid(&self, resolution: usize) -> Vec<Vec<SettingSpec>> {
        let per_wing: Vec<Vec<SettingSpec>> = self
            .wings
            .iter()
            .map(|w| match w.domain {
                SettingDomain::Angle => angle_grid(resolution).into_iter().map(SettingSpec::angle).collect(),
                SettingDomain::Binary => vec![
                    SettingSpec::Binary(crate::quantum::BinarySetting::X),
                    SettingSpec::Binary(crate::quantum::BinarySetting::Y),
                ],
            })
            .collect();
        cartesian_settings(&per_wing)
    }
}

impl BackwardModel<Rational> {
    /// The same model evaluated in `f64`.
    pub fn to_float(&self) -> BackwardModel<f64> {
        let inner = self.kernel.func.clone();
        BackwardModel {
            name: self.name.clone(),
            wings: self
                .wings
                .iter()
                .map(|w| Wing {
                    domain: w.domain,
                    plus: w.plus.to_f64(),
                })
                .collect(),
            lambda: LambdaSpace {
                labels: self.lambda.labels.clone(),
                prior: self.lambda.prior.iter().map(Prob::to_f64).collect(),
            },
            kernel: ColliderKernel {
                func: Arc::new(move |o, s, l| inner(o, s, l).to_f64()),
                normalization: self.kernel.normalization.iter().map(Prob::to_f64).collect(),
            },
        }
    }
}

/// `resolution` evenly spaced angles in `[0, 2π)`.
pub fn angle_grid(resolution: usize) -> Vec<f64> {
    (0..resolution)
        .map(|k| 2.0 * PI * k as f64 / resolution as f64)
        .collect()
}

pub fn cartesian_settings(per_wing: &[Vec<SettingSpec>]) -> Vec<Vec<SettingSpec>> {
    let mut out: Vec<Vec<SettingSpec>> = vec![Vec::new()];
    for options in per_wing {
        out = out
            .iter()
            .flat_map(|prefix| {
                options.iter().map(move |s| {
                    let mut v = prefix.clone();
                    v.push(*s);
                    v
                })
            })
            .collect();
    }
    out
}

fn fmt_settings(settings: &[SettingSpec]) -> String {
    let parts: Vec<String> = settings.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

fn bell_label(state: BellState) -> String {
    format!("lambda{}", state.index())
}

/// The two-wing model recovering the four Bell states: labels
/// `lambda1..lambda4` with uniform prior, flat marginals and
/// `P(λ_i | a, α) = 𝒩 · P_i(a | α)`.
pub fn bell_backward_model() -> BackwardModel<f64> {
    let wings = vec![Wing::uniform(SettingDomain::Angle), Wing::uniform(SettingDomain::Angle)];
    let lambda = LambdaSpace::uniform(BellState::ALL.iter().map(|&s| bell_label(s)).collect())
        .expect("four labels with prior 1/4");
    let norm: Vec<f64> = lambda
        .prior()
        .iter()
        .map(|p| normalization_constant(p, &wings))
        .collect();
    let n = norm.clone();
    let kernel = ColliderKernel::new(norm, move |o, s, l| {
        let (x, y) = (angle_of(s[0]), angle_of(s[1]));
        n[l] * bell_prob(BellState::ALL[l], o[0], o[1], x, y)
    });
    BackwardModel::new("bell", wings, lambda, kernel).expect("bell model is well formed")
}

fn angle_of(s: SettingSpec) -> Angle {
    s.as_angle().expect("settings validated against an angle domain")
}

/// `sgn` of a setting taken on its principal value, with `sgn(0) = +1`.
pub fn setting_sign(alpha: Angle) -> Outcome {
    if alpha.principal() >= 0.0 {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

/// Marginal `P(a1 = +1)` of the signalling counterexample. Any value other
/// than ½ makes `P(λ1 | α)` track `sgn(α2)`.
pub const COUNTEREXAMPLE_P_PLUS: f64 = 0.75;

/// Kernel `P(λ1 | a, α) = 1` iff `a1 = sgn(α2)`, with the complementary mass
/// on `lambda_bar`. Conditioning on `λ1` pins `a1` from the remote wing.
pub fn signalling_counterexample_model() -> BackwardModel<f64> {
    let wings = vec![
        Wing::new(SettingDomain::Angle, COUNTEREXAMPLE_P_PLUS).expect("valid marginal"),
        Wing::uniform(SettingDomain::Angle),
    ];
    let lambda = LambdaSpace::uniform(vec!["lambda1".to_string(), "lambda_bar".to_string()])
        .expect("two labels with prior 1/2");
    let kernel = ColliderKernel::new(vec![1.0, 1.0], |o, s, l| {
        let hit = o[0] == setting_sign(angle_of(s[1]));
        match (l, hit) {
            (0, true) | (1, false) => 1.0,
            _ => 0.0,
        }
    });
    BackwardModel::new("counterexample", wings, lambda, kernel).expect("counterexample is well formed")
}

/// Quantum target joints for [`bell_backward_model`] labels.
pub fn bell_target(label: usize, settings: &[SettingSpec]) -> Option<Joint<f64>> {
    let state = *BellState::ALL.get(label)?;
    Some(bell_joint(state, settings[0].as_angle()?, settings[1].as_angle()?))
}
