//! Three-wing GHZ model and the classical-assignment exhaustion.
//!
//! The collider kernel is deterministic: `λ0` is produced exactly when the
//! outcome triple is GHZ-allowed at the chosen axes, so postselecting on
//! `λ0` discards every disallowed triple.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::backward::{normalization_constant, BackwardModel, ColliderKernel, LambdaSpace, SettingDomain, Wing};
use crate::dist::Joint;
use crate::error::Result;
use crate::prob::Rational;
use crate::quantum::{ghz_joint, ghz_prob, BinarySetting, Outcome, SettingSpec};
use crate::report::CheckReport;

pub const LAMBDA_GHZ: &str = "lambda0";
pub const LAMBDA_BAR: &str = "lambda_bar";

/// `a1 a2 a3 = (−1)^(α1+α2+α3)`.
pub fn ghz_allowed(outcomes: [Outcome; 3], settings: [BinarySetting; 3]) -> bool {
    !ghz_prob(outcomes, settings).is_zero()
}

#[derive(Debug, Clone)]
pub struct GhzModel(BackwardModel<Rational>);

impl GhzModel {
    pub fn model(&self) -> &BackwardModel<Rational> {
        &self.0
    }

    pub fn into_inner(self) -> BackwardModel<Rational> {
        self.0
    }

    /// `𝒩 = P(λ0) / (P(a1|α1) P(a2|α2) P(a3|α3))`.
    pub fn normalization(&self) -> &Rational {
        &self.0.kernel().normalization()[0]
    }

    pub fn kernel_lambda0(&self, outcomes: [Outcome; 3], settings: [BinarySetting; 3]) -> Rational {
        let s: Vec<SettingSpec> = settings.iter().map(|&b| SettingSpec::Binary(b)).collect();
        self.0.kernel().eval(&outcomes, &s, 0)
    }

    /// All eight binary setting tuples.
    pub fn grid(&self) -> Vec<Vec<SettingSpec>> {
        self.0.default_grid(0)
    }
}

/// Flat marginals, prior `½/½` on `{λ0, λ̄}` and therefore `𝒩 = 4`, giving
/// `P(λ0 | a, α) = 4 · P_GHZ(a | α) ∈ {0, 1}`.
pub fn ghz_backward_model() -> GhzModel {
    let wings: Vec<Wing<Rational>> = (0..3).map(|_| Wing::uniform(SettingDomain::Binary)).collect();
    let lambda = LambdaSpace::uniform(vec![LAMBDA_GHZ.to_string(), LAMBDA_BAR.to_string()])
        .expect("two labels with prior 1/2");
    let n0 = normalization_constant(&lambda.prior()[0], &wings);
    let norm = vec![n0.clone(), Rational::one()];
    let kernel = ColliderKernel::new(norm, move |o, s, l| {
        let settings = [binary(s[0]), binary(s[1]), binary(s[2])];
        let k0 = n0.clone() * ghz_prob([o[0], o[1], o[2]], settings);
        if l == 0 {
            k0
        } else {
            Rational::one() - k0
        }
    });
    GhzModel(BackwardModel::new("ghz", wings, lambda, kernel).expect("ghz model is well formed"))
}

fn binary(s: SettingSpec) -> BinarySetting {
    s.as_binary().expect("settings validated against a binary domain")
}

fn to_array(s: &[SettingSpec]) -> Option<[BinarySetting; 3]> {
    Some([s.first()?.as_binary()?, s.get(1)?.as_binary()?, s.get(2)?.as_binary()?])
}

/// Oracle target for the GHZ model: `λ0` must reproduce the GHZ statistics.
pub fn ghz_target(label: usize, settings: &[SettingSpec]) -> Option<Joint<Rational>> {
    (label == 0).then(|| to_array(settings).map(ghz_joint)).flatten()
}

/// Exact recovery check over all eight setting combinations.
pub fn verify_ghz_recovery(model: &GhzModel) -> Result<CheckReport> {
    model.0.verify_recovery(&model.grid(), ghz_target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    X,
    Y,
}

/// One GHZ-type condition on a classical assignment, e.g. `x1 y2 y3 = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constraint {
    pub axes: [Axis; 3],
    pub target: i64,
}

impl Constraint {
    pub fn holds(&self, a: &ClassicalAssignment) -> bool {
        a.product(self.axes) == self.target
    }

    pub fn name(&self) -> String {
        let mut s = String::new();
        for (i, ax) in self.axes.iter().enumerate() {
            s.push(match ax {
                Axis::X => 'x',
                Axis::Y => 'y',
            });
            s.push_str(&(i + 1).to_string());
        }
        s.push_str(if self.target > 0 { "=+1" } else { "=-1" });
        s
    }

    /// Binary setting tuple that measures this product.
    pub fn settings(&self) -> [BinarySetting; 3] {
        self.axes.map(|a| match a {
            Axis::X => BinarySetting::X,
            Axis::Y => BinarySetting::Y,
        })
    }
}

/// The classical GHZ conditions as usually displayed:
/// `x1x2x3 = +1` and `x1y2y3 = y1x2y3 = y1y2x3 = −1`.
///
/// Note that the parity rule driving [`ghz_backward_model`] gives `+1` for
/// the three mixed products (their axis sum is 2). The exhaustion uses the
/// displayed signs; [`parity_constraints`] gives the other reading.
pub const GHZ_CONSTRAINTS: [Constraint; 4] = [
    Constraint { axes: [Axis::X, Axis::X, Axis::X], target: 1 },
    Constraint { axes: [Axis::X, Axis::Y, Axis::Y], target: -1 },
    Constraint { axes: [Axis::Y, Axis::X, Axis::Y], target: -1 },
    Constraint { axes: [Axis::Y, Axis::Y, Axis::X], target: -1 },
];

/// The same four products with targets read off the parity rule
/// `(−1)^(α1+α2+α3)`.
pub fn parity_constraints() -> [Constraint; 4] {
    GHZ_CONSTRAINTS.map(|c| {
        let ys = c.axes.iter().filter(|a| **a == Axis::Y).count();
        Constraint {
            axes: c.axes,
            target: if ys % 2 == 0 { 1 } else { -1 },
        }
    })
}

/// Pre-assigned `±1` values for both axes on all three wings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassicalAssignment {
    pub x: [i64; 3],
    pub y: [i64; 3],
}

impl ClassicalAssignment {
    /// All 64 assignments, ordered by `(x1, y1, x2, y2, x3, y3)` with `+1` first.
    pub fn all() -> Vec<ClassicalAssignment> {
        (0u32..64)
            .map(|bits| {
                let v = |k: u32| if bits >> (5 - k) & 1 == 0 { 1 } else { -1 };
                ClassicalAssignment {
                    x: [v(0), v(2), v(4)],
                    y: [v(1), v(3), v(5)],
                }
            })
            .collect()
    }

    pub fn product(&self, axes: [Axis; 3]) -> i64 {
        axes.iter()
            .enumerate()
            .map(|(i, a)| match a {
                Axis::X => self.x[i],
                Axis::Y => self.y[i],
            })
            .product()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NearMiss {
    pub assignment: ClassicalAssignment,
    pub violated: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExhaustionReport {
    pub total: usize,
    pub satisfying_all: usize,
    pub per_constraint: Vec<usize>,
    pub constraints: Vec<String>,
    /// Entry `k`: assignments satisfying every constraint except number `k`.
    pub satisfying_all_but: Vec<usize>,
    /// Assignments meeting exactly three of the four constraints.
    pub satisfying_exactly_three: usize,
    /// Product of the four right-hand sides; the left-hand sides always
    /// multiply to `+1` because each variable appears twice.
    pub rhs_product: i64,
    /// `satisfying_all` under the parity-rule signs, for comparison.
    pub parity_form_satisfying_all: usize,
    pub note: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub near_misses: Option<Vec<NearMiss>>,
}

/// Enumerates every classical assignment and counts which GHZ conditions
/// it meets.
pub fn classical_assignment_exhaustion(list_near_misses: bool) -> ExhaustionReport {
    let all = ClassicalAssignment::all();
    let sat = |a: &ClassicalAssignment| -> Vec<bool> { GHZ_CONSTRAINTS.iter().map(|c| c.holds(a)).collect() };

    let per_constraint = GHZ_CONSTRAINTS
        .iter()
        .map(|c| all.iter().filter(|a| c.holds(a)).count())
        .collect();
    let satisfying_all = all.iter().filter(|a| sat(a).iter().all(|&b| b)).count();
    let satisfying_all_but = (0..GHZ_CONSTRAINTS.len())
        .map(|k| {
            all.iter()
                .filter(|a| sat(a).iter().enumerate().all(|(i, &b)| i == k || b))
                .count()
        })
        .collect();
    let mut misses = Vec::new();
    for a in &all {
        let s = sat(a);
        if s.iter().filter(|&&b| b).count() == 3 {
            let k = s.iter().position(|&b| !b).expect("one constraint fails");
            misses.push(NearMiss {
                assignment: *a,
                violated: GHZ_CONSTRAINTS[k].name(),
            });
        }
    }
    let parity = parity_constraints();
    let parity_form_satisfying_all = all
        .iter()
        .filter(|a| parity.iter().all(|c| c.holds(a)))
        .count();

    ExhaustionReport {
        total: all.len(),
        satisfying_all,
        per_constraint,
        constraints: GHZ_CONSTRAINTS.iter().map(Constraint::name).collect(),
        satisfying_all_but,
        satisfying_exactly_three: misses.len(),
        rhs_product: GHZ_CONSTRAINTS.iter().map(|c| c.target).product(),
        parity_form_satisfying_all,
        note: "constraint signs follow the displayed GHZ conditions (mixed products = -1); \
               the parity rule a1a2a3 = (-1)^(α1+α2+α3) that drives the model gives +1 for the \
               mixed products, under which classical assignments do exist"
            .to_string(),
        near_misses: list_near_misses.then_some(misses),
    }
}

/// Exact `P(λ0 | α)` at every setting combination.
pub fn lambda0_given_settings(model: &GhzModel) -> Result<Vec<(Vec<SettingSpec>, Rational)>> {
    model
        .grid()
        .into_iter()
        .map(|s| {
            let p = model.0.lambda_given_settings(&s)?[0].clone();
            Ok((s, p))
        })
        .collect()
}
