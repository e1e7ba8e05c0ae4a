//! Closed-form quantum predictions the backward models have to reproduce.

use std::f64::consts::PI;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::dist::{Joint, Value, Variable};
use crate::error::{Error, Result};
use crate::prob::{Prob, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i64 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            _ => Err(Error::BadAssignment(format!("outcome {v}"))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    /// All `2^n` tuples in canonical order (`+1` before `-1`, first wing slowest).
    pub fn tuples(n: usize) -> Vec<Vec<Outcome>> {
        (0..1usize << n)
            .map(|bits| {
                (0..n)
                    .map(|i| {
                        if bits >> (n - 1 - i) & 1 == 0 {
                            Outcome::Plus
                        } else {
                            Outcome::Minus
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

impl From<Outcome> for Value {
    fn from(o: Outcome) -> Self {
        Value::Int(o.value())
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i64(self.value())
    }
}

/// Coplanar measurement direction in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Angle(pub f64);

impl Angle {
    pub fn radians(self) -> f64 {
        self.0
    }

    /// Representative in `(-π, π]`.
    pub fn principal(self) -> f64 {
        let mut r = self.0.rem_euclid(2.0 * PI);
        if r > PI {
            r -= 2.0 * PI;
        }
        r
    }
}

/// GHZ / PR-box measurement axis: `X` is 0, `Y` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinarySetting {
    X,
    Y,
}

impl BinarySetting {
    pub const BOTH: [BinarySetting; 2] = [BinarySetting::X, BinarySetting::Y];

    pub fn bit(self) -> u8 {
        match self {
            BinarySetting::X => 0,
            BinarySetting::Y => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(BinarySetting::X),
            1 => Ok(BinarySetting::Y),
            _ => Err(Error::SettingOutOfDomain {
                wing: 0,
                setting: bit.to_string(),
            }),
        }
    }

    /// All `2^n` setting tuples in canonical order.
    pub fn tuples(n: usize) -> Vec<Vec<BinarySetting>> {
        (0..1usize << n)
            .map(|bits| {
                (0..n)
                    .map(|i| {
                        if bits >> (n - 1 - i) & 1 == 0 {
                            BinarySetting::X
                        } else {
                            BinarySetting::Y
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// A wing setting: a continuous angle (Bell wings) or a binary axis
/// (GHZ and PR-box wings).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum SettingSpec {
    Angle(Angle),
    Binary(BinarySetting),
}

impl SettingSpec {
    pub fn angle(radians: f64) -> Self {
        SettingSpec::Angle(Angle(radians))
    }

    pub fn binary(bit: u8) -> Result<Self> {
        BinarySetting::from_bit(bit).map(SettingSpec::Binary)
    }

    pub fn as_angle(self) -> Option<Angle> {
        match self {
            SettingSpec::Angle(a) => Some(a),
            SettingSpec::Binary(_) => None,
        }
    }

    pub fn as_binary(self) -> Option<BinarySetting> {
        match self {
            SettingSpec::Binary(b) => Some(b),
            SettingSpec::Angle(_) => None,
        }
    }
}

impl fmt::Display for SettingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingSpec::Angle(a) => write!(f, "{}", a.0),
            SettingSpec::Binary(b) => write!(f, "{}", b.bit()),
        }
    }
}

impl Serialize for SettingSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SettingSpec::Angle(a) => s.serialize_f64(a.0),
            SettingSpec::Binary(b) => s.serialize_u8(b.bit()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BellState {
    Psi1,
    Psi2,
    Psi3,
    Psi4,
}

impl BellState {
    pub const ALL: [BellState; 4] = [BellState::Psi1, BellState::Psi2, BellState::Psi3, BellState::Psi4];

    pub fn index(self) -> u8 {
        match self {
            BellState::Psi1 => 1,
            BellState::Psi2 => 2,
            BellState::Psi3 => 3,
            BellState::Psi4 => 4,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(BellState::Psi1),
            2 => Ok(BellState::Psi2),
            3 => Ok(BellState::Psi3),
            4 => Ok(BellState::Psi4),
            _ => Err(Error::UnknownLabel(format!("bell state {i}"))),
        }
    }
}

/// `¼(1 ± a1a2 cos(α1−α2))` for ψ1/ψ2 and `¼(1 ∓ a1a2 cos(α1+α2))` for ψ3/ψ4.
pub fn bell_prob(state: BellState, a1: Outcome, a2: Outcome, alpha1: Angle, alpha2: Angle) -> f64 {
    0.25 * (1.0 + (a1.value() * a2.value()) as f64 * bell_expectation(state, alpha1, alpha2))
}

/// `⟨a1 a2⟩` for a Bell state: `±cos(α1−α2)` or `∓cos(α1+α2)`.
pub fn bell_expectation(state: BellState, alpha1: Angle, alpha2: Angle) -> f64 {
    let (a, b) = (alpha1.0, alpha2.0);
    match state {
        BellState::Psi1 => (a - b).cos(),
        BellState::Psi2 => -(a - b).cos(),
        BellState::Psi3 => -(a + b).cos(),
        BellState::Psi4 => (a + b).cos(),
    }
}

fn parity_sign(bits: u32) -> i64 {
    if bits.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// GHZ statistics: `¼` when `a1a2a3 = (−1)^(α1+α2+α3)`, else 0.
pub fn ghz_prob(outcomes: [Outcome; 3], settings: [BinarySetting; 3]) -> Rational {
    let product: i64 = outcomes.iter().map(|o| o.value()).product();
    let parity: u32 = settings.iter().map(|s| s.bit() as u32).sum();
    if product == parity_sign(parity) {
        Rational::ratio(1, 4)
    } else {
        Rational::ratio(0, 1)
    }
}

/// PR box: `½` when `a1a2 = (−1)^(α1·α2)`, else 0.
pub fn pr_prob(a1: Outcome, a2: Outcome, alpha1: BinarySetting, alpha2: BinarySetting) -> Rational {
    let product = a1.value() * a2.value();
    if product == parity_sign((alpha1.bit() * alpha2.bit()) as u32) {
        Rational::ratio(1, 2)
    } else {
        Rational::ratio(0, 1)
    }
}

/// Single-wing marginal for every maximally entangled model in scope.
pub fn wing_marginal<P: Prob>(_outcome: Outcome, _setting: SettingSpec) -> P {
    P::half()
}

/// Oracle joint over `(a1, a2)` for a Bell state at fixed angles.
pub fn bell_joint(state: BellState, alpha1: Angle, alpha2: Angle) -> Joint<f64> {
    let vars = vec![Variable::outcome("a1"), Variable::outcome("a2")];
    let entries = Outcome::tuples(2).into_iter().map(|t| {
        let p = bell_prob(state, t[0], t[1], alpha1, alpha2).max(0.0);
        (t.iter().map(|&o| Value::from(o)).collect(), p)
    });
    Joint::from_probabilities(vars, entries).expect("Bell-state probabilities are normalized")
}

/// Oracle joint over `(a1, a2, a3)` for the GHZ state.
pub fn ghz_joint(settings: [BinarySetting; 3]) -> Joint<Rational> {
    let vars = vec![Variable::outcome("a1"), Variable::outcome("a2"), Variable::outcome("a3")];
    let entries = Outcome::tuples(3).into_iter().map(|t| {
        let p = ghz_prob([t[0], t[1], t[2]], settings);
        (t.iter().map(|&o| Value::from(o)).collect(), p)
    });
    Joint::from_probabilities(vars, entries).expect("GHZ probabilities are normalized")
}

/// Oracle joint over `(a1, a2)` for the PR box.
pub fn pr_joint(alpha1: BinarySetting, alpha2: BinarySetting) -> Joint<Rational> {
    let vars = vec![Variable::outcome("a1"), Variable::outcome("a2")];
    let entries = Outcome::tuples(2).into_iter().map(|t| {
        let p = pr_prob(t[0], t[1], alpha1, alpha2);
        (t.iter().map(|&o| Value::from(o)).collect(), p)
    });
    Joint::from_probabilities(vars, entries).expect("PR-box probabilities are normalized")
}
