//! Closed-form oracles written independently of the library code paths.
#![allow(dead_code)]

use retrobell_core::{Joint, Prob, Rational, Value, Variable};

pub fn outcome_vars(n: usize) -> Vec<Variable> {
    (1..=n).map(|i| Variable::outcome(format!("a{i}"))).collect()
}

/// `P(a1, a2 | α1, α2)` for label index `l` (0-based, one Bell state per label).
pub fn bell_p(l: usize, a1: i64, a2: i64, x: f64, y: f64) -> f64 {
    let c = (a1 * a2) as f64;
    match l {
        0 => 0.25 * (1.0 + c * (x - y).cos()),
        1 => 0.25 * (1.0 - c * (x - y).cos()),
        2 => 0.25 * (1.0 - c * (x + y).cos()),
        3 => 0.25 * (1.0 + c * (x + y).cos()),
        _ => panic!("no Bell state {l}"),
    }
}

pub fn bell_oracle_joint(l: usize, x: f64, y: f64) -> Joint<f64> {
    let mut e = Vec::new();
    for a1 in [1i64, -1] {
        for a2 in [1i64, -1] {
            e.push((vec![Value::Int(a1), Value::Int(a2)], bell_p(l, a1, a2, x, y)));
        }
    }
    Joint::from_probabilities(outcome_vars(2), e).unwrap()
}

/// GHZ: `1/4` when `a1 a2 a3 = (−1)^(α1+α2+α3)`, else 0.
pub fn ghz_p(a: [i64; 3], bits: [u8; 3]) -> Rational {
    let parity = if (bits[0] + bits[1] + bits[2]).is_multiple_of(2) { 1 } else { -1 };
    if a[0] * a[1] * a[2] == parity {
        Rational::ratio(1, 4)
    } else {
        Rational::ratio(0, 1)
    }
}

pub fn ghz_oracle_joint(bits: [u8; 3]) -> Joint<Rational> {
    let mut e = Vec::new();
    for a1 in [1i64, -1] {
        for a2 in [1i64, -1] {
            for a3 in [1i64, -1] {
                e.push((vec![Value::Int(a1), Value::Int(a2), Value::Int(a3)], ghz_p([a1, a2, a3], bits)));
            }
        }
    }
    Joint::from_probabilities(outcome_vars(3), e).unwrap()
}

/// PR box: `1/2` when `a1 a2 = (−1)^(α1 α2)`, else 0.
pub fn pr_p(a1: i64, a2: i64, x: u8, y: u8) -> Rational {
    let target = if x * y == 1 { -1 } else { 1 };
    if a1 * a2 == target {
        Rational::ratio(1, 2)
    } else {
        Rational::ratio(0, 1)
    }
}

pub fn pr_oracle_joint(x: u8, y: u8) -> Joint<Rational> {
    let mut e = Vec::new();
    for a1 in [1i64, -1] {
        for a2 in [1i64, -1] {
            e.push((vec![Value::Int(a1), Value::Int(a2)], pr_p(a1, a2, x, y)));
        }
    }
    Joint::from_probabilities(outcome_vars(2), e).unwrap()
}

/// Brute force over `(x1,y1,x2,y2,x3,y3) ∈ {±1}^6` against
/// `x1x2x3 = +1, x1y2y3 = y1x2y3 = y1y2x3 = −1`.
/// Returns `(all four, per constraint, exactly three)`.
pub fn ghz_exhaustion_counts() -> (usize, [usize; 4], usize) {
    let pm = [1i64, -1];
    let (mut all, mut each, mut three) = (0, [0usize; 4], 0);
    for &x1 in &pm {
        for &y1 in &pm {
            for &x2 in &pm {
                for &y2 in &pm {
                    for &x3 in &pm {
                        for &y3 in &pm {
                            let ok = [
                                x1 * x2 * x3 == 1,
                                x1 * y2 * y3 == -1,
                                y1 * x2 * y3 == -1,
                                y1 * y2 * x3 == -1,
                            ];
                            for k in 0..4 {
                                each[k] += ok[k] as usize;
                            }
                            let n = ok.iter().filter(|&&b| b).count();
                            all += (n == 4) as usize;
                            three += (n == 3) as usize;
                        }
                    }
                }
            }
        }
    }
    (all, each, three)
}

/// Max CHSH over the 16 deterministic local strategies, by direct loops.
pub fn lhv_max_by_loops() -> i64 {
    let pm = [1i64, -1];
    let mut best = i64::MIN;
    for &a in &pm {
        for &ap in &pm {
            for &b in &pm {
                for &bp in &pm {
                    best = best.max((a * b - a * bp).abs() + (ap * b + ap * bp).abs());
                }
            }
        }
    }
    best
}
