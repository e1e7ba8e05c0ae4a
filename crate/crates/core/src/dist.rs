//! Exact finite joint distributions.
//!
//! A [`Joint`] is a table over the Cartesian product of a few discrete
//! variables. Entries are keyed by domain-index tuples, so iteration follows
//! declaration order of the variables and then domain order of each value.
//! Zero entries are simply absent.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{self, Prob};

/// A single domain value: an outcome or setting (`Int`) or a `λ` label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Label(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Label(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v:+}"),
            Value::Label(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Label(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    name: String,
    domain: Vec<Value>,
}

impl Variable {
    pub fn new(name: impl Into<String>, domain: Vec<Value>) -> Result<Self> {
        let name = name.into();
        if domain.is_empty() {
            return Err(Error::InvalidVariable {
                name,
                reason: "empty domain".into(),
            });
        }
        for (i, v) in domain.iter().enumerate() {
            if domain[..i].contains(v) {
                return Err(Error::InvalidVariable {
                    name,
                    reason: format!("duplicate value {v}"),
                });
            }
        }
        Ok(Variable { name, domain })
    }

    /// A two-valued `±1` outcome variable, `+1` first.
    pub fn outcome(name: impl Into<String>) -> Self {
        Variable {
            name: name.into(),
            domain: vec![Value::Int(1), Value::Int(-1)],
        }
    }

    pub fn labels<S: AsRef<str>>(name: impl Into<String>, labels: &[S]) -> Result<Self> {
        Self::new(
            name,
            labels.iter().map(|l| Value::Label(l.as_ref().to_string())).collect(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &[Value] {
        &self.domain
    }

    pub fn index_of(&self, value: &Value) -> Option<usize> {
        self.domain.iter().position(|v| v == value)
    }
}

/// Read-only view of one full assignment, handed to expectation integrands.
#[derive(Clone, Copy)]
pub struct Assignment<'a> {
    variables: &'a [Variable],
    indices: &'a [usize],
}

impl<'a> Assignment<'a> {
    pub fn get(&self, name: &str) -> Option<&'a Value> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(|i| &self.variables[i].domain[self.indices[i]])
    }

    /// Integer value of `name`; panics if the variable is absent or labelled,
    /// which is a programming error in the integrand.
    pub fn int(&self, name: &str) -> i64 {
        self.get(name)
            .and_then(Value::as_int)
            .unwrap_or_else(|| panic!("no integer variable `{name}` in assignment"))
    }

    pub fn values(&self) -> impl Iterator<Item = &'a Value> + 'a {
        let vars = self.variables;
        self.indices
            .iter()
            .enumerate()
            .map(move |(i, &k)| &vars[i].domain[k])
    }

    pub fn to_values(&self) -> Vec<Value> {
        self.values().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint<P: Prob> {
    variables: Vec<Variable>,
    table: BTreeMap<Vec<usize>, P>,
}

impl<P: Prob> Joint<P> {
    /// Builds a normalized joint from non-negative weights. Weights given
    /// twice for the same assignment are added.
    pub fn from_weights<I>(variables: Vec<Variable>, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<Value>, P)>,
    {
        check_distinct_names(&variables)?;
        let mut table: BTreeMap<Vec<usize>, P> = BTreeMap::new();
        for (assignment, w) in weights {
            let key = encode_assignment(&variables, &assignment)?;
            if w < P::zero() || !w.is_finite_prob() {
                return Err(Error::NegativeWeight {
                    assignment: format_values(&assignment),
                    weight: w.encode(),
                });
            }
            if w.is_zero() {
                continue;
            }
            let slot = table.entry(key).or_insert_with(P::zero);
            *slot = slot.clone() + w;
        }
        let total = prob::sum(table.values().cloned());
        if total.is_zero() {
            return Err(Error::ZeroMass);
        }
        for p in table.values_mut() {
            *p = p.clone() / total.clone();
        }
        Ok(Joint { variables, table })
    }

    /// Builds a joint from already-normalized entries, rejecting tables that
    /// do not sum to one within the backend tolerance.
    pub fn from_probabilities<I>(variables: Vec<Variable>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<Value>, P)>,
    {
        check_distinct_names(&variables)?;
        let mut table = BTreeMap::new();
        for (assignment, p) in entries {
            let key = encode_assignment(&variables, &assignment)?;
            if !prob::within_unit(&p) || !p.is_finite_prob() {
                return Err(Error::NotNormalized(format!(
                    "entry {} = {}",
                    format_values(&assignment),
                    p.encode()
                )));
            }
            if !p.is_zero() {
                table.insert(key, p);
            }
        }
        let total: P = prob::sum(table.values().cloned());
        if !total.approx_eq(&P::one()) {
            return Err(Error::NotNormalized(format!("total mass {}", total.encode())));
        }
        Ok(Joint { variables, table })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable_names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name()).collect()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Probability of a full assignment; zero when the entry is absent.
    pub fn prob<V: Into<Value> + Clone>(&self, assignment: &[V]) -> Result<P> {
        let values: Vec<Value> = assignment.iter().cloned().map(Into::into).collect();
        let key = encode_assignment(&self.variables, &values)?;
        Ok(self.table.get(&key).cloned().unwrap_or_else(P::zero))
    }

    /// Non-zero entries in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (Assignment<'_>, &P)> + '_ {
        self.table.iter().map(move |(k, p)| {
            (
                Assignment {
                    variables: &self.variables,
                    indices: k,
                },
                p,
            )
        })
    }

    /// Every cell of the Cartesian product in canonical order, zeros included.
    pub fn dense(&self) -> Vec<(Vec<Value>, P)> {
        cartesian(&self.variables)
            .into_iter()
            .map(|key| {
                let p = self.table.get(&key).cloned().unwrap_or_else(P::zero);
                (decode_key(&self.variables, &key), p)
            })
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.table.len()
    }

    pub fn total_mass(&self) -> P {
        prob::sum(self.table.values().cloned())
    }

    /// Sums out every variable not named in `keep`. The result keeps the
    /// original declaration order regardless of the order of `keep`.
    pub fn marginalize(&self, keep: &[&str]) -> Result<Joint<P>> {
        let mut positions = Vec::with_capacity(keep.len());
        for name in keep {
            positions.push(self.position(name)?);
        }
        positions.sort_unstable();
        positions.dedup();
        let variables: Vec<Variable> = positions.iter().map(|&i| self.variables[i].clone()).collect();
        let mut table: BTreeMap<Vec<usize>, P> = BTreeMap::new();
        for (key, p) in &self.table {
            let sub: Vec<usize> = positions.iter().map(|&i| key[i]).collect();
            let slot = table.entry(sub).or_insert_with(P::zero);
            *slot = slot.clone() + p.clone();
        }
        Ok(Joint { variables, table })
    }

    /// Restricts to the slice matching `evidence`, drops the evidence
    /// variables and renormalizes.
    pub fn condition(&self, evidence: &[(&str, Value)]) -> Result<Joint<P>> {
        let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(evidence.len());
        for (name, value) in evidence {
            let pos = self.position(name)?;
            let idx = self.variables[pos]
                .index_of(value)
                .ok_or_else(|| Error::BadAssignment(format!("{name}={value}")))?;
            fixed.push((pos, idx));
        }
        let remaining: Vec<usize> = (0..self.variables.len())
            .filter(|i| !fixed.iter().any(|(p, _)| p == i))
            .collect();
        let variables: Vec<Variable> = remaining.iter().map(|&i| self.variables[i].clone()).collect();

        let mut table: BTreeMap<Vec<usize>, P> = BTreeMap::new();
        for (key, p) in &self.table {
            if fixed.iter().all(|&(pos, idx)| key[pos] == idx) {
                let sub: Vec<usize> = remaining.iter().map(|&i| key[i]).collect();
                let slot = table.entry(sub).or_insert_with(P::zero);
                *slot = slot.clone() + p.clone();
            }
        }
        let mass = prob::sum(table.values().cloned());
        if mass.is_zero() {
            let shown: Vec<String> = evidence.iter().map(|(n, v)| format!("{n}={v}")).collect();
            return Err(Error::NullEvidence(shown.join(",")));
        }
        for p in table.values_mut() {
            *p = p.clone() / mass.clone();
        }
        Ok(Joint { variables, table })
    }

    /// `Σ f(x) P(x)` over the support.
    pub fn expectation<F>(&self, f: F) -> P
    where
        F: Fn(&Assignment<'_>) -> P,
    {
        self.iter()
            .fold(P::zero(), |acc, (a, p)| acc + f(&a) * p.clone())
    }

    /// Total-variation distance `½ Σ |p − q|`.
    pub fn tv_distance(&self, other: &Joint<P>) -> Result<P> {
        if self.variables != other.variables {
            return Err(Error::MismatchedSpaces);
        }
        let mut acc = P::zero();
        for (key, p) in &self.table {
            let q = other.table.get(key).cloned().unwrap_or_else(P::zero);
            acc = acc + (p.clone() - q).abs();
        }
        for (key, q) in &other.table {
            if !self.table.contains_key(key) {
                acc = acc + q.clone();
            }
        }
        Ok(acc / P::ratio(2, 1))
    }

    /// Converts every entry to another backend.
    pub fn map_backend<Q: Prob>(&self, f: impl Fn(&P) -> Q) -> Joint<Q> {
        Joint {
            variables: self.variables.clone(),
            table: self
                .table
                .iter()
                .map(|(k, p)| (k.clone(), f(p)))
                .filter(|(_, q)| !q.is_zero())
                .collect(),
        }
    }

    pub fn to_f64(&self) -> Joint<f64> {
        self.map_backend(Prob::to_f64)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let doc = JointDoc {
            variables: self.variables.clone(),
            entries: self
                .iter()
                .map(|(a, p)| EntryDoc {
                    assignment: a.to_values(),
                    p: p.encode(),
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("joint documents always serialize")
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: JointDoc =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        let mut variables = Vec::with_capacity(doc.variables.len());
        for v in doc.variables {
            variables.push(Variable::new(v.name, v.domain)?);
        }
        let mut entries = Vec::with_capacity(doc.entries.len());
        for e in doc.entries {
            entries.push((e.assignment, P::decode(&e.p)?));
        }
        Self::from_probabilities(variables, entries)
    }
}

#[derive(Serialize, Deserialize)]
struct JointDoc {
    variables: Vec<Variable>,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    assignment: Vec<Value>,
    p: String,
}

fn check_distinct_names(variables: &[Variable]) -> Result<()> {
    for (i, v) in variables.iter().enumerate() {
        if variables[..i].iter().any(|w| w.name == v.name) {
            return Err(Error::InvalidVariable {
                name: v.name.clone(),
                reason: "declared twice".into(),
            });
        }
    }
    Ok(())
}

fn encode_assignment(variables: &[Variable], values: &[Value]) -> Result<Vec<usize>> {
    if values.len() != variables.len() {
        return Err(Error::BadAssignment(format_values(values)));
    }
    variables
        .iter()
        .zip(values)
        .map(|(var, v)| {
            var.index_of(v)
                .ok_or_else(|| Error::BadAssignment(format_values(values)))
        })
        .collect()
}

fn decode_key(variables: &[Variable], key: &[usize]) -> Vec<Value> {
    variables
        .iter()
        .zip(key)
        .map(|(v, &k)| v.domain[k].clone())
        .collect()
}

fn cartesian(variables: &[Variable]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for var in variables {
        let mut next = Vec::with_capacity(out.len() * var.domain.len());
        for prefix in &out {
            for k in 0..var.domain.len() {
                let mut key = prefix.clone();
                key.push(k);
                next.push(key);
            }
        }
        out = next;
    }
    out
}

fn format_values(values: &[Value]) -> String {
    let parts: Vec<String> = values.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}
