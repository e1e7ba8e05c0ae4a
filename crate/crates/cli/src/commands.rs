use std::f64::consts::PI;

use serde_json::{json, Value};

use retrobell_core::backward::bell_target;
use retrobell_core::chsh::{pr_target, TSIRELSON_TOLERANCE};
use retrobell_core::ghz::ghz_target;
use retrobell_core::quantum::bell_expectation;
use retrobell_core::report::CheckReport;
use retrobell_core::sim::{sample_postselected, sample_unconditional, SampleOptions, Z_GATE};
use retrobell_core::{
    backward_model_chsh, bell_backward_model, chsh_value, classical_assignment_exhaustion, ghz_allowed,
    ghz_backward_model, lhv_max_chsh, pr_box_backward_model, quantum_chsh_scan, signalling_counterexample_model,
    Angle, BackwardModel, BellState, BinarySetting, ChshConfig, DeterministicStrategy, Error, Joint, Outcome, Prob,
    Rational, SettingSpec,
};

use crate::args::{BackendArg, CheckArg, ChshArgs, CurveArgs, ExhaustArgs, ModelKind, SampleArgs, VerifyArgs};
use crate::render::{chsh_bounds, csv_table, Envelope};

pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SettingArity { .. }
            | Error::SettingOutOfDomain { .. }
            | Error::UnknownLabel(_)
            | Error::BadAssignment(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

/// CSV cells use the JSON number spelling so every format agrees.
fn num(x: f64) -> String {
    json!(x).to_string()
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

/// A finished command: report plus whether everything it checked passed.
pub struct Done {
    pub envelope: Envelope,
    pub csv: Option<String>,
    pub pass: bool,
}

/// Target distributions in whichever backend the model runs on.
pub trait CliProb: Prob {
    fn from_exact(j: Joint<Rational>) -> Option<Joint<Self>>;
    fn from_float(j: Joint<f64>) -> Option<Joint<Self>>;
}

impl CliProb for f64 {
    fn from_exact(j: Joint<Rational>) -> Option<Joint<f64>> {
        Some(j.to_f64())
    }
    fn from_float(j: Joint<f64>) -> Option<Joint<f64>> {
        Some(j)
    }
}

impl CliProb for Rational {
    fn from_exact(j: Joint<Rational>) -> Option<Joint<Rational>> {
        Some(j)
    }
    fn from_float(_: Joint<f64>) -> Option<Joint<Rational>> {
        None
    }
}

fn target<P: CliProb>(kind: ModelKind, label: usize, s: &[SettingSpec]) -> Option<Joint<P>> {
    match kind {
        ModelKind::Bell => bell_target(label, s).and_then(P::from_float),
        ModelKind::Ghz => ghz_target(label, s).and_then(P::from_exact),
        ModelKind::Prbox => pr_target(label, s).and_then(P::from_exact),
        ModelKind::Counterexample => None,
    }
}

pub enum Loaded {
    Float(BackwardModel<f64>),
    Exact(BackwardModel<Rational>),
}

impl Loaded {
    fn backend(&self) -> &'static str {
        match self {
            Loaded::Float(_) => "float",
            Loaded::Exact(_) => "rational",
        }
    }
}

/// Builds the model in the requested backend. Angle models only exist in
/// floating point; exact models default to rationals.
pub fn load(kind: ModelKind, backend: Option<BackendArg>) -> Result<Loaded, Failure> {
    match (kind, backend) {
        (ModelKind::Bell | ModelKind::Counterexample, Some(BackendArg::Rational)) => usage(format!(
            "the {} model depends on cos(angle) and has no rational backend; use --backend float",
            kind.name()
        )),
        (ModelKind::Bell, _) => Ok(Loaded::Float(bell_backward_model())),
        (ModelKind::Counterexample, _) => Ok(Loaded::Float(signalling_counterexample_model())),
        (ModelKind::Ghz, b) => exact(ghz_backward_model().into_inner(), b),
        (ModelKind::Prbox, b) => exact(pr_box_backward_model(), b),
    }
}

fn exact(m: BackwardModel<Rational>, b: Option<BackendArg>) -> Result<Loaded, Failure> {
    Ok(match b {
        Some(BackendArg::Float) => Loaded::Float(m.to_float()),
        _ => Loaded::Exact(m),
    })
}

fn backend_tolerance(loaded: &Loaded) -> f64 {
    match loaded {
        Loaded::Float(_) => f64::tolerance(),
        Loaded::Exact(_) => 0.0,
    }
}

// ---- verify ---------------------------------------------------------------

pub fn verify(a: &VerifyArgs) -> Result<Done, Failure> {
    if a.resolution == 0 {
        return usage("--resolution must be at least 1");
    }
    let loaded = load(a.model, a.backend)?;
    let explicit = !a.checks.is_empty();
    let mut checks: Vec<CheckArg> = if explicit { a.checks.clone() } else { CheckArg::ALL.to_vec() };
    checks.dedup();
    let mut skipped = Vec::new();
    if a.model == ModelKind::Counterexample && checks.contains(&CheckArg::Recovery) {
        if explicit {
            return usage("the counterexample model has no target distribution; recovery does not apply");
        }
        checks.retain(|c| *c != CheckArg::Recovery);
        skipped.push("recovery");
    }
    let (rows, grid_points, labels) = match &loaded {
        Loaded::Float(m) => run_checks(m, a, &checks)?,
        Loaded::Exact(m) => run_checks(m, a, &checks)?,
    };
    let pass = rows.iter().all(|(_, _, r)| r.pass);

    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, label, r)| {
            vec![
                name.to_string(),
                label.clone().unwrap_or_default(),
                r.pass.to_string(),
                num(r.max_deviation),
                r.max_deviation_exact.clone(),
                num(r.tolerance),
                r.points_checked.to_string(),
            ]
        })
        .collect();
    let csv = csv_table(
        &["check", "label", "pass", "max_deviation", "max_deviation_exact", "tolerance", "points_checked"],
        &table,
    )
    .map_err(Failure::Runtime)?;
    let reports: Vec<Value> = rows
        .iter()
        .map(|(_, label, r)| {
            let mut v = r.to_json_value();
            v["label"] = json!(label);
            v
        })
        .collect();
    let resolution = a.model.uses_angles().then_some(a.resolution);
    Ok(Done {
        envelope: Envelope {
            command: "verify",
            config: json!({
                "model": a.model.name(),
                "checks": checks.iter().map(|c| c.name()).collect::<Vec<_>>(),
                "label": a.label,
                "resolution": resolution,
                "backend": loaded.backend(),
            }),
            backend: Some(loaded.backend()),
            seed: None,
            tolerance: json!(backend_tolerance(&loaded)),
            result: json!({
                "model": a.model.name(),
                "pass": pass,
                "grid_points": grid_points,
                "labels": labels,
                "skipped": skipped,
                "checks": reports,
            }),
        },
        csv: Some(csv),
        pass,
    })
}

type CheckRow = (&'static str, Option<String>, CheckReport);

fn run_checks<P: CliProb>(
    m: &BackwardModel<P>,
    a: &VerifyArgs,
    checks: &[CheckArg],
) -> Result<(Vec<CheckRow>, usize, Vec<String>), Failure> {
    let grid = m.default_grid(a.resolution);
    let labels: Vec<usize> = match &a.label {
        Some(sel) => vec![m.lambda().resolve(sel)?],
        None => (0..m.lambda().len()).collect(),
    };
    let names: Vec<String> = labels.iter().map(|&l| m.lambda().labels()[l].clone()).collect();
    let mut rows = Vec::new();
    for c in checks {
        match c {
            CheckArg::Si => rows.push(("si", None, m.verify_si(&grid)?)),
            CheckArg::KernelNorm => rows.push(("kernel-norm", None, m.verify_kernel_normalization(&grid)?)),
            CheckArg::Nosignal => {
                for (&l, name) in labels.iter().zip(&names) {
                    rows.push(("nosignal", Some(name.clone()), m.verify_no_signalling(l, &grid)?));
                }
            }
            CheckArg::Recovery => {
                let r = m.verify_recovery(&grid, |l, s| {
                    if labels.contains(&l) {
                        target::<P>(a.model, l, s)
                    } else {
                        None
                    }
                })?;
                rows.push(("recovery", None, r));
            }
        }
    }
    Ok((rows, grid.len(), names))
}

// ---- chsh -----------------------------------------------------------------

fn state(k: u8) -> Result<BellState, Failure> {
    BellState::from_index(k).map_err(|_| Failure::Usage(format!("--state must be 1..4, got {k}")))
}

pub fn chsh(a: &ChshArgs) -> Result<Done, Failure> {
    if a.lhv {
        return chsh_lhv(a);
    }
    match a.model {
        ModelKind::Ghz => usage("CHSH needs a two-wing model; ghz has three"),
        ModelKind::Prbox => chsh_prbox(a),
        ModelKind::Bell | ModelKind::Counterexample if a.scan => chsh_scan(a),
        ModelKind::Bell | ModelKind::Counterexample => chsh_angles(a),
    }
}

fn chsh_lhv(a: &ChshArgs) -> Result<Done, Failure> {
    if a.scan || a.angles.is_some() {
        return usage("--lhv takes no angles and no --scan");
    }
    let config = ChshConfig::new(0u8, 1, 0, 1);
    let best = lhv_max_chsh(&config);
    let all = DeterministicStrategy::all();
    let attaining = all.iter().filter(|s| s.chsh() == best).count();
    let csv = csv_table(&["strategy", "s"], &all
        .iter()
        .map(|s| {
            let r: Vec<String> = s.responses.iter().map(|o| format!("{:+}", o.value())).collect();
            vec![r.join(" "), s.chsh().to_string()]
        })
        .collect::<Vec<_>>())
    .map_err(Failure::Runtime)?;
    Ok(Done {
        envelope: Envelope {
            command: "chsh",
            config: json!({"lhv": true}),
            backend: Some("rational"),
            seed: None,
            tolerance: json!(0),
            result: json!({
                "kind": "lhv",
                "strategies": all.len(),
                "max_s": best,
                "attaining": attaining,
                "bounds": chsh_bounds(),
            }),
        },
        csv: Some(csv),
        pass: best == retrobell_core::chsh::LHV_BOUND,
    })
}

fn chsh_scan(a: &ChshArgs) -> Result<Done, Failure> {
    if a.backend == Some(BackendArg::Rational) {
        return usage("an angle scan needs cos(angle); the rational backend is not available");
    }
    if a.angles.is_some() {
        return usage("--scan chooses its own angles; drop --angles");
    }
    if a.model != ModelKind::Bell {
        return usage("--scan is only defined for the bell model");
    }
    let st = state(a.state)?;
    let r = quantum_chsh_scan(st, a.resolution).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut result = serde_json::to_value(&r).map_err(|e| Failure::Runtime(e.to_string()))?;
    result["kind"] = json!("scan");
    result["bounds"] = chsh_bounds();
    let csv = csv_table(
        &["state", "resolution", "max_s", "alpha1", "alpha1_alt", "alpha2", "alpha2_alt", "within_bound"],
        &[vec![
            a.state.to_string(),
            a.resolution.to_string(),
            num(r.max_s),
            num(r.argmax[0]),
            num(r.argmax[1]),
            num(r.argmax[2]),
            num(r.argmax[3]),
            r.within_bound.to_string(),
        ]],
    )
    .map_err(Failure::Runtime)?;
    Ok(Done {
        envelope: Envelope {
            command: "chsh",
            config: json!({"model": "bell", "state": a.state, "scan": true, "resolution": a.resolution}),
            backend: Some("float"),
            seed: None,
            tolerance: json!(TSIRELSON_TOLERANCE),
            result,
        },
        csv: Some(csv),
        pass: r.within_bound,
    })
}

fn chsh_angles(a: &ChshArgs) -> Result<Done, Failure> {
    let Loaded::Float(m) = load(a.model, a.backend)? else {
        unreachable!("angle models are float only")
    };
    let st = state(a.state)?;
    let config = match &a.angles {
        Some(v) if v.len() != 4 => return usage(format!("--angles takes four values α1,α1′,α2,α2′; got {}", v.len())),
        Some(v) => ChshConfig::angles(v[0], v[1], v[2], v[3]),
        None => ChshConfig::standard_angles(),
    };
    let angles: Vec<f64> = [config.alpha1, config.alpha1_alt, config.alpha2, config.alpha2_alt]
        .iter()
        .map(|s| s.as_angle().expect("angle").radians())
        .collect();
    if angles.iter().any(|x| !x.is_finite()) {
        return usage("angles must be finite");
    }
    let label = match &a.label {
        Some(sel) => m.lambda().resolve(sel)?,
        None if a.model == ModelKind::Bell => st.index() as usize - 1,
        None => 0,
    };
    let backward = backward_model_chsh(&m, label, &config)?;
    let mut correlations = Vec::new();
    for (x, y) in config.pairs() {
        let c = m.condition_on_lambda(label, &[x, y])?;
        correlations.push(c.expectation(|v| (v.int("a1") * v.int("a2")) as f64));
    }
    let mut result = json!({
        "kind": "angles",
        "label": m.lambda().labels()[label],
        "angles": angles,
        "correlations": correlations,
        "backward_s": backward,
        "exceeds_lhv": backward > retrobell_core::chsh::LHV_BOUND as f64 + f64::tolerance(),
        "bounds": chsh_bounds(),
    });
    let mut pass = true;
    if a.model == ModelKind::Bell {
        let q: f64 = chsh_value(
            |x: SettingSpec, y: SettingSpec| bell_expectation(st, x.as_angle().unwrap(), y.as_angle().unwrap()),
            &config,
        );
        result["state"] = json!(a.state);
        result["quantum_s"] = json!(q);
        result["deviation"] = json!((q - backward).abs());
        pass = (q - backward).abs() <= f64::tolerance();
    }
    let csv = csv_table(
        &["label", "alpha1", "alpha1_alt", "alpha2", "alpha2_alt", "backward_s"],
        &[vec![
            m.lambda().labels()[label].clone(),
            num(angles[0]),
            num(angles[1]),
            num(angles[2]),
            num(angles[3]),
            num(backward),
        ]],
    )
    .map_err(Failure::Runtime)?;
    Ok(Done {
        envelope: Envelope {
            command: "chsh",
            config: json!({"model": a.model.name(), "state": a.state, "angles": angles, "label": a.label}),
            backend: Some("float"),
            seed: None,
            tolerance: json!(f64::tolerance()),
            result,
        },
        csv: Some(csv),
        pass,
    })
}

fn chsh_prbox(a: &ChshArgs) -> Result<Done, Failure> {
    if a.angles.is_some() || a.scan {
        return usage("the prbox model takes binary settings; --angles and --scan do not apply");
    }
    let loaded = load(ModelKind::Prbox, a.backend)?;
    let config = ChshConfig::binary_axes();
    let (value, exact) = match &loaded {
        Loaded::Exact(m) => {
            let v = backward_model_chsh(m, 0, &config)?;
            (v.to_f64(), v.encode())
        }
        Loaded::Float(m) => {
            let v = backward_model_chsh(m, 0, &config)?;
            (v, v.encode())
        }
    };
    let bits: Vec<u8> = [config.alpha1, config.alpha1_alt, config.alpha2, config.alpha2_alt]
        .iter()
        .map(|s| s.as_binary().expect("binary").bit())
        .collect();
    let csv = csv_table(&["s", "s_exact"], &[vec![num(value), exact.clone()]]).map_err(Failure::Runtime)?;
    Ok(Done {
        envelope: Envelope {
            command: "chsh",
            config: json!({"model": "prbox", "backend": loaded.backend()}),
            backend: Some(loaded.backend()),
            seed: None,
            tolerance: json!(backend_tolerance(&loaded)),
            result: json!({
                "kind": "prbox",
                "settings": bits,
                "s": value,
                "s_exact": exact,
                "bounds": chsh_bounds(),
            }),
        },
        csv: Some(csv),
        pass: (value - retrobell_core::chsh::PR_BOX_VALUE as f64).abs() <= backend_tolerance(&loaded),
    })
}

// ---- ghz-exhaust ----------------------------------------------------------

pub fn ghz_exhaust(a: &ExhaustArgs) -> Result<Done, Failure> {
    let r = classical_assignment_exhaustion(a.list_near_misses);
    let rows: Vec<Vec<String>> = r
        .constraints
        .iter()
        .zip(&r.per_constraint)
        .zip(&r.satisfying_all_but)
        .map(|((c, n), b)| vec![c.clone(), n.to_string(), b.to_string()])
        .collect();
    let csv = csv_table(&["constraint", "satisfying", "satisfying_all_others_only"], &rows).map_err(Failure::Runtime)?;
    let pass = r.satisfying_all == 0;
    Ok(Done {
        envelope: Envelope {
            command: "ghz-exhaust",
            config: json!({"list_near_misses": a.list_near_misses}),
            backend: Some("rational"),
            seed: None,
            tolerance: json!(0),
            result: serde_json::to_value(&r).map_err(|e| Failure::Runtime(e.to_string()))?,
        },
        csv: Some(csv),
        pass,
    })
}

// ---- sample ---------------------------------------------------------------

fn parse_setting(kind: ModelKind, wing: usize, text: &str) -> Result<SettingSpec, Failure> {
    if kind.uses_angles() {
        match text.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(SettingSpec::angle(x)),
            _ => usage(format!("--alpha{wing} expects an angle in radians, got `{text}`")),
        }
    } else {
        match text.trim() {
            "0" => Ok(SettingSpec::Binary(BinarySetting::X)),
            "1" => Ok(SettingSpec::Binary(BinarySetting::Y)),
            _ => usage(format!("--alpha{wing} for the {} model must be 0 or 1, got `{text}`", kind.name())),
        }
    }
}

fn sample_settings(a: &SampleArgs, wings: usize) -> Result<Vec<SettingSpec>, Failure> {
    let given = [&a.alpha1, &a.alpha2, &a.alpha3];
    if let Some(k) = given.iter().skip(wings).position(|g| g.is_some()) {
        return usage(format!("the {} model has {wings} wings; --alpha{} does not apply", a.model.name(), wings + k + 1));
    }
    given[..wings]
        .iter()
        .enumerate()
        .map(|(i, g)| parse_setting(a.model, i + 1, g.as_deref().unwrap_or("0")))
        .collect()
}

pub fn sample(a: &SampleArgs) -> Result<Done, Failure> {
    if a.n == 0 {
        return usage("--n must be positive");
    }
    if a.shards == 0 {
        return usage("--shards must be positive");
    }
    let loaded = load(a.model, a.backend)?;
    match &loaded {
        Loaded::Float(m) => sample_with(m, a, loaded.backend()),
        Loaded::Exact(m) => sample_with(m, a, loaded.backend()),
    }
}

fn sample_with<P: Prob>(m: &BackwardModel<P>, a: &SampleArgs, backend: &'static str) -> Result<Done, Failure> {
    let settings = sample_settings(a, m.n_wings())?;
    let mut opts = SampleOptions::new(a.n, a.seed).with_shards(a.shards);
    if let Some(cap) = a.cap {
        opts = opts.with_cap(cap);
    }
    let label = match &a.label {
        Some(sel) => m.lambda().resolve(sel)?,
        None => 0,
    };
    let config = json!({
        "model": a.model.name(),
        "label": m.lambda().labels()[label],
        "settings": settings,
        "n": a.n,
        "seed": a.seed,
        "cap": a.cap.unwrap_or(a.n.saturating_mul(retrobell_core::sim::DEFAULT_CAP_FACTOR)),
        "shards": a.shards,
        "unconditional": a.unconditional,
        "backend": backend,
    });
    let (result, csv, pass) = if a.unconditional {
        let r = sample_unconditional(m, &settings, &opts)?;
        let csv = retrobell_core::sim::cells_csv(&r.cells)?;
        (serde_json::to_value(&r).map_err(|e| Failure::Runtime(e.to_string()))?, csv, r.pass)
    } else {
        let r = sample_postselected(m, label, &settings, &opts)?;
        let mut v = serde_json::to_value(&r).map_err(|e| Failure::Runtime(e.to_string()))?;
        let mut pass = r.pass;
        if a.model == ModelKind::Ghz && label == 0 {
            let bits: Vec<BinarySetting> = settings.iter().map(|s| s.as_binary().expect("binary")).collect();
            let disallowed: u64 = r
                .cells
                .iter()
                .filter(|c| {
                    let o: [Outcome; 3] = [c.assignment[0], c.assignment[1], c.assignment[2]];
                    !ghz_allowed(o, [bits[0], bits[1], bits[2]])
                })
                .map(|c| c.count)
                .sum();
            v["disallowed_triples"] = json!(disallowed);
            pass &= disallowed == 0;
        }
        (v, r.to_csv()?, pass)
    };
    Ok(Done {
        envelope: Envelope {
            command: "sample",
            config,
            backend: Some(backend),
            seed: Some(a.seed),
            tolerance: json!(Z_GATE),
            result,
        },
        csv: Some(csv),
        pass,
    })
}

// ---- emit-curve -----------------------------------------------------------

pub fn emit_curve(a: &CurveArgs) -> Result<Done, Failure> {
    if a.backend == Some(BackendArg::Rational) {
        return usage("the correlation curve needs cos(angle); the rational backend is not available");
    }
    if a.resolution == 0 {
        return usage("--resolution must be at least 1");
    }
    let st = state(a.state)?;
    let m = bell_backward_model();
    let label = st.index() as usize - 1;
    let mut rows = Vec::with_capacity(a.resolution + 1);
    let mut worst = 0.0f64;
    let mut points = Vec::new();
    for k in 0..=a.resolution {
        let delta = 2.0 * PI * k as f64 / a.resolution as f64;
        let q = bell_expectation(st, Angle(delta), Angle(0.0));
        let cond = m.condition_on_lambda(label, &[SettingSpec::angle(delta), SettingSpec::angle(0.0)])?;
        let b = cond.expectation(|v| (v.int("a1") * v.int("a2")) as f64);
        worst = worst.max((q - b).abs());
        rows.push(vec![num(delta), num(q), num(b)]);
        points.push(json!({"delta": delta, "quantum_E": q, "backward_E": b}));
    }
    let csv = csv_table(&["delta", "quantum_E", "backward_E"], &rows).map_err(Failure::Runtime)?;
    Ok(Done {
        envelope: Envelope {
            command: "emit-curve",
            config: json!({"state": a.state, "resolution": a.resolution, "alpha2": 0.0}),
            backend: Some("float"),
            seed: None,
            tolerance: json!(f64::tolerance()),
            result: json!({
                "state": a.state,
                "label": m.lambda().labels()[label],
                "max_abs_difference": worst,
                "points": points,
            }),
        },
        csv: Some(csv),
        pass: worst <= f64::tolerance(),
    })
}
