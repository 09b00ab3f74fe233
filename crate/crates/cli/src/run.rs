//! Runs validated experiments and assembles the report bundle.

use std::sync::Arc;

use lambda_core::markov::{block_step, LyapunovTrace};
use lambda_core::rigging::{alternative_b_grades, GradeBound};
use lambda_core::{
    asymmetry_probe, build_tower, build_web, check_admissible, classify, isometry_check, kothe_nuclearity,
    lyapunov_trace, norm_n, positivity_probe, verify_theorem, walsh_to_grid, BasisLabel, BlockVector,
    CascadeSystem, GridDensity, LambdaOperator, MarkovEvolution, NormTower, NormalizationSample, PositiveDiagonal,
    TowerType, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig, ExperimentKind, ExperimentSpec, ProfileDecl, SystemDecl};

/// Tolerance for the normalization experiment.
pub const MASS_TOL: f64 = 1e-12;
/// Tolerance for the isometry experiment.
pub const ISOMETRY_TOL: f64 = 1e-10;

/// Tabular output of a trace-like experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub file_stem: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub index: usize,
    pub name: String,
    pub kind: ExperimentKind,
    /// The identity or inequality the experiment exercises.
    pub identity: &'static str,
    pub gated: bool,
    pub status: Status,
    pub system: SystemDecl,
    pub profile: ProfileDecl,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub result: Value,
    #[serde(skip)]
    pub traces: Vec<Trace>,
}

impl ExperimentRecord {
    pub fn gate_failed(&self) -> bool {
        self.gated && self.status != Status::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
    pub gated_failures: usize,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportBundle {
    pub seed: u64,
    pub summary: Summary,
    pub experiments: Vec<ExperimentRecord>,
    #[serde(skip)]
    pub config: ExperimentConfig,
}

impl ReportBundle {
    pub fn exit_ok(&self) -> bool {
        self.summary.ok
    }

    pub fn record(&self, name: &str) -> Option<&ExperimentRecord> {
        self.experiments.iter().find(|r| r.name == name)
    }
}

fn identity(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Covariance => "(U^t)† T U^t = T + t",
        ExperimentKind::Imprimitivity => "U^t E(Δ) (U^t)† = E(Δ + t), (U^t)† E(Δ) U^t = E(Δ − t)",
        ExperimentKind::Admissibility => "λ nonincreasing, λ → 1 at −∞ and 0 at +∞, λ(s+t)/λ(s) nonincreasing to 0",
        ExperimentKind::Lyapunov => "‖W_t ρ‖² = ⟨ρ_t | Λ² ρ_t⟩, nonincreasing in t",
        ExperimentKind::Positivity => "min over cells of W_t ρ (probe)",
        ExperimentKind::Tower => "‖v‖_n = ‖J^{-n} v‖ nondecreasing in n",
        ExperimentKind::Classify => "Σ λ_k^p finite for p = 1, 2, n",
        ExperimentKind::Kothe => "limsup λ_{k+1}/λ_k < 1 and Σ λ_k^{2(n2−n1)} finite",
        ExperimentKind::Theorem => "V_t = X_t; V_t ≠ Ū_t; Y_t ≠ Ū_t; W_t ≠ Z_t; Z_t = ℛ Ū_t ℛ^-1",
        ExperimentKind::Normalization => "∫ 𝚲ρ = ∫ ρ",
        ExperimentKind::Isometry => "⟨Jσ | Jρ⟩_{Φ_H} = ⟨σ | ρ⟩",
        ExperimentKind::Asymmetry => "sup λ(n−t)/λ(n) grows with the window",
    }
}

struct Outcome {
    passed: bool,
    result: Value,
    traces: Vec<Trace>,
}

type Run = lambda_core::Result<Outcome>;

/// Runs every experiment. Each gets its own generator stream derived from
/// the seed and its position, so results do not depend on scheduling.
pub fn run_experiments(config: &ExperimentConfig) -> ReportBundle {
    let experiments: Vec<ExperimentRecord> = config
        .experiments
        .par_iter()
        .enumerate()
        .map(|(index, exp)| run_one(config.seed, index, exp))
        .collect();
    let count = |s: Status| experiments.iter().filter(|r| r.status == s).count();
    let gated_failures = experiments.iter().filter(|r| r.gate_failed()).count();
    ReportBundle {
        seed: config.seed,
        summary: Summary {
            total: experiments.len(),
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            errored: count(Status::Error),
            gated_failures,
            ok: gated_failures == 0,
        },
        experiments,
        config: config.clone(),
    }
}

pub fn experiment_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn run_one(seed: u64, index: usize, exp: &Experiment) -> ExperimentRecord {
    let mut rng = experiment_rng(seed, index);
    let stem = format!("{index:02}-{}", sanitize(&exp.name));
    let outcome = dispatch(exp, &stem, &mut rng);
    let (status, error, result, traces) = match outcome {
        Ok(o) => (if o.passed { Status::Pass } else { Status::Fail }, None, o.result, o.traces),
        Err(e) => (Status::Error, Some(e.to_string()), Value::Null, Vec::new()),
    };
    ExperimentRecord {
        index,
        name: exp.name.clone(),
        kind: exp.kind(),
        identity: identity(exp.kind()),
        gated: exp.gate,
        status,
        system: exp.system.clone(),
        profile: exp.profile.clone(),
        error,
        result,
        traces,
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn lambda_for(exp: &Experiment) -> lambda_core::Result<Arc<LambdaOperator>> {
    Ok(Arc::new(LambdaOperator::build(exp.profile.build()?, exp.system.build()?)?))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn dispatch(exp: &Experiment, stem: &str, rng: &mut ChaCha8Rng) -> Run {
    match &exp.spec {
        ExperimentSpec::Covariance { t } => covariance(exp, t),
        ExperimentSpec::Imprimitivity { t } => imprimitivity(exp, t),
        ExperimentSpec::Admissibility { grid, t } => admissibility(exp, *grid, t),
        ExperimentSpec::Lyapunov { max_t, samples, max_ratio } => {
            lyapunov(exp, stem, *max_t, *samples, *max_ratio, rng)
        }
        ExperimentSpec::Positivity { t, modes, profiles } => positivity(exp, stem, t, modes, profiles),
        ExperimentSpec::Tower { tower, cutoff, samples } => tower_run(exp, *tower, *cutoff, *samples, rng),
        ExperimentSpec::Classify { spectrum, expect_nuclear } => {
            let rep = classify(&spectrum.build()?);
            Ok(Outcome {
                passed: expect_nuclear.is_none_or(|e| e == rep.nuclear),
                result: json!({ "expect_nuclear": expect_nuclear, "report": to_value(&rep) }),
                traces: Vec::new(),
            })
        }
        ExperimentSpec::Kothe { spectrum, n1, n2, expect_nuclear } => {
            let rep = kothe_nuclearity(&spectrum.build()?, *n1, *n2)?;
            Ok(Outcome {
                passed: expect_nuclear.is_none_or(|e| e == rep.nuclear),
                result: json!({ "expect_nuclear": expect_nuclear, "report": to_value(&rep) }),
                traces: Vec::new(),
            })
        }
        ExperimentSpec::Theorem { t, samples } => theorem(exp, t, *samples, rng),
        ExperimentSpec::Normalization { samples } => normalization(exp, *samples, rng),
        ExperimentSpec::Isometry { samples } => {
            let j = PositiveDiagonal::from_lambda(&*lambda_for(exp)?);
            let dev = isometry_check(&j, *samples, rng)?;
            Ok(Outcome {
                passed: dev <= ISOMETRY_TOL,
                result: json!({ "samples": samples, "max_relative_deviation": dev, "tolerance": ISOMETRY_TOL }),
                traces: Vec::new(),
            })
        }
        ExperimentSpec::Asymmetry { t } => asymmetry(exp, stem, t),
    }
}

fn covariance(exp: &Experiment, ts: &[i64]) -> Run {
    let sys = exp.system.build()?;
    let rows: Vec<Value> = ts.iter().map(|&t| json!({ "t": t, "deviation": sys.verify_covariance(t) })).collect();
    let passed = ts.iter().all(|&t| sys.verify_covariance(t) == 0.0);
    Ok(Outcome { passed, result: json!({ "per_t": rows }), traces: Vec::new() })
}

fn imprimitivity(exp: &Experiment, ts: &[i64]) -> Run {
    let sys = exp.system.build()?;
    let ages: Vec<i64> = sys.window().ages().collect();
    let mut deltas: Vec<Vec<i64>> = ages.iter().map(|&a| vec![a]).collect();
    for (i, &a) in ages.iter().enumerate() {
        for &b in &ages[i + 1..] {
            deltas.push(vec![a, b]);
        }
    }
    let mut rows = Vec::new();
    let mut passed = true;
    for &t in ts {
        let (mut pull, mut push) = (0.0f64, 0.0f64);
        for d in &deltas {
            let c = sys.verify_imprimitivity(t, d)?;
            pull = pull.max(c.pullback);
            push = push.max(c.pushforward);
        }
        passed &= pull == 0.0 && push == 0.0;
        rows.push(json!({ "t": t, "sets_checked": deltas.len(), "pullback": pull, "pushforward": push }));
    }
    Ok(Outcome { passed, result: json!({ "per_t": rows }), traces: Vec::new() })
}

fn admissibility(exp: &Experiment, grid: [i64; 2], ts: &[i64]) -> Run {
    let cert = check_admissible(&exp.profile.build()?, grid[0]..=grid[1], ts)?;
    Ok(Outcome { passed: cert.admissible(), result: to_value(&cert), traces: Vec::new() })
}

/// `e_0` on the shift, `χ{0}` on the baker.
fn reference_label(sys: &SystemDecl) -> BasisLabel {
    if sys.is_baker() {
        BasisLabel::Subset(vec![0])
    } else {
        BasisLabel::Age(0)
    }
}

fn random_on(sys: &CascadeSystem, idx: &[usize], rng: &mut ChaCha8Rng) -> Vector {
    let mut v = sys.zero_vector();
    for &j in idx {
        v.coeffs_mut()[j] = rng.random_range(-1.0..1.0);
    }
    v
}

fn trace_json(tr: &LyapunovTrace<f64>) -> Value {
    json!({
        "norms": tr.norms,
        "lyapunov_form": tr.lyapunov_form,
        "monotone": tr.monotone,
        "form_agrees": tr.form_agrees,
        "max_form_gap": tr.max_form_gap,
        "ratio_to_zero": tr.ratio_to_zero,
    })
}

fn lyapunov(
    exp: &Experiment,
    stem: &str,
    max_t: i64,
    samples: usize,
    max_ratio: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> Run {
    let lam = lambda_for(exp)?;
    let sys = lam.system().clone();
    let ev = MarkovEvolution::new(lam, max_t)?;
    let idx = sys.symmetric_interior(max_t);
    let reference = sys.unit(&reference_label(&exp.system))?;
    let ref_trace = lyapunov_trace(&ev, &reference, max_t)?;

    let mut all_monotone = ref_trace.monotone;
    let mut all_agree = ref_trace.form_agrees;
    let mut worst_gap = ref_trace.max_form_gap;
    let mut worst_ratio = 0.0f64;
    let mut per_sample = Vec::with_capacity(samples);
    for _ in 0..samples {
        let rho = random_on(&sys, &idx, rng);
        let tr = lyapunov_trace(&ev, &rho, max_t)?;
        all_monotone &= tr.monotone;
        all_agree &= tr.form_agrees;
        worst_gap = worst_gap.max(tr.max_form_gap);
        worst_ratio = worst_ratio.max(tr.ratio_to_zero);
        per_sample.push(json!({ "monotone": tr.monotone, "ratio_to_zero": tr.ratio_to_zero, "max_form_gap": tr.max_form_gap }));
    }
    let ratio_ok = max_ratio.is_none_or(|r| worst_ratio <= r);

    let baker = exp.system.is_baker();
    let mut header = vec!["t", "norm", "lyapunov_form"];
    if baker {
        header.push("min_cell");
    }
    let mut rows = Vec::new();
    for (k, &t) in ref_trace.t_values.iter().enumerate() {
        let mut row = vec![t.to_string(), ref_trace.norms[k].to_string(), ref_trace.lyapunov_form[k].to_string()];
        if baker {
            let state = block_step(&ev, &BlockVector::new(1.0, reference.clone()), t)?;
            row.push(walsh_to_grid(&sys, &state)?.min().to_string());
        }
        rows.push(row);
    }
    Ok(Outcome {
        passed: all_monotone && all_agree && ratio_ok,
        result: json!({
            "max_t": max_t,
            "samples": samples,
            "reference": { "vector": reference_label(&exp.system).to_string(), "trace": trace_json(&ref_trace) },
            "all_monotone": all_monotone,
            "all_forms_agree": all_agree,
            "max_form_gap": worst_gap,
            "worst_ratio_to_zero": worst_ratio,
            "max_ratio": max_ratio,
            "per_sample": per_sample,
        }),
        traces: vec![Trace { file_stem: stem.to_string(), header, rows }],
    })
}

fn positivity(exp: &Experiment, stem: &str, ts: &[i64], modes: &[Vec<i64>], profiles: &[ProfileDecl]) -> Run {
    let sys = exp.system.build()?;
    let m = sys.baker_m().ok_or(lambda_core::Error::NotBaker)?;
    let mut fluct = sys.zero_vector();
    for s in modes {
        let j = sys
            .index_of(&BasisLabel::Subset(s.clone()))
            .ok_or_else(|| lambda_core::Error::Invalid(format!("mode {s:?} not in basis")))?;
        fluct.coeffs_mut()[j] += 1.0;
    }
    let density: GridDensity<f64> = walsh_to_grid(&sys, &BlockVector::new(1.0, fluct))?;
    let mut sweep = Vec::new();
    let mut rows = Vec::new();
    let mut passed = true;
    for p in profiles {
        let name = p.build()?.name();
        let built = p
            .build()
            .and_then(|prof| LambdaOperator::build(prof, sys.clone()))
            .and_then(|lam| MarkovEvolution::new(Arc::new(lam), 2 * m));
        let ev = match built {
            Ok(ev) => ev,
            Err(e) => {
                passed = false;
                sweep.push(json!({ "profile": name, "error": e.to_string() }));
                continue;
            }
        };
        for &t in ts {
            match positivity_probe(&ev, &density, t) {
                Ok(rep) => {
                    passed &= rep.violation == 0.0;
                    rows.push(vec![name.clone(), t.to_string(), rep.min_cell.to_string(), rep.violation.to_string()]);
                    sweep.push(json!({ "profile": name, "report": to_value(&rep) }));
                }
                Err(e) => {
                    passed = false;
                    sweep.push(json!({ "profile": name, "t": t, "error": e.to_string() }));
                }
            }
        }
    }
    Ok(Outcome {
        passed,
        result: json!({ "modes": modes, "sweep": sweep }),
        traces: vec![Trace { file_stem: stem.to_string(), header: vec!["profile", "t", "min_cell", "violation"], rows }],
    })
}

fn tower_run(exp: &Experiment, tower: TowerType, cutoff: u32, samples: usize, rng: &mut ChaCha8Rng) -> Run {
    let lam = lambda_for(exp)?;
    let j = PositiveDiagonal::from_lambda(&lam);
    let t = build_tower(j.clone(), tower, cutoff, rng)?;
    let reference = lam.system().unit(&reference_label(&exp.system))?;
    let norms: Vec<Value> = t
        .grades
        .iter()
        .map(|&g| match norm_n(&reference, g, &j) {
            Ok(n) => json!({ "grade": g.to_string(), "norm": n }),
            Err(e) => json!({ "grade": g.to_string(), "outside_domain": e.to_string() }),
        })
        .collect();
    let mut result = json!({
        "tower": tower,
        "cutoff": cutoff,
        "grades": t.grades.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        "bound": t.bound,
        "monotone_verified": t.monotone_verified,
        "reference": { "vector": reference_label(&exp.system).to_string(), "norms": norms },
    });
    let mut passed = t.monotone_verified;
    if tower == TowerType::B {
        // finite prefixes of the two grade sets, each long enough to cover the other's top
        let top = *t.grades.last().expect("nonempty");
        let mut q = 0u32;
        while q < 40 && *alternative_b_grades(q).last().expect("nonempty") < top {
            q += 1;
        }
        let covering = NormTower::with_grades(j.clone(), alternative_b_grades(q), GradeBound::SupremumNotAttained)?;
        let p = (cutoff + 1).ilog2();
        let inner = NormTower::with_grades(j, alternative_b_grades(p), GradeBound::SupremumNotAttained)?;
        let b_in_alt = t.dominated_by(&covering, samples, rng)?;
        let alt_in_b = inner.dominated_by(&t, samples, rng)?;
        passed &= b_in_alt && alt_in_b;
        result["alternative_grades"] = json!({
            "b_dominated_by_alternative": b_in_alt,
            "alternative_dominated_by_b": alt_in_b,
            "alternative_prefix": q,
        });
    }
    Ok(Outcome { passed, result, traces: Vec::new() })
}

fn theorem(exp: &Experiment, ts: &[i64], samples: usize, rng: &mut ChaCha8Rng) -> Run {
    let lam = lambda_for(exp)?;
    let mut reports = Vec::new();
    let mut passed = true;
    for &t in ts {
        let web = build_web(&lam, t)?;
        let rep = verify_theorem(&web, samples, rng)?;
        passed &= rep.all_passed();
        reports.push(to_value(&rep));
    }
    Ok(Outcome { passed, result: json!({ "per_t": reports }), traces: Vec::new() })
}

fn normalization(exp: &Experiment, samples: usize, rng: &mut ChaCha8Rng) -> Run {
    let lam = lambda_for(exp)?;
    let sys = lam.system().clone();
    let batch: Vec<NormalizationSample<f64>> = match sys.baker_m() {
        Some(m) => (0..samples)
            .map(|_| {
                let n = 1usize << (2 * m + 1);
                let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                let mean = raw.iter().sum::<f64>() / n as f64;
                GridDensity::new(m, raw.into_iter().map(|x| x / mean).collect()).map(NormalizationSample::Grid)
            })
            .collect::<lambda_core::Result<_>>()?,
        None => {
            let all: Vec<usize> = (0..sys.dim()).collect();
            (0..samples).map(|_| NormalizationSample::Block(BlockVector::new(1.0, random_on(&sys, &all, rng)))).collect()
        }
    };
    let dev = lam.verify_normalization(&batch)?;
    Ok(Outcome {
        passed: dev <= MASS_TOL,
        result: json!({ "samples": samples, "max_mass_deviation": dev, "tolerance": MASS_TOL }),
        traces: Vec::new(),
    })
}

fn asymmetry(exp: &Experiment, stem: &str, ts: &[i64]) -> Run {
    let lam = lambda_for(exp)?;
    let max_t = ts.iter().copied().max().unwrap_or(0);
    let ev = MarkovEvolution::new(lam.clone(), max_t)?;
    let sys = lam.system();
    let reference = sys.unit(&reference_label(&exp.system))?;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &t in ts {
        // the forward step needs e_0 inside the margin; fall back to the factor table alone
        let rho = if sys.in_margin(sys.index_of(&reference_label(&exp.system)).expect("reference"), t) {
            reference.clone()
        } else {
            sys.zero_vector()
        };
        let rep = asymmetry_probe(&ev, &rho, t)?;
        rows.push(vec![t.to_string(), rep.forward_log_factor.to_string(), rep.backward_log_factor.to_string()]);
        reports.push(to_value(&rep));
    }
    Ok(Outcome {
        passed: true,
        result: json!({ "per_t": reports }),
        traces: vec![Trace {
            file_stem: stem.to_string(),
            header: vec!["t", "forward_log_factor", "backward_log_factor"],
            rows,
        }],
    })
}
