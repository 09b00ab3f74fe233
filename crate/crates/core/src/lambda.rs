//! λ profiles, their sampled admissibility certificate, and the operator
//! `Λ = λ(T)` together with its block extension `I ⊕ Λ`.
//!
//! Everything is kept in log form: the default profile reaches
//! `exp(-e^20)` on the certification grid.

use std::ops::RangeInclusive;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cascade::{grid_to_walsh, walsh_to_grid, BlockVector, CascadeSystem, GridDensity, SystemKind};
use crate::error::{Error, Result};
use crate::hilbert::{HOperator, HVector};
use crate::scalar::{softplus, Scalar};

/// Sampled-limit tolerance for admissibility.
pub const ADMISSIBILITY_TOL: f64 = 1e-6;

/// Smallest grid a certificate must cover.
pub const MIN_GRID: RangeInclusive<i64> = -20..=20;
/// Largest grid radius `LambdaOperator::build` widens to.
pub const MAX_GRID_RADIUS: i64 = 320;

/// A decreasing function `λ: ℤ → [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LambdaProfile<S> {
    /// `λ(s) = exp(−e^{a s})`, `a > 0`.
    Gumbel { a: S },
    /// `λ(s) = 1 / (1 + e^s)`.
    Logistic,
    /// Piecewise-linear interpolation of `(s, λ(s))` pairs, constant beyond the ends.
    Custom { table: Vec<(S, S)> },
}

impl<S: Scalar> LambdaProfile<S> {
    pub fn gumbel(a: S) -> Result<Self> {
        if a > S::zero() && a.is_finite() {
            Ok(Self::Gumbel { a })
        } else {
            Err(Error::Profile(format!("gumbel parameter a = {a} must be positive")))
        }
    }

    pub fn custom(mut table: Vec<(S, S)>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Profile("custom table is empty".into()));
        }
        table.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        if table.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Profile("custom table has duplicate abscissae".into()));
        }
        Ok(Self::Custom { table })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Gumbel { a } => format!("gumbel(a={a})"),
            Self::Logistic => "logistic".into(),
            Self::Custom { table } => format!("custom({} points)", table.len()),
        }
    }

    /// `ln λ(s)`.
    pub fn log_value(&self, s: S) -> S {
        match self {
            Self::Gumbel { a } => -(*a * s).exp(),
            Self::Logistic => -softplus(s),
            Self::Custom { .. } => self.value(s).ln(),
        }
    }

    pub fn value(&self, s: S) -> S {
        match self {
            Self::Custom { table } => {
                let first = table[0];
                let last = table[table.len() - 1];
                if s <= first.0 {
                    return first.1;
                }
                if s >= last.0 {
                    return last.1;
                }
                let k = table.partition_point(|p| p.0 <= s);
                let (x0, y0) = table[k - 1];
                let (x1, y1) = table[k];
                y0 + (y1 - y0) * (s - x0) / (x1 - x0)
            }
            _ => self.log_value(s).exp(),
        }
    }
}

/// Which admissibility condition a witness refutes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Monotone,
    Limits,
    Ratio,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness<S> {
    pub condition: Condition,
    pub s: i64,
    pub t: Option<i64>,
    pub value: S,
}

/// Sampled check of the three admissibility conditions on a finite grid.
/// It certifies the grid it names and nothing beyond it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityCertificate<S> {
    pub profile: String,
    pub grid: [i64; 2],
    pub t_set: Vec<i64>,
    pub tolerance: S,
    pub monotone_ok: bool,
    pub limits_ok: bool,
    pub ratio_ok: bool,
    pub witnesses: Vec<Witness<S>>,
}

impl<S: Scalar> AdmissibilityCertificate<S> {
    pub fn admissible(&self) -> bool {
        self.monotone_ok && self.limits_ok && self.ratio_ok
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        self.grid[0] <= lo && hi <= self.grid[1]
    }
}

pub fn check_admissible<S: Scalar>(
    profile: &LambdaProfile<S>,
    grid: RangeInclusive<i64>,
    t_set: &[i64],
) -> Result<AdmissibilityCertificate<S>> {
    let (lo, hi) = (*grid.start(), *grid.end());
    if lo > *MIN_GRID.start() || hi < *MIN_GRID.end() {
        return Err(Error::Invalid(format!("grid [{lo}, {hi}] must cover [-20, 20]")));
    }
    if t_set.is_empty() || t_set.iter().any(|&t| t <= 0) {
        return Err(Error::Invalid("t_set must be a nonempty set of positive integers".into()));
    }
    let eps = S::lit(ADMISSIBILITY_TOL);
    let samples: Vec<(i64, S, S)> =
        grid.clone().map(|s| (s, profile.value(S::from_int(s)), profile.log_value(S::from_int(s)))).collect();
    if let Some((s, v, _)) = samples.iter().find(|(_, v, _)| !(*v >= S::zero() && *v <= S::one())) {
        return Err(Error::Profile(format!("λ({s}) = {v} lies outside [0, 1]")));
    }
    let mut witnesses = Vec::new();

    let mut monotone_ok = true;
    for w in samples.windows(2) {
        if w[1].2 > w[0].2 {
            monotone_ok = false;
            witnesses.push(Witness { condition: Condition::Monotone, s: w[1].0, t: None, value: w[1].1 });
        }
    }

    let first = samples[0];
    let last = samples[samples.len() - 1];
    let mut limits_ok = true;
    if first.1 < S::one() - eps {
        limits_ok = false;
        witnesses.push(Witness { condition: Condition::Limits, s: first.0, t: None, value: first.1 });
    }
    if last.1 > eps {
        limits_ok = false;
        witnesses.push(Witness { condition: Condition::Limits, s: last.0, t: None, value: last.1 });
    }

    let mut ratio_ok = true;
    for &t in t_set {
        let span = (t as usize).min(samples.len() - 1);
        let log_ratios: Vec<(i64, S)> = samples
            .iter()
            .zip(&samples[span..])
            .map(|(a, b)| (a.0, if a.2 == S::neg_infinity() { S::nan() } else { b.2 - a.2 }))
            .collect();
        for w in log_ratios.windows(2) {
            if !(w[1].1 <= w[0].1) {
                ratio_ok = false;
                witnesses.push(Witness { condition: Condition::Ratio, s: w[1].0, t: Some(t), value: w[1].1.exp() });
            }
        }
        if let Some(&(s, lr)) = log_ratios.last() {
            let ratio = lr.exp();
            if !(ratio <= eps) {
                ratio_ok = false;
                witnesses.push(Witness { condition: Condition::Ratio, s, t: Some(t), value: ratio });
            }
        }
    }

    Ok(AdmissibilityCertificate {
        profile: profile.name(),
        grid: [lo, hi],
        t_set: t_set.to_vec(),
        tolerance: eps,
        monotone_ok,
        limits_ok,
        ratio_ok,
        witnesses,
    })
}

/// `Λ = Σ_n λ(n) E_n` on a cascade window, stored as `ln λ` per basis index.
#[derive(Clone, Debug)]
pub struct LambdaOperator<S> {
    profile: LambdaProfile<S>,
    system: Arc<CascadeSystem<S>>,
    certificate: AdmissibilityCertificate<S>,
    log_age: Vec<S>,
    log_diag: Vec<S>,
}

impl<S: Scalar> LambdaOperator<S> {
    /// Certifies `profile` on a grid covering both `[-20, 20]` and the
    /// window, then builds `λ(T)`. Slowly saturating profiles only meet the
    /// sampled limits far out, so the grid is doubled (up to radius
    /// `MAX_GRID_RADIUS`) while the limits condition alone fails.
    pub fn build(profile: LambdaProfile<S>, system: Arc<CascadeSystem<S>>) -> Result<Self> {
        let w = system.window();
        let mut radius = *MIN_GRID.end();
        let mut certificate = check_admissible(&profile, w.lo().min(-radius)..=w.hi().max(radius), &[1, 2])?;
        while !certificate.limits_ok && certificate.monotone_ok && certificate.ratio_ok && radius < MAX_GRID_RADIUS {
            radius *= 2;
            certificate = check_admissible(&profile, w.lo().min(-radius)..=w.hi().max(radius), &[1, 2])?;
        }
        if !certificate.admissible() {
            let failed: Vec<&str> = [
                (!certificate.monotone_ok).then_some("monotone"),
                (!certificate.limits_ok).then_some("limits"),
                (!certificate.ratio_ok).then_some("ratio"),
            ]
            .into_iter()
            .flatten()
            .collect();
            return Err(Error::NotAdmissible(format!("{} fails {}", profile.name(), failed.join(", "))));
        }
        let log_age: Vec<S> = w.ages().map(|n| profile.log_value(S::from_int(n))).collect();
        if let Some(k) = log_age.iter().position(|&l| l == S::neg_infinity()) {
            return Err(Error::NotInjective { age: w.lo() + k as i64 });
        }
        let log_diag = system.ages().iter().map(|&n| log_age[(n - w.lo()) as usize]).collect();
        Ok(Self { profile, system, certificate, log_age, log_diag })
    }

    pub fn profile(&self) -> &LambdaProfile<S> {
        &self.profile
    }

    pub fn system(&self) -> &Arc<CascadeSystem<S>> {
        &self.system
    }

    pub fn certificate(&self) -> &AdmissibilityCertificate<S> {
        &self.certificate
    }

    /// `ln λ(n)` for an age inside the window.
    pub fn log_lambda(&self, age: i64) -> S {
        self.log_age[(age - self.system.window().lo()) as usize]
    }

    pub fn lambda(&self, age: i64) -> S {
        self.log_lambda(age).exp()
    }

    /// `ln λ(age_j)` per basis index.
    pub fn log_diag(&self) -> &[S] {
        &self.log_diag
    }

    /// Dense-diagonal `Λ`. Entries below the smallest subnormal flush to zero;
    /// use [`Self::log_diag`] where that matters.
    pub fn matrix(&self) -> HOperator<S> {
        HOperator::diagonal(self.system.basis().clone(), self.log_diag.iter().map(|l| l.exp()).collect())
    }

    pub fn apply(&self, v: &HVector<S>) -> Result<HVector<S>> {
        self.matrix().apply(v)
    }

    /// `(I ⊕ Λ)` on a block state.
    pub fn apply_block(&self, state: &BlockVector<S>) -> Result<BlockVector<S>> {
        Ok(BlockVector::new(state.equilibrium, self.apply(&state.fluctuation)?))
    }

    /// `ln(λ(lo) / λ(hi))`: the spread that becomes the unbounded inverse as
    /// the window widens.
    pub fn log_condition_number(&self) -> S {
        let w = self.system.window();
        self.log_lambda(w.lo()) - self.log_lambda(w.hi())
    }

    /// Max over interior basis vectors of `‖(U^t)† Λ U^t e_j − λ(T+t) e_j‖`,
    /// and the same for `Λ²` against `λ²(T+t)`.
    pub fn verify_covariant_transform(&self, t: i64) -> Result<CovariantCheck<S>> {
        if t < 0 {
            return Err(Error::NegativeTime(t));
        }
        let sys = &self.system;
        let ut = sys.koopman().power(t as u32)?;
        let lam = self.matrix();
        let lam_sq = lam.compose(&lam)?;
        let conj = |op: &HOperator<S>| ut.adjoint().compose(op).and_then(|x| x.compose(&ut));
        let (lhs, lhs_sq) = (conj(&lam)?, conj(&lam_sq)?);
        let mut check = CovariantCheck { lambda: S::zero(), lambda_squared: S::zero() };
        for j in sys.interior_margin(t) {
            let e = HVector::unit(sys.basis().clone(), sys.dim(), j);
            let shifted = self.lambda(sys.age(j) + t);
            let dev = lhs.apply(&e)?.sub(&e.scale(shifted))?.norm();
            let dev_sq = lhs_sq.apply(&e)?.sub(&e.scale(shifted * shifted))?.norm();
            check.lambda = check.lambda.max(dev);
            check.lambda_squared = check.lambda_squared.max(dev_sq);
        }
        Ok(check)
    }

    /// Max `|mass(𝚲ρ) − mass(ρ)|` over the samples, together with the mass
    /// carried by the transformed fluctuation part alone.
    pub fn verify_normalization(&self, samples: &[NormalizationSample<S>]) -> Result<S> {
        let sys = &*self.system;
        let mut worst = S::zero();
        for sample in samples {
            let (before, block) = match sample {
                NormalizationSample::Grid(g) => (g.mass(), grid_to_walsh(sys, g)?),
                NormalizationSample::Block(b) => (self.block_mass(b)?, b.clone()),
            };
            let out = self.apply_block(&block)?;
            let after = self.block_mass(&out)?;
            worst = worst.max((after - before).abs());
            let fluct_only = BlockVector::new(S::zero(), out.fluctuation);
            worst = worst.max(self.block_mass(&fluct_only)?.abs());
        }
        Ok(worst)
    }

    fn block_mass(&self, b: &BlockVector<S>) -> Result<S> {
        match self.system.kind() {
            SystemKind::Baker => Ok(walsh_to_grid(&self.system, b)?.mass()),
            // fluctuation modes are orthogonal to the constant, so only the equilibrium carries mass
            SystemKind::Shift => Ok(b.equilibrium),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CovariantCheck<S> {
    pub lambda: S,
    pub lambda_squared: S,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NormalizationSample<S> {
    Grid(GridDensity<S>),
    Block(BlockVector<S>),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{AgeWindow, BasisLabel};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gumbel() -> LambdaProfile<f64> {
        LambdaProfile::gumbel(1.0).unwrap()
    }

    fn shift(lo: i64, hi: i64) -> Arc<CascadeSystem<f64>> {
        Arc::new(CascadeSystem::shift(AgeWindow::new(lo, hi).unwrap()))
    }

    // independent evaluation of exp(-e^s)
    fn oracle(s: f64) -> f64 {
        (-(s.exp())).exp()
    }

    #[test]
    fn gumbel_is_admissible() {
        let c = check_admissible(&gumbel(), -20..=20, &[1, 2]).unwrap();
        assert!(c.monotone_ok && c.limits_ok && c.ratio_ok, "{c:?}");
        assert!(c.witnesses.is_empty());
        // ratio at s = -1 exceeds ratio at s = 0
        let p = gumbel();
        let r = |s: f64| (p.log_value(s + 1.0) - p.log_value(s)).exp();
        assert_abs_diff_eq!(r(-1.0), 0.531464, epsilon = 1e-6);
        assert_abs_diff_eq!(r(0.0), 0.179374, epsilon = 1e-6);
    }

    #[test]
    fn logistic_fails_ratio_with_witness() {
        let c = check_admissible(&LambdaProfile::<f64>::Logistic, -20..=20, &[1]).unwrap();
        assert!(c.monotone_ok && c.limits_ok);
        assert!(!c.ratio_ok);
        let w = c.witnesses.iter().find(|w| w.condition == Condition::Ratio).unwrap();
        assert_eq!(w.s, 19);
        assert_abs_diff_eq!(w.value, (1.0 + 19f64.exp()) / (1.0 + 20f64.exp()), epsilon = 1e-12);
        assert_abs_diff_eq!(w.value, (-1.0f64).exp(), epsilon = 1e-8);
    }

    #[test]
    fn slow_gumbel_certified_on_wider_grid() {
        let sys = Arc::new(CascadeSystem::<f64>::baker(2).unwrap());
        let lam = LambdaOperator::build(LambdaProfile::gumbel(0.5).unwrap(), sys).unwrap();
        let c = lam.certificate();
        assert!(c.admissible());
        assert_eq!(c.grid, [-40, 40]);
    }

    #[test]
    fn constant_one_fails_limits() {
        let p = LambdaProfile::custom(vec![(-20.0, 1.0), (20.0, 1.0)]).unwrap();
        let c = check_admissible(&p, -20..=20, &[1]).unwrap();
        assert!(!c.limits_ok);
    }

    #[test]
    fn out_of_range_values_are_invalid() {
        let identity = LambdaProfile::custom(vec![(-20.0, -20.0), (20.0, 20.0)]).unwrap();
        assert!(matches!(check_admissible(&identity, -20..=20, &[1]), Err(Error::Profile(_))));
        let sys = shift(-1, 1);
        assert!(matches!(LambdaOperator::build(identity, sys), Err(Error::Profile(_))));
    }

    #[test]
    fn preconditions_enforced() {
        assert!(check_admissible(&gumbel(), -5..=20, &[1]).is_err());
        assert!(check_admissible(&gumbel(), -20..=20, &[]).is_err());
        assert!(LambdaProfile::gumbel(0.0).is_err());
        assert!(LambdaProfile::gumbel(-1.0).is_err());
    }

    #[test]
    fn uncertified_profiles_are_rejected() {
        let err = LambdaOperator::build(LambdaProfile::Logistic, shift(-1, 1)).unwrap_err();
        assert!(matches!(err, Error::NotAdmissible(_)));
    }

    #[test]
    fn zero_lambda_inside_window_is_not_injective() {
        let p = LambdaProfile::custom(vec![(-20.0, 1.0), (0.0, 0.5), (1.0, 0.0), (20.0, 0.0)]).unwrap();
        let c = check_admissible(&p, -20..=20, &[1, 2]).unwrap();
        // ratios at λ = 0 are undefined, so this never certifies
        assert!(!c.ratio_ok);
    }

    #[test]
    fn shift_lambda_diagonal() {
        let lam = LambdaOperator::build(gumbel(), shift(-1, 1)).unwrap();
        let d = lam.matrix();
        let d = d.diagonal_entries().unwrap();
        assert_abs_diff_eq!(d[0], 0.692201, epsilon = 1e-6);
        assert_abs_diff_eq!(d[1], 0.367879, epsilon = 1e-6);
        assert_abs_diff_eq!(d[2], 0.065988, epsilon = 1e-6);
        for (k, s) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
            assert!((d[k] - oracle(s)).abs() <= 1e-15);
        }
    }

    #[test]
    fn baker_lambda_weights_per_age_class() {
        let sys = Arc::new(CascadeSystem::baker(1).unwrap());
        let lam = LambdaOperator::build(gumbel(), sys.clone()).unwrap();
        let d = lam.matrix();
        let d = d.diagonal_entries().unwrap();
        let j = sys.index_of(&BasisLabel::Subset(vec![-1])).unwrap();
        assert_abs_diff_eq!(d[j], 0.692201, epsilon = 1e-6);
        let age1: Vec<f64> = (0..sys.dim()).filter(|&k| sys.age(k) == 1).map(|k| d[k]).collect();
        assert_eq!(age1.len(), 4);
        for x in age1 {
            assert_abs_diff_eq!(x, 0.065988, epsilon = 1e-6);
        }
    }

    #[test]
    fn lambda_properties() {
        let sys = shift(-4, 4);
        let lam = LambdaOperator::build(gumbel(), sys.clone()).unwrap();
        let m = lam.matrix();
        assert!(m.diagonal_entries().unwrap().iter().all(|&x| x > 0.0 && x <= 1.0));
        assert_eq!(m.adjoint(), m);
        for n in sys.window().ages() {
            let e = sys.projector(n).unwrap();
            assert_eq!(m.compose(e).unwrap(), e.compose(&m).unwrap());
        }
        let eq = BlockVector::equilibrium(&sys);
        assert_eq!(lam.apply_block(&eq).unwrap(), eq);
    }

    #[test]
    fn condition_number_grows_with_window() {
        let mut prev = f64::NEG_INFINITY;
        for m in 1..=12 {
            let lam = LambdaOperator::build(gumbel(), shift(-m, m)).unwrap();
            let c = lam.log_condition_number();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn covariant_transform_exact() {
        let lam = LambdaOperator::build(gumbel(), shift(-3, 3)).unwrap();
        for t in 0..=3 {
            let c = lam.verify_covariant_transform(t).unwrap();
            assert_eq!(c.lambda, 0.0);
            assert_eq!(c.lambda_squared, 0.0);
        }
        let baker = LambdaOperator::build(gumbel(), Arc::new(CascadeSystem::baker(1).unwrap())).unwrap();
        assert_eq!(baker.verify_covariant_transform(1).unwrap().lambda, 0.0);
    }

    #[test]
    fn normalization_examples() {
        let sys = Arc::new(CascadeSystem::baker(2).unwrap());
        let lam = LambdaOperator::build(gumbel(), sys.clone()).unwrap();
        let eq = NormalizationSample::Block(BlockVector::equilibrium(&sys));
        assert_eq!(lam.verify_normalization(&[eq]).unwrap(), 0.0);
        let mut v = sys.zero_vector();
        v.coeffs_mut()[sys.index_of(&BasisLabel::Subset(vec![0])).unwrap()] = 1.0;
        let rho = NormalizationSample::Block(BlockVector::new(1.0, v));
        assert!(lam.verify_normalization(&[rho]).unwrap() <= 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<_> = (0..50)
            .map(|_| {
                let raw: Vec<f64> = (0..32).map(|_| rng.random::<f64>()).collect();
                let mean = raw.iter().sum::<f64>() / 32.0;
                NormalizationSample::Grid(GridDensity::new(2, raw.iter().map(|x| x / mean).collect()).unwrap())
            })
            .collect();
        assert!(lam.verify_normalization(&samples).unwrap() <= 1e-12);
    }

    #[test]
    fn normalization_rejects_grid_on_shift() {
        let lam = LambdaOperator::build(gumbel(), shift(-2, 2)).unwrap();
        let g = GridDensity::new(1, vec![1.0; 8]).unwrap();
        assert_eq!(lam.verify_normalization(&[NormalizationSample::Grid(g)]).unwrap_err(), Error::NotBaker);
    }

    #[test]
    fn wide_windows_stay_finite_in_log_form() {
        let lam = LambdaOperator::build(gumbel(), shift(-10, 10)).unwrap();
        assert_eq!(lam.log_lambda(10), -(10f64.exp()));
        assert!(lam.log_diag().iter().all(|l| l.is_finite()));
    }
}
