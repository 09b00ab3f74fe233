//! Rigging norm towers generated by a positive injective diagonal operator
//! `J`, and classification of singular spectra.
//!
//! Grade `n` carries the norm `‖v‖_n = ‖J^{-n} v‖`. On a finite window every
//! vector lies in the range of `J^n`; the unbounded inverse shows up as
//! log-weights `-n ln λ_k` that eventually exceed a cap, which is reported as
//! leaving the materialized domain.

use num_rational::Rational64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{scaled_norm, BasisId, HOperator, HVector};
use crate::lambda::LambdaOperator;
use crate::scalar::Scalar;

/// Powers of `J` reported by [`classify`].
pub const MAX_REPORTED_POWER: u32 = 8;

/// Positive diagonal operator held as `ln` of its entries.
#[derive(Clone, Debug, PartialEq)]
pub struct PositiveDiagonal<S> {
    basis: BasisId,
    log: Vec<S>,
}

impl<S: Scalar> PositiveDiagonal<S> {
    pub fn from_operator(op: &HOperator<S>) -> Result<Self> {
        let d = op.diagonal_entries().ok_or_else(|| Error::NotDiagonal(op.basis().to_string()))?;
        if let Some(&bad) = d.iter().find(|&&x| !(x > S::zero())) {
            return Err(Error::Domain { eigenvalue: bad.as_f64() });
        }
        Ok(Self { basis: op.basis().clone(), log: d.iter().map(|x| x.ln()).collect() })
    }

    pub fn from_lambda(lam: &LambdaOperator<S>) -> Self {
        Self { basis: lam.system().basis().clone(), log: lam.log_diag().to_vec() }
    }

    pub fn from_log(basis: BasisId, log: Vec<S>) -> Result<Self> {
        if log.iter().any(|l| !l.is_finite()) {
            return Err(Error::Invalid("log-diagonal entries must be finite".into()));
        }
        Ok(Self { basis, log })
    }

    pub fn identity(basis: BasisId, dim: usize) -> Self {
        Self { basis, log: vec![S::zero(); dim] }
    }

    pub fn basis(&self) -> &BasisId {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.log.len()
    }

    pub fn log_entries(&self) -> &[S] {
        &self.log
    }

    /// Largest entry is at most one, which is what makes grades monotone.
    pub fn is_contraction(&self) -> bool {
        self.log.iter().all(|&l| l <= S::zero())
    }

    /// `J^p v` for real `p`, coefficient-wise in log form.
    pub fn apply_power(&self, v: &HVector<S>, p: S) -> Result<HVector<S>> {
        self.check(v)?;
        let coeffs = v
            .coeffs()
            .iter()
            .zip(&self.log)
            .map(|(&c, &l)| scale_log(c, p * l))
            .collect();
        Ok(HVector::new(self.basis.clone(), coeffs))
    }

    fn check(&self, v: &HVector<S>) -> Result<()> {
        if v.basis() != &self.basis {
            return Err(Error::Basis { left: self.basis.to_string(), right: v.basis().to_string() });
        }
        if v.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: v.dim() });
        }
        Ok(())
    }
}

/// `c · exp(log_factor)` evaluated without forming the factor on its own.
fn scale_log<S: Scalar>(c: S, log_factor: S) -> S {
    if c.is_zero() {
        return S::zero();
    }
    let f = log_factor.exp();
    if f.is_normal() {
        return c * f;
    }
    let mag = (c.abs().ln() + log_factor).exp();
    if c < S::zero() {
        -mag
    } else {
        mag
    }
}

/// `‖J^{-n} v‖_ℒ`; grade 0 is the plain norm.
pub fn norm_n<S: Scalar>(v: &HVector<S>, n: Rational64, j: &PositiveDiagonal<S>) -> Result<S> {
    norm_n_with_cap(v, n, j, S::log_cap())
}

pub fn norm_n_with_cap<S: Scalar>(
    v: &HVector<S>,
    n: Rational64,
    j: &PositiveDiagonal<S>,
    cap: S,
) -> Result<S> {
    j.check(v)?;
    if n < Rational64::from_integer(0) {
        return Err(Error::Grades(format!("grade {n} is negative")));
    }
    if n == Rational64::from_integer(0) {
        return Ok(v.norm());
    }
    let g = S::from_ratio(n);
    let mut scaled = Vec::with_capacity(v.dim());
    for (k, (&c, &l)) in v.coeffs().iter().zip(&j.log).enumerate() {
        if c.is_zero() {
            scaled.push(S::zero());
            continue;
        }
        let w = -g * l;
        if w > cap {
            return Err(Error::OutsideDomain {
                log_weight: w.as_f64(),
                cap: cap.as_f64(),
                context: format!("grade {n}, coordinate {k}"),
            });
        }
        scaled.push(scale_log(c, w));
    }
    Ok(scaled_norm(&scaled))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TowerType {
    /// A single top grade.
    A,
    /// Grades `p/(p+1)`, supremum 1 not attained.
    B,
    /// Grades `0, 1, 2, …`, unbounded.
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeBound {
    Maximum,
    SupremumNotAttained,
    Unbounded,
}

/// Grades `p/(p+1)` for `p = 0..=cutoff`.
pub fn b_grades(cutoff: u32) -> Vec<Rational64> {
    (0..=cutoff as i64).map(|p| Rational64::new(p, p + 1)).collect()
}

/// Another grade set with supremum 1: `1 − 2^{-p}` for `p = 0..=cutoff`.
pub fn alternative_b_grades(cutoff: u32) -> Vec<Rational64> {
    (0..=cutoff.min(40)).map(|p| Rational64::new((1i64 << p) - 1, 1i64 << p)).collect()
}

/// A materialized prefix of a graded family of norms.
#[derive(Clone, Debug)]
pub struct NormTower<S> {
    pub tower_type: TowerType,
    pub grades: Vec<Rational64>,
    pub j: PositiveDiagonal<S>,
    pub cutoff: u32,
    pub bound: GradeBound,
    /// Whether sampled norms were nondecreasing along the grades.
    pub monotone_verified: bool,
}

const MONOTONE_SAMPLES: usize = 32;

pub fn build_tower<S: Scalar, R: Rng>(
    j: PositiveDiagonal<S>,
    tower_type: TowerType,
    cutoff: u32,
    rng: &mut R,
) -> Result<NormTower<S>> {
    if cutoff < 1 {
        return Err(Error::Grades("cutoff must be at least 1".into()));
    }
    let (grades, bound) = match tower_type {
        TowerType::A => (vec![Rational64::from_integer(1)], GradeBound::Maximum),
        TowerType::B => (b_grades(cutoff), GradeBound::SupremumNotAttained),
        TowerType::C => {
            ((0..=cutoff as i64).map(Rational64::from_integer).collect(), GradeBound::Unbounded)
        }
    };
    let mut tower =
        NormTower { tower_type, grades, j, cutoff, bound, monotone_verified: false };
    tower.monotone_verified = tower.sampled_monotone(MONOTONE_SAMPLES, rng)?;
    Ok(tower)
}

fn random_vector<S: Scalar, R: Rng>(basis: &BasisId, dim: usize, rng: &mut R) -> HVector<S> {
    HVector::new(basis.clone(), (0..dim).map(|_| S::lit(rng.random_range(-1.0..1.0))).collect())
}

impl<S: Scalar> NormTower<S> {
    /// Tower over an arbitrary ascending grade list.
    pub fn with_grades(j: PositiveDiagonal<S>, mut grades: Vec<Rational64>, bound: GradeBound) -> Result<Self> {
        grades.sort();
        grades.dedup();
        if grades.first().is_some_and(|g| *g < Rational64::from_integer(0)) || grades.is_empty() {
            return Err(Error::Grades("grades must be nonempty and nonnegative".into()));
        }
        let cutoff = grades.len() as u32 - 1;
        Ok(Self { tower_type: TowerType::B, grades, j, cutoff, bound, monotone_verified: false })
    }

    pub fn norms(&self, v: &HVector<S>) -> Result<Vec<S>> {
        self.grades.iter().map(|&g| norm_n(v, g, &self.j)).collect()
    }

    fn sampled_monotone<R: Rng>(&self, samples: usize, rng: &mut R) -> Result<bool> {
        let slack = S::lit(1e-12);
        for _ in 0..samples {
            let v = random_vector(self.j.basis(), self.j.dim(), rng);
            let norms = match self.norms(&v) {
                Ok(n) => n,
                Err(Error::OutsideDomain { .. }) => continue,
                Err(e) => return Err(e),
            };
            if norms.windows(2).any(|w| w[0] > w[1] * (S::one() + slack)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Every grade of `self` is bounded by some grade of `other`, checked on
    /// random samples.
    pub fn dominated_by<R: Rng>(&self, other: &Self, samples: usize, rng: &mut R) -> Result<bool> {
        let slack = S::lit(1e-12);
        for &g in &self.grades {
            let Some(&h) = other.grades.iter().find(|&&h| h >= g) else {
                return Ok(false);
            };
            for _ in 0..samples {
                let v = random_vector(self.j.basis(), self.j.dim(), rng);
                if norm_n(&v, g, &self.j)? > norm_n(&v, h, &other.j)? * (S::one() + slack) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Domination in both directions: the two grade sets define the same tower.
    pub fn dominates_both_ways<R: Rng>(&self, other: &Self, samples: usize, rng: &mut R) -> Result<bool> {
        Ok(self.dominated_by(other, samples, rng)? && other.dominated_by(self, samples, rng)?)
    }
}

/// `⟨Jσ | Jρ⟩_{Φ_H}` against `⟨σ | ρ⟩_ℒ`, where the `Φ_H` product pulls back
/// through `J^{-1}`. Relative to `‖σ‖‖ρ‖`.
pub fn isometry_deviation<S: Scalar>(
    j: &PositiveDiagonal<S>,
    sigma: &HVector<S>,
    rho: &HVector<S>,
) -> Result<S> {
    let js = j.apply_power(sigma, S::one())?;
    let jr = j.apply_power(rho, S::one())?;
    let pulled_s = j.apply_power(&js, -S::one())?;
    let pulled_r = j.apply_power(&jr, -S::one())?;
    let phi_h = pulled_s.inner(&pulled_r)?;
    let plain = sigma.inner(rho)?;
    let scale = sigma.norm() * rho.norm();
    if scale.is_zero() {
        return Ok((phi_h - plain).abs());
    }
    Ok((phi_h - plain).abs() / scale)
}

/// Max relative deviation of the `Φ_H` isometry over random pairs.
pub fn isometry_check<S: Scalar, R: Rng>(j: &PositiveDiagonal<S>, samples: usize, rng: &mut R) -> Result<S> {
    let mut worst = S::zero();
    for _ in 0..samples {
        let sigma = random_vector(j.basis(), j.dim(), rng);
        let rho = random_vector(j.basis(), j.dim(), rng);
        worst = worst.max(isometry_deviation(j, &sigma, &rho)?);
    }
    Ok(worst)
}

/// Singular values `λ_k`, `k = 1, 2, …`, of a positive compact-candidate operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SpectrumFamily<S> {
    /// `λ_k = (k+1)^{-α}`.
    Power { alpha: S },
    /// `λ_k = q^k`.
    Geometric { q: S },
    /// Finite nonincreasing list `λ_1, λ_2, …`.
    Raw { values: Vec<S> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularSpectrum<S> {
    pub family: SpectrumFamily<S>,
    /// Number of terms materialized.
    pub truncation: usize,
}

impl<S: Scalar> SingularSpectrum<S> {
    pub fn power(alpha: S, truncation: usize) -> Result<Self> {
        Self::new(SpectrumFamily::Power { alpha }, truncation)
    }

    pub fn geometric(q: S, truncation: usize) -> Result<Self> {
        Self::new(SpectrumFamily::Geometric { q }, truncation)
    }

    pub fn raw(values: Vec<S>) -> Result<Self> {
        let n = values.len();
        Self::new(SpectrumFamily::Raw { values }, n)
    }

    /// Ages `0..=hi` of a cascade Λ: the one-sided restriction, whose
    /// spectrum does tend to zero. Entries that underflow are dropped.
    pub fn from_lambda_one_sided(lam: &LambdaOperator<S>) -> Result<Self> {
        let values = (0..=lam.system().window().hi())
            .map(|n| lam.lambda(n))
            .filter(|&x| x > S::zero())
            .collect();
        Self::raw(values)
    }

    pub fn new(family: SpectrumFamily<S>, truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::Spectrum("truncation must be positive".into()));
        }
        match &family {
            SpectrumFamily::Power { alpha } if !(*alpha >= S::zero() && alpha.is_finite()) => {
                return Err(Error::Spectrum(format!("power exponent {alpha} must be nonnegative")));
            }
            SpectrumFamily::Geometric { q } if !(*q > S::zero() && *q <= S::one()) => {
                return Err(Error::Spectrum(format!("geometric ratio {q} must lie in (0, 1]")));
            }
            SpectrumFamily::Raw { values } => {
                if values.iter().any(|&x| !(x > S::zero() && x.is_finite())) {
                    return Err(Error::Spectrum("raw values must be positive and finite".into()));
                }
                if let Some(k) = values.windows(2).position(|w| w[1] > w[0]) {
                    return Err(Error::Spectrum(format!("raw spectrum increases at k = {}", k + 2)));
                }
            }
            _ => {}
        }
        Ok(Self { family, truncation })
    }

    pub fn name(&self) -> String {
        match &self.family {
            SpectrumFamily::Power { alpha } => format!("power(alpha={alpha})"),
            SpectrumFamily::Geometric { q } => format!("geometric(q={q})"),
            SpectrumFamily::Raw { values } => format!("raw({} values)", values.len()),
        }
    }

    /// `λ_k` for `k ≥ 1`.
    pub fn value(&self, k: usize) -> S {
        match &self.family {
            SpectrumFamily::Power { alpha } => S::from_int(k as i64 + 1).powf(-*alpha),
            SpectrumFamily::Geometric { q } => q.powi(k as i32),
            SpectrumFamily::Raw { values } => values[k - 1],
        }
    }

    fn is_family(&self) -> bool {
        !matches!(self.family, SpectrumFamily::Raw { .. })
    }

    /// `Σ_{k=1}^{K} λ_k^p` with a bracket on the omitted tail.
    pub fn power_sum(&self, p: S, terms: usize) -> PartialSum<S> {
        let terms = match &self.family {
            SpectrumFamily::Raw { values } => terms.min(values.len()),
            _ => terms,
        };
        let partial = kahan_sum((1..=terms).rev().map(|k| self.value(k).powf(p)));
        let kk = S::from_int(terms as i64);
        let (tail_lo, tail_hi, converges) = match &self.family {
            SpectrumFamily::Power { alpha } => {
                let s = *alpha * p;
                if s > S::one() {
                    // Σ_{j ≥ K+2} j^{-s} lies between the integrals from K+2 and from K+1
                    let e = S::one() - s;
                    let lo = (kk + S::lit(2.0)).powf(e) / (s - S::one());
                    let hi = (kk + S::one()).powf(e) / (s - S::one());
                    (lo, hi, Some(true))
                } else {
                    (S::infinity(), S::infinity(), Some(false))
                }
            }
            SpectrumFamily::Geometric { q } => {
                let r = q.powf(p);
                if r < S::one() {
                    let tail = r.powi(terms as i32 + 1) / (S::one() - r);
                    (tail, tail, Some(true))
                } else {
                    (S::infinity(), S::infinity(), Some(false))
                }
            }
            SpectrumFamily::Raw { .. } => (S::nan(), S::nan(), None),
        };
        PartialSum { exponent: p, terms, partial, tail_lo, tail_hi, converges }
    }

    /// Partial-sum doubling: the second half of the truncation adds less than
    /// 1% of the total. Never a proof.
    fn doubling_suggests_convergence(&self, p: S) -> bool {
        let full = self.power_sum(p, self.truncation).partial;
        let half = self.power_sum(p, self.truncation / 2).partial;
        full > S::zero() && (full - half) / full < S::lit(0.01)
    }
}

fn kahan_sum<S: Scalar>(terms: impl Iterator<Item = S>) -> S {
    let mut sum = S::zero();
    let mut comp = S::zero();
    for x in terms {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Truncated series with a bracket `[partial + tail_lo, partial + tail_hi]`
/// on the full sum. Raw spectra carry no tail information (`NaN`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartialSum<S> {
    pub exponent: S,
    pub terms: usize,
    pub partial: S,
    pub tail_lo: S,
    pub tail_hi: S,
    pub converges: Option<bool>,
}

impl<S: Scalar> PartialSum<S> {
    pub fn brackets(&self, value: S) -> bool {
        self.partial + self.tail_lo <= value && value <= self.partial + self.tail_hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassMethod {
    AnalyticTailBound,
    HeuristicInconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PowerVerdict {
    pub power: u32,
    pub hilbert_schmidt: bool,
    pub nuclear: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorClassReport<S> {
    pub spectrum: String,
    pub compact: bool,
    pub hilbert_schmidt: bool,
    pub nuclear: bool,
    pub power_thresholds: Vec<PowerVerdict>,
    pub min_hilbert_schmidt_power: Option<u32>,
    pub min_nuclear_power: Option<u32>,
    pub method: ClassMethod,
    pub sum_lambda: PartialSum<S>,
    pub sum_lambda_squared: PartialSum<S>,
}

/// Compact / Hilbert–Schmidt / nuclear verdicts for `J` and its integer powers.
pub fn classify<S: Scalar>(spectrum: &SingularSpectrum<S>) -> OperatorClassReport<S> {
    let summable = |p: S| -> bool {
        match &spectrum.family {
            SpectrumFamily::Power { alpha } => *alpha * p > S::one(),
            SpectrumFamily::Geometric { q } => *q < S::one(),
            SpectrumFamily::Raw { .. } => spectrum.doubling_suggests_convergence(p),
        }
    };
    let compact = match &spectrum.family {
        SpectrumFamily::Power { alpha } => *alpha > S::zero(),
        SpectrumFamily::Geometric { q } => *q < S::one(),
        SpectrumFamily::Raw { values } => {
            values.last().zip(values.first()).is_some_and(|(l, f)| *l / *f < S::lit(1e-3))
        }
    };
    let power_thresholds: Vec<PowerVerdict> = (1..=MAX_REPORTED_POWER)
        .map(|n| {
            let nn = S::from_int(n as i64);
            PowerVerdict {
                power: n,
                hilbert_schmidt: summable(S::lit(2.0) * nn),
                nuclear: summable(nn),
            }
        })
        .collect();
    let min_hilbert_schmidt_power = power_thresholds.iter().find(|v| v.hilbert_schmidt).map(|v| v.power);
    let min_nuclear_power = power_thresholds.iter().find(|v| v.nuclear).map(|v| v.power);
    OperatorClassReport {
        spectrum: spectrum.name(),
        compact,
        hilbert_schmidt: power_thresholds[0].hilbert_schmidt,
        nuclear: power_thresholds[0].nuclear,
        power_thresholds,
        min_hilbert_schmidt_power,
        min_nuclear_power,
        method: if spectrum.is_family() {
            ClassMethod::AnalyticTailBound
        } else {
            ClassMethod::HeuristicInconclusive
        },
        sum_lambda: spectrum.power_sum(S::one(), spectrum.truncation),
        sum_lambda_squared: spectrum.power_sum(S::lit(2.0), spectrum.truncation),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KotheReport<S> {
    pub spectrum: String,
    pub n1: String,
    pub n2: String,
    /// `limsup λ_{k+1}/λ_k`: analytic for families, sampled over the second
    /// half of the truncation for raw lists.
    pub ratio_limit: S,
    /// Largest ratio observed on the second half of the truncation.
    pub sampled_ratio_limsup: S,
    pub ratio_criterion: bool,
    /// Partial sums of `Σ λ_k^{2(n2−n1)}`.
    pub series: PartialSum<S>,
    pub series_converges: bool,
    pub nuclear: bool,
    pub method: ClassMethod,
}

/// Köthe nuclearity criterion for grades `0 ≤ n1 < n2 < 1`.
pub fn kothe_nuclearity<S: Scalar>(
    spectrum: &SingularSpectrum<S>,
    n1: Rational64,
    n2: Rational64,
) -> Result<KotheReport<S>> {
    let zero = Rational64::from_integer(0);
    let one = Rational64::from_integer(1);
    if !(zero <= n1 && n1 < n2 && n2 < one) {
        return Err(Error::Grades(format!("need 0 <= n1 < n2 < 1, got n1 = {n1}, n2 = {n2}")));
    }
    let k = spectrum.truncation;
    let sampled_ratio_limsup = ((k / 2).max(1)..k)
        .map(|i| spectrum.value(i + 1) / spectrum.value(i))
        .fold(S::zero(), S::max);
    let ratio_limit = match &spectrum.family {
        SpectrumFamily::Power { .. } => S::one(),
        SpectrumFamily::Geometric { q } => *q,
        SpectrumFamily::Raw { .. } => sampled_ratio_limsup,
    };
    let exponent = S::lit(2.0) * S::from_ratio(n2 - n1);
    let series = spectrum.power_sum(exponent, k);
    let series_converges = match series.converges {
        Some(c) => c,
        None => spectrum.doubling_suggests_convergence(exponent),
    };
    let ratio_criterion = ratio_limit < S::one();
    Ok(KotheReport {
        spectrum: spectrum.name(),
        n1: n1.to_string(),
        n2: n2.to_string(),
        ratio_limit,
        sampled_ratio_limsup,
        ratio_criterion,
        series,
        series_converges,
        nuclear: ratio_criterion && series_converges,
        method: if spectrum.is_family() {
            ClassMethod::AnalyticTailBound
        } else {
            ClassMethod::HeuristicInconclusive
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{AgeWindow, CascadeSystem};
    use crate::lambda::LambdaProfile;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn lambda(lo: i64, hi: i64) -> LambdaOperator<f64> {
        let sys = Arc::new(CascadeSystem::shift(AgeWindow::new(lo, hi).unwrap()));
        LambdaOperator::build(LambdaProfile::gumbel(1.0).unwrap(), sys).unwrap()
    }

    fn r(p: i64, q: i64) -> Rational64 {
        Rational64::new(p, q)
    }

    #[test]
    fn norm_n_examples() {
        let lam = lambda(-1, 1);
        let j = PositiveDiagonal::from_lambda(&lam);
        let e0 = lam.system().unit(&crate::cascade::BasisLabel::Age(0)).unwrap();
        assert_eq!(norm_n(&e0, r(0, 1), &j).unwrap(), 1.0);
        let v = HVector::new(j.basis().clone(), vec![0.3, -1.2, 2.0]);
        assert_eq!(norm_n(&v, r(0, 1), &j).unwrap(), v.norm());
        assert!((norm_n(&e0, r(2, 1), &j).unwrap() - 7.389056).abs() < 1e-6);
        assert!((norm_n(&e0, r(1, 2), &j).unwrap() - 1.648721).abs() < 1e-6);
    }

    #[test]
    fn norm_n_reports_leaving_the_domain() {
        let lam = lambda(-8, 8);
        let j = PositiveDiagonal::from_lambda(&lam);
        let top = lam.system().unit(&crate::cascade::BasisLabel::Age(8)).unwrap();
        assert!(matches!(norm_n(&top, r(1, 1), &j), Err(Error::OutsideDomain { .. })));
        let e0 = lam.system().unit(&crate::cascade::BasisLabel::Age(0)).unwrap();
        assert!(norm_n(&e0, r(1, 1), &j).is_ok());
    }

    #[test]
    fn kothe_coefficient_identity() {
        let j = PositiveDiagonal::from_operator(&HOperator::diagonal(BasisId::new("k"), vec![0.5, 0.25, 0.125]))
            .unwrap();
        let v = HVector::new(BasisId::new("k"), vec![1.0, -2.0, 0.5]);
        for n in [r(1, 2), r(2, 3), r(2, 1)] {
            let g = *n.numer() as f64 / *n.denom() as f64;
            let direct: f64 = [(1.0f64, 0.5f64), (-2.0, 0.25), (0.5, 0.125)]
                .iter()
                .map(|(c, l)| c * c * l.powf(-2.0 * g))
                .sum();
            let got = norm_n(&v, n, &j).unwrap();
            assert!((got * got - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn tower_grades() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let j = PositiveDiagonal::from_lambda(&lambda(-3, 3));
        let b = build_tower(j.clone(), TowerType::B, 3, &mut rng).unwrap();
        assert_eq!(b.grades, vec![r(0, 1), r(1, 2), r(2, 3), r(3, 4)]);
        assert_eq!(b.bound, GradeBound::SupremumNotAttained);
        assert!(b.monotone_verified);
        let c = build_tower(j.clone(), TowerType::C, 3, &mut rng).unwrap();
        assert_eq!(c.grades, (0..=3).map(|n| r(n, 1)).collect::<Vec<_>>());
        assert_eq!(c.bound, GradeBound::Unbounded);
        let a = build_tower(j.clone(), TowerType::A, 1, &mut rng).unwrap();
        assert_eq!(a.grades, vec![r(1, 1)]);
        let e0 = lambda(-3, 3).system().unit(&crate::cascade::BasisLabel::Age(0)).unwrap();
        assert!((a.norms(&e0).unwrap()[0] - std::f64::consts::E).abs() < 1e-12);
        assert!(build_tower(j, TowerType::B, 0, &mut rng).is_err());
    }

    #[test]
    fn expanding_j_breaks_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let j = PositiveDiagonal::from_operator(&HOperator::diagonal(BasisId::new("x"), vec![2.0, 3.0])).unwrap();
        assert!(!j.is_contraction());
        let t = build_tower(j, TowerType::C, 3, &mut rng).unwrap();
        assert!(!t.monotone_verified);
    }

    #[test]
    fn alternative_b_set_is_equivalent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let j = PositiveDiagonal::from_lambda(&lambda(-3, 3));
        // both prefixes end at a grade of the other's size class so each grade is dominated
        let b = NormTower::with_grades(j.clone(), b_grades(7), GradeBound::SupremumNotAttained).unwrap();
        let alt = NormTower::with_grades(j.clone(), alternative_b_grades(3), GradeBound::SupremumNotAttained).unwrap();
        assert_eq!(alt.grades, vec![r(0, 1), r(1, 2), r(3, 4), r(7, 8)]);
        assert!(b.dominates_both_ways(&alt, 8, &mut rng).unwrap());
        let c = NormTower::with_grades(j, vec![r(0, 1), r(2, 1)], GradeBound::Unbounded).unwrap();
        assert!(!b.dominates_both_ways(&c, 8, &mut rng).unwrap());
    }

    #[test]
    fn isometry_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let j = PositiveDiagonal::from_lambda(&lambda(-3, 3));
        let zero = HVector::zeros(j.basis().clone(), j.dim());
        assert_eq!(isometry_deviation(&j, &zero, &zero).unwrap(), 0.0);
        let id = PositiveDiagonal::<f64>::identity(BasisId::new("i"), 5);
        assert_eq!(isometry_check(&id, 20, &mut rng).unwrap(), 0.0);
        assert!(isometry_check(&j, 100, &mut rng).unwrap() <= 1e-10);
    }

    #[test]
    fn example_two_spectrum() {
        let s = SingularSpectrum::power(0.5, 1000).unwrap();
        let rep = classify(&s);
        assert!(rep.compact);
        assert!(!rep.nuclear);
        assert!(!rep.hilbert_schmidt);
        assert!(rep.power_thresholds[1].hilbert_schmidt);
        assert!(rep.power_thresholds[3].nuclear);
        assert_eq!(rep.min_nuclear_power, Some(3));
        assert_eq!(rep.min_hilbert_schmidt_power, Some(2));
        assert_eq!(rep.method, ClassMethod::AnalyticTailBound);
    }

    #[test]
    fn fourth_power_sum_brackets_closed_form() {
        let s = SingularSpectrum::<f64>::power(0.5, 10_000).unwrap();
        let limit = std::f64::consts::PI.powi(2) / 6.0 - 1.0;
        assert!((limit - 0.644934).abs() < 1e-6);
        for k in [10, 100, 10_000] {
            let sum = s.power_sum(4.0, k);
            assert!(sum.brackets(limit), "K = {k}: {sum:?}");
        }
    }

    #[test]
    fn geometric_spectrum() {
        let s = SingularSpectrum::<f64>::geometric(0.5, 80).unwrap();
        let rep = classify(&s);
        assert!(rep.nuclear && rep.hilbert_schmidt && rep.compact);
        assert!((rep.sum_lambda.partial - 1.0).abs() < 1e-12);
        assert!(rep.sum_lambda.brackets(1.0));
    }

    #[test]
    fn power_thresholds_on_grid() {
        for alpha in [0.25, 0.5, 0.75, 1.0, 1.5, 2.0] {
            let rep = classify(&SingularSpectrum::power(alpha, 100).unwrap());
            assert_eq!(rep.nuclear, alpha > 1.0, "alpha = {alpha}");
            assert_eq!(rep.hilbert_schmidt, alpha > 0.5, "alpha = {alpha}");
        }
    }

    #[test]
    fn raw_spectra_are_heuristic_and_validated() {
        let raw = SingularSpectrum::raw((1..=200).map(|k| 0.5f64.powi(k)).collect()).unwrap();
        let rep = classify(&raw);
        assert_eq!(rep.method, ClassMethod::HeuristicInconclusive);
        assert!(rep.nuclear);
        assert!(SingularSpectrum::raw(vec![0.5, 0.7]).is_err());
        assert!(SingularSpectrum::raw(vec![0.5, 0.0]).is_err());
        let slow = SingularSpectrum::raw((1..=200).map(|k| 1.0 / (k as f64 + 1.0).sqrt()).collect()).unwrap();
        assert!(!classify(&slow).nuclear);
    }

    #[test]
    fn one_sided_lambda_spectrum() {
        let s = SingularSpectrum::from_lambda_one_sided(&lambda(-4, 4)).unwrap();
        assert_eq!(s.truncation, 5);
        let rep = classify(&s);
        assert_eq!(rep.method, ClassMethod::HeuristicInconclusive);
        assert!(rep.compact);
    }

    #[test]
    fn kothe_examples() {
        let g = SingularSpectrum::<f64>::geometric(0.5, 80).unwrap();
        let rep = kothe_nuclearity(&g, r(0, 1), r(1, 2)).unwrap();
        assert_eq!(rep.ratio_limit, 0.5);
        assert!(rep.ratio_criterion && rep.series_converges && rep.nuclear);
        assert!((rep.series.partial - 1.0).abs() <= 1e-12);

        let p = SingularSpectrum::<f64>::power(0.5, 10_000).unwrap();
        let rep = kothe_nuclearity(&p, r(0, 1), r(1, 2)).unwrap();
        assert_eq!(rep.ratio_limit, 1.0);
        assert!(rep.sampled_ratio_limsup > 0.9999 && rep.sampled_ratio_limsup < 1.0);
        assert!(!rep.ratio_criterion && !rep.series_converges && !rep.nuclear);

        assert!(matches!(kothe_nuclearity(&g, r(1, 2), r(1, 2)), Err(Error::Grades(_))));
        assert!(kothe_nuclearity(&g, r(1, 2), r(1, 1)).is_err());
    }

    proptest! {
        #[test]
        fn grades_are_monotone_for_contractions(
            c in prop::collection::vec(-3.0f64..3.0, 7),
            p in 0i64..6, q in 1i64..4, dp in 0i64..6,
        ) {
            let j = PositiveDiagonal::from_lambda(&lambda(-3, 3));
            let v = HVector::new(j.basis().clone(), c);
            let n1 = r(p, q);
            let n2 = n1 + r(dp, q);
            prop_assert!(norm_n(&v, n1, &j).unwrap() <= norm_n(&v, n2, &j).unwrap() * (1.0 + 1e-14));
        }

        #[test]
        fn tower_composition(
            c in prop::collection::vec(-3.0f64..3.0, 7),
            m in 0i64..5, n in 0i64..5, q in 1i64..4,
        ) {
            let j = PositiveDiagonal::from_lambda(&lambda(-3, 3));
            let v = HVector::new(j.basis().clone(), c);
            let (gm, gn) = (r(m, q), r(n, q));
            let lhs = norm_n(&v, gm + gn, &j).unwrap();
            let pulled = j.apply_power(&v, -(m as f64) / q as f64).unwrap();
            let rhs = norm_n(&pulled, gn, &j).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(rhs).max(f64::MIN_POSITIVE));
        }
    }
}
