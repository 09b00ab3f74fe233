//! The rigged-dual operator web: `Λ^×`, the Riesz map `ℛ = Λ Λ^×`, and the
//! six evolutions `Ū_t, W_t, V_t, X_t, Y_t, Z_t`.
//!
//! Functionals are coefficient vectors read through the real `ℒ` pairing,
//! so `Φ_H ⊂ ℒ ⊂ Φ_H^×` become one coefficient space with three Gram
//! weights: `λ^{-2}`, `1` and `λ²`. Every evolution maps a basis vector to a
//! multiple of its Koopman image, so each one is stored as a log weight per
//! basis vector of the safe subspace.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{apply_diag_function, spectrum_distance, HOperator, HVector};
use crate::lambda::LambdaOperator;
use crate::markov::{markov_step, MarkovEvolution};
use crate::rigging::PositiveDiagonal;
use crate::scalar::{relative_gap, Scalar};

/// Smallest difference norm accepted as a witness for an inequality.
pub const WITNESS_MIN: f64 = 1e-6;
/// Tolerance for identities between evolutions.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for eigenvalue multiset comparison.
pub const SPECTRUM_TOL: f64 = 1e-8;

/// `M` with `⟨ρ | M f⟩ = ⟨Λρ | f⟩`: the transpose of a positive diagonal `Λ`.
pub fn antitranspose<S: Scalar>(lam: &HOperator<S>) -> Result<HOperator<S>> {
    let d = lam.diagonal_entries().ok_or_else(|| Error::NotDiagonal(lam.basis().to_string()))?;
    if let Some(&bad) = d.iter().find(|&&x| !(x > S::zero())) {
        return Err(Error::Domain { eigenvalue: bad.as_f64() });
    }
    Ok(lam.adjoint())
}

/// Max over random pairs of `|⟨ρ | M f⟩ − ⟨Λρ | f⟩|`, relative to `‖ρ‖‖f‖`.
pub fn pairing_deviation<S: Scalar, R: Rng>(
    lam: &HOperator<S>,
    m: &HOperator<S>,
    samples: usize,
    rng: &mut R,
) -> Result<S> {
    let mut worst = S::zero();
    for _ in 0..samples {
        let rho = random_vector(lam, rng);
        let f = random_vector(lam, rng);
        let lhs = rho.inner(&m.apply(&f)?)?;
        let rhs = lam.apply(&rho)?.inner(&f)?;
        worst = worst.max((lhs - rhs).abs() / (rho.norm() * f.norm()));
    }
    Ok(worst)
}

fn random_vector<S: Scalar, R: Rng>(op: &HOperator<S>, rng: &mut R) -> HVector<S> {
    HVector::new(op.basis().clone(), (0..op.dim()).map(|_| S::lit(rng.random_range(-1.0..1.0))).collect())
}

/// `ℛ = Λ Λ^× = Λ² = R`, with `ℛ^{-1}` kept only as logs.
#[derive(Clone, Debug)]
pub struct RieszMap<S> {
    pub lambda: PositiveDiagonal<S>,
    /// `Λ Λ^×` composed as matrices.
    pub r: HOperator<S>,
    /// `ln` of the entries of `R = Λ²`.
    pub log_r: Vec<S>,
    /// `max |√R − Λ|` over the diagonal.
    pub sqrt_deviation: S,
    /// `max |Λ Λ^× − Λ²|`.
    pub square_deviation: S,
}

impl<S: Scalar> RieszMap<S> {
    pub fn log_r_inv(&self) -> Vec<S> {
        self.log_r.iter().map(|&l| -l).collect()
    }

    pub fn apply(&self, f: &HVector<S>) -> Result<HVector<S>> {
        self.lambda.apply_power(f, S::lit(2.0))
    }

    /// Smallest `⟨Rρ | ρ⟩` over random `ρ`.
    pub fn quadratic_form_min<R: Rng>(&self, samples: usize, rng: &mut R) -> Result<S> {
        let mut min = S::infinity();
        for _ in 0..samples {
            let rho = random_vector(&self.r, rng);
            min = min.min(self.apply(&rho)?.inner(&rho)?);
        }
        Ok(min)
    }

    /// Max relative gap between `⟨ℛF | ℛG⟩_{Φ_H}` and the pairing-induced
    /// `⟨F | G⟩_{Φ_H^×}` over random functionals.
    pub fn isometry_deviation<R: Rng>(&self, samples: usize, rng: &mut R) -> Result<S> {
        let mut worst = S::zero();
        let one = S::one();
        for _ in 0..samples {
            let f = random_vector(&self.r, rng);
            let g = random_vector(&self.r, rng);
            // Φ_H reads through Λ^{-1}
            let rf = self.lambda.apply_power(&self.apply(&f)?, -one)?;
            let rg = self.lambda.apply_power(&self.apply(&g)?, -one)?;
            let lhs = rf.inner(&rg)?;
            // Φ_H^× reads through Λ
            let lf = self.lambda.apply_power(&f, one)?;
            let lg = self.lambda.apply_power(&g, one)?;
            let rhs = lf.inner(&lg)?;
            let scale = lf.norm() * lg.norm();
            if scale > S::zero() {
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
        Ok(worst)
    }
}

pub fn riesz_map<S: Scalar>(lambda: &PositiveDiagonal<S>) -> Result<RieszMap<S>> {
    let two = S::lit(2.0);
    let lam = HOperator::diagonal(lambda.basis().clone(), lambda.log_entries().iter().map(|l| l.exp()).collect());
    // entries may have flushed to zero, so skip the positivity check of `antitranspose`
    let r = lam.compose(&lam.adjoint())?;
    let log_r: Vec<S> = lambda.log_entries().iter().map(|&l| two * l).collect();
    let squared = HOperator::diagonal(lambda.basis().clone(), log_r.iter().map(|l| l.exp()).collect());
    let square_deviation = r.max_abs_diff(&squared)?;
    let sqrt_deviation = apply_diag_function(|x: S| x.sqrt(), &r)?.max_abs_diff(&lam)?;
    Ok(RieszMap { lambda: lambda.clone(), r, log_r, sqrt_deviation, square_deviation })
}

/// One evolution of the web as `e_j ↦ exp(log_weight[j]) e_{target(j)}`.
#[derive(Clone, Debug)]
pub struct WebOperator<S> {
    pub name: &'static str,
    /// `None` off the safe subspace.
    pub log_weight: Vec<Option<S>>,
}

/// Per-`t` operator web, restricted to basis vectors whose Koopman image
/// after `t` steps stays in the window.
#[derive(Clone, Debug)]
pub struct OperatorWeb<S> {
    pub lambda: Arc<LambdaOperator<S>>,
    pub t: i64,
    pub safe: Vec<usize>,
    pub target: Vec<Option<usize>>,
    pub lambda_x: HOperator<S>,
    pub riesz: RieszMap<S>,
    pub u_bar: WebOperator<S>,
    pub w: WebOperator<S>,
    pub v: WebOperator<S>,
    pub x: WebOperator<S>,
    pub y: WebOperator<S>,
    pub z: WebOperator<S>,
}

pub fn build_web<S: Scalar>(lambda: &Arc<LambdaOperator<S>>, t: i64) -> Result<OperatorWeb<S>> {
    if t < 0 {
        return Err(Error::NegativeTime(t));
    }
    let sys = lambda.system();
    let l = lambda.log_diag();
    let safe = sys.interior_margin(t);
    let mut target = vec![None; sys.dim()];
    for &j in &safe {
        target[j] = sys.koopman_target(j, t);
    }
    let two = S::lit(2.0);
    let cap = S::log_cap();
    let make = |name: &'static str, f: &dyn Fn(S, S) -> S| -> Result<WebOperator<S>> {
        let mut log_weight = vec![None; sys.dim()];
        for &j in &safe {
            let k = target[j].expect("safe index has a target");
            let w = f(l[j], l[k]);
            if w > cap {
                return Err(Error::OutsideDomain {
                    log_weight: w.as_f64(),
                    cap: cap.as_f64(),
                    context: format!("{name} at {}", sys.labels()[j]),
                });
            }
            log_weight[j] = Some(w);
        }
        Ok(WebOperator { name, log_weight })
    };
    let lam_pd = PositiveDiagonal::from_lambda(lambda);
    Ok(OperatorWeb {
        lambda: lambda.clone(),
        t,
        target: target.clone(),
        lambda_x: lambda.matrix().adjoint(),
        riesz: riesz_map(&lam_pd)?,
        u_bar: make("Ū_t", &|_, _| S::zero())?,
        w: make("W_t = Λ U_t Λ^-1", &|ln, lnt| lnt - ln)?,
        v: make("V_t = Λ^-1 U_t Λ", &|ln, lnt| ln - lnt)?,
        // Λ^{-2} applied after W_t after Λ², accumulated factor by factor
        x: make("X_t = Λ^-2 W_t Λ^2", &|ln, lnt| two * ln + (lnt - ln) - two * lnt)?,
        y: make("Y_t = Λ U_t Λ^-1", &|ln, lnt| lnt - ln)?,
        z: make("Z_t = Λ^2 U_t Λ^-2", &|ln, lnt| two * lnt - two * ln)?,
        safe,
    })
}

impl<S: Scalar> OperatorWeb<S> {
    pub fn operators(&self) -> [&WebOperator<S>; 6] {
        [&self.u_bar, &self.w, &self.v, &self.x, &self.y, &self.z]
    }

    /// Dense-free matrix form; entries below the smallest subnormal flush to zero.
    pub fn matrix(&self, op: &WebOperator<S>) -> HOperator<S> {
        let sys = self.lambda.system();
        let weight = op.log_weight.iter().map(|w| w.map_or(S::zero(), |x| x.exp())).collect();
        HOperator::monomial(sys.basis().clone(), self.target.clone(), weight).expect("targets are injective")
    }

    /// Compression onto the safe subspace: images that leave it are dropped.
    pub fn compressed(&self, op: &WebOperator<S>) -> HOperator<S> {
        let sys = self.lambda.system();
        let mut in_safe = vec![false; sys.dim()];
        for &j in &self.safe {
            in_safe[j] = true;
        }
        let target = self.target.iter().map(|t| t.filter(|&k| in_safe[k])).collect();
        let weight = op.log_weight.iter().map(|w| w.map_or(S::zero(), |x| x.exp())).collect();
        HOperator::monomial(sys.basis().clone(), target, weight).expect("targets are injective")
    }

    pub fn apply(&self, op: &WebOperator<S>, v: &HVector<S>) -> Result<HVector<S>> {
        let sys = self.lambda.system();
        let outside: Vec<String> =
            v.support().filter(|&j| op.log_weight[j].is_none()).map(|j| sys.labels()[j].to_string()).collect();
        if !outside.is_empty() {
            return Err(Error::Margin { t: self.t, labels: outside });
        }
        self.matrix(op).apply(v)
    }

    /// Safe indices ordered by `|age|`, so `e_0` or its baker analogue comes first.
    fn witness_order(&self) -> Vec<usize> {
        let sys = self.lambda.system();
        let mut order = self.safe.clone();
        order.sort_by_key(|&j| (sys.age(j).abs(), sys.age(j), j));
        order
    }

    /// First basis vector on which `a` and `b` differ by more than [`WITNESS_MIN`].
    pub fn witness(&self, a: &WebOperator<S>, b: &WebOperator<S>) -> Option<Witness<S>> {
        let sys = self.lambda.system();
        self.witness_order().into_iter().find_map(|j| {
            let (wa, wb) = (a.log_weight[j]?.exp(), b.log_weight[j]?.exp());
            let difference = (wa - wb).abs();
            (difference > S::lit(WITNESS_MIN)).then(|| Witness {
                vector: sys.labels()[j].to_string(),
                image: sys.labels()[self.target[j].expect("safe")].to_string(),
                left: a.name.to_string(),
                right: b.name.to_string(),
                left_coefficient: wa,
                right_coefficient: wb,
                difference,
            })
        })
    }

    /// Max relative difference between two evolutions over the safe subspace.
    pub fn relative_deviation(&self, a: &WebOperator<S>, b: &WebOperator<S>) -> S {
        self.safe
            .iter()
            .map(|&j| {
                let (la, lb) = (a.log_weight[j].expect("safe"), b.log_weight[j].expect("safe"));
                relative_gap(la.exp(), lb.exp())
            })
            .fold(S::zero(), S::max)
    }
}

/// `left e_j = left_coefficient · e_k` against `right e_j = right_coefficient · e_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness<S> {
    pub vector: String,
    pub image: String,
    pub left: String,
    pub right: String,
    pub left_coefficient: S,
    pub right_coefficient: S,
    pub difference: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartReport<S> {
    pub part: &'static str,
    pub claim: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<S>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness<S>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremReport<S> {
    pub t: i64,
    pub window: [i64; 2],
    pub profile: String,
    pub parts: Vec<PartReport<S>>,
    /// `Y_t = W_t` and `Ū_t = U_t` hold as matrices in this representation.
    pub representation_max_gap: S,
    /// `⟨ℛF | ℛG⟩_{Φ_H}` against the pairing-induced product of `F`, `G`.
    pub riesz_isometry_deviation: S,
}

impl<S> TheoremReport<S> {
    pub fn all_passed(&self) -> bool {
        self.parts.iter().all(|p| p.passed)
    }

    pub fn part(&self, name: &str) -> Option<&PartReport<S>> {
        self.parts.iter().find(|p| p.part == name)
    }
}

fn random_on<S: Scalar, R: Rng>(web: &OperatorWeb<S>, rng: &mut R) -> HVector<S> {
    let sys = web.lambda.system();
    let mut v = sys.zero_vector();
    for &j in &web.safe {
        v.coeffs_mut()[j] = S::lit(rng.random_range(-1.0..1.0));
    }
    v
}

/// Checks the six claims of the dual-web theorem at `web.t ≥ 1`.
pub fn verify_theorem<S: Scalar, R: Rng>(
    web: &OperatorWeb<S>,
    samples: usize,
    rng: &mut R,
) -> Result<TheoremReport<S>> {
    if web.t < 1 {
        return Err(Error::Invalid("the inequality parts need t >= 1; t = 0 makes every evolution the identity".into()));
    }
    let sys = web.lambda.system();
    let tol = S::lit(IDENTITY_TOL);
    let mut parts = Vec::with_capacity(6);

    let dev_i = web.relative_deviation(&web.v, &web.x);
    parts.push(PartReport {
        part: "i",
        claim: "V_t = X_t",
        passed: dev_i <= tol,
        deviation: Some(dev_i),
        witness: None,
        detail: Some("max entrywise relative deviation on the safe subspace".into()),
    });

    // ℛ V_s = W_s ℛ, so ‖ℛ V_s f‖ is the Markov trace of ℛ f
    let ev = MarkovEvolution::new(web.lambda.clone(), web.t)?;
    let mut gap_ii = S::zero();
    let mut monotone = true;
    for _ in 0..samples {
        let f = random_on(web, rng);
        let rf = web.riesz.apply(&f)?;
        let mut prev = S::infinity();
        for s in 0..=web.t {
            let sub = build_web(&web.lambda, s)?;
            let lhs = web.riesz.apply(&sub.apply(&sub.v, &f)?)?;
            let rhs = markov_step(&ev, &rf, s)?;
            let scale = lhs.norm().max(rhs.norm());
            if scale > S::zero() {
                gap_ii = gap_ii.max(lhs.sub(&rhs)?.norm() / scale);
            }
            let n = lhs.norm();
            if n > prev * (S::one() + S::lit(4.0) * S::epsilon()) {
                monotone = false;
            }
            prev = n;
        }
    }
    parts.push(PartReport {
        part: "ii",
        claim: "ℛ-conjugated V_s traces decay monotonically",
        passed: monotone && gap_ii <= tol,
        deviation: Some(gap_ii),
        witness: None,
        detail: Some(format!("{samples} samples, s = 0..={}, monotone = {monotone}", web.t)),
    });

    for (part, claim, a, b) in [
        ("iii", "V_t ≠ Ū_t", &web.v, &web.u_bar),
        ("iv", "Y_t ≠ Ū_t", &web.y, &web.u_bar),
        ("v", "W_t ≠ Z_t", &web.w, &web.z),
    ] {
        let witness = web.witness(a, b);
        parts.push(PartReport { part, claim, passed: witness.is_some(), deviation: None, witness, detail: None });
    }

    let z_spec = web.compressed(&web.z).spectrum();
    let u_spec = web.compressed(&web.u_bar).spectrum();
    let spec_dist = spectrum_distance(&z_spec, &u_spec).unwrap_or(S::infinity());
    let iso = conjugacy_deviation(web, samples, rng)?;
    let nonzero = |sp: &[Complex<S>]| sp.iter().filter(|c| c.norm() > S::zero()).count();
    parts.push(PartReport {
        part: "vi",
        claim: "Z_t = ℛ Ū_t ℛ^-1 is equivalent to Ū_t",
        passed: spec_dist <= S::lit(SPECTRUM_TOL) && iso <= tol,
        deviation: Some(spec_dist.max(iso)),
        witness: None,
        detail: Some(format!(
            "spectrum distance {spec_dist} over {} eigenvalues ({} nonzero), isometric conjugacy deviation {iso}",
            z_spec.len(),
            nonzero(&z_spec)
        )),
    });

    let representation_max_gap = web.relative_deviation(&web.y, &web.w).max(
        web.safe
            .iter()
            .map(|&j| {
                let u = sys.koopman().power(web.t as u32).map(|u| u.entry(web.target[j].expect("safe"), j));
                (u.unwrap_or(S::nan()) - web.u_bar.log_weight[j].expect("safe").exp()).abs()
            })
            .fold(S::zero(), S::max),
    );
    let riesz_isometry_deviation = web.riesz.isometry_deviation(samples, rng)?;
    let w = sys.window();
    Ok(TheoremReport {
        t: web.t,
        window: [w.lo(), w.hi()],
        profile: web.lambda.profile().name(),
        parts,
        representation_max_gap,
        riesz_isometry_deviation,
    })
}

/// `‖Z_t g‖_{Φ_H}` against `‖Ū_t ℛ^{-1} g‖_{Φ_H^×}`, relative, over random `g`.
fn conjugacy_deviation<S: Scalar, R: Rng>(web: &OperatorWeb<S>, samples: usize, rng: &mut R) -> Result<S> {
    let lam = &web.riesz.lambda;
    let one = S::one();
    let mut worst = S::zero();
    for _ in 0..samples {
        let g = random_on(web, rng);
        let lhs = lam.apply_power(&web.apply(&web.z, &g)?, -one)?.norm();
        let pulled = lam.apply_power(&g, S::lit(-2.0))?;
        let rhs = lam.apply_power(&web.apply(&web.u_bar, &pulled)?, one)?.norm();
        worst = worst.max(relative_gap(lhs, rhs));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{AgeWindow, BasisLabel, CascadeSystem};
    use crate::hilbert::BasisId;
    use crate::lambda::LambdaProfile;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lambda(lo: i64, hi: i64) -> Arc<LambdaOperator<f64>> {
        let sys = Arc::new(CascadeSystem::shift(AgeWindow::new(lo, hi).unwrap()));
        Arc::new(LambdaOperator::build(LambdaProfile::gumbel(1.0).unwrap(), sys).unwrap())
    }

    fn coeff(web: &OperatorWeb<f64>, op: &WebOperator<f64>, from: i64, to: i64) -> f64 {
        let sys = web.lambda.system();
        let e = sys.unit(&BasisLabel::Age(from)).unwrap();
        web.apply(op, &e).unwrap().coeffs()[sys.index_of(&BasisLabel::Age(to)).unwrap()]
    }

    #[test]
    fn antitranspose_examples() {
        let b = BasisId::new("a");
        let lam = HOperator::diagonal(b.clone(), vec![0.5, 0.25]);
        assert_eq!(antitranspose(&lam).unwrap(), lam);
        let id = HOperator::<f64>::identity(b.clone(), 2);
        assert_eq!(antitranspose(&id).unwrap(), id);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lam = lambda(-3, 3).matrix();
        let m = antitranspose(&lam).unwrap();
        assert!(pairing_deviation(&lam, &m, 100, &mut rng).unwrap() <= 1e-12);
        assert!(antitranspose(&HOperator::diagonal(b, vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn riesz_examples() {
        let b = BasisId::new("r");
        let pd = PositiveDiagonal::from_operator(&HOperator::diagonal(b, vec![0.5])).unwrap();
        let r = riesz_map(&pd).unwrap();
        assert_eq!(r.r.diagonal_entries().unwrap(), &[0.25]);
        assert_eq!(r.sqrt_deviation, 0.0);

        let lam = lambda(-1, 1);
        let r = riesz_map(&PositiveDiagonal::from_lambda(&lam)).unwrap();
        let d = r.r.diagonal_entries().unwrap();
        assert_abs_diff_eq!(d[0], 0.4791417088, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1], 0.1353352832, epsilon = 1e-9);
        assert_abs_diff_eq!(d[2], 0.0043544209, epsilon = 1e-9);
        assert!(r.sqrt_deviation <= 1e-12 && r.square_deviation <= 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(r.quadratic_form_min(100, &mut rng).unwrap() >= 0.0);
        assert!(r.isometry_deviation(100, &mut rng).unwrap() <= 1e-10);
        assert_eq!(r.log_r_inv()[1], 2.0);
    }

    #[test]
    fn web_at_zero_is_identity() {
        let web = build_web(&lambda(-3, 3), 0).unwrap();
        for op in web.operators() {
            for &j in &web.safe {
                assert_eq!(web.target[j], Some(j));
                assert_abs_diff_eq!(op.log_weight[j].unwrap(), 0.0, epsilon = 1e-12);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(verify_theorem(&web, 4, &mut rng).is_err());
    }

    #[test]
    fn web_values() {
        let web = build_web(&lambda(-3, 3), 1).unwrap();
        assert_abs_diff_eq!(coeff(&web, &web.v, 0, 1), 5.5749415248, epsilon = 1e-9);
        assert_abs_diff_eq!(coeff(&web, &web.x, 0, 1), 5.5749415248, epsilon = 1e-9);
        assert_abs_diff_eq!(coeff(&web, &web.w, 0, 1), 0.1793740787, epsilon = 1e-10);
        assert_abs_diff_eq!(coeff(&web, &web.y, 0, 1), 0.1793740787, epsilon = 1e-10);
        assert_abs_diff_eq!(coeff(&web, &web.z, 0, 1), 0.0321750601, epsilon = 1e-10);
        assert_eq!(coeff(&web, &web.u_bar, 0, 1), 1.0);
        let top = web.lambda.system().unit(&BasisLabel::Age(3)).unwrap();
        assert!(matches!(web.apply(&web.v, &top), Err(Error::Margin { .. })));
    }

    #[test]
    fn direct_composition_oracle() {
        // V_1 = Λ^-1 U Λ from plain matrices on a window where Λ^-1 is representable
        let lam = lambda(-2, 2);
        let web = build_web(&lam, 1).unwrap();
        let sys = lam.system();
        let l = lam.matrix();
        let inv = HOperator::diagonal(sys.basis().clone(), lam.log_diag().iter().map(|x| (-x).exp()).collect());
        let v = inv.compose(sys.koopman()).unwrap().compose(&l).unwrap();
        for &j in &web.safe {
            let k = web.target[j].unwrap();
            assert!(relative_gap(v.entry(k, j), web.v.log_weight[j].unwrap().exp()) <= 1e-12);
        }
    }

    #[test]
    fn cap_errors_name_the_conjugation() {
        let err = build_web(&lambda(-8, 8), 1).unwrap_err();
        match err {
            Error::OutsideDomain { context, .. } => assert!(context.starts_with("V_t"), "{context}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn theorem_on_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for (w, t) in [(4, 1), (6, 1), (6, 2)] {
            let web = build_web(&lambda(-w, w), t).unwrap();
            let rep = verify_theorem(&web, 16, &mut rng).unwrap();
            assert!(rep.all_passed(), "{rep:#?}");
            assert!(rep.part("i").unwrap().deviation.unwrap() <= 1e-10);
            assert_eq!(rep.representation_max_gap, 0.0);
            assert!(rep.riesz_isometry_deviation <= 1e-10);
        }
        let web = build_web(&lambda(-6, 6), 1).unwrap();
        let rep = verify_theorem(&web, 4, &mut rng).unwrap();
        let iii = rep.part("iii").unwrap().witness.as_ref().unwrap();
        assert_eq!(iii.vector, "e0");
        assert_abs_diff_eq!(iii.difference, 4.5749415248, epsilon = 1e-9);
        let v = rep.part("v").unwrap().witness.as_ref().unwrap();
        assert_abs_diff_eq!(v.left_coefficient, 0.1793740787, epsilon = 1e-10);
        assert_abs_diff_eq!(v.right_coefficient, 0.0321750601, epsilon = 1e-10);
    }

    #[test]
    fn theorem_on_baker() {
        let sys = Arc::new(CascadeSystem::baker(2).unwrap());
        let lam = Arc::new(LambdaOperator::build(LambdaProfile::gumbel(1.0).unwrap(), sys).unwrap());
        let web = build_web(&lam, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rep = verify_theorem(&web, 8, &mut rng).unwrap();
        assert!(rep.all_passed(), "{rep:#?}");
        assert_eq!(rep.part("iii").unwrap().witness.as_ref().unwrap().vector, "χ{0}");
    }
}
