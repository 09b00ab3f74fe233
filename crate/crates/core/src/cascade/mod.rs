//! Finite-window cascades carrying an imprimitivity system.
//!
//! Two realizations share one representation:
//!
//! * the bilateral shift on ages `lo..=hi`, with basis `e_n` of age `n`;
//! * the dyadic baker map on coordinates `-m..=m`, with basis the Walsh
//!   functions `χ_S` over nonempty subsets `S`, of age `max(S)`. The
//!   constant function `χ_∅` is the equilibrium component and lives outside
//!   the fluctuation basis.
//!
//! The Koopman step raises age by one and is truncated at the top of the
//! window (open boundary), so covariance identities hold exactly on the
//! interior margin rather than globally.

mod document;
mod walsh;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BasisId, HOperator, HVector};
use crate::scalar::Scalar;

pub use document::SystemDocument;
pub use walsh::{fwht, grid_to_walsh, walsh_to_grid, BlockVector, GridDensity};

/// Largest baker resolution materialized.
pub const BAKER_MAX_M: i64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Shift,
    Baker,
}

/// Ages `lo..=hi` with `lo < 0 < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgeWindow {
    lo: i64,
    hi: i64,
}

impl AgeWindow {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if hi - lo < 2 {
            return Err(Error::Window { lo, hi, reason: "window too small".into() });
        }
        if !(lo < 0 && 0 < hi) {
            return Err(Error::Window { lo, hi, reason: "window must contain age 0 strictly inside".into() });
        }
        Ok(Self { lo, hi })
    }

    pub fn symmetric(m: i64) -> Result<Self> {
        Self::new(-m, m)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn ages(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, age: i64) -> bool {
        (self.lo..=self.hi).contains(&age)
    }
}

/// Basis label: an age for the shift, a coordinate subset for the baker.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisLabel {
    Age(i64),
    Subset(Vec<i64>),
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Age(n) => write!(f, "e{n}"),
            BasisLabel::Subset(s) => {
                let parts: Vec<String> = s.iter().map(i64::to_string).collect();
                write!(f, "χ{{{}}}", parts.join(","))
            }
        }
    }
}

/// Finite-window realization of a Koopman cascade with its age grading.
#[derive(Clone, Debug)]
pub struct CascadeSystem<S> {
    kind: SystemKind,
    window: AgeWindow,
    basis: BasisId,
    labels: Vec<BasisLabel>,
    ages: Vec<i64>,
    /// Baker only: subset bitmask per basis index, bit `i + m` for coordinate `i`.
    masks: Vec<u32>,
    index: HashMap<BasisLabel, usize>,
    koopman: HOperator<S>,
    time: HOperator<S>,
    projectors: Vec<HOperator<S>>,
}

impl<S: Scalar> CascadeSystem<S> {
    /// Bilateral shift `e_n ↦ e_{n+1}` on `window`, with `e_hi ↦ 0`.
    pub fn shift(window: AgeWindow) -> Self {
        let basis = BasisId::new(format!("shift[{},{}]", window.lo, window.hi));
        let ages: Vec<i64> = window.ages().collect();
        let labels = ages.iter().map(|&n| BasisLabel::Age(n)).collect();
        let dim = ages.len();
        let target = (0..dim).map(|j| (j + 1 < dim).then_some(j + 1)).collect();
        Self::assemble(SystemKind::Shift, window, basis, labels, ages, Vec::new(), target)
    }

    /// Baker map in its Walsh basis over coordinates `-m..=m`.
    pub fn baker(m: i64) -> Result<Self> {
        if !(1..=BAKER_MAX_M).contains(&m) {
            return Err(Error::BakerSize(m));
        }
        let window = AgeWindow::symmetric(m)?;
        let basis = BasisId::new(format!("baker[m={m}]"));
        let width = (2 * m + 1) as u32;
        let mut masks: Vec<u32> = (1u32..(1 << width)).collect();
        let age_of = |mask: u32| (31 - mask.leading_zeros()) as i64 - m;
        masks.sort_by_key(|&mask| (age_of(mask), mask));
        let ages: Vec<i64> = masks.iter().map(|&k| age_of(k)).collect();
        let labels = masks
            .iter()
            .map(|&k| {
                BasisLabel::Subset((0..width).filter(|b| k >> b & 1 == 1).map(|b| b as i64 - m).collect())
            })
            .collect();
        let position: HashMap<u32, usize> = masks.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let top = 1u32 << (width - 1);
        let target = masks
            .iter()
            .map(|&k| if k & top == 0 { Some(position[&(k << 1)]) } else { None })
            .collect();
        Ok(Self::assemble(SystemKind::Baker, window, basis, labels, ages, masks, target))
    }

    fn assemble(
        kind: SystemKind,
        window: AgeWindow,
        basis: BasisId,
        labels: Vec<BasisLabel>,
        ages: Vec<i64>,
        masks: Vec<u32>,
        target: Vec<Option<usize>>,
    ) -> Self {
        let dim = labels.len();
        let index = labels.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        let koopman = HOperator::monomial(basis.clone(), target, vec![S::one(); dim])
            .expect("targets inside the window");
        let time =
            HOperator::diagonal(basis.clone(), ages.iter().map(|&n| S::from_int(n)).collect());
        let projectors = window
            .ages()
            .map(|n| {
                let d = ages.iter().map(|&a| if a == n { S::one() } else { S::zero() }).collect();
                HOperator::diagonal(basis.clone(), d)
            })
            .collect();
        Self { kind, window, basis, labels, ages, masks, index, koopman, time, projectors }
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn window(&self) -> AgeWindow {
        self.window
    }

    pub fn basis(&self) -> &BasisId {
        &self.basis
    }

    /// Dimension of the fluctuation space.
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn ages(&self) -> &[i64] {
        &self.ages
    }

    pub fn age(&self, index: usize) -> i64 {
        self.ages[index]
    }

    pub fn index_of(&self, label: &BasisLabel) -> Option<usize> {
        let key = match label {
            BasisLabel::Subset(s) => {
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                BasisLabel::Subset(s)
            }
            other => other.clone(),
        };
        self.index.get(&key).copied()
    }

    /// Baker resolution `m`, if this is a baker system.
    pub fn baker_m(&self) -> Option<i64> {
        (self.kind == SystemKind::Baker).then_some(self.window.hi)
    }

    pub(crate) fn masks(&self) -> &[u32] {
        &self.masks
    }

    pub fn koopman(&self) -> &HOperator<S> {
        &self.koopman
    }

    pub fn time_operator(&self) -> &HOperator<S> {
        &self.time
    }

    /// `E({n})`, the projector onto the age-`n` eigenspace.
    pub fn projector(&self, age: i64) -> Option<&HOperator<S>> {
        if self.window.contains(age) {
            Some(&self.projectors[(age - self.window.lo) as usize])
        } else {
            None
        }
    }

    /// `E(Δ)` for a set of ages; ages outside the window contribute nothing.
    pub fn spectral_measure(&self, ages: &[i64]) -> HOperator<S> {
        let d = self
            .ages
            .iter()
            .map(|a| if ages.contains(a) { S::one() } else { S::zero() })
            .collect();
        HOperator::diagonal(self.basis.clone(), d)
    }

    /// `dim E({n})`.
    pub fn eigenspace_dim(&self, age: i64) -> usize {
        self.ages.iter().filter(|&&a| a == age).count()
    }

    /// Basis indices whose `U^t` image stays inside the window.
    pub fn interior_margin(&self, t: i64) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.in_margin(j, t)).collect()
    }

    pub fn in_margin(&self, index: usize, t: i64) -> bool {
        self.ages[index] <= self.window.hi - t
    }

    /// Indices whose age lies at least `t` away from both ends of the window.
    pub fn symmetric_interior(&self, t: i64) -> Vec<usize> {
        (0..self.dim())
            .filter(|&j| self.ages[j] >= self.window.lo + t && self.ages[j] <= self.window.hi - t)
            .collect()
    }

    /// Index reached from `index` after `t` Koopman steps, if it stays in the window.
    pub fn koopman_target(&self, index: usize, t: i64) -> Option<usize> {
        let (target, _) = self.koopman.monomial_columns().expect("koopman is monomial");
        let mut j = index;
        for _ in 0..t {
            j = target[j]?;
        }
        Some(j)
    }

    /// Rejects vectors with support outside `interior_margin(t)`.
    pub fn check_margin(&self, v: &HVector<S>, t: i64) -> Result<()> {
        let bad: Vec<String> =
            v.support().filter(|&j| !self.in_margin(j, t)).map(|j| self.labels[j].to_string()).collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Margin { t, labels: bad })
        }
    }

    /// `U^t v` for `t ≥ 0`, with `v` supported in the interior margin.
    pub fn koopman_power(&self, v: &HVector<S>, t: i64) -> Result<HVector<S>> {
        if t < 0 {
            return Err(Error::NegativeTime(t));
        }
        self.check_margin(v, t)?;
        let mut out = v.clone();
        for _ in 0..t {
            out = self.koopman.apply(&out)?;
        }
        Ok(out)
    }

    /// Max over interior basis vectors of `‖(U^t)† T U^t e_j − (T + t) e_j‖`.
    pub fn verify_covariance(&self, t: i64) -> S {
        if t < 0 {
            return S::nan();
        }
        let ut = self.koopman.power(t as u32).expect("same basis");
        let lhs = ut.adjoint().compose(&self.time).and_then(|x| x.compose(&ut)).expect("same basis");
        let shift = S::from_int(t);
        self.interior_margin(t)
            .into_iter()
            .map(|j| {
                let e = HVector::unit(self.basis.clone(), self.dim(), j);
                let mut rhs = self.time.apply(&e).expect("same basis");
                rhs.coeffs_mut()[j] = rhs.coeffs()[j] + shift;
                lhs.apply(&e).and_then(|l| l.sub(&rhs)).expect("same basis").norm()
            })
            .fold(S::zero(), S::max)
    }

    /// Imprimitivity of the age measure under `U^t`.
    ///
    /// With `U^t` raising age by `t`, covariance of `T` forces
    /// `U^t E(Δ) (U^t)† = E(Δ + t)` on the image of the interior, and
    /// equivalently `(U^t)† E(Δ) U^t = E(Δ − t)` on the interior margin.
    /// Both deviations are returned.
    pub fn verify_imprimitivity(&self, t: i64, delta: &[i64]) -> Result<ImprimitivityCheck<S>> {
        if t < 0 {
            return Err(Error::NegativeTime(t));
        }
        let ut = self.koopman.power(t as u32)?;
        let ut_adj = ut.adjoint();
        let e_delta = self.spectral_measure(delta);
        let shifted = |dt: i64| self.spectral_measure(&delta.iter().map(|a| a + dt).collect::<Vec<_>>());
        let pull = ut_adj.compose(&e_delta)?.compose(&ut)?;
        let push = ut.compose(&e_delta)?.compose(&ut_adj)?;
        let (e_minus, e_plus) = (shifted(-t), shifted(t));
        let mut pullback = S::zero();
        let mut pushforward = S::zero();
        for j in self.interior_margin(t) {
            let e = HVector::unit(self.basis.clone(), self.dim(), j);
            pullback = pullback.max(pull.apply(&e)?.sub(&e_minus.apply(&e)?)?.norm());
            let k = self.koopman_target(j, t).expect("interior image");
            let f = HVector::unit(self.basis.clone(), self.dim(), k);
            pushforward = pushforward.max(push.apply(&f)?.sub(&e_plus.apply(&f)?)?.norm());
        }
        Ok(ImprimitivityCheck { pullback, pushforward })
    }

    pub fn unit(&self, label: &BasisLabel) -> Result<HVector<S>> {
        let j = self
            .index_of(label)
            .ok_or_else(|| Error::Invalid(format!("label {label} not in basis {}", self.basis)))?;
        Ok(HVector::unit(self.basis.clone(), self.dim(), j))
    }

    pub fn zero_vector(&self) -> HVector<S> {
        HVector::zeros(self.basis.clone(), self.dim())
    }

    pub fn vector(&self, coeffs: Vec<S>) -> Result<HVector<S>> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: coeffs.len() });
        }
        Ok(HVector::new(self.basis.clone(), coeffs))
    }
}

/// Deviations of the two imprimitivity forms; both are zero for an exact construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImprimitivityCheck<S> {
    /// `max ‖((U^t)† E(Δ) U^t − E(Δ − t)) e_j‖` over the interior margin.
    pub pullback: S,
    /// `max ‖(U^t E(Δ) (U^t)† − E(Δ + t)) e_k‖` over the image of the margin.
    pub pushforward: S,
}

impl<S: Scalar> ImprimitivityCheck<S> {
    pub fn max(&self) -> S {
        self.pullback.max(self.pushforward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shift(lo: i64, hi: i64) -> CascadeSystem<f64> {
        CascadeSystem::shift(AgeWindow::new(lo, hi).unwrap())
    }

    fn subset(s: &[i64]) -> BasisLabel {
        BasisLabel::Subset(s.to_vec())
    }

    #[test]
    fn window_validation() {
        assert!(AgeWindow::new(-1, 1).is_ok());
        assert!(matches!(AgeWindow::new(0, 1), Err(Error::Window { .. })));
        assert!(matches!(AgeWindow::new(0, 3), Err(Error::Window { .. })));
        assert!(matches!(AgeWindow::new(-3, -1), Err(Error::Window { .. })));
    }

    #[test]
    fn shift_construction() {
        let sys = shift(-2, 2);
        assert_eq!(sys.dim(), 5);
        assert_eq!(sys.time_operator().diagonal_entries().unwrap(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let top = sys.unit(&BasisLabel::Age(2)).unwrap();
        assert_eq!(sys.koopman().apply(&top).unwrap().norm(), 0.0);
    }

    #[test]
    fn shift_pullback_of_age_one_is_age_zero() {
        // U raises age, so pulling E({1}) back through U lands on age 0.
        let sys = shift(-2, 2);
        let u = sys.koopman();
        let pulled = u.adjoint().compose(sys.projector(1).unwrap()).unwrap().compose(u).unwrap();
        for j in sys.interior_margin(1) {
            let e = HVector::unit(sys.basis().clone(), 5, j);
            assert_eq!(pulled.apply(&e).unwrap(), sys.projector(0).unwrap().apply(&e).unwrap());
        }
        let pushed = u.compose(sys.projector(0).unwrap()).unwrap().compose(&u.adjoint()).unwrap();
        let e1 = sys.unit(&BasisLabel::Age(1)).unwrap();
        assert_eq!(pushed.apply(&e1).unwrap(), e1);
    }

    #[test]
    fn baker_dimensions() {
        let sys = CascadeSystem::<f64>::baker(1).unwrap();
        assert_eq!(sys.dim(), 7);
        assert_eq!(sys.eigenspace_dim(1), 4);
        let mut age1: Vec<_> = (0..sys.dim()).filter(|&j| sys.age(j) == 1).map(|j| sys.labels()[j].clone()).collect();
        age1.sort_by_key(|l| l.to_string());
        let mut expected = vec![subset(&[1]), subset(&[0, 1]), subset(&[-1, 1]), subset(&[-1, 0, 1])];
        expected.sort_by_key(|l| l.to_string());
        assert_eq!(age1, expected);
        for m in 1..=4 {
            let sys = CascadeSystem::<f64>::baker(m).unwrap();
            assert_eq!(sys.dim(), (1 << (2 * m + 1)) - 1);
            for n in -m..=m {
                assert_eq!(sys.eigenspace_dim(n), 1 << (n + m));
            }
        }
    }

    #[test]
    fn baker_rejects_out_of_range() {
        assert_eq!(CascadeSystem::<f64>::baker(0).unwrap_err(), Error::BakerSize(0));
        assert_eq!(CascadeSystem::<f64>::baker(7).unwrap_err(), Error::BakerSize(7));
    }

    #[test]
    fn baker_koopman_shifts_index_sets() {
        let sys = CascadeSystem::<f64>::baker(1).unwrap();
        let v = sys.unit(&subset(&[0])).unwrap();
        assert_eq!(sys.koopman().apply(&v).unwrap(), sys.unit(&subset(&[1])).unwrap());
        let sys2 = CascadeSystem::<f64>::baker(2).unwrap();
        let v = sys2.unit(&subset(&[-1, 0])).unwrap();
        assert_eq!(sys2.koopman_power(&v, 1).unwrap(), sys2.unit(&subset(&[0, 1])).unwrap());
    }

    #[test]
    fn koopman_power_examples_and_margin() {
        let sys = shift(-3, 3);
        let e0 = sys.unit(&BasisLabel::Age(0)).unwrap();
        assert_eq!(sys.koopman_power(&e0, 0).unwrap(), e0);
        assert_eq!(sys.koopman_power(&e0, 2).unwrap(), sys.unit(&BasisLabel::Age(2)).unwrap());
        let e2 = sys.unit(&BasisLabel::Age(2)).unwrap();
        match sys.koopman_power(&e2, 2) {
            Err(Error::Margin { t: 2, labels }) => assert_eq!(labels, vec!["e2".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(sys.koopman_power(&e0, -1).unwrap_err(), Error::NegativeTime(-1));
    }

    #[test]
    fn covariance_is_exact() {
        let sys = shift(-4, 4);
        for t in 0..=3 {
            assert_eq!(sys.verify_covariance(t), 0.0);
        }
        let baker = CascadeSystem::<f64>::baker(1).unwrap();
        assert_eq!(baker.verify_covariance(1), 0.0);
        assert_eq!(baker.verify_covariance(0), 0.0);
    }

    #[test]
    fn projectors_partition_identity() {
        let sys = CascadeSystem::<f64>::baker(2).unwrap();
        let mut sum = HOperator::diagonal(sys.basis().clone(), vec![0.0; sys.dim()]);
        for n in sys.window().ages() {
            let e = sys.projector(n).unwrap();
            assert_eq!(e.compose(e).unwrap(), *e);
            for k in sys.window().ages().filter(|&k| k != n) {
                let prod = e.compose(sys.projector(k).unwrap()).unwrap();
                assert!(prod.diagonal_entries().unwrap().iter().all(|&x| x == 0.0));
            }
            sum = sum.add(e).unwrap();
        }
        assert_eq!(sum, HOperator::identity(sys.basis().clone(), sys.dim()));
        // T = Σ n E_n
        let mut t = HOperator::diagonal(sys.basis().clone(), vec![0.0; sys.dim()]);
        for n in sys.window().ages() {
            t = t.add(&sys.projector(n).unwrap().scale(n as f64)).unwrap();
        }
        assert_eq!(&t, sys.time_operator());
    }

    #[test]
    fn imprimitivity_both_forms_exact() {
        for sys in [shift(-4, 4), CascadeSystem::<f64>::baker(2).unwrap()] {
            let ages: Vec<i64> = sys.window().ages().collect();
            for t in 1..=2 {
                for &a in &ages {
                    for &b in &ages {
                        let delta = if a == b { vec![a] } else { vec![a, b] };
                        assert_eq!(sys.verify_imprimitivity(t, &delta).unwrap().max(), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn koopman_is_permutation_on_interior() {
        let sys = CascadeSystem::<f64>::baker(2).unwrap();
        let (target, weight) = sys.koopman().monomial_columns().unwrap();
        let mut hit = vec![false; sys.dim()];
        for j in sys.interior_margin(1) {
            let k = target[j].unwrap();
            assert_eq!(weight[j], 1.0);
            assert!(!hit[k]);
            hit[k] = true;
            assert_eq!(sys.age(k), sys.age(j) + 1);
        }
    }

    #[test]
    fn f32_covariance_is_exact() {
        let sys = CascadeSystem::<f32>::shift(AgeWindow::new(-3, 3).unwrap());
        assert_eq!(sys.verify_covariance(2), 0.0f32);
    }

    proptest! {
        #[test]
        fn koopman_preserves_inner_products(
            x in prop::collection::vec(-5.0f64..5.0, 6),
            y in prop::collection::vec(-5.0f64..5.0, 6),
            t in 0i64..3,
        ) {
            let sys = shift(-4, 4);
            let margin = sys.interior_margin(t);
            let embed = |c: &[f64]| {
                let mut v = sys.zero_vector();
                for (k, &j) in margin.iter().take(c.len()).enumerate() { v.coeffs_mut()[j] = c[k]; }
                v
            };
            let (u, v) = (embed(&x), embed(&y));
            let lhs = sys.koopman_power(&u, t).unwrap().inner(&sys.koopman_power(&v, t).unwrap()).unwrap();
            prop_assert!((lhs - u.inner(&v).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn mixing_surrogate_vanishes_past_support_diameter(
            x in prop::collection::vec(-5.0f64..5.0, 3),
            y in prop::collection::vec(-5.0f64..5.0, 3),
        ) {
            // u on ages -1..=1, v on ages -2..=0
            let sys = shift(-6, 6);
            let mut u = sys.zero_vector();
            let mut v = sys.zero_vector();
            for k in 0..3 {
                u.coeffs_mut()[sys.index_of(&BasisLabel::Age(k as i64 - 1)).unwrap()] = x[k];
                v.coeffs_mut()[sys.index_of(&BasisLabel::Age(k as i64 - 2)).unwrap()] = y[k];
            }
            for t in 4..=6 {
                prop_assert_eq!(u.inner(&sys.koopman_power(&v, t).unwrap()).unwrap(), 0.0);
            }
        }
    }
}
