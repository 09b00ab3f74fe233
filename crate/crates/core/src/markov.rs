//! The semigroup `W_t = Λ U_t Λ^{-1}`, its Lyapunov functional, and
//! empirical positivity and time-asymmetry probes.
//!
//! `W_t` sends the coefficient at age `n` to age `n + t` with weight
//! `λ(n+t)/λ(n)`. That ratio is applied from a log table; `Λ^{-1}` is never
//! formed.

use std::sync::Arc;

use serde::Serialize;

use crate::cascade::{grid_to_walsh, walsh_to_grid, BlockVector, CascadeSystem, GridDensity};
use crate::error::{Error, Result};
use crate::hilbert::{HOperator, HVector};
use crate::lambda::LambdaOperator;
use crate::scalar::{log_sum_exp, relative_gap, Scalar};

/// Tolerance for the two sides of `‖W_t ρ‖² = ⟨ρ_t | Λ² ρ_t⟩`.
pub const LYAPUNOV_TOL: f64 = 1e-10;

/// Immutable log-ratio table for `W_t`, `0 ≤ t ≤ max_t`.
#[derive(Clone, Debug)]
pub struct MarkovEvolution<S> {
    lambda: Arc<LambdaOperator<S>>,
    max_t: i64,
    /// `weights[t][n - lo] = ln λ(n+t) − ln λ(n)`, `None` once `n + t` leaves the window.
    weights: Vec<Vec<Option<S>>>,
}

impl<S: Scalar> MarkovEvolution<S> {
    pub fn new(lambda: Arc<LambdaOperator<S>>, max_t: i64) -> Result<Self> {
        if max_t < 0 {
            return Err(Error::NegativeTime(max_t));
        }
        let w = lambda.system().window();
        let mut weights = Vec::with_capacity(max_t as usize + 1);
        for t in 0..=max_t {
            let row: Vec<Option<S>> = w
                .ages()
                .map(|n| w.contains(n + t).then(|| lambda.log_lambda(n + t) - lambda.log_lambda(n)))
                .collect();
            if let Some(n) = row.iter().position(|x| x.is_some_and(|l| l > S::zero())) {
                return Err(Error::NotAdmissible(format!(
                    "ratio λ({})/λ({}) exceeds 1",
                    w.lo() + n as i64 + t,
                    w.lo() + n as i64
                )));
            }
            weights.push(row);
        }
        Ok(Self { lambda, max_t, weights })
    }

    pub fn lambda(&self) -> &Arc<LambdaOperator<S>> {
        &self.lambda
    }

    pub fn system(&self) -> &CascadeSystem<S> {
        self.lambda.system()
    }

    pub fn max_t(&self) -> i64 {
        self.max_t
    }

    /// `ln(λ(n+t)/λ(n))`, from the table when `t ≤ max_t`.
    pub fn log_weight(&self, age: i64, t: i64) -> Option<S> {
        let w = self.system().window();
        if !w.contains(age) || !w.contains(age + t) {
            return None;
        }
        match self.weights.get(t as usize) {
            Some(row) if t >= 0 => row[(age - w.lo()) as usize],
            _ => Some(self.lambda.log_lambda(age + t) - self.lambda.log_lambda(age)),
        }
    }

    fn check_vector(&self, v: &HVector<S>) -> Result<()> {
        let sys = self.system();
        if v.basis() != sys.basis() {
            return Err(Error::Basis { left: sys.basis().to_string(), right: v.basis().to_string() });
        }
        if v.dim() != sys.dim() {
            return Err(Error::Dimension { expected: sys.dim(), got: v.dim() });
        }
        Ok(())
    }
}

/// `W_t ρ` for `t ≥ 0`, `ρ` supported in the interior margin.
pub fn markov_step<S: Scalar>(ev: &MarkovEvolution<S>, rho: &HVector<S>, t: i64) -> Result<HVector<S>> {
    if t < 0 {
        return Err(Error::NegativeTime(t));
    }
    ev.check_vector(rho)?;
    let sys = ev.system();
    sys.check_margin(rho, t)?;
    let mut out = sys.zero_vector();
    for j in rho.support() {
        let target = sys.koopman_target(j, t).expect("margin checked");
        let w = ev.log_weight(sys.age(j), t).expect("margin checked");
        out.coeffs_mut()[target] = out.coeffs()[target] + rho.coeffs()[j] * w.exp();
    }
    Ok(out)
}

/// `(I ⊕ W_t)` on a block state: the equilibrium part is fixed.
pub fn block_step<S: Scalar>(ev: &MarkovEvolution<S>, state: &BlockVector<S>, t: i64) -> Result<BlockVector<S>> {
    Ok(BlockVector::new(state.equilibrium, markov_step(ev, &state.fluctuation, t)?))
}

/// `Λ U^t Λ^{-1} ρ` as explicit matrix products. Fails when an entry of
/// `Λ^{-1}` on the support of `ρ` would exceed the log cap.
pub fn matrix_step<S: Scalar>(ev: &MarkovEvolution<S>, rho: &HVector<S>, t: i64) -> Result<HVector<S>> {
    if t < 0 {
        return Err(Error::NegativeTime(t));
    }
    ev.check_vector(rho)?;
    let sys = ev.system();
    sys.check_margin(rho, t)?;
    let cap = S::log_cap();
    for j in rho.support() {
        let w = -ev.lambda.log_diag()[j];
        if w > cap {
            return Err(Error::OutsideDomain {
                log_weight: w.as_f64(),
                cap: cap.as_f64(),
                context: format!("Λ^-1 at {}", sys.labels()[j]),
            });
        }
    }
    let inv = HOperator::diagonal(sys.basis().clone(), ev.lambda.log_diag().iter().map(|&l| (-l).exp()).collect());
    let op = ev.lambda.matrix().compose(&sys.koopman().power(t as u32)?)?.compose(&inv)?;
    op.apply(rho)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovTrace<S> {
    pub t_values: Vec<i64>,
    /// `‖W_t ρ‖`.
    pub norms: Vec<S>,
    /// `⟨ρ_t | Λ² ρ_t⟩` with `ρ_t = U^t Λ^{-1} ρ`, evaluated in log form.
    pub lyapunov_form: Vec<S>,
    /// Largest relative gap between `norms[t]²` and `lyapunov_form[t]`.
    pub max_form_gap: S,
    pub form_agrees: bool,
    pub monotone: bool,
    pub ratio_to_zero: S,
}

/// `‖W_t ρ‖` for `t = 0..=max_t`, cross-checked against the Lyapunov form.
pub fn lyapunov_trace<S: Scalar>(ev: &MarkovEvolution<S>, rho: &HVector<S>, max_t: i64) -> Result<LyapunovTrace<S>> {
    if max_t < 0 {
        return Err(Error::NegativeTime(max_t));
    }
    ev.check_vector(rho)?;
    let sys = ev.system();
    sys.check_margin(rho, max_t)?;
    let log_diag = ev.lambda.log_diag();
    let two = S::lit(2.0);
    let mut trace = LyapunovTrace {
        t_values: (0..=max_t).collect(),
        norms: Vec::new(),
        lyapunov_form: Vec::new(),
        max_form_gap: S::zero(),
        form_agrees: true,
        monotone: true,
        ratio_to_zero: S::zero(),
    };
    for t in 0..=max_t {
        let norm = markov_step(ev, rho, t)?.norm();
        // ρ_t carries ln|ρ_j| − ln λ(age_j) at the target; Λ² adds 2 ln λ(age_target)
        let form = log_sum_exp(rho.support().map(|j| {
            let target = sys.koopman_target(j, t).expect("margin checked");
            let log_rho_t = rho.coeffs()[j].abs().ln() - log_diag[j];
            two * log_rho_t + two * log_diag[target]
        }))
        .exp();
        let gap = relative_gap(norm * norm, form);
        trace.max_form_gap = trace.max_form_gap.max(gap);
        trace.norms.push(norm);
        trace.lyapunov_form.push(form);
    }
    trace.form_agrees = trace.max_form_gap <= S::lit(LYAPUNOV_TOL);
    // allow a few ulps: the scaled norm may round differently between steps
    let slack = S::one() + S::lit(4.0) * S::epsilon();
    trace.monotone = trace.norms.windows(2).all(|w| w[1] <= w[0] * slack);
    let (first, last) = (trace.norms[0], *trace.norms.last().expect("t = 0 present"));
    trace.ratio_to_zero = if first > S::zero() { last / first } else { S::zero() };
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityReport<S> {
    pub t: i64,
    pub input_min: S,
    pub input_mass: S,
    /// Input was a nonnegative unit-mass density.
    pub precondition_ok: bool,
    pub min_cell: S,
    /// `max(0, −min_cell)`.
    pub violation: S,
    pub mass_after: S,
}

/// Minimum cell value of `W_t ρ` for a grid density on a baker system.
pub fn positivity_probe<S: Scalar>(
    ev: &MarkovEvolution<S>,
    rho: &GridDensity<S>,
    t: i64,
) -> Result<PositivityReport<S>> {
    let sys = ev.system();
    let block = grid_to_walsh(sys, rho)?;
    let evolved = walsh_to_grid(sys, &block_step(ev, &block, t)?)?;
    let (input_min, input_mass) = (rho.min(), rho.mass());
    let min_cell = evolved.min();
    Ok(PositivityReport {
        t,
        input_min,
        input_mass,
        precondition_ok: input_min >= S::zero() && (input_mass - S::one()).abs() <= S::lit(1e-12),
        min_cell,
        violation: (-min_cell).max(S::zero()),
        mass_after: evolved.mass(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymmetryReport<S> {
    pub t: i64,
    /// `max_n ln(λ(n+t)/λ(n))`; at most 0.
    pub forward_log_factor: S,
    /// `max_n ln(λ(n−t)/λ(n))` and the age where it occurs.
    pub backward_log_factor: S,
    pub backward_age: i64,
    /// `ln(‖W_t ρ‖ / ‖ρ‖)`.
    pub forward_log_gain: S,
    /// Same for the backward table applied to the part of `ρ` it can reach.
    pub backward_log_gain: S,
    /// Some of `ρ` sat within `t` of the lower end and was dropped backward.
    pub backward_truncated: bool,
}

/// Contrasts the forward contraction with the attempted backward family
/// `λ(n−t)/λ(n)`, whose factors grow without bound as the window widens.
pub fn asymmetry_probe<S: Scalar>(ev: &MarkovEvolution<S>, rho: &HVector<S>, t: i64) -> Result<AsymmetryReport<S>> {
    if t < 0 {
        return Err(Error::NegativeTime(t));
    }
    ev.check_vector(rho)?;
    let sys = ev.system();
    let w = sys.window();
    let lam = &ev.lambda;
    let forward_log_factor = w
        .ages()
        .filter(|&n| w.contains(n + t))
        .map(|n| lam.log_lambda(n + t) - lam.log_lambda(n))
        .fold(S::neg_infinity(), S::max);
    let (backward_age, backward_log_factor) = w
        .ages()
        .filter(|&n| w.contains(n - t))
        .map(|n| (n, lam.log_lambda(n - t) - lam.log_lambda(n)))
        .fold((w.lo(), S::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });

    let log_rho = S::lit(0.5) * log_sum_exp(rho.support().map(|j| S::lit(2.0) * rho.coeffs()[j].abs().ln()));
    let forward_log_gain = markov_step(ev, rho, t)?.norm().ln() - log_rho;
    let mut truncated = false;
    let back_terms: Vec<S> = rho
        .support()
        .filter_map(|j| {
            let n = sys.age(j);
            if !w.contains(n - t) {
                truncated = true;
                return None;
            }
            let lw = lam.log_lambda(n - t) - lam.log_lambda(n);
            Some(S::lit(2.0) * (rho.coeffs()[j].abs().ln() + lw))
        })
        .collect();
    let backward_log_gain = S::lit(0.5) * log_sum_exp(back_terms) - log_rho;
    let gain = |g: S| if g.is_finite() { g } else { S::zero() };
    Ok(AsymmetryReport {
        t,
        forward_log_factor,
        backward_log_factor,
        backward_age,
        forward_log_gain: gain(forward_log_gain),
        backward_log_gain: gain(backward_log_gain),
        backward_truncated: truncated,
    })
}
