//! Pointwise realization of baker-system states on the dyadic grid.
//!
//! A cell of the `2^{m+1} × 2^m` grid fixes one binary digit `ω_i` per
//! coordinate `i ∈ [-m, m]`: the `x` digits are `ω_0 ω_{-1} … ω_{-m}` and the
//! `y` digits are `ω_1 ω_2 … ω_m`. The Rademacher function `r_i` is `+1` when
//! `ω_i = 0` and `-1` otherwise, and `χ_S = Π_{i∈S} r_i`. Under this digit
//! layout the baker map shifts digit indices down by one, so its Koopman
//! operator `ρ ↦ ρ ∘ B^{-1}` sends `χ_S` to `χ_{S+1}`.

use serde::Serialize;

use super::{CascadeSystem, SystemKind};
use crate::error::{Error, Result};
use crate::hilbert::HVector;
use crate::scalar::Scalar;

/// In-place unnormalized Walsh–Hadamard transform over bitmask order:
/// `out[ω] = Σ_S in[S] · (−1)^{|S ∧ ω|}`.
pub fn fwht<S: Scalar>(data: &mut [S]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "transform length must be a power of two");
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (data[i], data[i + h]);
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Density sampled on the dyadic cells of the unit square, row-major in `y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridDensity<S> {
    m: i64,
    values: Vec<S>,
}

impl<S: Scalar> GridDensity<S> {
    pub fn new(m: i64, values: Vec<S>) -> Result<Self> {
        let expected = 1usize << (2 * m + 1);
        if values.len() != expected {
            return Err(Error::Dimension { expected, got: values.len() });
        }
        Ok(Self { m, values })
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    /// Cells along `x`.
    pub fn width(&self) -> usize {
        1 << (self.m + 1)
    }

    /// Cells along `y`.
    pub fn height(&self) -> usize {
        1 << self.m
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn value(&self, ix: usize, iy: usize) -> S {
        self.values[iy * self.width() + ix]
    }

    /// Integral over the unit square: the mean cell value.
    pub fn mass(&self) -> S {
        let n = S::from_int(self.values.len() as i64);
        self.values.iter().copied().sum::<S>() / n
    }

    pub fn min(&self) -> S {
        self.values.iter().copied().fold(S::infinity(), S::min)
    }

    /// Digit bitmask of cell `(ix, iy)`: bit `i + m` holds `ω_i`.
    pub fn cell_mask(&self, ix: usize, iy: usize) -> u32 {
        cell_mask(self.m, ix, iy)
    }

    /// Values reindexed by digit bitmask.
    fn by_mask(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.values.len()];
        for iy in 0..self.height() {
            for ix in 0..self.width() {
                out[self.cell_mask(ix, iy) as usize] = self.value(ix, iy);
            }
        }
        out
    }

    fn from_mask_values(m: i64, by_mask: &[S]) -> Self {
        let (w, h) = (1usize << (m + 1), 1usize << m);
        let mut values = vec![S::zero(); w * h];
        for iy in 0..h {
            for ix in 0..w {
                values[iy * w + ix] = by_mask[cell_mask(m, ix, iy) as usize];
            }
        }
        Self { m, values }
    }

    /// Exact finite baker map on cells: `ρ ↦ ρ ∘ B^{-t}`, where `B^{-1}`
    /// shifts digits up and wraps `ω_{m+1}` onto `ω_{-m}`, making it a
    /// permutation of the grid.
    pub fn koopman(&self, t: u32) -> Self {
        let width = (2 * self.m + 1) as u32;
        let src = self.by_mask();
        let rot = |w: u32| (w >> 1) | ((w & 1) << (width - 1));
        let mut out = vec![S::zero(); src.len()];
        for (w, slot) in out.iter_mut().enumerate() {
            let mut pre = w as u32;
            for _ in 0..t {
                pre = rot(pre);
            }
            *slot = src[pre as usize];
        }
        Self::from_mask_values(self.m, &out)
    }
}

fn cell_mask(m: i64, ix: usize, iy: usize) -> u32 {
    let m = m as u32;
    // x digit at bit b of ix is coordinate b - m; y digit at bit c of iy is coordinate m - c.
    let mut mask = ix as u32;
    for c in 0..m {
        if iy >> c & 1 == 1 {
            mask |= 1 << (2 * m - c);
        }
    }
    mask
}

/// Equilibrium scalar plus fluctuation coefficients: the split `𝒟 ⊕ ℒ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector<S> {
    pub equilibrium: S,
    pub fluctuation: HVector<S>,
}

impl<S: Scalar> BlockVector<S> {
    pub fn new(equilibrium: S, fluctuation: HVector<S>) -> Self {
        Self { equilibrium, fluctuation }
    }

    pub fn equilibrium(system: &CascadeSystem<S>) -> Self {
        Self::new(S::one(), system.zero_vector())
    }
}

fn require_baker<S: Scalar>(system: &CascadeSystem<S>) -> Result<i64> {
    match system.kind() {
        SystemKind::Baker => Ok(system.window().hi()),
        SystemKind::Shift => Err(Error::NotBaker),
    }
}

/// Evaluates `equilibrium + Σ c_S χ_S` on every cell.
pub fn walsh_to_grid<S: Scalar>(
    system: &CascadeSystem<S>,
    state: &BlockVector<S>,
) -> Result<GridDensity<S>> {
    let m = require_baker(system)?;
    if state.fluctuation.basis() != system.basis() {
        return Err(Error::Basis {
            left: system.basis().to_string(),
            right: state.fluctuation.basis().to_string(),
        });
    }
    let mut data = vec![S::zero(); 1 << (2 * m + 1)];
    data[0] = state.equilibrium;
    for (&mask, &c) in system.masks().iter().zip(state.fluctuation.coeffs()) {
        data[mask as usize] = c;
    }
    fwht(&mut data);
    Ok(GridDensity::from_mask_values(m, &data))
}

/// Walsh coefficients `c_S = mean(ρ χ_S)`, with `c_∅` as the equilibrium part.
pub fn grid_to_walsh<S: Scalar>(
    system: &CascadeSystem<S>,
    grid: &GridDensity<S>,
) -> Result<BlockVector<S>> {
    let m = require_baker(system)?;
    if grid.m() != m {
        return Err(Error::Invalid(format!("grid resolution m = {} does not match system m = {m}", grid.m())));
    }
    let mut data = grid.by_mask();
    fwht(&mut data);
    let n = S::from_int(data.len() as i64);
    let coeffs = system.masks().iter().map(|&mask| data[mask as usize] / n).collect();
    Ok(BlockVector::new(data[0] / n, HVector::new(system.basis().clone(), coeffs)))
}
