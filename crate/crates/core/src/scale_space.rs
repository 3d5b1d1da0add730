//! Discretized sc-Hilbert spaces on truncated half-cylinders.
//!
//! An element of the space `E` is a pair `(u⁺, u⁻)` on `[0, s_max]×S¹` and
//! `[-s_max, 0]×S¹` sharing one asymptotic constant `c`. Internally only the
//! decaying parts `u± − c` are stored: the exponential weights amplify any
//! rounding in `u − c` by up to `e^{δ s_max}`, so the subtraction must never
//! happen in floating point.
//!
//! Level `m` carries the norm
//! `‖u‖_m² = Σ_{|α|≤m} ∫ |∂^α(u − c)|² e^{2δ_m|s|} + |c|²`,
//! with `t`-derivatives taken spectrally, `s`-derivatives by fourth-order
//! finite differences, trapezoid quadrature in `s` and the exact discrete
//! Parseval mean in `t`.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{interp_stencil, trapezoid_weights, DiffOperator, Spectral};

/// Largest admissible `δ_m · s_max`; beyond it `e^{2δ s}` leaves double range.
pub const WEIGHT_GUARD: f64 = 600.0;

/// Accuracy order of the `s`-derivative stencils used by the level norms.
pub const S_DIFF_ORDER: usize = 4;

/// Strictly increasing exponential weights `0 < δ_0 < δ_1 < … < 2π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightSequence {
    deltas: Vec<f64>,
}

impl WeightSequence {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidWeights("empty weight sequence".into()));
        }
        for (i, d) in deltas.iter().enumerate() {
            if !(*d > 0.0 && *d < 2.0 * PI) {
                return Err(Error::InvalidWeights(format!(
                    "delta_{i} = {d} is outside (0, 2π)"
                )));
            }
        }
        if deltas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidWeights("deltas are not strictly increasing".into()));
        }
        Ok(WeightSequence { deltas })
    }

    /// `δ_m = 2π(1 − 1/(m+2))`: π, 4π/3, 3π/2, 8π/5, …
    pub fn standard(m_max: usize) -> Self {
        WeightSequence {
            deltas: (0..=m_max)
                .map(|m| 2.0 * PI * (1.0 - 1.0 / (m as f64 + 2.0)))
                .collect(),
        }
    }

    pub fn m_max(&self) -> usize {
        self.deltas.len() - 1
    }

    pub fn delta(&self, m: usize) -> Result<f64> {
        self.deltas.get(m).copied().ok_or(Error::LevelOutOfRange {
            level: m,
            max: self.m_max(),
        })
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }
}

impl Default for WeightSequence {
    fn default() -> Self {
        WeightSequence::standard(3)
    }
}

/// Uniform `s` grid times an equispaced `t` grid on `S¹ = ℝ/ℤ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderGrid {
    pub s_max: f64,
    pub n_s: usize,
    pub n_t: usize,
}

impl CylinderGrid {
    pub fn new(s_max: f64, n_s: usize, n_t: usize) -> Result<Self> {
        let g = CylinderGrid { s_max, n_s, n_t };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s_max > 0.0 && self.s_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("s_max = {} must be positive", self.s_max)));
        }
        if self.n_t < 8 || !self.n_t.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n_t = {} must be even and >= 8", self.n_t)));
        }
        if self.n_s < 16 {
            return Err(Error::InvalidGrid(format!("n_s = {} must be >= 16", self.n_s)));
        }
        Ok(())
    }

    pub fn h_s(&self) -> f64 {
        self.s_max / (self.n_s - 1) as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 / self.n_t as f64
    }

    /// `s` coordinate of plus-sample `i` (`0 ≤ s ≤ s_max`).
    pub fn s_plus(&self, i: usize) -> f64 {
        i as f64 * self.h_s()
    }

    /// `s'` coordinate of minus-sample `i` (`-s_max ≤ s' ≤ 0`, ascending).
    pub fn s_minus(&self, i: usize) -> f64 {
        -self.s_max + i as f64 * self.h_s()
    }

    pub fn half_len(&self) -> usize {
        self.n_s * self.n_t
    }
}

impl Default for CylinderGrid {
    fn default() -> Self {
        CylinderGrid {
            s_max: 60.0,
            n_s: 3001,
            n_t: 16,
        }
    }
}

/// Which half-cylinder a sample array lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    Plus,
    Minus,
}

/// An element `(u⁺, u⁻)` of the scale space `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFunction {
    grid: CylinderGrid,
    weights: WeightSequence,
    c: Vec<f64>,
    /// `u⁺ − c`, layout `[(comp * n_s + i) * n_t + j]`.
    plus: Vec<f64>,
    /// `u⁻ − c`, same layout, `i` ascending in `s' ∈ [-s_max, 0]`.
    minus: Vec<f64>,
}

impl ScaleFunction {
    pub fn constant(grid: CylinderGrid, weights: WeightSequence, c: Vec<f64>) -> Self {
        let n = c.len() * grid.half_len();
        ScaleFunction {
            grid,
            weights,
            c,
            plus: vec![0.0; n],
            minus: vec![0.0; n],
        }
    }

    /// Build from closures returning the decaying parts `u± − c` at `(comp, s, t)`.
    pub fn from_decaying<P, M>(
        grid: CylinderGrid,
        weights: WeightSequence,
        c: Vec<f64>,
        plus: P,
        minus: M,
    ) -> Self
    where
        P: Fn(usize, f64, f64) -> f64,
        M: Fn(usize, f64, f64) -> f64,
    {
        let mut u = ScaleFunction::constant(grid, weights, c);
        for comp in 0..u.dim() {
            for i in 0..grid.n_s {
                for j in 0..grid.n_t {
                    let k = u.index(comp, i, j);
                    u.plus[k] = plus(comp, grid.s_plus(i), grid.t(j));
                    u.minus[k] = minus(comp, grid.s_minus(i), grid.t(j));
                }
            }
        }
        u
    }

    pub(crate) fn from_raw(
        grid: CylinderGrid,
        weights: WeightSequence,
        c: Vec<f64>,
        plus: Vec<f64>,
        minus: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(plus.len(), c.len() * grid.half_len());
        debug_assert_eq!(minus.len(), c.len() * grid.half_len());
        ScaleFunction {
            grid,
            weights,
            c,
            plus,
            minus,
        }
    }

    pub fn grid(&self) -> &CylinderGrid {
        &self.grid
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn asymptotic_constant(&self) -> &[f64] {
        &self.c
    }

    pub fn decaying(&self, half: Half) -> &[f64] {
        match half {
            Half::Plus => &self.plus,
            Half::Minus => &self.minus,
        }
    }

    #[inline]
    pub fn index(&self, comp: usize, i: usize, j: usize) -> usize {
        (comp * self.grid.n_s + i) * self.grid.n_t + j
    }

    /// Full value `u±(s_i, t_j)` of component `comp`.
    pub fn value(&self, half: Half, comp: usize, i: usize, j: usize) -> f64 {
        self.c[comp] + self.decaying(half)[self.index(comp, i, j)]
    }

    pub fn compatible(&self, other: &ScaleFunction) -> bool {
        self.grid == other.grid && self.dim() == other.dim()
    }

    fn check_compatible(&self, other: &ScaleFunction) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch("scale functions live on different grids".into()))
        }
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: f64, other: &ScaleFunction, beta: f64) -> Result<ScaleFunction> {
        self.check_compatible(other)?;
        let lin = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect()
        };
        Ok(ScaleFunction {
            grid: self.grid,
            weights: self.weights.clone(),
            c: lin(&self.c, &other.c),
            plus: lin(&self.plus, &other.plus),
            minus: lin(&self.minus, &other.minus),
        })
    }

    pub fn scaled(&self, lambda: f64) -> ScaleFunction {
        let s = |v: &[f64]| v.iter().map(|x| lambda * x).collect();
        ScaleFunction {
            grid: self.grid,
            weights: self.weights.clone(),
            c: s(&self.c),
            plus: s(&self.plus),
            minus: s(&self.minus),
        }
    }

    pub fn with_weights(mut self, weights: WeightSequence) -> Self {
        self.weights = weights;
        self
    }

    /// Random smooth element: random constant plus a few decaying Fourier
    /// modes `a e^{-λ|s|} cos(2πkt + φ)` with `λ` above every weight.
    pub fn random_smooth<R: Rng>(
        grid: CylinderGrid,
        weights: WeightSequence,
        dim: usize,
        rng: &mut R,
    ) -> Self {
        let lam_lo = weights.deltas().last().copied().unwrap_or(PI) + 0.5;
        let modes: Vec<Vec<(f64, f64, f64, f64)>> = (0..2 * dim)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        (
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(lam_lo..lam_lo + 2.0),
                            rng.gen_range(0..3) as f64,
                            rng.gen_range(0.0..2.0 * PI),
                        )
                    })
                    .collect()
            })
            .collect();
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eval = |set: &Vec<(f64, f64, f64, f64)>, s: f64, t: f64| -> f64 {
            set.iter()
                .map(|(a, lam, k, phi)| a * (-lam * s.abs()).exp() * (2.0 * PI * k * t + phi).cos())
                .sum()
        };
        ScaleFunction::from_decaying(
            grid,
            weights,
            c,
            |comp, s, t| eval(&modes[2 * comp], s, t),
            |comp, s, t| eval(&modes[2 * comp + 1], s, t),
        )
    }

    pub fn to_record(&self) -> ScaleFunctionRecord {
        ScaleFunctionRecord {
            grid: self.grid,
            deltas: self.weights.deltas().to_vec(),
            plus: self.plus.clone(),
            minus: self.minus.clone(),
            c: self.c.clone(),
            n: self.dim(),
        }
    }

    pub fn from_record(rec: ScaleFunctionRecord) -> Result<Self> {
        rec.grid.validate()?;
        let weights = WeightSequence::new(rec.deltas)?;
        let expected = rec.n * rec.grid.half_len();
        if rec.c.len() != rec.n || rec.plus.len() != expected || rec.minus.len() != expected {
            return Err(Error::GridMismatch(format!(
                "record sizes do not match N = {} on the stated grid",
                rec.n
            )));
        }
        Ok(ScaleFunction::from_raw(rec.grid, weights, rec.c, rec.plus, rec.minus))
    }
}

/// JSON record of a [`ScaleFunction`].
///
/// `plus`/`minus` hold the decaying parts `u± − c` in layout
/// `[(comp * n_s + i) * n_t + j]`, with minus samples ascending in `s'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFunctionRecord {
    pub grid: CylinderGrid,
    pub deltas: Vec<f64>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
}

impl Serialize for ScaleFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ScaleFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = ScaleFunctionRecord::deserialize(deserializer)?;
        ScaleFunction::from_record(rec).map_err(serde::de::Error::custom)
    }
}

/// One derivative order's share of a level norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderContribution {
    pub order: usize,
    /// `Σ_{|α| = order} ∫ |∂^α (u − c)|² e^{2δ|s|}`.
    pub contribution: f64,
    /// Same integral restricted to `|s| ∈ [s_max/2, s_max]`.
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelNormReport {
    pub level: usize,
    pub delta: f64,
    pub value: f64,
    pub constant_part: f64,
    pub breakdown: Vec<OrderContribution>,
    /// Tail share of the decaying part: `Σ tail / Σ contribution`.
    pub tail_fraction: f64,
    /// Set when the tail share exceeds [`TAIL_FLAG_FRACTION`]: the function
    /// does not decay fast enough for the truncation to be trusted.
    pub tail_flagged: bool,
}

pub const TAIL_FLAG_FRACTION: f64 = 1e-6;

impl LevelNormReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["level", "value", "order", "contribution"])?;
        for b in &self.breakdown {
            w.write_record([
                self.level.to_string(),
                format!("{:e}", self.value),
                b.order.to_string(),
                format!("{:e}", b.contribution),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `∂_s^a ∂_t^b` of one component of one half, same layout as a single component.
fn derivative_component(
    data: &[f64],
    grid: &CylinderGrid,
    a: usize,
    b: u32,
    sdiff: &DiffOperator,
    spectral: &Spectral,
) -> Vec<f64> {
    let (n_s, n_t) = (grid.n_s, grid.n_t);
    let mut out = data.to_vec();
    if b > 0 {
        for row in out.chunks_mut(n_t) {
            spectral.derivative(row, b);
        }
    }
    let mut tmp = vec![0.0; out.len()];
    for _ in 0..a {
        for j in 0..n_t {
            sdiff.apply_strided(&out, &mut tmp, j, n_t);
        }
        std::mem::swap(&mut out, &mut tmp);
    }
    debug_assert_eq!(out.len(), n_s * n_t);
    out
}

fn check_level(weights: &WeightSequence, grid: &CylinderGrid, m: usize) -> Result<f64> {
    let delta = weights.delta(m)?;
    guard(delta, grid.s_max)?;
    Ok(delta)
}

fn guard(delta: f64, s_max: f64) -> Result<()> {
    let product = delta * s_max;
    if product >= WEIGHT_GUARD {
        return Err(Error::OverflowGuard {
            product,
            limit: WEIGHT_GUARD,
        });
    }
    Ok(())
}

/// Per-order weighted integrals of `⟨∂^α u, ∂^α v⟩` over both halves.
/// Returns `(total, tail)` per order `0..=m`.
fn weighted_order_integrals(
    u: &ScaleFunction,
    v: &ScaleFunction,
    m: usize,
    delta: f64,
) -> Vec<(f64, f64)> {
    let grid = u.grid;
    let (n_s, n_t) = (grid.n_s, grid.n_t);
    let h = grid.h_s();
    let sdiff = DiffOperator::new(n_s, h, S_DIFF_ORDER);
    let spectral = Spectral::new(n_t);
    let trap = trapezoid_weights(n_s, h);
    let same = std::ptr::eq(u, v);
    let mut result = vec![(0.0, 0.0); m + 1];
    for half in [Half::Plus, Half::Minus] {
        let s_of = |i: usize| match half {
            Half::Plus => grid.s_plus(i),
            Half::Minus => grid.s_minus(i),
        };
        let qw: Vec<f64> = (0..n_s)
            .map(|i| trap[i] * (2.0 * delta * s_of(i).abs()).exp() / n_t as f64)
            .collect();
        let in_tail: Vec<bool> = (0..n_s).map(|i| s_of(i).abs() >= 0.5 * grid.s_max).collect();
        for comp in 0..u.dim() {
            let range = comp * n_s * n_t..(comp + 1) * n_s * n_t;
            let du_src = &u.decaying(half)[range.clone()];
            let dv_src = &v.decaying(half)[range];
            for order in 0..=m {
                for a in 0..=order {
                    let b = (order - a) as u32;
                    let du = derivative_component(du_src, &grid, a, b, &sdiff, &spectral);
                    let dv = if same {
                        du.clone()
                    } else {
                        derivative_component(dv_src, &grid, a, b, &sdiff, &spectral)
                    };
                    for i in 0..n_s {
                        let row: f64 = (0..n_t).map(|j| du[i * n_t + j] * dv[i * n_t + j]).sum();
                        let val = qw[i] * row;
                        result[order].0 += val;
                        if in_tail[i] {
                            result[order].1 += val;
                        }
                    }
                }
            }
        }
    }
    result
}

/// Level-`m` norm with an explicit weight `delta ≥ 0` (diagnostic variant
/// that also admits the unweighted case `delta = 0`).
pub fn norm_with_delta(u: &ScaleFunction, m: usize, delta: f64) -> Result<LevelNormReport> {
    if delta < 0.0 {
        return Err(Error::InvalidWeights(format!("delta = {delta} is negative")));
    }
    guard(delta, u.grid.s_max)?;
    let orders = weighted_order_integrals(u, u, m, delta);
    let constant_part: f64 = u.c.iter().map(|x| x * x).sum();
    let decaying: f64 = orders.iter().map(|o| o.0).sum();
    let tail: f64 = orders.iter().map(|o| o.1).sum();
    let tail_fraction = if decaying > 0.0 { tail / decaying } else { 0.0 };
    Ok(LevelNormReport {
        level: m,
        delta,
        value: (decaying + constant_part).sqrt(),
        constant_part,
        breakdown: orders
            .into_iter()
            .enumerate()
            .map(|(order, (contribution, tail))| OrderContribution {
                order,
                contribution,
                tail,
            })
            .collect(),
        tail_fraction,
        tail_flagged: tail_fraction > TAIL_FLAG_FRACTION,
    })
}

/// Quadrature approximation of the weighted Sobolev norm `‖u‖_m`.
pub fn norm_at_level(u: &ScaleFunction, m: usize) -> Result<LevelNormReport> {
    let delta = check_level(&u.weights, &u.grid, m)?;
    norm_with_delta(u, m, delta)
}

/// Inner product matching [`norm_at_level`].
pub fn inner_at_level(u: &ScaleFunction, v: &ScaleFunction, m: usize) -> Result<f64> {
    u.check_compatible(v)?;
    let delta = check_level(&u.weights, &u.grid, m)?;
    let orders = weighted_order_integrals(u, v, m, delta);
    let cc: f64 = u.c.iter().zip(&v.c).map(|(a, b)| a * b).sum();
    Ok(orders.iter().map(|o| o.0).sum::<f64>() + cc)
}

/// Level-`m` distance `‖u − v‖_m`.
pub fn distance_at_level(u: &ScaleFunction, v: &ScaleFunction, m: usize) -> Result<f64> {
    Ok(norm_at_level(&u.combine(1.0, v, -1.0)?, m)?.value)
}

/// Translation `u(s + t0)` along the cylinder, treating `(u⁻, u⁺)` as one
/// function on `[-s_max, s_max]` split at `s = 0`. Values are resampled with
/// the quintic interpolant of the half the source point lies in; sources
/// beyond the truncation read the asymptotic constant.
pub fn shift_action(t0: f64, u: &ScaleFunction) -> Result<ScaleFunction> {
    let grid = u.grid;
    if t0.abs() >= grid.s_max / 4.0 {
        return Err(Error::MarginExceeded(format!(
            "|t0| = {} must stay below s_max/4 = {}",
            t0.abs(),
            grid.s_max / 4.0
        )));
    }
    if t0 == 0.0 {
        return Ok(u.clone());
    }
    let (n_s, n_t) = (grid.n_s, grid.n_t);
    let h = grid.h_s();
    let sample = |data: &[f64], comp: usize, x0: f64, x: f64, j: usize| -> f64 {
        let st = interp_stencil(x, x0, h, n_s);
        st.eval_strided(data, comp * n_s * n_t + j, n_t)
    };
    let source = |comp: usize, s: f64, j: usize| -> f64 {
        if s.abs() > grid.s_max + 1e-12 {
            0.0
        } else if s >= 0.0 {
            sample(&u.plus, comp, 0.0, s, j)
        } else {
            sample(&u.minus, comp, -grid.s_max, s, j)
        }
    };
    let mut plus = vec![0.0; u.plus.len()];
    let mut minus = vec![0.0; u.minus.len()];
    for comp in 0..u.dim() {
        for i in 0..n_s {
            for j in 0..n_t {
                let k = u.index(comp, i, j);
                plus[k] = source(comp, grid.s_plus(i) + t0, j);
                minus[k] = source(comp, grid.s_minus(i) + t0, j);
            }
        }
    }
    Ok(ScaleFunction::from_raw(grid, u.weights.clone(), u.c.clone(), plus, minus))
}

/// Compactness diagnostic for the embedding `E_{m+1} → E_m`.
///
/// Greedily selects `net_size` members (largest remaining level-`m` distance
/// to the span of those already chosen) and returns the largest remaining
/// distance. Members must be bounded by one at level `m + 1`.
pub fn level_embedding_gap(family: &[ScaleFunction], m: usize, net_size: usize) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::DomainError("empty family".into()));
    }
    for (k, u) in family.iter().enumerate() {
        let n1 = norm_at_level(u, m + 1)?.value;
        if n1 > 1.0 + 1e-9 {
            return Err(Error::DomainError(format!(
                "member {k} has level-{} norm {n1:.4} > 1; families bounded only at level {m} are unsupported",
                m + 1
            )));
        }
    }
    let k = family.len();
    let mut gram = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let g = inner_at_level(&family[a], &family[b], m)?;
            gram[a][b] = g;
            gram[b][a] = g;
        }
    }
    // pivoted Cholesky: residual[i] is the squared distance to the current span
    let mut residual: Vec<f64> = (0..k).map(|i| gram[i][i]).collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut factors: Vec<Vec<f64>> = Vec::new();
    for _ in 0..net_size.min(k) {
        let (p, &rp) = residual
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        if rp <= 0.0 {
            break;
        }
        let mut col = vec![0.0; k];
        for i in 0..k {
            let mut v = gram[i][p];
            for f in &factors {
                v -= f[i] * f[p];
            }
            col[i] = v / rp.sqrt();
        }
        for i in 0..k {
            residual[i] = (residual[i] - col[i] * col[i]).max(0.0);
        }
        residual[p] = 0.0;
        chosen.push(p);
        factors.push(col);
    }
    Ok(residual
        .iter()
        .enumerate()
        .filter(|(i, _)| !chosen.contains(i))
        .map(|(_, r)| r.sqrt())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_grid() -> CylinderGrid {
        CylinderGrid::new(8.0, 801, 8).unwrap()
    }

    #[test]
    fn weights_validate() {
        assert!(WeightSequence::new(vec![1.0, 0.5]).is_err());
        assert!(WeightSequence::new(vec![1.0, 7.0]).is_err());
        let w = WeightSequence::standard(3);
        assert!((w.delta(3).unwrap() - 8.0 * PI / 5.0).abs() < 1e-15);
        assert!(matches!(w.delta(4), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn grid_validates() {
        assert!(CylinderGrid::new(10.0, 16, 7).is_err());
        assert!(CylinderGrid::new(10.0, 15, 8).is_err());
        assert!(CylinderGrid::new(-1.0, 16, 8).is_err());
    }

    #[test]
    fn constant_norm_is_euclidean() {
        let u = ScaleFunction::constant(small_grid(), WeightSequence::default(), vec![3.0, 4.0]);
        for m in 0..=3 {
            assert!((norm_at_level(&u, m).unwrap().value - 5.0).abs() < 1e-14);
        }
    }

    #[test]
    fn overflow_guard_trips() {
        let g = CylinderGrid::new(200.0, 64, 8).unwrap();
        let u = ScaleFunction::constant(g, WeightSequence::default(), vec![1.0]);
        assert!(matches!(norm_at_level(&u, 0), Err(Error::OverflowGuard { .. })));
    }

    #[test]
    fn shift_zero_and_constant_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = ScaleFunction::random_smooth(small_grid(), WeightSequence::default(), 1, &mut rng);
        assert_eq!(shift_action(0.0, &u).unwrap(), u);
        let c = ScaleFunction::constant(small_grid(), WeightSequence::default(), vec![2.0]);
        assert_eq!(shift_action(0.7, &c).unwrap(), c);
        assert!(matches!(shift_action(2.5, &c), Err(Error::MarginExceeded(_))));
    }

    #[test]
    fn embedding_gap_single_member_is_zero() {
        let g = small_grid();
        let w = WeightSequence::default();
        let u = ScaleFunction::from_decaying(g, w, vec![0.0], |_, s, t| 0.01 * (-6.0 * s).exp() * (2.0 * PI * t).sin(), |_, _, _| 0.0);
        assert_eq!(level_embedding_gap(&[u], 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn csv_has_expected_columns() {
        let u = ScaleFunction::constant(small_grid(), WeightSequence::default(), vec![1.0]);
        let rep = norm_at_level(&u, 2).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("level,value,order,contribution"));
        assert_eq!(text.lines().count(), 4);
    }
}
