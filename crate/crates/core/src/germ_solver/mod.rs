//! Basic germs `w ↦ w − B(r, w)` on the periodic line scale, solved level by
//! level with Banach iteration.

pub mod filling;
pub mod fredholm;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sc_check::{LineSpace, MAX_LINE_LEVEL};

pub use filling::{check_filling, standard_filler, FillingReport, LinearFillingData};
pub use fredholm::{fredholm_index, FredholmIndexReport, LinearScFredholm, SVD_RANK_TAU};

/// Random pairs drawn per level when measuring `ε`.
pub const EPSILON_SAMPLES: usize = 24;
pub const DEFAULT_GERM_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GermKind {
    /// `B(r, w) = ½ w + Σ r_i g_i`.
    Linear,
    /// `B(r, w) = ¼ sin(w) + Σ r_i g_i`, pointwise.
    Sine,
    /// `B(r, w) = S(½ w + Σ r_i g_i)` with `S = (1 − ∂²)^{−2}`.
    Smoothing,
    /// `B(r, w) = 0.3 tanh(w) + Σ r_i g_i`, pointwise.
    TanhReference,
}

impl GermKind {
    pub fn name(&self) -> &'static str {
        match self {
            GermKind::Linear => "linear",
            GermKind::Sine => "sine",
            GermKind::Smoothing => "smoothing",
            GermKind::TanhReference => "custom-ref",
        }
    }
}

/// A basic germ with parameter dimension `n = directions.len()`.
#[derive(Debug, Clone)]
pub struct BasicGerm {
    kind: GermKind,
    space: LineSpace,
    directions: Vec<Vec<f64>>,
    /// `w`-ball radius per level, shrinking with the level.
    radii: Vec<f64>,
    param_radius: f64,
    seed: u64,
}

impl BasicGerm {
    pub fn new(kind: GermKind, space: LineSpace, directions: Vec<Vec<f64>>, param_radius: f64, seed: u64) -> Result<Self> {
        if directions.is_empty() || directions.iter().any(|g| g.len() != space.len()) {
            return Err(Error::DomainError("germ directions must be non-empty and live on the line grid".into()));
        }
        if !(param_radius > 0.0) {
            return Err(Error::DomainError("parameter radius must be positive".into()));
        }
        Ok(BasicGerm {
            kind,
            space,
            directions,
            radii: (0..=MAX_LINE_LEVEL).map(|m| 0.5f64.powi(m as i32)).collect(),
            param_radius,
            seed,
        })
    }

    /// One-parameter germ with a fixed-seed direction: smooth for the
    /// pointwise germs, level-0-only for the smoothing germ.
    pub fn standard(kind: GermKind, space: LineSpace, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g0 = match kind {
            GermKind::Smoothing => space.rough_probe(&mut rng),
            _ => space.smooth_probe(&mut rng),
        };
        BasicGerm::new(kind, space, vec![g0], 1.0, seed).expect("standard germ")
    }

    pub fn kind(&self) -> GermKind {
        self.kind
    }

    pub fn space(&self) -> &LineSpace {
        &self.space
    }

    pub fn param_dim(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn radius(&self, level: usize) -> f64 {
        self.radii[level.min(MAX_LINE_LEVEL)]
    }

    pub fn param_radius(&self) -> f64 {
        self.param_radius
    }

    /// `Σ r_i g_i`.
    pub fn forcing(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.space.len()];
        for (ri, g) in r.iter().zip(&self.directions) {
            if *ri != 0.0 {
                out.iter_mut().zip(g).for_each(|(o, v)| *o += ri * v);
            }
        }
        out
    }

    pub fn eval(&self, r: &[f64], w: &[f64]) -> Vec<f64> {
        let f = self.forcing(r);
        match self.kind {
            GermKind::Linear => w.iter().zip(&f).map(|(w, f)| 0.5 * w + f).collect(),
            GermKind::Sine => w.iter().zip(&f).map(|(w, f)| 0.25 * w.sin() + f).collect(),
            GermKind::TanhReference => w.iter().zip(&f).map(|(w, f)| 0.3 * w.tanh() + f).collect(),
            GermKind::Smoothing => {
                let inner: Vec<f64> = w.iter().zip(&f).map(|(w, f)| 0.5 * w + f).collect();
                self.space.apply_multiplier(&inner, |om| 1.0 / (1.0 + om * om).powi(2))
            }
        }
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level > MAX_LINE_LEVEL {
            return Err(Error::LevelOutOfRange {
                level,
                max: MAX_LINE_LEVEL,
            });
        }
        Ok(())
    }

    fn check_param(&self, r: &[f64]) -> Result<()> {
        if r.len() != self.param_dim() {
            return Err(Error::DomainError(format!("parameter has {} entries, germ expects {}", r.len(), self.param_dim())));
        }
        Ok(())
    }

    /// `max ‖B(r, w) − B(r, w')‖_m / ‖w − w'‖_m` over fixed-seed random
    /// pairs in the level-`m` ball, with smooth and rough differences.
    pub fn measured_epsilon(&self, r: &[f64], level: usize) -> Result<f64> {
        self.check_level(level)?;
        self.check_param(r)?;
        let radius = self.radius(level);
        let sp = &self.space;
        let ratios: Vec<f64> = (0..EPSILON_SAMPLES)
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(31).wrapping_add(i as u64 * 7919 + level as u64));
                let mut w = sp.smooth_probe(&mut rng);
                let wn = sp.norm(&w, level)?;
                let scale = rng.gen_range(0.0..radius) / wn.max(f64::MIN_POSITIVE);
                w.iter_mut().for_each(|v| *v *= scale);
                let mut d = if i % 2 == 0 { sp.smooth_probe(&mut rng) } else { sp.rough_probe(&mut rng) };
                let dn = sp.norm(&d, level)?;
                let size = rng.gen_range(0.01..0.5) * radius / dn.max(f64::MIN_POSITIVE);
                d.iter_mut().for_each(|v| *v *= size);
                let w2: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + b).collect();
                let diff: Vec<f64> = self.eval(r, &w).iter().zip(self.eval(r, &w2)).map(|(a, b)| a - b).collect();
                Ok(sp.norm(&diff, level)? / sp.norm(&d, level)?)
            })
            .collect::<Result<_>>()?;
        Ok(ratios.into_iter().fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub level: usize,
    pub iterations: usize,
    /// `‖δ − B(a, δ)‖_m`.
    pub residual: f64,
    /// Geometric mean of successive increment ratios.
    pub rate: f64,
    pub epsilon: f64,
}

/// Banach iteration `w_{k+1} = B(a, w_k)` from `w_0 = 0`.
pub fn contract_solve(g: &BasicGerm, a: &[f64], level: usize, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveDiagnostics)> {
    contract_solve_from(g, a, level, tol, max_iter, &vec![0.0; g.space.len()])
}

/// Banach iteration from an arbitrary start.
pub fn contract_solve_from(
    g: &BasicGerm,
    a: &[f64],
    level: usize,
    tol: f64,
    max_iter: usize,
    start: &[f64],
) -> Result<(Vec<f64>, SolveDiagnostics)> {
    g.check_level(level)?;
    g.check_param(a)?;
    if !(tol > 0.0) {
        return Err(Error::DomainError(format!("tolerance {tol} must be positive")));
    }
    let a_norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if a_norm > g.param_radius {
        // contraction is only verified on the stated neighbourhood
        return Err(Error::NoContraction { rate: f64::INFINITY });
    }
    let epsilon = g.measured_epsilon(a, level)?;
    if epsilon >= 1.0 {
        return Err(Error::NoContraction { rate: epsilon });
    }
    let sp = &g.space;
    let mut w = start.to_vec();
    let mut increments: Vec<f64> = Vec::new();
    for k in 1..=max_iter {
        let next = g.eval(a, &w);
        let diff: Vec<f64> = next.iter().zip(&w).map(|(x, y)| x - y).collect();
        let inc = sp.norm(&diff, level)?;
        increments.push(inc);
        w = next;
        if increments.len() >= 4 {
            let n = increments.len();
            // growth beyond the first step, not a stall at the rounding floor
            if increments[n - 1] > increments[n - 2] && increments[n - 2] > increments[n - 3] && inc > increments[0] {
                return Err(Error::NoContraction {
                    rate: increments[n - 1] / increments[n - 2],
                });
            }
        }
        if inc < tol {
            let after = g.eval(a, &w);
            let res: Vec<f64> = w.iter().zip(&after).map(|(x, y)| x - y).collect();
            let rate = geometric_rate(&increments);
            return Ok((
                w,
                SolveDiagnostics {
                    level,
                    iterations: k,
                    residual: sp.norm(&res, level)?,
                    rate,
                    epsilon,
                },
            ));
        }
    }
    Err(Error::MaxIterExceeded(max_iter))
}

/// Increments below this fraction of the first one are treated as rounding
/// noise: higher-level norms amplify it by `ω^{2m}`.
const RATE_WINDOW: f64 = 1e-8;

fn geometric_rate(increments: &[f64]) -> f64 {
    let floor = increments.first().map_or(0.0, |f| RATE_WINDOW * f);
    let positive: Vec<f64> = increments
        .iter()
        .cloned()
        .take_while(|v| *v > 0.0 && *v >= floor)
        .collect();
    if positive.len() < 2 {
        return 0.0;
    }
    let first = positive[0];
    let last = *positive.last().unwrap();
    (last / first).powf(1.0 / (positive.len() - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCoherenceReport {
    pub levels: Vec<usize>,
    pub tol: f64,
    pub diagnostics: Vec<SolveDiagnostics>,
    /// `‖δ_m‖_k` for `k = 0..=3`, one row per solved level.
    pub solution_norms: Vec<Vec<f64>>,
    /// `(m, m', ‖δ_m − δ_m'‖_0)`.
    pub pairwise: Vec<(usize, usize, f64)>,
    pub max_distance: f64,
    pub coherent: bool,
}

/// Solve independently at each level and compare the solutions at level 0.
pub fn level_coherence_check(g: &BasicGerm, a: &[f64], levels: &[usize], tol: f64) -> Result<LevelCoherenceReport> {
    let solved: Vec<(Vec<f64>, SolveDiagnostics)> = levels
        .iter()
        .map(|&m| contract_solve(g, a, m, tol, 10_000))
        .collect::<Result<_>>()?;
    let sp = &g.space;
    let mut pairwise = Vec::new();
    for i in 0..solved.len() {
        for j in i + 1..solved.len() {
            let d: Vec<f64> = solved[i].0.iter().zip(&solved[j].0).map(|(x, y)| x - y).collect();
            pairwise.push((levels[i], levels[j], sp.norm(&d, 0)?));
        }
    }
    let solution_norms = solved
        .iter()
        .map(|(w, _)| (0..=MAX_LINE_LEVEL).map(|k| sp.norm(w, k)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let max_distance = pairwise.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(LevelCoherenceReport {
        levels: levels.to_vec(),
        tol,
        diagnostics: solved.into_iter().map(|s| s.1).collect(),
        solution_norms,
        pairwise,
        coherent: max_distance <= 2.0 * tol,
        max_distance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GermSample {
    pub a: Vec<f64>,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessDiagnostic {
    /// `max_j ‖δ_{j+1} − 2δ_j + δ_{j−1}‖_0`.
    pub max_second_difference: f64,
    /// `(D(4h) − D(2h)) / (D(2h) − D(h))` for centred quotients at the middle sample.
    pub richardson_ratio: Option<f64>,
}

/// `a ↦ δ(a)` on a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionGerm {
    pub level: usize,
    pub tol: f64,
    pub samples: Vec<GermSample>,
    #[serde(skip)]
    pub values: Vec<Option<Vec<f64>>>,
    pub smoothness: Option<SmoothnessDiagnostic>,
}

/// Solve at every grid parameter; failures are recorded per sample.
pub fn solution_germ_sample(g: &BasicGerm, grid: &[Vec<f64>], level: usize, tol: f64) -> Result<SolutionGerm> {
    g.check_level(level)?;
    let results: Vec<Result<(Vec<f64>, SolveDiagnostics)>> =
        grid.par_iter().map(|a| contract_solve(g, a, level, tol, 10_000)).collect();
    let mut samples = Vec::with_capacity(grid.len());
    let mut values = Vec::with_capacity(grid.len());
    for (a, res) in grid.iter().zip(results) {
        match res {
            Ok((w, d)) => {
                samples.push(GermSample {
                    a: a.clone(),
                    iterations: Some(d.iterations),
                    residual: Some(d.residual),
                    error: None,
                });
                values.push(Some(w));
            }
            Err(e) => {
                samples.push(GermSample {
                    a: a.clone(),
                    iterations: None,
                    residual: None,
                    error: Some(e.to_string()),
                });
                values.push(None);
            }
        }
    }
    let smoothness = smoothness(g, grid, &values)?;
    Ok(SolutionGerm {
        level,
        tol,
        samples,
        values,
        smoothness,
    })
}

/// Only for one-parameter, uniformly spaced grids without failures.
fn smoothness(g: &BasicGerm, grid: &[Vec<f64>], values: &[Option<Vec<f64>>]) -> Result<Option<SmoothnessDiagnostic>> {
    if grid.len() < 3 || grid.iter().any(|a| a.len() != 1) || values.iter().any(|v| v.is_none()) {
        return Ok(None);
    }
    let h = grid[1][0] - grid[0][0];
    let uniform = grid.windows(2).all(|p| ((p[1][0] - p[0][0]) - h).abs() <= 1e-12 * h.abs().max(1.0));
    if !uniform || h == 0.0 {
        return Ok(None);
    }
    let sp = &g.space;
    let v: Vec<&Vec<f64>> = values.iter().map(|v| v.as_ref().unwrap()).collect();
    let mut max_second: f64 = 0.0;
    for j in 1..v.len() - 1 {
        let d2: Vec<f64> = (0..sp.len()).map(|i| v[j + 1][i] - 2.0 * v[j][i] + v[j - 1][i]).collect();
        max_second = max_second.max(sp.norm(&d2, 0)?);
    }
    let mid = v.len() / 2;
    let richardson_ratio = if v.len() % 2 == 1 && mid >= 4 {
        let quotient = |k: usize| -> Vec<f64> {
            (0..sp.len())
                .map(|i| (v[mid + k][i] - v[mid - k][i]) / (2.0 * k as f64 * h))
                .collect()
        };
        let (d1, d2, d4) = (quotient(1), quotient(2), quotient(4));
        let num: Vec<f64> = d4.iter().zip(&d2).map(|(a, b)| a - b).collect();
        let den: Vec<f64> = d2.iter().zip(&d1).map(|(a, b)| a - b).collect();
        let dn = sp.norm(&den, 0)?;
        if dn > 0.0 {
            Some(sp.norm(&num, 0)? / dn)
        } else {
            None
        }
    } else {
        None
    };
    Ok(Some(SmoothnessDiagnostic {
        max_second_difference: max_second,
        richardson_ratio,
    }))
}

/// Scalar oracle: the root of `x − ¼ sin x − c` by bisection on `[c − ¼, c + ¼]`.
pub fn sine_fixed_point_scalar(c: f64) -> f64 {
    let f = |x: f64| x - 0.25 * x.sin() - c;
    let (mut lo, mut hi) = (c - 0.25, c + 0.25);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> LineSpace {
        LineSpace::new(8.0, 256).unwrap()
    }

    #[test]
    fn linear_germ_closed_form() {
        let g = BasicGerm::standard(GermKind::Linear, space(), 3);
        let a = [0.3];
        let (w, d) = contract_solve(&g, &a, 1, 1e-14, 1000).unwrap();
        let g0 = &g.directions()[0];
        let err = w.iter().zip(g0).map(|(w, g)| (w - 0.6 * g).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err:e}");
        assert!(d.residual <= 1e-14);
        assert!((d.epsilon - 0.5).abs() < 1e-12);
        assert!(d.rate <= d.epsilon + 0.05);
    }

    #[test]
    fn zero_parameter_terminates_immediately() {
        for kind in [GermKind::Linear, GermKind::Sine, GermKind::Smoothing, GermKind::TanhReference] {
            let g = BasicGerm::standard(kind, space(), 1);
            let (w, d) = contract_solve(&g, &[0.0], 0, 1e-12, 10).unwrap();
            assert_eq!(d.iterations, 1);
            assert!(w.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn sine_matches_scalar_oracle() {
        let g = BasicGerm::standard(GermKind::Sine, space(), 4);
        let a = [0.7];
        let (w, d) = contract_solve(&g, &a, 0, 1e-13, 1000).unwrap();
        let f = g.forcing(&a);
        let err = w.iter().zip(&f).map(|(w, c)| (w - sine_fixed_point_scalar(*c)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err:e}");
        assert!(d.rate <= d.epsilon + 0.05);
    }

    #[test]
    fn outside_neighbourhood_is_recorded() {
        let g = BasicGerm::standard(GermKind::Linear, space(), 3);
        let grid = vec![vec![0.0], vec![2.0]];
        let s = solution_germ_sample(&g, &grid, 0, 1e-12).unwrap();
        assert!(s.samples[0].error.is_none());
        assert!(s.samples[1].error.as_deref().unwrap().contains("no contraction"));
    }

    #[test]
    fn uniqueness_from_two_starts() {
        let g = BasicGerm::standard(GermKind::TanhReference, space(), 6);
        let tol = 1e-12;
        let (w1, _) = contract_solve(&g, &[0.4], 0, tol, 1000).unwrap();
        let start: Vec<f64> = g.directions()[0].iter().map(|v| -0.3 * v).collect();
        let (w2, _) = contract_solve_from(&g, &[0.4], 0, tol, 1000, &start).unwrap();
        let d: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a - b).collect();
        assert!(g.space().norm(&d, 0).unwrap() <= 2.0 * tol);
    }

    #[test]
    fn smoothing_germ_gains_regularity() {
        let g = BasicGerm::standard(GermKind::Smoothing, space(), 2);
        let rep = level_coherence_check(&g, &[0.5], &[0], 1e-12).unwrap();
        let norms = &rep.solution_norms[0];
        assert!(norms[3].is_finite() && norms[3] < 10.0 * norms[0]);
        let g0 = &g.directions()[0];
        let sp = g.space();
        // the forcing itself is much rougher
        assert!(sp.norm(g0, 3).unwrap() > 100.0 * sp.norm(g0, 0).unwrap());
    }

    #[test]
    fn germ_smoothness_diagnostics() {
        let grid: Vec<Vec<f64>> = (-4..=4).map(|j| vec![0.3 + 0.02 * j as f64]).collect();
        let lin = solution_germ_sample(&BasicGerm::standard(GermKind::Linear, space(), 3), &grid, 0, 1e-14).unwrap();
        assert!(lin.smoothness.as_ref().unwrap().max_second_difference <= 1e-10);
        let sine = solution_germ_sample(&BasicGerm::standard(GermKind::Sine, space(), 3), &grid, 0, 1e-14).unwrap();
        let ratio = sine.smoothness.unwrap().richardson_ratio.unwrap();
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn levels_agree() {
        let g = BasicGerm::standard(GermKind::Sine, space(), 5);
        let rep = level_coherence_check(&g, &[0.6], &[0, 1, 2], 1e-10).unwrap();
        assert!(rep.coherent, "{:?}", rep.pairwise);
        let lin = level_coherence_check(&BasicGerm::standard(GermKind::Linear, space(), 5), &[0.6], &[0, 1, 2, 3], 1e-13).unwrap();
        assert!(lin.max_distance <= 1e-12);
    }
}
