//! Numerical sc-differentiability tests on the periodic line scale.
//!
//! Limits are replaced by dyadic scale sequences; verdicts are evidence for
//! (or against) a property on the grid, not proofs.

pub mod map;
pub mod space;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use map::{tangent_map, ScMap, TangentMap};
pub use space::{LinePoint, LineSpace, MAX_LINE_LEVEL};

/// Final remainder ratio required for a pass.
pub const SC1_TOLERANCE: f64 = 1e-3;
/// Minimum number of scales for a monotone verdict.
pub const MIN_SCALES: usize = 4;
/// Output norms above this count as a blow-up.
pub const BLOW_UP_GUARD: f64 = 1e12;
/// Ratios below this are treated as exact zeros.
const RATIO_FLOOR: f64 = 1e-11;
/// Step of the five-point difference quotient, relative to `‖k‖_0`.
pub const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// `t_k = 2^{−k}` for `k = 2..=8`.
pub fn dyadic_scales() -> Vec<f64> {
    (2..=8).map(|k| 0.5f64.powi(k)).collect()
}

/// Pass: strictly decreasing over at least [`MIN_SCALES`] scales and a final
/// ratio below `tol`. Fail: the last ratio is at least half the first.
pub fn classify_ratios(ratios: &[f64], tol: f64) -> Verdict {
    if ratios.len() < MIN_SCALES {
        return Verdict::Inconclusive;
    }
    let monotone = ratios
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] <= RATIO_FLOOR && w[1] <= RATIO_FLOOR));
    let last = *ratios.last().unwrap();
    if monotone && last < tol {
        Verdict::Pass
    } else if last >= 0.5 * ratios[0] {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// A labelled direction `k = (τ, h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub label: String,
    pub point: LinePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sc0Level {
    pub level: usize,
    pub deltas: Vec<f64>,
    /// `max_i ‖f(x_i + δ d_i) − f(x_i)‖_m` for unit `d_i`.
    pub moduli: Vec<f64>,
    pub max_output_norm: f64,
    pub blow_up: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sc0Report {
    pub map: String,
    pub levels: Vec<Sc0Level>,
    pub pass: bool,
}

/// Level-wise modulus of continuity of `f` from probe pairs.
pub fn check_sc0(space: &LineSpace, f: &ScMap, probes: &[LinePoint], levels: &[usize]) -> Result<Sc0Report> {
    if probes.is_empty() {
        return Err(Error::DomainError("sc0 check needs at least one probe".into()));
    }
    let deltas = dyadic_scales();
    let mut out = Vec::with_capacity(levels.len());
    for &m in levels {
        if m > f.max_level() {
            return Err(Error::LevelOutOfRange {
                level: m,
                max: f.max_level(),
            });
        }
        let mut moduli = vec![0.0f64; deltas.len()];
        let mut max_output: f64 = 0.0;
        for (i, x) in probes.iter().enumerate() {
            let d = if probes.len() > 1 {
                probes[(i + 1) % probes.len()].sub(x)
            } else {
                x.clone()
            };
            let dn = space.point_norm(&d, m)?;
            if dn == 0.0 {
                continue;
            }
            let d = d.scaled(1.0 / dn);
            let fx = f.eval(space, x);
            max_output = max_output.max(space.point_norm(&fx, m)?);
            for (slot, delta) in moduli.iter_mut().zip(&deltas) {
                let fy = f.eval(space, &x.axpy(*delta, &d));
                let ny = space.point_norm(&fy, m)?;
                max_output = max_output.max(ny);
                *slot = slot.max(space.point_norm(&fy.sub(&fx), m)?);
            }
        }
        let blow_up = !max_output.is_finite() || max_output > BLOW_UP_GUARD || moduli.iter().any(|v| !v.is_finite());
        let first = moduli[0];
        let last = *moduli.last().unwrap();
        let pass = !blow_up && (first <= RATIO_FLOOR || last <= 0.25 * first);
        out.push(Sc0Level {
            level: m,
            deltas: deltas.clone(),
            moduli,
            max_output_norm: max_output,
            blow_up,
            pass,
        });
    }
    Ok(Sc0Report {
        map: f.name(),
        pass: out.iter().all(|l| l.pass),
        levels: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeSource {
    Analytic,
    Secant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sc1Options {
    pub scales: Vec<f64>,
    /// Fall back to difference quotients when no analytic derivative exists.
    pub allow_secant: bool,
    /// `‖x‖_1 + t_max·‖k‖_1` must stay below this, if set.
    pub domain_radius: Option<f64>,
}

impl Default for Sc1Options {
    fn default() -> Self {
        Sc1Options {
            scales: dyadic_scales(),
            allow_secant: false,
            domain_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sc1Report {
    pub map: String,
    pub x_level: usize,
    pub derivative: DerivativeSource,
    pub directions: Vec<String>,
    pub scales: Vec<f64>,
    /// `sup_k ‖f(x + t k) − f(x) − Df(x)(t k)‖_0 / (t‖k‖_1)` per scale.
    pub ratios: Vec<f64>,
    /// Same remainder over `t‖k‖_0`.
    pub classical_ratios: Vec<f64>,
    pub per_direction: Vec<Vec<f64>>,
    pub per_direction_classical: Vec<Vec<f64>>,
    pub verdict: Verdict,
    pub classical_verdict: Verdict,
}

/// Remainder ratios of `f` at `x` along `directions` over the option scales.
pub fn check_sc1(
    space: &LineSpace,
    f: &ScMap,
    x: &LinePoint,
    x_level: usize,
    directions: &[Direction],
    options: &Sc1Options,
) -> Result<Sc1Report> {
    if x_level < 1 || x_level > f.max_level() {
        return Err(Error::LevelOutOfRange {
            level: x_level,
            max: f.max_level(),
        });
    }
    if directions.is_empty() || options.scales.is_empty() {
        return Err(Error::DomainError("sc1 check needs directions and scales".into()));
    }
    let source = if f.has_derivative() {
        DerivativeSource::Analytic
    } else if options.allow_secant {
        DerivativeSource::Secant
    } else {
        return Err(Error::DerivativeMissing(f.name()));
    };
    if let Some(radius) = options.domain_radius {
        let t_max = options.scales.iter().cloned().fold(0.0, f64::max);
        let xn = space.point_norm(x, 1)?;
        for d in directions {
            let reach = xn + t_max * space.point_norm(&d.point, 1)?;
            if reach >= radius {
                return Err(Error::MarginExceeded(format!(
                    "direction `{}` reaches {reach:.3} beyond the domain radius {radius}",
                    d.label
                )));
            }
        }
    }
    let fx = f.eval(space, x);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = directions
        .par_iter()
        .map(|d| -> Result<(Vec<f64>, Vec<f64>)> {
            let k = &d.point;
            let dk = match source {
                DerivativeSource::Analytic => f.derivative(space, x, k).expect("registered derivative"),
                DerivativeSource::Secant => f.finite_difference(space, x, k, FD_STEP)?,
            };
            let n1 = space.point_norm(k, 1)?;
            let n0 = space.point_norm(k, 0)?;
            if n0 == 0.0 {
                return Err(Error::DomainError(format!("direction `{}` is zero", d.label)));
            }
            let mut sc = Vec::with_capacity(options.scales.len());
            let mut cl = Vec::with_capacity(options.scales.len());
            for &t in &options.scales {
                let fy = f.eval(space, &x.axpy(t, k));
                let rem = fy.sub(&fx).axpy(-t, &dk);
                let r = space.point_norm(&rem, 0)?;
                if !r.is_finite() {
                    return Err(Error::MarginExceeded(format!("non-finite remainder along `{}`", d.label)));
                }
                sc.push(r / (t * n1));
                cl.push(r / (t * n0));
            }
            Ok((sc, cl))
        })
        .collect::<Result<_>>()?;
    let sup = |pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> Vec<f64> {
        (0..options.scales.len())
            .map(|i| rows.iter().map(|r| pick(r)[i]).fold(0.0, f64::max))
            .collect()
    };
    let ratios = sup(|r| &r.0);
    let classical_ratios = sup(|r| &r.1);
    Ok(Sc1Report {
        map: f.name(),
        x_level,
        derivative: source,
        directions: directions.iter().map(|d| d.label.clone()).collect(),
        scales: options.scales.clone(),
        verdict: classify_ratios(&ratios, SC1_TOLERANCE),
        classical_verdict: classify_ratios(&classical_ratios, SC1_TOLERANCE),
        ratios,
        classical_ratios,
        per_direction: rows.iter().map(|r| r.0.clone()).collect(),
        per_direction_classical: rows.into_iter().map(|r| r.1).collect(),
    })
}

/// `|τ|` of every rough probe.
pub const ROUGH_TAU: f64 = 0.15;

/// Directions `(τ, h_j)` with `h_j` the fixed-seed dyadic rough bands and
/// `|τ| = ROUGH_TAU` of random sign.
pub fn rough_probe_suite(space: &LineSpace, seed: u64) -> Vec<Direction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bands = space.rough_bands(&mut rng);
    bands
        .into_iter()
        .enumerate()
        .map(|(j, h)| {
            let tau = if rng.gen_bool(0.5) { ROUGH_TAU } else { -ROUGH_TAU };
            Direction {
                label: format!("rough-band-{j}"),
                point: LinePoint { t: tau, u: h },
            }
        })
        .collect()
}

/// `count` smooth directions `(τ, h)` with `h` a low-frequency trigonometric polynomial.
pub fn smooth_probe_suite(space: &LineSpace, seed: u64, count: usize) -> Vec<Direction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| Direction {
            label: format!("smooth-{i}"),
            point: LinePoint {
                t: rng.gen_range(-0.5..0.5),
                u: space.smooth_probe(&mut rng),
            },
        })
        .collect()
}

/// A smooth base point `(t, u)` drawn from `seed`.
pub fn smooth_base_point(space: &LineSpace, seed: u64) -> LinePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    LinePoint {
        t: rng.gen_range(-1.0..1.0),
        u: space.smooth_probe(&mut rng),
    }
}

/// The shift map at a smooth base point along the rough-probe suite.
pub fn shift_flagship(space: &LineSpace, seed: u64) -> Result<Sc1Report> {
    let x = smooth_base_point(space, seed);
    check_sc1(space, &ScMap::Shift, &x, 1, &rough_probe_suite(space, seed), &Sc1Options::default())
}

/// Largest relative disagreement between the five-point difference quotient
/// and the analytic derivative.
pub fn derivative_agreement(space: &LineSpace, f: &ScMap, x: &LinePoint, directions: &[Direction]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for d in directions {
        let exact = f.derivative(space, x, &d.point).ok_or_else(|| Error::DerivativeMissing(f.name()))?;
        let fd = f.finite_difference(space, x, &d.point, FD_STEP)?;
        let scale = space.point_norm(&exact, 0)?.max(f64::MIN_POSITIVE);
        worst = worst.max(space.point_norm(&fd.sub(&exact), 0)? / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRuleReport {
    pub outer: String,
    pub inner: String,
    pub per_direction: Vec<f64>,
    /// `max ‖T(g∘f)(x, h) − (Tg∘Tf)(x, h)‖_0` relative to the right-hand side.
    pub residual: f64,
}

/// Compare the difference quotient of `g∘f` with `Tg∘Tf`.
pub fn chain_rule_check(
    space: &LineSpace,
    f: &ScMap,
    g: &ScMap,
    x: &LinePoint,
    directions: &[Direction],
) -> Result<ChainRuleReport> {
    let tf = tangent_map(f)?;
    let tg = tangent_map(g)?;
    let composite = ScMap::compose(g.clone(), f.clone());
    let mut per_direction = Vec::with_capacity(directions.len());
    for d in directions {
        let (y, dy) = tf.apply(space, x, 1, &d.point, 0)?;
        let (z, dz) = tg.apply(space, &y, 1, &dy, 0)?;
        let value_gap = space.point_norm(&composite.eval(space, x).sub(&z), 0)?;
        let fd = composite.finite_difference(space, x, &d.point, FD_STEP)?;
        let scale = space.point_norm(&dz, 0)?.max(f64::MIN_POSITIVE);
        per_direction.push(value_gap.max(space.point_norm(&fd.sub(&dz), 0)? / scale));
    }
    Ok(ChainRuleReport {
        outer: g.name(),
        inner: f.name(),
        residual: per_direction.iter().cloned().fold(0.0, f64::max),
        per_direction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> LineSpace {
        LineSpace::new(8.0, 512).unwrap()
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(classify_ratios(&[1e-2, 5e-3, 2e-3, 9e-4], 1e-3), Verdict::Pass);
        assert_eq!(classify_ratios(&[0.3, 0.3, 0.31, 0.3], 1e-3), Verdict::Fail);
        assert_eq!(classify_ratios(&[0.3, 0.2, 0.1, 0.05], 1e-3), Verdict::Inconclusive);
        assert_eq!(classify_ratios(&[0.0; 5], 1e-3), Verdict::Pass);
        assert_eq!(classify_ratios(&[1e-5; 3], 1e-3), Verdict::Inconclusive);
    }

    #[test]
    fn linear_map_has_zero_remainder() {
        let sp = space();
        let x = smooth_base_point(&sp, 3);
        let dirs = smooth_probe_suite(&sp, 4, 3);
        let rep = check_sc1(&sp, &ScMap::FixedShift { by: 0.7 }, &x, 1, &dirs, &Sc1Options::default()).unwrap();
        assert!(rep.ratios.iter().all(|r| *r < 1e-12), "{:?}", rep.ratios);
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn shift_at_smooth_point_passes() {
        let sp = space();
        let x = smooth_base_point(&sp, 3);
        let dirs = smooth_probe_suite(&sp, 4, 3);
        let rep = check_sc1(&sp, &ScMap::Shift, &x, 1, &dirs, &Sc1Options::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{:?}", rep.ratios);
        assert!(derivative_agreement(&sp, &ScMap::Shift, &x, &dirs).unwrap() < 1e-5);
        assert!(derivative_agreement(&sp, &ScMap::Square, &x, &dirs).unwrap() < 1e-5);
    }

    #[test]
    fn missing_derivative_and_margin() {
        let sp = space();
        let x = smooth_base_point(&sp, 3);
        let dirs = smooth_probe_suite(&sp, 4, 2);
        let f = ScMap::SineReference;
        assert!(matches!(
            check_sc1(&sp, &f, &x, 1, &dirs, &Sc1Options::default()),
            Err(Error::DerivativeMissing(_))
        ));
        let opts = Sc1Options {
            allow_secant: true,
            ..Default::default()
        };
        let rep = check_sc1(&sp, &f, &x, 1, &dirs, &opts).unwrap();
        assert_eq!(rep.derivative, DerivativeSource::Secant);
        assert_eq!(rep.verdict, Verdict::Pass);
        let tight = Sc1Options {
            domain_radius: Some(0.1),
            ..Default::default()
        };
        assert!(matches!(
            check_sc1(&sp, &ScMap::Shift, &x, 1, &dirs, &tight),
            Err(Error::MarginExceeded(_))
        ));
        assert!(check_sc1(&sp, &ScMap::Shift, &x, 0, &dirs, &Sc1Options::default()).is_err());
    }

    #[test]
    fn sc0_on_builtin_maps() {
        let sp = space();
        let probes: Vec<LinePoint> = (0..3).map(|i| smooth_base_point(&sp, i)).collect();
        for f in [ScMap::Identity, ScMap::Shift, ScMap::Square] {
            let rep = check_sc0(&sp, &f, &probes, &[0, 1, 2, 3]).unwrap();
            assert!(rep.pass, "{}: {:?}", f.name(), rep.levels);
        }
    }

    #[test]
    fn chain_rule_for_linear_and_fixed_shifts() {
        let sp = space();
        let x = smooth_base_point(&sp, 8);
        let dirs = smooth_probe_suite(&sp, 9, 3);
        let lin = chain_rule_check(&sp, &ScMap::Scale { factor: 2.0 }, &ScMap::FixedShift { by: 0.3 }, &x, &dirs).unwrap();
        assert!(lin.residual < 1e-12, "{:e}", lin.residual);
        let a = ScMap::FixedShift { by: 0.3 };
        let b = ScMap::FixedShift { by: 0.45 };
        let comp = ScMap::compose(b.clone(), a.clone());
        let direct = ScMap::FixedShift { by: 0.75 };
        for d in &dirs {
            let lhs = comp.derivative(&sp, &x, &d.point).unwrap();
            let rhs = direct.derivative(&sp, &x, &d.point).unwrap();
            assert!(sp.point_norm(&lhs.sub(&rhs), 0).unwrap() < 1e-6);
        }
    }
}
