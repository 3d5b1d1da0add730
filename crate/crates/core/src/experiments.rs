//! One driver per command-line experiment. Each takes the validated
//! configuration plus its own arguments and returns a report whose payload
//! depends only on those inputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cr_fredholm::{
    cr_evaluate, cr_newton_solve, dbar_cokernel_report, perturbed_holomorphic, sup_norm, CokernelReport, NewtonReport,
    TargetSpec,
};
use crate::error::{Error, Result};
use crate::germ_solver::{
    contract_solve, fredholm_index, level_coherence_check, sine_fixed_point_scalar, BasicGerm, FredholmIndexReport,
    GermKind, LevelCoherenceReport, LinearScFredholm, SolveDiagnostics,
};
use crate::gluing::{
    dyadic_sequence, oscillatory_probes, pi_continuity_experiment, total_glue, unglue, CutoffBeta, DomainKind,
    GluedFieldRecord, GluingParameter, GluingProfile, PiContinuityReport, ProfileKind,
};
use crate::retracts::{
    classify, constraint_retraction_demo, porkbarrel_retraction, tangent_idempotence, AffineConstraint, Retraction,
};
use crate::runtime::{derived_seed, ExperimentConfig, Report, Table};
use crate::sc_check::{
    chain_rule_check, check_sc1, rough_probe_suite, smooth_base_point, smooth_probe_suite, ChainRuleReport, LineSpace,
    ScMap, Sc1Options, Sc1Report,
};
use crate::scale_space::{distance_at_level, norm_at_level, ScaleFunction};

fn check(ok: bool, path: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::schema(path, message))
    }
}

// ---------------------------------------------------------------- profile

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileArgs {
    pub kind: ProfileKind,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePayload {
    pub args: ProfileArgs,
    /// `(r, R)` pairs.
    pub rows: Vec<(f64, f64)>,
}

pub fn profile_table(cfg: &ExperimentConfig, args: &ProfileArgs) -> Result<Report<ProfilePayload>> {
    check(!args.radii.is_empty(), "r", "at least one modulus is required")?;
    let profile = GluingProfile::from_kind(args.kind);
    let rows: Vec<(f64, f64)> = args
        .radii
        .iter()
        .map(|&r| Ok((r, profile.eval(r)?)))
        .collect::<Result<_>>()?;
    let mut table = Table::new("profile", &["r", "R"]);
    for &(r, neck) in &rows {
        table.push(vec![r, neck]);
    }
    let payload = ProfilePayload {
        args: args.clone(),
        rows,
    };
    Ok(Report::new("profile-table", cfg, payload).with_table(table))
}

// ---------------------------------------------------------------- glue

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueArgs {
    pub r: f64,
    pub theta: f64,
    pub dim: usize,
}

impl Default for GlueArgs {
    fn default() -> Self {
        GlueArgs {
            r: 0.35,
            theta: 0.0,
            dim: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GluePayload {
    pub args: GlueArgs,
    pub param: GluingParameter,
    pub input_norm: f64,
    /// `‖unglue(⊡_a u) − u‖_0 / ‖u‖_0`.
    pub round_trip: f64,
    pub anti_empty: bool,
    pub glued: GluedFieldRecord,
    pub anti: GluedFieldRecord,
}

pub fn glue_experiment(cfg: &ExperimentConfig, args: &GlueArgs) -> Result<Report<GluePayload>> {
    check(args.dim >= 1, "dim", "dimension must be at least 1")?;
    let param = GluingParameter::new(args.r, args.theta, &cfg.gluing_profile(), cfg.r_min)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(cfg.seed, "glue"));
    let u = ScaleFunction::random_smooth(cfg.cylinder_grid()?, cfg.weight_sequence()?, args.dim, &mut rng);
    let beta = CutoffBeta::new();
    let (glued, anti) = total_glue(&param, &u, &beta)?;
    let back = unglue(&param, &glued, &anti, &beta)?;
    let input_norm = norm_at_level(&u, 0)?.value;
    let round_trip = distance_at_level(&back, &u, 0)? / input_norm;
    let mut table = Table::new("glued", &["s", "t", "value"]);
    if let (DomainKind::Glued, Some(g)) = (glued.kind(), glued.grid()) {
        for i in 0..g.n_s {
            for j in 0..g.n_t {
                table.push(vec![g.s(i), g.t(j), glued.value(0, i, j)]);
            }
        }
    }
    let payload = GluePayload {
        args: args.clone(),
        param,
        input_norm,
        round_trip,
        anti_empty: anti.kind() == DomainKind::Empty,
        glued: glued.to_record(),
        anti: anti.to_record(),
    };
    Ok(Report::new("glue", cfg, payload).with_table(table))
}

// ---------------------------------------------------------------- pi continuity

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiContinuityArgs {
    pub r0: f64,
    pub theta0: f64,
    pub dr: f64,
    pub dtheta: f64,
    pub steps: usize,
    pub probes: usize,
}

impl Default for PiContinuityArgs {
    fn default() -> Self {
        PiContinuityArgs {
            r0: 0.35,
            theta0: 0.1,
            dr: 1e-3,
            dtheta: 0.25,
            steps: 5,
            probes: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiContinuityPayload {
    pub args: PiContinuityArgs,
    pub result: PiContinuityReport,
}

pub fn pi_continuity(cfg: &ExperimentConfig, args: &PiContinuityArgs) -> Result<Report<PiContinuityPayload>> {
    check(args.steps >= 1, "steps", "need at least one sequence element")?;
    check(args.probes >= 1, "probes", "need at least one smooth probe")?;
    let grid = cfg.cylinder_grid()?;
    let weights = cfg.weight_sequence()?;
    let a0 = GluingParameter::new(args.r0, args.theta0, &cfg.gluing_profile(), cfg.r_min)?;
    let sequence = dyadic_sequence(&a0, args.dr, args.dtheta, args.steps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(cfg.seed, "pi-continuity"));
    let smooth: Vec<ScaleFunction> = (0..args.probes)
        .map(|_| ScaleFunction::random_smooth(grid, weights.clone(), 1, &mut rng))
        .collect();
    let oscillatory = oscillatory_probes(grid, &weights, &a0);
    let result = pi_continuity_experiment(&a0, &sequence, &smooth, &oscillatory, &CutoffBeta::new())?;
    let mut table = Table::new("sweep", &["k", "r", "theta", "R", "smooth_discrepancy", "operator_gap"]);
    for row in &result.rows {
        table.push(vec![
            row.k as f64,
            row.r,
            row.theta,
            row.neck,
            row.smooth_discrepancy,
            row.operator_gap,
        ]);
    }
    let payload = PiContinuityPayload {
        args: args.clone(),
        result,
    };
    Ok(Report::new("pi-continuity", cfg, payload).with_table(table))
}

// ---------------------------------------------------------------- retracts

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetractArgs {
    /// Sample points on each side of `s = 0`.
    pub samples: usize,
}

impl Default for RetractArgs {
    fn default() -> Self {
        RetractArgs { samples: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetractSample {
    pub s: f64,
    pub t: f64,
    pub tangent_dimension: Option<usize>,
    pub membership_residual: f64,
    pub idempotence: f64,
    /// `|chart(ρ-point) − (s, t)|`.
    pub chart_round_trip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDemo {
    pub displacement: (f64, f64),
    pub intersection: (f64, f64),
    pub constraint_residual: f64,
    pub idempotence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetractPayload {
    pub args: RetractArgs,
    pub samples: Vec<RetractSample>,
    pub constraint: ConstraintDemo,
}

fn constraint_demo() -> Result<ConstraintDemo> {
    use crate::gluing::{FieldGrid, GluedField};
    use std::f64::consts::PI;
    let a = GluingParameter::exponential(0.45, 0.0)?;
    let grid = FieldGrid::neck(a.neck, 0.05, 16);
    let s0 = grid.s(grid.n_s / 2);
    let field = |ds: f64, dt: f64| {
        GluedField::from_fn(a, grid, 2, move |c, s, t| {
            if c == 0 {
                s - s0 - ds
            } else {
                (2.0 * PI * (t - dt)).sin() / (2.0 * PI)
            }
        })
    };
    let h = AffineConstraint::through([vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0])?;
    let rho = constraint_retraction_demo(h, &field(0.0, 0.0)?)?;
    let displacement = (0.02, 0.015);
    let w = field(displacement.0, displacement.1)?;
    let (sz, tz) = rho.intersection(&w)?;
    let once = rho.apply(&w)?;
    let twice = rho.apply(&once)?;
    Ok(ConstraintDemo {
        displacement,
        intersection: (sz - rho.reference().0, tz),
        constraint_residual: rho.constraint_residual(&once)?,
        idempotence: rho.distance(&twice, &once)? / (1.0 + rho.norm(&once)?),
    })
}

pub fn retract_demo(cfg: &ExperimentConfig, args: &RetractArgs) -> Result<Report<RetractPayload>> {
    check(args.samples >= 1, "samples", "need at least one sample per side")?;
    use rand::Rng;
    let rho = porkbarrel_retraction();
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(cfg.seed, "retract"));
    let mut chart = Vec::with_capacity(2 * args.samples);
    for _ in 0..args.samples {
        chart.push((rng.gen_range(-2.0..=-0.1), 0.0));
    }
    for _ in 0..args.samples {
        chart.push((rng.gen_range(0.1..=2.0), rng.gen_range(-1.0..1.0)));
    }
    let samples: Vec<RetractSample> = chart
        .into_iter()
        .map(|(s, t)| {
            let q = rho.chart_to_retract(s, t)?;
            let idempotence = tangent_idempotence(&rho, &q)?;
            let (s2, t2) = rho.retract_to_chart(&q)?;
            let c = classify(&rho, q)?;
            Ok(RetractSample {
                s,
                t,
                tangent_dimension: c.tangent_dimension,
                membership_residual: c.residual,
                idempotence,
                chart_round_trip: (s2 - s).hypot(t2 - t),
            })
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new("porkbarrel", &["s", "t", "tangent_dimension", "idempotence", "chart_round_trip"]);
    for p in &samples {
        table.push(vec![
            p.s,
            p.t,
            p.tangent_dimension.map_or(f64::NAN, |d| d as f64),
            p.idempotence,
            p.chart_round_trip,
        ]);
    }
    let payload = RetractPayload {
        args: args.clone(),
        samples,
        constraint: constraint_demo()?,
    };
    Ok(Report::new("retract-demo", cfg, payload).with_table(table))
}

// ---------------------------------------------------------------- sc check

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapChoice {
    Shift,
    Square,
    /// Reference map without a registered derivative; checked with secants.
    CustomRef,
}

impl MapChoice {
    pub fn map(self) -> ScMap {
        match self {
            MapChoice::Shift => ScMap::Shift,
            MapChoice::Square => ScMap::Square,
            MapChoice::CustomRef => ScMap::SineReference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScCheckArgs {
    pub map: MapChoice,
    /// Level of the base point, at least 1.
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScCheckPayload {
    pub args: ScCheckArgs,
    pub sc1: Sc1Report,
    /// `map ∘ shift`, when the map has a derivative.
    pub chain_rule: Option<ChainRuleReport>,
}

pub fn sccheck(cfg: &ExperimentConfig, args: &ScCheckArgs) -> Result<Report<ScCheckPayload>> {
    let space = LineSpace::default();
    let seed = derived_seed(cfg.seed, "sccheck");
    let f = args.map.map();
    let x = smooth_base_point(&space, seed);
    let options = Sc1Options {
        allow_secant: args.map == MapChoice::CustomRef,
        ..Sc1Options::default()
    };
    let sc1 = check_sc1(&space, &f, &x, args.level, &rough_probe_suite(&space, seed), &options)?;
    let chain_rule = if f.has_derivative() {
        let dirs = smooth_probe_suite(&space, seed, 4);
        Some(chain_rule_check(&space, &ScMap::Shift, &f, &x, &dirs)?)
    } else {
        None
    };
    let mut table = Table::new("ratios", &["scale", "sc_ratio", "classical_ratio"]);
    for ((t, a), b) in sc1.scales.iter().zip(&sc1.ratios).zip(&sc1.classical_ratios) {
        table.push(vec![*t, *a, *b]);
    }
    let payload = ScCheckPayload {
        args: args.clone(),
        sc1,
        chain_rule,
    };
    Ok(Report::new("sccheck", cfg, payload).with_table(table))
}

// ---------------------------------------------------------------- germ solver

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GermArgs {
    pub germ: GermKind,
    pub a: f64,
    pub level: usize,
    pub max_iter: usize,
}

impl Default for GermArgs {
    fn default() -> Self {
        GermArgs {
            germ: GermKind::Sine,
            a: 0.3,
            level: 1,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GermPayload {
    pub args: GermArgs,
    pub tol: f64,
    pub diagnostics: SolveDiagnostics,
    /// Level-0 distance to the closed form or the pointwise scalar oracle.
    pub oracle_error: Option<f64>,
    pub coherence: LevelCoherenceReport,
}

pub fn germ_solve(cfg: &ExperimentConfig, args: &GermArgs) -> Result<Report<GermPayload>> {
    let tol = cfg.tolerance("germ")?;
    let germ = BasicGerm::standard(args.germ, LineSpace::default(), derived_seed(cfg.seed, "germ"));
    let a = [args.a];
    let (w, diagnostics) = contract_solve(&germ, &a, args.level, tol, args.max_iter)?;
    let space = germ.space();
    let forcing = germ.forcing(&a);
    let oracle: Option<Vec<f64>> = match args.germ {
        GermKind::Linear => Some(forcing.iter().map(|f| 2.0 * f).collect()),
        GermKind::Sine => Some(forcing.iter().map(|&f| sine_fixed_point_scalar(f)).collect()),
        _ => None,
    };
    let oracle_error = match oracle {
        Some(o) => {
            let d: Vec<f64> = w.iter().zip(&o).map(|(x, y)| x - y).collect();
            Some(space.norm(&d, 0)?)
        }
        None => None,
    };
    let coherence = level_coherence_check(&germ, &a, &[0, 1, 2], tol)?;
    let mut table = Table::new("solution", &["x", "w"]);
    for (i, v) in w.iter().enumerate() {
        table.push(vec![space.x(i), *v]);
    }
    let payload = GermPayload {
        args: args.clone(),
        tol,
        diagnostics,
        oracle_error,
        coherence,
    };
    Ok(Report::new("germ-solve", cfg, payload).with_table(table))
}

// ---------------------------------------------------------------- CR Newton

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrArgs {
    pub r: f64,
    pub n_s: usize,
    pub n_t: usize,
    pub amplitude: f64,
    pub epsilon: f64,
    pub target: TargetSpec,
}

impl Default for CrArgs {
    fn default() -> Self {
        CrArgs {
            r: 0.49,
            n_s: 41,
            n_t: 8,
            amplitude: 0.2,
            epsilon: 1e-2,
            target: TargetSpec::Twisted { kappa: 0.3 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrPayload {
    pub args: CrArgs,
    pub tol: f64,
    pub target: String,
    /// `sup |∂̄_J| ` of the holomorphic reference field for the standard structure.
    pub reference_residual: f64,
    pub newton: NewtonReport,
    /// Sup distance from the start to the solution.
    pub correction: f64,
}

pub fn cr_solve(cfg: &ExperimentConfig, args: &CrArgs) -> Result<Report<CrPayload>> {
    let tol = cfg.tolerance("newton")?;
    let suite = perturbed_holomorphic(args.r, args.n_s, args.n_t, args.amplitude, args.epsilon)?;
    let target = args.target.build()?;
    let reference_residual = sup_norm(&cr_evaluate(&suite.exact, &TargetSpec::Standard { complex_dim: 1 }.build()?)?);
    let solution = cr_newton_solve(&suite.initial, &target, &suite.constraints, tol)?;
    let start = suite.initial.values();
    let correction = solution
        .field
        .values()
        .iter()
        .zip(&start)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let report = solution.report;
    let mut table = Table::new("newton", &["iteration", "residual"]);
    for (k, r) in report.residuals.iter().enumerate() {
        table.push(vec![k as f64, *r]);
    }
    let payload = CrPayload {
        args: args.clone(),
        tol,
        target: target.name(),
        reference_residual,
        newton: report,
        correction,
    };
    Ok(Report::new("cr-solve", cfg, payload).with_table(table))
}

// ---------------------------------------------------------------- index

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operator", rename_all = "kebab-case")]
pub enum IndexArgs {
    /// Invertible map precomposed with the removal of `k` modes from `ℝ^n`.
    ProjectionRemoval { n: usize, k: usize },
    /// `∂_s` on functions with `dim` asymptotic constants.
    AsymptoticDerivative { dim: usize, points: usize, length: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexPayload {
    pub args: IndexArgs,
    pub result: FredholmIndexReport,
}

pub fn index_experiment(cfg: &ExperimentConfig, args: &IndexArgs) -> Result<Report<IndexPayload>> {
    let op = match *args {
        IndexArgs::ProjectionRemoval { n, k } => {
            LinearScFredholm::projection_removal(n, k, derived_seed(cfg.seed, "index"))?
        }
        IndexArgs::AsymptoticDerivative { dim, points, length } => {
            LinearScFredholm::asymptotic_derivative(dim, points, length)?
        }
    };
    let result = fredholm_index(&op)?;
    let payload = IndexPayload {
        args: args.clone(),
        result,
    };
    Ok(Report::new("index", cfg, payload))
}

// ---------------------------------------------------------------- cokernel

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CokernelArgs {
    pub marked: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CokernelPayload {
    pub args: CokernelArgs,
    pub reports: Vec<CokernelReport>,
    /// Every measured cokernel equals the formula.
    pub all_match: bool,
}

pub fn cokernel_check(cfg: &ExperimentConfig, args: &CokernelArgs) -> Result<Report<CokernelPayload>> {
    check(!args.marked.is_empty(), "m", "at least one marked-point count is required")?;
    let reports: Vec<CokernelReport> = args
        .marked
        .par_iter()
        .map(|&m| dbar_cokernel_report(m))
        .collect::<Result<_>>()?;
    let mut table = Table::new("cokernel", &["marked", "rank", "kernel_dim", "cokernel_dim", "formula"]);
    for r in &reports {
        table.push(vec![
            r.marked as f64,
            r.rank as f64,
            r.kernel_dim as f64,
            r.cokernel_dim as f64,
            r.formula.map_or(f64::NAN, |f| f as f64),
        ]);
    }
    let all_match = reports.iter().all(|r| r.formula == Some(r.cokernel_dim as i64));
    let payload = CokernelPayload {
        args: args.clone(),
        reports,
        all_match,
    };
    Ok(Report::new("cokernel-check", cfg, payload).with_table(table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::GridConfig;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            grid: GridConfig {
                n_s: 401,
                n_t: 16,
                s_max: 20.0,
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn profile_rows() {
        let args = ProfileArgs {
            kind: ProfileKind::Exponential,
            radii: vec![0.5],
        };
        let rep = profile_table(&small(), &args).unwrap();
        let e = std::f64::consts::E;
        assert!((rep.payload.rows[0].1 - (e * e - e)).abs() < 1e-12);
        assert_eq!(rep.tables[0].rows.len(), 1);
    }

    #[test]
    fn glue_at_zero_keeps_the_pair() {
        let args = GlueArgs {
            r: 0.0,
            ..GlueArgs::default()
        };
        let rep = glue_experiment(&small(), &args).unwrap();
        assert!(rep.payload.anti_empty);
        assert!(rep.payload.anti.values.is_empty());
        assert_eq!(rep.payload.glued.domain_kind, DomainKind::Pair);
        assert!(rep.payload.round_trip < 1e-12);
    }

    #[test]
    fn glue_round_trip() {
        let rep = glue_experiment(&small(), &GlueArgs::default()).unwrap();
        assert!(rep.payload.round_trip < 1e-6, "{}", rep.payload.round_trip);
        assert!(!rep.tables[0].rows.is_empty());
    }

    #[test]
    fn invalid_inputs_are_schema_errors() {
        let args = ProfileArgs {
            kind: ProfileKind::Exponential,
            radii: vec![],
        };
        assert!(matches!(profile_table(&small(), &args), Err(Error::SchemaError { .. })));
        let args = CokernelArgs { marked: vec![] };
        assert!(matches!(cokernel_check(&small(), &args), Err(Error::SchemaError { .. })));
    }

    #[test]
    fn cokernel_and_index() {
        let rep = cokernel_check(&small(), &CokernelArgs { marked: vec![3, 4] }).unwrap();
        assert!(rep.payload.all_match);
        let rep = index_experiment(&small(), &IndexArgs::ProjectionRemoval { n: 40, k: 3 }).unwrap();
        assert_eq!(rep.payload.result.index, 3);
    }

    #[test]
    fn retract_samples() {
        let rep = retract_demo(&small(), &RetractArgs { samples: 3 }).unwrap();
        let dims: Vec<_> = rep.payload.samples.iter().map(|s| s.tangent_dimension).collect();
        assert_eq!(dims, vec![Some(1), Some(1), Some(1), Some(2), Some(2), Some(2)]);
        assert!(rep.payload.constraint.constraint_residual < 1e-6);
    }
}
