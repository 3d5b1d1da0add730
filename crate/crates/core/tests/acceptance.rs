//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::{E, PI};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sclab::cr_fredholm::{
    arithmetic_genus, cr_evaluate, cr_linearize, cr_newton_solve, dbar_cokernel_experiment, deformation_dimension,
    perturbed_holomorphic, sup_norm, AlmostComplexTarget, ComponentData, SurfaceCombinatorics,
};
use sclab::experiments::{self, CokernelArgs, CrArgs, GermArgs, GlueArgs, IndexArgs, MapChoice, ProfileArgs};
use sclab::germ_solver::{contract_solve, level_coherence_check, BasicGerm, GermKind};
use sclab::gluing::{
    annulus_modulus, antiglue, dyadic_sequence, glue, oscillatory_probes, pi_continuity_experiment, pi_projection,
    total_glue, unglue, CutoffBeta, FieldGrid, GluedField, GluingParameter, GluingProfile, ProfileKind,
};
use sclab::retracts::{classify, porkbarrel_retraction, tangent_idempotence, Retraction};
use sclab::runtime::{ExperimentConfig, GridConfig};
use sclab::sc_check::{chain_rule_check, shift_flagship, smooth_base_point, smooth_probe_suite, LineSpace, ScMap, Verdict};
use sclab::scale_space::{distance_at_level, norm_at_level, CylinderGrid, ScaleFunction, WeightSequence};

const ROUND_TRIP_TOL: f64 = 1e-6;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(30);
const PROJECTION_TOL: f64 = 1e-8;
const SMOOTH_DISCREPANCY_MAX: f64 = 1e-3;
const GAP_FACTOR: f64 = 10.0;
const CUTOFF_TOL: f64 = 1e-14;
const PROFILE_TOL: f64 = 1e-12;
const SC1_FINAL_MAX: f64 = 1e-3;
const CHAIN_RULE_TOL: f64 = 1e-4;
const RETRACT_TOL: f64 = 1e-9;
const LINEAR_GERM_TOL: f64 = 1e-12;
const SINE_GERM_TOL: f64 = 1e-9;
const RATE_SLACK: f64 = 0.05;
const GERM_TOL: f64 = 1e-10;
const HOLOMORPHIC_TOL: f64 = 1e-8;
const LINEARIZATION_TOL: f64 = 1e-6;
const NEWTON_ORDER_MIN: f64 = 1.8;
const COKERNEL_BUDGET: Duration = Duration::from_secs(120);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_suite(seed: u64) -> Vec<ScaleFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|_| ScaleFunction::random_smooth(CylinderGrid::default(), WeightSequence::default(), 1, &mut rng))
        .collect()
}

fn gluing_round_trip() -> Outcome {
    let beta = CutoffBeta::new();
    let suite = random_suite(7);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for r in [0.30, 0.35, 0.45] {
        let a = GluingParameter::exponential(r, 0.37).map_err(err)?;
        for u in &suite {
            let (g, c) = total_glue(&a, u, &beta).map_err(err)?;
            let back = unglue(&a, &g, &c, &beta).map_err(err)?;
            let rel = distance_at_level(&back, u, 0).map_err(err)? / norm_at_level(u, 0).map_err(err)?.value;
            worst = worst.max(rel);
        }
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= ROUND_TRIP_TOL && elapsed <= ROUND_TRIP_BUDGET,
        format!("max relative error {worst:.3e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn projection_algebra() -> Outcome {
    let beta = CutoffBeta::new();
    let suite = random_suite(7);
    let (mut idem, mut anti, mut glued): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for r in [0.30, 0.35, 0.45] {
        let a = GluingParameter::exponential(r, 0.37).map_err(err)?;
        for u in &suite {
            let n0 = norm_at_level(u, 0).map_err(err)?.value;
            let p = pi_projection(&a, u, &beta).map_err(err)?;
            let pp = pi_projection(&a, &p, &beta).map_err(err)?;
            idem = idem.max(distance_at_level(&pp, &p, 0).map_err(err)? / n0);
            let c = antiglue(&a, &p, &beta).map_err(err)?;
            anti = anti.max(c.weighted_norm(PI).map_err(err)? / n0);
            let rest = u.combine(1.0, &p, -1.0).map_err(err)?;
            let g = glue(&a, &rest, &beta).map_err(err)?;
            glued = glued.max(g.weighted_norm(0.0).map_err(err)? / n0);
        }
    }
    ensure(
        idem <= PROJECTION_TOL && anti <= PROJECTION_TOL && glued <= PROJECTION_TOL,
        format!("π∘π−π {idem:.3e}, ⊖π {anti:.3e}, ⊕(I−π) {glued:.3e}"),
    )
}

fn continuity_asymmetry() -> Outcome {
    let beta = CutoffBeta::new();
    let grid = CylinderGrid::new(20.0, 1001, 64).map_err(err)?;
    let weights = WeightSequence::default();
    let a0 = GluingParameter::exponential(0.35, 0.1).map_err(err)?;
    let seq = dyadic_sequence(&a0, 1e-3, 0.25, 5).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let smooth: Vec<_> = (0..5)
        .map(|_| ScaleFunction::random_smooth(grid, weights.clone(), 1, &mut rng))
        .collect();
    let osc = oscillatory_probes(grid, &weights, &a0);
    let rep = pi_continuity_experiment(&a0, &seq, &smooth, &osc, &beta).map_err(err)?;
    let last = rep.final_smooth_discrepancy;
    let floor = rep.rows.iter().map(|r| r.operator_gap).fold(f64::INFINITY, f64::min);
    ensure(
        last < SMOOTH_DISCREPANCY_MAX && floor >= GAP_FACTOR * last,
        format!("final smooth discrepancy {last:.3e}, operator gap floor {floor:.3e}"),
    )
}

fn cutoff_identity() -> Outcome {
    let beta = CutoffBeta::new();
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let s = -4.0 + 8.0 * i as f64 / 999.0;
        worst = worst.max((beta.eval(s) + beta.eval(-s) - 1.0).abs());
    }
    let mid = (beta.eval(0.0) - 0.5).abs();
    ensure(
        worst <= CUTOFF_TOL && mid <= CUTOFF_TOL,
        format!("max |β(s)+β(−s)−1| {worst:.1e}, |β(0)−½| {mid:.1e}"),
    )
}

fn profile_values() -> Outcome {
    let exp = GluingProfile::from_kind(ProfileKind::Exponential);
    let log = GluingProfile::from_kind(ProfileKind::Logarithmic);
    let at_one = exp.eval(1.0).map_err(err)?.abs();
    let at_half = (exp.eval(0.5).map_err(err)? - (E * E - E)).abs();
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let r = 0.05 + 0.09 * k as f64;
        let phi = log.eval(r).map_err(err)?;
        let modulus = annulus_modulus(r, 1.0).map_err(err)?;
        // ln(1/r)/2π is the modulus of the annulus r < |z| < 1
        worst = worst.max((phi - modulus).abs()).max((phi - (1.0 / r).ln() / (2.0 * PI)).abs());
    }
    ensure(
        at_one <= PROFILE_TOL && at_half <= PROFILE_TOL && worst <= PROFILE_TOL,
        format!("|φ(1)| {at_one:.1e}, |φ(½)−(e²−e)| {at_half:.1e}, log vs modulus {worst:.1e}"),
    )
}

fn sc_asymmetry() -> Outcome {
    let space = LineSpace::default();
    let a = shift_flagship(&space, 2024).map_err(err)?;
    let b = shift_flagship(&space, 2024).map_err(err)?;
    let sc = &a.ratios;
    let cl = &a.classical_ratios;
    let monotone_tail = sc[sc.len() - 4..].windows(2).all(|w| w[1] < w[0]);
    let classical_non_decreasing = cl.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let last = *sc.last().unwrap();
    ensure(
        a.verdict == Verdict::Pass
            && a.classical_verdict == Verdict::Fail
            && last < SC1_FINAL_MAX
            && monotone_tail
            && classical_non_decreasing
            && a == b,
        format!(
            "sc ratio {:.3e} → {last:.3e}, classical {:.3e} → {:.3e}, deterministic {}",
            sc[0],
            cl[0],
            cl.last().unwrap(),
            a == b
        ),
    )
}

fn chain_rule() -> Outcome {
    let space = LineSpace::default();
    let x = smooth_base_point(&space, 2024);
    let dirs = smooth_probe_suite(&space, 2024, 4);
    let ss = chain_rule_check(&space, &ScMap::Shift, &ScMap::Shift, &x, &dirs).map_err(err)?;
    let qs = chain_rule_check(&space, &ScMap::Shift, &ScMap::Square, &x, &dirs).map_err(err)?;
    ensure(
        ss.residual <= CHAIN_RULE_TOL && qs.residual <= CHAIN_RULE_TOL,
        format!("shift∘shift {:.3e}, square∘shift {:.3e}", ss.residual, qs.residual),
    )
}

fn porkbarrel() -> Outcome {
    use rand::Rng;
    let rho = porkbarrel_retraction();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ranks = (Vec::new(), Vec::new());
    let (mut idem, mut chart, mut tangent): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for side in [-1.0, 1.0] {
        for _ in 0..10 {
            let s = side * rng.gen_range(0.1..=2.0);
            let t = if side > 0.0 { rng.gen_range(-1.0..1.0) } else { 0.0 };
            let q = rho.chart_to_retract(s, t).map_err(err)?;
            let (s2, t2) = rho.retract_to_chart(&q).map_err(err)?;
            chart = chart.max((s2 - s).hypot(t2 - t));
            tangent = tangent.max(tangent_idempotence(&rho, &q).map_err(err)?);
            let dim = classify(&rho, q).map_err(err)?.tangent_dimension;
            if side < 0.0 {
                ranks.0.push(dim);
            } else {
                ranks.1.push(dim);
            }
        }
    }
    for _ in 0..20 {
        let p = rho.random_point(&mut rng);
        let once = rho.apply(&p).map_err(err)?;
        let twice = rho.apply(&once).map_err(err)?;
        idem = idem.max(rho.distance(&twice, &once).map_err(err)? / (1.0 + rho.norm(&once).map_err(err)?));
    }
    let left = ranks.0.iter().all(|d| *d == Some(1));
    let right = ranks.1.iter().all(|d| *d == Some(2));
    ensure(
        left && right && idem <= RETRACT_TOL && tangent <= RETRACT_TOL && chart <= RETRACT_TOL,
        format!(
            "ranks s<0 {:?}, s>0 {:?}, ρ∘ρ−ρ {idem:.1e}, Dρ∘Dρ−Dρ {tangent:.1e}, chart {chart:.1e}",
            ranks.0.iter().map(|d| d.unwrap_or(0)).max(),
            ranks.1.iter().map(|d| d.unwrap_or(0)).min()
        ),
    )
}

/// Root of `x − ¼ sin x = c` by Newton's method.
fn scalar_root(c: f64) -> f64 {
    let mut x = c;
    for _ in 0..50 {
        let step = (x - 0.25 * x.sin() - c) / (1.0 - 0.25 * x.cos());
        x -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    x
}

fn germ_solver() -> Outcome {
    let space = LineSpace::default();
    let a = [0.3];
    let linear = BasicGerm::standard(GermKind::Linear, space.clone(), 5);
    let (w, dl) = contract_solve(&linear, &a, 1, 1e-14, 10_000).map_err(err)?;
    let g0 = &linear.directions()[0];
    let lin_err = w.iter().zip(g0).map(|(w, g)| (w - 2.0 * a[0] * g).abs()).fold(0.0, f64::max);

    let sine = BasicGerm::standard(GermKind::Sine, space.clone(), 5);
    let (w, ds) = contract_solve(&sine, &a, 1, 1e-13, 10_000).map_err(err)?;
    let g0 = &sine.directions()[0];
    let sine_err = w
        .iter()
        .zip(g0)
        .map(|(w, g)| (w - scalar_root(a[0] * g)).abs())
        .fold(0.0, f64::max);

    let rates_ok = [&dl, &ds].iter().all(|d| d.rate <= d.epsilon + RATE_SLACK);
    let coherence = level_coherence_check(&sine, &a, &[0, 1, 2], GERM_TOL).map_err(err)?;
    ensure(
        lin_err <= LINEAR_GERM_TOL
            && sine_err <= SINE_GERM_TOL
            && rates_ok
            && coherence.max_distance <= 2.0 * GERM_TOL,
        format!(
            "linear {lin_err:.1e}, sine {sine_err:.1e}, rate {:.3}/ε {:.3}, coherence {:.1e}",
            ds.rate, ds.epsilon, coherence.max_distance
        ),
    )
}

fn cr_section() -> Outcome {
    let a = GluingParameter::exponential(0.45, 0.0).map_err(err)?;
    let (n_s, n_t) = (256, 64);
    let grid = FieldGrid {
        s_start: 0.0,
        h_s: a.neck / (n_s - 1) as f64,
        n_s,
        n_t,
    };
    // c + e^{−2π(s+it)}
    let holo = GluedField::from_fn(a, grid, 2, |c, s, t| {
        let m = (-2.0 * PI * s).exp();
        [0.1, 0.2][c] + if c == 0 { m * (2.0 * PI * t).cos() } else { -m * (2.0 * PI * t).sin() }
    })
    .map_err(err)?;
    let standard = AlmostComplexTarget::standard(1).map_err(err)?;
    let holo_res = sup_norm(&cr_evaluate(&holo, &standard).map_err(err)?);

    let small = FieldGrid {
        s_start: 0.0,
        h_s: a.neck / 63.0,
        n_s: 64,
        n_t: 16,
    };
    let twisted = AlmostComplexTarget::twisted(0.6).map_err(err)?;
    let fw = |c: usize, s: f64, t: f64| 0.3 * (2.0 * PI * t + c as f64).sin() * (-0.3 * s).exp() + 0.1 * c as f64;
    let fh = |c: usize, s: f64, t: f64| (4.0 * PI * t).cos() * (0.5 * s + c as f64).sin();
    let w = GluedField::from_fn(a, small, 2, fw).map_err(err)?;
    let h = GluedField::from_fn(a, small, 2, fh).map_err(err)?;
    let lin = cr_linearize(&w, &twisted, &h).map_err(err)?.values();
    let at = |eps: f64| -> Result<Vec<f64>, String> {
        let f = GluedField::from_fn(a, small, 2, |c, s, t| fw(c, s, t) + eps * fh(c, s, t)).map_err(err)?;
        Ok(cr_evaluate(&f, &twisted).map_err(err)?.values())
    };
    let eps = 1e-3;
    let (p1, m1, p2, m2) = (at(eps)?, at(-eps)?, at(2.0 * eps)?, at(-2.0 * eps)?);
    let scale = lin.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut lin_err: f64 = 0.0;
    for k in 0..lin.len() {
        let fd = (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * eps);
        lin_err = lin_err.max((fd - lin[k]).abs() / scale);
    }

    let suite = perturbed_holomorphic(0.49, 41, 8, 0.2, 1e-2).map_err(err)?;
    let target = AlmostComplexTarget::twisted(0.3).map_err(err)?;
    let sol = cr_newton_solve(&suite.initial, &target, &suite.constraints, 1e-9).map_err(err)?;
    let order = sol.report.order.unwrap_or(0.0);
    ensure(
        holo_res <= HOLOMORPHIC_TOL && lin_err <= LINEARIZATION_TOL && order >= NEWTON_ORDER_MIN,
        format!("holomorphic residual {holo_res:.2e}, linearization {lin_err:.2e}, Newton order {order:.2}"),
    )
}

fn cokernel_formula() -> Outcome {
    let start = Instant::now();
    let mut counts = Vec::new();
    for m in 3..=5 {
        counts.push(dbar_cokernel_experiment(m).map_err(err)?);
    }
    let elapsed = start.elapsed();
    let sphere = ComponentData {
        genus: 0,
        special_points: 3,
    };
    let two_spheres = SurfaceCombinatorics {
        components: vec![sphere, sphere],
        marked: 4,
        nodes: 1,
    };
    let genus_ok = arithmetic_genus(&SurfaceCombinatorics::smooth(0, 0)) == 0
        && arithmetic_genus(&two_spheres) == 0
        && arithmetic_genus(&SurfaceCombinatorics::smooth(1, 0)) == 1;
    let dim_ok = deformation_dimension(&SurfaceCombinatorics::smooth(0, 3)).ok() == Some(0)
        && deformation_dimension(&SurfaceCombinatorics::smooth(0, 4)).ok() == Some(1)
        && deformation_dimension(&two_spheres).ok() == Some(0);
    ensure(
        counts == vec![0, 1, 2] && genus_ok && dim_ok && elapsed <= COKERNEL_BUDGET,
        format!(
            "cokernel dims {counts:?} for M = 3, 4, 5, formula examples {}, {:.2} s",
            genus_ok && dim_ok,
            elapsed.as_secs_f64()
        ),
    )
}

fn full_suite(cfg: &ExperimentConfig) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let profile = ProfileArgs {
        kind: ProfileKind::Exponential,
        radii: vec![0.5, 0.4, 0.3],
    };
    out.push(experiments::profile_table(cfg, &profile).and_then(|r| r.payload_json()).map_err(err)?);
    out.push(experiments::glue_experiment(cfg, &GlueArgs::default()).and_then(|r| r.payload_json()).map_err(err)?);
    let pi = experiments::PiContinuityArgs {
        steps: 3,
        probes: 2,
        ..Default::default()
    };
    out.push(experiments::pi_continuity(cfg, &pi).and_then(|r| r.payload_json()).map_err(err)?);
    let retract = experiments::RetractArgs { samples: 4 };
    out.push(experiments::retract_demo(cfg, &retract).and_then(|r| r.payload_json()).map_err(err)?);
    for map in [MapChoice::Shift, MapChoice::Square, MapChoice::CustomRef] {
        let args = experiments::ScCheckArgs { map, level: 1 };
        out.push(experiments::sccheck(cfg, &args).and_then(|r| r.payload_json()).map_err(err)?);
    }
    for germ in [GermKind::Linear, GermKind::Sine] {
        let args = GermArgs {
            germ,
            ..Default::default()
        };
        out.push(experiments::germ_solve(cfg, &args).and_then(|r| r.payload_json()).map_err(err)?);
    }
    out.push(experiments::cr_solve(cfg, &CrArgs::default()).and_then(|r| r.payload_json()).map_err(err)?);
    let index = IndexArgs::ProjectionRemoval { n: 32, k: 3 };
    out.push(experiments::index_experiment(cfg, &index).and_then(|r| r.payload_json()).map_err(err)?);
    let cokernel = CokernelArgs { marked: vec![3, 4, 5] };
    out.push(experiments::cokernel_check(cfg, &cokernel).and_then(|r| r.payload_json()).map_err(err)?);
    Ok(out)
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig {
        seed: 99,
        r_min: 0.35,
        grid: GridConfig {
            n_s: 401,
            n_t: 32,
            s_max: 20.0,
        },
        ..ExperimentConfig::default()
    };
    let first = full_suite(&cfg)?;
    let second = full_suite(&cfg)?;
    let identical = first.len() == second.len() && first.iter().zip(&second).all(|(a, b)| a.as_bytes() == b.as_bytes());
    let bytes: usize = first.iter().map(|s| s.len()).sum();
    ensure(
        identical,
        format!("{} payloads, {bytes} bytes, byte-identical {identical}", first.len()),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("gluing round trip", gluing_round_trip),
        ("projection algebra", projection_algebra),
        ("continuity asymmetry", continuity_asymmetry),
        ("cut-off identity", cutoff_identity),
        ("profile values", profile_values),
        ("sc/classical asymmetry", sc_asymmetry),
        ("chain rule", chain_rule),
        ("porkbarrel retract", porkbarrel),
        ("germ solver", germ_solver),
        ("CR section", cr_section),
        ("cokernel formula", cokernel_formula),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {:>2} PASS {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("acceptance {:>2} FAIL {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
