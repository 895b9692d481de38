//! Seeded invariant battery behind `dasimplex selftest`.
//!
//! Every case draws its own seed from a ChaCha stream keyed by the master
//! seed and the suite index, so a failing case can be replayed on its own
//! with [`run_case`].

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::{
    analyze, closure_check, classify_blocks, log_affine_subspace, log_affine_verify,
    simplex_chart, CanonicalModel, SimplexChart, Verdict,
};
use crate::error::Result;
use crate::infogeo::{
    alpha_geodesic_bvp, alpha_geodesic_ivp, alpha_projection, autoparallel_residual,
    duality_residual, e_geodesic, m_geodesic, CoordinateChart, ProjectionOptions, SimplexPoint,
};
use crate::subspace::{Subspace, DEFAULT_TOL};

pub const DEFAULT_CASES: usize = 100;
pub const ALPHA_GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Invariant families checked by the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    CriteriaAgree,
    RoundTrip,
    LogAffine,
    Autoparallel,
    GeodesicContainment,
    Integrator,
    Duality,
    ProjectionUniqueness,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::CriteriaAgree,
        Suite::RoundTrip,
        Suite::LogAffine,
        Suite::Autoparallel,
        Suite::GeodesicContainment,
        Suite::Integrator,
        Suite::Duality,
        Suite::ProjectionUniqueness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::CriteriaAgree => "criteria-agree",
            Suite::RoundTrip => "round-trip",
            Suite::LogAffine => "log-affine",
            Suite::Autoparallel => "autoparallel",
            Suite::GeodesicContainment => "geodesic-containment",
            Suite::Integrator => "integrator",
            Suite::Duality => "duality",
            Suite::ProjectionUniqueness => "projection-uniqueness",
        }
    }

    /// Cases run for a requested budget; the solver-heavy suites run fewer.
    pub fn case_count(self, cases: usize) -> usize {
        match self {
            Suite::GeodesicContainment | Suite::ProjectionUniqueness => (cases / 10).max(1),
            _ => cases,
        }
    }
}

/// Thresholds used by the battery; `tol` is the analysis tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub tol: f64,
    pub round_trip: f64,
    pub log_affine: f64,
    pub autoparallel: f64,
    pub containment: f64,
    pub closed_form: f64,
    pub duality: f64,
    pub agreement: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            round_trip: 1e-8,
            log_affine: 1e-9,
            autoparallel: 1e-8,
            containment: 1e-6,
            closed_form: 1e-6,
            duality: 1e-6,
            agreement: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseFailure {
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub passed: usize,
    pub failures: Vec<CaseFailure>,
}

impl SuiteOutcome {
    pub fn total(&self) -> usize {
        self.passed + self.failures.len()
    }
}

/// Per-case seeds of `suite` under `master`.
pub fn case_seeds(master: u64, suite: Suite, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    let index = Suite::ALL.iter().position(|s| *s == suite).unwrap_or(0);
    rng.set_stream(index as u64 + 1);
    (0..count).map(|_| rng.next_u64()).collect()
}

pub fn run_suite(suite: Suite, cases: usize, master: u64, th: &Thresholds) -> SuiteOutcome {
    let seeds = case_seeds(master, suite, suite.case_count(cases));
    let results: Vec<(u64, std::result::Result<(), String>)> =
        seeds.par_iter().map(|&s| (s, run_case(suite, s, th))).collect();
    let mut out = SuiteOutcome { suite, passed: 0, failures: Vec::new() };
    for (seed, r) in results {
        match r {
            Ok(()) => out.passed += 1,
            Err(reason) => out.failures.push(CaseFailure { seed, reason }),
        }
    }
    out
}

pub fn run_all(cases: usize, master: u64, th: &Thresholds) -> Vec<SuiteOutcome> {
    Suite::ALL.iter().map(|s| run_suite(*s, cases, master, th)).collect()
}

/// Runs one case; `Err` carries a human-readable reason.
pub fn run_case(suite: Suite, seed: u64, th: &Thresholds) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = match suite {
        Suite::CriteriaAgree => case_criteria_agree(&mut rng, th),
        Suite::RoundTrip => case_round_trip(&mut rng, th),
        Suite::LogAffine => case_log_affine(&mut rng, th),
        Suite::Autoparallel => case_autoparallel(&mut rng, th),
        Suite::GeodesicContainment => case_geodesic(&mut rng, th),
        Suite::Integrator => case_integrator(&mut rng, th),
        Suite::Duality => case_duality(&mut rng, th),
        Suite::ProjectionUniqueness => case_projection(&mut rng, th),
    };
    match r {
        Ok(None) => Ok(()),
        Ok(Some(reason)) => Err(reason),
        Err(e) => Err(format!("error: {e}")),
    }
}

type CaseResult = Result<Option<String>>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> CaseResult {
    Ok(if ok { None } else { Some(msg()) })
}

/// Random input for the criteria comparison: canonical, generic, or generic
/// with a forced coordinate tie, cycling through ambient dimensions 3–9.
pub fn random_mixed_subspace<R: Rng + ?Sized>(rng: &mut R, n1: usize) -> Result<Subspace> {
    match rng.random_range(0..3) {
        0 => CanonicalModel::random(rng, n1).subspace(),
        1 => random_generic_subspace(rng, n1, false),
        _ => random_generic_subspace(rng, n1, true),
    }
}

/// `span{a, g_2, …, g_d}` with `a` positive and Gaussian `g_k`; with `tied`
/// two coordinates are made equal in every generator.
pub fn random_generic_subspace<R: Rng + ?Sized>(
    rng: &mut R,
    n1: usize,
    tied: bool,
) -> Result<Subspace> {
    let d = rng.random_range(1..n1);
    let mut gens: Vec<Vec<f64>> = vec![(0..n1).map(|_| rng.random_range(0.1..1.0)).collect()];
    for _ in 1..d {
        gens.push((0..n1).map(|_| rng.sample(StandardNormal)).collect());
    }
    if tied {
        let i = rng.random_range(0..n1);
        let j = (i + rng.random_range(1..n1)) % n1;
        for g in &mut gens {
            g[j] = g[i];
        }
    }
    Subspace::from_basis(&gens, DEFAULT_TOL)
}

/// A point of `M` drawn from the chart box and pulled toward the chart
/// origin by `shrink`, keeping it well inside the simplex.
pub fn sample_interior<R: Rng + ?Sized>(
    chart: &SimplexChart,
    rng: &mut R,
    shrink: f64,
) -> Result<SimplexPoint> {
    if chart.dim() == 0 {
        return chart.point(&[]);
    }
    let bx = chart.parameter_box()?;
    chart.point(&chart.sample(&bx, shrink, rng))
}

pub fn random_simplex_point<R: Rng + ?Sized>(rng: &mut R, n1: usize) -> Result<SimplexPoint> {
    let raw: Vec<f64> = (0..n1).map(|_| rng.random_range(0.05..1.0)).collect();
    SimplexPoint::from_positive(&raw)
}

fn random_model<R: Rng + ?Sized>(rng: &mut R) -> (CanonicalModel, Subspace) {
    let n1 = rng.random_range(3..=9);
    let model = CanonicalModel::random(rng, n1);
    let w = model.subspace().expect("canonical generators are independent");
    (model, w)
}

fn case_criteria_agree(rng: &mut ChaCha8Rng, th: &Thresholds) -> CaseResult {
    let n1 = rng.random_range(3..=9);
    let w = random_mixed_subspace(rng, n1)?;
    let Some(a) = w.find_positive_point()? else {
        return Ok(Some("generated subspace has no positive point".into()));
    };
    let closed = closure_check(&w, &a, th.tol)?;
    let blocks = classify_blocks(&w, &a, th.tol)?;
    check(closed.closed == blocks.is_canonical(), || {
        format!(
            "closure says {} (residual {:e}), blocks say {} ({} classes, dim {})",
            closed.closed,
            closed.max_residual,
            blocks.is_canonical(),
            blocks.class_count(),
            w.dim()
        )
    })
}

fn case_round_trip(rng: &mut ChaCha8Rng, th: &Thresholds) -> CaseResult {
    let (model, w) = random_model(rng);
    let report = analyze(&w, th.tol)?;
    let Some(form) = report.canonical else {
        return Ok(Some(format!("verdict {:?} for a canonical model", report.verdict)));
    };
    let want = (model.q, model.block_vectors.len(), model.sorted_block_sizes());
    if form.shape() != want {
        return Ok(Some(format!("shape {:?} != constructed {:?}", form.shape(), want)));
    }
    let a = report.base_point.expect("a DA verdict carries its base point");
    let dist = log_affine_subspace(&w, &a)?.distance(&model.log_affine()?)?;
    check(dist < th.round_trip, || format!("log-affine distance {dist:e}"))
}

fn case_log_affine(rng: &mut ChaCha8Rng, th: &Thresholds) -> CaseResult {
    let (_, w) = random_model(rng);
    let report = analyze(&w, th.tol)?;
    if report.verdict != Verdict::DoublyAutoparallel {
        return Ok(Some(format!("verdict {:?} for a canonical model", report.verdict)));
    }
    let a = report.base_point.expect("a DA verdict carries its base point");
    let out = log_affine_verify(&w, &a, 200, rng)?;
    if out.max_residual >= th.log_affine {
        return Ok(Some(format!("log-affine residual {:e}", out.max_residual)));
    }
    let moved = report.base_point_residual.unwrap_or(f64::INFINITY);
    check(moved < th.round_trip, || format!("base-point independence {moved:e}"))
}

fn case_autoparallel(rng: &mut ChaCha8Rng, th: &Thresholds) -> CaseResult {
    let (_, w) = random_model(rng);
    let chart = simplex_chart(&w)?;
    let p = sample_interior(&chart, rng, 0.9)?;
    for alpha in ALPHA_GRID {
        let r = autoparallel_residual(&w, &p, alpha)?;
        if r >= th.autoparallel {
            return Ok(Some(format!("alpha {alpha}: residual {r:e}")));
        }
    }
    Ok(None)
}

fn case_geodesic(rng: &mut ChaCha8Rng, th: &Thresholds) -> CaseResult {
    let (_, w) = random_model(rng);
    let chart = simplex_chart(&w)?;
    let p = sample_interior(&chart, rng, 0.5)?;
    let q = sample_interior(&chart, rng, 0.5)?;
    for alpha in ALPHA_GRID {
        let mut trace = alpha_geodesic_bvp(&p, &q, alpha, 256)?;
        let r = trace.attach_reference(&w)?;
        if r >= th.containment {
            return Ok(Some(format!("alpha {alpha}: containment residual {r:e}")));
        }
    }
    Ok(None)
}

fn max_gap(a: &SimplexPoint, b: &SimplexPoint) -> f64 {
    a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn case_integrator(rng: &mut ChaCha8Rng, th: &Thresholds) -> CaseResult {
    let n1 = rng.random_range(2..=6);
    let p = random_simplex_point(rng, n1)?;
    let q = random_simplex_point(rng, n1)?;
    for (alpha, closed) in [(-1.0, m_geodesic as fn(_, _, _) -> _), (1.0, e_geodesic)] {
        let trace = alpha_geodesic_bvp(&p, &q, alpha, 256)?;
        for (t, x) in trace.times.iter().zip(&trace.points) {
            let gap = max_gap(x, &closed(&p, &q, *t)?);
            if gap >= th.closed_form {
                return Ok(Some(format!("alpha {alpha}, t {t}: gap {gap:e}")));
            }
        }
    }
    // the e-geodesic through the IVP, started with its exact η-velocity
    let pr = p.probs();
    let n = n1 - 1;
    let (tp, tq) = (p.theta(), q.theta());
    let dtheta: Vec<f64> = tq.iter().zip(&tp).map(|(a, b)| a - b).collect();
    let mean: f64 = (0..n).map(|i| pr[i] * dtheta[i]).sum();
    let v: Vec<f64> = (0..n).map(|i| pr[i] * (dtheta[i] - mean)).collect();
    let trace = alpha_geodesic_ivp(&p, &v, 1.0, 1.0, 256)?;
    let gap = max_gap(trace.end(), &q);
    check(gap < th.closed_form, || format!("alpha 1 IVP endpoint gap {gap:e}"))
}

fn case_duality(rng: &mut ChaCha8Rng, th: &Thresholds) -> CaseResult {
    let n1 = rng.random_range(2..=4);
    let p = random_simplex_point(rng, n1)?;
    for alpha in [-1.0, 0.0, 1.0] {
        let r = duality_residual(&p, &CoordinateChart::Theta, alpha, 1e-4)?;
        if r >= th.duality {
            return Ok(Some(format!("alpha {alpha}: residual {r:e}")));
        }
    }
    Ok(None)
}

fn case_projection(rng: &mut ChaCha8Rng, th: &Thresholds) -> CaseResult {
    let (_, w) = random_model(rng);
    let p = random_simplex_point(rng, w.ambient_dim())?;
    let opts = ProjectionOptions { seed: rng.next_u64(), ..ProjectionOptions::default() };
    for alpha in [-1.0, 0.0, 1.0] {
        let proj = alpha_projection(&p, &w, alpha, &opts)?;
        if proj.agreement_diameter >= th.agreement {
            return Ok(Some(format!(
                "alpha {alpha}: agreement diameter {:e}",
                proj.agreement_diameter
            )));
        }
    }
    Ok(None)
}
