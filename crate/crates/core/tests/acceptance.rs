//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_RED` fail with the pre-registered thresholds and
//! are reported as such without failing the run; any other failure exits 1.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use eulerband_core::bound::{self, MRule, SweepOptions};
use eulerband_core::critical::{self, Branch, DecaySpec, PointKind};
use eulerband_core::dynamics::{self, IntegratorConfig};
use eulerband_core::flowbox::{self, CutoffBeta, CutoffGamma, FlowBoxChart, RasterSpec};
use eulerband_core::flowfield::{FourierStream, TorusPoint};
use eulerband_core::spectrum::{self, BandVerdict, GalerkinOperator};
use eulerband_core::Result;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_RED: &[usize] = &[9, 10];

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn on_lattice(p: &TorusPoint, values: &[f64], tol: f64) -> bool {
    values.iter().any(|a| {
        values
            .iter()
            .any(|b| p.dist(&TorusPoint::new(*a, *b)) <= tol)
    })
}

fn census() -> Result<Verdict> {
    let psi = FourierStream::cellular();
    let points = critical::find_stagnation_points(&psi, 64, 1e-12)?;
    let mut worst: f64 = 0.0;
    let mut ok = points.len() == 8;
    let (mut saddles, mut centers) = (0, 0);
    for p in &points {
        match p.kind {
            PointKind::Hyperbolic { lambda } => {
                saddles += 1;
                worst = worst.max((lambda - 1.0).abs());
                ok &= (lambda - 1.0).abs() <= 1e-6 && on_lattice(&p.location, &[0.0, PI], 1e-9);
            }
            PointKind::Elliptic { .. } => {
                centers += 1;
                ok &= on_lattice(&p.location, &[FRAC_PI_2, 3.0 * FRAC_PI_2], 1e-9);
            }
            PointKind::Degenerate => ok = false,
        }
    }
    ok &= saddles == 4 && centers == 4;
    check(
        ok,
        format!(
            "{} points ({saddles} hyperbolic, {centers} elliptic), max |λ − 1| = {worst:.1e}",
            points.len()
        ),
    )
}

fn lyapunov() -> Result<Verdict> {
    let cellular = FourierStream::cellular();
    let shear = FourierStream::shear();
    let stag = critical::max_lyapunov_stagnation(&cellular)?.value;
    let census = critical::find_stagnation_points(&cellular, 64, 1e-12)?;
    let seeds = critical::default_direct_seeds(&cellular, &census);
    let direct = critical::max_lyapunov_direct(&cellular, 30.0, &seeds, &cfg())?.value;
    let shear_stag = critical::max_lyapunov_stagnation(&shear)?.value;
    let shear_census = critical::find_stagnation_points(&shear, 64, 1e-12)?;
    let shear_seeds = critical::default_direct_seeds(&shear, &shear_census);
    let shear_direct = critical::max_lyapunov_direct(&shear, 50.0, &shear_seeds, &cfg())?.value;
    check(
        (stag - 1.0).abs() <= 1e-8
            && (direct - stag).abs() <= 0.15 * stag
            && shear_stag == 0.0
            && shear_direct <= 0.1,
        format!(
            "cellular stagnation {stag:.12}, direct(30) {direct:.6}; shear stagnation {shear_stag}, direct(50) {shear_direct:.4}"
        ),
    )
}

fn invariants() -> Result<Verdict> {
    let psi = FourierStream::cellular();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut det_err, mut psi_err, mut push_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let x = TorusPoint::new(
            rng.gen_range(0.0..std::f64::consts::TAU),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let t = rng.gen_range(-20.0..20.0);
        let (y, dphi) = dynamics::variational_flow(&psi, x, t, &cfg())?;
        det_err = det_err.max((dphi.det() - 1.0).abs());
        psi_err = psi_err.max((psi.value(y) - psi.value(x)).abs());
        let lhs = psi.velocity(y);
        let rhs = dphi.apply(psi.velocity(x));
        push_err = push_err.max((lhs[0] - rhs[0]).hypot(lhs[1] - rhs[1]));
    }
    check(
        det_err <= 1e-6 && psi_err <= 1e-8 && push_err <= 1e-7,
        format!("max |det Dφ − 1| = {det_err:.1e}, |ψ∘φ − ψ| = {psi_err:.1e}, ‖u∘φ − Dφ u‖ = {push_err:.1e}"),
    )
}

fn separatrix() -> Result<Verdict> {
    let psi = FourierStream::cellular();
    let tr = dynamics::speed_profile(
        &psi,
        TorusPoint::new(FRAC_PI_2, 0.0),
        0.0,
        10.0,
        1001,
        &cfg(),
    )?;
    let err = tr
        .times
        .iter()
        .zip(&tr.speeds)
        .map(|(t, s)| (s - 1.0 / t.cosh()).abs())
        .fold(0.0, f64::max);
    check(
        err <= 1e-6,
        format!("max |speed − sech t| on [0, 10] = {err:.1e}"),
    )
}

fn decay() -> Result<Verdict> {
    let psi = FourierStream::cellular();
    let x = TorusPoint::new(FRAC_PI_2, 0.0);
    let spec = |lambda: f64, allow_violation: bool| DecaySpec {
        lambda,
        eps: 0.2,
        horizon: 30.0,
        n_samples: 3001,
        branch: Branch::Stable,
        max_exponent: 1.0,
        allow_violation,
    };
    let ok = critical::decay_check(&psi, x, &spec(0.5, false), &cfg())?;
    let over = critical::decay_check(&psi, x, &spec(0.9, true), &cfg())?;
    check(
        (ok.sup_value - 1.31).abs() <= 0.05 && ok.bounded && !over.bounded,
        format!(
            "λ = 0.5: sup {:.4}, bounded {}; λ = 0.9 override: sup {:.3e}, bounded {}",
            ok.sup_value, ok.bounded, over.sup_value, over.bounded
        ),
    )
}

fn closed_form_bound() -> Result<Verdict> {
    // shear orbit through x₂ = π/2 moves at unit speed
    let psi = FourierStream::shear();
    let g = CutoffGamma::triangle(10.0)?;
    let at = |n: usize| -> Result<f64> {
        let tr = dynamics::speed_profile(
            &psi,
            TorusPoint::new(0.0, FRAC_PI_2),
            -10.0,
            10.0,
            n,
            &cfg(),
        )?;
        Ok(bound::rayleigh_bound(&tr, 0.0, &g)?.bound)
    };
    let (coarse, fine) = (at(2001)?, at(4001)?);
    let exact = 0.03;
    let rel = (coarse / exact - 1.0).abs();
    let moved = (fine / coarse - 1.0).abs();
    check(
        rel <= 1e-3 && moved <= 5e-3,
        format!("bound {coarse:.8} vs 3/N² = 0.03 (rel {rel:.1e}); doubling density moves it {moved:.1e}"),
    )
}

fn bound_sweeps() -> Result<Verdict> {
    let psi = FourierStream::cellular();
    let ks = [10.0, 20.0, 40.0];
    let mut ok = true;
    let mut lines = Vec::new();
    let mut by_lambda = Vec::new();
    for lambda in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let r = bound::bound_sweep(
            &psi,
            lambda,
            &ks,
            MRule::EqualK,
            &SweepOptions::default(),
            &cfg(),
        )?;
        let b: Vec<f64> = r.iter().map(|x| x.bound).collect();
        ok &= b[1] <= b[0] && b[2] <= b[1] && b[2] <= 0.05 && b[2] <= b[0] / 8.0;
        lines.push(format!("{lambda:+}: {:.2e}→{:.2e}", b[0], b[2]));
        by_lambda.push((lambda, b));
    }
    let mut sym: f64 = 0.0;
    for (lambda, b) in &by_lambda {
        if let Some((_, mirror)) = by_lambda.iter().find(|(l, _)| *l == -lambda) {
            for (x, y) in b.iter().zip(mirror) {
                sym = sym.max((x - y).abs() / x.max(*y));
            }
        }
    }
    ok &= sym <= 1e-3;
    check(ok, format!("{}; ±λ rel gap {sym:.1e}", lines.join(", ")))
}

fn galerkin() -> Result<Verdict> {
    let psi = FourierStream::cellular();
    let op = GalerkinOperator::assemble(&psi, 8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        // band 7 keeps L w inside the truncation
        let w: Vec<Complex64> = op
            .index()
            .iter()
            .map(|k| {
                if k.sup_norm() <= 7 {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let field = op.field_from_coeffs(&w, 32)?;
        let from_grid = op.coeffs_from_field(&spectrum::apply_l_grid(&psi, &field)?)?;
        let from_matrix = op.apply(&w);
        let diff: f64 = from_matrix
            .iter()
            .zip(&from_grid)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale: f64 = from_grid.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(diff / scale);
    }
    let skew = op.advection_skew_defect();
    let kernel = spectrum::sigma_min(&op, Complex64::new(0.0, 0.0))?;
    check(
        worst <= 1e-10 && skew <= 1e-12 && kernel <= 1e-10,
        format!(
            "oracle rel err {worst:.1e}, anti-Hermitian defect {skew:.1e}, σ_min(0) = {kernel:.1e}"
        ),
    )
}

fn band() -> Result<Verdict> {
    let n_max = [8, 12, 16];
    let cellular_probes = [
        Complex64::new(0.5, 0.0),
        Complex64::new(1.5, 0.0),
        Complex64::new(0.5, 1.0),
        Complex64::new(1.5, 1.0),
    ];
    let shear_probes = [Complex64::new(0.4, 0.0), Complex64::new(0.0, 0.5)];
    let cell = spectrum::band_profile(&FourierStream::cellular(), &n_max, &cellular_probes)?;
    let shear = spectrum::band_profile(&FourierStream::shear(), &n_max, &shear_probes)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, profile, big_lambda) in [("cellular", &cell, 1.0), ("shear", &shear, 0.0)] {
        for p in &profile.probes {
            let want = if p.probe_re.abs() <= big_lambda {
                BandVerdict::InteriorGrowing
            } else {
                BandVerdict::ExteriorStable
            };
            ok &= p.verdict == want;
            parts.push(format!(
                "{name} {}{:+}i {} (growth {:.2})",
                p.probe_re,
                p.probe_im,
                p.verdict.label(),
                p.growth
            ));
        }
    }
    check(ok, parts.join("; "))
}

fn flow_box() -> Result<Verdict> {
    let psi = FourierStream::cellular();
    let census = critical::find_stagnation_points(&psi, 64, 1e-12)?;
    let (lambda, k, m) = (0.5, 8.0, 8.0);
    let rb = bound::bound_at(
        &psi,
        &census,
        lambda,
        k,
        m,
        &SweepOptions::default(),
        &cfg(),
    )?;
    let target = rb.bound.sqrt();
    let base =
        critical::separatrix_base(&psi, &census, lambda, k, critical::SEPARATRIX_EPS, &cfg())?;
    let mut quotient = f64::NAN;
    let mut pairings = Vec::new();
    for s in [0.1, 0.05, 0.025] {
        let chart = FlowBoxChart::new(&psi, base.x0, k + 2.0 * m + 1.0, s, &cfg())?;
        let spec = RasterSpec {
            lambda,
            xi: 0.0,
            gamma: CutoffGamma::for_lambda(lambda, k, m)?,
            beta: CutoffBeta::new(s)?,
            n: 512,
        };
        let pair = flowbox::rasterize_pair(&chart, &spec)?;
        if s == 0.05 {
            quotient = spectrum::residual_quotient(&psi, &pair)?.full;
        }
        pairings.push(flowbox::weak_pairings(&pair.f)?);
    }
    let in_window = quotient <= 2.0 * target && quotient >= target / 2.0;
    let per_field = (0..pairings[0].len()).all(|j| pairings.windows(2).all(|w| w[1][j] < w[0][j]));
    let maxima: Vec<f64> = pairings
        .iter()
        .map(|p| p.iter().copied().fold(0.0, f64::max))
        .collect();
    check(
        in_window && per_field,
        format!(
            "quotient {quotient:.4} vs √bound {target:.4} (ratio {:.2}); pairings monotone per field: {per_field}, max {:.4}/{:.4}/{:.4} (discretization-limited)",
            quotient / target,
            maxima[0],
            maxima[1],
            maxima[2]
        ),
    )
}

fn semigroup() -> Result<Verdict> {
    let psi = FourierStream::cellular();
    let small = spectrum::semigroup_annulus(&GalerkinOperator::assemble(&psi, 8)?, 1.0, 1.0)?;
    let large = spectrum::semigroup_annulus(&GalerkinOperator::assemble(&psi, 12)?, 2.0, 1.0)?;
    check(
        small.mapping_error <= 1e-8 && (0.5..=1.5).contains(&large.rate),
        format!(
            "mapping error {:.1e} (n_max 8, t 1; {:.1e} at n_max 12, t 2); rate {:.4} (n_max 12, t 2)",
            small.mapping_error, large.mapping_error, large.rate
        ),
    )
}

type Criterion = (
    usize,
    &'static str,
    Option<Duration>,
    fn() -> Result<Verdict>,
);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "stagnation census", Some(Duration::from_secs(2)), census),
        (
            2,
            "maximal exponent by both routes",
            Some(Duration::from_secs(60)),
            lyapunov,
        ),
        (3, "dynamics invariants", None, invariants),
        (4, "closed-form separatrix", None, separatrix),
        (5, "separatrix decay", None, decay),
        (6, "closed-form bound", None, closed_form_bound),
        (
            7,
            "bound sweeps",
            Some(Duration::from_secs(120)),
            bound_sweeps,
        ),
        (8, "Galerkin correctness", None, galerkin),
        (9, "band profile", Some(Duration::from_secs(600)), band),
        (10, "flow-box integration", None, flow_box),
        (11, "semigroup diagnostic", None, semigroup),
    ];
    let mut passed = 0;
    let mut unexpected = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(v) => {
                let on_time = budget.map_or(true, |b| elapsed <= b);
                let timing = if on_time {
                    String::new()
                } else {
                    " [over time budget]".into()
                };
                (v.pass && on_time, format!("{}{timing}", v.detail))
            }
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = match (pass, KNOWN_RED.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!(
            "{tag} [{id:>2}] {name}: {detail} ({:.2} s)",
            elapsed.as_secs_f64()
        );
        if pass {
            passed += 1;
        } else if !KNOWN_RED.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/11 pass");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
