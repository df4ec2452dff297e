//! End-to-end certification of the band `|Re α| ≤ Λ` for one flow.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use eulerband_core::bound::{self, BoundResult, SweepOptions};
use eulerband_core::critical::{
    self, Branch, DecayOutcome, DecaySpec, LyapunovEstimate, StagnationPoint,
};
use eulerband_core::flowfield::FourierStream;
use eulerband_core::spectrum::{
    self, AnnulusDiagnostics, BandProfile, BandVerdict, GalerkinOperator, PseudoPoint,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::export::CensusRow;
use crate::{export, svg, AtStage, CliError, Stage, PEAK_SPAN};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Key of the only nondeterministic report field.
pub const TIMESTAMP_KEY: &str = "timestamp";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSummary {
    pub name: String,
    pub modes: usize,
    pub max_wavenumber: i32,
    pub steadiness_residual: f64,
    pub max_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaSummary {
    pub stagnation: LyapunovEstimate,
    pub direct: LyapunovEstimate,
    pub direct_horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVerdict {
    DecayCertified,
    NotCertified,
    /// `|λ| ≥ Λ`; reported, never dropped.
    OutsideBand,
    /// `Λ = 0`: the open interval is empty.
    Skipped,
}

impl DecayVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            DecayVerdict::DecayCertified => "decay certified",
            DecayVerdict::NotCertified => "not certified",
            DecayVerdict::OutsideBand => "outside band",
            DecayVerdict::Skipped => "skipped",
        }
    }

    pub fn passes(&self) -> bool {
        matches!(self, DecayVerdict::DecayCertified | DecayVerdict::Skipped)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaVerdict {
    pub lambda: f64,
    pub branch: Option<Branch>,
    pub eps: Option<f64>,
    pub decay: Option<DecayOutcome>,
    pub bounds: Vec<BoundResult>,
    pub bounds_nonincreasing: bool,
    pub verdict: DecayVerdict,
    pub label: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeVerdict {
    pub probe_re: f64,
    pub probe_im: f64,
    pub expected: BandVerdict,
    pub observed: BandVerdict,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub timestamp: String,
    pub config: RunConfig,
    pub headline: String,
    pub flow: FlowSummary,
    pub big_lambda: LambdaSummary,
    pub census: Vec<CensusRow>,
    pub lambdas: Vec<LambdaVerdict>,
    pub band: BandProfile,
    pub band_verdicts: Vec<ProbeVerdict>,
    pub annulus: AnnulusDiagnostics,
    pub pseudospectrum_n_max: i32,
    pub all_pass: bool,
    #[serde(skip)]
    pub stagnation_points: Vec<StagnationPoint>,
    #[serde(skip)]
    pub pseudospectrum: Vec<PseudoPoint>,
}

impl CertificationReport {
    pub fn bounds(&self) -> Vec<BoundResult> {
        self.lambdas
            .iter()
            .flat_map(|l| l.bounds.iter().copied())
            .collect()
    }

    /// Report JSON with the timestamp blanked, for reproducibility checks.
    pub fn deterministic_json(&self) -> Result<String, CliError> {
        let mut v = serde_json::to_value(self)?;
        v[TIMESTAMP_KEY] = serde_json::Value::Null;
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

/// Closed band: `|Re α| ≤ Λ` is expected to grow, anything outside to stay flat.
pub fn expected_verdict(probe_re: f64, big_lambda: f64) -> BandVerdict {
    if probe_re.abs() <= big_lambda {
        BandVerdict::InteriorGrowing
    } else {
        BandVerdict::ExteriorStable
    }
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("{secs}")
}

fn lambda_verdict(
    psi: &FourierStream,
    census: &[StagnationPoint],
    big_lambda: f64,
    lambda: f64,
    config: &RunConfig,
) -> Result<LambdaVerdict, CliError> {
    let empty = |verdict: DecayVerdict| LambdaVerdict {
        lambda,
        branch: None,
        eps: None,
        decay: None,
        bounds: Vec::new(),
        bounds_nonincreasing: false,
        verdict,
        label: verdict.label(),
    };
    if big_lambda <= 0.0 {
        return Ok(empty(DecayVerdict::Skipped));
    }
    if lambda.abs() >= big_lambda {
        return Ok(empty(DecayVerdict::OutsideBand));
    }
    let cfg = &config.integrator;
    let base = critical::separatrix_base(psi, census, lambda, 0.0, critical::SEPARATRIX_EPS, cfg)
        .at(Stage::Decay)?;
    let eps = config.decay.eps_fraction * critical::max_decay_eps(lambda, big_lambda, base.branch);
    let spec = DecaySpec {
        lambda,
        eps,
        horizon: config.decay.horizon,
        n_samples: config.decay.n_samples,
        branch: base.branch,
        max_exponent: big_lambda,
        allow_violation: false,
    };
    let x = critical::separatrix_peak(psi, &base, PEAK_SPAN, cfg).at(Stage::Decay)?;
    let decay = critical::decay_check(psi, x, &spec, cfg).at(Stage::Decay)?;

    let rule = config.sweep.m.rule()?;
    let opts = SweepOptions::default();
    let bounds: Vec<BoundResult> = config
        .sweep
        .k
        .par_iter()
        .map(|&k| bound::bound_at(psi, census, lambda, k, rule.m_for(k), &opts, cfg))
        .collect::<eulerband_core::Result<_>>()
        .at(Stage::Bound)?;
    let nonincreasing = bounds.windows(2).all(|w| w[1].bound <= w[0].bound);
    let verdict = if decay.bounded && nonincreasing {
        DecayVerdict::DecayCertified
    } else {
        DecayVerdict::NotCertified
    };
    Ok(LambdaVerdict {
        lambda,
        branch: Some(base.branch),
        eps: Some(eps),
        decay: Some(decay),
        bounds,
        bounds_nonincreasing: nonincreasing,
        verdict,
        label: verdict.label(),
    })
}

/// Runs the whole pipeline in memory; see [`write_outputs`] for the files.
pub fn run_certify(config: &RunConfig) -> Result<CertificationReport, CliError> {
    config.validate()?;
    let cfg = &config.integrator;

    let psi = config.flow.build()?;
    psi.ensure_steady().at(Stage::Steadiness)?;
    let flow = FlowSummary {
        name: psi.name().to_string(),
        modes: psi.coeffs().len(),
        max_wavenumber: psi.max_wavenumber(),
        steadiness_residual: psi.steadiness_residual(64),
        max_speed: psi.max_speed(128),
    };

    let census = critical::find_stagnation_points(&psi, critical::default_seed_grid(&psi), 1e-12)
        .at(Stage::Census)?;

    let stagnation = critical::lyapunov_from_census(&census);
    let seeds = critical::default_direct_seeds(&psi, &census);
    let direct = critical::max_lyapunov_direct(&psi, config.lyapunov_horizon, &seeds, cfg)
        .at(Stage::Lyapunov)?;
    let big_lambda = stagnation.value;

    let lambdas = config
        .sweep
        .lambdas
        .iter()
        .map(|&l| lambda_verdict(&psi, &census, big_lambda, l, config))
        .collect::<Result<Vec<_>, _>>()?;

    let probes: Vec<Complex64> = config
        .spectrum
        .probes
        .iter()
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    let band =
        spectrum::band_profile(&psi, &config.spectrum.n_max, &probes).at(Stage::BandProfile)?;
    let band_verdicts: Vec<ProbeVerdict> = band
        .probes
        .iter()
        .map(|p| {
            let expected = expected_verdict(p.probe_re, big_lambda);
            ProbeVerdict {
                probe_re: p.probe_re,
                probe_im: p.probe_im,
                expected,
                observed: p.verdict,
                pass: expected == p.verdict,
            }
        })
        .collect();

    let op = GalerkinOperator::assemble(&psi, config.annulus.n_max).at(Stage::Annulus)?;
    let annulus =
        spectrum::semigroup_annulus(&op, config.annulus.t, big_lambda).at(Stage::Annulus)?;

    let grid_n = config.grid_n_max();
    let op = GalerkinOperator::assemble(&psi, grid_n).at(Stage::Pseudospectrum)?;
    let g = &config.spectrum.grid;
    let pseudospectrum = spectrum::pseudospectrum_grid(
        &op,
        (g.re[0], g.re[1], g.re[2]),
        (g.im[0], g.im[1], g.im[2]),
    )
    .at(Stage::Pseudospectrum)?;

    let all_pass =
        lambdas.iter().all(|l| l.verdict.passes()) && band_verdicts.iter().all(|b| b.pass);
    let decay_pass = lambdas.iter().filter(|l| l.verdict.passes()).count();
    let band_pass = band_verdicts.iter().filter(|b| b.pass).count();
    let headline = format!(
        "flow '{}': Λ = {big_lambda:.6}, claimed essential spectrum |Re α| ≤ Λ; decay verdicts {decay_pass}/{} pass, band verdicts {band_pass}/{} pass",
        psi.name(),
        lambdas.len(),
        band_verdicts.len()
    );
    Ok(CertificationReport {
        tool: TOOL,
        version: VERSION,
        timestamp: timestamp(),
        config: config.clone(),
        headline,
        flow,
        big_lambda: LambdaSummary {
            stagnation,
            direct,
            direct_horizon: config.lyapunov_horizon,
        },
        census: census.iter().map(CensusRow::from).collect(),
        lambdas,
        band,
        band_verdicts,
        annulus,
        pseudospectrum_n_max: grid_n,
        all_pass,
        stagnation_points: census,
        pseudospectrum,
    })
}

fn create(dir: &Path, name: &str) -> Result<fs::File, CliError> {
    let path = dir.join(name);
    fs::File::create(&path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// Names of the files written by [`write_outputs`].
pub const OUTPUT_FILES: [&str; 6] = [
    "report.json",
    "census.csv",
    "bound.csv",
    "band_profile.csv",
    "pseudospectrum.csv",
    "pseudospectrum.svg",
];

pub fn write_outputs(report: &CertificationReport, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let json = serde_json::to_string_pretty(report)?;
    write_text(dir, OUTPUT_FILES[0], &(json + "\n"))?;
    export::write_census(create(dir, OUTPUT_FILES[1])?, &report.stagnation_points)?;
    export::write_bounds(create(dir, OUTPUT_FILES[2])?, &report.bounds())?;
    export::write_band(create(dir, OUTPUT_FILES[3])?, &report.band.rows)?;
    export::write_pseudospectrum(create(dir, OUTPUT_FILES[4])?, &report.pseudospectrum)?;
    let big_lambda = report.big_lambda.stagnation.value;
    write_text(
        dir,
        OUTPUT_FILES[5],
        &svg::resolvent_heatmap(&report.pseudospectrum, big_lambda),
    )
}
