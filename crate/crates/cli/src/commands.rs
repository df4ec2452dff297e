//! Subcommands of the `eulerband` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use eulerband_core::bound::{self, SweepOptions};
use eulerband_core::critical::{self, Branch, DecaySpec};
use eulerband_core::dynamics::IntegratorConfig;
use eulerband_core::flowbox::{self, CutoffBeta, CutoffGamma, FlowBoxChart, RasterSpec};
use eulerband_core::flowfield::{FourierStream, ModeSpec};
use eulerband_core::spectrum::{self, GalerkinOperator};

use crate::certify::{run_certify, write_outputs};
use crate::config::{MSetting, RunConfig};
use crate::{export, svg, AtStage, CliError, Outcome, Stage, PEAK_SPAN};

#[derive(Debug, Parser)]
#[command(
    name = "eulerband",
    version,
    about = "Band spectrum of linearized 2D Euler about steady flows"
)]
pub struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Built-in flows.
    Flows {
        #[command(subcommand)]
        action: FlowsAction,
    },
    /// Stagnation-point census as CSV.
    Stagnation {
        #[command(flatten)]
        flow: FlowArg,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Maximal Lyapunov exponent by one or both routes.
    Lyapunov {
        #[command(flatten)]
        flow: FlowArg,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        #[arg(long, default_value_t = 30.0)]
        horizon: f64,
        #[command(flatten)]
        integrator: IntegratorArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Weighted speed along a separatrix; exits 2 when growth is detected.
    Decay {
        #[command(flatten)]
        flow: FlowArg,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 30.0)]
        horizon: f64,
        #[arg(long, default_value_t = 3001)]
        samples: usize,
        /// Run even when `eps` breaks the admissibility condition.
        #[arg(long)]
        allow_violation: bool,
        #[command(flatten)]
        integrator: IntegratorArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Rayleigh bound sweep; exits 2 unless the bound is nonincreasing in K.
    Bound {
        #[command(flatten)]
        flow: FlowArg,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long = "K", value_delimiter = ',', required = true)]
        k: Vec<f64>,
        /// `equal` or a number.
        #[arg(long = "M", default_value = "equal")]
        m: String,
        #[command(flatten)]
        integrator: IntegratorArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Resolvent norms of the Galerkin truncation on a rectangle.
    Pseudospec {
        #[command(flatten)]
        flow: FlowArg,
        #[arg(long)]
        nmax: i32,
        /// `lo:hi:step`
        #[arg(long, allow_hyphen_values = true)]
        re: String,
        /// `lo:hi:step`
        #[arg(long, allow_hyphen_values = true)]
        im: String,
        #[command(flatten)]
        out: OutArg,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Rasterized flow-box field `f` as a grid CSV, with its H¹ quotients on stdout.
    Raster {
        #[command(flatten)]
        flow: FlowArg,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        xi: f64,
        #[arg(long = "K")]
        k: f64,
        #[arg(long = "M")]
        m: f64,
        #[arg(long, default_value_t = flowbox::DEFAULT_S)]
        s: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Field CSV destination.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        integrator: IntegratorArgs,
    },
    /// Full pipeline from a JSON config; exits 2 when any verdict fails.
    Certify {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output directory of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum FlowsAction {
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Stagnation,
    Direct,
    Both,
}

#[derive(Debug, Args)]
pub struct FlowArg {
    /// Built-in name or a JSON file holding a list of `{"k":[k1,k2],"re":..,"im":..}`.
    #[arg(long)]
    pub flow: String,
}

impl FlowArg {
    pub fn load(&self) -> Result<FourierStream, CliError> {
        if let Some(psi) = FourierStream::builtin(&self.flow) {
            return Ok(psi);
        }
        let path = Path::new(&self.flow);
        if !path.is_file() {
            return Err(CliError::usage(format!(
                "unknown flow '{}', expected one of {} or a JSON file",
                self.flow,
                FourierStream::BUILTINS.join(", ")
            )));
        }
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        let specs: Vec<ModeSpec> = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("flow {}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("fourier");
        FourierStream::from_specs(name, &specs).at(Stage::Steadiness)
    }
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Destination file, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

impl OutArg {
    fn sink<'a>(&self, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, CliError> {
        if self.out.as_os_str() == "-" {
            Ok(Box::new(stdout))
        } else {
            let f = fs::File::create(&self.out)
                .map_err(|e| CliError::io(format!("creating {}", self.out.display()), e))?;
            Ok(Box::new(std::io::BufWriter::new(f)))
        }
    }
}

#[derive(Debug, Args)]
pub struct IntegratorArgs {
    #[arg(long, default_value_t = IntegratorConfig::default().rtol)]
    pub rtol: f64,
    #[arg(long, default_value_t = IntegratorConfig::default().atol)]
    pub atol: f64,
    #[arg(long, default_value_t = IntegratorConfig::default().max_step)]
    pub max_step: f64,
}

impl IntegratorArgs {
    pub fn config(&self) -> Result<IntegratorConfig, CliError> {
        let cfg = IntegratorConfig {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            ..IntegratorConfig::default()
        };
        cfg.validate()
            .map_err(|e| CliError::usage(format!("integrator: {e}")))?;
        Ok(cfg)
    }
}

fn parse_range(s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::usage(format!("range '{s}' is not lo:hi:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    Ok((v[0], v[1], v[2]))
}

fn census_of(psi: &FourierStream) -> Result<Vec<critical::StagnationPoint>, CliError> {
    psi.ensure_steady().at(Stage::Steadiness)?;
    critical::find_stagnation_points(psi, critical::default_seed_grid(psi), 1e-12).at(Stage::Census)
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::io("writing output", e)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Flows {
            action: FlowsAction::List,
        } => {
            writeln!(stdout, "name,modes,max_wavenumber,max_speed").map_err(io_err)?;
            for name in FourierStream::BUILTINS {
                let psi = FourierStream::builtin(name).expect("listed builtin");
                writeln!(
                    stdout,
                    "{name},{},{},{}",
                    psi.coeffs().len(),
                    psi.max_wavenumber(),
                    psi.max_speed(128)
                )
                .map_err(io_err)?;
            }
            Ok(Outcome::Pass)
        }

        Command::Stagnation { flow, grid, out } => {
            let psi = flow.load()?;
            psi.ensure_steady().at(Stage::Steadiness)?;
            let census = critical::find_stagnation_points(&psi, *grid, 1e-12).at(Stage::Census)?;
            export::write_census(out.sink(stdout)?, &census)?;
            Ok(Outcome::Pass)
        }

        Command::Lyapunov {
            flow,
            method,
            horizon,
            integrator,
            out,
        } => {
            let psi = flow.load()?;
            let cfg = integrator.config()?;
            let census = census_of(&psi)?;
            let mut estimates = Vec::new();
            if matches!(method, Method::Stagnation | Method::Both) {
                estimates.push(("stagnation", critical::lyapunov_from_census(&census)));
            }
            if matches!(method, Method::Direct | Method::Both) {
                let seeds = critical::default_direct_seeds(&psi, &census);
                let est = critical::max_lyapunov_direct(&psi, *horizon, &seeds, &cfg)
                    .at(Stage::Lyapunov)?;
                estimates.push(("direct", est));
            }
            let mut w = out.sink(stdout)?;
            writeln!(w, "method,value,witness_x1,witness_x2").map_err(io_err)?;
            for (name, est) in estimates {
                match est.witnesses.first() {
                    Some(p) => {
                        writeln!(w, "{name},{},{},{}", est.value, p.point.x1(), p.point.x2())
                    }
                    None => writeln!(w, "{name},{},,", est.value),
                }
                .map_err(io_err)?;
            }
            Ok(Outcome::Pass)
        }

        Command::Decay {
            flow,
            lambda,
            eps,
            horizon,
            samples,
            allow_violation,
            integrator,
            out,
        } => {
            let psi = flow.load()?;
            let cfg = integrator.config()?;
            let census = census_of(&psi)?;
            let big_lambda = critical::lyapunov_from_census(&census).value;
            let base = critical::separatrix_base(
                &psi,
                &census,
                *lambda,
                0.0,
                critical::SEPARATRIX_EPS,
                &cfg,
            )
            .at(Stage::Decay)?;
            let spec = DecaySpec {
                lambda: *lambda,
                eps: *eps,
                horizon: *horizon,
                n_samples: *samples,
                branch: base.branch,
                max_exponent: big_lambda,
                allow_violation: *allow_violation,
            };
            let x = critical::separatrix_peak(&psi, &base, PEAK_SPAN, &cfg).at(Stage::Decay)?;
            let res = critical::decay_check(&psi, x, &spec, &cfg).at(Stage::Decay)?;
            let branch = match base.branch {
                Branch::Stable => "stable",
                Branch::Unstable => "unstable",
            };
            let mut w = out.sink(stdout)?;
            writeln!(w, "lambda,eps,horizon,branch,sup_value,argmax_t,bounded").map_err(io_err)?;
            writeln!(
                w,
                "{lambda},{eps},{horizon},{branch},{},{},{}",
                res.sup_value, res.argmax_t, res.bounded
            )
            .map_err(io_err)?;
            Ok(Outcome::from_pass(res.bounded))
        }

        Command::Bound {
            flow,
            lambda,
            k,
            m,
            integrator,
            out,
        } => {
            let psi = flow.load()?;
            let cfg = integrator.config()?;
            let rule = match m.parse::<f64>() {
                Ok(v) => MSetting::Fixed(v),
                Err(_) => MSetting::Named(m.clone()),
            }
            .rule()?;
            let res = bound::bound_sweep(&psi, *lambda, k, rule, &SweepOptions::default(), &cfg)
                .at(Stage::Bound)?;
            export::write_bounds(out.sink(stdout)?, &res)?;
            Ok(Outcome::from_pass(
                res.windows(2).all(|w| w[1].bound <= w[0].bound),
            ))
        }

        Command::Pseudospec {
            flow,
            nmax,
            re,
            im,
            out,
            svg: svg_path,
        } => {
            let psi = flow.load()?;
            let (re, im) = (parse_range(re)?, parse_range(im)?);
            let census = census_of(&psi)?;
            let op = GalerkinOperator::assemble(&psi, *nmax).at(Stage::Pseudospectrum)?;
            let points = spectrum::pseudospectrum_grid(&op, re, im).at(Stage::Pseudospectrum)?;
            export::write_pseudospectrum(out.sink(stdout)?, &points)?;
            if let Some(path) = svg_path {
                let big_lambda = critical::lyapunov_from_census(&census).value;
                fs::write(path, svg::resolvent_heatmap(&points, big_lambda))
                    .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
            }
            Ok(Outcome::Pass)
        }

        Command::Raster {
            flow,
            lambda,
            xi,
            k,
            m,
            s,
            grid,
            out,
            svg: svg_path,
            integrator,
        } => {
            let psi = flow.load()?;
            let cfg = integrator.config()?;
            let census = census_of(&psi)?;
            let base = critical::separatrix_base(
                &psi,
                &census,
                *lambda,
                *k,
                critical::SEPARATRIX_EPS,
                &cfg,
            )
            .at(Stage::Raster)?;
            let chart =
                FlowBoxChart::new(&psi, base.x0, k + 2.0 * m + 1.0, *s, &cfg).at(Stage::Raster)?;
            let spec = RasterSpec {
                lambda: *lambda,
                xi: *xi,
                gamma: CutoffGamma::for_lambda(*lambda, *k, *m).at(Stage::Raster)?,
                beta: CutoffBeta::new(*s).at(Stage::Raster)?,
                n: *grid,
            };
            let pair = flowbox::rasterize_pair(&chart, &spec).at(Stage::Raster)?;
            let q = spectrum::residual_quotient(&psi, &pair).at(Stage::Raster)?;
            let rb = bound::bound_at(
                &psi,
                &census,
                *lambda,
                *k,
                *m,
                &SweepOptions::default(),
                &cfg,
            )
            .at(Stage::Bound)?;

            let file = fs::File::create(out)
                .map_err(|e| CliError::io(format!("creating {}", out.display()), e))?;
            export::write_field(std::io::BufWriter::new(file), &pair.f)?;
            if let Some(path) = svg_path {
                fs::write(path, svg::field_heatmap(&pair.f))
                    .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
            }
            let rows = [
                ("rails", pair.stats.rails as f64),
                ("time_samples", pair.stats.time_samples as f64),
                ("h1_norm", pair.f.h1_seminorm()),
                ("residual_quotient", q.full),
                ("advective_quotient", q.advective),
                ("compact_quotient", q.compact),
                ("rayleigh_bound", rb.bound),
                ("sqrt_rayleigh_bound", rb.bound.sqrt()),
            ];
            writeln!(stdout, "quantity,value").map_err(io_err)?;
            for (name, v) in rows {
                writeln!(stdout, "{name},{v}").map_err(io_err)?;
            }
            Ok(Outcome::Pass)
        }

        Command::Certify { config, out } => {
            let mut cfg = RunConfig::load(config)?;
            if let Some(dir) = out {
                cfg.out = dir.clone();
            }
            let report = run_certify(&cfg)?;
            write_outputs(&report, &cfg.out)?;
            writeln!(stdout, "{}", report.headline).map_err(io_err)?;
            for l in &report.lambdas {
                writeln!(stdout, "lambda {:+.3}: {}", l.lambda, l.label).map_err(io_err)?;
            }
            for b in &report.band_verdicts {
                writeln!(
                    stdout,
                    "probe {}{:+}i: {} (expected {})",
                    b.probe_re,
                    b.probe_im,
                    b.observed.label(),
                    b.expected.label()
                )
                .map_err(io_err)?;
            }
            Ok(Outcome::from_pass(report.all_pass))
        }
    }
}
