//! Command-line interface: point counts, exponential sums, local densities,
//! singular integrals, and configured experiments. Exit codes: 0 success,
//! 1 tolerance failure in an experiment, 2 usage or configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use bqc_cli::config::{load_config, load_form_file, CliError};
use bqc_cli::experiment::{run_experiment, write_report};
use bqc_cli::report::fmt_float;
use bqc_core::archimedean::{
    joint_singular_integral, sigma_infinity, IntegralEstimate, WeightFunction, DEFAULT_DELTAS,
};
use bqc_core::counting::{
    count_a, count_nu, count_nx, count_quadric_box, count_quadric_weighted, count_tilde,
    CountRecord, CountValue, NuRoute, QuadricMethod,
};
use bqc_core::expsums::{expsum, expsum_brute, sigma_n_sum};
use bqc_core::forms::Form;
use bqc_core::padic::{joint_singular_series, singular_series_routes, DensityEstimate};

#[derive(Parser)]
#[command(
    name = "bqc",
    version,
    about = "Counts, exponential sums, and densities for quadrics and biquadratic hypersurfaces"
)]
struct Cli {
    /// Work budget in enumeration units; oversized requests error out
    #[arg(long, global = true, env = "BQC_BUDGET", default_value_t = bqc_core::DEFAULT_BUDGET)]
    budget: u64,
    /// Seed for Monte Carlo estimates
    #[arg(long, global = true, env = "BQC_SEED", default_value_t = 0)]
    seed: u64,
    /// Output path (stdout when absent); experiments write <out>.csv and <out>.json
    #[arg(long, global = true, env = "BQC_OUT")]
    out: Option<PathBuf>,
    /// Output format for single-result commands
    #[arg(long, global = true, env = "BQC_FORMAT", value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Naive,
    Slice,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weight {
    Box,
    AnnularInner,
    AnnularOuter,
}

#[derive(Clone, Copy, ValueEnum)]
enum Restrict {
    Pairs,
    Tilde,
    Slice,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Direct,
    Mobius,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpMethod {
    Crt,
    Brute,
}

#[derive(Subcommand)]
enum Command {
    /// Count integer zeros of a quadratic form in a box, optionally weighted
    CountQuadric {
        /// Form file (quadratic JSON)
        #[arg(long)]
        form: PathBuf,
        /// Box half-width B
        #[arg(long)]
        b: u64,
        #[arg(long, value_enum, default_value_t = Method::Slice)]
        method: Method,
        /// Weight the count by w(x/B) instead of the sharp box
        #[arg(long, value_enum)]
        weight: Option<Weight>,
        /// Box weight half-width
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Annular weight transition width
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
    },
    /// Count pairs on a biquadratic hypersurface, or the zeros of one slice
    CountBiquadratic {
        /// Form file (biquadratic JSON)
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        x_bound: u64,
        #[arg(long)]
        y_bound: u64,
        /// pairs: both slice determinants nonzero; tilde: x-side only;
        /// slice: zeros of F(x; .) for the fixed --x
        #[arg(long, value_enum, default_value_t = Restrict::Pairs)]
        restrict: Restrict,
        /// Fixed x vector for --restrict slice, comma-separated
        #[arg(long)]
        x: Option<String>,
    },
    /// Count height-bounded points off the degenerate locus, modulo signs
    CountNu {
        #[arg(long)]
        form: PathBuf,
        /// Anticanonical height bound B
        #[arg(long)]
        bound: f64,
        #[arg(long, value_enum, default_value_t = Route::Direct)]
        route: Route,
    },
    /// Evaluate one complete exponential sum S_q(c)
    Expsum {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        q: u64,
        /// Frequency vector, comma-separated; zeros when absent
        #[arg(long)]
        c: Option<String>,
        #[arg(long, value_enum, default_value_t = ExpMethod::Crt)]
        method: ExpMethod,
    },
    /// Dyadic block sum of |S_q(c)| over x/2 < q <= x
    SigmaN {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        c: Option<String>,
    },
    /// Singular series: both routes for a quadratic form, the joint series
    /// for a biquadratic form
    SingularSeries {
        #[arg(long)]
        form: PathBuf,
        #[arg(long, default_value_t = 40)]
        q_max: u64,
        #[arg(long, default_value_t = 40)]
        p_max: u64,
    },
    /// Monte Carlo singular integral of a quadratic form
    SigmaInfinity {
        #[arg(long)]
        form: PathBuf,
        #[arg(long, value_enum, default_value_t = Weight::Box)]
        weight: Weight,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        /// Decreasing delta schedule, comma-separated
        #[arg(long)]
        deltas: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Monte Carlo joint singular integral of a biquadratic form
    JointIntegral {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        deltas: Option<String>,
        #[arg(long, default_value_t = 400_000)]
        samples: u64,
    },
    /// Run a configured experiment; writes <out>.csv and <out>.json
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_i64_list(text: &str) -> Result<Vec<i64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|e| CliError::Config(format!("bad integer {t:?} in list: {e}")))
        })
        .collect()
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad number {t:?} in list: {e}")))
        })
        .collect()
}

fn make_weight(kind: Weight, kappa: f64, eta: f64) -> Result<WeightFunction, CliError> {
    Ok(match kind {
        Weight::Box => WeightFunction::box_w0(kappa)?,
        Weight::AnnularInner => WeightFunction::annular_w1(eta)?,
        Weight::AnnularOuter => WeightFunction::annular_w2(eta)?,
    })
}

fn quadratic(form: Form) -> Result<bqc_core::forms::QuadraticForm, CliError> {
    match form {
        Form::Quadratic(f) => Ok(f),
        Form::Biquadratic(_) => Err(CliError::Config("this command needs a quadratic form".into())),
    }
}

fn biquadratic(form: Form) -> Result<bqc_core::forms::BiquadraticForm, CliError> {
    match form {
        Form::Biquadratic(f) => Ok(f),
        Form::Quadratic(_) => Err(CliError::Config("this command needs a biquadratic form".into())),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent).map_err(|source| CliError::Io {
                        path: parent.to_path_buf(),
                        source,
                    })?;
                }
            }
            fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source })
        }
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn count_value_field(v: &CountValue) -> String {
    match v {
        CountValue::Integer(c) => c.to_string(),
        CountValue::Real(c) => fmt_float(*c),
    }
}

fn opt_field(v: &Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn render_count(rec: &CountRecord, format: Format) -> String {
    match format {
        Format::Csv => format!(
            "form_id,method,b,x_bound,y_bound,count,seconds\n{},{},{},{},{},{},{:.3}\n",
            rec.form_id,
            rec.method,
            opt_field(&rec.b),
            opt_field(&rec.x_bound),
            opt_field(&rec.y_bound),
            count_value_field(&rec.count),
            rec.seconds,
        ),
        Format::Json => serde_json::to_string_pretty(&json!({
            "form_id": rec.form_id,
            "method": rec.method,
            "b": rec.b,
            "x_bound": rec.x_bound,
            "y_bound": rec.y_bound,
            "count": match rec.count {
                CountValue::Integer(c) => json!(c.to_string()),
                CountValue::Real(c) => json!(fmt_float(c)),
            },
            "seconds": rec.seconds,
        }))
        .expect("count serialization cannot fail"),
    }
}

fn render_integral(est: &IntegralEstimate, format: Format) -> String {
    let deltas = est
        .delta_schedule
        .iter()
        .map(|d| format!("{d}"))
        .collect::<Vec<_>>()
        .join(";");
    match format {
        Format::Csv => format!(
            "value,stderr,samples,seed,deltas\n{},{},{},{},{}\n",
            fmt_float(est.value),
            fmt_float(est.mc_stderr),
            est.samples,
            est.seed,
            deltas,
        ),
        Format::Json => serde_json::to_string_pretty(&json!({
            "value": fmt_float(est.value),
            "stderr": fmt_float(est.mc_stderr),
            "samples": est.samples,
            "seed": est.seed,
            "deltas": est.delta_schedule,
        }))
        .expect("integral serialization cannot fail"),
    }
}

fn density_csv_row(est: &DensityEstimate) -> String {
    format!(
        "{},{},{}\n",
        est.route.name(),
        fmt_float(est.value),
        fmt_float(est.tail_bound)
    )
}

fn density_json(est: &DensityEstimate) -> serde_json::Value {
    json!({
        "route": est.route.name(),
        "value": fmt_float(est.value),
        "tail_bound": fmt_float(est.tail_bound),
        "params": est.params,
    })
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let budget = cli.budget;
    match cli.command {
        Command::CountQuadric { form, b, method, weight, kappa, eta } => {
            let f = quadratic(load_form_file(&form)?)?;
            let rec = match weight {
                None => {
                    let m = match method {
                        Method::Naive => QuadricMethod::Naive,
                        Method::Slice => QuadricMethod::Slice,
                    };
                    count_quadric_box(&f, b, m, budget)?
                }
                Some(w) => count_quadric_weighted(&f, &make_weight(w, kappa, eta)?, b, budget)?,
            };
            emit(&cli.out, &render_count(&rec, cli.format))?;
        }
        Command::CountBiquadratic { form, x_bound, y_bound, restrict, x } => {
            let f = biquadratic(load_form_file(&form)?)?;
            let rec = match restrict {
                Restrict::Pairs => count_a(&f, x_bound, y_bound, budget)?,
                Restrict::Tilde => count_tilde(&f, x_bound, y_bound, budget)?,
                Restrict::Slice => {
                    let text = x.ok_or_else(|| {
                        CliError::Config("--restrict slice needs --x \"x1,...,xn\"".into())
                    })?;
                    let xv = parse_i64_list(&text)?;
                    if xv.len() != f.n() {
                        return Err(CliError::Config(format!(
                            "--x has {} coordinates, form has n = {}",
                            xv.len(),
                            f.n()
                        )));
                    }
                    count_nx(&f, &xv, y_bound, budget)?
                }
            };
            emit(&cli.out, &render_count(&rec, cli.format))?;
        }
        Command::CountNu { form, bound, route } => {
            let f = biquadratic(load_form_file(&form)?)?;
            let r = match route {
                Route::Direct => NuRoute::Direct,
                Route::Mobius => NuRoute::Mobius,
            };
            let rec = count_nu(&f, bound, r, budget)?;
            emit(&cli.out, &render_count(&rec, cli.format))?;
        }
        Command::Expsum { form, q, c, method } => {
            let f = quadratic(load_form_file(&form)?)?;
            let cv = match c {
                Some(text) => parse_i64_list(&text)?,
                None => vec![0; f.n()],
            };
            if cv.len() != f.n() {
                return Err(CliError::Config(format!(
                    "--c has {} coordinates, form has n = {}",
                    cv.len(),
                    f.n()
                )));
            }
            let v = match method {
                ExpMethod::Crt => expsum(&f, q, &cv, budget)?,
                ExpMethod::Brute => expsum_brute(&f, q, &cv, budget)?,
            };
            let method_name = format!("{:?}", v.method).to_lowercase();
            let text = match cli.format {
                Format::Csv => format!(
                    "q,method,re,im,magnitude\n{},{},{},{},{}\n",
                    v.q,
                    method_name,
                    fmt_float(v.re),
                    fmt_float(v.im),
                    fmt_float(v.magnitude()),
                ),
                Format::Json => serde_json::to_string_pretty(&json!({
                    "q": v.q,
                    "method": method_name,
                    "re": fmt_float(v.re),
                    "im": fmt_float(v.im),
                    "magnitude": fmt_float(v.magnitude()),
                }))
                .expect("sum serialization cannot fail"),
            };
            emit(&cli.out, &text)?;
        }
        Command::SigmaN { form, x, c } => {
            let f = quadratic(load_form_file(&form)?)?;
            let cv = match c {
                Some(text) => parse_i64_list(&text)?,
                None => vec![0; f.n()],
            };
            let block = sigma_n_sum(&f, x, &cv, budget)?;
            let cs = block.c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
            let text = match cli.format {
                Format::Csv => format!("x,c,total\n{},{},{}\n", block.x, cs, fmt_float(block.total)),
                Format::Json => serde_json::to_string_pretty(&json!({
                    "x": block.x,
                    "c": block.c,
                    "total": fmt_float(block.total),
                }))
                .expect("block serialization cannot fail"),
            };
            emit(&cli.out, &text)?;
        }
        Command::SingularSeries { form, q_max, p_max } => {
            let text = match load_form_file(&form)? {
                Form::Quadratic(f) => {
                    let (euler, qser) = singular_series_routes(&f, q_max, p_max, budget)?;
                    match cli.format {
                        Format::Csv => format!(
                            "route,value,tail_bound\n{}{}",
                            density_csv_row(&euler),
                            density_csv_row(&qser)
                        ),
                        Format::Json => serde_json::to_string_pretty(&json!({
                            "euler_product": density_json(&euler),
                            "q_series": density_json(&qser),
                        }))
                        .expect("series serialization cannot fail"),
                    }
                }
                Form::Biquadratic(f) => {
                    let est = joint_singular_series(&f, q_max, budget)?;
                    match cli.format {
                        Format::Csv => {
                            format!("route,value,tail_bound\n{}", density_csv_row(&est))
                        }
                        Format::Json => serde_json::to_string_pretty(&density_json(&est))
                            .expect("series serialization cannot fail"),
                    }
                }
            };
            emit(&cli.out, &text)?;
        }
        Command::SigmaInfinity { form, weight, kappa, eta, deltas, samples } => {
            let f = quadratic(load_form_file(&form)?)?;
            let w = make_weight(weight, kappa, eta)?;
            let schedule = match deltas {
                Some(text) => parse_f64_list(&text)?,
                None => DEFAULT_DELTAS.to_vec(),
            };
            let est = sigma_infinity(&f, &w, &schedule, samples, cli.seed)?;
            emit(&cli.out, &render_integral(&est, cli.format))?;
        }
        Command::JointIntegral { form, deltas, samples } => {
            let f = biquadratic(load_form_file(&form)?)?;
            let schedule = match deltas {
                Some(text) => parse_f64_list(&text)?,
                None => vec![0.1, 0.05],
            };
            let est = joint_singular_integral(&f, &schedule, samples, cli.seed)?;
            emit(&cli.out, &render_integral(&est, cli.format))?;
        }
        Command::Experiment { config } => {
            let mut cfg = load_config(&config)?;
            cfg.seed = if cli.seed != 0 { cli.seed } else { cfg.seed };
            if cli.budget != bqc_core::DEFAULT_BUDGET {
                cfg.budget = cli.budget;
            }
            let report = run_experiment(&cfg, &config)?;
            let base = cli
                .out
                .clone()
                .or_else(|| {
                    cfg.out.as_ref().map(|p| {
                        if p.is_absolute() {
                            p.clone()
                        } else {
                            config.parent().unwrap_or(Path::new(".")).join(p)
                        }
                    })
                })
                .unwrap_or_else(|| PathBuf::from("report"));
            let (csv_path, json_path) = write_report(&report, &base)?;
            for v in &report.verdicts {
                println!(
                    "verdict {}: {} ({})",
                    v.name,
                    if v.pass { "PASS" } else { "FAIL" },
                    v.detail
                );
            }
            println!("wrote {} and {}", csv_path.display(), json_path.display());
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
