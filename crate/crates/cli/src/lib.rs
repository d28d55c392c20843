//! The `spinlab` command line: argument parsing, dispatch to `spinlab-core`
//! and canonical report output.
//!
//! Exit codes: 0 on success, 1 on domain errors (reported as a JSON error
//! object), 2 on I/O, parse and usage errors.

pub mod canon;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spinlab_core::exact::{count_independent_sets, flip_transform_check, serialize_count, Engine, DEFAULT_CAP};
use spinlab_core::gadgets::{
    balance_gadget, sample_phase_gadget, symmetry_breaking_search, verify_gadget, Gadget, SampleSpec,
    SymmetryBreaking, DEFAULT_MAX_REJECTIONS,
};
use spinlab_core::graph::BipartiteMultigraph;
use spinlab_core::moments::{check_condition1, DEFAULT_CONDITION1_TOL};
use spinlab_core::network::to_weighted_network;
use spinlab_core::params::DEFAULT_TOL;
use spinlab_core::phase::{extremal_marginals, hardcore_lambda_c, lambda_interval, sweep_lambda};
use spinlab_core::reductions::{bis_to_ising, ising_to_2spin, verify_bis_reduction};
use spinlab_core::{SpinError, SpinParams};

use canon::{csv_float, Canon};

#[derive(Debug, Parser)]
#[command(name = "spinlab", version, about = "Exact and asymptotic tools for 2-spin systems on bipartite graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Model {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub lambda: f64,
    /// Degree bound; required by the commands that need one.
    #[arg(long)]
    pub delta: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

impl Model {
    fn params(&self) -> Result<SpinParams, Failure> {
        Ok(SpinParams::build(self.beta, self.gamma, self.lambda, self.delta, self.tol)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Largest number of vertices the exact engine may enumerate.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact partition function of a graph.
    Z {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        output: Output,
    },
    /// Exact probability that a vertex has spin 1.
    Marginal {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        vertex: String,
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        output: Output,
    },
    /// Uniqueness regime and extremal tree marginals.
    Classify {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        output: Output,
    },
    /// Field interval of non-uniqueness and the hard-core threshold.
    Thresholds {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        delta: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Extremal marginals over a log-spaced field grid.
    Sweep {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        delta: u32,
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// First and second moment exponents at the first-moment maximizer.
    Moments {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = DEFAULT_CONDITION1_TOL)]
        condition_tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Whether the second moment is maximized at the product overlap.
    Condition1 {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = DEFAULT_CONDITION1_TOL)]
        condition_tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Sample a random phase gadget.
    GadgetSample {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        n_side: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        depth: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_REJECTIONS)]
        max_rejections: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Exact phase balance and terminal deviations of a gadget.
    GadgetVerify {
        /// Gadget JSON.
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        model: Model,
        /// Defaults to the lower extremal tree marginal.
        #[arg(long)]
        q_minus: Option<f64>,
        #[arg(long)]
        q_plus: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Balance a gadget by gluing two copies along t' terminals per sign.
    GadgetBalance {
        /// Gadget JSON.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        t_prime: usize,
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        output: Output,
    },
    /// Search for a unary symmetry breaker.
    Symbreak {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        output: Output,
    },
    /// Build the Ising instance whose partition function counts independent sets.
    ReduceBis {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        eps: f64,
        /// Also write the constructed graph here.
        #[arg(long)]
        graph_out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Build the bounded-degree 2-spin instance for a field-restricted Ising graph.
    ReduceIsing {
        /// Ising instance; its field subset is the set of field vertices.
        #[arg(long)]
        graph: PathBuf,
        /// Gadget JSON.
        #[arg(long)]
        gadget: PathBuf,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        q_minus: Option<f64>,
        #[arg(long)]
        q_plus: Option<f64>,
        #[arg(long)]
        graph_out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Check the independent-set sandwich exactly. Exits 1 if it fails.
    VerifyBis {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Check Z(a,a,1) = a^m Z(1/a,1/a,1). Exits 1 if the gap exceeds the tolerance.
    VerifyFlip {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Count independent sets.
    CountIs {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug)]
enum Failure {
    Domain(SpinError),
    Io(String),
    Usage(String),
}

impl From<SpinError> for Failure {
    fn from(e: SpinError) -> Self {
        match e {
            SpinError::Parse(m) => Failure::Io(format!("parse error: {m}")),
            other => Failure::Domain(other),
        }
    }
}

/// What a command produced: a report, plus whether it counts as a failed check.
struct Report {
    body: String,
    failed_check: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path, delta: Option<u32>) -> Result<BipartiteMultigraph, Failure> {
    let g = BipartiteMultigraph::from_json(&read(path)?)?;
    if let Some(d) = delta {
        g.check_degree_bound(d)?;
    }
    Ok(g)
}

fn load_gadget(path: &Path) -> Result<Gadget, Failure> {
    Ok(Gadget::from_json(&read(path)?)?)
}

fn canon<T: Serialize + ?Sized>(x: &T) -> Result<Canon, Failure> {
    Canon::from_serialize(x).map_err(|e| Failure::Io(format!("serialization failed: {e}")))
}

fn json_only(output: &Output, command: &str) -> Result<(), Failure> {
    if output.format == Format::Csv {
        return Err(Failure::Usage(format!("{command} only supports --format json")));
    }
    Ok(())
}

/// `x` as an object with the parameters (and so the tolerance) attached.
fn with_params<T: Serialize>(x: &T, params: &SpinParams) -> Result<Canon, Failure> {
    let mut c = canon(x)?;
    c.insert("params", canon(params)?);
    Ok(c)
}

fn q_pair(params: &SpinParams, q_minus: Option<f64>, q_plus: Option<f64>) -> Result<(f64, f64), Failure> {
    match (q_minus, q_plus) {
        (Some(a), Some(b)) => Ok((a, b)),
        (None, None) => {
            let pt = extremal_marginals(params)?;
            Ok((pt.q_minus, pt.q_plus))
        }
        _ => Err(Failure::Usage("give both --q-minus and --q-plus or neither".into())),
    }
}

#[derive(Serialize)]
struct Count {
    #[serde(serialize_with = "serialize_count")]
    count: u128,
}

fn dispatch(command: Command) -> Result<(Report, Option<PathBuf>), Failure> {
    let ok = |c: Canon| Report { body: c.render(), failed_check: false };
    Ok(match command {
        Command::Z { graph, model, output } => {
            json_only(&output, "z")?;
            let p = model.params()?;
            let g = load_graph(&graph, p.delta)?;
            let z = Engine::with_cap(output.cap).partition_function(&to_weighted_network(&g, &p))?;
            #[derive(Serialize)]
            struct R {
                log_z: f64,
                z: f64,
            }
            (ok(with_params(&R { log_z: z.ln(), z: z.value() }, &p)?), output.out)
        }
        Command::Marginal { graph, vertex, model, output } => {
            json_only(&output, "marginal")?;
            let p = model.params()?;
            let g = load_graph(&graph, p.delta)?;
            let m = Engine::with_cap(output.cap).marginal(&to_weighted_network(&g, &p), &vertex)?;
            #[derive(Serialize)]
            struct R {
                vertex: String,
                marginal: f64,
            }
            (ok(with_params(&R { vertex, marginal: m }, &p)?), output.out)
        }
        Command::Classify { model, output } => {
            json_only(&output, "classify")?;
            let p = model.params()?;
            (ok(with_params(&extremal_marginals(&p)?, &p)?), output.out)
        }
        Command::Thresholds { beta, gamma, delta, output } => {
            json_only(&output, "thresholds")?;
            #[derive(Serialize)]
            struct R {
                beta: f64,
                gamma: f64,
                delta: u32,
                lambda_interval: Option<(f64, f64)>,
                hardcore_lambda_c: f64,
            }
            let r = R {
                beta,
                gamma,
                delta,
                lambda_interval: lambda_interval(beta, gamma, delta)?,
                hardcore_lambda_c: hardcore_lambda_c(delta),
            };
            (ok(canon(&r)?), output.out)
        }
        Command::Sweep { beta, gamma, delta, lambda_min, lambda_max, steps, tol, output } => {
            let rows = sweep_lambda(beta, gamma, delta, lambda_min, lambda_max, steps, tol)?;
            let body = match output.format {
                Format::Json => {
                    let mut c = Canon::Object(Default::default());
                    c.insert("rows", canon(&rows)?);
                    c.insert("tol", Canon::Float(tol));
                    c.render()
                }
                Format::Csv => sweep_csv(&rows)?,
            };
            (Report { body, failed_check: false }, output.out)
        }
        Command::Moments { model, condition_tol, output } => {
            json_only(&output, "moments")?;
            let p = model.params()?;
            (ok(with_params(&check_condition1(&p, condition_tol)?, &p)?), output.out)
        }
        Command::Condition1 { model, condition_tol, output } => {
            json_only(&output, "condition1")?;
            let p = model.params()?;
            let rep = check_condition1(&p, condition_tol)?;
            let mut c = with_params(&rep.condition1, &p)?;
            c.insert("p_plus", Canon::Float(rep.p_plus));
            c.insert("p_minus", Canon::Float(rep.p_minus));
            c.insert("moment_equality_residual", Canon::Float(rep.moment_equality_residual));
            (ok(c), output.out)
        }
        Command::GadgetSample { model, n_side, t, depth, seed, max_rejections, output } => {
            json_only(&output, "gadget-sample")?;
            let p = model.params()?;
            let b = p.require_delta()?.saturating_sub(1) as usize;
            let r = b
                .checked_pow(depth)
                .and_then(|x| x.checked_mul(t))
                .ok_or_else(|| SpinError::InfeasibleSizes("t (delta-1)^depth overflows".into()))?;
            let spec = SampleSpec { max_rejections, ..SampleSpec::new(n_side, r, t, depth, seed) };
            let g = sample_phase_gadget(&p, &spec)?;
            (ok(canon(&g.to_doc())?), output.out)
        }
        Command::GadgetVerify { graph, model, q_minus, q_plus, eps, output } => {
            json_only(&output, "gadget-verify")?;
            let p = model.params()?;
            let g = load_gadget(&graph)?;
            let (qm, qp) = q_pair(&p, q_minus, q_plus)?;
            let v = verify_gadget(&g, &p, qm, qp, eps, &Engine::with_cap(output.cap))?;
            let mut c = with_params(&v, &p)?;
            c.insert("q_minus", Canon::Float(qm));
            c.insert("q_plus", Canon::Float(qp));
            (ok(c), output.out)
        }
        Command::GadgetBalance { graph, t_prime, model, output } => {
            json_only(&output, "gadget-balance")?;
            let p = model.params()?;
            let k = balance_gadget(&load_gadget(&graph)?, t_prime, &p)?;
            (ok(canon(&k.to_doc())?), output.out)
        }
        Command::Symbreak { model, output } => {
            json_only(&output, "symbreak")?;
            let p = model.params()?;
            let s = symmetry_breaking_search(&p, &Engine::with_cap(output.cap))?;
            let mut c = with_params(&s, &p)?;
            if let SymmetryBreaking::Found(b) = &s {
                c.insert("graph", canon(&b.graph.to_doc())?);
            }
            (ok(c), output.out)
        }
        Command::ReduceBis { graph, alpha, lambda, eps, graph_out, output } => {
            json_only(&output, "reduce-bis")?;
            let b = load_graph(&graph, None)?;
            let plan = bis_to_ising(&b, alpha, lambda, eps)?;
            if let Some(path) = graph_out {
                write(&path, &canon(&plan.b_prime.to_doc())?.render())?;
            }
            #[derive(Serialize)]
            struct R<'a> {
                t1: u64,
                t2: u64,
                log_c: f64,
                alpha: f64,
                lambda: f64,
                epsilon: f64,
                sizes: &'a spinlab_core::reductions::BisSizes,
            }
            let r = R { t1: plan.t1, t2: plan.t2, log_c: plan.log_c.ln(), alpha, lambda, epsilon: eps, sizes: &plan.sizes };
            (ok(canon(&r)?), output.out)
        }
        Command::ReduceIsing { graph, gadget, model, q_minus, q_plus, graph_out, output } => {
            json_only(&output, "reduce-ising")?;
            let p = model.params()?;
            let b = load_graph(&graph, None)?;
            let g = load_gadget(&gadget)?;
            let (qm, qp) = q_pair(&p, q_minus, q_plus)?;
            let breaker = match symmetry_breaking_search(&p, &Engine::with_cap(output.cap))? {
                SymmetryBreaking::Found(s) => s,
                SymmetryBreaking::Unbreakable { reason } => {
                    return Err(Failure::Domain(SpinError::DegenerateParameters(reason)))
                }
            };
            let plan = ising_to_2spin(&b, &p, &g, &breaker, qm, qp)?;
            if let Some(path) = graph_out {
                write(&path, &canon(&plan.b_prime.to_doc())?.render())?;
            }
            let mut c = with_params(&plan, &p)?;
            c.insert("breaker", canon(&breaker)?);
            c.insert(
                "sizes",
                canon(&[("vertices", plan.b_prime.vertex_count() as u64), ("edges", plan.b_prime.edge_count())]
                    .into_iter()
                    .collect::<std::collections::BTreeMap<_, _>>())?,
            );
            (Report { body: c.render(), failed_check: !plan.audit.ok() }, output.out)
        }
        Command::VerifyBis { graph, alpha, lambda, eps, output } => {
            json_only(&output, "verify-bis")?;
            let b = load_graph(&graph, None)?;
            let cert = verify_bis_reduction(&b, alpha, lambda, eps, &Engine::with_cap(output.cap))?;
            (Report { body: canon(&cert)?.render(), failed_check: !cert.ok }, output.out)
        }
        Command::VerifyFlip { graph, alpha, tol, output } => {
            json_only(&output, "verify-flip")?;
            let b = load_graph(&graph, None)?;
            let chk = flip_transform_check(&b, alpha, &Engine::with_cap(output.cap))?;
            let pass = chk.relative_gap <= tol;
            let mut c = canon(&chk)?;
            c.insert("ok", Canon::Bool(pass));
            c.insert("tol", Canon::Float(tol));
            (Report { body: c.render(), failed_check: !pass }, output.out)
        }
        Command::CountIs { graph, output } => {
            json_only(&output, "count-is")?;
            let b = load_graph(&graph, None)?;
            let count = count_independent_sets(&b, output.cap)?;
            (ok(canon(&Count { count })?), output.out)
        }
    })
}

pub const SWEEP_COLUMNS: [&str; 9] =
    ["beta", "gamma", "lambda", "delta", "regime", "q_minus", "q_plus", "p_minus", "p_plus"];

fn sweep_csv(rows: &[spinlab_core::phase::SweepRow]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(SWEEP_COLUMNS).map_err(io)?;
    for r in rows {
        let pt = &r.point;
        w.write_record([
            csv_float(r.beta),
            csv_float(r.gamma),
            csv_float(r.lambda),
            r.delta.to_string(),
            pt.regime.as_str().to_string(),
            csv_float(pt.q_minus),
            csv_float(pt.q_plus),
            csv_float(pt.p_minus),
            csv_float(pt.p_plus),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Io(e.to_string()))
}

fn error_body(code: &str, message: &str) -> String {
    let mut inner = Canon::Object(Default::default());
    inner.insert("code", Canon::Str(code.into()));
    inner.insert("message", Canon::Str(message.into()));
    let mut c = Canon::Object(Default::default());
    c.insert("error", inner);
    c.render()
}

/// Runs one command line (including the program name) and collects its output.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code: 2, stdout: String::new(), stderr: text }
            };
        }
    };
    let result = dispatch(cli.command).and_then(|(report, out)| match out {
        Some(path) => write(&path, &report.body).map(|_| (report.failed_check, String::new())),
        None => Ok((report.failed_check, report.body)),
    });
    match result {
        Ok((failed, stdout)) => Outcome { code: failed as i32, stdout, stderr: String::new() },
        Err(Failure::Domain(e)) => {
            Outcome { code: 1, stdout: error_body(e.code(), &e.to_string()), stderr: format!("error: {e}\n") }
        }
        Err(Failure::Io(m)) => Outcome { code: 2, stdout: error_body("IoError", &m), stderr: format!("error: {m}\n") },
        Err(Failure::Usage(m)) => {
            Outcome { code: 2, stdout: error_body("UsageError", &m), stderr: format!("error: {m}\n") }
        }
    }
}
