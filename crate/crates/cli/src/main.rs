mod repro;

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use phasebell::bounds::{critical_s, gaussian_max, gaussian_mixture_bound, optimise_eigenbound, CriticalS, CurveOptions};
use phasebell::functionals::{algebraic_range, evaluate};
use phasebell::nonlocality::{bridge_sweep, sweep_csv, BridgeFamily};
use phasebell::optimize::{maximize, MaximizeOptions, Objective, OptimizationProblem, StateFamily};
use phasebell::quasiprob::eval;
use phasebell::spec::{parse_geometry, parse_state};
use phasebell::statistics::{classical_bound, finite_data_criterion};
use phasebell::{Error, LossChannel, OrderParameter, PhaseSpacePoint, Shape, State};

#[derive(Parser, Debug)]
#[command(name = "phasebell", version, about = "Phase-space Bell-type tests of nonclassicality and non-Gaussianity")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every randomised search.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Fock truncation dimension.
    #[arg(long, global = true, default_value_t = phasebell::states::DEFAULT_FOCK_DIM)]
    pub fock_dim: usize,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file, or directory for `repro`.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Full-resolution grids and budgets.
    #[arg(long, global = true)]
    pub paper: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scaled quasiprobability values of a state.
    Eval {
        /// State spec: a file path, `-` for stdin, or inline JSON.
        #[arg(long)]
        state: String,
        /// Points `q,p;q,p;...`.
        #[arg(long, conflicts_with = "grid", allow_hyphen_values = true)]
        points: Option<String>,
        /// Grid `qmin:qmax:nq,pmin:pmax:np`.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
    },
    /// Evaluates one test and its verdicts.
    Test {
        /// State spec: a file path, `-` for stdin, or inline JSON.
        #[arg(long)]
        state: String,
        /// Geometry spec: a file path, `-` for stdin, or inline JSON.
        #[arg(long)]
        geometry: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
        /// Overrides the shape in the geometry spec.
        #[arg(long)]
        kind: Option<String>,
        /// Adds the finite-data criterion for this many samples.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Classical, Gaussian and quantum bounds at one order parameter.
    Bounds {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value = "rectangle")]
        kind: String,
        /// Also maximise the quantum value over geometries.
        #[arg(long)]
        quantum: bool,
        /// Gaussian state whose critical order parameter is reported.
        #[arg(long)]
        state: Option<String>,
    },
    /// Regenerates the data behind a figure into the output directory.
    Repro {
        #[arg(value_enum)]
        figure: repro::Figure,
    },
    /// Parameter sweeps.
    Sweep {
        #[command(subcommand)]
        sweep: Sweep,
    },
}

#[derive(Subcommand, Debug)]
enum Sweep {
    /// Optimal `P` and the two-mode value `B` along a state family.
    Bridge {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Optimised objective over superpositions against the transmittance.
    Eta {
        #[arg(long, default_value = "N")]
        objective: String,
        #[arg(long, default_value_t = 1)]
        n_trunc: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value_t = 0.1)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    SqueezedVacuum,
    VacuumTwoPhoton,
}

/// Failure carrying the process exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Spec(_) | Error::PositiveOrder(_) | Error::InvalidParameter { .. } | Error::InvalidGeometry(_) => 2,
            Error::NonConvergence(_) | Error::EigenSolver(_) | Error::Truncation { .. } | Error::DimensionOverflow { .. } => 3,
            Error::Io(_) => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn spec_failure(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: msg.into(),
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

fn read_spec(arg: &str) -> CliResult<String> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return Ok(arg.to_string());
    }
    if arg == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(arg).map_err(|e| spec_failure(format!("cannot read spec `{arg}`: {e}")))
}

fn load_state(arg: &str, dim: usize) -> CliResult<State> {
    Ok(parse_state(&read_spec(arg)?)?.build(dim)?)
}

fn order(s: f64) -> CliResult<OrderParameter> {
    Ok(OrderParameter::new(s)?)
}

fn shape(name: &str) -> CliResult<Shape> {
    Ok(name.parse::<Shape>()?)
}

pub fn maximize_options(g: &Global) -> MaximizeOptions {
    MaximizeOptions {
        seed: g.seed,
        starts: if g.paper { 64 } else { 32 },
        ..MaximizeOptions::default()
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn parse_axis(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || spec_failure(format!("grid axis `{text}` is not lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(linspace(lo, hi, n))
}

fn parse_points(points: Option<&str>, grid: Option<&str>) -> CliResult<Vec<(f64, f64)>> {
    if let Some(g) = grid {
        let (q, p) = g.split_once(',').ok_or_else(|| spec_failure("grid needs two axes separated by `,`"))?;
        let (qs, ps) = (parse_axis(q)?, parse_axis(p)?);
        return Ok(qs.iter().flat_map(|&q| ps.iter().map(move |&p| (q, p))).collect());
    }
    let Some(text) = points else {
        return Ok(vec![(0.0, 0.0)]);
    };
    text.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (q, p) = t.split_once(',').ok_or_else(|| spec_failure(format!("point `{t}` is not q,p")))?;
            let q = q.trim().parse().map_err(|_| spec_failure(format!("bad q in `{t}`")))?;
            let p = p.trim().parse().map_err(|_| spec_failure(format!("bad p in `{t}`")))?;
            Ok((q, p))
        })
        .collect()
}

fn emit(g: &Global, text: &str) -> CliResult<()> {
    match &g.output {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serialises");
    s.push('\n');
    s
}

fn cmd_eval(g: &Global, state: &str, points: Option<&str>, grid: Option<&str>, s: f64) -> CliResult<()> {
    let st = load_state(state, g.fock_dim)?;
    let s = order(s)?;
    let pts = parse_points(points, grid)?;
    let rows: Vec<(f64, f64, f64, f64)> = {
        use rayon::prelude::*;
        pts.par_iter()
            .map(|&(q, p)| {
                let v = eval(&st, PhaseSpacePoint::new(q, p), s);
                (q, p, v.w, v.scaled)
            })
            .collect()
    };
    let text = match g.format {
        Format::Csv => {
            let mut out = format!("# seed={} s={} fock_dim={}\nq,p,W,scaled\n", g.seed, s.value(), g.fock_dim);
            for (q, p, w, sc) in &rows {
                let _ = writeln!(out, "{q},{p},{w:.12e},{sc:.12e}");
            }
            out
        }
        Format::Json => pretty(&json!({
            "seed": g.seed,
            "s": s.value(),
            "fock_dim": g.fock_dim,
            "rows": rows.iter().map(|(q, p, w, sc)| json!({"q": q, "p": p, "W": w, "scaled": sc})).collect::<Vec<_>>(),
        })),
    };
    emit(g, &text)
}

fn cmd_test(g: &Global, state: &str, geometry: &str, s: f64, kind: Option<&str>, samples: Option<u64>) -> CliResult<()> {
    let st = load_state(state, g.fock_dim)?;
    let s = order(s)?;
    let mut gspec = parse_geometry(&read_spec(geometry)?)?;
    if let Some(k) = kind {
        gspec.shape = k.to_string();
    }
    let geom = gspec.build_with(Some(&st), s, &maximize_options(g))?;
    let result = evaluate(&st, &geom, s);
    let finite = samples.map(|n| finite_data_criterion(&st, &geom, s, n)).transpose()?;
    let text = match g.format {
        Format::Json => {
            let mut v = serde_json::to_value(&result).expect("test result serialises");
            v["seed"] = json!(g.seed);
            v["geometry"] = serde_json::to_value(geom).expect("geometry serialises");
            if let Some(f) = &finite {
                v["finite_data"] = serde_json::to_value(f).expect("criterion serialises");
            }
            pretty(&v)
        }
        Format::Csv => {
            let mut out = String::from("key,value\n");
            let verdict = |b: Option<bool>| b.map_or("n/a".to_string(), |b| b.to_string());
            let _ = writeln!(out, "seed,{}", g.seed);
            let _ = writeln!(out, "kind,{}", result.kind.name());
            let _ = writeln!(out, "s,{}", s.value());
            let _ = writeln!(out, "value,{}", result.value);
            let _ = writeln!(out, "classical_bound,{}", result.classical_bound);
            let _ = writeln!(out, "gaussian_mixture_bound,{}", result.gaussian_mixture_bound);
            let _ = writeln!(out, "classical_margin,{}", result.classical_margin);
            let _ = writeln!(out, "gaussian_margin,{}", result.gaussian_margin);
            let _ = writeln!(out, "nonclassical,{}", verdict(result.nonclassical));
            let _ = writeln!(out, "genuinely_non_gaussian,{}", result.genuinely_non_gaussian);
            let _ = writeln!(out, "degenerate,{}", result.degenerate);
            for p in &result.points {
                let _ = writeln!(out, "vertex_{},{} {} {}", p.label, p.q, p.p, p.scaled);
            }
            if let Some(f) = &finite {
                let _ = writeln!(out, "samples,{}", f.n);
                let _ = writeln!(out, "std,{}", f.std);
                let _ = writeln!(out, "finite_data_satisfied,{}", f.satisfied);
            }
            out
        }
    };
    emit(g, &text)
}

fn cmd_bounds(g: &Global, s: f64, kind: &str, quantum: bool, state: Option<&str>) -> CliResult<()> {
    let s = order(s)?;
    let kind = shape(kind)?.unsqueezed();
    let three = kind.is_three_point();
    let gmax = gaussian_max(s, kind);
    let quantum = quantum.then(|| {
        optimise_eigenbound(
            s,
            kind,
            &CurveOptions {
                dim: g.fock_dim,
                seed: g.seed,
                ..CurveOptions::default()
            },
            None,
        )
    });
    let crit = match state {
        Some(arg) => match load_state(arg, g.fock_dim)? {
            State::Gaussian(gs) => Some(critical_s(&gs, kind)),
            State::Fock(_) => return Err(spec_failure("--state must be a gaussian state")),
        },
        None => None,
    };
    let (alo, ahi) = algebraic_range(s, three);
    let text = match g.format {
        Format::Json => pretty(&json!({
            "seed": g.seed,
            "s": s.value(),
            "kind": kind.name(),
            "classical_bound": classical_bound(kind),
            "gaussian_mixture_bound": gaussian_mixture_bound(s, three),
            "gaussian_max": gmax,
            "algebraic_range": [alo, ahi],
            "quantum": quantum,
            "critical_s": crit,
        })),
        Format::Csv => {
            let mut out = String::from("key,value\n");
            let _ = writeln!(out, "seed,{}", g.seed);
            let _ = writeln!(out, "s,{}", s.value());
            let _ = writeln!(out, "kind,{}", kind.name());
            let _ = writeln!(out, "classical_bound,{}", classical_bound(kind));
            let _ = writeln!(out, "gaussian_mixture_bound,{}", gaussian_mixture_bound(s, three));
            let _ = writeln!(out, "gaussian_max,{}", gmax.max_value);
            let _ = writeln!(out, "gaussian_max_squeezing,{}", gmax.argmax.squeezing);
            let _ = writeln!(out, "gaussian_max_approached,{}", gmax.approached);
            let _ = writeln!(out, "algebraic_min,{alo}");
            let _ = writeln!(out, "algebraic_max,{ahi}");
            if let Some(q) = &quantum {
                let _ = writeln!(out, "quantum_max,{}", q.lambda_max);
                let _ = writeln!(out, "quantum_min,{}", q.lambda_min);
                let _ = writeln!(out, "quantum_d_q,{}", q.d_q);
                let _ = writeln!(out, "quantum_d_p,{}", q.d_p);
                let _ = writeln!(out, "quantum_dim,{}", q.truncation);
            }
            match crit {
                Some(CriticalS::Value(v)) => {
                    let _ = writeln!(out, "critical_s,{v}");
                }
                Some(CriticalS::NeverViolates) => {
                    let _ = writeln!(out, "critical_s,never");
                }
                None => {}
            }
            out
        }
    };
    emit(g, &text)
}

fn cmd_sweep(g: &Global, sweep: &Sweep) -> CliResult<()> {
    let opts = maximize_options(g);
    match *sweep {
        Sweep::Bridge { family, from, to, points } => {
            let fam = match family {
                FamilyArg::SqueezedVacuum => BridgeFamily::SqueezedVacuum,
                FamilyArg::VacuumTwoPhoton => BridgeFamily::VacuumTwoPhoton,
            };
            let rows = bridge_sweep(fam, &linspace(from, to, points), &opts)?;
            let text = match g.format {
                Format::Csv => format!("# seed={}\n{}", g.seed, sweep_csv(&rows)),
                Format::Json => pretty(&json!({"seed": g.seed, "family": format!("{fam:?}"), "rows": rows})),
            };
            emit(g, &text)
        }
        Sweep::Eta {
            ref objective,
            n_trunc,
            s,
            from,
            to,
            points,
        } => {
            let objective: Objective = objective.parse()?;
            let s = order(s)?;
            let mut rows = Vec::new();
            let mut converged = true;
            for eta in linspace(from, to, points) {
                let p = OptimizationProblem::new(objective, StateFamily::Superposition { n_trunc }, s)
                    .with_channel(LossChannel::new(eta)?)
                    .with_options(opts);
                let m = maximize(&p)?;
                converged &= m.converged;
                rows.push((eta, m.value, m.value > objective.bound() + phasebell::VIOLATION_MARGIN));
            }
            let text = match g.format {
                Format::Csv => {
                    let mut out = format!("# seed={} objective={} n_trunc={n_trunc} s={}\neta,value,violates\n", g.seed, objective.name(), s.value());
                    for (eta, v, b) in &rows {
                        let _ = writeln!(out, "{eta},{v},{b}");
                    }
                    out
                }
                Format::Json => pretty(&json!({
                    "seed": g.seed,
                    "objective": objective.name(),
                    "n_trunc": n_trunc,
                    "s": s.value(),
                    "bound": objective.bound(),
                    "rows": rows.iter().map(|(e, v, b)| json!({"eta": e, "value": v, "violates": b})).collect::<Vec<_>>(),
                })),
            };
            emit(g, &text)?;
            if !converged {
                return Err(Failure {
                    code: 3,
                    message: "no optimiser start converged for at least one transmittance".into(),
                });
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(j) = cli.global.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Failure {
                code: 1,
                message: e.to_string(),
            })?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Eval { state, points, grid, s } => cmd_eval(g, state, points.as_deref(), grid.as_deref(), *s),
        Command::Test {
            state,
            geometry,
            s,
            kind,
            samples,
        } => cmd_test(g, state, geometry, *s, kind.as_deref(), *samples),
        Command::Bounds { s, kind, quantum, state } => cmd_bounds(g, *s, kind, *quantum, state.as_deref()),
        Command::Repro { figure } => repro::run(g, *figure),
        Command::Sweep { sweep } => cmd_sweep(g, sweep),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
