use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use serde_json::{json, Value};

use phasebell::bounds::{
    critical_s, curve_csv, gaussian_max, gaussian_optimal_for_state, lattice_cell, lattice_eigenbounds, lattice_state_expectation,
    quantum_bound_curve, quantum_crossing, CriticalS, CurveOptions,
};
use phasebell::nonlocality::{bridge_sweep, sweep_csv, BridgeFamily};
use phasebell::optimize::{critical_eta, maximize, squeeze_enhancement_curve, MaximizeOptions, Objective, OptimizationProblem, StateFamily};
use phasebell::quasiprob::{eval_grid, grid_csv};
use phasebell::states::{apply_loss, cat_state};
use phasebell::statistics::{success_probability_map, DEFAULT_ANGLE_RESOLUTION};
use phasebell::{four_point_gaussian_bound, FockDensityMatrix, GaussianState, LossChannel, OrderParameter, Shape, State, C64};

use crate::{linspace, maximize_options, pretty, write_file, CliResult, Failure, Format, Global};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Catfig,
}

impl Figure {
    fn id(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
            Figure::Catfig => "catfig",
        }
    }
}

/// Writes artifacts as they are produced so partial results survive a failure.
struct Sink<'a> {
    g: &'a Global,
    figure: Figure,
    dir: PathBuf,
    written: Vec<String>,
}

impl Sink<'_> {
    fn config(&self) -> Value {
        json!({
            "figure": self.figure.id(),
            "seed": self.g.seed,
            "fock_dim": self.g.fock_dim,
            "paper": self.g.paper,
        })
    }

    fn header(&self) -> String {
        format!("# figure={} seed={} fock_dim={} paper={}\n", self.figure.id(), self.g.seed, self.g.fock_dim, self.g.paper)
    }

    /// Writes `<name>.csv` and `<name>.json`; `tolerances` records the
    /// numerical settings the data was produced with.
    fn write(&mut self, name: &str, csv: &str, data: Value, tolerances: Value) -> CliResult<()> {
        let csv_path = self.dir.join(format!("{name}.csv"));
        write_file(&csv_path, &format!("{}{csv}", self.header()))?;
        let doc = json!({"config": self.config(), "tolerances": tolerances, "data": data});
        let json_path = self.dir.join(format!("{name}.json"));
        write_file(&json_path, &pretty(&doc))?;
        self.written.push(csv_path.display().to_string());
        self.written.push(json_path.display().to_string());
        Ok(())
    }
}

pub fn run(g: &Global, figure: Figure) -> CliResult<()> {
    let dir = g.output.clone().unwrap_or_else(|| PathBuf::from("repro-out")).join(figure.id());
    let mut sink = Sink {
        g,
        figure,
        dir,
        written: Vec::new(),
    };
    let result = match figure {
        Figure::Fig2 => fig2(&mut sink),
        Figure::Fig3 => finite_data_maps(&mut sink, OrderParameter::WIGNER, &[Shape::Rectangle, Shape::RightTriangle]),
        Figure::Fig4 => finite_data_maps(&mut sink, OrderParameter::HUSIMI, &[Shape::RightTriangle]),
        Figure::Fig5 => fig5(&mut sink),
        Figure::Fig6 => fig6(&mut sink),
        Figure::Fig7 => fig7(&mut sink),
        Figure::Fig8 => fig8(&mut sink),
        Figure::Fig9 => fig9(&mut sink),
        Figure::Catfig => catfig(&mut sink),
    };
    let listing = match g.format {
        Format::Csv => sink.written.iter().map(|p| format!("{p}\n")).collect::<String>(),
        Format::Json => pretty(&json!({"figure": figure.id(), "seed": g.seed, "files": sink.written})),
    };
    print!("{listing}");
    result
}

fn pure_with_kappa(k: f64) -> CliResult<GaussianState> {
    Ok(GaussianState::from_purity_kappa(1.0, k)?)
}

fn fig2(sink: &mut Sink) -> CliResult<()> {
    let paper = sink.g.paper;
    let kappas = linspace(0.0, 1.98, if paper { 100 } else { 23 });
    let profile_s = [0.0, -0.5, -1.0];
    let mut csv = String::from("kappa0,s,J,J_prime\n");
    let mut rows = Vec::new();
    for &sv in &profile_s {
        let s = OrderParameter::new(sv)?;
        for &k in &kappas {
            let st = pure_with_kappa(k)?;
            let j = gaussian_optimal_for_state(&st, s, Shape::Rectangle).0;
            let jp = gaussian_optimal_for_state(&st, s, Shape::RightTriangle).0;
            let _ = writeln!(csv, "{k},{sv},{j},{jp}");
            rows.push(json!({"kappa0": k, "s": sv, "J": j, "J_prime": jp}));
        }
    }
    sink.write("profiles", &csv, Value::Array(rows), json!({"kappa_points": kappas.len()}))?;

    let s_grid = linspace(-2.0, 0.0, if paper { 41 } else { 11 });
    let mut csv = String::from("s,J_max,J_max_approached,J_prime_max,J_prime_max_approached\n");
    let mut rows = Vec::new();
    for &sv in &s_grid {
        let s = OrderParameter::new(sv)?;
        let a = gaussian_max(s, Shape::Rectangle);
        let b = gaussian_max(s, Shape::RightTriangle);
        let _ = writeln!(csv, "{sv},{},{},{},{}", a.max_value, a.approached, b.max_value, b.approached);
        rows.push(json!({"s": sv, "rectangle": a, "right_triangle": b}));
    }
    let at0 = (gaussian_max(OrderParameter::WIGNER, Shape::Rectangle), gaussian_max(OrderParameter::WIGNER, Shape::RightTriangle));
    let data = json!({
        "rows": rows,
        "s0": {
            "J_max": at0.0.max_value,
            "J_prime_max": at0.1.max_value,
            "four_point_reference": four_point_gaussian_bound(),
            "three_point_reference": 2.0,
        },
    });
    sink.write("maxima", &csv, data, json!({"r_grid": 48, "golden_tol": 1e-7}))?;

    let mut csv = String::from("kappa0,s_c_rectangle,s_c_right_triangle\n");
    let mut rows = Vec::new();
    let fmt = |c: CriticalS| match c {
        CriticalS::Value(v) => v.to_string(),
        CriticalS::NeverViolates => "never".to_string(),
    };
    for &k in kappas.iter().skip(1) {
        let st = pure_with_kappa(k)?;
        let (a, b) = (critical_s(&st, Shape::Rectangle), critical_s(&st, Shape::RightTriangle));
        let _ = writeln!(csv, "{k},{},{}", fmt(a), fmt(b));
        rows.push(json!({"kappa0": k, "rectangle": a, "right_triangle": b}));
    }
    sink.write("critical_s", &csv, Value::Array(rows), json!({"bisection_tol": 1e-6}))
}

fn finite_data_maps(sink: &mut Sink, s: OrderParameter, kinds: &[Shape]) -> CliResult<()> {
    let paper = sink.g.paper;
    let (n_mu, n_kappa, res) = if paper { (50, 50, DEFAULT_ANGLE_RESOLUTION) } else { (16, 16, 128) };
    let samples: &[u64] = if paper { &[1_000, 10_000, 100_000] } else { &[100_000] };
    let mus = linspace(0.3, 1.0, n_mu);
    let kappas = linspace(0.0, 1.99, n_kappa);
    for &kind in kinds {
        for &n in samples {
            let map = success_probability_map(&mus, &kappas, s, kind, n, res)?;
            let frontier = map.frontier(kappas.len() - 1);
            let name = format!("{}_N{n}", kind.name());
            let data = json!({"map": map, "frontier_at_max_kappa": frontier});
            sink.write(&name, &map.to_csv(), data, json!({"angle_resolution": res}))?;
        }
    }
    Ok(())
}

fn fig5(sink: &mut Sink) -> CliResult<()> {
    let max_n = if sink.g.paper { 12 } else { 6 };
    let d_sq = lattice_cell(0);
    let d = d_sq.sqrt();
    let mut csv = String::from("N,lambda_max,lambda_min,mu_N,abs_diff\n");
    let mut rows = Vec::new();
    let mut anchor = None;
    for n in 0..=max_n {
        let le = lattice_eigenbounds(d_sq, n, Shape::Rectangle)?;
        let mu = lattice_state_expectation(&le.top, n, d, d, Shape::Rectangle)?;
        let diff = (mu.value - le.bound.lambda_max).abs();
        let _ = writeln!(csv, "{n},{},{},{},{diff:.3e}", le.bound.lambda_max, le.bound.lambda_min, mu.value);
        rows.push(json!({"N": n, "lambda_max": le.bound.lambda_max, "lambda_min": le.bound.lambda_min, "mu_N": mu.value}));
        if n == 2 {
            anchor = Some(mu.value);
        }
    }
    let data = json!({"rows": rows, "d_sq": d_sq, "five_by_five_J0": anchor});
    sink.write("lattice", &csv, data, json!({"imag_discard": 1e-8}))
}

fn fig6(sink: &mut Sink) -> CliResult<()> {
    let paper = sink.g.paper;
    let opts = CurveOptions {
        dim: sink.g.fock_dim.max(150),
        seed: sink.g.seed,
        starts: if paper { 16 } else { 8 },
        max_evals: if paper { 300 } else { 200 },
    };
    let tol = if paper { 1e-3 } else { 5e-3 };
    let mut crossings = serde_json::Map::new();
    for (kind, grid, window) in [
        (Shape::Rectangle, linspace(-1.6, 0.0, if paper { 33 } else { 9 }), (-1.5, -0.5)),
        (Shape::RightTriangle, linspace(-2.6, 0.0, if paper { 53 } else { 14 }), (-2.5, -1.5)),
    ] {
        let curve = quantum_bound_curve(kind, &grid, &opts)?;
        sink.write(&format!("curve_{}", kind.name()), &curve_csv(&curve), json!(curve), json!({"dim": opts.dim, "starts": opts.starts}))?;
        let c = quantum_crossing(kind, window.0, window.1, 1e-6, tol, &opts)?;
        crossings.insert(kind.name().to_string(), json!(c));
    }
    let mut csv = String::from("kind,crossing_s\n");
    for (k, v) in &crossings {
        let _ = writeln!(csv, "{k},{v}");
    }
    sink.write("crossings", &csv, Value::Object(crossings), json!({"bisection_tol": tol, "margin": 1e-6}))
}

fn fig7(sink: &mut Sink) -> CliResult<()> {
    let paper = sink.g.paper;
    let fs = linspace(0.0, 1.0, if paper { 51 } else { 11 });
    let r_ts = [0.0, 0.5, 1.0];
    let opts = MaximizeOptions {
        starts: if paper { 32 } else { 12 },
        ..maximize_options(sink.g)
    };
    let mut csv = String::from("f,r_t,kind,value,bound,violates\n");
    let mut rows = Vec::new();
    for kind in [Shape::Rectangle, Shape::RightTriangle] {
        for &f in &fs {
            let st = FockDensityMatrix::vacuum_two_photon_mixture(f)?;
            let curve = squeeze_enhancement_curve(&st, OrderParameter::WIGNER, kind, &r_ts, &opts)?;
            for p in curve {
                let _ = writeln!(csv, "{f},{},{},{},{},{}", p.r_t, kind.squeezed().name(), p.value, p.bound, p.violates);
                rows.push(json!({"f": f, "kind": kind.squeezed().name(), "point": p}));
            }
        }
    }
    sink.write("squeeze_enhancement", &csv, Value::Array(rows), json!({"starts": opts.starts}))
}

fn fig8(sink: &mut Sink) -> CliResult<()> {
    let paper = sink.g.paper;
    let opts = maximize_options(sink.g);
    let etas = linspace(0.1, 1.0, if paper { 19 } else { 7 });
    let mut csv = String::from("objective,s,n_trunc,eta,value,bound\n");
    let mut rows = Vec::new();
    let mut unconverged = 0usize;
    for objective in [Objective::N, Objective::NPrime] {
        for sv in [0.0, -1.0] {
            let s = OrderParameter::new(sv)?;
            for n_trunc in 1..=3 {
                for &eta in &etas {
                    let p = OptimizationProblem::new(objective, StateFamily::Superposition { n_trunc }, s)
                        .with_channel(LossChannel::new(eta)?)
                        .with_options(opts);
                    let m = maximize(&p)?;
                    unconverged += usize::from(!m.converged);
                    let _ = writeln!(csv, "{},{sv},{n_trunc},{eta},{},{}", objective.name(), m.value, objective.bound());
                    rows.push(json!({"objective": objective.name(), "s": sv, "n_trunc": n_trunc, "eta": eta, "value": m.value}));
                }
            }
        }
    }
    sink.write("eta_curves", &csv, Value::Array(rows), json!({"starts": opts.starts}))?;

    let tol = 1e-3;
    let mut csv = String::from("objective,s,n_trunc,eta_c,value_at_unit\n");
    let mut rows = Vec::new();
    for (objective, sv, n_trunc) in [
        (Objective::N, 0.0, 1),
        (Objective::N, 0.0, 2),
        (Objective::N, 0.0, 3),
        (Objective::N, -1.0, 1),
        (Objective::N, -1.0, 2),
        (Objective::N, -1.0, 3),
        (Objective::NPrime, 0.0, 1),
        (Objective::NPrime, 0.0, 2),
        (Objective::NPrime, 0.0, 3),
        (Objective::NPrime, -1.0, 1),
        (Objective::NPrime, -1.0, 2),
        (Objective::NPrime, -1.0, 3),
    ] {
        let c = critical_eta(objective, n_trunc, OrderParameter::new(sv)?, phasebell::optimize::DEFAULT_ETA_MARGIN, tol, &opts)?;
        let eta = c.eta_c.map_or("none".to_string(), |e| e.to_string());
        let _ = writeln!(csv, "{},{sv},{n_trunc},{eta},{}", objective.name(), c.value_at_unit);
        rows.push(json!(c));
    }
    sink.write(
        "critical_eta",
        &csv,
        Value::Array(rows),
        json!({"bisection_tol": tol, "margin": phasebell::optimize::DEFAULT_ETA_MARGIN}),
    )?;
    if unconverged > 0 {
        return Err(Failure {
            code: 3,
            message: format!("{unconverged} transmittance points had no converged optimiser start"),
        });
    }
    Ok(())
}

fn fig9(sink: &mut Sink) -> CliResult<()> {
    let paper = sink.g.paper;
    let n = if paper { 50 } else { 13 };
    let opts = maximize_options(sink.g);
    for (family, name, grid) in [
        (BridgeFamily::SqueezedVacuum, "squeezed_vacuum", linspace(0.0, 1.2, n)),
        (BridgeFamily::VacuumTwoPhoton, "vacuum_two_photon", linspace(0.0, 1.0, n)),
    ] {
        let rows = bridge_sweep(family, &grid, &opts)?;
        let chain_ok = rows.iter().all(|r| r.chain_ok);
        let linked = rows.iter().filter(|r| r.p > 1e-6).all(|r| r.b > 2.0);
        let data = json!({"rows": rows, "chain_ok": chain_ok, "positive_p_implies_b_above_2": linked});
        sink.write(name, &sweep_csv(&rows), data, json!({"chain_tolerance": phasebell::nonlocality::CHAIN_TOLERANCE}))?;
    }
    Ok(())
}

fn catfig(sink: &mut Sink) -> CliResult<()> {
    let paper = sink.g.paper;
    let dim = sink.g.fock_dim;
    let (nq, np) = if paper { (201, 201) } else { (61, 41) };
    let qs = linspace(-3.5, 3.5, nq);
    let ps = linspace(-2.0, 2.0, np);
    let cat = cat_state(C64::new(2.0, 0.0), dim)?;
    for eta in [1.0, 0.5] {
        let rho = apply_loss(&cat, LossChannel::new(eta)?);
        let tail = rho.truncation_tail();
        let rows = eval_grid(&State::Fock(rho), &qs, &ps, OrderParameter::WIGNER);
        let name = format!("cat_gamma2_eta{eta}");
        sink.write(&name, &grid_csv(&rows), json!(rows), json!({"dim": dim, "tail_mass": tail}))?;
    }
    Ok(())
}
