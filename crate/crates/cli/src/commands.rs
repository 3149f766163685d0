use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use stdg::diagnostics::*;
use stdg::oracle::{exact_burgers_riemann, fv_solve, l1_error, l2_error, FvGrid, RiemannProblem};
use stdg::solver::{advance, InitialData, RunState};
use stdg::Error as SolverError;

use crate::config::{Pde, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(_) => 2,
            _ => 1,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidArgument(_) | SolverError::Usage(_) => CliError::Usage(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a temporary file so a reader never sees a partial file.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let io_err = |source| CliError::Io { path: path.clone(), source };
    fs::create_dir_all(dir).map_err(io_err)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, &path).map_err(io_err)?;
    Ok(path)
}

fn run_ladder(cfg: &RunConfig) -> Result<Vec<RunState>, CliError> {
    let mut runs = Vec::new();
    for n in cfg.ladder() {
        let mut s = cfg.setup.clone();
        s.n_x = n;
        runs.push(advance(s)?);
    }
    Ok(runs)
}

fn n_elements(run: &RunState) -> usize {
    run.slabs.iter().map(|s| s.solution.space.n_elements()).sum()
}

/// `solve`: solution dump, mesh dump and per-slab history.
pub fn solve(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let run = advance(cfg.setup.clone())?;
    let q = run.setup.q;
    let dim = run.disc.dim();

    let mut solution = String::new();
    let mut mesh = String::new();
    writeln!(solution, "# stdg solution dump").unwrap();
    writeln!(solution, "q {q}").unwrap();
    writeln!(solution, "dim {dim}").unwrap();
    writeln!(solution, "slabs {}", run.slabs.len()).unwrap();
    writeln!(solution, "mesh mesh.txt").unwrap();
    for (k, rec) in run.slabs.iter().enumerate() {
        writeln!(solution, "slab {k} {} {}", num(rec.t_lo()), num(rec.t_hi())).unwrap();
        for e in 0..rec.solution.space.n_elements() {
            let c: Vec<String> = rec.solution.element_coeffs(e).iter().map(|&v| num(v)).collect();
            writeln!(solution, "elem {e} {}", c.join(" ")).unwrap();
        }
        writeln!(mesh, "slab {k} {} {}", num(rec.t_lo()), num(rec.t_hi())).unwrap();
        let mut buf = Vec::new();
        rec.solution.space.mesh.write_dump(&mut buf).expect("in-memory write");
        mesh.push_str(&String::from_utf8(buf).expect("ascii dump"));
    }

    let mut history = String::from("slab,t,mass,energy,max_viscosity,newton_iterations,picard_sweeps\n");
    for (k, rec) in run.slabs.iter().enumerate() {
        let eps = rec.viscosity.iter().copied().fold(0.0, f64::max);
        writeln!(
            history,
            "{k},{},{},{},{},{},{}",
            num(rec.t_hi()),
            num(rec.top_mass()),
            num(rec.top_energy()),
            num(eps),
            rec.newton_iterations,
            rec.picard_sweeps
        )
        .unwrap();
    }

    write_atomic(out, "solution.txt", &solution)?;
    write_atomic(out, "mesh.txt", &mesh)?;
    let path = write_atomic(out, "history.csv", &history)?;
    let b = l2_balance(&run);
    let m = mass_report(&run);
    Ok(format!(
        "solved {} slabs ({} elements, q = {q}); final mass {:.6e}, energy {:.6e}, balance residual {:.3e}\nwrote {}\n",
        run.slabs.len(),
        n_elements(&run),
        m.final_mass,
        b.final_energy,
        b.residual(),
        path.display()
    ))
}

/// Reference solution at `t_final`.
pub enum Reference {
    Exact(Box<dyn Fn(f64) -> f64>),
    FiniteVolume(FvGrid),
}

impl Reference {
    pub fn for_config(cfg: &RunConfig, finest_n_x: usize) -> Result<Self, CliError> {
        let s = &cfg.setup;
        let t = s.t_final;
        let u0 = s.u0;
        match (cfg.pde, u0) {
            (Pde::Advection, _) => {
                let c = s.flux.df(0.0);
                Ok(Reference::Exact(Box::new(move |x| u0.eval(x - c * t))))
            }
            (Pde::Burgers, InitialData::Riemann { left, right, x0 }) => {
                let rp = RiemannProblem { left, right, x0 };
                Ok(Reference::Exact(Box::new(move |x| exact_burgers_riemann(&rp, t, x))))
            }
            (Pde::Burgers, InitialData::Constant(c)) => Ok(Reference::Exact(Box::new(move |_| c))),
            _ => {
                let cells = (32 * finest_n_x).max(2048);
                let grid = fv_solve(&s.flux, |x| u0.eval(x), (s.x_left, s.x_right), cells, t, 0.45)?;
                Ok(Reference::FiniteVolume(grid))
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Reference::Exact(f) => f(x),
            Reference::FiniteVolume(g) => g.eval(x),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Reference::Exact(_) => "exact solution".into(),
            Reference::FiniteVolume(g) => format!("finite-volume reference ({} cells; no closed form)", g.values.len()),
        }
    }
}

fn errors(runs: &[RunState], reference: &Reference) -> Vec<(f64, f64)> {
    runs.iter()
        .map(|r| {
            let u = r.final_solution().expect("completed run");
            (l1_error(u, |x| reference.eval(x)), l2_error(u, |x| reference.eval(x)))
        })
        .collect()
}

fn order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

/// `converge`: errors against the reference over the refinement ladder.
pub fn converge(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    if cfg.levels < 2 {
        return Err(CliError::Usage(format!("converge needs at least 2 levels, got {}", cfg.levels)));
    }
    let runs = run_ladder(cfg)?;
    let reference = Reference::for_config(cfg, *cfg.ladder().last().unwrap())?;
    let errs = errors(&runs, &reference);
    let mut csv = String::from("h,n_elems,l1_error,l2_error,observed_order\n");
    for (i, (run, (l1, l2))) in runs.iter().zip(&errs).enumerate() {
        let observed = if i == 0 { String::new() } else { num(order(errs[i - 1].0, *l1, runs[i - 1].h(), run.h())) };
        writeln!(csv, "{},{},{},{},{observed}", num(run.h()), n_elements(run), num(*l1), num(*l2)).unwrap();
    }
    let path = write_atomic(out, "convergence.csv", &csv)?;
    Ok(format!("reference: {}\n{csv}wrote {}\n", reference.describe(), path.display()))
}

/// Negative entropy residuals above this are quadrature noise.
const ENTROPY_NOISE: f64 = 1e-10;

/// `diagnose`: all checks over the ladder as a report.
pub fn diagnose(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    if cfg.levels < 3 {
        return Err(CliError::Usage(format!("diagnose needs at least 3 levels for the scaling fits, got {}", cfg.levels)));
    }
    let runs = run_ladder(cfg)?;
    let mut report = DiagnosticsReport::new();

    for run in &runs {
        let n = run.setup.n_x;
        let b = l2_balance(run);
        let norm2 = 2.0 * b.initial_energy;
        let (value, note) = if norm2 > 0.0 {
            (b.residual() / norm2, "relative to ||u0||^2")
        } else {
            (b.residual(), "absolute (zero data)")
        };
        report.at_most(format!("l2_balance[n_x={n}]"), value, 1e-8, note);
        report.at_least(format!("min_dissipation[n_x={n}]"), b.min_dissipation(), -1e-12, "");
        match jump_bound_estimate(run, cfg.jump_threshold) {
            JumpBound::Estimate { constant, facets } => {
                report.push(format!("jump_bound[n_x={n}]"), constant, 0.0, constant > 0.0, format!("{facets} facets with jumps"))
            }
            JumpBound::Vacuous => report.push(format!("jump_bound[n_x={n}]"), 0.0, 0.0, true, "vacuous: no jumps"),
        }
        let m = mass_report(run);
        if m.outflow.abs() <= 1e-14 * m.initial.abs().max(1.0) {
            report.at_most(format!("mass_defect[n_x={n}]"), m.defect(), 1e-10, "contained: plain defect");
        } else {
            report.at_most(format!("mass_defect[n_x={n}]"), m.balance_defect(), 1e-10, "outflow-corrected");
        }
    }

    let beta = cfg.setup.viscosity.map(|v| v.beta);
    match beta {
        Some(beta) => {
            let fit = residual_scaling(&runs, beta)?;
            push_fit(&mut report, "residual_scaling", &fit, 1.08);
            let fit = viscosity_scaling(&runs)?;
            push_fit(&mut report, "viscosity_scaling", &fit, beta - 0.75);
        }
        None => {
            report.push("residual_scaling", f64::NAN, 1.08, true, "shock capturing disabled");
            report.push("viscosity_scaling", f64::NAN, f64::NAN, true, "shock capturing disabled");
        }
    }

    let linf = linf_check(&runs)?;
    let (value, threshold) = if linf.data_sup > 0.0 {
        (linf.max_sup() / linf.data_sup, linf.bound_factor)
    } else {
        (linf.max_sup(), 0.0)
    };
    report.push("linf_bound", value, threshold, linf.passes(), "max ||u_h||_inf / ||u0||_inf, no growth under refinement");

    if cfg.entropy {
        for &k in &cfg.entropy_k {
            let eta = MollifiedKruzkov::new(k, cfg.entropy_delta)?;
            let e: Vec<f64> = runs.iter().map(|r| entropy_residual(r, &eta, &cfg.bump)).collect::<Result<_, _>>()?;
            let neg = |v: f64| if v > -ENTROPY_NOISE { 0.0 } else { v };
            let (first, last) = (neg(e[0]), neg(e[e.len() - 1]));
            let listed: Vec<String> = e.iter().map(|v| format!("{v:.6e}")).collect();
            report.at_least(format!("entropy_inequality[k={k}]"), last, 0.5 * first, format!("E_h by level: {}", listed.join(" ")));
        }
    }

    let reference = Reference::for_config(cfg, *cfg.ladder().last().unwrap())?;
    let errs = errors(&runs, &reference);
    let (c, f) = (runs.len() - 2, runs.len() - 1);
    let scale = (cfg.setup.x_right - cfg.setup.x_left) * cfg.setup.u0.sup_norm().max(f64::MIN_POSITIVE);
    if errs[c].0.max(errs[f].0) <= NEGLIGIBLE * scale {
        report.push("l1_order", f64::NAN, f64::NAN, true, format!("informational; errors at roundoff level; {}", reference.describe()));
    } else {
        let l1_order = order(errs[c].0, errs[f].0, runs[c].h(), runs[f].h());
        report.push("l1_order", l1_order, f64::NAN, true, format!("informational; {}", reference.describe()));
    }

    let path = write_atomic(out, "diagnostics.csv", &report.to_csv())?;
    Ok(format!("{}wrote {}\n", report.summary(), path.display()))
}

fn push_fit(report: &mut DiagnosticsReport, name: &str, fit: &ScalingFit, threshold: f64) {
    match fit.order {
        Some(o) => report.at_least(name, o, threshold, format!("log-log slope, r^2 = {:.4}", fit.r_squared)),
        None => report.push(name, f64::NAN, threshold, true, "functional negligible at every level"),
    }
}

/// `sc-lemma`: coercivity probe table.
pub fn sc_lemma(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let mut csv = String::from("q,p,trials,max_ratio,scaled_max_ratio,drift\n");
    for &q in &cfg.sc_q {
        for &p in &cfg.sc_p {
            let probe = sc_coercivity_probe(q, p, cfg.sc_trials, cfg.seed)?;
            writeln!(
                csv,
                "{q},{p},{},{},{},{}",
                probe.trials,
                num(probe.max_ratio),
                num(probe.scaled_max_ratio),
                num(probe.drift)
            )
            .unwrap();
        }
    }
    let path = write_atomic(out, "sc_lemma.csv", &csv)?;
    Ok(format!("{csv}wrote {}\n", path.display()))
}
