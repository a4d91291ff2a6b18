//! Command-line entry point. Exit codes: 0 success, 1 invalid input or
//! usage, 2 solver failure or failed verification.

use super::battery::run_battery;
use super::config::RunConfig;
use super::csv::write_history_csv;
use super::profile::mm_profile;
use super::report::{check_optimality, complementarity, OptimalityReport};
use super::vtk::{parse_vtk, write_vtk, VtkFields};
use crate::adjoint::{fd_gradient_check, random_directions, solve_adjoint, AdjointState};
use crate::error::Error;
use crate::fem::assembly::element_laws;
use crate::forward::{energy, solve_forward, State};
use crate::optimizer::{
    delta_sweep, evaluate_objective, gamma_continuation, material_fraction, optimize, PhaseOperators,
};
use crate::problem::Problem;
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const BATTERY_DRAWS: usize = 100_000;

#[derive(Parser, Debug)]
#[command(name = "plastopt", about = "Phase-field topology optimization for elastoplastic structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Read the design `z` from the point field `z` of a VTK file written by
    /// an earlier run instead of the constant `z0`.
    #[arg(long)]
    design: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the state problem at `[solver] gamma`.
    Forward(Common),
    /// Solve state and adjoint problems and check the gradient against
    /// central differences.
    Adjoint(Common),
    /// Optimize at the first `gamma` of the schedule.
    Optimize(Common),
    /// Optimize along the whole `gamma` schedule with per-stage reports.
    GammaSweep(Common),
    /// Re-optimize along `delta_schedule` and compare the interfacial energy
    /// with the thresholded perimeter.
    DeltaSweep(Common),
    /// Report optimality-system residuals for a design.
    Check(Common),
    /// Randomized check of the material inequalities.
    MaterialVerify(Common),
    /// Modica–Mortola energy of the 1D transition profile.
    MmProfile(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Forward(c)
            | Command::Adjoint(c)
            | Command::Optimize(c)
            | Command::GammaSweep(c)
            | Command::DeltaSweep(c)
            | Command::Check(c)
            | Command::MaterialVerify(c)
            | Command::MmProfile(c) => c,
        }
    }
}

/// Outcome of a subcommand that ran to completion: whether its checks held.
type Outcome = Result<bool, Error>;

pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let threads = match std::env::var("THREADS") {
        Err(_) => 1,
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => {
                eprintln!("error: THREADS must be a positive integer, got `{s}`");
                return 1;
            }
        },
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| run(&cli.command)) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_solver_failure() {
                2
            } else {
                1
            }
        }
    }
}

fn run(cmd: &Command) -> Outcome {
    let common = cmd.common();
    let cfg = RunConfig::parse_file(&common.config)?;
    std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    write_text(&common.out.join("effective.cfg"), &cfg.echo())?;
    match cmd {
        Command::MaterialVerify(_) => return material_verify(&cfg, &common.out),
        Command::MmProfile(_) => return profile(&cfg, &common.out),
        _ => {}
    }
    let problem = cfg.build_problem()?;
    let z = match &common.design {
        Some(p) => read_design(p, &problem)?,
        None => cfg.initial_design(&problem),
    };
    match cmd {
        Command::Forward(_) => forward(&cfg, &problem, &z, &common.out),
        Command::Adjoint(_) => adjoint(&cfg, &problem, &z, &common.out),
        Command::Optimize(_) => run_optimize(&cfg, &problem, &z, &common.out),
        Command::GammaSweep(_) => gamma_sweep(&cfg, &problem, &z, &common.out),
        Command::DeltaSweep(_) => run_delta_sweep(&cfg, &problem, &z, &common.out),
        Command::Check(_) => check(&cfg, &problem, &z, &common.out),
        Command::MaterialVerify(_) | Command::MmProfile(_) => unreachable!(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    super::atomic_write(path, text.as_bytes()).map_err(|e| Error::io(path, e))
}

fn read_design(path: &Path, problem: &Problem) -> Result<Vec<f64>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = parse_vtk(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    let z = file
        .fields
        .point("z")
        .ok_or_else(|| Error::Invalid(format!("{}: no point field `z`", path.display())))?;
    if z.len() != problem.num_nodes() {
        return Err(Error::Invalid(format!(
            "{}: design has {} nodes, mesh has {}",
            path.display(),
            z.len(),
            problem.num_nodes()
        )));
    }
    Ok(z.to_vec())
}

fn fields(z: &[f64], state: &State, adj: Option<&AdjointState>) -> VtkFields {
    let mut f = VtkFields::default()
        .scalar("z", z.to_vec())
        .displacement("u", &state.u)
        .sym("eps", &state.eps)
        .dev("p", &state.p);
    if let Some(a) = adj {
        f = f
            .displacement("u_bar", &a.u_bar)
            .dev("p_bar", &a.p_bar)
            .dev("rho", &a.rho)
            .dev("pi", &a.pi);
    }
    f
}

fn write_fields(path: &Path, problem: &Problem, f: &VtkFields, title: &str) -> Result<(), Error> {
    write_vtk(&problem.disc.mesh, f, title, path).map_err(|e| Error::io(path, e))
}

fn forward(cfg: &RunConfig, problem: &Problem, z: &[f64], out: &Path) -> Outcome {
    let gamma = cfg.gamma;
    let st = solve_forward(problem, z, gamma, &cfg.forward, None)?;
    let e = energy(problem, z, &st, None);
    let eg = energy(problem, z, &st, Some(gamma));
    let bound = problem.laws.max_yield() * problem.area() / gamma;
    let ok = (0.0..=bound).contains(&(e - eg));
    write_fields(&out.join("forward.vtk"), problem, &fields(z, &st, None), "forward")?;
    println!("gamma          {gamma:e}");
    println!("newton iters   {}", st.newton_iters);
    println!("residual       {:.3e}", st.residual_norm);
    println!("energy E_gamma {eg:.16e}");
    println!("energy gap     {:.6e} (bound {bound:.6e}) {}", e - eg, pass(ok));
    Ok(ok)
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn adjoint(cfg: &RunConfig, problem: &Problem, z: &[f64], out: &Path) -> Outcome {
    let gamma = cfg.gamma;
    let st = solve_forward(problem, z, gamma, &cfg.forward, None)?;
    let adj = solve_adjoint(problem, z, &st, gamma, &cfg.forward.cg)?;
    write_fields(&out.join("adjoint.vtk"), problem, &fields(z, &st, Some(&adj)), "adjoint")?;
    let dirs = random_directions(problem.num_nodes(), cfg.fd_directions, cfg.seed);
    let weights = cfg.optimizer.weights();
    let rep = fd_gradient_check(problem, z, &dirs, gamma, &weights, cfg.fd_step, &cfg.optimizer.forward)?;
    let mut csv = String::from("direction,adjoint,fd,rel_err\n");
    for (i, e) in rep.entries.iter().enumerate() {
        writeln!(csv, "{i},{:.16e},{:.16e},{:.16e}", e.adjoint, e.fd, e.rel_err).unwrap();
    }
    write_text(&out.join("fd_check.csv"), &csv)?;
    println!("adjoint CG iters      {}", adj.cg_iters);
    println!("fd directions         {}", rep.entries.len());
    println!("max relative error    {:.3e}", rep.max_rel_err);
    Ok(true)
}

fn run_optimize(cfg: &RunConfig, problem: &Problem, z: &[f64], out: &Path) -> Outcome {
    let res = optimize(problem, z, &cfg.optimizer)?;
    write_history_csv(&res.history, &out.join("history.csv")).map_err(|e| Error::io(out, e))?;
    write_fields(&out.join("design.vtk"), problem, &fields(&res.z, &res.state, Some(&res.adjoint)), "design")?;
    let j0 = res.history[0].j_delta;
    println!("status            {:?}", res.status);
    println!("iterations        {}", res.iterations);
    println!("J_delta           {:.16e} (initial {j0:.16e})", res.objective.total);
    println!("compliance        {:.6e}", res.objective.compliance);
    println!("interfacial       {:.6e}", res.objective.interfacial());
    println!("material fraction {:.4}", material_fraction(problem, &res.z));
    println!("grad reduction    {:.3e}", res.grad_norm_final / res.grad_norm_initial);
    Ok(true)
}

fn report_row(s: &mut String, r: &OptimalityReport) {
    write!(
        s,
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.r1, r.r2, r.r3, r.rho_excess, r.state_residual, r.adjoint_residual, r.min_pi_dot_pbar, r.projected_gradient
    )
    .unwrap();
}

const REPORT_COLUMNS: &str =
    "r1,r2,r3,rho_excess,state_residual,adjoint_residual,min_pi_dot_pbar,projected_gradient";

fn gamma_sweep(cfg: &RunConfig, problem: &Problem, z: &[f64], out: &Path) -> Outcome {
    let res = gamma_continuation(problem, z, &cfg.optimizer)?;
    write_history_csv(&res.history, &out.join("history.csv")).map_err(|e| Error::io(out, e))?;
    let last = &res.last;
    write_fields(&out.join("design.vtk"), problem, &fields(&last.z, &last.state, Some(&last.adjoint)), "design")?;
    let mut csv = format!("gamma,status,iterations,objective,z_change,energy_gap,gap_bound,{REPORT_COLUMNS}\n");
    let mut ok = true;
    println!("{:>10} {:>10} {:>6} {:>12} {:>10} {:>10} {:>10} {:>10} {:>10}", "gamma", "status", "iters", "J_delta", "r1", "r2", "r3", "gap", "bound");
    for s in &res.stages {
        write!(
            csv,
            "{:.16e},{:?},{},{:.16e},{:.16e},{:.16e},{:.16e},",
            s.gamma, s.status, s.iterations, s.objective, s.z_change, s.energy_gap, s.gap_bound
        )
        .unwrap();
        report_row(&mut csv, &s.optimality);
        csv.push('\n');
        ok &= s.energy_gap >= 0.0 && s.energy_gap <= s.gap_bound;
        println!(
            "{:>10.1e} {:>10} {:>6} {:>12.6e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e}",
            s.gamma,
            format!("{:?}", s.status),
            s.iterations,
            s.objective,
            s.optimality.r1,
            s.optimality.r2,
            s.optimality.r3,
            s.energy_gap,
            s.gap_bound
        );
    }
    write_text(&out.join("gamma_report.csv"), &csv)?;
    println!("energy-gap bound  {}", pass(ok));
    Ok(ok)
}

fn run_delta_sweep(cfg: &RunConfig, problem: &Problem, z: &[f64], out: &Path) -> Outcome {
    let (stages, z_final) = delta_sweep(problem, z, &cfg.optimizer, &cfg.delta_schedule)?;
    let mut csv = String::from("delta,status,iterations,interfacial,perimeter,rel_gap,h_over_delta\n");
    println!("{:>8} {:>10} {:>12} {:>12} {:>10} {:>8}", "delta", "status", "interfacial", "perimeter/6", "rel_gap", "h/delta");
    for s in &stages {
        writeln!(
            csv,
            "{:.16e},{:?},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.delta, s.status, s.iterations, s.interfacial, s.perimeter, s.rel_gap, s.mesh_ratio
        )
        .unwrap();
        println!(
            "{:>8.4} {:>10} {:>12.6e} {:>12.6e} {:>10.3e} {:>8.3}",
            s.delta,
            format!("{:?}", s.status),
            s.interfacial,
            s.perimeter / 6.0,
            s.rel_gap,
            s.mesh_ratio
        );
    }
    write_text(&out.join("delta_report.csv"), &csv)?;
    let gamma = *cfg.optimizer.gamma_schedule.last().expect("validated");
    let st = solve_forward(problem, &z_final, gamma, &cfg.optimizer.forward, None)?;
    write_fields(&out.join("design.vtk"), problem, &fields(&z_final, &st, None), "design")?;
    Ok(true)
}

fn check(cfg: &RunConfig, problem: &Problem, z: &[f64], out: &Path) -> Outcome {
    let gamma = cfg.gamma;
    let st = solve_forward(problem, z, gamma, &cfg.forward, None)?;
    let adj = solve_adjoint(problem, z, &st, gamma, &cfg.forward.cg)?;
    let phase = PhaseOperators::new(&problem.disc);
    let weights = cfg.optimizer.weights();
    let rep = check_optimality(problem, z, &st, &adj, gamma, &weights, &phase, cfg.seed)?;
    let path = out.join("check.vtk");
    write_fields(&path, problem, &fields(z, &st, Some(&adj)), "check")?;

    // recompute the complementarity residuals from the written file
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file = parse_vtk(&text).map_err(Error::Invalid)?;
    let f = &file.fields;
    let get = |n: &str| f.cell_dev(n).ok_or_else(|| Error::Invalid(format!("missing field {n}")));
    let zr = f.point("z").ok_or_else(|| Error::Invalid("missing field z".into()))?;
    let d: Vec<f64> = element_laws(&problem.disc, &problem.laws, zr).iter().map(|v| v.d).collect();
    let (r1, r2, r3, excess, _) = complementarity(&problem.disc.area, &d, &get("p")?, &get("p_bar")?, &get("rho")?, &get("pi")?);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let consistent = close(r1, rep.r1) && close(r2, rep.r2) && close(r3, rep.r3) && close(excess, rep.rho_excess);

    let obj = evaluate_objective(problem, z, &st, &weights, &phase);
    let mut csv = format!("gamma,{REPORT_COLUMNS}\n{:.16e},", gamma);
    report_row(&mut csv, &rep);
    csv.push('\n');
    write_text(&out.join("check.csv"), &csv)?;
    println!("gamma               {gamma:e}");
    println!("J_delta             {:.16e}", obj.total);
    println!("r1 (pi.p)           {:.6e}", rep.r1);
    println!("r2 (rho.p - d|p|)   {:.6e}", rep.r2);
    println!("r3 (p_bar inactive) {:.6e}", rep.r3);
    println!("max |rho| - d       {:.6e}", rep.rho_excess);
    println!("state residual      {:.3e}", rep.state_residual);
    println!("adjoint residual    {:.3e}", rep.adjoint_residual);
    println!("min pi.p_bar        {:.6e}", rep.min_pi_dot_pbar);
    println!("projected gradient  {:.6e}", rep.projected_gradient);
    println!("vtk re-read         {}", pass(consistent));
    Ok(consistent && rep.is_finite())
}

fn material_verify(cfg: &RunConfig, out: &Path) -> Outcome {
    let start = std::time::Instant::now();
    let rep = run_battery(&cfg.laws, BATTERY_DRAWS, cfg.seed);
    let mut csv = String::from("name,checked,violations,worst_slack\n");
    for t in &rep.tallies {
        println!("{:<16} {:>7}/{:<7} passed  {}", t.name, t.checked - t.violations, t.checked, t.statement);
        writeln!(csv, "{},{},{},{:.16e}", t.name, t.checked, t.violations, t.worst).unwrap();
    }
    write_text(&out.join("material_verify.csv"), &csv)?;
    println!("draws {}  violations {}  ({:.2} s)", rep.draws, rep.total_violations(), start.elapsed().as_secs_f64());
    Ok(rep.total_violations() == 0)
}

fn profile(cfg: &RunConfig, out: &Path) -> Outcome {
    let delta = cfg.optimizer.delta;
    let mut csv = String::from("delta,h,energy,error\n");
    let mut rows = Vec::new();
    for d in [delta, delta / 2.0] {
        let r = mm_profile(d, cfg.profile_h_ratio);
        writeln!(csv, "{:.16e},{:.16e},{:.16e},{:.16e}", r.delta, r.h, r.energy, r.error).unwrap();
        rows.push(r);
    }
    write_text(&out.join("profile.csv"), &csv)?;
    for r in &rows {
        println!("delta {:<8} h {:<10.4e} energy {:.10} error {:+.3e}", r.delta, r.h, r.energy, r.error);
    }
    println!("target 1/6 = {:.10}", 1.0 / 6.0);
    let ok = rows[0].error.abs() <= 2e-2;
    println!("within 2e-2: {}", pass(ok));
    Ok(ok)
}
