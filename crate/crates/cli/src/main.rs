use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use parabolic_flatness::discretize::build_semidiscrete;
use parabolic_flatness::flatness::{coefficient_limit_study, flat_table, SampledSignal};
use parabolic_flatness::gevrey::PsiStep;
use parabolic_flatness::pipeline::{
    l2_distance, plan_composite, plan_null_control, plan_transfer, truncation_sweep, PlanOptions,
    PlanReport,
};
use parabolic_flatness::problem::{
    load_problem, ParabolicProblem, PiecewiseSmoothFn, StateSpec, Task,
};
use parabolic_flatness::simulate::{
    convergence_study, integrate, realize_state, step_count, IntegratorOptions, Startup, Trajectory,
};

/// Flatness-based boundary control planning for 1D parabolic problems.
#[derive(Debug, Parser)]
#[command(name = "flatplan", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Problem and task description (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Design grid size.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Highest derivative order kept in the input sums.
    #[arg(long, global = true)]
    truncation: Option<usize>,
    /// Grid size of the verification simulation.
    #[arg(long = "n-sim", global = true)]
    n_sim: Option<usize>,
    /// Time step of the verification simulation.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Terminal-error bound for a plan to count as verified.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Replace the first two Crank-Nicolson steps by backward-Euler half steps.
    #[arg(long, global = true)]
    rannacher: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize and verify a control input.
    Plan {
        #[arg(value_enum)]
        kind: PlanKind,
    },
    /// Replay an input CSV (t,value[,derivative]) from the configured initial state.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        /// Number of stored snapshots.
        #[arg(long, default_value_t = 20)]
        snapshots: usize,
    },
    /// Convergence, coefficient and truncation studies.
    Study {
        #[arg(value_enum)]
        kind: StudyKind,
        /// Comma-separated grid sizes.
        #[arg(long = "n-list", value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        /// Reference grid of the convergence study.
        #[arg(long = "n-ref", default_value_t = 2048)]
        n_ref: usize,
        /// Highest coefficient order of the coefficient study.
        #[arg(long = "k-max", default_value_t = 10)]
        k_max: usize,
        /// Comma-separated truncation orders of the truncation study.
        #[arg(long, value_delimiter = ',', default_value = "1,5,13,18,20")]
        orders: Vec<usize>,
        /// Initial state of the convergence study.
        #[arg(long, value_enum, default_value_t = InitialKind::Config)]
        initial: InitialKind,
        /// Input CSV of the convergence study (zero input if omitted).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Dump matrices, coefficient tables or step samples as CSV.
    Inspect {
        #[arg(long, value_enum)]
        what: InspectKind,
        /// Highest order of the d and a tables.
        #[arg(long = "k-max", default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlanKind {
    Transfer,
    Null,
    Composite,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StudyKind {
    Convergence,
    Coefficients,
    Truncation,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum InitialKind {
    Config,
    Zero,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InspectKind {
    Matrix,
    Dtable,
    A,
    Psi,
}

const PLOTTED_TRUNCATIONS: [usize; 5] = [1, 5, 13, 18, 20];

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// `Ok(false)` when a plan failed verification.
fn run(cli: Cli) -> Result<bool> {
    let c = &cli.common;
    match &cli.command {
        Command::Plan { kind } => plan(c, *kind),
        Command::Simulate { input, snapshots } => simulate(c, input, *snapshots).map(|_| true),
        Command::Study {
            kind,
            n_list,
            n_ref,
            k_max,
            orders,
            initial,
            input,
        } => {
            match kind {
                StudyKind::Convergence => {
                    study_convergence(c, n_list.as_deref(), *n_ref, *initial, input.as_deref())?
                }
                StudyKind::Coefficients => study_coefficients(c, n_list.as_deref(), *k_max)?,
                StudyKind::Truncation => study_truncation(c, orders)?,
            }
            Ok(true)
        }
        Command::Inspect {
            what,
            k_max,
            alpha,
            gamma,
            samples,
        } => inspect(c, *what, *k_max, *alpha, *gamma, *samples).map(|_| true),
    }
}

fn load(c: &Common) -> Result<(ParabolicProblem, Task)> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| anyhow!("missing required flag --config"))?;
    Ok(load_problem(path).map_err(parabolic_flatness::Error::from)?)
}

fn options(c: &Common) -> Result<PlanOptions> {
    let mut o = PlanOptions::default();
    if let Some(n) = c.n {
        o.n = n;
    }
    if let Some(i) = c.truncation {
        o.truncation = i;
        o.table_order = o.table_order.max(i);
    }
    if let Some(n) = c.n_sim {
        o.n_sim = n;
    }
    if let Some(dt) = c.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            bail!("invalid value for --dt: {dt}");
        }
        o.dt = dt;
    }
    if let Some(tol) = c.tolerance {
        if !(tol > 0.0) {
            bail!("invalid value for --tolerance: {tol}");
        }
        o.tolerance = tol;
    }
    if c.truncation.is_some_and(|i| i > o.n) {
        bail!(
            "--truncation {} exceeds the design size --n {}",
            o.truncation,
            o.n
        );
    }
    o.table_order = o.table_order.min(o.n);
    o.truncation = o.truncation.min(o.table_order);
    if c.rannacher {
        o.startup = Startup::Rannacher;
    }
    Ok(o)
}

fn startup(c: &Common) -> Startup {
    if c.rannacher {
        Startup::Rannacher
    } else {
        Startup::None
    }
}

fn out_dir(c: &Common) -> Result<PathBuf> {
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| {
        format!("cannot write {}", path.display())
    })?))
}

fn write_signal(dir: &Path, name: &str, times: &[f64], values: &[f64]) -> Result<()> {
    let mut w = create(dir, name)?;
    writeln!(w, "t,value")?;
    for (t, v) in times.iter().zip(values) {
        writeln!(w, "{t:.16e},{v:.16e}")?;
    }
    Ok(w.flush()?)
}

fn write_trajectory(dir: &Path, name: &str, tr: &Trajectory) -> Result<()> {
    let mut w = create(dir, name)?;
    tr.write_csv(&mut w)
        .map_err(parabolic_flatness::Error::from)?;
    Ok(w.flush()?)
}

fn finish_report(dir: &Path, report: &PlanReport) -> Result<bool> {
    let text = report.to_string();
    fs::write(dir.join("report.txt"), &text)?;
    print!("{text}");
    Ok(report.verified())
}

fn plan(c: &Common, kind: PlanKind) -> Result<bool> {
    let (p, task) = load(c)?;
    let opts = options(c)?;
    let dir = out_dir(c)?;
    match (kind, task) {
        (PlanKind::Transfer, Task::Transfer(spec))
        | (PlanKind::Transfer, Task::Composite { transfer: spec, .. }) => {
            let plan = plan_transfer(&p, &spec, &opts)?;
            write_signal(&dir, "f.csv", &plan.input.times, &plan.input.values)?;
            write_trajectory(&dir, "design_snapshots.csv", &plan.design_trajectory)?;
            if let Some(v) = &plan.verification {
                write_trajectory(&dir, "u_snapshots.csv", &v.trajectory)?;
            }
            finish_report(&dir, &plan.report)
        }
        (PlanKind::Null, Task::NullControl(spec))
        | (
            PlanKind::Null,
            Task::Composite {
                null_control: spec, ..
            },
        ) => {
            let plan = plan_null_control(&p, &spec, &opts)?;
            let times = parabolic_flatness::pipeline::design_times(spec.tau, opts.dt)?;
            write_signal(&dir, "g.csv", &times, &plan.input.sample_delayed(&times))?;
            if let Some(v) = &plan.verification {
                write_trajectory(&dir, "u_snapshots.csv", &v.trajectory)?;
            }
            finish_report(&dir, &plan.report)
        }
        (
            PlanKind::Composite,
            Task::Composite {
                transfer,
                null_control,
            },
        ) => {
            let plan = plan_composite(&p, &transfer, &null_control, &opts)?;
            let mut orders: Vec<usize> = PLOTTED_TRUNCATIONS
                .iter()
                .copied()
                .filter(|&i| i <= opts.table_order)
                .collect();
            if !orders.contains(&opts.truncation) {
                orders.push(opts.truncation);
            }
            for (i, values) in truncation_sweep(&plan, &orders)? {
                write_signal(&dir, &format!("r_{i}.csv"), &plan.times, &values)?;
            }
            if let Some(v) = &plan.verification {
                write_trajectory(&dir, "u_snapshots.csv", &v.trajectory)?;
            }
            finish_report(&dir, &plan.report)
        }
        (kind, _) => {
            bail!("config task does not provide a {kind:?} plan (use the matching `plan` kind)")
        }
    }
}

fn read_signal(path: &Path) -> Result<SampledSignal> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| anyhow!("{}: empty file", path.display()))?
        .split(',')
        .collect();
    let cols: Vec<&str> = header.iter().map(|h| h.trim()).collect();
    if cols.len() < 2 || cols[0] != "t" || cols[1] != "value" {
        bail!("{}: expected header `t,value[,derivative]`", path.display());
    }
    let with_derivative = cols.get(2) == Some(&"derivative");
    let (mut times, mut values, mut deriv) = (Vec::new(), Vec::new(), Vec::new());
    for (row, line) in lines.enumerate() {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}: bad number on data row {}", path.display(), row + 1))?;
        if fields.len() < cols.len() {
            bail!(
                "{}: data row {} has {} fields",
                path.display(),
                row + 1,
                fields.len()
            );
        }
        times.push(fields[0]);
        values.push(fields[1]);
        if with_derivative {
            deriv.push(fields[2]);
        }
    }
    let signal = SampledSignal::new(times, values, with_derivative.then_some(deriv));
    Ok(signal.map_err(parabolic_flatness::Error::from)?)
}

/// Initial state and horizon implied by the config task.
fn task_initial(task: &Task) -> (StateSpec, f64) {
    match task {
        Task::Transfer(t) => (t.initial.clone(), t.horizon),
        Task::NullControl(nc)
        | Task::Composite {
            null_control: nc, ..
        } => (StateSpec::Profile(nc.initial.clone()), nc.tau),
    }
}

fn simulate(c: &Common, input: &Path, snapshots: usize) -> Result<()> {
    let (p, task) = load(c)?;
    let opts = options(c)?;
    let signal = read_signal(input)?;
    let (initial, horizon) = task_initial(&task);
    let sys = build_semidiscrete(&p, opts.n_sim).map_err(parabolic_flatness::Error::from)?;
    let v0 = realize_state(&sys, &initial).map_err(parabolic_flatness::Error::from)?;
    let steps = step_count(0.0, horizon, opts.dt).map_err(parabolic_flatness::Error::from)?;
    let iopts = IntegratorOptions::new(opts.dt)
        .with_snapshots((steps / snapshots.max(1)).max(1))
        .with_startup(startup(c));
    let tr = integrate(&sys, &v0, &signal, 0.0, horizon, iopts)
        .map_err(parabolic_flatness::Error::from)?;
    let dir = out_dir(c)?;
    write_trajectory(&dir, "trajectory.csv", &tr)?;
    println!("n_sim: {}", opts.n_sim);
    println!("horizon: {horizon}");
    println!("initial norm: {:.6e}", v0.norm_2d());
    println!("terminal norm: {:.6e}", tr.terminal().norm_2d());
    Ok(())
}

/// Piecewise `a + b x + c sin(k pi x)` with 2 to 4 pieces.
fn random_profile(rng: &mut ChaCha8Rng) -> Result<PiecewiseSmoothFn> {
    let pieces = rng.random_range(2..=4usize);
    let mut breaks: Vec<f64> = (1..pieces).map(|_| rng.random_range(0.1..0.9)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.insert(0, 0.0);
    breaks.push(1.0);
    let exprs: Vec<String> = (0..pieces)
        .map(|_| {
            let (a, b, c): (f64, f64, f64) = (
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            format!(
                "{a:.12} + {b:.12}*x + {c:.12}*sin({}*pi*x)",
                rng.random_range(1..=4)
            )
        })
        .collect();
    let segs: Vec<(f64, f64, &str)> = (0..pieces)
        .map(|i| (breaks[i], breaks[i + 1], exprs[i].as_str()))
        .collect();
    Ok(PiecewiseSmoothFn::from_exprs(&segs).map_err(parabolic_flatness::Error::from)?)
}

fn study_convergence(
    c: &Common,
    n_list: Option<&[usize]>,
    n_ref: usize,
    initial: InitialKind,
    input: Option<&Path>,
) -> Result<()> {
    let (p, task) = load(c)?;
    let opts = options(c)?;
    let (config_initial, horizon) = task_initial(&task);
    let u0 = match initial {
        InitialKind::Config => config_initial,
        InitialKind::Zero => StateSpec::Zero,
        InitialKind::Random => {
            StateSpec::Profile(random_profile(&mut ChaCha8Rng::seed_from_u64(c.seed))?)
        }
    };
    let signal = match input {
        Some(path) => read_signal(path)?,
        None => {
            SampledSignal::zeros(vec![0.0, horizon]).map_err(parabolic_flatness::Error::from)?
        }
    };
    let n_list = n_list.unwrap_or(&[25, 50, 100, 200]);
    let st = convergence_study(&p, &u0, &signal, n_list, n_ref, horizon, opts.dt, 50)
        .map_err(parabolic_flatness::Error::from)?;
    let dir = out_dir(c)?;
    let mut w = create(&dir, "convergence.csv")?;
    st.write_csv(&mut w)
        .map_err(parabolic_flatness::Error::from)?;
    w.flush()?;
    for r in &st.rows {
        println!(
            "n = {}: sup error {:.6e}, terminal error {:.6e}",
            r.n, r.sup_error, r.terminal_error
        );
    }
    Ok(())
}

fn study_coefficients(c: &Common, n_list: Option<&[usize]>, k_max: usize) -> Result<()> {
    let (p, _) = load(c)?;
    let n_list = n_list.unwrap_or(&[64, 128, 256, 512]);
    let st = coefficient_limit_study(&p, k_max, n_list).map_err(parabolic_flatness::Error::from)?;
    let dir = out_dir(c)?;
    let mut w = create(&dir, "coefficients.csv")?;
    writeln!(w, "n,k,value")?;
    for (n, a) in st.n_list.iter().zip(&st.a) {
        for (k, v) in a.iter().enumerate() {
            writeln!(w, "{n},{k},{v:.16e}")?;
        }
    }
    w.flush()?;
    let mut w = create(&dir, "cauchy.csv")?;
    writeln!(w, "n,k,difference")?;
    for r in &st.cauchy {
        writeln!(w, "{},{},{:.16e}", r.n, r.k, r.diff)?;
    }
    w.flush()?;
    let violations: usize = st.a.iter().map(|a| st.fit.violations(a).len()).sum();
    println!("fitted R: {:.6e}", st.fit.r);
    println!("bound violations: {violations}");
    println!("underflowed entries: {}", st.underflow.len());
    Ok(())
}

fn study_truncation(c: &Common, orders: &[usize]) -> Result<()> {
    let (p, task) = load(c)?;
    let Task::Composite {
        transfer,
        null_control,
    } = task
    else {
        bail!("the truncation study needs a composite config");
    };
    let mut opts = options(c)?;
    opts.verify = false;
    if let Some(&max) = orders.iter().max() {
        opts.table_order = opts.table_order.max(max);
    }
    let plan = plan_composite(&p, &transfer, &null_control, &opts)?;
    let sweep = truncation_sweep(&plan, orders)?;
    let dir = out_dir(c)?;
    let mut w = create(&dir, "truncation.csv")?;
    writeln!(w, "i,j,l2_distance")?;
    for pair in sweep.windows(2) {
        let d = l2_distance(&plan.times, &pair[1].1, &pair[0].1);
        writeln!(w, "{},{},{d:.16e}", pair[0].0, pair[1].0)?;
        println!("||r^{} - r^{}|| = {d:.6e}", pair[1].0, pair[0].0);
    }
    w.flush()?;
    Ok(())
}

fn inspect(
    c: &Common,
    what: InspectKind,
    k_max: usize,
    alpha: f64,
    gamma: f64,
    samples: usize,
) -> Result<()> {
    let dir = out_dir(c)?;
    if let InspectKind::Psi = what {
        let psi = PsiStep::new(alpha, gamma).map_err(parabolic_flatness::Error::from)?;
        let mut w = create(&dir, "psi.csv")?;
        writeln!(w, "t,value,derivative")?;
        let samples = samples.max(1);
        for i in 0..=samples {
            let t = gamma * i as f64 / samples as f64;
            let j = psi.jet(t, 1).map_err(parabolic_flatness::Error::from)?;
            writeln!(
                w,
                "{t:.16e},{:.16e},{:.16e}",
                j.coeffs[0] + 0.0,
                j.coeffs[1] + 0.0
            )?;
        }
        return Ok(w.flush()?);
    }
    let (p, _) = load(c)?;
    let n = c.n.ok_or_else(|| anyhow!("missing required flag --n"))?;
    let sys = build_semidiscrete(&p, n).map_err(parabolic_flatness::Error::from)?;
    match what {
        InspectKind::Matrix => {
            let mut w = create(&dir, "matrix.csv")?;
            sys.write_csv(&mut w)
                .map_err(parabolic_flatness::Error::from)?;
            w.flush()?;
        }
        InspectKind::Dtable | InspectKind::A => {
            let tab = flat_table(&sys, k_max.min(n)).map_err(parabolic_flatness::Error::from)?;
            if let InspectKind::Dtable = what {
                let mut w = create(&dir, "dtable.csv")?;
                writeln!(w, "j,k,value")?;
                for (j, row) in tab.d.iter().enumerate() {
                    for (k, v) in row.iter().enumerate() {
                        writeln!(w, "{},{k},{v:.16e}", j + 1)?;
                    }
                }
                w.flush()?;
            } else {
                let mut w = create(&dir, "a.csv")?;
                writeln!(w, "n,k,value")?;
                for (k, v) in tab.a.iter().enumerate() {
                    writeln!(w, "{n},{k},{v:.16e}")?;
                }
                w.flush()?;
            }
        }
        InspectKind::Psi => unreachable!(),
    }
    Ok(())
}
