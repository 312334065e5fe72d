//! Command-line front end.
//!
//! Exit codes: 0 success (for `minimize`: converged), 2 for a `minimize` run
//! that stalled or hit its iteration cap, 1 for any error.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::acs::point_violation;
use crate::config::RunConfig;
use crate::energy::{
    energies, residual_commutator, residual_strong, residual_weak_seeded, DEFAULT_BATTERY_SEED, DEFAULT_BATTERY_SIZE,
};
use crate::error::{Error, Result};
use crate::field::TWO_FORM_PAIRS;
use crate::glue::{glue, GlueProfile, GlueSettings, MollifierKernel};
use crate::minimize::{concentration_scan, minimize_observed, IterationRecord, Termination};
use crate::snapshot::Snapshot;
use crate::topology::{chern_form, lattice_periods};

#[derive(Parser, Debug)]
#[command(name = "bhacs", version, about = "Biharmonic almost complex structures on the flat 4-torus")]
struct Cli {
    /// Run configuration (key = value file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "BHACS_THREADS")]
    threads: Option<usize>,
    /// Only print results and errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize E2 from the configured seed.
    Minimize,
    /// Check constraints, energies, residuals and periods of a snapshot.
    Verify {
        snapshot: PathBuf,
        /// Number of weak-residual test fields.
        #[arg(long, default_value_t = DEFAULT_BATTERY_SIZE)]
        tests: usize,
        #[arg(long, default_value_t = DEFAULT_BATTERY_SEED)]
        battery_seed: u64,
    },
    /// Splice the inner snapshot into the outer one across an annulus.
    Glue {
        outer: PathBuf,
        inner: PathBuf,
        /// Annulus sharpness.
        #[arg(long, default_value_t = 3)]
        j: u32,
        /// Outer annulus radius.
        #[arg(long, default_value_t = 0.4)]
        scale: f64,
        /// Center grid point, four comma-separated indices (default: grid middle).
        #[arg(long, value_delimiter = ',')]
        center: Option<Vec<usize>>,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        closeness_tol: Option<f64>,
    },
    /// Print Chern periods of a snapshot.
    Chern { snapshot: PathBuf },
    /// Scan local energy concentration of a snapshot.
    Scan {
        snapshot: PathBuf,
        /// Ball radii, comma separated (default: 2h and 4h, below one half).
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.1)]
        eps0: f64,
        /// Grid steps between scan centers (default n/8).
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Write a gnuplot script for a trace (and optional period history).
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        periods: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let out_dir = cli.out.clone();
    match &cli.command {
        Command::Minimize => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("minimize needs --config".into()))?;
            let mut cfg = RunConfig::load(path)?;
            if let Some(out) = out_dir {
                cfg.out = out;
            }
            cmd_minimize(&cfg)
        }
        Command::Verify { snapshot, tests, battery_seed } => cmd_verify(snapshot, *tests, *battery_seed),
        Command::Glue { outer, inner, j, scale, center, eps0, closeness_tol } => {
            let mut settings = GlueSettings::default();
            if let Some(e) = eps0 {
                settings.eps0 = *e;
            }
            if let Some(c) = closeness_tol {
                settings.closeness_tol = *c;
            }
            let out = out_dir.unwrap_or_else(|| PathBuf::from("."));
            cmd_glue(outer, inner, *j, *scale, center.as_deref(), &settings, &out)
        }
        Command::Chern { snapshot } => cmd_chern(snapshot),
        Command::Scan { snapshot, radii, eps0, stride } => cmd_scan(snapshot, radii.as_deref(), *eps0, *stride),
        Command::Plot { trace, periods } => {
            let out = out_dir.unwrap_or_else(|| PathBuf::from("."));
            cmd_plot(trace, periods.as_deref(), &out)
        }
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn format_periods(p: &[f64; 6]) -> String {
    TWO_FORM_PAIRS
        .iter()
        .zip(p)
        .map(|((a, b), v)| format!("p{a}{b}={v:.9}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_minimize(cfg: &RunConfig) -> Result<i32> {
    create_dir(&cfg.out)?;
    let (j0, metric) = cfg.build_seed()?;
    let trace_path = cfg.out.join("trace.csv");
    let periods_path = cfg.out.join("periods.csv");
    let mut trace_csv = format!("{}\n", IterationRecord::CSV_HEADER);
    let mut periods_csv = String::from("iteration,p01,p02,p03,p12,p13,p23\n");
    let every = cfg.optimizer.checkpoint_every;
    let out = minimize_observed(&j0, &metric, &cfg.optimizer, |rec, j| {
        let _ = writeln!(trace_csv, "{}", rec.csv_row());
        if rec.iteration % every == 0 {
            let p = lattice_periods(j, &metric)?;
            let row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(periods_csv, "{},{}", rec.iteration, row.join(","));
            let snap = Snapshot::capture(j, &metric, format!("checkpoint iteration={}", rec.iteration))?;
            // written before the next evaluation starts
            snap.write(&cfg.out.join(format!("checkpoint_{:06}.bhacs", rec.iteration)))?;
        }
        Ok(())
    })?;
    let last = *out.last();
    if last.iteration % every != 0 {
        let p = lattice_periods(&out.j, &metric)?;
        let row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(periods_csv, "{},{}", last.iteration, row.join(","));
    }
    write_file(&trace_path, &trace_csv)?;
    write_file(&periods_path, &periods_csv)?;

    let strong = residual_strong(&out.j, &metric)?;
    let weak = residual_weak_seeded(&out.j, &metric, cfg.battery_size, cfg.battery_seed)?;
    let periods = lattice_periods(&out.j, &metric)?;
    let status = match &out.termination {
        Termination::Converged => "converged".to_string(),
        Termination::MaxIterations => "max_iters".to_string(),
        Termination::Stall { reason } => format!("stall ({reason})"),
    };
    let meta = format!(
        "status={status} iterations={} grad_tol={:e} grad_norm={:e}",
        last.iteration, cfg.optimizer.grad_tol, last.grad_norm
    );
    Snapshot::capture(&out.j, &metric, meta)?.write(&cfg.out.join("final.bhacs"))?;
    let summary = format!(
        "status {status}\niterations {}\ne2 {:e}\ne1 {:e}\ngrad_norm {:e}\nresidual_commutator {:e}\nresidual_strong {:e}\nresidual_weak_max {:e}\nperiods {}\n",
        last.iteration,
        last.e2,
        last.e1,
        last.grad_norm,
        last.residual_commutator,
        strong,
        weak,
        format_periods(&periods)
    );
    write_file(&cfg.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(if out.converged() { 0 } else { 2 })
}

fn cmd_verify(path: &Path, tests: usize, battery_seed: u64) -> Result<i32> {
    let snap = Snapshot::read(path)?;
    let metric = snap.metric_field()?;
    let field = &snap.field;
    let grid = field.grid();
    let (mut square, mut metric_defect, mut bad) = (0.0f64, 0.0f64, 0usize);
    for i in 0..grid.len() {
        let v = point_violation(&field[i], metric.g(i));
        square = square.max(v.square);
        metric_defect = metric_defect.max(v.metric);
        if v.worst() > crate::acs::DEFAULT_TOL {
            bad += 1;
        }
    }
    let (e1, e2) = energies(field, &metric)?;
    println!("violations square={square:e} metric={metric_defect:e} points={bad}");
    println!("e2 {e2:e}");
    println!("e1 {e1:e}");
    println!("residual_commutator {:e}", residual_commutator(field, &metric)?);
    println!("residual_strong {:e}", residual_strong(field, &metric)?);
    println!("residual_weak_max {:e}", residual_weak_seeded(field, &metric, tests.max(1), battery_seed)?);
    if bad == 0 {
        let (j, metric) = snap.structure()?;
        println!("periods {}", format_periods(&lattice_periods(&j, &metric)?));
        Ok(0)
    } else {
        println!("constraints violated at {bad} points");
        Ok(1)
    }
}

fn cmd_glue(
    outer: &Path,
    inner: &Path,
    j: u32,
    scale: f64,
    center: Option<&[usize]>,
    settings: &GlueSettings,
    out: &Path,
) -> Result<i32> {
    let (j_out, metric) = Snapshot::read(outer)?.structure()?;
    let inner_snap = Snapshot::read(inner)?;
    if inner_snap.metric != *metric.constant_value().expect("snapshots carry constant metrics").0 {
        return Err(Error::InvalidArgument("inner and outer snapshots use different metrics".into()));
    }
    let (j_in, _) = inner_snap.structure()?;
    let n = j_out.grid().n();
    let center = match center {
        None => [n / 2; 4],
        Some(c) if c.len() == 4 && c.iter().all(|&v| v < n) => [c[0], c[1], c[2], c[3]],
        Some(c) => return Err(Error::InvalidArgument(format!("center {c:?} is not a grid point"))),
    };
    let profile = GlueProfile::new(j)?;
    let result = glue(&j_out, &j_in, &profile, &MollifierKernel::new(), center, scale, &metric, settings)?;
    create_dir(out)?;
    let meta = format!("glue j={j} scale={scale} center={center:?}");
    Snapshot::capture(&result.j, &metric, meta)?.write(&out.join("glued.bhacs"))?;
    println!("annulus_energy {:e}", result.annulus_energy);
    println!("neighborhood_mu {:e}", result.neighborhood_mu);
    println!("measured_constant {:e}", result.measured_constant);
    println!("input_gap {:e}", result.input_gap);
    println!("gradient_gap_l4 {:e}", result.gradient_gap_l4);
    Ok(0)
}

fn cmd_chern(path: &Path) -> Result<i32> {
    let (j, metric) = Snapshot::read(path)?.structure()?;
    let c = chern_form(&j, &metric)?;
    println!("periods {}", format_periods(&c.periods));
    println!("quadrature {}", format_periods(&c.quadrature_periods));
    Ok(0)
}

fn cmd_scan(path: &Path, radii: Option<&[f64]>, eps0: f64, stride: Option<usize>) -> Result<i32> {
    let (j, metric) = Snapshot::read(path)?.structure()?;
    let h = j.grid().spacing();
    let radii = radii
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| [2.0 * h, 4.0 * h].into_iter().filter(|&r| r < 0.5).collect());
    let report = concentration_scan(&j, &metric, &radii, eps0, stride)?;
    let max_f = report.f_values.iter().flatten().cloned().fold(0.0, f64::max);
    println!("centers {} radii {:?} max_F {max_f:e}", report.centers.len(), report.radii);
    if report.flagged.is_empty() {
        println!("flagged none");
    }
    for (c, r) in &report.flagged {
        println!("flagged center={:?} radius={} F={:e}", report.centers[*c], report.radii[*r], report.f_values[*c][*r]);
    }
    Ok(0)
}

fn read_csv(path: &Path, header: &str) -> Result<String> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match text.lines().next() {
        Some(h) if h.trim() == header => Ok(text),
        _ => Err(Error::Format(format!("{} does not start with `{header}`", path.display()))),
    }
}

fn datablock(name: &str, csv: &str) -> String {
    let mut s = format!("${name} << EOD\n");
    for line in csv.lines().skip(1) {
        s.push_str(&line.replace(',', " "));
        s.push('\n');
    }
    s.push_str("EOD\n");
    s
}

fn cmd_plot(trace: &Path, periods: Option<&Path>, out: &Path) -> Result<i32> {
    let trace_csv = read_csv(trace, IterationRecord::CSV_HEADER)?;
    let mut script = String::from("# energy trace and period history\nset terminal pngcairo size 1000,700\n");
    script.push_str(&datablock("trace", &trace_csv));
    let period_csv = periods.map(|p| read_csv(p, "iteration,p01,p02,p03,p12,p13,p23")).transpose()?;
    if let Some(p) = &period_csv {
        script.push_str(&datablock("periods", p));
    }
    script.push_str(
        "set output 'trace.png'\nset logscale y\nset xlabel 'iteration'\n\
         plot $trace using 1:2 with lines title 'e2', \\\n     \
         $trace using 1:4 with lines title 'grad norm', \\\n     \
         $trace using 1:6 with lines title 'commutator residual'\n",
    );
    if period_csv.is_some() {
        script.push_str("set output 'periods.png'\nunset logscale y\nset ylabel 'period'\nplot ");
        let series: Vec<String> = TWO_FORM_PAIRS
            .iter()
            .enumerate()
            .map(|(k, (a, b))| format!("$periods using 1:{} with linespoints title 'p{a}{b}'", k + 2))
            .collect();
        script.push_str(&series.join(", \\\n     "));
        script.push('\n');
    }
    create_dir(out)?;
    let path = out.join("plot.gp");
    let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    file.write_all(script.as_bytes()).map_err(|e| Error::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(0)
}
