//! The `vrte` command line.

pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use vrte::fields::{field_from_moments, moment_consistency, moments_at, MuMesh, DEFAULT_MU_NODES, SURFACE_NU};
use vrte::io::{format_value, write_outputs, write_surface, RunConfig, SurfaceChannel};
use vrte::kernels::table_gate;
use vrte::solver::{contraction_ratio, solve, to_celsius, AtmosphereScenario, KernelMode, Medium, Solution, Transport};
use vrte::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_PROPERTY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vrte", version, about = "Radiative equilibrium of a stratified atmosphere with variable refractive index")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the temperature and write the result tables.
    Solve(RunArgs),
    /// Build the kernel table and dump it in binary form.
    Table(RunArgs),
    /// Solve, then write I(z, mu) and Q(z, mu) at one frequency.
    Reconstruct {
        #[command(flatten)]
        run: RunArgs,
        /// Scaled frequency.
        #[arg(long, default_value_t = SURFACE_NU)]
        nu: f64,
        /// Number of direction cosines in [-1, 1].
        #[arg(long, default_value_t = DEFAULT_MU_NODES)]
        mu_nodes: usize,
    },
    /// Run the numerical property checks.
    Verify {
        /// Only the constant-index kernel check and the Stefan check.
        #[arg(long)]
        quick: bool,
    },
    /// Print the contraction constants of a configuration.
    Diag(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Replace the profile by a cloud slab with this index bump.
    #[arg(long, value_name = "F")]
    eps: Option<f64>,
    /// Add the CO2 plateau with this level.
    #[arg(long, value_name = "LEVEL")]
    co2: Option<f64>,
    /// Clamp K0 below at -2e-6 in the spectra.
    #[arg(long)]
    clamp_k0: bool,
}

impl RunArgs {
    fn load(&self) -> vrte::Result<RunConfig> {
        let mut c = RunConfig::load(&self.config)?;
        if let Some(eps) = self.eps {
            c.set_eps(eps)?;
        }
        if let Some(level) = self.co2 {
            c.set_co2(level)?;
        }
        if let Some(dir) = &self.out {
            c.output_dir = dir.clone();
        }
        c.clamp_k0 |= self.clamp_k0;
        c.validate()?;
        Ok(c)
    }
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Data(_) | Error::Io { .. } | Error::Unsupported(_) => EXIT_CONFIG,
        Error::Domain(_) | Error::ForbiddenRay { .. } | Error::Newton { .. } | Error::NotConverged { .. } => EXIT_NUMERICAL,
    }
}

/// Parse `args` (program name first), run the command and return the exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => run_solve(&a),
        Command::Table(a) => run_table(&a),
        Command::Reconstruct { run, nu, mu_nodes } => run_reconstruct(&run, nu, mu_nodes),
        Command::Verify { quick } => return run_verify(quick),
        Command::Diag(a) => run_diag(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn solved(c: &RunConfig) -> vrte::Result<(AtmosphereScenario, Solution)> {
    let s = c.scenario()?;
    let sol = solve(&s, &c.solve_options())?;
    Ok((s, sol))
}

fn run_solve(a: &RunArgs) -> vrte::Result<()> {
    let c = a.load()?;
    let (s, sol) = solved(&c)?;
    let files = write_outputs(c.output_dir(), &c, &s, &sol)?;
    let r = &sol.report;
    println!(
        "converged after {} iterations, bracket {}, ground {:.3} C",
        r.iterations,
        format_value(r.bracket_width),
        to_celsius(sol.temperature()[0])
    );
    for p in [&files.temperature, &files.spectra_ground, &files.spectra_top, &files.convergence, &files.diagnostic] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run_table(a: &RunArgs) -> vrte::Result<()> {
    let c = a.load()?;
    let s = c.scenario()?;
    let medium = Medium::new(&s)?;
    let mut settings = c.solve.kernels;
    settings.mode = KernelMode::Table;
    let transport = Transport::build(&s, &medium, &settings, c.solve.execution)?;
    let table = transport.table().expect("table mode builds a table");
    let dir = c.output_dir();
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join("kernel_table.bin");
    table.export(&path)?;
    let gate = table_gate(transport.geometry(), table, 1000, 7);
    println!(
        "{} kappa nodes in [{}, {}], interpolation error {} ({})",
        table.kappa_nodes().len(),
        format_value(table.kappa_nodes()[0]),
        format_value(*table.kappa_nodes().last().unwrap_or(&0.0)),
        format_value(gate.max_rel_error),
        if gate.passed() { "ok" } else { "above threshold" }
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn run_reconstruct(a: &RunArgs, nu: f64, mu_nodes: usize) -> vrte::Result<()> {
    let c = a.load()?;
    let mesh = MuMesh::uniform(mu_nodes)?;
    let (s, sol) = solved(&c)?;
    let opts = c.solve_options();
    let moments = moments_at(&s, &sol, nu, &opts)?;
    let field = field_from_moments(&s, sol.temperature(), nu, moments.clone(), &mesh, opts.kernels.dz_inner, opts.execution)?;
    let report = moment_consistency(&field, &moments);
    let dir = c.output_dir();
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let hash = c.hash();
    let tag = format!("{nu}");
    let (pi, pq) = (surface_path(dir, "I", &tag), surface_path(dir, "Q", &tag));
    write_surface(&pi, &field, SurfaceChannel::Intensity, &hash)?;
    write_surface(&pq, &field, SurfaceChannel::Polarization, &hash)?;
    println!(
        "moment consistency: J {} K {} ({})",
        format_value(report.j_rel.iter().cloned().fold(0.0, f64::max)),
        format_value(report.k_rel.iter().cloned().fold(0.0, f64::max)),
        if report.passed() { "within tolerance" } else { "above tolerance" }
    );
    println!("wrote {}", pi.display());
    println!("wrote {}", pq.display());
    Ok(())
}

fn surface_path(dir: &Path, channel: &str, tag: &str) -> PathBuf {
    dir.join(format!("surface_{channel}_nu{tag}.txt"))
}

fn run_verify(quick: bool) -> i32 {
    let checks = verify::run(quick);
    let mut ok = true;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_PROPERTY
    }
}

fn run_diag(a: &RunArgs) -> vrte::Result<()> {
    let c = a.load()?;
    let s = c.scenario()?;
    let d = contraction_ratio(&s);
    for (k, v) in [
        ("kappa_m", d.kappa_m),
        ("kappa_M", d.kappa_big_m),
        ("eps_M", d.eps_big_m),
        ("albedo_m", d.a_m),
        ("albedo_M", d.a_big_m),
        ("beta_M", d.beta_big_m),
        ("Z", d.z_top),
        ("eta", d.eta_ratio),
        ("R", d.r),
    ] {
        println!("{k} {}", format_value(v));
    }
    println!("certifies_contraction {}", d.certifies());
    println!("bound {}", d.bound().map_or("none".into(), format_value));
    Ok(())
}
