use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{probe_table, run_convergence, run_field, run_field_on, EllMode, ExperimentConfig, Family};
use crate::error::{Result, VemError};
use crate::polymesh::{read_mesh, write_mesh};
use crate::sfsupg::{DEFAULT_ELL_MAX, DEFAULT_PROBE_TOL};

#[derive(Debug, Parser)]
#[command(name = "sfvem", version, about = "Stabilization-free SUPG virtual elements for 2D advection-diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        action: MeshCommand,
    },
    /// Tabulate the minimal ell per cell type.
    Probe(ProbeArgs),
    /// Solve once on the finest configured mesh and export VTK.
    Solve(RunArgs),
    /// Run a refinement study and write convergence.csv.
    Convergence(RunArgs),
}

#[derive(Debug, Subcommand)]
pub enum MeshCommand {
    /// Generate a mesh of the unit square as JSON.
    Gen(MeshGenArgs),
}

#[derive(Debug, Args)]
pub struct MeshGenArgs {
    #[arg(long, default_value = "t1")]
    pub family: Family,
    /// Refinement parameters (cells per side, pentagon columns, or Voronoi cell count).
    #[arg(long, value_delimiter = ',', required = true)]
    pub refinements: Vec<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Families to probe (repeatable); all three by default.
    #[arg(long)]
    pub family: Vec<Family>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub k: Vec<usize>,
    /// Refinement parameter per listed family (defaults: t1 4, t2 4, t3 100).
    #[arg(long, value_delimiter = ',')]
    pub refinements: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_PROBE_TOL)]
    pub probe_tol: f64,
    #[arg(long, default_value_t = DEFAULT_ELL_MAX)]
    pub ell_max: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "smooth")]
    pub problem: String,
    /// Override the problem's diffusivity.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, default_value = "t1")]
    pub family: Family,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// `auto`, a fixed integer, or a vertex-count table such as `4:2,5:1`.
    #[arg(long, default_value = "auto")]
    pub ell: EllMode,
    #[arg(long, default_value_t = DEFAULT_PROBE_TOL)]
    pub probe_tol: f64,
    #[arg(long, default_value_t = DEFAULT_ELL_MAX)]
    pub ell_max: usize,
    /// Comma-separated refinement parameters; family defaults otherwise.
    #[arg(long, value_delimiter = ',')]
    pub refinements: Vec<usize>,
    /// Also run the stabilized standard VEM.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Solve on a mesh read from JSON instead of a generated one (solve only).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn config(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(&self.problem, self.family, self.k);
        c.kappa = self.kappa;
        if !self.refinements.is_empty() {
            c.refinements = self.refinements.clone();
        }
        c.ell = self.ell.clone();
        c.probe_tol = self.probe_tol;
        c.ell_max = self.ell_max;
        c.out_dir = self.out.clone();
        c.baseline = self.baseline;
        c.seed = self.seed;
        c
    }
}

/// Writes to the console and, when present, to the run log.
struct Tee<'a> {
    console: &'a mut dyn Write,
    file: Option<std::fs::File>,
}

impl Write for Tee<'_> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.console.write_all(buf)?;
        if let Some(f) = self.file.as_mut() {
            f.write_all(buf)?;
        }
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        self.console.flush()?;
        if let Some(f) = self.file.as_mut() {
            f.flush()?;
        }
        Ok(())
    }
}

fn tee<'a>(console: &'a mut dyn Write, out: Option<&PathBuf>) -> Result<Tee<'a>> {
    let file = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Some(std::fs::File::create(dir.join("run.log"))?)
        }
        None => None,
    };
    Ok(Tee { console, file })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, console: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| VemError::InvalidArgument(e.to_string()))?;
    execute(cli.command, console)
}

pub fn execute(command: Command, console: &mut dyn Write) -> Result<()> {
    match command {
        Command::Mesh {
            action: MeshCommand::Gen(a),
        } => {
            std::fs::create_dir_all(&a.out)?;
            for (level, &n) in a.refinements.iter().enumerate() {
                let mesh = a.family.mesh(n, a.seed, level)?;
                let path = a.out.join(format!("mesh_{}_{n}.json", a.family.name()));
                write_mesh(&mesh, &path)?;
                writeln!(
                    console,
                    "wrote {} (cells={} vertices={} h_max={:e})",
                    path.display(),
                    mesh.n_cells(),
                    mesh.n_vertices(),
                    mesh.h_max()
                )?;
            }
            Ok(())
        }
        Command::Probe(a) => {
            let families = if a.family.is_empty() { Family::ALL.to_vec() } else { a.family.clone() };
            let sizes: Vec<(Family, usize)> = families
                .iter()
                .enumerate()
                .map(|(i, &f)| {
                    let n = a.refinements.get(i).copied().unwrap_or(match f {
                        Family::T1 | Family::T2 => 4,
                        Family::T3 => 100,
                    });
                    (f, n)
                })
                .collect();
            let mut config = ExperimentConfig::new("smooth", families[0], 1);
            config.probe_tol = a.probe_tol;
            config.ell_max = a.ell_max;
            config.seed = a.seed;
            config.out_dir = a.out.clone();
            let mut log = tee(console, a.out.as_ref())?;
            let table = probe_table(&sizes, &a.k, &config, &mut log)?;
            write!(log, "{}", table.to_csv())?;
            Ok(())
        }
        Command::Solve(a) => {
            let config = a.config();
            let mut log = tee(console, a.out.as_ref())?;
            match &a.mesh {
                Some(path) => {
                    let mesh = read_mesh(path)?;
                    let tag = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    run_field_on(mesh, &tag, &config, &mut log)?;
                }
                None => {
                    run_field(&config, &mut log)?;
                }
            }
            Ok(())
        }
        Command::Convergence(a) => {
            let config = a.config();
            let mut log = tee(console, a.out.as_ref())?;
            let report = run_convergence(&config, &mut log)?;
            write!(log, "{}", report.to_csv())?;
            Ok(())
        }
    }
}
