use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biotvem::harness;
use biotvem::mesh::{self, check_regularity, BoundaryTag, TagRule};
use biotvem::VemError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "biotvem",
    version,
    about = "Coupled Stokes / poroelastic plate virtual element solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study described by a key-value config file.
    Run { config: PathBuf },
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write a tagged unit-cube hexahedral mesh.
    GenCube {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a mesh file and report its regularity.
    Check { path: PathBuf },
}

fn run(config: &Path) -> biotvem::Result<()> {
    let text = std::fs::read_to_string(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let cfg = harness::parse_study_config(&text, base)?;
    let table = harness::run_study(&cfg)?;
    print!("{}", table.render());
    if let Some(dir) = &cfg.output_dir {
        println!("results written to {}", dir.display());
    }
    Ok(())
}

fn gen_cube(n: usize, out: &Path) -> biotvem::Result<()> {
    let m = mesh::tag_boundaries(mesh::generate_cube_mesh(n, [0.0; 3], [1.0; 3])?, &TagRule::example1())?;
    std::fs::write(out, m.export())?;
    println!(
        "wrote {} cells, {} faces to {}",
        m.cells.len(),
        m.faces.len(),
        out.display()
    );
    Ok(())
}

fn check(path: &Path) -> biotvem::Result<()> {
    let file = std::fs::File::open(path)?;
    let m = mesh::import_mesh(std::io::BufReader::new(file))?;
    let r = check_regularity(&m);
    println!(
        "vertices {} edges {} faces {} cells {}",
        m.vertices.len(),
        m.edges.len(),
        m.faces.len(),
        m.cells.len()
    );
    println!("h {:.4e} rho {:.4e}", m.h(), r.rho);
    for tag in [BoundaryTag::GammaU, BoundaryTag::GammaSigma, BoundaryTag::Sigma] {
        println!("{} faces: {}", tag.name(), m.faces_with_tag(tag).len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res: Result<(), VemError> = match &cli.command {
        Command::Run { config } => run(config),
        Command::Mesh { command } => match command {
            MeshCommand::GenCube { n, out } => gen_cube(*n, out),
            MeshCommand::Check { path } => check(path),
        },
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::FAILURE
        }
    }
}
