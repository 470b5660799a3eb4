use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hodge_core::baseline::diffusion_map;
use hodge_core::datasets::{circle, sphere_grid, torus_grid};
use hodge_core::eval::{run_suite, Suite};
use hodge_core::hodge::{affinity, embed, hodge_distance, normalized_affinity, normalized_embed};
use hodge_core::{default_bandwidth, fit, io, Cloud, DegeneratePolicy, HodgeError, RunConfig, Spectrum};

#[derive(Parser)]
#[command(name = "hodgemap", version, about = "Hodge diffusion maps for point clouds")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic point cloud as CSV.
    Generate {
        #[arg(value_enum)]
        name: Dataset,
        /// Grid steps per parameter (torus, sphere) or point count (circle).
        size: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the full pipeline and write frames, spectrum and embedding.
    Fit {
        points: PathBuf,
        #[command(flatten)]
        params: FitParams,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Eigenpairs kept in the spectrum cache; 0 keeps all.
        #[arg(long, default_value_t = 50)]
        keep: usize,
        /// Also write the ED_k operator.
        #[arg(long)]
        save_operator: bool,
        /// Also write an SVG scatter of the first two diagonal entries.
        #[arg(long)]
        svg: bool,
    },
    /// Re-embed from a cached spectrum with a new m and diffusion time.
    Embed {
        spectrum: PathBuf,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long)]
        tm: Option<u32>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Affinity between two points from a cached spectrum.
    Affinity {
        spectrum: PathBuf,
        i: usize,
        j: usize,
        #[arg(long)]
        tm: Option<u32>,
        /// Report the raw rather than the normalized value.
        #[arg(long)]
        raw: bool,
    },
    /// Squared Hodge diffusion distance between two points.
    Distance {
        spectrum: PathBuf,
        i: usize,
        j: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long)]
        tm: Option<u32>,
        #[arg(long)]
        raw: bool,
    },
    /// Classical diffusion map coordinates.
    Baseline {
        points: PathBuf,
        /// Kernel scale; defaults to 2t² for the bandwidth t.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run an evaluation suite and report each criterion.
    Eval {
        #[arg(value_enum)]
        suite: SuiteName,
        #[arg(long, default_value_t = 20240607)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Dataset {
    Torus,
    Sphere,
    Circle,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteName {
    Invariants,
    Convergence,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum Degenerate {
    Reject,
    Borrow,
}

#[derive(Args)]
struct FitParams {
    /// `key = value` file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "k-order")]
    k_order: Option<usize>,
    #[arg(long)]
    knn: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    tm: Option<u32>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Handling of points whose neighbors all coincide with them.
    #[arg(long, value_enum)]
    degenerate: Option<Degenerate>,
}

impl FitParams {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_file(&text).with_context(|| format!("in {}", path.display()))?;
        }
        if let Some(v) = self.k_order {
            cfg.order = v;
        }
        if let Some(v) = self.knn {
            cfg.knn = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.tm {
            cfg.tm = v;
        }
        if let Some(v) = self.t {
            cfg.bandwidth = Some(v);
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.degenerate {
            cfg.degenerate = match v {
                Degenerate::Reject => DegeneratePolicy::Reject,
                Degenerate::Borrow => DegeneratePolicy::BorrowNearest,
            };
        }
        Ok(cfg)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn read_points(path: &Path) -> Result<Cloud> {
    io::read_points(open(path)?).with_context(|| format!("reading points from {}", path.display()))
}

fn read_spectrum(path: &Path, tm: Option<u32>) -> Result<Spectrum> {
    let spec: Spectrum = io::read_spectrum(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    Ok(match tm {
        Some(tm) => spec.with_tm(tm)?,
        None => spec,
    })
}

fn check_index(spec: &Spectrum, i: usize) -> Result<()> {
    if i >= spec.n_points {
        bail!("point index {i} out of range for {} points", spec.n_points);
    }
    Ok(())
}

fn write_embedding_files(out_dir: &Path, emb: &hodge_core::Embedding, svg: bool) -> Result<()> {
    let mut w = create(&out_dir.join("embedding.csv"))?;
    io::write_embedding(&mut w, emb)?;
    w.flush()?;
    let mut w = create(&out_dir.join("diagonal.csv"))?;
    io::write_diagonal(&mut w, emb, 3)?;
    w.flush()?;
    if svg && emb.m >= 2 {
        let xy: Vec<(f64, f64)> = emb.points.iter().map(|e| (e[(0, 0)], e[(1, 1)])).collect();
        let labels: Vec<usize> = (0..emb.len()).collect();
        let mut w = create(&out_dir.join("diagonal.svg"))?;
        io::write_svg_scatter(&mut w, &xy, &labels)?;
        w.flush()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring threads")?;
    }
    match cli.command {
        Command::Generate { name, size, out } => {
            let data = match name {
                Dataset::Torus => torus_grid::<f64>(size)?,
                Dataset::Sphere => sphere_grid::<f64>(size)?,
                Dataset::Circle => circle::<f64>(size)?,
            };
            let mut w = create(&out)?;
            io::write_points(&mut w, &data.cloud)?;
            w.flush()?;
            println!("wrote {} points to {}", data.cloud.len(), out.display());
        }
        Command::Fit { points, params, out_dir, keep, save_operator, svg } => {
            let cfg = params.resolve()?;
            let cloud = read_points(&points)?;
            let res = fit(&cloud, &cfg).map_err(|e| match e {
                HodgeError::DegenerateNeighborhood(_) => {
                    anyhow::anyhow!("{e} (pass --degenerate borrow to reuse the nearest regular frame)")
                }
                other => other.into(),
            })?;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let mut w = create(&out_dir.join("frames.txt"))?;
            io::write_frames(&mut w, &res.frames)?;
            w.flush()?;
            let mut w = create(&out_dir.join("eigenvalues.csv"))?;
            io::write_eigenvalues(&mut w, &res.spectrum.eigenvalues)?;
            w.flush()?;
            let cached = if keep == 0 { res.spectrum.clone() } else { res.spectrum.truncated(keep.max(cfg.m + 1)) };
            let mut w = create(&out_dir.join("spectrum.txt"))?;
            io::write_spectrum(&mut w, &cached)?;
            w.flush()?;
            if save_operator {
                let mut w = create(&out_dir.join("operator.txt"))?;
                io::write_operator(&mut w, &res.ed)?;
                w.flush()?;
            }
            write_embedding_files(&out_dir, &res.embedding, svg)?;
            let summary = res.summary.to_text();
            fs::write(out_dir.join("summary.txt"), &summary)?;
            print!("{summary}");
        }
        Command::Embed { spectrum, m, tm, out_dir } => {
            let spec = read_spectrum(&spectrum, tm)?;
            let emb = normalized_embed(&spec, m)?;
            write_embedding_files(&out_dir, &emb, false)?;
            println!("wrote {} embedding matrices of size {m} to {}", emb.len(), out_dir.display());
        }
        Command::Affinity { spectrum, i, j, tm, raw } => {
            let spec = read_spectrum(&spectrum, tm)?;
            check_index(&spec, i)?;
            check_index(&spec, j)?;
            let v = if raw { affinity(&spec, i, j) } else { normalized_affinity(&spec, i, j)? };
            println!("{}", io::fmt_float(v));
        }
        Command::Distance { spectrum, i, j, m, tm, raw } => {
            let spec = read_spectrum(&spectrum, tm)?;
            check_index(&spec, i)?;
            check_index(&spec, j)?;
            let emb = if raw { embed(&spec, m)? } else { normalized_embed(&spec, m)? };
            println!("{}", io::fmt_float(hodge_distance(&emb, i, j)));
        }
        Command::Baseline { points, epsilon, t, m, out } => {
            let cloud = read_points(&points)?;
            let eps = match (epsilon, t) {
                (Some(e), _) => e,
                (None, Some(t)) => 2.0 * t * t,
                (None, None) => {
                    let t = default_bandwidth(&cloud)?;
                    2.0 * t * t
                }
            };
            let dm = diffusion_map(&cloud, eps, m)?;
            let mut w = create(&out)?;
            io::write_coordinates(&mut w, "psi", &dm.coords)?;
            w.flush()?;
            println!("epsilon = {}", io::fmt_float(eps));
            for (l, v) in dm.eigenvalues.iter().enumerate() {
                println!("lambda_{} = {}", l + 1, io::fmt_float(*v));
            }
        }
        Command::Eval { suite, seed } => {
            let suite = match suite {
                SuiteName::Invariants => Suite::Invariants,
                SuiteName::Convergence => Suite::Convergence,
                SuiteName::Paper => Suite::Paper,
            };
            let outcomes = run_suite(suite, seed);
            for o in &outcomes {
                println!("{o}");
            }
            return Ok(outcomes.iter().all(|o| o.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
