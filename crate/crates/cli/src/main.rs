mod output;
mod plot;

use clap::{Parser, Subcommand, ValueEnum};
use output::{Format, Output};
use selfaffine_core::bench::{make_family, verify_formula, FamilySpec};
use selfaffine_core::dimension::{
    assouad_estimate, assouad_projection, box_dimensions, delta_estimate, DimensionEstimate,
};
use selfaffine_core::dyadic::{CellSet, CellSetPyramid};
use selfaffine_core::ifs::{rasterize, rasterize_with_limit, Ifs, DEFAULT_LEAF_LIMIT};
use selfaffine_core::semigroup::{domination_check, furstenberg_directions, Direction, Which};
use selfaffine_core::tangent::{
    diag_product_tangent, furstenberg_pigeonhole, tangent_slice_search, verify_product_bounds, weak_tangent_sequence,
    Mode, ProductConfig, SliceConfig, ZoomConfig,
};
use selfaffine_core::{Error, Result};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "selfaffine", version, about = "Dimension estimates and tangent constructions for planar self-affine sets")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value = "csv")]
    out_format: Format,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized checks. Estimators are deterministic and ignore it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DimMethod {
    Box,
    Assouad,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Bm,
    Fj,
}

#[derive(Subcommand)]
enum Command {
    /// Closed dyadic cells of the attractor at one level.
    Rasterize {
        #[arg(long)]
        ifs: PathBuf,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        out: PathBuf,
        /// Cap on refined words before giving up with a resource-limit error.
        #[arg(long, default_value_t = DEFAULT_LEAF_LIMIT)]
        max_words: u64,
    },
    /// Box or Assouad dimension estimate.
    Dims {
        #[arg(long)]
        ifs: PathBuf,
        #[arg(long, value_enum)]
        method: DimMethod,
        /// Coarse levels of the Assouad scan.
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        k: Vec<u32>,
        /// Window depth (Assouad) or finest level (box).
        #[arg(long, default_value_t = 10)]
        m: u32,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Assouad dimension of the projection onto the line at `angle` radians.
    Project {
        #[arg(long)]
        ifs: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        angle: f64,
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        k: Vec<u32>,
        #[arg(long, default_value_t = 10)]
        m: u32,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Tube dimension for strips perpendicular to the line at `angle`.
    Tube {
        #[arg(long)]
        ifs: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        angle: f64,
        /// Inclusive level range `L1..L2`.
        #[arg(long)]
        levels: String,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Furstenberg descent on a stored cell set.
    Pigeonhole {
        #[arg(long)]
        cells: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        ell: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value = "branching")]
        mode: String,
    },
    /// Zoom windows with certified counts, or with `--slice` a certified tube.
    Tangent {
        #[arg(long)]
        ifs: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        slice: bool,
        /// Target exponent; estimated when absent.
        #[arg(long)]
        eta: Option<f64>,
        /// Assouad estimate used by `--slice`; estimated when absent.
        #[arg(long)]
        s_est: Option<f64>,
    },
    /// Diagonal product-tangent construction.
    ProductTangent {
        #[arg(long)]
        ifs: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Directory for the report and its cell files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Domination classification and Furstenberg directions.
    Semigroup {
        #[arg(long)]
        ifs: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Compare estimators with closed-form values on a benchmark family.
    Verify {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// `key=value` pairs, e.g. `n=4 m=2 digits=0:0,0:1,2:0` or
        /// `beta=0.5 alpha=0.3333 b=0,0,0.5 a=0,0.3333,0.6667`.
        #[arg(long, num_args = 0..)]
        params: Vec<String>,
        #[arg(long, default_value_t = 14)]
        budget: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut out = Output::new(cli.out_format);
    match run(cli.command, &mut out) {
        Ok(pass) => {
            out.flush();
            ExitCode::from(if pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Returns whether every check passed.
fn run(command: Command, out: &mut Output) -> Result<bool> {
    match command {
        Command::Rasterize { ifs, level, out: path, max_words } => {
            let cells = rasterize_with_limit(&Ifs::read_file(ifs)?, level, max_words)?;
            cells.write_file(&path)?;
            out.pairs(&[("level", json!(level)), ("count", json!(cells.len())), ("out", json!(path))]);
            Ok(true)
        }
        Command::Dims { ifs, method, k, m, plot } => {
            let ifs = Ifs::read_file(ifs)?;
            let est = match method {
                DimMethod::Assouad => vec![assouad_estimate(&ifs, &k, m)?],
                DimMethod::Box => {
                    let (lo, hi) = box_dimensions(&CellSetPyramid::from_finest(&rasterize(&ifs, m)?))?;
                    vec![lo, hi]
                }
            };
            estimates(out, &est, plot)
        }
        Command::Project { ifs, angle, k, m, plot } => {
            let e = assouad_projection(&Ifs::read_file(ifs)?, &Direction::from_angle(angle), &k, m)?;
            estimates(out, &[e], plot)
        }
        Command::Tube { ifs, angle, levels, plot } => {
            let levels = parse_range(&levels)?;
            let e = delta_estimate(&Ifs::read_file(ifs)?, &Direction::from_angle(angle), &levels)?;
            estimates(out, &[e], plot)
        }
        Command::Pigeonhole { cells, s, t, ell, k, mode } => {
            let cells = CellSet::read_file(cells)?;
            let r = furstenberg_pigeonhole(&cells, s, t, ell, k, mode.parse::<Mode>()?)?;
            let ok = r.verify(&cells);
            let mut v = serde_json::to_value(&r)?;
            v["verified"] = json!(ok);
            out.object(v);
            Ok(ok)
        }
        Command::Tangent { ifs, m, slice, eta, s_est } => {
            let ifs = Ifs::read_file(ifs)?;
            if slice {
                let s_est = match s_est {
                    Some(s) => s,
                    None => assouad_estimate(&ifs, &[2, 4, 6], 10)?.value,
                };
                let eta = match eta {
                    Some(e) => e,
                    None => assouad_projection(&ifs, &Direction::horizontal(), &[2, 4, 6], 10)?.value,
                };
                let r = tangent_slice_search(&ifs, &Direction::horizontal(), m, &SliceConfig::new(s_est, eta))?;
                let ok = r.verify();
                let mut v = serde_json::to_value(&r)?;
                v["verified"] = json!(ok);
                out.object(v);
                return Ok(ok);
            }
            let eta = match eta {
                Some(e) => e,
                None => assouad_estimate(&ifs, &[2, 4, 6], 10)?.value,
            };
            let qualities: Vec<u32> = (2..=m).step_by(2).chain([m]).collect();
            let seq = weak_tangent_sequence(&ifs, &qualities, eta, &ZoomConfig::default())?;
            let ok = seq.entries.iter().all(|e| e.verify());
            let mut v = seq.to_json()?;
            v["verified"] = json!(ok);
            out.object(v);
            Ok(ok && !seq.truncated)
        }
        Command::ProductTangent { ifs, m, eta, beta, out: dir } => {
            let cfg = ProductConfig { eta, beta, ..ProductConfig::default() };
            let r = diag_product_tangent(&Ifs::read_file(ifs)?, m, &cfg)?;
            let ok = verify_product_bounds(&r);
            let (lo, hi) = box_dimensions(&CellSetPyramid::from_finest(&r.product))?;
            let saved = match dir {
                Some(d) => {
                    std::fs::create_dir_all(&d)?;
                    Some(r.save(&d, "product")?)
                }
                None => None,
            };
            out.object(json!({
                "m": r.m,
                "swapped": r.swapped,
                "eta": r.eta,
                "beta": r.beta,
                "k_m": r.k_m,
                "ell1": r.ell1,
                "ell2": r.ell2,
                "ell_m": r.ell_m,
                "j_m": r.j_m,
                "kappa": r.kappa,
                "scales": r.scales,
                "family_size": r.family_size,
                "bin_size": r.bin_size,
                "bin_count": r.bin_count,
                "projection_table": r.projection.table,
                "slice_table": r.slice.table,
                "product_table": r.product.covering_profile(),
                "box_lower": lo.value,
                "box_upper": hi.value,
                "verified": ok,
                "report": saved,
                "notes": r.notes,
            }));
            Ok(ok)
        }
        Command::Semigroup { ifs, depth } => {
            let ifs = Ifs::read_file(ifs)?;
            let report = domination_check(&ifs, depth)?;
            let mut v = serde_json::to_value(&report)?;
            for (key, which) in [("forward", Which::Forward), ("backward", Which::Backward)] {
                v[key] = match furstenberg_directions(&ifs, depth.min(12), which) {
                    Ok(set) => json!(set.directions.iter().map(|d| d.angle()).collect::<Vec<_>>()),
                    Err(e) => json!(e.to_string()),
                };
            }
            out.object(v);
            Ok(true)
        }
        Command::Verify { family, params, budget } => {
            let spec = family_spec(family, &params)?;
            make_family(&spec)?;
            let rows = verify_formula(&spec, budget)?;
            let ok = rows.iter().all(|r| r.pass);
            out.rows(&rows)?;
            Ok(ok)
        }
    }
}

fn estimates(out: &mut Output, est: &[DimensionEstimate], plot: Option<PathBuf>) -> Result<bool> {
    if let Some(p) = plot {
        plot::write_svg(&p, est)?;
    }
    out.estimates(est)?;
    Ok(true)
}

fn parse_range(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::InvalidArgument(format!("levels `{s}` must look like L1..L2"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if a >= b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

fn family_spec(family: FamilyArg, params: &[String]) -> Result<FamilySpec> {
    let mut spec = match family {
        FamilyArg::Bm => FamilySpec::bm_benchmark(),
        FamilyArg::Fj => FamilySpec::fj_benchmark(),
    };
    for p in params {
        let (key, value) = p
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("parameter `{p}` is not key=value")))?;
        let bad = || Error::InvalidArgument(format!("cannot read `{p}`"));
        let floats = |v: &str| v.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>();
        match (&mut spec, key) {
            (FamilySpec::BedfordMcmullen { n, .. }, "n") => *n = value.parse().map_err(|_| bad())?,
            (FamilySpec::BedfordMcmullen { m, .. }, "m") => *m = value.parse().map_err(|_| bad())?,
            (FamilySpec::BedfordMcmullen { digits, .. }, "digits") => {
                *digits = value
                    .split(',')
                    .map(|d| {
                        let (i, j) = d.split_once(':').ok_or_else(bad)?;
                        Ok((i.trim().parse().map_err(|_| bad())?, j.trim().parse().map_err(|_| bad())?))
                    })
                    .collect::<Result<_>>()?
            }
            (FamilySpec::FraserJordan { beta, .. }, "beta") => *beta = value.parse().map_err(|_| bad())?,
            (FamilySpec::FraserJordan { alpha, .. }, "alpha") => *alpha = value.parse().map_err(|_| bad())?,
            (FamilySpec::FraserJordan { b, .. }, "b") => *b = floats(value)?,
            (FamilySpec::FraserJordan { a, .. }, "a") => *a = floats(value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown parameter `{key}` for this family"))),
        }
    }
    Ok(spec)
}
