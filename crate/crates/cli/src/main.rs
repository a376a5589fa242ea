//! Command-line driver: scans and experiments over branched fields, point
//! measures and frequency oracles, emitting CSV artifacts plus a run
//! manifest. Internal parallelism respects RAYON_NUM_THREADS.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use qfreq::covering::{
    minkowski_content_estimate, minkowski_cover_driver, packing_verify,
    reifenberg_hypothesis_check, FrequencyOracle, InterpTable,
};
use qfreq::field::{builtin, builtin_names, AnalyticField};
use qfreq::frequency::{
    doubling_residual, frequency_i, identity_residuals, pinch_w, Grid,
};
use qfreq::meanflat::{beta_k, jones_integral, DiscreteMeasure};
use qfreq::quadrature::QuadratureScheme;
use qfreq::weight::WeightProfile;
use qfreq::Error;

#[derive(Parser)]
#[command(
    name = "qfreq",
    version,
    about = "Frequency, flatness and covering experiments for branched multivalued fields",
    after_help = "Thread count: set RAYON_NUM_THREADS. \
                  Ranges are written start:stop:step (endpoints included within half a step)."
)]
struct Cli {
    /// Output directory for the CSV artifact and manifest
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed recorded in the manifest and passed to seeded numerics
    #[arg(long, global = true, default_value_t = 7070)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frequency profile I(x, r) over a radius range
    Freqscan {
        #[command(flatten)]
        field: FieldArg,
        /// Scan center, comma-separated coordinates
        #[arg(long, value_delimiter = ',')]
        center: Vec<f64>,
        /// Radius range start:stop:step
        #[arg(long, value_parser = parse_range)]
        radii: RangeArg,
    },
    /// Residuals of the derivative/pairing/doubling identities over radii
    Identities {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long, value_delimiter = ',')]
        center: Vec<f64>,
        #[arg(long, value_parser = parse_range)]
        radii: RangeArg,
    },
    /// Frequency pinching W(x; s, r) over a rectangular grid of centers
    Pinchmap {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long, value_delimiter = ',')]
        lo: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        hi: Vec<f64>,
        /// Nodes per axis, comma-separated
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Inner pinching radius
        #[arg(long)]
        s: f64,
        /// Outer pinching radius
        #[arg(long)]
        r: f64,
    },
    /// Mean flatness of a point measure in one ball
    Beta {
        /// Measure file: rows `x... weight`, '#' comments
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, value_delimiter = ',')]
        x0: Vec<f64>,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        k: usize,
    },
    /// Dyadic flatness sum over scales at one point
    Jones {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, value_delimiter = ',')]
        x0: Vec<f64>,
        #[arg(long)]
        k: usize,
        /// Number of dyadic scales 2^-1 .. 2^-n
        #[arg(long, default_value_t = 8)]
        scales: usize,
    },
    /// Frequency-drop covering of a point set down to a target radius
    Cover {
        /// Synthetic oracle table: rows `y... r I`
        #[arg(long, conflicts_with = "field")]
        oracle: Option<PathBuf>,
        /// Field spec powering a quadrature-backed oracle
        #[arg(long)]
        field: Option<String>,
        /// Point set file: rows `x... weight` (weights ignored)
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        rho_target: f64,
    },
    /// Volume-bound hypothesis check for a weighted atom measure
    Reifcheck {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        k: usize,
        /// Flatness budget delta_0^2
        #[arg(long, default_value_t = 1e-4)]
        delta0_sq: f64,
    },
    /// Tubular-neighborhood volume of the detected zero set over a grid
    Minkowski {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long, value_delimiter = ',')]
        lo: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        hi: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Neighborhood radii, comma-separated
        #[arg(long, value_delimiter = ',')]
        rhos: Vec<f64>,
    },
}

#[derive(Args)]
struct FieldArg {
    /// Field spec: a JSON file path or a built-in name
    #[arg(long)]
    field: String,
}

#[derive(Clone, Debug)]
struct RangeArg {
    start: f64,
    stop: f64,
    step: f64,
}

impl RangeArg {
    fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let v = self.start + k as f64 * self.step;
            if v > self.stop + 0.5 * self.step {
                break;
            }
            out.push(v);
            k += 1;
        }
        out
    }
}

fn parse_range(s: &str) -> Result<RangeArg, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected start:stop:step".into());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if !(nums[2] > 0.0 && nums[1] >= nums[0]) {
        return Err("need stop >= start and step > 0".into());
    }
    Ok(RangeArg { start: nums[0], stop: nums[1], step: nums[2] })
}



fn load_field(spec: &str) -> Result<AnalyticField, Error> {
    if builtin_names().contains(&spec) {
        return Ok(builtin(spec).expect("known name"));
    }
    let text = fs::read_to_string(spec)
        .map_err(|e| Error::Parse(format!("cannot read field spec {spec}: {e}")))?;
    AnalyticField::from_json(&text)
}

fn load_measure(path: &Path) -> Result<DiscreteMeasure, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    DiscreteMeasure::parse(&text)
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => 2,
        Error::Input(_) => 3,
        _ => 4,
    }
}

fn write_manifest(out: &Path, seed: u64, status: u8, wall: f64, config: &str) {
    let manifest = serde_json::json!({
        "tool": "qfreq",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "seed": seed,
        "status": status,
        "wall_seconds": wall,
    });
    let _ = fs::create_dir_all(out);
    let _ = fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serialization"),
    );
}

fn write_csv(out: &Path, name: &str, header: &str, rows: &[String]) -> Result<(), Error> {
    fs::create_dir_all(out)
        .map_err(|e| Error::Input(format!("cannot create {}: {e}", out.display())))?;
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(out.join(name), text)
        .map_err(|e| Error::Input(format!("cannot write {name}: {e}")))
}

fn run(cli: &Cli) -> Result<(), Error> {
    let phi = WeightProfile::Default;
    let q = QuadratureScheme { seed: cli.seed, ..QuadratureScheme::default() };
    let out = &cli.out;
    match &cli.command {
        Command::Freqscan { field, center, radii } => {
            let f = load_field(&field.field)?;
            let rows: Vec<String> = radii
                .values()
                .iter()
                .map(|&r| {
                    let rep = frequency_i(&f, &phi, center, r, &q)?;
                    Ok(format!(
                        "{r:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.3e}",
                        rep.d, rep.h, rep.e, rep.i, rep.est_error
                    ))
                })
                .collect::<Result<_, Error>>()?;
            write_csv(out, "freqscan.csv", "r,D,H,E,I,est_error", &rows)
        }
        Command::Identities { field, center, radii } => {
            let f = load_field(&field.field)?;
            let rows: Vec<String> = radii
                .values()
                .iter()
                .map(|&r| {
                    let res = identity_residuals(&f, &phi, center, r, &q)?;
                    let dbl = doubling_residual(&f, &phi, center, r / 2.0, r, &q)?;
                    Ok(format!(
                        "{r:.12e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
                        res.pairing, res.dirichlet_radial, res.height_radial,
                        res.cauchy_schwarz, dbl
                    ))
                })
                .collect::<Result<_, Error>>()?;
            write_csv(
                out,
                "identities.csv",
                "r,pairing,dirichlet_radial,height_radial,cauchy_schwarz,doubling",
                &rows,
            )
        }
        Command::Pinchmap { field, lo, hi, n, s, r } => {
            let f = load_field(&field.field)?;
            let g = Grid::new(lo.clone(), hi.clone(), n.clone())?;
            let rows: Vec<String> = g
                .points()
                .iter()
                .map(|x| {
                    let w = pinch_w(&f, &phi, x, *s, *r, &q)?;
                    let coords: Vec<String> = x.iter().map(|c| format!("{c:.12e}")).collect();
                    Ok(format!("{},{w:.12e}", coords.join(",")))
                })
                .collect::<Result<_, Error>>()?;
            let header: Vec<String> = (0..lo.len()).map(|i| format!("x{i}")).collect();
            write_csv(out, "pinchmap.csv", &format!("{},W", header.join(",")), &rows)
        }
        Command::Beta { measure, x0, r, k } => {
            let mu = load_measure(measure)?;
            let b = beta_k(&mu, x0, *r, *k)?;
            let rows = vec![format!("{r:.12e},{k},{:.12e}", b.value)];
            write_csv(out, "beta.csv", "r,k,beta", &rows)
        }
        Command::Jones { measure, x0, k, scales } => {
            let mu = load_measure(measure)?;
            let svals: Vec<f64> = (1..=*scales).map(|j| 0.5f64.powi(j as i32)).collect();
            let mut rows = Vec::new();
            for &s in &svals {
                let inc = beta_k(&mu, x0, s, *k)?.value * std::f64::consts::LN_2;
                rows.push(format!("{s:.12e},{inc:.12e}"));
            }
            let total = jones_integral(&mu, x0, *k, &svals)?;
            rows.push(format!("total,{total:.12e}"));
            write_csv(out, "jones.csv", "scale,increment", &rows)
        }
        Command::Cover { oracle, field, points, rho_target } => {
            let mu = load_measure(points)?;
            let pts: Vec<Vec<f64>> = mu.points().to_vec();
            let orc = match (oracle, field) {
                (Some(path), _) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
                    FrequencyOracle::synthetic(InterpTable::parse(&text)?)
                }
                (None, Some(spec)) => {
                    FrequencyOracle::field_backed(load_field(spec)?, phi.clone(), q.clone())
                }
                (None, None) => {
                    return Err(Error::Input("cover needs --oracle or --field".into()))
                }
            };
            let res = minkowski_cover_driver(&pts, &orc, *rho_target)?;
            let audit = packing_verify(&res);
            fs::create_dir_all(out)
                .map_err(|e| Error::Input(format!("cannot create {}: {e}", out.display())))?;
            fs::write(out.join("cover.txt"), res.to_text())
                .map_err(|e| Error::Input(format!("cannot write cover.txt: {e}")))?;
            let rows = vec![format!(
                "{:.12e},{:.12e},{},{}",
                res.packing_sum,
                audit.normalized,
                res.rounds,
                if audit.covered { "pass" } else { "fail" }
            )];
            write_csv(out, "cover.csv", "packing_sum,normalized,rounds,audit", &rows)
        }
        Command::Reifcheck { measure, k, delta0_sq } => {
            let mu = load_measure(measure)?;
            let rep = reifenberg_hypothesis_check(&mu, *k, *delta0_sq)?;
            let rows = vec![format!(
                "{:.12e},{:.12e},{}",
                rep.max_ratio,
                rep.threshold,
                if rep.passes { "pass" } else { "fail" }
            )];
            write_csv(out, "reifcheck.csv", "max_ratio,threshold,verdict", &rows)
        }
        Command::Minkowski { field, lo, hi, n, rhos } => {
            let f = load_field(&field.field)?;
            let g = Grid::new(lo.clone(), hi.clone(), n.clone())?;
            let rep = minkowski_content_estimate(&f, &g, rhos)?;
            let mut rows: Vec<String> = rep
                .volumes
                .iter()
                .map(|(rho, v)| format!("{rho:.12e},{v:.12e}"))
                .collect();
            rows.push(format!("slope,{:.6e}", rep.slope));
            write_csv(out, "minkowski.csv", "rho,volume", &rows)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let start = Instant::now();
    let status = match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    write_manifest(&cli.out, cli.seed, status, start.elapsed().as_secs_f64(), &config);
    ExitCode::from(status)
}
