use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use polycontact::geometry::{Ellipsoid, PerturbedSphere, Sphere};
use polycontact::nilpotent::darboux_basis;
use polycontact::polycontact::recheck;
use polycontact::prelude::{
    build_htype, cayley_horizontality_residual, certify_polycontact, fatness_check, hypersurface_bracket,
    is_htype_with_metric, min_rep_dim, normalize_dim7, project_radially, radical, DefiningFunction,
    PolycontactCertificate, SpherePoint, TolConfig, TwoStepAlgebra, Verdict,
};
use polycontact::symbol::szego_idempotency;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

mod exit;

use exit::{Failure, Outcome};

/// Seed used by randomized subcommands when `--seed` is omitted.
pub const DEFAULT_SEED: u64 = 20_240_607;
/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "POLYCONTACT_WORKERS";

#[derive(Parser)]
#[command(name = "polycontact", version, about = "Two-step nilpotent groups and polycontact certificates")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Sphere,
    Ellipsoid,
    Perturbed,
}

#[derive(Subcommand)]
enum Command {
    /// Real dimension of the irreducible Cl(R^p) module.
    Mindim { p: usize },
    /// Bracket of the H-type group C(p, n).
    BuildHtype {
        p: usize,
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify or refute the polycontact condition.
    Certify {
        bracket: PathBuf,
        #[arg(long)]
        budget: Option<u64>,
        /// Re-validate an existing certificate against the bracket instead.
        #[arg(long, value_name = "CERT")]
        recheck: Option<PathBuf>,
    },
    /// Test whether the bracket is H-type for its metric.
    HtypeTest { bracket: PathBuf },
    /// Radical and Darboux basis of A(θ).
    Radical {
        bracket: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        theta: Vec<f64>,
    },
    /// Normalize a 4-dimensional 3-polycontact bracket to C(3,1).
    Normalize7 { bracket: PathBuf },
    /// Idempotency of the Szegő symbol on a lattice.
    SzegoVerify {
        /// Layer dimension, 2 or 4.
        #[arg(long, default_value_t = 2)]
        q: usize,
        #[arg(long)]
        extent: Option<f64>,
        #[arg(long)]
        spacing: Option<f64>,
    },
    /// Horizontality of the quaternionic Cayley map at random sphere points.
    CayleyVerify {
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Tangent-group bracket of a hypersurface in H^{m+1}.
    Hypersurface {
        #[arg(long, value_enum)]
        shape: Shape,
        /// Ellipsoid coefficients, one per quaternion slot.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambdas: Vec<f64>,
        /// Direction from the origin; projected radially onto the surface.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Quartic perturbation strength.
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
    },
    /// Fatness of a connection from its curvature forms.
    Fatness { curvature: PathBuf },
}

#[derive(Serialize)]
struct CommandReport {
    command: String,
    inputs_digest: String,
    result: Value,
    runtime_ms: u128,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::MALFORMED } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_workers() {
        eprintln!("error: {e:#}");
        return ExitCode::from(exit::MALFORMED);
    }
    let start = Instant::now();
    match dispatch(&cli.command) {
        Ok(out) => {
            let report = CommandReport {
                command: out.command.to_string(),
                inputs_digest: digest(&out.inputs),
                result: out.result,
                runtime_ms: start.elapsed().as_millis(),
            };
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report).expect("serializable report")),
                Format::Text => println!("{}", out.text),
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn configure_workers() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().with_context(|| format!("{WORKERS_ENV}={raw:?} is not a count"))?;
    if n == 0 {
        return Err(anyhow!("{WORKERS_ENV} must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn digest(inputs: &Value) -> String {
    hex::encode(Sha256::digest(inputs.to_string().as_bytes()))
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::malformed)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::malformed)
}

fn load_algebra(path: &Path) -> Result<(Value, TwoStepAlgebra), Failure> {
    let value = read_json(path)?;
    let alg = TwoStepAlgebra::from_json(&value).map_err(Failure::from)?;
    Ok((value, alg))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Certified => exit::OK,
        Verdict::Refuted => exit::FAILED,
        Verdict::Undetermined => exit::UNDETERMINED,
    }
}

fn certificate_text(c: &PolycontactCertificate) -> String {
    let mut s = format!("{:?} via {:?} ({} cells)", c.verdict, c.method, c.cells_used);
    if let Some(w) = &c.witness {
        s += &format!(", witness {w:?}");
    }
    if let Some(b) = c.lower_bound {
        s += &format!(", lower bound {b:.6e}");
    }
    s
}

fn dispatch(command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Mindim { p } => {
            let m = min_rep_dim(*p)?;
            Ok(Outcome::new("mindim", json!({ "p": p }), json!({ "p": p, "m": m }), m.to_string(), exit::OK))
        }
        Command::BuildHtype { p, n, out } => {
            let alg = build_htype(*p, *n)?;
            let value = alg.to_json();
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&value).expect("serializable"))
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(Failure::failed)?;
            }
            let text = format!("C({p},{n}): q = {}, p = {}", alg.q(), alg.p());
            Ok(Outcome::new("build-htype", json!({ "p": p, "n": n }), value, text, exit::OK))
        }
        Command::Certify { bracket, budget, recheck: cert_path } => {
            let (input, alg) = load_algebra(bracket)?;
            let tol = TolConfig {
                budget: budget.unwrap_or(TolConfig::default().budget),
                ..TolConfig::default()
            };
            let mut inputs = json!({ "bracket": input, "budget": tol.budget });
            if let Some(path) = cert_path {
                let raw = read_json(path)?;
                let cert: PolycontactCertificate = serde_json::from_value(raw.clone())
                    .context("parsing certificate")
                    .map_err(Failure::malformed)?;
                inputs["certificate"] = raw;
                let valid = recheck(&alg, &cert, &tol)?;
                let code = if valid { exit::OK } else { exit::FAILED };
                let text = format!("{}: {}", if valid { "valid" } else { "invalid" }, certificate_text(&cert));
                let result = json!({ "valid": valid, "certificate": cert });
                return Ok(Outcome::new("certify", inputs, result, text, code));
            }
            let cert = certify_polycontact(&alg, &tol)?;
            let text = certificate_text(&cert);
            let code = verdict_code(cert.verdict);
            Ok(Outcome::new("certify", inputs, serde_json::to_value(&cert).expect("serializable"), text, code))
        }
        Command::HtypeTest { bracket } => {
            let (input, alg) = load_algebra(bracket)?;
            let report = is_htype_with_metric(&alg)?;
            let result = json!({ "is_htype": report.is_htype, "gram": rows(&report.gram) });
            let code = if report.is_htype { exit::OK } else { exit::FAILED };
            let text = if report.is_htype { "H-type" } else { "not H-type" }.to_string();
            Ok(Outcome::new("htype-test", json!({ "bracket": input }), result, text, code))
        }
        Command::Radical { bracket, theta } => {
            let (input, alg) = load_algebra(bracket)?;
            let form = alg.levi_contraction(theta)?;
            let w = radical(&form, polycontact::nilpotent::DEFAULT_RANK_THRESHOLD);
            let d = darboux_basis(&form, polycontact::nilpotent::DEFAULT_RANK_THRESHOLD);
            let basis: Vec<Vec<f64>> = (0..w.ncols()).map(|c| w.column(c).iter().copied().collect()).collect();
            let result = json!({
                "dim": w.ncols(),
                "rank": d.rank(),
                "radical": basis,
                "darboux": rows(&d.transform),
            });
            let text = format!("dim ker = {}, rank = {}", w.ncols(), d.rank());
            Ok(Outcome::new("radical", json!({ "bracket": input, "theta": theta }), result, text, exit::OK))
        }
        Command::Normalize7 { bracket } => {
            let (input, alg) = load_algebra(bracket)?;
            let n = normalize_dim7(&alg)?;
            let g = DMatrix::from_fn(4, 4, |r, c| n.g[(r, c)]);
            let center = DMatrix::from_fn(3, 3, |r, c| n.center[(r, c)]);
            let ok = n.residual <= 1e-8;
            let result = json!({
                "g": rows(&g),
                "center": rows(&center),
                "residual": n.residual,
                "target": n.target.to_json(),
            });
            let text = format!("residual {:.3e}", n.residual);
            let code = if ok { exit::OK } else { exit::FAILED };
            Ok(Outcome::new("normalize7", json!({ "bracket": input }), result, text, code))
        }
        Command::SzegoVerify { q, extent, spacing } => {
            let (alg, theta, r, h, bound) = match q {
                2 => (build_htype(1, 1)?, vec![1.0], 8.0, 0.125, 1e-5),
                4 => (build_htype(3, 1)?, vec![1.0 / 3.0, 2.0 / 3.0, -2.0 / 3.0], 6.0, 0.375, 1e-3),
                _ => return Err(Failure::malformed(anyhow!("--q must be 2 or 4"))),
            };
            let r = extent.unwrap_or(r);
            let h = spacing.unwrap_or(h);
            let start = Instant::now();
            let report = szego_idempotency(&alg, &theta, r, h)?;
            let mut result = serde_json::to_value(&report).expect("serializable");
            result["runtime_ms"] = json!(start.elapsed().as_millis());
            result["bound"] = json!(bound);
            let ok = report.sup_error <= bound;
            let text = format!("q={q} R={r} h={h}: sup error {:.3e} (bound {bound:.0e})", report.sup_error);
            let code = if ok { exit::OK } else { exit::FAILED };
            Ok(Outcome::new("szego-verify", json!({ "q": q, "extent": r, "spacing": h }), result, text, code))
        }
        Command::CayleyVerify { m, samples, seed } => {
            if *m == 0 || *samples == 0 {
                return Err(Failure::malformed(anyhow!("--m and --samples must be positive")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut worst = 0.0f64;
            for _ in 0..*samples {
                let coords: Vec<f64> = (0..4 * m + 4).map(|_| StandardNormal.sample(&mut rng)).collect();
                let a = SpherePoint::normalized(coords)?;
                worst = worst.max(cayley_horizontality_residual(&a)?);
            }
            let ok = worst <= 1e-6;
            let result = json!({ "max_residual": worst, "samples": samples, "seed": seed });
            let text = format!("max residual {worst:.3e} over {samples} points");
            let code = if ok { exit::OK } else { exit::FAILED };
            Ok(Outcome::new("cayley-verify", json!({ "m": m, "samples": samples, "seed": seed }), result, text, code))
        }
        Command::Hypersurface { shape, lambdas, point, m, epsilon } => {
            let dim = if point.is_empty() { 4 * m + 4 } else { point.len() };
            let direction = if point.is_empty() {
                let mut d = vec![0.0; dim];
                d[dim - 4] = 1.0;
                d
            } else {
                point.clone()
            };
            let rho: Box<dyn DefiningFunction> = match shape {
                Shape::Sphere => Box::new(Sphere { m: dim / 4 - 1 }),
                Shape::Ellipsoid => {
                    if lambdas.len() * 4 != dim {
                        return Err(Failure::malformed(anyhow!(
                            "--lambdas needs {} values for a point of length {dim}",
                            dim / 4
                        )));
                    }
                    Box::new(Ellipsoid { lambdas: lambdas.clone() })
                }
                Shape::Perturbed => Box::new(PerturbedSphere {
                    epsilon: *epsilon,
                    weights: if lambdas.is_empty() {
                        (0..dim).map(|i| 1.0 + (i % 3) as f64 * 0.5).collect()
                    } else if lambdas.len() == dim {
                        lambdas.clone()
                    } else {
                        return Err(Failure::malformed(anyhow!("perturbation weights need {dim} values")));
                    },
                }),
            };
            let x = project_radially(rho.as_ref(), &direction)?;
            let alg = hypersurface_bracket(rho.as_ref(), &x)?;
            let cert = certify_polycontact(&alg, &TolConfig::default())?;
            let htype = is_htype_with_metric(&alg)?.is_htype;
            let text = format!("{}; H-type: {htype}", certificate_text(&cert));
            let code = verdict_code(cert.verdict);
            let result = json!({
                "point": x,
                "algebra": alg.to_json(),
                "certificate": cert,
                "is_htype": htype,
            });
            let shape_name = match shape {
                Shape::Sphere => "sphere",
                Shape::Ellipsoid => "ellipsoid",
                Shape::Perturbed => "perturbed",
            };
            let inputs = json!({ "shape": shape_name, "lambdas": lambdas, "point": direction, "epsilon": epsilon });
            Ok(Outcome::new("hypersurface", inputs, result, text, code))
        }
        Command::Fatness { curvature } => {
            let value = read_json(curvature)?;
            let forms = curvature_forms(&value)?;
            let cert = fatness_check(&forms, &TolConfig::default())?;
            let fat = cert.verdict == Verdict::Certified;
            let text = format!("{}: {}", if fat { "fat" } else { "not fat" }, certificate_text(&cert));
            let code = verdict_code(cert.verdict);
            let mut result = serde_json::to_value(&cert).expect("serializable");
            result["fat"] = json!(fat);
            Ok(Outcome::new("fatness", json!({ "curvature": value }), result, text, code))
        }
    }
}

/// Accepts the bracket schema or a bare list of square matrices.
fn curvature_forms(value: &Value) -> Result<Vec<DMatrix<f64>>, Failure> {
    if value.get("B").is_some() {
        return Ok(TwoStepAlgebra::from_json(value)?.brackets().to_vec());
    }
    let list: Vec<Vec<Vec<f64>>> = serde_json::from_value(value.clone())
        .context("curvature must be a bracket file or a list of matrices")
        .map_err(Failure::malformed)?;
    list.iter()
        .map(|m| {
            let n = m.len();
            if m.iter().any(|r| r.len() != n) {
                return Err(Failure::malformed(anyhow!("curvature matrices must be square")));
            }
            Ok(DMatrix::from_fn(n, n, |r, c| m[r][c]))
        })
        .collect()
}
