//! Command dispatch for the `heisvis` binary.
//!
//! Exit codes: 0 success, 1 input errors (bad flags, unreadable files,
//! spec/schema violations, invalid arguments), 2 numeric failures inside a
//! computation. Reports go to standard output as deterministic JSON; repeat
//! invocations with identical inputs produce identical bytes unless
//! `--timings` is set.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::classify::{
    almost_similarity_fit, build_isometry, classify, default_probe_radii, distortion_probe,
    eta1_samples, eta_envelope, qi_invariants, quasisimilarity_fit, verify_isometry,
    DistortionProbe, EtaEnvelope, PointMap, QIInvariants, RATIO_RTOL,
};
use crate::coset::{hausdorff_profile, point_to_coset_dist, subgroup_defect, CosetSpec, SubgroupKind};
use crate::derivation::{verify_structure, GradedStructure};
use crate::error::HeisError;
use crate::heis::LieElement;
use crate::metric::{chain_dist, norm_0, regularity_estimate, NetConfig, Quasimetric};
use crate::report::{
    parse_spec, real_or_null, real_value, reals_value, render_error, render_report, rows_value,
    spec_to_value, ParsedSpec, SpecError,
};

#[derive(Parser)]
#[command(
    name = "heisvis",
    version,
    about = "Derivation-induced visual quasimetrics on Heisenberg group boundaries",
    disable_help_subcommand = true
)]
struct Cli {
    /// Include wall-clock time in the report (makes output non-reproducible)
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a derivation spec and report its graded structure
    Validate {
        spec: PathBuf,
        /// Leibniz / structural tolerance
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Decide quasiisometric equivalence of two structures
    Classify {
        a: PathBuf,
        b: PathBuf,
        /// Relative tolerance on exponent ratios
        #[arg(long, default_value_t = RATIO_RTOL)]
        tol: f64,
    },
    /// Build the boundary isometry between equivalent structures and verify it
    Isometry {
        a: PathBuf,
        b: PathBuf,
        /// Random point pairs for the numeric verification
        #[arg(long, default_value_t = 10_000)]
        pairs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Quasimetric distance between two boundary points
    Dist {
        spec: PathBuf,
        /// Point as comma-separated coordinates, e.g. 1,0,0
        p: String,
        q: String,
        /// Metric scale parameter s
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Chain-metric approximation through a sampled net
    Chain {
        spec: PathBuf,
        p: String,
        q: String,
        /// Net points sampled in the box
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Metric scale; default 1/alpha_1 (smallest effective exponent 1)
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Monte Carlo estimate of the Ahlfors regularity exponent
    Regularity {
        spec: PathBuf,
        /// Samples per radius
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0, 2.0, 4.0])]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Geometry of U_1-cosets: closed form, numeric minimization, Hausdorff profile
    Cosets {
        spec: PathBuf,
        /// Basepoint of the first coset g1 * U_1
        g1: String,
        /// Basepoint of the second coset g2 * U_1
        g2: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0])]
        radii: Vec<f64>,
    },
    /// Distortion and quasisymmetry sampling for a boundary map
    Distort {
        a: PathBuf,
        /// Second structure: probes the boundary isometry a -> b; without it,
        /// probes the time-ln(2) derivation flow on a
        b: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Samples per radius (and pairs/triples for the fits)
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A failed command: exit code plus the rendered error report.
struct Failure {
    code: i32,
    report: String,
}

impl Failure {
    fn input(kind: &str, field: Option<&str>, message: &str) -> Failure {
        Failure { code: 1, report: render_error(kind, field, message) }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Failure {
        Failure::input(e.kind(), e.field(), &e.to_string())
    }
}

/// Errors raised while interpreting user input map to exit 1; errors inside
/// converged computations map to exit 2.
fn failure_from_heis(e: HeisError, stage_is_input: bool) -> Failure {
    let code = if stage_is_input {
        1
    } else {
        match e {
            HeisError::DimensionMismatch(_)
            | HeisError::NonFinite(_)
            | HeisError::InvalidArgument(_)
            | HeisError::NotInSubgroup(_)
            | HeisError::OutOfBox(_)
            | HeisError::HypothesisViolated(_) => 1,
            _ => 2,
        }
    };
    Failure {
        code,
        report: render_error(if code == 1 { "InputError" } else { "NumericError" }, None, &e.to_string()),
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    1
                }
            };
        }
    };
    let started = Instant::now();
    match dispatch(&cli.cmd) {
        Ok((command, inputs, params, results)) => {
            let wall = cli
                .timings
                .then(|| started.elapsed().as_secs_f64() * 1e3);
            let _ = write!(out, "{}", render_report(command, inputs, params, results, wall));
            0
        }
        Err(f) => {
            let _ = write!(out, "{}", f.report);
            f.code
        }
    }
}

/// Entry point for the binary: process args, locked stdio.
pub fn run_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

type CommandOutput = (&'static str, Value, Value, Value);

fn dispatch(cmd: &Cmd) -> Result<CommandOutput, Failure> {
    match cmd {
        Cmd::Validate { spec, tol } => cmd_validate(spec, *tol),
        Cmd::Classify { a, b, tol } => cmd_classify(a, b, *tol),
        Cmd::Isometry { a, b, pairs, seed } => cmd_isometry(a, b, *pairs, *seed),
        Cmd::Dist { spec, p, q, scale } => cmd_dist(spec, p, q, *scale),
        Cmd::Chain { spec, p, q, samples, seed, scale } => {
            cmd_chain(spec, p, q, *samples, *seed, *scale)
        }
        Cmd::Regularity { spec, samples, radii, seed, scale } => {
            cmd_regularity(spec, *samples, radii, *seed, *scale)
        }
        Cmd::Cosets { spec, g1, g2, radii } => cmd_cosets(spec, g1, g2, radii),
        Cmd::Distort { a, b, radii, samples, seed } => {
            cmd_distort(a, b.as_deref(), radii.as_deref(), *samples, *seed)
        }
    }
}

fn load_spec(path: &Path) -> Result<ParsedSpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::input("IoError", None, &format!("cannot read {}: {e}", path.display()))
    })?;
    Ok(parse_spec(&text)?)
}

fn decompose_input(parsed: &ParsedSpec, tol: f64) -> Result<GradedStructure, Failure> {
    parsed.spec.decompose(tol).map_err(|e| failure_from_heis(e, true))
}

fn spec_input_value(path: &Path, parsed: &ParsedSpec) -> Value {
    json!({
        "path": path.display().to_string(),
        "spec": spec_to_value(&parsed.spec, parsed.label.as_deref()),
    })
}

fn parse_point(raw: &str, n: usize, field: &str) -> Result<LieElement, Failure> {
    let coords: Result<Vec<f64>, _> =
        raw.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let coords = coords.map_err(|e| {
        Failure::input("SchemaError", Some(field), &format!("bad coordinate: {e}"))
    })?;
    if coords.len() != 2 * n + 1 {
        return Err(Failure::input(
            "DimensionError",
            Some(field),
            &format!("need {} coordinates, got {}", 2 * n + 1, coords.len()),
        ));
    }
    LieElement::new(n, coords).map_err(|e| failure_from_heis(e, true))
}

fn invariants_value(inv: &QIInvariants) -> Value {
    json!({
        "k": inv.k,
        "dims": inv.dims,
        "ratios": reals_value(&inv.ratios),
    })
}

fn structure_value(gs: &GradedStructure) -> Value {
    json!({
        "k": gs.k(),
        "eigenvalues": reals_value(gs.eigenvalues()),
        "dims": gs.dims(),
    })
}

fn cmd_validate(path: &Path, tol: f64) -> Result<CommandOutput, Failure> {
    let parsed = load_spec(path)?;
    let inputs = spec_input_value(path, &parsed);
    let params = json!({ "tol": real_value(tol) });
    let (is_derivation, defect) =
        parsed.spec.validate(tol).map_err(|e| failure_from_heis(e, true))?;
    let results = match parsed.spec.decompose(tol) {
        Ok(gs) => {
            let report = verify_structure(&gs, tol);
            let checks: Vec<Value> = report
                .checks
                .iter()
                .map(|c| json!({ "name": c.name, "pass": c.pass, "defect": real_value(c.defect) }))
                .collect();
            json!({
                "valid": report.pass(),
                "is_derivation": is_derivation,
                "leibniz_defect": real_value(defect),
                "structure": structure_value(&gs),
                "invariants": invariants_value(&qi_invariants(&gs)),
                "checks": checks,
                "max_check_defect": real_value(report.max_defect()),
            })
        }
        // invalid inputs are a verdict for this command, not a failure
        Err(e) => json!({
            "valid": false,
            "is_derivation": is_derivation,
            "leibniz_defect": real_value(defect),
            "rejection": e.to_string(),
        }),
    };
    Ok(("validate", inputs, params, results))
}

fn cmd_classify(a: &Path, b: &Path, tol: f64) -> Result<CommandOutput, Failure> {
    let pa = load_spec(a)?;
    let pb = load_spec(b)?;
    let ga = decompose_input(&pa, 1e-9)?;
    let gb = decompose_input(&pb, 1e-9)?;
    let c = classify(&ga, &gb, tol);
    let results = json!({
        "equivalent": c.equivalent,
        "lambda": c.lambda.map(real_value).unwrap_or(Value::Null),
        "invariants_a": invariants_value(&qi_invariants(&ga)),
        "invariants_b": invariants_value(&qi_invariants(&gb)),
    });
    let inputs = json!({ "a": spec_input_value(a, &pa), "b": spec_input_value(b, &pb) });
    Ok(("classify", inputs, json!({ "tol": real_value(tol) }), results))
}

fn cmd_isometry(a: &Path, b: &Path, pairs: u64, seed: u64) -> Result<CommandOutput, Failure> {
    let pa = load_spec(a)?;
    let pb = load_spec(b)?;
    let ga = decompose_input(&pa, 1e-9)?;
    let gb = decompose_input(&pb, 1e-9)?;
    let inputs = json!({ "a": spec_input_value(a, &pa), "b": spec_input_value(b, &pb) });
    let params = json!({ "pairs": pairs, "seed": seed });
    let results = match build_isometry(&ga, &gb) {
        Err(HeisError::NotEquivalent(detail)) => {
            json!({ "equivalent": false, "detail": detail })
        }
        Err(e) => return Err(failure_from_heis(e, false)),
        Ok(f) => {
            let check = verify_isometry(&f, pairs, seed).map_err(|e| failure_from_heis(e, false))?;
            json!({
                "equivalent": true,
                "lambda": real_value(f.lambda()),
                "matrix": rows_value(&f.matrix().to_rows()),
                "bracket_defect": real_value(f.bracket_defect()),
                "max_rel_error": real_value(check.max_rel_error),
                "snowflake_ratio_min": real_value(check.ratio_min),
                "snowflake_ratio_max": real_value(check.ratio_max),
                "snowflake_ratio_bound": real_value(check.ratio_bound),
            })
        }
    };
    Ok(("isometry", inputs, params, results))
}

fn cmd_dist(path: &Path, p: &str, q: &str, scale: f64) -> Result<CommandOutput, Failure> {
    let parsed = load_spec(path)?;
    let gs = decompose_input(&parsed, 1e-9)?;
    let pe = parse_point(p, gs.n(), "p")?;
    let qe = parse_point(q, gs.n(), "q")?;
    let qp = Quasimetric::new(&gs, scale).map_err(|e| failure_from_heis(e, true))?;
    let d = qp.dist(&pe, &qe).map_err(|e| failure_from_heis(e, false))?;
    let results = json!({
        "dist": real_value(d),
        "norm_p": real_value(qp.norm(&pe).map_err(|e| failure_from_heis(e, false))?),
        "norm_q": real_value(qp.norm(&qe).map_err(|e| failure_from_heis(e, false))?),
        "norm0_left_difference": real_value(
            norm_0(&gs, &pe.left_difference(&qe).map_err(|e| failure_from_heis(e, false))?)
                .map_err(|e| failure_from_heis(e, false))?
        ),
    });
    let inputs = json!({
        "spec": spec_input_value(path, &parsed),
        "p": reals_value(pe.coords()),
        "q": reals_value(qe.coords()),
    });
    Ok(("dist", inputs, json!({ "scale": real_value(scale) }), results))
}

fn cmd_chain(
    path: &Path,
    p: &str,
    q: &str,
    samples: usize,
    seed: u64,
    scale: Option<f64>,
) -> Result<CommandOutput, Failure> {
    let parsed = load_spec(path)?;
    let gs = decompose_input(&parsed, 1e-9)?;
    let pe = parse_point(p, gs.n(), "p")?;
    let qe = parse_point(q, gs.n(), "q")?;
    let qp = match scale {
        Some(s) => Quasimetric::new(&gs, s).map_err(|e| failure_from_heis(e, true))?,
        None => Quasimetric::normalized(&gs),
    };
    let cfg = NetConfig::new(samples, seed);
    let chained = chain_dist(&qp, &pe, &qe, &cfg).map_err(|e| failure_from_heis(e, true))?;
    let direct = qp.dist(&pe, &qe).map_err(|e| failure_from_heis(e, false))?;
    let results = json!({
        "chain_dist": real_value(chained),
        "dist": real_value(direct),
        "ratio": real_value(if direct > 0.0 { chained / direct } else { 1.0 }),
    });
    let inputs = json!({
        "spec": spec_input_value(path, &parsed),
        "p": reals_value(pe.coords()),
        "q": reals_value(qe.coords()),
    });
    let params = json!({
        "samples": samples,
        "seed": seed,
        "scale": real_value(qp.scale()),
        "box_radius": real_value(cfg.box_radius),
        "neighbor_count": cfg.neighbor_count,
    });
    Ok(("chain", inputs, params, results))
}

fn cmd_regularity(
    path: &Path,
    samples: u64,
    radii: &[f64],
    seed: u64,
    scale: f64,
) -> Result<CommandOutput, Failure> {
    let parsed = load_spec(path)?;
    let gs = decompose_input(&parsed, 1e-9)?;
    let qp = Quasimetric::new(&gs, scale).map_err(|e| failure_from_heis(e, true))?;
    let rep = regularity_estimate(&qp, radii, samples, seed)
        .map_err(|e| failure_from_heis(e, true))?;
    let results = json!({
        "q_hat": real_value(rep.q_hat),
        "q_target": real_value(rep.q_target),
        "relative_error": real_value(rep.relative_error),
        "radii": reals_value(&rep.radii),
        "volumes": reals_value(&rep.volumes),
    });
    let inputs = json!({ "spec": spec_input_value(path, &parsed) });
    let params = json!({
        "samples": samples,
        "seed": seed,
        "scale": real_value(scale),
        "radii": reals_value(radii),
    });
    Ok(("regularity", inputs, params, results))
}

fn cmd_cosets(path: &Path, g1: &str, g2: &str, radii: &[f64]) -> Result<CommandOutput, Failure> {
    let parsed = load_spec(path)?;
    let gs = decompose_input(&parsed, 1e-9)?;
    let e1 = parse_point(g1, gs.n(), "g1")?;
    let e2 = parse_point(g2, gs.n(), "g2")?;
    let l1 = CosetSpec::new(&gs, SubgroupKind::U1, e1.clone())
        .map_err(|e| failure_from_heis(e, true))?;
    let l2 = CosetSpec::new(&gs, SubgroupKind::U1, e2.clone())
        .map_err(|e| failure_from_heis(e, true))?;
    let profile =
        hausdorff_profile(&gs, &l1, &l2, radii).map_err(|e| failure_from_heis(e, true))?;
    let qp = Quasimetric::unit(&gs);
    let numeric = point_to_coset_dist(&qp, &e1, &l2).map_err(|e| failure_from_heis(e, false))?;
    // the closed form for d(g, g'U_1) needs both basepoints in K
    let in_k = |x: &LieElement| -> Result<bool, Failure> {
        Ok(subgroup_defect(&gs, SubgroupKind::K, x)
            .map_err(|e| failure_from_heis(e, false))?
            <= 1e-9)
    };
    let closed_form = if in_k(&e1)? && in_k(&e2)? {
        let d = crate::coset::coset_dist_u1(&gs, &e1, &e2)
            .map_err(|e| failure_from_heis(e, false))?;
        real_value(d)
    } else {
        Value::Null
    };
    let results = json!({
        "hausdorff": {
            "radii": reals_value(&profile.radii),
            "sup_inf": reals_value(&profile.sup_inf),
            "algebraic_finite": profile.algebraic_finite,
            "numeric_finite": profile.numeric_finite,
            "verdicts_agree": profile.verdicts_agree(),
        },
        "point_to_coset_dist": real_value(numeric),
        "coset_dist_u1": closed_form,
    });
    let inputs = json!({
        "spec": spec_input_value(path, &parsed),
        "g1": reals_value(e1.coords()),
        "g2": reals_value(e2.coords()),
    });
    Ok(("cosets", inputs, json!({ "radii": reals_value(radii) }), results))
}

fn probe_value(p: &DistortionProbe) -> Value {
    let band = |v: &[f64]| Value::Array(v.iter().map(|&x| real_or_null(x)).collect());
    json!({
        "radii": reals_value(&p.radii),
        "upper": band(&p.upper),
        "lower": band(&p.lower),
        "limit_upper": real_or_null(p.limit_upper),
        "limit_lower": real_or_null(p.limit_lower),
        "reciprocal_defect": p.reciprocal_defect.map(real_value).unwrap_or(Value::Null),
    })
}

fn envelope_value(e: &EtaEnvelope) -> Value {
    let samples: Vec<Value> =
        e.samples.iter().map(|&(t, rho)| json!([real_value(t), real_value(rho)])).collect();
    json!({
        "samples": samples,
        "skipped_degenerate": e.skipped_degenerate,
        "triples": e.triples,
    })
}

fn cmd_distort(
    a: &Path,
    b: Option<&Path>,
    radii: Option<&[f64]>,
    samples: u64,
    seed: u64,
) -> Result<CommandOutput, Failure> {
    let pa = load_spec(a)?;
    let ga = decompose_input(&pa, 1e-9)?;
    let radii = radii.map(<[f64]>::to_vec).unwrap_or_else(default_probe_radii);
    let basepoint = LieElement::zero(ga.n());
    let src = Quasimetric::unit(&ga);

    // (map, inverse, destination metric, map description, extra inputs)
    let (map, inverse, dst, map_name, inputs): (
        Box<PointMap>,
        Box<PointMap>,
        Quasimetric,
        &str,
        Value,
    ) = match b {
        None => {
            let t = std::f64::consts::LN_2;
            let fwd = ga.clone();
            let bwd = ga.clone();
            (
                Box::new(move |x: &LieElement| fwd.flow(t, x)),
                Box::new(move |x: &LieElement| bwd.flow(-t, x)),
                Quasimetric::unit(&ga),
                "flow_ln2",
                json!({ "a": spec_input_value(a, &pa) }),
            )
        }
        Some(bp) => {
            let pb = load_spec(bp)?;
            let gb = decompose_input(&pb, 1e-9)?;
            let f = match build_isometry(&ga, &gb) {
                Ok(f) => f,
                Err(HeisError::NotEquivalent(detail)) => {
                    return Ok((
                        "distort",
                        json!({ "a": spec_input_value(a, &pa), "b": spec_input_value(bp, &pb) }),
                        json!({ "samples": samples, "seed": seed, "radii": reals_value(&radii) }),
                        json!({ "equivalent": false, "detail": detail }),
                    ))
                }
                Err(e) => return Err(failure_from_heis(e, false)),
            };
            let dst = Quasimetric::new(&gb, f.lambda()).map_err(|e| failure_from_heis(e, false))?;
            let back = f.clone();
            let inputs =
                json!({ "a": spec_input_value(a, &pa), "b": spec_input_value(bp, &pb) });
            (
                Box::new(move |x: &LieElement| f.apply(x)),
                Box::new(move |x: &LieElement| back.apply_inverse(x)),
                dst,
                "boundary_isometry",
                inputs,
            )
        }
    };

    let probe = distortion_probe(
        map.as_ref(),
        &src,
        &dst,
        &basepoint,
        &radii,
        samples,
        seed,
        Some(inverse.as_ref()),
    )
    .map_err(|e| failure_from_heis(e, true))?;
    let envelope = eta_envelope(map.as_ref(), &src, &dst, samples * radii.len() as u64, seed)
        .map_err(|e| failure_from_heis(e, false))?;
    let eta1: Vec<Value> = eta1_samples(&envelope)
        .iter()
        .map(|&(t, rho)| json!([real_value(t), real_value(rho)]))
        .collect();
    let almost = almost_similarity_fit(map.as_ref(), &src, &dst, samples, seed)
        .map_err(|e| failure_from_heis(e, false))?;
    let quasi = quasisimilarity_fit(map.as_ref(), &src, &dst, samples, seed)
        .map_err(|e| failure_from_heis(e, false))?;

    let results = json!({
        "map": map_name,
        "probe": probe_value(&probe),
        "eta_envelope": envelope_value(&envelope),
        "eta1": eta1,
        "almost_similarity": { "l": real_value(almost.l), "c": real_value(almost.c) },
        "quasisimilarity": { "k": real_value(quasi.k), "c": real_value(quasi.c) },
    });
    let mut params = Map::new();
    params.insert("samples".into(), json!(samples));
    params.insert("seed".into(), json!(seed));
    params.insert("radii".into(), reals_value(&radii));
    Ok(("distort", inputs, Value::Object(params), results))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("heisvis").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn write_spec(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path.display().to_string()
    }

    const DIAG123: &str = r#"{"n":1,"derivation":{"matrix":[[1,0,0],[0,2,0],[0,0,3]]}}"#;
    const DIAG246: &str = r#"{"n":1,"derivation":{"matrix":[[2,0,0],[0,4,0],[0,0,6]]}}"#;
    const DIAG112: &str = r#"{"n":1,"derivation":{"matrix":[[1,0,0],[0,1,0],[0,0,2]]}}"#;

    #[test]
    fn validate_reports_structure() {
        let dir = tempfile::tempdir().unwrap();
        let spec = write_spec(&dir, "a.json", DIAG123);
        let (code, out, _) = run_capture(&["validate", &spec]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["results"]["valid"], Value::Bool(true));
        assert_eq!(v["results"]["structure"]["k"], json!(2));
        assert_eq!(v["command"], json!("validate"));
        assert!(v.get("wall_time_ms").is_none());
    }

    #[test]
    fn validate_rejects_non_derivation_with_verdict() {
        let dir = tempfile::tempdir().unwrap();
        let spec = write_spec(
            &dir,
            "bad.json",
            r#"{"n":1,"derivation":{"matrix":[[1,0,0],[0,2,0],[0,0,4]]}}"#,
        );
        let (code, out, _) = run_capture(&["validate", &spec]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["results"]["valid"], Value::Bool(false));
        assert_eq!(v["results"]["is_derivation"], Value::Bool(false));
    }

    #[test]
    fn classify_pair_reports_lambda_half() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_spec(&dir, "a.json", DIAG123);
        let b = write_spec(&dir, "b.json", DIAG246);
        let (code, out, _) = run_capture(&["classify", &a, &b]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["results"]["equivalent"], Value::Bool(true));
        assert_eq!(v["results"]["lambda"], json!(0.5));
    }

    #[test]
    fn schema_errors_name_fields_and_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write_spec(&dir, "bad.json", r#"{"derivation":{"matrix":[[1]]}}"#);
        let (code, out, _) = run_capture(&["validate", &bad]);
        assert_eq!(code, 1);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["error"]["kind"], json!("SchemaError"));
        assert_eq!(v["error"]["field"], json!("n"));
    }

    #[test]
    fn unknown_subcommand_exits_one_with_usage() {
        let (code, out, err) = run_capture(&["frobnicate"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(err.to_lowercase().contains("usage"));
    }

    #[test]
    fn dist_command_matches_library() {
        let dir = tempfile::tempdir().unwrap();
        let spec = write_spec(&dir, "a.json", DIAG123);
        let (code, out, _) = run_capture(&["dist", &spec, "0,0,0", "1,1,8"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        // norm of (1,1,8): 1 + 1 + 8^{1/3} = 4
        assert!((v["results"]["dist"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dist_point_errors_name_the_point() {
        let dir = tempfile::tempdir().unwrap();
        let spec = write_spec(&dir, "a.json", DIAG123);
        let (code, out, _) = run_capture(&["dist", &spec, "0,0", "1,1,8"]);
        assert_eq!(code, 1);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["error"]["kind"], json!("DimensionError"));
        assert_eq!(v["error"]["field"], json!("p"));
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_spec(&dir, "a.json", DIAG123);
        let b = write_spec(&dir, "b.json", DIAG246);
        for args in [
            vec!["classify", a.as_str(), b.as_str()],
            vec!["isometry", a.as_str(), b.as_str(), "--pairs", "200", "--seed", "3"],
            vec!["chain", a.as_str(), "0,0,0", "0.5,0,0", "--samples", "300"],
            vec!["regularity", a.as_str(), "--samples", "20000"],
            vec!["cosets", a.as_str(), "0,0,0", "0,0,1"],
            vec!["distort", a.as_str(), "--samples", "150"],
        ] {
            let (c1, o1, _) = run_capture(&args);
            let (c2, o2, _) = run_capture(&args);
            assert_eq!(c1, 0, "{args:?} failed: {o1}");
            assert_eq!(c1, c2);
            assert_eq!(o1, o2, "non-deterministic report for {args:?}");
        }
    }

    #[test]
    fn timings_flag_adds_wall_time() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_spec(&dir, "a.json", DIAG123);
        let (code, out, _) = run_capture(&["validate", &a, "--timings"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["wall_time_ms"].as_f64().unwrap() >= 0.0);
    }

    #[test]
    fn isometry_of_inequivalent_pair_is_a_verdict() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_spec(&dir, "a.json", DIAG123);
        let b = write_spec(&dir, "b.json", DIAG112);
        let (code, out, _) = run_capture(&["isometry", &a, &b]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["results"]["equivalent"], Value::Bool(false));
    }

    #[test]
    fn chain_stays_at_or_below_dist() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_spec(&dir, "a.json", DIAG112);
        let (code, out, _) =
            run_capture(&["chain", &a, "0,0,0", "1,0,0", "--samples", "2000"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let chain = v["results"]["chain_dist"].as_f64().unwrap();
        let dist = v["results"]["dist"].as_f64().unwrap();
        assert!(chain <= dist + 1e-12);
        assert!(chain > 0.0);
    }

    #[test]
    fn cosets_command_reports_profile_and_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_spec(&dir, "a.json", DIAG123);
        // g2 = 8 e_3 lies in K; closed form gives dist 8^{1/3} = 2
        let (code, out, _) = run_capture(&["cosets", &a, "0,0,0", "0,0,8"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!((v["results"]["coset_dist_u1"].as_f64().unwrap() - 2.0).abs() < 1e-12);
        assert!((v["results"]["point_to_coset_dist"].as_f64().unwrap() - 2.0).abs() < 1e-6);
        assert_eq!(v["results"]["hausdorff"]["verdicts_agree"], Value::Bool(true));
    }

    #[test]
    fn distort_flow_probe_has_similarity_two() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_spec(&dir, "a.json", DIAG123);
        let (code, out, _) = run_capture(&["distort", &a, "--samples", "400"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let l = v["results"]["almost_similarity"]["l"].as_f64().unwrap();
        assert!((l - 2.0).abs() < 1e-9, "flow similarity constant {l}");
        let lim = v["results"]["probe"]["limit_upper"].as_f64().unwrap();
        assert!((lim - 2.0).abs() < 0.1);
    }
}
