use std::fs;
use std::path::Path;

use num_complex::Complex64;
use parabifurc_core::experiments::{
    compose_sequence, convergence_experiment, counterexample_experiment, two_path_check,
};
use parabifurc_core::moebius::map_distance_to_identity;
use parabifurc_core::planar::{corollary_experiment, fiber_identification, FiberIdentification, PlanarMap};
use parabifurc_core::recurrences::{
    band_estimate, nevai_sweep, partial_sum_estimate, run_recurrences, shift_identity_residual,
    wronskian_residual,
};
use parabifurc_core::sequences::{a_coefficients, check_conditions, fmt_real, generate};
use parabifurc_core::{Error, Ext, Family, MoebiusMap, Precision, Real};
use serde::Serialize;

use crate::config::{validate, Command, ExperimentConfig, MapName, OutputConfig, OutputFormat, Violation};

/// Relative tolerance for the shift and Wronskian identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("identity contract violated: {0}")]
    Contract(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for bad input, 3 for numerical failure, 1 for i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) | RunError::Parse(_) => 2,
            RunError::Core(e) if e.is_numerical() => 3,
            RunError::Core(_) => 2,
            RunError::Contract(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

/// Report files by name, plus a one-line summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub summary: String,
}

impl Outcome {
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

/// Validates and runs `config`, returning the report files without writing them.
///
/// A failed identity contract becomes [`RunError::Contract`]; use
/// [`run_with_files`] to keep the report in that case.
pub fn run(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let (outcome, violation) = run_with_files(config)?;
    match violation {
        Some(v) => Err(RunError::Contract(v)),
        None => Ok(outcome),
    }
}

/// Like [`run`], but a failed identity contract is returned next to the
/// report instead of replacing it.
pub fn run_with_files(config: &ExperimentConfig) -> Result<(Outcome, Option<String>), RunError> {
    let violations = validate(config);
    if !violations.is_empty() {
        return Err(RunError::Invalid(violations));
    }
    match config.precision {
        Precision::Standard => dispatch::<f64>(config),
        Precision::Extended => dispatch::<Ext>(config),
    }
}

fn dispatch<T: Real>(config: &ExperimentConfig) -> Result<(Outcome, Option<String>), RunError> {
    let family = match config.command {
        Command::Planar => return Ok((planar(config)?, None)),
        Command::Counterexample => Family::Counterexample,
        _ => config.family().map_err(|v| RunError::Invalid(vec![v]))?,
    };
    let ns = config.ns(&family).map_err(|v| RunError::Invalid(vec![v]))?;
    let out = match config.command {
        Command::Compose => compose::<T>(config, &family, &ns)?,
        Command::Check => check::<T>(config, &family, &ns)?,
        Command::Rate => rate::<T>(config, &family, &ns)?,
        Command::Counterexample => counterexample::<T>(config, &ns)?,
        Command::Identities => return identities::<T>(config, &family, &ns),
        Command::Planar => unreachable!(),
    };
    Ok((out, None))
}

/// Config echoed into structured reports; the output location is omitted
/// so that reruns into different directories stay byte-identical.
fn provenance(config: &ExperimentConfig) -> ExperimentConfig {
    let mut c = config.clone();
    c.output.dir = OutputConfig::default().dir;
    c
}

#[derive(Serialize)]
struct Structured<'a, R: Serialize> {
    command: &'static str,
    config: ExperimentConfig,
    grid: String,
    report: &'a R,
}

fn structured<R: Serialize>(config: &ExperimentConfig, report: &R) -> (String, String) {
    let doc = Structured {
        command: config.command.as_str(),
        config: provenance(config),
        grid: config.grid.spec().describe(),
        report,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("reports serialize");
    text.push('\n');
    (format!("{}.json", config.command), text)
}

fn range(ns: &[usize]) -> String {
    match ns {
        [n] => format!("N={n}"),
        _ => format!("N={}..{}", ns[0], ns[ns.len() - 1]),
    }
}

#[derive(Serialize)]
struct ComposeRow {
    n: usize,
    matrix: [f64; 4],
    det_minus_1: f64,
    err_identity: f64,
    matrix_err: f64,
    two_path_rel: f64,
}

fn compose<T: Real>(config: &ExperimentConfig, family: &Family, ns: &[usize]) -> Result<Outcome, RunError> {
    let pts = config.grid.spec().points::<T>();
    let mut rows = Vec::new();
    for &n in ns {
        let seq = generate::<T>(family, n)?;
        let f = compose_sequence(&seq)?;
        let minus = MoebiusMap::<T>::identity().scale(&-num_complex::Complex::new(T::one(), T::zero()));
        let det = f.determinant();
        rows.push(ComposeRow {
            n,
            matrix: [f.a.re.to_f64(), f.b.re.to_f64(), f.c.re.to_f64(), f.d.re.to_f64()],
            det_minus_1: (det.re - T::one()).to_f64(),
            err_identity: map_distance_to_identity(&f, &pts)?.to_f64(),
            matrix_err: f.max_entry_distance(&minus).to_f64(),
            two_path_rel: two_path_check(&seq)?.relative(),
        });
    }
    let files = match config.output.format {
        OutputFormat::StructuredText => vec![structured(config, &rows)],
        OutputFormat::Csv => {
            let mut csv = String::from("N,a,b,c,d,det_minus_1,err_identity,matrix_err,two_path_rel\n");
            for r in &rows {
                let cols: Vec<String> = r
                    .matrix
                    .iter()
                    .chain([&r.det_minus_1, &r.err_identity, &r.matrix_err, &r.two_path_rel])
                    .map(|&v| fmt_real(v))
                    .collect();
                csv.push_str(&format!("{},{}\n", r.n, cols.join(",")));
            }
            vec![("compose.csv".into(), csv)]
        }
    };
    let last = rows.last().expect("ns is nonempty");
    Ok(Outcome {
        files,
        summary: format!(
            "compose {family} {} err_identity={} matrix_err={}",
            range(ns),
            fmt_real(last.err_identity),
            fmt_real(last.matrix_err)
        ),
    })
}

fn verdict(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn check<T: Real>(config: &ExperimentConfig, family: &Family, ns: &[usize]) -> Result<Outcome, RunError> {
    let mut reports = Vec::new();
    let mut files = Vec::new();
    for &n in ns {
        let seq = generate::<T>(family, n)?;
        let report = check_conditions(&seq, config.a_threshold);
        if config.output.format == OutputFormat::Csv {
            files.push((format!("sequence_N{n}.csv"), seq.to_csv()));
            files.push((format!("conditions_N{n}.txt"), report.to_key_values()));
        }
        reports.push(report);
    }
    if config.output.format == OutputFormat::StructuredText {
        files.push(structured(config, &reports));
    }
    let verdicts: Vec<String> = reports
        .iter()
        .map(|r| format!("N={} verdict_S={} verdict_band={}", r.n, verdict(r.verdict_s), verdict(r.verdict_band)))
        .collect();
    Ok(Outcome {
        files,
        summary: format!("check {family} {}", verdicts.join(" ")),
    })
}

fn rate<T: Real>(config: &ExperimentConfig, family: &Family, ns: &[usize]) -> Result<Outcome, RunError> {
    let report = convergence_experiment::<T>(family, ns, &config.grid.spec())?;
    let file = match config.output.format {
        OutputFormat::Csv => ("rate.csv".to_string(), report.to_csv()),
        OutputFormat::StructuredText => structured(config, &report),
    };
    Ok(Outcome {
        files: vec![file],
        summary: format!(
            "rate {family} {} fit_C={} fit_slope={}",
            range(ns),
            fmt_real(report.fit_c),
            fmt_real(report.fit_slope)
        ),
    })
}

fn counterexample<T: Real>(config: &ExperimentConfig, ns: &[usize]) -> Result<Outcome, RunError> {
    for &n in ns {
        Family::Counterexample.check_n(n)?;
    }
    let report = counterexample_experiment::<T>(ns, &config.grid.spec(), config.a_threshold)?;
    let file = match config.output.format {
        OutputFormat::Csv => ("counterexample.csv".to_string(), report.to_csv()),
        OutputFormat::StructuredText => structured(config, &report),
    };
    let min_id = report.err_identity.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        files: vec![file],
        summary: format!(
            "counterexample {} fit_C_inverse={} min_err_identity={}",
            range(ns),
            fmt_real(report.scaled_inverse.iter().copied().fold(0.0, f64::max)),
            fmt_real(min_id)
        ),
    })
}

#[derive(Debug, Clone, Serialize)]
struct IdentityRow {
    n: usize,
    two_path_rel: f64,
    two_path_within_bound: bool,
    nevai_ratio: f64,
    shift_residual: f64,
    wronskian_residual: f64,
    band_c: f64,
    band_max_dev: f64,
    band_holds: bool,
    partial_sum_excess: f64,
    partial_sum_eps: f64,
}

impl IdentityRow {
    fn violations(&self, u: f64) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.n;
        if !self.two_path_within_bound {
            v.push(format!("N={n}: products differ from recurrence entries ({:e})", self.two_path_rel));
        }
        if !(self.nevai_ratio <= 1.0) {
            v.push(format!("N={n}: nevai residual at {}x tolerance", self.nevai_ratio));
        }
        if !(self.shift_residual <= IDENTITY_TOLERANCE) {
            v.push(format!("N={n}: shift identity residual {:e}", self.shift_residual));
        }
        if !(self.wronskian_residual <= IDENTITY_TOLERANCE) {
            v.push(format!("N={n}: wronskian residual {:e}", self.wronskian_residual));
        }
        if !self.band_holds {
            v.push(format!("N={n}: |p - U| = {:e} exceeds 2C", self.band_max_dev));
        }
        if !(self.partial_sum_excess <= 1e3 * u * (1.0 + self.partial_sum_eps)) {
            v.push(format!("N={n}: |p - U| exceeds partial sum by {:e}", self.partial_sum_excess));
        }
        v
    }
}

fn identities<T: Real>(
    config: &ExperimentConfig,
    family: &Family,
    ns: &[usize],
) -> Result<(Outcome, Option<String>), RunError> {
    let mut rows = Vec::new();
    for &n in ns {
        let seq = generate::<T>(family, n)?;
        let ts = a_coefficients(&seq);
        let run = run_recurrences(&ts);
        let two_path = two_path_check(&seq)?;
        let band = band_estimate(&run, &ts);
        let partial = partial_sum_estimate(&run, &ts);
        rows.push(IdentityRow {
            n,
            two_path_rel: two_path.relative(),
            two_path_within_bound: two_path.within_bound(),
            nevai_ratio: nevai_sweep(&run, &ts),
            shift_residual: shift_identity_residual(&run),
            wronskian_residual: wronskian_residual(&run),
            band_c: band.c,
            band_max_dev: band.max_deviation,
            band_holds: band.holds(),
            partial_sum_excess: partial.worst_excess,
            partial_sum_eps: partial.eps_total,
        });
    }
    let files = match config.output.format {
        OutputFormat::StructuredText => vec![structured(config, &rows)],
        OutputFormat::Csv => {
            let mut csv = String::from(
                "N,two_path_rel,nevai_ratio,shift_residual,wronskian_residual,band_C,band_max_dev,partial_sum_excess,partial_sum_eps\n",
            );
            for r in &rows {
                let vals = [
                    r.two_path_rel,
                    r.nevai_ratio,
                    r.shift_residual,
                    r.wronskian_residual,
                    r.band_c,
                    r.band_max_dev,
                    r.partial_sum_excess,
                    r.partial_sum_eps,
                ];
                let cols: Vec<String> = vals.iter().map(|&v| fmt_real(v)).collect();
                csv.push_str(&format!("{},{}\n", r.n, cols.join(",")));
            }
            vec![("identities.csv".into(), csv)]
        }
    };
    let violations: Vec<String> = rows.iter().flat_map(|r| r.violations(T::unit_roundoff())).collect();
    let status = if violations.is_empty() { "PASS" } else { "FAIL" };
    let outcome = Outcome {
        files,
        summary: format!("identities {family} {} contract={status}", range(ns)),
    };
    let violation = (!violations.is_empty()).then(|| violations.join("; "));
    Ok((outcome, violation))
}

#[derive(Serialize)]
struct PlanarReport {
    orbit: parabifurc_core::planar::PlanarOrbitReport,
    fiber: Vec<FiberIdentification>,
}

fn planar(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let p = config.planar.as_ref().expect("validated");
    let map = match p.map {
        MapName::H => PlanarMap::h(),
        MapName::L => PlanarMap::l(),
    };
    let m = p.multiplier();
    let z = Complex64::new(p.z[0], p.z[1]);
    let w = Complex64::new(p.w[0], p.w[1]);
    let orbit = corollary_experiment(&map, z, w, &p.n_values, m)?;
    let fiber = if p.w[1] == 0.0 && p.w[0] > 0.0 && (m == 1 || m == 2) {
        p.n_values
            .iter()
            .map(|&n| fiber_identification(&map, p.w[0], n, m))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    let last = orbit.deviations.last().copied().unwrap_or(f64::NAN);
    let summary = format!(
        "planar {:?} n={:?} basin={} final_deviation={} decreasing={}",
        p.map,
        p.n_values,
        orbit.basin.as_str(),
        fmt_real(last),
        orbit.strictly_decreasing()
    );
    let files = match config.output.format {
        OutputFormat::StructuredText => vec![structured(config, &PlanarReport { orbit, fiber })],
        OutputFormat::Csv => {
            let mut files = vec![("planar.csv".to_string(), orbit.to_csv())];
            if !fiber.is_empty() {
                let mut csv = String::from("n,max_dev,n3_max_dev\n");
                for f in &fiber {
                    csv.push_str(&format!("{},{},{}\n", f.n, fmt_real(f.max_dev), fmt_real(f.scaled)));
                }
                files.push(("fiber.csv".to_string(), csv));
            }
            files
        }
    };
    Ok(Outcome { files, summary })
}
