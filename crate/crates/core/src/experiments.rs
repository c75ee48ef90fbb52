//! Compositions `F_N = f_N ∘ ... ∘ f_1` and their distance to the identity
//! across N.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moebius::{map_distance, map_distance_to_identity, GridSpec, MoebiusMap};
use crate::real::{Precision, Real};
use crate::recurrences::{matrix_entries_check, run_recurrences, MatrixEntriesCheck};
use crate::sequences::{
    check_conditions, fmt_real, generate, matrix_traces, ConditionReport, EpsilonSequence, Family,
};

/// Matrix of `F_N`, multiplied in ascending `k`.
pub fn compose_sequence<T: Real>(seq: &EpsilonSequence<T>) -> Result<MoebiusMap<T>> {
    seq.eps().iter().try_fold(MoebiusMap::identity(), |acc, e| {
        Ok(MoebiusMap::from_epsilon(e.clone())?.compose(&acc))
    })
}

/// Compares every partial product with the recurrence entries driven by the
/// traces of the same working-precision factors.
pub fn two_path_check<T: Real>(seq: &EpsilonSequence<T>) -> Result<MatrixEntriesCheck> {
    let run = run_recurrences(&matrix_traces(seq)?);
    matrix_entries_check(&run, seq)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub family: Family,
    pub ns: Vec<usize>,
    /// `sup_grid |F_N(z) - z|`
    pub errs: Vec<f64>,
    /// `N * err`
    pub scaled: Vec<f64>,
    /// Least-squares slope of `log err` against `log N`.
    pub fit_slope: f64,
    /// `max N * err`.
    pub fit_c: f64,
    /// Slope between consecutive Ns; NaN in the first row.
    pub slope_running: Vec<f64>,
    pub grid: GridSpec,
    pub precision: Precision,
}

impl ConvergenceReport {
    /// `max(N err) / min(N err)`.
    pub fn c_ratio(&self) -> f64 {
        spread(&self.scaled)
    }

    /// Whether `err` never grows by more than the factor `1 + slack` between consecutive Ns.
    pub fn nonincreasing_within(&self, slack: f64) -> bool {
        self.errs.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,err,N_err,slope_running\n");
        for i in 0..self.ns.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.ns[i],
                fmt_real(self.errs[i]),
                fmt_real(self.scaled[i]),
                fmt_real(self.slope_running[i])
            ));
        }
        out
    }
}

/// `max / min` of positive values; NaN if empty, infinite if the minimum is zero.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        f64::NAN
    } else {
        max / min
    }
}

/// Unweighted least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 || pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn report_from(family: &Family, ns: Vec<usize>, errs: Vec<f64>, grid: GridSpec, precision: Precision) -> ConvergenceReport {
    let scaled: Vec<f64> = ns.iter().zip(&errs).map(|(&n, e)| n as f64 * e).collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut slope_running = vec![f64::NAN];
    for i in 1..ns.len() {
        slope_running.push(log_log_slope(&xs[i - 1..=i], &errs[i - 1..=i]));
    }
    slope_running.truncate(ns.len());
    ConvergenceReport {
        family: family.clone(),
        fit_slope: log_log_slope(&xs, &errs),
        fit_c: scaled.iter().copied().fold(0.0, f64::max),
        ns,
        errs,
        scaled,
        slope_running,
        grid,
        precision,
    }
}

fn grid_points<T: Real>(grid: &GridSpec) -> Result<Vec<Complex<T>>> {
    let pts = grid.points::<T>();
    if pts.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "grid has no points".into(),
        });
    }
    Ok(pts)
}

/// `sup_grid |F_N(z) - z|` for each N, computed in parallel and reported in
/// the order given.
pub fn convergence_experiment<T: Real>(
    family: &Family,
    ns: &[usize],
    grid: &GridSpec,
) -> Result<ConvergenceReport> {
    for &n in ns {
        family.check_n(n)?;
    }
    let pts = grid_points::<T>(grid)?;
    let errs = ns
        .par_iter()
        .map(|&n| {
            let f = compose_sequence(&generate::<T>(family, n)?)?;
            Ok(map_distance_to_identity(&f, &pts)?.to_f64())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(report_from(family, ns.to_vec(), errs, *grid, T::PRECISION))
}

/// Constant sequence `eps = pi/(N + offset)` at a single N.
pub fn autonomous_baseline<T: Real>(n: usize, offset: f64, grid: &GridSpec) -> Result<ConvergenceReport> {
    if !(offset.abs() <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "offset",
            reason: format!("|offset| must be at most 1, got {offset}"),
        });
    }
    convergence_experiment::<T>(&Family::Constant { offset }, &[n], grid)
}

/// `z -> z/(1+z)`, the inverse of the unperturbed map, built as `inverse(from_epsilon(0))`.
pub fn unperturbed_inverse<T: Real>() -> MoebiusMap<T> {
    MoebiusMap::from_epsilon(T::zero())
        .expect("zero is a valid perturbation")
        .inverse()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub ns: Vec<usize>,
    /// `sup_grid |F_N(z) - z/(1+z)|`
    pub err_inverse: Vec<f64>,
    /// `N * err_inverse`
    pub scaled_inverse: Vec<f64>,
    /// `sup_grid |F_N(z) - z|`
    pub err_identity: Vec<f64>,
    /// `sup_grid |z^2/(1+z)|`, the limit of `err_identity`.
    pub limit_gap: f64,
    pub conditions: Vec<ConditionReport>,
    pub grid: GridSpec,
    pub precision: Precision,
}

impl CounterexampleReport {
    pub fn c_ratio(&self) -> f64 {
        spread(&self.scaled_inverse)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,err_inverse,N_err_inverse,err_identity,N_S,band,verdict_S,verdict_band\n");
        let v = |b: bool| if b { "PASS" } else { "FAIL" };
        for i in 0..self.ns.len() {
            let c = &self.conditions[i];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.ns[i],
                fmt_real(self.err_inverse[i]),
                fmt_real(self.scaled_inverse[i]),
                fmt_real(self.err_identity[i]),
                fmt_real(c.s_scaled),
                fmt_real(c.band),
                v(c.verdict_s),
                v(c.verdict_band)
            ));
        }
        out
    }
}

/// Composes the counterexample sequence and compares it with both the
/// identity and `z/(1+z)`.
pub fn counterexample_experiment<T: Real>(
    ns: &[usize],
    grid: &GridSpec,
    a_threshold: f64,
) -> Result<CounterexampleReport> {
    let pts = grid_points::<T>(grid)?;
    let target = unperturbed_inverse::<T>();
    let rows = ns
        .par_iter()
        .map(|&n| {
            let seq = generate::<T>(&Family::Counterexample, n)?;
            let f = compose_sequence(&seq)?;
            let inv = map_distance(&f, &target, &pts)?.to_f64();
            let id = map_distance_to_identity(&f, &pts)?.to_f64();
            Ok((inv, id, check_conditions(&seq, a_threshold)))
        })
        .collect::<Result<Vec<_>>>()?;
    let limit_gap = map_distance_to_identity(&target, &pts)?.to_f64();
    let mut report = CounterexampleReport {
        ns: ns.to_vec(),
        err_inverse: Vec::new(),
        scaled_inverse: Vec::new(),
        err_identity: Vec::new(),
        limit_gap,
        conditions: Vec::new(),
        grid: *grid,
        precision: T::PRECISION,
    };
    for (&n, (inv, id, cond)) in ns.iter().zip(rows) {
        report.err_inverse.push(inv);
        report.scaled_inverse.push(n as f64 * inv);
        report.err_identity.push(id);
        report.conditions.push(cond);
    }
    Ok(report)
}

/// Matrix distance of `F_N` to `-I` against its distance to the identity as a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapMatrixCheck {
    pub n: usize,
    pub matrix_err: f64,
    pub map_err: f64,
    /// `map_err` may not exceed `bound(matrix_err)`.
    pub bound: f64,
}

impl MapMatrixCheck {
    pub fn holds(&self) -> bool {
        self.map_err <= self.bound
    }
}

/// If every entry of `M + I` is at most `e`, then for `|z| <= R`
/// `|M(z) - z| <= e (1 + R)^2 / (1 - e (1 + R))`.
pub fn map_matrix_bound(matrix_err: f64, grid: &GridSpec) -> f64 {
    let r = grid.center_re.hypot(grid.center_im) + grid.radius;
    let den = 1.0 - matrix_err * (1.0 + r);
    if den <= 0.0 {
        f64::INFINITY
    } else {
        matrix_err * (1.0 + r) * (1.0 + r) / den
    }
}

pub fn map_vs_matrix<T: Real>(seq: &EpsilonSequence<T>, grid: &GridSpec) -> Result<MapMatrixCheck> {
    let f = compose_sequence(seq)?;
    let minus_id = MoebiusMap::<T>::identity().scale(&-Complex::<T>::new(T::one(), T::zero()));
    let matrix_err = f.max_entry_distance(&minus_id).to_f64();
    let map_err = map_distance_to_identity(&f, &grid_points::<T>(grid)?)?.to_f64();
    Ok(MapMatrixCheck {
        n: seq.n(),
        matrix_err,
        map_err,
        bound: map_matrix_bound(matrix_err, grid) * (1.0 + 1e-12) + 8.0 * T::unit_roundoff(),
    })
}
