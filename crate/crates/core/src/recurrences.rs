//! Generalized Chebyshev recurrences driven by the traces `t_k = 2 - eps_k^2`.
//!
//! With `x = 2cos(pi/N)` and `a_k = t_k - x` the sequences are
//!
//! ```text
//! p_0 = 0, p_1 = 1,   p_{k+1} = t_k p_k - p_{k-1}
//! q_0 = 1, q_1 = 1,   q_{k+1} = t_k q_k - q_{k-1}
//! p~_0 = 0, p~_1 = 1, p~_{k+1} = t_{k+1} p~_k - p~_{k-1}
//! U_0 = 0, U_1 = 1,   U_{k+1} = x U_k - U_{k-1}
//! ```
//!
//! and the partial product `F_n = f_n ∘ ... ∘ f_1` has matrix
//! `((p_{n+1} - p_n, q_n - q_{n+1}), (-p_n, q_n))`.
//!
//! `t_k p_k` is always evaluated as `x p_k + a_k p_k`. Only `a_k` carries
//! the perturbation, and keeping it separate from `x` avoids rounding it
//! away when `t_k` is close to 2.
//!
//! Each step is also compensated: the rounding errors of the products and
//! sums are recovered exactly and carried along in a second recurrence, so
//! binary64 values come out as if computed in twice the precision and then
//! rounded. Plain forward evaluation loses about `N^2 u` relative accuracy.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::moebius::MoebiusMap;
use crate::real::{two_sum, Ext, Real};
use crate::sequences::EpsilonSequence;
use crate::summation::{CompensatedComplexSum, CompensatedSum};

/// Traces of the factors together with the reference point `x = 2cos(theta)`,
/// `theta = pi/N`, and the deviations `a_k = t_k - x`.
///
/// `x` is stored as `x + x_lo` so that it matches `2cos(theta)` for the
/// rounded `theta` beyond working precision.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSequence<T> {
    n: usize,
    t: Vec<T>,
    x: T,
    x_lo: T,
    theta: T,
    a: Vec<T>,
}

impl<T: Real> TraceSequence<T> {
    /// Reference angle `theta = pi/N` and `x + x_lo = 2cos(theta)`.
    pub fn reference(n: usize) -> (T, T, T) {
        let theta = T::pi() / T::from_u64(n as u64);
        let exact = Ext::from_u64(2) * theta.to_ext().cos();
        let x = T::from_ext(&exact);
        let x_lo = T::from_ext(&(exact - x.to_ext()));
        (theta, x, x_lo)
    }

    /// `t_k - 2cos(theta)`, evaluated in extended precision and rounded.
    fn deviation(t: &T, x: &T, x_lo: &T) -> T {
        T::from_ext(&(t.to_ext() - x.to_ext() - x_lo.to_ext()))
    }

    /// Builds `a_k = t_k - x` from the traces.
    pub fn from_traces(t: Vec<T>) -> Result<Self> {
        let n = t.len();
        if n < 2 {
            return Err(Error::InvalidParameter {
                name: "N",
                reason: format!("need at least 2 traces, got {n}"),
            });
        }
        let (theta, x, x_lo) = Self::reference(n);
        let a = t.iter().map(|tk| Self::deviation(tk, &x, &x_lo)).collect();
        Self::from_parts(t, x, x_lo, theta, a)
    }

    /// Builds `t_k = x + a_k` from the deviations.
    pub fn from_deviations(a: Vec<T>) -> Result<Self> {
        let n = a.len();
        if n < 2 {
            return Err(Error::InvalidParameter {
                name: "N",
                reason: format!("need at least 2 coefficients, got {n}"),
            });
        }
        let (theta, x, x_lo) = Self::reference(n);
        let t = a.iter().map(|ak| x.clone() + (x_lo.clone() + ak.clone())).collect();
        Self::from_parts(t, x, x_lo, theta, a)
    }

    /// Caller supplies all fields; `a_k` may be more accurate than `t_k - x`.
    pub fn from_parts(t: Vec<T>, x: T, x_lo: T, theta: T, a: Vec<T>) -> Result<Self> {
        let n = t.len();
        if a.len() != n {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: format!("length {} does not match {} traces", a.len(), n),
            });
        }
        if !(theta > T::zero() && theta < T::pi()) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: "must lie in (0, pi)".into(),
            });
        }
        if !t.iter().chain(a.iter()).all(Real::is_finite) {
            return Err(Error::NonFinite("trace sequence"));
        }
        Ok(Self {
            n,
            t,
            x,
            x_lo,
            theta,
            a,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    /// `t_1..t_N` (index 0 holds `t_1`).
    pub fn t(&self) -> &[T] {
        &self.t
    }
    pub fn x(&self) -> &T {
        &self.x
    }
    /// Low-order part of `2cos(theta)`.
    pub fn x_lo(&self) -> &T {
        &self.x_lo
    }
    pub fn theta(&self) -> &T {
        &self.theta
    }
    /// `a_1..a_N` (index 0 holds `a_1`).
    pub fn a(&self) -> &[T] {
        &self.a
    }
    /// `a_k`, 1-based.
    pub fn a_k(&self, k: usize) -> &T {
        &self.a[k - 1]
    }
}

/// All sequences for one trace sequence of length N.
#[derive(Debug, Clone)]
pub struct RecurrenceRun<T> {
    /// `p_0..p_{N+1}`
    pub p: Vec<T>,
    /// `q_0..q_{N+1}`
    pub q: Vec<T>,
    /// `p~_0..p~_N`
    pub ptilde: Vec<T>,
    /// `U_0..U_{N+1}`
    pub u: Vec<T>,
    /// `phi_1..phi_{N+1}` stored at index `n - 1`.
    pub phi: Vec<Complex<T>>,
    /// `delta_1..delta_{N+1}` stored at index `n - 1`; `delta_1 = 0`.
    pub delta: Vec<Complex<T>>,
    n: usize,
}

impl<T: Real> RecurrenceRun<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phi_n(&self, n: usize) -> &Complex<T> {
        &self.phi[n - 1]
    }

    pub fn delta_n(&self, n: usize) -> &Complex<T> {
        &self.delta[n - 1]
    }

    /// Matrix of `F_n` predicted by the recurrences, `1 <= n <= N`.
    pub fn predicted_matrix(&self, n: usize) -> MoebiusMap<T> {
        let re = |v: T| Complex::new(v, T::zero());
        MoebiusMap {
            a: re(self.p[n + 1].clone() - self.p[n].clone()),
            b: re(self.q[n].clone() - self.q[n + 1].clone()),
            c: re(-self.p[n].clone()),
            d: re(self.q[n].clone()),
        }
    }
}

/// Runs `p`, `q`, `p~` and `U` forward and accumulates `delta_n` in
/// ascending `j` with compensated summation.
pub fn run_recurrences<T: Real>(ts: &TraceSequence<T>) -> RecurrenceRun<T> {
    let n = ts.n;
    let zero = T::zero();

    let x = (&ts.x, &ts.x_lo);
    let p = compensated_recurrence(x, &ts.a, 0, n + 2);
    let q = {
        let mut r = Recurrence::new(x, T::one(), T::one());
        let mut out = vec![T::one(), T::one()];
        for ak in &ts.a {
            out.push(r.step(ak));
        }
        out
    };
    let u = compensated_recurrence(x, &vec![zero; n], 0, n + 2);
    let ptilde = compensated_recurrence(x, &ts.a, 1, n + 1);

    let mut phi = Vec::with_capacity(n + 1);
    let mut delta = Vec::with_capacity(n + 1);
    let mut acc = CompensatedComplexSum::new();
    phi.push(Complex::one());
    delta.push(Complex::zero());
    for j in 1..=n {
        let angle = T::from_u64(j as u64) * ts.theta.clone();
        let w = ts.a[j - 1].clone() * p[j].clone();
        acc.add(Complex::new(w.clone() * angle.cos(), w * angle.sin()));
        let d = acc.value();
        phi.push(Complex::<T>::one() + d.clone());
        delta.push(d);
    }

    RecurrenceRun {
        p,
        q,
        ptilde,
        u,
        phi,
        delta,
        n,
    }
}

/// Three-term recurrence `y_{k+1} = (x + x_lo + a_k) y_k - y_{k-1}` in
/// compensated form: each value is carried as an unevaluated sum `hi + lo`.
struct Recurrence<'a, T> {
    x: &'a T,
    x_lo: &'a T,
    prev: (T, T),
    cur: (T, T),
}

impl<'a, T: Real> Recurrence<'a, T> {
    fn new((x, x_lo): (&'a T, &'a T), y0: T, y1: T) -> Self {
        Self {
            x,
            x_lo,
            prev: (y0, T::zero()),
            cur: (y1, T::zero()),
        }
    }

    fn step(&mut self, a: &T) -> T {
        let (ch, cl) = self.cur.clone();
        let (ph, pl) = self.prev.clone();
        let (m1, e1) = self.x.two_prod(&ch);
        let (m2, e2) = a.two_prod(&ch);
        let (s1, e3) = two_sum(m1, -ph);
        let (s2, e4) = two_sum(s1, m2);
        let low = ((e1 + e2) + (e3 + e4))
            + (self.x_lo.clone() * ch + (self.x.clone() + a.clone()) * cl - pl);
        let next = two_sum(s2, low);
        self.prev = std::mem::replace(&mut self.cur, next);
        self.cur.0.clone()
    }
}

/// `y_0 = 0, y_1 = 1` driven by `a[shift..]`, returning `len` values.
fn compensated_recurrence<T: Real>(x: (&T, &T), a: &[T], shift: usize, len: usize) -> Vec<T> {
    let mut r = Recurrence::new(x, T::zero(), T::one());
    let mut out = vec![T::zero(), T::one()];
    for ak in &a[shift..] {
        if out.len() == len {
            break;
        }
        out.push(r.step(ak));
    }
    out
}

/// `sin(k theta) / sin(theta)`.
pub fn chebyshev_closed_form<T: Real>(k: u64, theta: &T) -> T {
    (T::from_u64(k) * theta.clone()).sin() / theta.sin()
}

/// `|sin(theta) p_n - |phi_n| sin(n theta - arg phi_n)|` for `1 <= n <= N+1`.
///
/// NaN when `phi_n = 0`, where the argument is undefined.
pub fn nevai_residual<T: Real>(run: &RecurrenceRun<T>, ts: &TraceSequence<T>, n: usize) -> T {
    assert!(n >= 1 && n <= ts.n + 1, "n = {n} outside 1..={}", ts.n + 1);
    let phi = run.phi_n(n);
    let modulus = phi.re.hypot(&phi.im);
    if modulus.is_zero() {
        return T::from_f64(f64::NAN);
    }
    let arg = phi.im.atan2(&phi.re);
    let lhs = ts.theta.sin() * run.p[n].clone();
    let rhs = modulus * (T::from_u64(n as u64) * ts.theta.clone() - arg).sin();
    (lhs - rhs).abs()
}

/// The contract bound `n * 10^3 * u` for [`nevai_residual`].
pub fn nevai_tolerance<T: Real>(n: usize) -> f64 {
    n as f64 * 1e3 * T::unit_roundoff()
}

/// Worst ratio `nevai_residual(n) / nevai_tolerance(n)` over `1..=N+1`.
pub fn nevai_sweep<T: Real>(run: &RecurrenceRun<T>, ts: &TraceSequence<T>) -> f64 {
    (1..=ts.n + 1)
        .map(|n| nevai_residual(run, ts, n).to_f64() / nevai_tolerance::<T>(n))
        .fold(0.0, f64::max)
}

/// Outcome of comparing explicit products `F_n` with the recurrence entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixEntriesCheck {
    /// `max_n max_entry |F_n - predicted_n|`
    pub max_deviation: f64,
    /// `max_n ||F_n||` (largest entry modulus)
    pub max_norm: f64,
    /// `N * 10^2 * u * max_norm`
    pub bound: f64,
}

impl MatrixEntriesCheck {
    pub fn relative(&self) -> f64 {
        self.max_deviation / self.max_norm.max(1.0)
    }

    pub fn within_bound(&self) -> bool {
        self.max_deviation <= self.bound
    }
}

/// Multiplies out `F_n` for `n = 1..N` and compares every partial product
/// with `((p_{n+1} - p_n, q_n - q_{n+1}), (-p_n, q_n))`.
pub fn matrix_entries_check<T: Real>(
    run: &RecurrenceRun<T>,
    seq: &EpsilonSequence<T>,
) -> Result<MatrixEntriesCheck> {
    let n = seq.n();
    if run.n != n {
        return Err(Error::InvalidParameter {
            name: "run",
            reason: format!("run has N = {}, sequence has N = {n}", run.n),
        });
    }
    let mut product = MoebiusMap::identity();
    let mut max_dev = T::zero();
    let mut max_norm = T::zero();
    for (i, eps) in seq.eps().iter().enumerate() {
        product = MoebiusMap::from_epsilon(eps.clone())?.compose(&product);
        let predicted = run.predicted_matrix(i + 1);
        max_dev = max_dev.max_of(product.max_entry_distance(&predicted));
        max_norm = max_norm.max_of(product.max_norm());
    }
    let max_norm = max_norm.to_f64();
    Ok(MatrixEntriesCheck {
        max_deviation: max_dev.to_f64(),
        max_norm,
        bound: n as f64 * 1e2 * T::unit_roundoff() * max_norm,
    })
}

/// `(|p_N|, |p_{N+1} + 1|, |p~_N|, |p~_{N-1} - 1|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropositionBounds {
    pub pn_abs: f64,
    pub pn1_plus1_abs: f64,
    pub ptilde_n_abs: f64,
    pub ptilde_n1_minus1_abs: f64,
}

impl PropositionBounds {
    pub fn max(&self) -> f64 {
        self.pn_abs
            .max(self.pn1_plus1_abs)
            .max(self.ptilde_n_abs)
            .max(self.ptilde_n1_minus1_abs)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.pn_abs,
            self.pn1_plus1_abs,
            self.ptilde_n_abs,
            self.ptilde_n1_minus1_abs,
        ]
    }
}

pub fn proposition_bounds<T: Real>(run: &RecurrenceRun<T>) -> PropositionBounds {
    let n = run.n;
    let one = T::one();
    PropositionBounds {
        pn_abs: run.p[n].abs().to_f64(),
        pn1_plus1_abs: (run.p[n + 1].clone() + one.clone()).abs().to_f64(),
        ptilde_n_abs: run.ptilde[n].abs().to_f64(),
        ptilde_n1_minus1_abs: (run.ptilde[n - 1].clone() - one).abs().to_f64(),
    }
}

/// Worst relative residual of `q_k = p_k - p~_{k-1}` over `1 <= k <= N+1`,
/// relative to `max(|p_k|, |p~_{k-1}|, 1)`.
pub fn shift_identity_residual<T: Real>(run: &RecurrenceRun<T>) -> f64 {
    (1..=run.n + 1)
        .map(|k| {
            let lhs = run.q[k].clone();
            let rhs = run.p[k].clone() - run.ptilde[k - 1].clone();
            let scale = run.p[k].abs().max_of(run.ptilde[k - 1].abs()).max_of(T::one());
            ((lhs - rhs).abs() / scale).to_f64()
        })
        .fold(0.0, f64::max)
}

/// Worst relative residual of `p_{k+1} q_k - p_k q_{k+1} = 1` over `0 <= k <= N`,
/// relative to `|p_{k+1} q_k| + |p_k q_{k+1}|`.
pub fn wronskian_residual<T: Real>(run: &RecurrenceRun<T>) -> f64 {
    (0..=run.n)
        .map(|k| {
            let left = run.p[k + 1].clone() * run.q[k].clone();
            let right = run.p[k].clone() * run.q[k + 1].clone();
            let scale = left.abs() + right.abs();
            ((left - right - T::one()).abs() / scale).to_f64()
        })
        .fold(0.0, f64::max)
}

/// `max_{1 <= i <= N+1} |p_i - U_i|`.
pub fn max_deviation_from_chebyshev<T: Real>(run: &RecurrenceRun<T>) -> f64 {
    (1..=run.n + 1)
        .map(|i| (run.p[i].clone() - run.u[i].clone()).abs().to_f64())
        .fold(0.0, f64::max)
}

/// Uniform band estimate: with `C = N^3 max|a_k|` and `C/N^3 <= 1/(2N^2)`,
/// `|p_i - U_i| <= 2C` for `1 <= i <= N+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEstimate {
    pub c: f64,
    pub hypothesis_holds: bool,
    pub max_deviation: f64,
    pub bound: f64,
}

impl BandEstimate {
    pub fn holds(&self) -> bool {
        !self.hypothesis_holds || self.max_deviation <= self.bound
    }
}

pub fn band_estimate<T: Real>(run: &RecurrenceRun<T>, ts: &TraceSequence<T>) -> BandEstimate {
    let n = ts.n as f64;
    let max_a = ts.a.iter().map(|a| a.abs().to_f64()).fold(0.0, f64::max);
    let c = n.powi(3) * max_a;
    BandEstimate {
        c,
        hypothesis_holds: max_a <= 1.0 / (2.0 * n * n),
        max_deviation: max_deviation_from_chebyshev(run),
        bound: 2.0 * c,
    }
}

/// Partial-sum estimate: `|p_n - U_n| <= eps_m` for `n <= m`, with
/// `eps_m = sum_{j<m} |a_j p_j| / sin(theta)`, checked for every `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialSumEstimate {
    /// Largest `|p_n - U_n| - eps_n` over `n`; `<= 0` up to roundoff when the estimate holds.
    pub worst_excess: f64,
    /// `eps_{N+1}`.
    pub eps_total: f64,
    /// `max_n |p_n - U_n|`.
    pub max_deviation: f64,
}

pub fn partial_sum_estimate<T: Real>(
    run: &RecurrenceRun<T>,
    ts: &TraceSequence<T>,
) -> PartialSumEstimate {
    let sin_theta = ts.theta.sin();
    let mut acc = CompensatedSum::new();
    let mut worst = f64::NEG_INFINITY;
    let mut max_dev = 0.0f64;
    let mut eps_m = 0.0;
    for m in 1..=ts.n + 1 {
        if m >= 2 {
            acc.add((ts.a[m - 2].clone() * run.p[m - 1].clone()).abs());
        }
        eps_m = (acc.value() / sin_theta.clone()).to_f64();
        let dev = (run.p[m].clone() - run.u[m].clone()).abs().to_f64();
        max_dev = max_dev.max(dev);
        worst = worst.max(dev - eps_m);
    }
    PartialSumEstimate {
        worst_excess: worst,
        eps_total: eps_m,
        max_deviation: max_dev,
    }
}
