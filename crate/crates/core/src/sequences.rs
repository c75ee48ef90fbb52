//! Perturbation sequences `eps_1..eps_N` and the summability/band checks on
//! their trace deviations.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moebius::MoebiusMap;
use crate::real::{Ext, Precision, Real};
use crate::recurrences::TraceSequence;
use crate::summation::CompensatedSum;

/// Default threshold for both condition verdicts.
///
/// The band statistic `N^3 max|a_k|` tends to `2 pi^2` for Example 1, the
/// counterexample and the linear family with `A = -pi`, and to `4 pi^2`
/// for Example 2, so the threshold has to sit above `4 pi^2 ≈ 39.5`.
pub const DEFAULT_A_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `eps_k = pi / (N + offset)`; `offset = 0` is the tuned autonomous case.
    Constant {
        #[serde(default)]
        offset: f64,
    },
    /// `eps_k = pi/N + alpha(k)/N^2` with `alpha(k) = amplitude cos(k pi/N) + offset/N`.
    AlphaForm { amplitude: f64, offset: f64 },
    /// `eps_k = pi / (2 sqrt(m^2 + k))`, `N = 2m + 1`.
    Example1,
    /// `eps_k = pi / (2 sqrt(4m^2 + 2k))`, `N = 4m + 2`.
    Example2,
    /// `eps_k = pi / (N^3 + k)^(1/3)`.
    Example3,
    /// `eps_k = pi/N + a (-1/N^2 + 2k/N^3)`.
    Theorem5Linear { a: f64 },
    /// `eps_k = pi/N + r_k c / N^3` with `r_k` uniform on `[-1, 1]`, seeded.
    Theorem7Band { c: f64, seed: u64 },
    /// `eps_k^2 = 2 - 2cos(pi/(N+1))` for every `k`.
    Counterexample,
    /// Explicit values; N is the length.
    Custom { eps: Vec<f64> },
}

impl Family {
    pub fn kind(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "Constant",
            Family::AlphaForm { .. } => "AlphaForm",
            Family::Example1 => "Example1",
            Family::Example2 => "Example2",
            Family::Example3 => "Example3",
            Family::Theorem5Linear { .. } => "Theorem5Linear",
            Family::Theorem7Band { .. } => "Theorem7Band",
            Family::Counterexample => "Counterexample",
            Family::Custom { .. } => "Custom",
        }
    }

    /// `key=value` pairs of the family parameters, in a fixed order.
    pub fn params(&self) -> Vec<(&'static str, String)> {
        match self {
            Family::Constant { offset } => vec![("offset", fmt_real(*offset))],
            Family::AlphaForm { amplitude, offset } => {
                vec![("amplitude", fmt_real(*amplitude)), ("offset", fmt_real(*offset))]
            }
            Family::Theorem5Linear { a } => vec![("a", fmt_real(*a))],
            Family::Theorem7Band { c, seed } => vec![("c", fmt_real(*c)), ("seed", seed.to_string())],
            Family::Custom { eps } => vec![("len", eps.len().to_string())],
            Family::Example1 | Family::Example2 | Family::Example3 | Family::Counterexample => Vec::new(),
        }
    }

    /// Checks whether the family is defined at this N.
    pub fn check_n(&self, n: usize) -> Result<()> {
        let fail = |constraint| {
            Err(Error::IncompatibleN {
                family: self.kind(),
                constraint,
                n,
            })
        };
        if n < 2 {
            return fail("N >= 2");
        }
        match self {
            Family::Example1 if n % 2 != 1 => fail("N = 2m+1"),
            Family::Example2 if n % 4 != 2 => fail("N = 4m+2"),
            Family::Custom { eps } if eps.len() != n => fail("N equal to the number of custom values"),
            _ => Ok(()),
        }
    }

    /// Smallest admissible N at or above `n`.
    pub fn admissible_n(&self, n: usize) -> usize {
        let n = n.max(2);
        match self {
            Family::Example1 => n | 1,
            Family::Example2 => n + (6 - n % 4) % 4,
            Family::Custom { eps } => eps.len(),
            _ => n,
        }
    }

    /// Admissible doubling schedule starting near `start`.
    pub fn doubling_schedule(&self, start: usize, count: usize) -> Vec<usize> {
        (0..count)
            .map(|i| self.admissible_n(start << i))
            .collect()
    }

    /// Whether `alpha(k) = N^2 (eps_k - pi/N)` is part of the family's definition.
    pub fn has_alpha(&self) -> bool {
        matches!(
            self,
            Family::Constant { .. }
                | Family::AlphaForm { .. }
                | Family::Example1
                | Family::Example2
                | Family::Theorem5Linear { .. }
                | Family::Counterexample
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())?;
        for (k, v) in self.params() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// `eps_1..eps_N` in working precision `T`, tagged with its family.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSequence<T> {
    n: usize,
    eps: Vec<T>,
    family: Family,
}

impl<T: Real> EpsilonSequence<T> {
    pub fn n(&self) -> usize {
        self.n
    }
    /// `eps_1..eps_N` (index 0 holds `eps_1`).
    pub fn eps(&self) -> &[T] {
        &self.eps
    }
    pub fn family(&self) -> &Family {
        &self.family
    }

    /// `alpha(k) = N^2 (eps_k - pi/N)` for `k = 1..N`.
    pub fn alpha(&self) -> Result<Vec<T>> {
        if !self.family.has_alpha() {
            return Err(Error::UnsupportedFamily(self.family.kind()));
        }
        let n = T::from_u64(self.n as u64);
        let base = T::pi() / n.clone();
        let n2 = n.clone() * n;
        Ok(self
            .eps
            .iter()
            .map(|e| n2.clone() * (e.clone() - base.clone()))
            .collect())
    }

    pub fn to_csv(&self) -> String {
        let ts = a_coefficients(self);
        let mut out = String::from("k,eps_k,t_k,a_k\n");
        for k in 1..=self.n {
            out.push_str(&format!(
                "{},{},{},{}\n",
                k,
                fmt_real(self.eps[k - 1].to_f64()),
                fmt_real(ts.t()[k - 1].to_f64()),
                fmt_real(ts.a()[k - 1].to_f64()),
            ));
        }
        out
    }
}

/// Decimal with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn validate_eps<T: Real>(eps: &[T], family: &Family) -> Result<()> {
    let one = T::one();
    for (i, e) in eps.iter().enumerate() {
        if !e.is_finite() {
            return Err(Error::NonFinite("eps_k"));
        }
        if !(*e > T::zero() && *e < one) {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: format!(
                    "{} gives eps_{} = {}, outside (0, 1)",
                    family.kind(),
                    i + 1,
                    e.to_f64()
                ),
            });
        }
    }
    Ok(())
}

/// Builds the sequence defined by `family` at length `n`.
pub fn generate<T: Real>(family: &Family, n: usize) -> Result<EpsilonSequence<T>> {
    family.check_n(n)?;
    let nn = T::from_u64(n as u64);
    let pi = T::pi();
    let base = pi.clone() / nn.clone();
    let n2 = nn.clone() * nn.clone();
    let n3 = n2.clone() * nn.clone();
    let ks = 1..=n as u64;
    let eps: Vec<T> = match family {
        Family::Constant { offset } => {
            if !(offset.is_finite() && (n as f64 + offset) > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "offset",
                    reason: format!("N + offset must be positive, got {}", n as f64 + offset),
                });
            }
            let e = pi / (nn + T::from_f64(*offset));
            vec![e; n]
        }
        Family::AlphaForm { amplitude, offset } => {
            let amp = T::from_f64(*amplitude);
            let shift = T::from_f64(*offset) / nn.clone();
            ks.map(|k| {
                let alpha = amp.clone() * (T::from_u64(k) * base.clone()).cos() + shift.clone();
                base.clone() + alpha / n2.clone()
            })
            .collect()
        }
        Family::Example1 => {
            let m = (n as u64 - 1) / 2;
            let half_pi = pi / T::from_u64(2);
            ks.map(|k| half_pi.clone() / T::from_u64(m * m + k).sqrt()).collect()
        }
        Family::Example2 => {
            let m = (n as u64 - 2) / 4;
            let half_pi = pi / T::from_u64(2);
            ks.map(|k| half_pi.clone() / T::from_u64(4 * m * m + 2 * k).sqrt())
                .collect()
        }
        Family::Example3 => {
            let cube = (n as u64).checked_pow(3).ok_or_else(|| Error::InvalidParameter {
                name: "N",
                reason: "N^3 overflows".into(),
            })?;
            ks.map(|k| pi.clone() / T::from_u64(cube + k).cbrt()).collect()
        }
        Family::Theorem5Linear { a } => {
            let a = T::from_f64(*a);
            ks.map(|k| {
                let slope = -(T::one() / n2.clone()) + T::from_u64(2 * k) / n3.clone();
                base.clone() + a.clone() * slope
            })
            .collect()
        }
        Family::Theorem7Band { c, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let c = T::from_f64(*c);
            ks.map(|_| {
                let r: f64 = rng.gen_range(-1.0..=1.0);
                base.clone() + T::from_f64(r) * c.clone() / n3.clone()
            })
            .collect()
        }
        Family::Counterexample => {
            // 2 - 2cos(x) = (2 sin(x/2))^2 without cancellation.
            let e = T::from_u64(2) * (pi / T::from_u64(2 * (n as u64 + 1))).sin();
            vec![e; n]
        }
        Family::Custom { eps } => eps.iter().map(|&e| T::from_f64(e)).collect(),
    };
    validate_eps(&eps, family)?;
    Ok(EpsilonSequence {
        n,
        eps,
        family: family.clone(),
    })
}

/// Traces `t_k = 2 - eps_k^2` with `a_k = t_k - 2cos(pi/N)`.
///
/// The deviations are evaluated in extended precision from the exact
/// `eps_k` and rounded once. In working precision `a_k ~ N^-3` would lose
/// about `log10(N^3)` digits to cancellation.
pub fn a_coefficients<T: Real>(seq: &EpsilonSequence<T>) -> TraceSequence<T> {
    let (theta, x, x_lo) = TraceSequence::<T>::reference(seq.n);
    let two = Ext::from_u64(2);
    let x_ext = x.to_ext() + x_lo.to_ext();
    let (t, a) = seq
        .eps
        .iter()
        .map(|e| {
            let e = e.to_ext();
            let t = two.clone() - e.clone() * e;
            (T::from_ext(&t), T::from_ext(&(t - x_ext.clone())))
        })
        .unzip();
    TraceSequence::from_parts(t, x, x_lo, theta, a).expect("generated sequences are well formed")
}

/// Traces of the working-precision factor matrices, exactly as
/// [`MoebiusMap::from_epsilon`] rounds them.
///
/// The recurrences driven by these traces describe the computed products,
/// rather than the ideal ones.
pub fn matrix_traces<T: Real>(seq: &EpsilonSequence<T>) -> Result<TraceSequence<T>> {
    let t = seq
        .eps
        .iter()
        .map(|e| Ok(MoebiusMap::from_epsilon(e.clone())?.trace().re))
        .collect::<Result<Vec<T>>>()?;
    TraceSequence::from_traces(t)
}

/// Condition statistics for one sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub family: String,
    pub n: usize,
    pub precision: Precision,
    /// `|sum_k a_k U_k^2|`, `U_k = sin(k pi/N)/sin(pi/N)`.
    pub s: f64,
    /// `N * s`.
    pub s_scaled: f64,
    /// `|sum_k (pi^2/N^2 - eps_k^2) U_k^2|`.
    pub s_eps_form: f64,
    /// `N^3 max_k |a_k|`.
    pub band: f64,
    /// `N^3 max_k |pi^2/N^2 - eps_k^2|`.
    pub band_eps_form: f64,
    /// `max_k N |alpha(k) + alpha(N-k)|`, when the family defines `alpha`.
    pub alpha_pairing: Option<f64>,
    pub a_threshold: f64,
    /// `s_scaled <= a_threshold`.
    pub verdict_s: bool,
    /// `band <= a_threshold`.
    pub verdict_band: bool,
}

impl ConditionReport {
    pub fn to_key_values(&self) -> String {
        let verdict = |b: bool| if b { "PASS" } else { "FAIL" };
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k}={v}\n"));
        kv("family", self.family.clone());
        kv("N", self.n.to_string());
        kv("precision", self.precision.to_string());
        kv("S", fmt_real(self.s));
        kv("S_scaled", fmt_real(self.s_scaled));
        kv("S_eps_form", fmt_real(self.s_eps_form));
        kv("band", fmt_real(self.band));
        kv("band_eps_form", fmt_real(self.band_eps_form));
        kv(
            "alpha_pairing",
            self.alpha_pairing.map_or_else(|| "na".into(), fmt_real),
        );
        kv("A_threshold", fmt_real(self.a_threshold));
        kv("verdict_S", verdict(self.verdict_s).into());
        kv("verdict_band", verdict(self.verdict_band).into());
        out
    }
}

/// `U_k = sin(k pi/N) / sin(pi/N)` for `k = 1..N`.
fn chebyshev_weights<T: Real>(n: usize) -> Vec<T> {
    let theta = T::pi() / T::from_u64(n as u64);
    let s = theta.sin();
    (1..=n as u64)
        .map(|k| (T::from_u64(k) * theta.clone()).sin() / s.clone())
        .collect()
}

pub fn check_conditions<T: Real>(seq: &EpsilonSequence<T>, a_threshold: f64) -> ConditionReport {
    let n = seq.n;
    let ts = a_coefficients(seq);
    let weights = chebyshev_weights::<T>(n);
    let nn = T::from_u64(n as u64);
    let n3 = (n as f64).powi(3);

    let mut s = CompensatedSum::new();
    for (a, u) in ts.a().iter().zip(&weights) {
        s.add(a.clone() * u.clone() * u.clone());
    }
    let s = s.value().abs().to_f64();

    let pi_n2 = {
        let b = T::pi() / nn;
        b.clone() * b
    };
    let eps_form: Vec<T> = seq
        .eps
        .iter()
        .map(|e| pi_n2.clone() - e.clone() * e.clone())
        .collect();
    let mut s_eps = CompensatedSum::new();
    for (d, u) in eps_form.iter().zip(&weights) {
        s_eps.add(d.clone() * u.clone() * u.clone());
    }
    let s_eps_form = s_eps.value().abs().to_f64();

    let max_abs = |v: &[T]| v.iter().map(|x| x.abs().to_f64()).fold(0.0, f64::max);
    let band = n3 * max_abs(ts.a());
    let band_eps_form = n3 * max_abs(&eps_form);
    let s_scaled = n as f64 * s;

    ConditionReport {
        family: seq.family.to_string(),
        n,
        precision: T::PRECISION,
        s,
        s_scaled,
        s_eps_form,
        band,
        band_eps_form,
        alpha_pairing: alpha_pairing(seq).ok(),
        a_threshold,
        verdict_s: s_scaled <= a_threshold,
        verdict_band: band <= a_threshold,
    }
}

/// `max_{1 <= k <= N-1} N |alpha(k) + alpha(N-k)|`.
pub fn alpha_pairing<T: Real>(seq: &EpsilonSequence<T>) -> Result<f64> {
    let alpha = seq.alpha()?;
    let n = seq.n;
    Ok((1..n)
        .map(|k| (alpha[k - 1].clone() + alpha[n - k - 1].clone()).abs().to_f64() * n as f64)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_family() {
        let s = generate::<f64>(&Family::Constant { offset: 0.0 }, 10).unwrap();
        assert!(s.eps().iter().all(|&e| e == PI / 10.0));
    }

    #[test]
    fn example1_endpoints() {
        let s = generate::<f64>(&Family::Example1, 101).unwrap();
        assert!((s.eps()[0] - PI / (2.0 * 2501f64.sqrt())).abs() < 1e-17);
        assert!((s.eps()[100] - PI / (2.0 * 2601f64.sqrt())).abs() < 1e-17);
        assert!((s.eps()[100] - PI / 102.0).abs() < 1e-17);
    }

    #[test]
    fn counterexample_value() {
        let s = generate::<f64>(&Family::Counterexample, 100).unwrap();
        let two = Ext::from_u64(2);
        let e2 = (two.clone() - two * (Ext::pi() / Ext::from_u64(101)).cos()).to_f64();
        assert!(s.eps().iter().all(|e| (e * e - e2).abs() < 4.0 * f64::EPSILON * e2));
        let hi = generate::<Ext>(&Family::Counterexample, 100).unwrap();
        assert!((s.eps()[0] - hi.eps()[0].to_f64()).abs() <= f64::EPSILON * s.eps()[0]);
    }

    #[test]
    fn parity_constraints() {
        assert!(matches!(
            generate::<f64>(&Family::Example1, 100),
            Err(Error::IncompatibleN { constraint: "N = 2m+1", .. })
        ));
        assert!(generate::<f64>(&Family::Example2, 100).is_err());
        assert!(generate::<f64>(&Family::Example2, 102).is_ok());
        assert_eq!(Family::Example2.admissible_n(101), 102);
        assert_eq!(Family::Example2.admissible_n(1001), 1002);
        assert_eq!(Family::Example1.admissible_n(100), 101);
        assert_eq!(Family::Example1.doubling_schedule(100, 4), vec![101, 201, 401, 801]);
        assert_eq!(Family::Example2.doubling_schedule(100, 4), vec![102, 202, 402, 802]);
        assert!(generate::<f64>(&Family::Custom { eps: vec![0.1; 3] }, 4).is_err());
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(generate::<f64>(&Family::Custom { eps: vec![0.1, 1.5] }, 2).is_err());
        assert!(generate::<f64>(&Family::Custom { eps: vec![0.1, 0.0] }, 2).is_err());
        assert!(generate::<f64>(&Family::Constant { offset: 0.0 }, 3).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let fam = Family::Theorem7Band { c: 2.0, seed: 9 };
        let a = generate::<f64>(&fam, 300).unwrap();
        let b = generate::<f64>(&fam, 300).unwrap();
        assert!(a.eps().iter().zip(b.eps()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = generate::<f64>(&Family::Theorem7Band { c: 2.0, seed: 10 }, 300).unwrap();
        assert_ne!(a.eps(), c.eps());
        let n3 = 300f64.powi(3);
        assert!(a.eps().iter().all(|e| (e - PI / 300.0).abs() <= 2.0 / n3 * (1.0 + 1e-9)));
    }

    #[test]
    fn extended_generation_rounds_to_binary64() {
        for fam in [Family::Example1, Family::Example3, Family::Counterexample] {
            let n = fam.admissible_n(301);
            let lo = generate::<f64>(&fam, n).unwrap();
            let hi = generate::<Ext>(&fam, n).unwrap();
            for (x, y) in lo.eps().iter().zip(hi.eps()) {
                assert!((x - y.to_f64()).abs() <= 2.0 * f64::EPSILON * x, "{fam}");
            }
        }
    }

    #[test]
    fn chebyshev_weights_are_symmetric() {
        for n in [7usize, 100, 101] {
            let u = chebyshev_weights::<f64>(n);
            for k in 1..n {
                assert!((u[k - 1] - u[n - k - 1]).abs() <= 1e-12 * u[k - 1].abs().max(1.0));
            }
            assert!(u[n - 1].abs() < 1e-12);
        }
    }

    #[test]
    fn linear_family_pairs_to_zero() {
        let seq = generate::<f64>(&Family::Theorem5Linear { a: -PI }, 201).unwrap();
        assert!(alpha_pairing(&seq).unwrap() < 1e-6);
    }

    #[test]
    fn alpha_form_pairing_equals_twice_offset() {
        let seq = generate::<Ext>(&Family::AlphaForm { amplitude: 1.0, offset: 0.75 }, 100).unwrap();
        assert!((alpha_pairing(&seq).unwrap() - 1.5).abs() < 1e-20);
    }

    #[test]
    fn unsupported_alpha() {
        let seq = generate::<f64>(&Family::Example3, 100).unwrap();
        assert_eq!(alpha_pairing(&seq), Err(Error::UnsupportedFamily("Example3")));
    }

    #[test]
    fn csv_has_fixed_columns_and_precision() {
        let seq = generate::<f64>(&Family::Constant { offset: 0.0 }, 4).unwrap();
        let csv = seq.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k,eps_k,t_k,a_k"));
        let row: Vec<_> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "1");
        assert_eq!(row[1], "7.8539816339744828e-1");
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn report_is_bit_reproducible() {
        let seq = generate::<f64>(&Family::Example3, 700).unwrap();
        let a = check_conditions(&seq, DEFAULT_A_THRESHOLD);
        let b = check_conditions(&seq, DEFAULT_A_THRESHOLD);
        assert_eq!(a.s.to_bits(), b.s.to_bits());
        assert_eq!(a.band.to_bits(), b.band.to_bits());
        assert_eq!(a.to_key_values(), b.to_key_values());
    }

    #[test]
    fn family_serde_round_trip() {
        let fams = vec![
            Family::Constant { offset: 0.5 },
            Family::AlphaForm { amplitude: 1.0, offset: -2.0 },
            Family::Example1,
            Family::Theorem7Band { c: 3.0, seed: 7 },
            Family::Custom { eps: vec![0.1, 0.2] },
        ];
        for f in fams {
            let text = serde_json::to_string(&f).unwrap();
            assert_eq!(f, serde_json::from_str::<Family>(&text).unwrap(), "{text}");
        }
        let parsed: Family = serde_json::from_str(r#"{"name":"constant"}"#).unwrap();
        assert_eq!(parsed, Family::Constant { offset: 0.0 });
    }
}
