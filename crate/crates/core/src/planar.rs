//! Skew products `(z, w) -> (z/(1-z) + s w, g(w))` with `g(w) = w - w^2 + w^3`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moebius::MoebiusMap;
use crate::sequences::{fmt_real, generate, Family};

/// Orbits leaving `|w| <= 10` are treated as escaping.
pub const ESCAPE_RADIUS: f64 = 10.0;
/// An orbit entering `|w| < 1e-3` with `Re(1/w) > 0` is in the attracting petal.
pub const PETAL_RADIUS: f64 = 1e-3;
/// Iteration budget for the basin check in [`corollary_experiment`].
pub const BASIN_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarMap {
    pub coupling: f64,
}

impl PlanarMap {
    pub fn new(coupling: f64) -> Result<Self> {
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::InvalidParameter {
                name: "coupling",
                reason: format!("must be positive and finite, got {coupling}"),
            });
        }
        Ok(Self { coupling })
    }

    /// Coupling `pi^2/4`.
    pub fn h() -> Self {
        Self { coupling: PI * PI / 4.0 }
    }

    /// Coupling `pi^2/8`.
    pub fn l() -> Self {
        Self { coupling: PI * PI / 8.0 }
    }

    /// Fiber map `z -> z/(1-z) + coupling * w`.
    pub fn fiber(&self, w: Complex64) -> Result<MoebiusMap<f64>> {
        MoebiusMap::from_eps_squared(w * self.coupling)
    }
}

pub fn g(w: Complex64) -> Complex64 {
    w - w * w + w * w * w
}

/// `g^k(w)`; fails once an iterate leaves `|w| <= 10`.
pub fn g_iterate(w: Complex64, k: usize) -> Result<Complex64> {
    let mut w = w;
    for step in 1..=k {
        w = g(w);
        if !(w.norm() <= ESCAPE_RADIUS) {
            return Err(Error::Divergence {
                step,
                modulus: w.norm(),
            });
        }
    }
    Ok(w)
}

pub fn planar_apply(map: &PlanarMap, z: Complex64, w: Complex64) -> Result<(Complex64, Complex64)> {
    Ok((map.fiber(w)?.apply(&z)?, g(w)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasinStatus {
    /// The orbit entered the attracting petal.
    Inside,
    /// `w = 0` itself: the parabolic point, on the boundary of the basin.
    FixedPoint,
    /// The orbit left `|w| <= 10`.
    Outside,
}

impl BasinStatus {
    pub fn admits(self) -> bool {
        self != BasinStatus::Outside
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BasinStatus::Inside => "inside",
            BasinStatus::FixedPoint => "fixed_point",
            BasinStatus::Outside => "outside",
        }
    }
}

/// Heuristic membership in the parabolic basin of `g`.
pub fn basin_test(w: Complex64, max_iter: usize) -> Result<BasinStatus> {
    if max_iter < 100 {
        return Err(Error::InvalidParameter {
            name: "max_iter",
            reason: format!("must be at least 100, got {max_iter}"),
        });
    }
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::NonFinite("w"));
    }
    if w == Complex64::new(0.0, 0.0) {
        return Ok(BasinStatus::FixedPoint);
    }
    let mut wj = w;
    for _ in 0..=max_iter {
        if wj.norm() < PETAL_RADIUS && wj.norm() > 0.0 && wj.inv().re > 0.0 {
            return Ok(BasinStatus::Inside);
        }
        if !(wj.norm() <= ESCAPE_RADIUS) {
            return Ok(BasinStatus::Outside);
        }
        wj = g(wj);
    }
    Err(Error::Indeterminate {
        re: w.re,
        im: w.im,
        max_iter,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarOrbitReport {
    pub coupling: f64,
    pub z: [f64; 2],
    pub w: [f64; 2],
    pub multiplier: usize,
    pub basin: BasinStatus,
    pub n_values: Vec<usize>,
    pub pre_iterates: Vec<usize>,
    pub orbit_lens: Vec<usize>,
    pub dev_z: Vec<f64>,
    pub dev_w: Vec<f64>,
    pub deviations: Vec<f64>,
}

impl PlanarOrbitReport {
    /// Strictly decreasing in n.
    pub fn strictly_decreasing(&self) -> bool {
        self.deviations.windows(2).all(|d| d[1] < d[0])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,pre_iterates,orbit_len,dev_z,dev_w,dev_max\n");
        for i in 0..self.n_values.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.n_values[i],
                self.pre_iterates[i],
                self.orbit_lens[i],
                fmt_real(self.dev_z[i]),
                fmt_real(self.dev_w[i]),
                fmt_real(self.deviations[i])
            ));
        }
        out
    }
}

fn check_multiplier(multiplier: usize) -> Result<()> {
    if multiplier == 0 {
        return Err(Error::InvalidParameter {
            name: "multiplier",
            reason: "must be positive".into(),
        });
    }
    Ok(())
}

/// For each `n`: pre-iterate `w` by `g^(m n^2)`, apply the skew product
/// `m (2n + 1)` times from `(z, w_pre)` and measure the distance to `(z, 0)`.
///
/// `m = 1` is the H schedule `(2n+1, n^2)`, `m = 2` the L schedule `(4n+2, 2n^2)`.
pub fn corollary_experiment(
    map: &PlanarMap,
    z: Complex64,
    w: Complex64,
    n_values: &[usize],
    multiplier: usize,
) -> Result<PlanarOrbitReport> {
    check_multiplier(multiplier)?;
    let basin = basin_test(w, BASIN_MAX_ITER)?;
    if !basin.admits() {
        return Err(Error::NotInBasin { re: w.re, im: w.im });
    }
    let mut report = PlanarOrbitReport {
        coupling: map.coupling,
        z: [z.re, z.im],
        w: [w.re, w.im],
        multiplier,
        basin,
        n_values: n_values.to_vec(),
        pre_iterates: Vec::new(),
        orbit_lens: Vec::new(),
        dev_z: Vec::new(),
        dev_w: Vec::new(),
        deviations: Vec::new(),
    };
    for &n in n_values {
        let pre = multiplier * n * n;
        let len = multiplier * (2 * n + 1);
        let (mut zj, mut wj) = (z, g_iterate(w, pre)?);
        for _ in 0..len {
            (zj, wj) = planar_apply(map, zj, wj)?;
        }
        let (dz, dw) = ((zj - z).norm(), wj.norm());
        report.pre_iterates.push(pre);
        report.orbit_lens.push(len);
        report.dev_z.push(dz);
        report.dev_w.push(dw);
        report.deviations.push(dz.max(dw));
    }
    Ok(report)
}

/// `eps_k = sqrt(coupling * w_{k-1})` along the orbit used by
/// [`corollary_experiment`] for one `n`, for `k = 1..m(2n+1)`.
pub fn orbit_epsilons(map: &PlanarMap, w: f64, n: usize, multiplier: usize) -> Result<Vec<f64>> {
    check_multiplier(multiplier)?;
    if !(w > 0.0) {
        return Err(Error::InvalidParameter {
            name: "w",
            reason: format!("must be real and positive, got {w}"),
        });
    }
    let mut wj = g_iterate(Complex64::new(w, 0.0), multiplier * n * n)?.re;
    let mut out = Vec::with_capacity(multiplier * (2 * n + 1));
    for _ in 0..multiplier * (2 * n + 1) {
        out.push((map.coupling * wj).sqrt());
        wj = g(Complex64::new(wj, 0.0)).re;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberIdentification {
    pub n: usize,
    /// `max_k |eps_k(orbit) - eps_k(closed form)|`
    pub max_dev: f64,
    /// `n^3 * max_dev`
    pub scaled: f64,
}

/// Compares the orbit's fiber perturbations with the closed-form family of
/// the same length: Example 1 with `m = n` for `multiplier = 1`, Example 2
/// with `m = n` for `multiplier = 2`.
pub fn fiber_identification(map: &PlanarMap, w: f64, n: usize, multiplier: usize) -> Result<FiberIdentification> {
    let family = match multiplier {
        1 => Family::Example1,
        2 => Family::Example2,
        _ => {
            return Err(Error::InvalidParameter {
                name: "multiplier",
                reason: "closed forms exist for 1 and 2 only".into(),
            })
        }
    };
    let orbit = orbit_epsilons(map, w, n, multiplier)?;
    let closed = generate::<f64>(&family, orbit.len())?;
    let max_dev = orbit
        .iter()
        .zip(closed.eps())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(FiberIdentification {
        n,
        max_dev,
        scaled: (n as f64).powi(3) * max_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn g_basics() {
        assert_eq!(g(c(0.0, 0.0)), c(0.0, 0.0));
        assert!((g(c(0.05, 0.0)).re - 0.047625).abs() < 1e-17);
        assert_eq!(g_iterate(c(0.0, 0.0), 1000).unwrap(), c(0.0, 0.0));
        let w = g_iterate(c(0.05, 0.0), 400).unwrap();
        assert!((0.8..=1.2).contains(&(400.0 * w.re)));
    }

    #[test]
    fn w_decay_like_one_over_k() {
        for k in [1000usize, 5000, 20000] {
            let kw = k as f64 * g_iterate(c(0.05, 0.0), k).unwrap().re;
            assert!((0.9..=1.1).contains(&kw), "k = {k}: {kw}");
        }
    }

    #[test]
    fn divergence_is_reported() {
        assert!(matches!(g_iterate(c(-2.0, 0.0), 1), Err(Error::Divergence { step: 1, .. })));
    }

    #[test]
    fn apply_examples() {
        let h = PlanarMap::h();
        assert_eq!(planar_apply(&h, c(0.0, 0.0), c(0.0, 0.0)).unwrap(), (c(0.0, 0.0), c(0.0, 0.0)));
        let (z, w) = planar_apply(&h, c(0.0, 0.0), c(0.05, 0.0)).unwrap();
        assert!((z.re - PI * PI / 4.0 * 0.05).abs() < 1e-16);
        assert_eq!(w, g(c(0.05, 0.0)));
        let (z, _) = planar_apply(&h, c(0.1, 0.0), c(0.05, 0.0)).unwrap();
        assert!((z.re - (0.1 / 0.9 + PI * PI / 4.0 * 0.05)).abs() < 1e-15);
        assert!(matches!(
            planar_apply(&h, c(1.0, 0.0), c(0.05, 0.0)),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn fiber_is_the_epsilon_factor() {
        for map in [PlanarMap::h(), PlanarMap::l()] {
            for &w in &[0.05, 0.01, 1e-4] {
                for z in [c(0.1, 0.0), c(-0.3, 0.2), c(0.0, -0.45)] {
                    let a = planar_apply(&map, z, c(w, 0.0)).unwrap().0;
                    let b = MoebiusMap::from_epsilon((map.coupling * w).sqrt()).unwrap().apply(&z).unwrap();
                    assert!((a - b).norm() < 4.0 * f64::EPSILON, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn basin_examples() {
        assert_eq!(basin_test(c(0.05, 0.0), 1000).unwrap(), BasinStatus::Inside);
        assert_eq!(basin_test(c(-2.0, 0.0), 1000).unwrap(), BasinStatus::Outside);
        assert_eq!(basin_test(c(0.0, 0.0), 100).unwrap(), BasinStatus::FixedPoint);
        assert!(basin_test(c(0.05, 0.0), 99).is_err());
        // The repelling fixed point g(1) = 1 never decides.
        assert!(matches!(basin_test(c(1.0, 0.0), 200), Err(Error::Indeterminate { .. })));
    }

    #[test]
    fn trivial_orbit() {
        let r = corollary_experiment(&PlanarMap::h(), c(0.0, 0.0), c(0.0, 0.0), &[5, 10], 1).unwrap();
        assert_eq!(r.basin, BasinStatus::FixedPoint);
        assert!(r.deviations.iter().all(|&d| d == 0.0));
        assert_eq!(r.pre_iterates, vec![25, 100]);
        assert_eq!(r.orbit_lens, vec![11, 21]);
    }

    #[test]
    fn schedules() {
        let r = corollary_experiment(&PlanarMap::l(), c(0.1, 0.0), c(0.05, 0.0), &[5], 2).unwrap();
        assert_eq!((r.pre_iterates[0], r.orbit_lens[0]), (50, 22));
        assert!(corollary_experiment(&PlanarMap::h(), c(0.1, 0.0), c(-2.0, 0.0), &[5], 1).is_err());
    }

    #[test]
    fn orbit_epsilons_start_near_example1() {
        let n = 40;
        let eps = orbit_epsilons(&PlanarMap::h(), 0.05, n, 1).unwrap();
        assert_eq!(eps.len(), 81);
        let fib = fiber_identification(&PlanarMap::h(), 0.05, n, 1).unwrap();
        assert!(fib.max_dev < 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PlanarMap::new(0.0).is_err());
        assert!(PlanarMap::new(f64::NAN).is_err());
        assert!(orbit_epsilons(&PlanarMap::h(), -0.1, 5, 1).is_err());
        assert!(fiber_identification(&PlanarMap::h(), 0.05, 5, 3).is_err());
    }
}
