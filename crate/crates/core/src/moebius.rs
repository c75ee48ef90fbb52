//! Moebius maps as unimodular 2x2 complex matrices.
//!
//! `MoebiusMap { a, b, c, d }` acts as `z -> (a z + b) / (c z + d)`. Products
//! of the factors of `z/(1-z) + eps^2` are written `(A C; B D)` in much of the
//! literature on this map; here that is `a = A, b = C, c = B, d = D`.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Relative size of `|c z + d|` below which `z` counts as a pole.
pub const POLE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusMap<T> {
    pub a: Complex<T>,
    pub b: Complex<T>,
    pub c: Complex<T>,
    pub d: Complex<T>,
}

fn cabs<T: Real>(z: &Complex<T>) -> T {
    z.re.hypot(&z.im)
}

fn cfinite<T: Real>(z: &Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

impl<T: Real> MoebiusMap<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Result<Self> {
        if ![&a, &b, &c, &d].iter().all(|z| cfinite(z)) {
            return Err(Error::NonFinite("matrix entry"));
        }
        if a.is_zero() && b.is_zero() && c.is_zero() && d.is_zero() {
            return Err(Error::Degenerate);
        }
        Ok(Self { a, b, c, d })
    }

    pub fn from_real(a: T, b: T, c: T, d: T) -> Result<Self> {
        Self::new(
            Complex::new(a, T::zero()),
            Complex::new(b, T::zero()),
            Complex::new(c, T::zero()),
            Complex::new(d, T::zero()),
        )
    }

    pub fn identity() -> Self {
        Self {
            a: Complex::one(),
            b: Complex::zero(),
            c: Complex::zero(),
            d: Complex::one(),
        }
    }

    /// The factor of `z -> z/(1-z) + eps^2`, i.e. `((1 - eps^2, eps^2), (-1, 1))`.
    ///
    /// The diagonal is built from the trace `t = 2 - eps^2` as `a = t - 1`,
    /// `b = 2 - t`. Both subtractions are exact in binary floating point, so
    /// the stored matrix has trace exactly `t` and determinant exactly 1,
    /// and agrees with the three-term recurrence driven by the same `t`.
    pub fn from_epsilon(eps: T) -> Result<Self> {
        if !eps.is_finite() {
            return Err(Error::NonFinite("epsilon"));
        }
        if eps < T::zero() {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: format!("must be >= 0, got {:?}", eps.to_f64()),
            });
        }
        let one = T::one();
        let two = T::from_u64(2);
        let t = two.clone() - eps.clone() * eps;
        let a = t.clone() - one.clone();
        let b = two - t;
        Self::from_real(a, b, -one.clone(), one)
    }

    /// Fiber map `z -> z/(1-z) + e2` for an arbitrary complex shift `e2`.
    pub fn from_eps_squared(e2: Complex<T>) -> Result<Self> {
        if !cfinite(&e2) {
            return Err(Error::NonFinite("eps^2"));
        }
        let one = Complex::<T>::one();
        Self::new(one.clone() - e2.clone(), e2, -one.clone(), one)
    }

    /// Matrix product `self * f`, the map `self ∘ f`.
    pub fn compose(&self, f: &Self) -> Self {
        let g = self;
        Self {
            a: g.a.clone() * f.a.clone() + g.b.clone() * f.c.clone(),
            b: g.a.clone() * f.b.clone() + g.b.clone() * f.d.clone(),
            c: g.c.clone() * f.a.clone() + g.d.clone() * f.c.clone(),
            d: g.c.clone() * f.b.clone() + g.d.clone() * f.d.clone(),
        }
    }

    pub fn apply(&self, z: &Complex<T>) -> Result<Complex<T>> {
        let cz = self.c.clone() * z.clone();
        let den = cz.clone() + self.d.clone();
        let scale = cabs(&cz) + cabs(&self.d) + T::one();
        let den_abs = cabs(&den);
        if den_abs < T::from_f64(POLE_THRESHOLD) * scale {
            return Err(Error::Pole {
                re: z.re.to_f64(),
                im: z.im.to_f64(),
                denominator: den_abs.to_f64(),
            });
        }
        Ok((self.a.clone() * z.clone() + self.b.clone()) / den)
    }

    /// Adjugate `((d, -b), (-c, a))`; the group inverse for unimodular maps.
    pub fn inverse(&self) -> Self {
        Self {
            a: self.d.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
            d: self.a.clone(),
        }
    }

    pub fn determinant(&self) -> Complex<T> {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    pub fn trace(&self) -> Complex<T> {
        self.a.clone() + self.d.clone()
    }

    pub fn scale(&self, s: &Complex<T>) -> Self {
        Self {
            a: self.a.clone() * s.clone(),
            b: self.b.clone() * s.clone(),
            c: self.c.clone() * s.clone(),
            d: self.d.clone() * s.clone(),
        }
    }

    pub fn entries(&self) -> [&Complex<T>; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> T {
        self.entries()
            .into_iter()
            .map(cabs)
            .fold(T::zero(), T::max_of)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_entry_distance(&self, other: &Self) -> T {
        self.entries()
            .into_iter()
            .zip(other.entries())
            .map(|(x, y)| cabs(&(x.clone() - y.clone())))
            .fold(T::zero(), T::max_of)
    }

    /// Entrywise distance to the nearer of `I` and `-I`.
    pub fn distance_to_scalar_identity(&self) -> T {
        let id = Self::identity();
        let minus = id.scale(&-Complex::<T>::one());
        let p = self.max_entry_distance(&id);
        let m = self.max_entry_distance(&minus);
        if p < m {
            p
        } else {
            m
        }
    }

    pub fn to_f64(&self) -> MoebiusMap<f64> {
        let cv = |z: &Complex<T>| Complex::new(z.re.to_f64(), z.im.to_f64());
        MoebiusMap {
            a: cv(&self.a),
            b: cv(&self.b),
            c: cv(&self.c),
            d: cv(&self.d),
        }
    }
}

/// Left fold `f_n ∘ ... ∘ f_1` of `factors` given in application order.
pub fn compose_left_fold<T: Real>(factors: &[MoebiusMap<T>]) -> MoebiusMap<T> {
    factors
        .iter()
        .fold(MoebiusMap::identity(), |acc, f| f.compose(&acc))
}

/// Same product as [`compose_left_fold`], evaluated as a balanced tree.
pub fn compose_pairwise<T: Real>(factors: &[MoebiusMap<T>]) -> MoebiusMap<T> {
    match factors.len() {
        0 => MoebiusMap::identity(),
        1 => factors[0].clone(),
        n => {
            let (first, last) = factors.split_at(n / 2);
            compose_pairwise(last).compose(&compose_pairwise(first))
        }
    }
}

/// `max_z |target(z) - m(z)|` over `grid`.
pub fn map_distance<T: Real>(
    m: &MoebiusMap<T>,
    target: &MoebiusMap<T>,
    grid: &[Complex<T>],
) -> Result<T> {
    let mut worst = T::zero();
    for z in grid {
        let diff = m.apply(z)? - target.apply(z)?;
        worst = worst.max_of(cabs(&diff));
    }
    Ok(worst)
}

/// `max_z |m(z) - z|` over `grid`.
pub fn map_distance_to_identity<T: Real>(m: &MoebiusMap<T>, grid: &[Complex<T>]) -> Result<T> {
    let mut worst = T::zero();
    for z in grid {
        let diff = m.apply(z)? - z.clone();
        worst = worst.max_of(cabs(&diff));
    }
    Ok(worst)
}

/// Uniform `points_per_side`² grid on the square circumscribing the closed disk
/// `|z - center| <= radius`, restricted to the disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center_re: f64,
    pub center_im: f64,
    pub radius: f64,
    pub points_per_side: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            center_re: 0.0,
            center_im: 0.0,
            radius: 0.5,
            points_per_side: 10,
        }
    }
}

impl GridSpec {
    pub fn points_f64(&self) -> Vec<Complex<f64>> {
        let n = self.points_per_side;
        if n == 0 || !(self.radius >= 0.0) {
            return Vec::new();
        }
        let coord = |i: usize| {
            if n == 1 {
                0.0
            } else {
                -self.radius + 2.0 * self.radius * i as f64 / (n - 1) as f64
            }
        };
        let r2 = self.radius * self.radius * (1.0 + 1e-12);
        let mut pts = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (coord(i), coord(j));
                if x * x + y * y <= r2 {
                    pts.push(Complex::new(self.center_re + x, self.center_im + y));
                }
            }
        }
        pts
    }

    pub fn points<T: Real>(&self) -> Vec<Complex<T>> {
        self.points_f64()
            .into_iter()
            .map(|z| Complex::new(T::from_f64(z.re), T::from_f64(z.im)))
            .collect()
    }

    pub fn describe(&self) -> String {
        format!(
            "disk center={}{:+}i radius={} points_per_side={}",
            self.center_re, self.center_im, self.radius, self.points_per_side
        )
    }
}
