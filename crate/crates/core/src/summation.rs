//! Compensated summation in a fixed, caller-defined order.

use num_complex::Complex;

use crate::real::Real;

/// Neumaier's variant of Kahan summation: error-free `TwoSum` per term, the
/// rounding errors accumulated separately and added back once at the end.
///
/// The result depends only on the order in which terms are pushed.
#[derive(Debug, Clone)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    pub fn add(&mut self, value: T) {
        let t = self.sum.clone() + value.clone();
        let err = if self.sum.clone().abs() >= value.clone().abs() {
            (self.sum.clone() - t.clone()) + value
        } else {
            (value - t.clone()) + self.sum.clone()
        };
        self.compensation = self.compensation.clone() + err;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum.clone() + self.compensation.clone()
    }
}

impl<T: Real> Extend<T> for CompensatedSum<T> {
    fn extend<I: IntoIterator<Item = T>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Sums `values` in iteration order.
pub fn compensated_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut acc = CompensatedSum::new();
    acc.extend(values);
    acc.value()
}

/// Componentwise compensated sum of complex terms.
#[derive(Debug, Clone)]
pub struct CompensatedComplexSum<T> {
    re: CompensatedSum<T>,
    im: CompensatedSum<T>,
}

impl<T: Real> Default for CompensatedComplexSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> CompensatedComplexSum<T> {
    pub fn new() -> Self {
        Self {
            re: CompensatedSum::new(),
            im: CompensatedSum::new(),
        }
    }

    pub fn add(&mut self, value: Complex<T>) {
        self.re.add(value.re);
        self.im.add(value.im);
    }

    pub fn value(&self) -> Complex<T> {
        Complex::new(self.re.value(), self.im.value())
    }
}
