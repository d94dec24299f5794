//! Dense real polynomials, coefficients stored lowest degree first.

use std::ops::{Mul, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![1.0] }
    }

    /// `zeta - root`.
    pub fn linear(root: f64) -> Self {
        Poly {
            coeffs: vec![-root, 1.0],
        }
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Poly::one(), |acc, &r| &acc * &Poly::linear(r))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, zeta: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * zeta + c)
    }

    /// `sum |c_i| |zeta|^i`, the magnitude that bounds evaluation rounding.
    pub fn eval_abs(&self, zeta: f64) -> f64 {
        let z = zeta.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c.abs())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Largest coefficient-wise absolute difference, padding the shorter one with zeros.
    pub fn max_coeff_diff(&self, other: &Poly) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len)
            .map(|i| {
                let x = self.coeffs.get(i).copied().unwrap_or(0.0);
                let y = other.coeffs.get(i).copied().unwrap_or(0.0);
                (x - y).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            for (j, y) in rhs.coeffs.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Poly::new(out)
    }
}

impl Sub for &Poly {
    type Output = Poly;

    fn sub(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let out = (0..len)
            .map(|i| self.coeffs.get(i).copied().unwrap_or(0.0) - rhs.coeffs.get(i).copied().unwrap_or(0.0))
            .collect();
        Poly::new(out)
    }
}

/// Product of `(zeta - root)` over all roots, evaluated directly.
pub fn eval_from_roots(roots: &[f64], zeta: f64) -> f64 {
    roots.iter().map(|r| zeta - r).product()
}
