//! Truncated formal power series with dense `f64` coefficients.
//!
//! A series of order `N` stores the coefficients of `x^0 ..= x^N`. Binary
//! operations on series of different orders truncate to the smaller order.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("inner series must have zero constant term (found {0})")]
    NonzeroConstant(f64),
    #[error("square root requires constant term 1 (found {0})")]
    NonUnitConstant(f64),
    #[error("reciprocal requires a nonzero constant term")]
    ZeroConstant,
    #[error(
        "reversion requires s(0) = 0 and s'(0) != 0 (found s(0) = {constant}, s'(0) = {linear})"
    )]
    NotInvertible { constant: f64, linear: f64 },
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
}

#[derive(Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TruncatedSeries{:?} + O(x^{})",
            self.coeffs,
            self.order() + 1
        )
    }
}

impl TruncatedSeries {
    /// Builds a series of order `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self, SeriesError> {
        assert!(
            !coeffs.is_empty(),
            "a series needs at least one coefficient"
        );
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(SeriesError::NonFinite { index });
        }
        Ok(Self { coeffs })
    }

    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order + 1],
        }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = value;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(1.0, order)
    }

    /// The series `x`.
    pub fn variable(order: usize) -> Self {
        Self::monomial(1, 1.0, order)
    }

    /// `value · x^power`, truncated to `order`.
    pub fn monomial(power: usize, value: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        if power <= order {
            s.coeffs[power] = value;
        }
        s
    }

    /// Coefficients padded with zeros (or truncated) to `order`.
    pub fn from_slice(coeffs: &[f64], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (dst, &c) in s.coeffs.iter_mut().zip(coeffs) {
            *dst = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^n`; zero beyond the stored order.
    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Same coefficients at a different order, dropping or zero-filling the tail.
    pub fn with_order(&self, order: usize) -> Self {
        Self::from_slice(&self.coeffs, order)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let order = self.order().min(other.order());
        Self {
            coeffs: (0..=order)
                .map(|n| f(self.coeffs[n], other.coeffs[n]))
                .collect(),
        }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul_series(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut out = vec![0.0; order + 1];
        for (i, &a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    /// Horner evaluation.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Term-by-term derivative (order drops by one; order 0 stays order 0).
    pub fn differentiate(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, &c)| n as f64 * c)
                .collect(),
        }
    }

    /// Antiderivative with zero constant term; order grows by one.
    pub fn integrate(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, &c)| c / (n + 1) as f64),
        );
        Self { coeffs }
    }

    /// `outer(inner(x))` by Horner accumulation.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        if inner.coeffs[0] != 0.0 {
            return Err(SeriesError::NonzeroConstant(inner.coeffs[0]));
        }
        let order = self.order().min(inner.order());
        let inner = inner.with_order(order);
        let mut acc = Self::constant(self.coeffs[order], order);
        for n in (0..order).rev() {
            acc = acc.mul_series(&inner);
            acc.coeffs[0] += self.coeffs[n];
        }
        Ok(acc)
    }

    /// Multiplicative inverse.
    pub fn recip(&self) -> Result<Self, SeriesError> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 {
            return Err(SeriesError::ZeroConstant);
        }
        let mut out = vec![0.0; self.coeffs.len()];
        out[0] = 1.0 / c0;
        for n in 1..out.len() {
            let acc: f64 = (1..=n).map(|k| self.coeffs[k] * out[n - k]).sum();
            out[n] = -acc / c0;
        }
        Ok(Self { coeffs: out })
    }

    /// Principal square root of a series with constant term 1.
    pub fn sqrt_unit(&self) -> Result<Self, SeriesError> {
        if self.coeffs[0] != 1.0 {
            return Err(SeriesError::NonUnitConstant(self.coeffs[0]));
        }
        let mut out = vec![0.0; self.coeffs.len()];
        out[0] = 1.0;
        for n in 1..out.len() {
            let cross: f64 = (1..n).map(|k| out[k] * out[n - k]).sum();
            out[n] = 0.5 * (self.coeffs[n] - cross);
        }
        Ok(Self { coeffs: out })
    }

    /// Compositional inverse `r` with `self(r(x)) = x`.
    ///
    /// Coefficients are fixed one order at a time: the coefficient of `x^k`
    /// in `self(r(x))` depends on `r_k` only through the term `s_1 r_k`.
    pub fn revert(&self) -> Result<Self, SeriesError> {
        let (constant, linear) = (self.coeffs[0], self.coeff(1));
        if constant != 0.0 || linear == 0.0 || self.order() == 0 {
            return Err(SeriesError::NotInvertible { constant, linear });
        }
        let order = self.order();
        let mut r = Self::monomial(1, 1.0 / linear, order);
        for k in 2..=order {
            let residual = self.compose(&r)?.coeffs[k];
            r.coeffs[k] -= residual / linear;
        }
        Ok(r)
    }

    /// Splits `s(x) = E(x²) + x·O(x²)`, returning the coefficient series of `E` and `O`.
    pub fn split_even_odd(&self) -> (Self, Self) {
        let n = self.order();
        let even: Vec<f64> = self.coeffs.iter().step_by(2).copied().collect();
        let mut odd: Vec<f64> = self.coeffs.iter().skip(1).step_by(2).copied().collect();
        if odd.is_empty() {
            odd.push(0.0);
        }
        debug_assert_eq!(even.len(), n / 2 + 1);
        (Self { coeffs: even }, Self { coeffs: odd })
    }

    /// Inverse of [`split_even_odd`](Self::split_even_odd): `even(x²) + x·odd(x²)` at `order`.
    pub fn recombine(even: &Self, odd: &Self, order: usize) -> Self {
        let mut s = Self::zero(order);
        for (n, &c) in even.coeffs.iter().enumerate() {
            if 2 * n <= order {
                s.coeffs[2 * n] += c;
            }
        }
        for (n, &c) in odd.coeffs.iter().enumerate() {
            if 2 * n < order {
                s.coeffs[2 * n + 1] += c;
            }
        }
        s
    }

    /// Drops the first `k` coefficients, i.e. divides by `x^k` (caller guarantees they vanish).
    pub fn shift_down(&self, k: usize) -> Self {
        assert!(
            k <= self.order(),
            "cannot shift a series of order {} by {k}",
            self.order()
        );
        Self {
            coeffs: self.coeffs[k..].to_vec(),
        }
    }

    /// Multiplies by `x^k`, keeping the order.
    pub fn shift_up(&self, k: usize) -> Self {
        let order = self.order();
        let mut s = Self::zero(order);
        for n in 0..=order.saturating_sub(k) {
            if n + k <= order {
                s.coeffs[n + k] = self.coeffs[n];
            }
        }
        s
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: Self) -> TruncatedSeries {
        self.mul_series(rhs)
    }
}

impl Mul<f64> for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: f64) -> TruncatedSeries {
        self.scale(rhs)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for TruncatedSeries {
            type Output = TruncatedSeries;
            fn $method(self, rhs: Self) -> TruncatedSeries {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const N: usize = 12;

    fn s(c: &[f64]) -> TruncatedSeries {
        TruncatedSeries::from_slice(c, N)
    }

    fn close(a: &TruncatedSeries, b: &TruncatedSeries, tol: f64) -> bool {
        a.order() == b.order()
            && a.coeffs()
                .iter()
                .zip(b.coeffs())
                .all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn linear_arithmetic() {
        assert_eq!(&s(&[1.0, 1.0]) + &s(&[1.0, -1.0]), s(&[2.0]));
        let a = s(&[0.3, -2.0, 5.0]);
        assert_eq!(a.scale(0.0), TruncatedSeries::zero(N));
        assert_eq!(&a + &(-&a), TruncatedSeries::zero(N));
        assert_eq!(&a - &a, TruncatedSeries::zero(N));
    }

    #[test]
    fn mixed_orders_truncate_to_minimum() {
        let a = TruncatedSeries::from_slice(&[1.0, 2.0, 3.0, 4.0], 3);
        let b = TruncatedSeries::from_slice(&[1.0, 1.0], 1);
        assert_eq!((&a + &b).order(), 1);
        assert_eq!((&a * &b).coeffs(), &[1.0, 3.0]);
    }

    #[test]
    fn multiplication() {
        assert_eq!(&s(&[1.0, 1.0]) * &s(&[1.0, -1.0]), s(&[1.0, 0.0, -1.0]));
        let a = s(&[0.5, 0.25, -3.0, 1.0]);
        assert_eq!(&a * &TruncatedSeries::one(N), a);
        let b = s(&[0.0, 1.0, 1.0]);
        assert_eq!(&b * &b, s(&[0.0, 0.0, 1.0, 2.0, 1.0]));
    }

    #[test]
    fn composition() {
        let sq = s(&[0.0, 0.0, 1.0]);
        let inner = s(&[0.0, 1.0, 1.0]);
        assert_eq!(sq.compose(&inner).unwrap(), s(&[0.0, 0.0, 1.0, 2.0, 1.0]));
        let a = s(&[0.7, -1.0, 0.5, 2.0]);
        assert_eq!(a.compose(&TruncatedSeries::variable(N)).unwrap(), a);
        let b = s(&[0.0, 2.0, -0.5, 0.1]);
        assert_eq!(TruncatedSeries::variable(N).compose(&b).unwrap(), b);
        assert!(matches!(
            a.compose(&a),
            Err(SeriesError::NonzeroConstant(_))
        ));
    }

    #[test]
    fn square_root() {
        assert_eq!(
            TruncatedSeries::one(N).sqrt_unit().unwrap(),
            TruncatedSeries::one(N)
        );
        assert_eq!(s(&[1.0, 2.0, 1.0]).sqrt_unit().unwrap(), s(&[1.0, 1.0]));
        assert!(matches!(
            s(&[2.0, 1.0]).sqrt_unit(),
            Err(SeriesError::NonUnitConstant(_))
        ));
    }

    #[test]
    fn reversion() {
        let x = TruncatedSeries::variable(N);
        assert_eq!(x.revert().unwrap(), x);
        assert_eq!(s(&[0.0, 2.0]).revert().unwrap(), s(&[0.0, 0.5]));
        // x/(1 − x) has inverse x/(1 + x) = x − x² + x³ − ...
        let geometric = s(&(0..=N)
            .map(|n| if n == 0 { 0.0 } else { 1.0 })
            .collect::<Vec<_>>());
        let inv = geometric.revert().unwrap();
        for n in 1..=N {
            let expected = if n % 2 == 1 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(inv.coeff(n), expected, epsilon = 1e-12);
        }
        assert!(s(&[1.0, 1.0]).revert().is_err());
        assert!(s(&[0.0, 0.0, 1.0]).revert().is_err());
    }

    #[test]
    fn recip_of_geometric() {
        let one_minus_x = s(&[1.0, -1.0]);
        let r = one_minus_x.recip().unwrap();
        assert!(r.coeffs().iter().all(|&c| c == 1.0));
        assert!(TruncatedSeries::zero(3).recip().is_err());
    }

    #[test]
    fn even_odd_split() {
        let (even, odd) = s(&[0.0, 0.0, 0.0, 1.0]).split_even_odd();
        assert!(even.coeffs().iter().all(|&c| c == 0.0));
        assert_eq!(odd.coeff(1), 1.0);
        assert_eq!(odd.coeffs().iter().filter(|&&c| c != 0.0).count(), 1);

        let (even, odd) = s(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0]).split_even_odd();
        assert_eq!(even.coeff(2), 1.0);
        assert_eq!(odd.coeff(2), 1.0);
        assert_eq!(even.order(), 6);
        assert_eq!(odd.order(), 5);
    }

    #[test]
    fn evaluation_and_calculus() {
        assert_eq!(s(&[1.0, 1.0, 1.0]).evaluate(0.0), 1.0);
        assert_eq!(s(&[0.0, 0.0, 1.0]).evaluate(3.0), 9.0);
        let d = s(&[0.0, 0.0, 0.0, 1.0]).differentiate();
        assert_eq!(d.order(), N - 1);
        assert_eq!(d.coeff(2), 3.0);
        assert_eq!(d.coeffs().iter().filter(|&&c| c != 0.0).count(), 1);
        let back = d.integrate();
        assert_eq!(back, s(&[0.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            TruncatedSeries::new(vec![1.0, f64::NAN]),
            Err(SeriesError::NonFinite { index: 1 })
        ));
    }

    fn coeffs_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, N + 1)
    }

    proptest! {
        #[test]
        fn ring_axioms(a in coeffs_strategy(), b in coeffs_strategy(), c in coeffs_strategy()) {
            let (a, b, c) = (s(&a), s(&b), s(&c));
            let tol = 1e-12 * 64.0_f64.powi(2);
            prop_assert!(close(&(&a * &b), &(&b * &a), tol));
            prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), tol * 64.0));
            prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), tol));
        }

        #[test]
        fn defining_identities(a in coeffs_strategy(), b in coeffs_strategy(), lead in 1.0f64..2.0, flip in any::<bool>()) {
            let mut coeffs = a;
            coeffs[0] = 1.0;
            let unit = s(&coeffs);
            let root = unit.sqrt_unit().unwrap();
            let scale = unit.max_abs_coeff();
            prop_assert!(close(&(&root * &root), &unit, 1e-10 * scale));

            let mut admissible: Vec<f64> = b.iter().map(|c| 0.25 * c).collect();
            admissible[0] = 0.0;
            admissible[1] = if flip { -lead } else { lead };
            let f = s(&admissible);
            let inv = f.revert().unwrap();
            let id = f.compose(&inv).unwrap();
            prop_assert!(close(&id, &TruncatedSeries::variable(N), 1e-10 * f.max_abs_coeff()));
        }

        #[test]
        fn composition_is_associative(a in coeffs_strategy(), b in coeffs_strategy(), c in coeffs_strategy()) {
            let outer = s(&a);
            let mut b = b; b[0] = 0.0;
            let mut c = c; c[0] = 0.0;
            let (mid, inner) = (s(&b).scale(0.5), s(&c).scale(0.5));
            let left = outer.compose(&mid).unwrap().compose(&inner).unwrap();
            let right = outer.compose(&mid.compose(&inner).unwrap()).unwrap();
            prop_assert!(close(&left, &right, 1e-11));
        }

        #[test]
        fn split_recombine_roundtrip(a in coeffs_strategy()) {
            let orig = s(&a);
            let (even, odd) = orig.split_even_odd();
            prop_assert_eq!(TruncatedSeries::recombine(&even, &odd, N), orig);
        }
    }
}
