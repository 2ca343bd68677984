//! Dense square matrices over arbitrary-precision rationals.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"`, `"p"` or a plain decimal integer.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: `{s}`"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(p, q))
        }
        None => Ok(Rat::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

/// Writes a rational as `"p"` or `"p/q"`.
pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(p), Some(q)) if p.is_finite() && q.is_finite() => p / q,
        _ => {
            // Very large numerator or denominator: shift both down first.
            let bits = r.numer().bits().max(r.denom().bits()) as i64 - 900;
            let shift = bits.max(0) as usize;
            let p = (r.numer() >> shift).to_f64().unwrap_or(0.0);
            let q = (r.denom() >> shift).to_f64().unwrap_or(1.0);
            p / q
        }
    }
}

/// Square matrix of rationals in row-major order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    n: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(n: usize) -> Self {
        RatMatrix { n, data: vec![Rat::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { row: i, len: row.len(), expected: n });
            }
            data.extend(row);
        }
        Ok(RatMatrix { n, data })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| rat(v)).collect()).collect())
    }

    pub fn diagonal(entries: &[Rat]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n);
        for (i, e) in entries.iter().enumerate() {
            m.data[i * n + i] = e.clone();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<Rat>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn entries(&self) -> &[Rat] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j].clone();
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> Option<(usize, usize)> {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j) != self.get(j, i) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn scale(&self, c: &Rat) -> Self {
        RatMatrix { n: self.n, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn trace(&self) -> Rat {
        (0..self.n).map(|i| self.get(i, i).clone()).sum()
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &RatMatrix) -> Rat {
        let n = self.n;
        let mut acc = Rat::zero();
        for i in 0..n {
            for k in 0..n {
                acc += &self.data[i * n + k] * &other.data[k * n + i];
            }
        }
        acc
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|v| v.is_integer())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Least common multiple of all entry denominators.
    pub fn common_denominator(&self) -> BigInt {
        self.data.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
    }

    /// Determinant by Gaussian elimination with exact pivoting.
    pub fn determinant(&self) -> Rat {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = Rat::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !a[r * n + col].is_zero()) else {
                return Rat::zero();
            };
            if p != col {
                for j in 0..n {
                    a.swap(p * n + j, col * n + j);
                }
                det = -det;
            }
            let pivot = a[col * n + col].clone();
            det *= &pivot;
            for r in (col + 1)..n {
                if a[r * n + col].is_zero() {
                    continue;
                }
                let f = &a[r * n + col] / &pivot;
                for j in col..n {
                    let v = &f * &a[col * n + j];
                    a[r * n + j] -= v;
                }
            }
        }
        det
    }

    /// Exact inverse by Gauss–Jordan elimination; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for col in 0..n {
            let p = (col..n).find(|&r| !a[r * n + col].is_zero())?;
            if p != col {
                for j in 0..n {
                    a.swap(p * n + j, col * n + j);
                    inv.swap(p * n + j, col * n + j);
                }
            }
            let pivot = a[col * n + col].clone();
            for j in 0..n {
                a[col * n + j] /= &pivot;
                inv[col * n + j] /= &pivot;
            }
            for r in 0..n {
                if r == col || a[r * n + col].is_zero() {
                    continue;
                }
                let f = a[r * n + col].clone();
                for j in 0..n {
                    let u = &f * &a[col * n + j];
                    a[r * n + j] -= u;
                    let w = &f * &inv[col * n + j];
                    inv[r * n + j] -= w;
                }
            }
        }
        Some(RatMatrix { n, data: inv })
    }

    /// Leading principal minors `d_1, …, d_n`.
    pub fn leading_minors(&self) -> Vec<Rat> {
        // The pivots of elimination without row exchanges are ratios of
        // consecutive leading minors; a zero pivot means a zero minor.
        let n = self.n;
        let mut a = self.data.clone();
        let mut minors = Vec::with_capacity(n);
        let mut running = Rat::one();
        for col in 0..n {
            let pivot = a[col * n + col].clone();
            running *= &pivot;
            minors.push(running.clone());
            if pivot.is_zero() {
                minors.resize(n, Rat::zero());
                break;
            }
            for r in (col + 1)..n {
                if a[r * n + col].is_zero() {
                    continue;
                }
                let f = &a[r * n + col] / &pivot;
                for j in col..n {
                    let v = &f * &a[col * n + j];
                    a[r * n + j] -= v;
                }
            }
        }
        minors
    }

    /// `xᵗ M y` for integer vectors.
    pub fn bilinear(&self, x: &[i64], y: &[i64]) -> Rat {
        let n = self.n;
        let mut acc = Rat::zero();
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            let mut row = Rat::zero();
            for j in 0..n {
                if y[j] != 0 {
                    row += &self.data[i * n + j] * BigInt::from(y[j]);
                }
            }
            acc += row * BigInt::from(x[i]);
        }
        acc
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| rat_to_f64(self.get(i, j)))
    }

    /// Converts an integral matrix to `i128`, `None` on non-integral or overflowing entries.
    pub fn to_i128(&self) -> Option<Vec<i128>> {
        self.data
            .iter()
            .map(|v| if v.is_integer() { v.numer().to_i128() } else { None })
            .collect()
    }

    /// Block-diagonal sum `diag(self, other)`.
    pub fn direct_sum(&self, other: &RatMatrix) -> Self {
        let (a, b) = (self.n, other.n);
        let n = a + b;
        let mut m = Self::zeros(n);
        for i in 0..a {
            for j in 0..a {
                m.data[i * n + j] = self.get(i, j).clone();
            }
        }
        for i in 0..b {
            for j in 0..b {
                m.data[(a + i) * n + a + j] = other.get(i, j).clone();
            }
        }
        m
    }

    pub fn max_abs(&self) -> Rat {
        self.data.iter().map(|v| v.abs()).max().unwrap_or_else(Rat::zero)
    }
}

impl<'a> Mul<&'a RatMatrix> for &'a RatMatrix {
    type Output = RatMatrix;
    fn mul(self, rhs: &RatMatrix) -> RatMatrix {
        let n = self.n;
        assert_eq!(n, rhs.n, "dimension mismatch");
        let mut out = RatMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &rhs.data[k * n + j];
                    if !b.is_zero() {
                        out.data[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a RatMatrix> for &'a RatMatrix {
    type Output = RatMatrix;
    fn add(self, rhs: &RatMatrix) -> RatMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        RatMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a RatMatrix> for &'a RatMatrix {
    type Output = RatMatrix;
    fn sub(self, rhs: &RatMatrix) -> RatMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        RatMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.data.chunks(self.n).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row.iter().map(fmt_rat).collect();
            write!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}
