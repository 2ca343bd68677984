//! Exact Gram matrices of full-rank lattices.
//!
//! A [`GramMatrix`] is validated once at construction (square, symmetric,
//! positive definite by exact leading minors) and is immutable afterwards.
//! Everything structural about the lattice is derived from it exactly: the dual
//! form, determinant, parity, level, and the constructions used by the
//! certification driver (doubling and orthogonal sum with `A₁`).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{fmt_rat, parse_rat, rat, Rat, RatMatrix};

/// Symmetric positive definite matrix of rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GramMatrix {
    m: RatMatrix,
}

impl GramMatrix {
    pub fn new(m: RatMatrix) -> Result<Self> {
        if m.dim() == 0 {
            return Err(Error::Dimension { min: 1, got: 0 });
        }
        if let Some((i, j)) = m.is_symmetric() {
            return Err(Error::NotSymmetric { i, j });
        }
        for (k, minor) in m.leading_minors().iter().enumerate() {
            if !minor.is_positive() {
                return Err(Error::NotPositiveDefinite { index: k + 1, minor: fmt_rat(minor) });
            }
        }
        Ok(GramMatrix { m })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(RatMatrix::from_i64_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        GramMatrix { m: RatMatrix::identity(n) }
    }

    pub fn diagonal_i64(entries: &[i64]) -> Result<Self> {
        Self::new(RatMatrix::diagonal(&entries.iter().map(|&v| rat(v)).collect::<Vec<_>>()))
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rat {
        self.m.get(i, j)
    }

    /// Gram matrix of the dual lattice.
    pub fn inverse(&self) -> GramMatrix {
        let inv = self.m.inverse().expect("positive definite matrices are invertible");
        GramMatrix { m: inv }
    }

    pub fn determinant(&self) -> Rat {
        self.m.determinant()
    }

    pub fn is_integral(&self) -> bool {
        self.m.is_integral()
    }

    /// Integral with even diagonal, i.e. every vector has even squared length.
    pub fn is_even(&self) -> bool {
        self.is_integral() && (0..self.dim()).all(|i| self.entry(i, i).numer().is_even())
    }

    /// Smallest `ℓ ≥ 1` such that `ℓ·Q⁻¹` is integral with even diagonal.
    pub fn level(&self) -> Result<u64> {
        if !self.is_even() {
            return Err(Error::NotEven);
        }
        let inv = self.inverse();
        let n = self.dim();
        let two = rat(2);
        let mut l = BigInt::one();
        for i in 0..n {
            for j in 0..n {
                let v = if i == j { inv.entry(i, i) / &two } else { inv.entry(i, j).clone() };
                l = l.lcm(v.denom());
            }
        }
        u64::try_from(l).map_err(|_| Error::Domain("level does not fit in 64 bits".into()))
    }

    /// Entrywise `2Q`, the Gram matrix of `√2·Λ`.
    pub fn double(&self) -> GramMatrix {
        self.scale(&rat(2))
    }

    /// `c·Q` for rational `c > 0`.
    pub fn scale(&self, c: &Rat) -> GramMatrix {
        assert!(c.is_positive(), "scale factor must be positive");
        GramMatrix { m: self.m.scale(c) }
    }

    /// Orthogonal sum with `A₁`: the block matrix `diag(Q, 2)`.
    pub fn orthosum_a1(&self) -> GramMatrix {
        self.orthogonal_sum(&GramMatrix::diagonal_i64(&[2]).expect("valid"))
    }

    pub fn orthogonal_sum(&self, other: &GramMatrix) -> GramMatrix {
        GramMatrix { m: self.m.direct_sum(&other.m) }
    }

    /// Random integral positive definite form with diagonal in `1..=3` and
    /// off-diagonal entries in `-1..=1`, redrawn until positive definite.
    pub fn random_integral<R: rand::Rng>(n: usize, rng: &mut R) -> GramMatrix {
        loop {
            let mut rows = vec![vec![0i64; n]; n];
            for i in 0..n {
                rows[i][i] = rng.gen_range(1..=3);
                for j in 0..i {
                    let v = rng.gen_range(-1..=1);
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            if let Ok(g) = GramMatrix::from_i64_rows(&rows) {
                return g;
            }
        }
    }

    /// `Uᵗ Q U` for an integer matrix `U` (rows given). `U` must be invertible.
    pub fn transform(&self, u: &[Vec<i64>]) -> Result<GramMatrix> {
        let um = RatMatrix::from_i64_rows(u)?;
        let out = &(&um.transpose() * &self.m) * &um;
        GramMatrix::new(out)
    }

    /// `Q[x] = xᵗQx`.
    pub fn norm(&self, x: &[i64]) -> Rat {
        self.m.bilinear(x, x)
    }

    pub fn inner(&self, x: &[i64], y: &[i64]) -> Rat {
        self.m.bilinear(x, y)
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        self.m.to_f64()
    }

    /// The integer matrix `D·Q` with `D` the common denominator of the entries.
    pub fn integer_form(&self) -> IntegerForm {
        let d = self.m.common_denominator();
        let scaled = self.m.scale(&Rat::from_integer(d.clone()));
        IntegerForm { denom: d, entries: scaled }
    }

    pub fn rows(&self) -> Vec<Vec<Rat>> {
        self.m.rows()
    }
}

impl fmt::Debug for GramMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GramMatrix[{}]", self.m.rows().iter().map(|r| r.iter().map(fmt_rat).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("; "))
    }
}

impl fmt::Display for GramMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.m)
    }
}

/// `Q = entries / denom` with `entries` integral.
#[derive(Clone, Debug)]
pub struct IntegerForm {
    pub denom: BigInt,
    pub entries: RatMatrix,
}

/// A named lattice, optionally carrying reference data from a published table.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeDescriptor {
    pub name: Option<String>,
    pub gram: GramMatrix,
    pub reference_dim_m: Option<u32>,
    pub reference_n: Option<u32>,
    pub traditional_name: Option<String>,
}

impl LatticeDescriptor {
    pub fn new(gram: GramMatrix) -> Self {
        LatticeDescriptor { name: None, gram, reference_dim_m: None, reference_n: None, traditional_name: None }
    }

    pub fn named(name: impl Into<String>, gram: GramMatrix) -> Self {
        LatticeDescriptor { name: Some(name.into()), ..Self::new(gram) }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("<{}-dim form>", self.gram.dim()))
    }
}

/// One Gram entry in the JSON format: a bare integer or a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Int(i64),
    Text(String),
}

impl Entry {
    fn parse(&self) -> Result<Rat> {
        match self {
            Entry::Int(v) => Ok(rat(*v)),
            Entry::Text(s) => parse_rat(s),
        }
    }

    fn from_rat(r: &Rat) -> Entry {
        if r.is_integer() {
            if let Ok(v) = i64::try_from(r.numer().clone()) {
                return Entry::Int(v);
            }
        }
        Entry::Text(fmt_rat(r))
    }
}

/// JSON file schema for a single lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub gram: Vec<Vec<Entry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "N")]
    pub reference_n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traditional_name: Option<String>,
}

impl GramFile {
    pub fn from_descriptor(d: &LatticeDescriptor) -> Self {
        GramFile {
            name: d.name.clone(),
            n: d.gram.dim(),
            gram: d.gram.rows().iter().map(|r| r.iter().map(Entry::from_rat).collect()).collect(),
            dim_m: d.reference_dim_m,
            reference_n: d.reference_n,
            traditional_name: d.traditional_name.clone(),
        }
    }

    pub fn into_descriptor(self) -> Result<LatticeDescriptor> {
        if self.gram.len() != self.n {
            return Err(Error::Parse(format!("declared n = {} but {} rows given", self.n, self.gram.len())));
        }
        let rows = self
            .gram
            .iter()
            .map(|r| r.iter().map(Entry::parse).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let gram = GramMatrix::new(RatMatrix::from_rows(rows)?)?;
        Ok(LatticeDescriptor {
            name: self.name,
            gram,
            reference_dim_m: self.dim_m,
            reference_n: self.reference_n,
            traditional_name: self.traditional_name,
        })
    }
}

pub fn to_json(d: &LatticeDescriptor) -> String {
    serde_json::to_string(&GramFile::from_descriptor(d)).expect("serializable")
}

/// Parses either the JSON schema or the plain-text format
/// (first line `n`, then `n` rows of whitespace-separated entries).
pub fn parse_lattice(text: &str) -> Result<LatticeDescriptor> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let file: GramFile = serde_json::from_str(trimmed)?;
        return file.into_descriptor();
    }
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::Parse("empty input".into()))?
        .parse()
        .map_err(|_| Error::Parse("first line must be the dimension".into()))?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("expected {n} matrix rows")))?;
        rows.push(line.split_whitespace().map(parse_rat).collect::<Result<Vec<_>>>()?);
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing content after matrix rows".into()));
    }
    Ok(LatticeDescriptor::new(GramMatrix::new(RatMatrix::from_rows(rows)?)?))
}

/// Real determinant-1 normalisation `Q / det(Q)^{1/n}`.
pub fn normalized_f64(q: &GramMatrix) -> nalgebra::DMatrix<f64> {
    let det = crate::rational::rat_to_f64(&q.determinant());
    let c = det.powf(1.0 / q.dim() as f64);
    q.to_f64() / c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn g(rows: &[Vec<i64>]) -> GramMatrix {
        GramMatrix::from_i64_rows(rows).unwrap()
    }

    fn ste10a() -> GramMatrix {
        g(&[
            vec![3, 1, 1, 1, 1, 0],
            vec![1, 3, -1, 1, 0, 1],
            vec![1, -1, 3, 0, 1, -1],
            vec![1, 1, 0, 3, -1, -1],
            vec![1, 0, 1, -1, 3, 1],
            vec![0, 1, -1, -1, 1, 3],
        ])
    }

    /// Oracle: increasing search for the smallest admissible level.
    fn level_by_search(q: &GramMatrix) -> u64 {
        let inv = q.inverse();
        (1..10_000u64)
            .find(|&l| {
                let s = inv.matrix().scale(&rat(l as i64));
                s.is_integral() && (0..q.dim()).all(|i| s.get(i, i).numer().is_even())
            })
            .unwrap()
    }

    #[test]
    fn rejects_invalid_matrices() {
        assert!(matches!(GramMatrix::from_i64_rows(&[vec![1, 2], vec![3, 4]]), Err(Error::NotSymmetric { .. })));
        assert!(matches!(
            GramMatrix::from_i64_rows(&[vec![1, 2], vec![2, 1]]),
            Err(Error::NotPositiveDefinite { index: 2, .. })
        ));
        assert!(matches!(GramMatrix::from_i64_rows(&[vec![1, 0]]), Err(Error::NotSquare { .. })));
        assert!(GramMatrix::new(RatMatrix::zeros(0)).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(GramMatrix::identity(3).inverse(), GramMatrix::identity(3));
        let d = g(&[vec![1, 0], vec![0, 2]]).inverse();
        assert_eq!(d.entry(1, 1), &ratio(1, 2));
        let a2 = g(&[vec![2, 1], vec![1, 2]]);
        let inv = a2.inverse();
        assert_eq!(inv.entry(0, 0), &ratio(2, 3));
        assert_eq!(inv.entry(0, 1), &ratio(-1, 3));
        assert_eq!(inv.inverse(), a2);
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(GramMatrix::identity(5).determinant(), rat(1));
        assert_eq!(g(&[vec![2, 1], vec![1, 2]]).determinant(), rat(3));
        let d4 = g(&[vec![2, 0, 1, 1], vec![0, 2, 1, 1], vec![1, 1, 2, 1], vec![1, 1, 1, 2]]);
        assert_eq!(d4.determinant(), rat(4));
        assert_eq!(d4.inverse().determinant(), ratio(1, 4));
    }

    #[test]
    fn parity_examples() {
        assert!(!GramMatrix::identity(2).is_even());
        assert!(g(&[vec![2, 1], vec![1, 2]]).is_even());
        assert!(!ste10a().is_even());
        assert!(ste10a().double().is_even());
    }

    #[test]
    fn level_examples() {
        let a1 = GramMatrix::diagonal_i64(&[2]).unwrap();
        assert_eq!(a1.level().unwrap(), 4);
        assert_eq!(level_by_search(&a1), 4);
        let a2x2 = g(&[vec![4, 2], vec![2, 4]]);
        assert_eq!(a2x2.level().unwrap(), 6);
        assert_eq!(level_by_search(&a2x2), 6);
        assert_eq!(ste10a().double().level().unwrap(), 20);
        assert_eq!(GramMatrix::identity(2).level(), Err(Error::NotEven));
    }

    #[test]
    fn double_and_orthosum() {
        assert_eq!(GramMatrix::identity(2).double(), GramMatrix::diagonal_i64(&[2, 2]).unwrap());
        let d = ste10a().double();
        assert_eq!(d.entry(2, 1), &rat(-2));
        assert_eq!(d.entry(0, 0), &rat(6));
        let a2 = g(&[vec![2, 1], vec![1, 2]]);
        assert_eq!(a2.orthosum_a1(), g(&[vec![2, 1, 0], vec![1, 2, 0], vec![0, 0, 2]]));
        let a3 = g(&[vec![2, 1, 1], vec![1, 2, 1], vec![1, 1, 2]]);
        assert_eq!(a3.orthosum_a1().determinant(), a3.determinant() * rat(2));
        assert_eq!(a3.orthosum_a1().is_even(), a3.is_even());
        assert_eq!(GramMatrix::identity(3).orthosum_a1().is_even(), false);
    }

    #[test]
    fn doubling_doubles_level_where_even() {
        for q in [g(&[vec![2, 1], vec![1, 2]]), g(&[vec![4, 2], vec![2, 4]]), GramMatrix::diagonal_i64(&[2]).unwrap()] {
            let l = q.level().unwrap();
            let l2 = q.double().level().unwrap();
            assert_eq!(l2 % l, 0);
            assert_eq!(l2, 2 * l);
            assert_eq!(level_by_search(&q.double()), l2);
        }
    }

    #[test]
    fn parse_formats() {
        let json = r#"{"name": "x", "n": 2, "gram": [[2, "1/2"], ["1/2", 1]]}"#;
        let d = parse_lattice(json).unwrap();
        assert_eq!(d.name.as_deref(), Some("x"));
        assert_eq!(d.gram.entry(0, 1), &ratio(1, 2));
        let back = parse_lattice(&to_json(&d)).unwrap();
        assert_eq!(back, d);

        let txt = "2\n2 1\n1 2\n";
        assert_eq!(parse_lattice(txt).unwrap().gram, g(&[vec![2, 1], vec![1, 2]]));
        assert!(parse_lattice("3\n1 0 0\n0 1 0\n").is_err());
        assert!(parse_lattice(r#"{"n": 3, "gram": [[1]]}"#).is_err());
    }

    #[test]
    fn unimodular_transform() {
        let q = GramMatrix::identity(2);
        let t = q.transform(&[vec![1, 1], vec![0, 1]]).unwrap();
        assert_eq!(t, g(&[vec![1, 1], vec![1, 2]]));
        assert_eq!(t.determinant(), rat(1));
    }
}
