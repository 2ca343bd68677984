//! Truncated theta series `θ_{Λ,P}(τ) = Σ_x P(x) q^{Q[x]/2}`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::design::{harm2_basis_for, HarmonicPoly};
use crate::enumerate::{layer_moments, LayerMoment, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gram::GramMatrix;
use crate::rational::{fmt_rat, parse_rat, rat, Rat, RatMatrix};

/// A q-expansion known up to (and including) the exponent `truncation`.
///
/// Only non-zero coefficients are stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    coeffs: BTreeMap<Rat, Rat>,
    truncation: Rat,
}

impl QSeries {
    pub fn new(truncation: Rat) -> Self {
        QSeries { coeffs: BTreeMap::new(), truncation }
    }

    /// The constant series 1.
    pub fn one(truncation: Rat) -> Self {
        let mut s = QSeries::new(truncation);
        s.add(Rat::zero(), Rat::one());
        s
    }

    pub fn from_terms(truncation: Rat, terms: impl IntoIterator<Item = (Rat, Rat)>) -> Self {
        let mut s = QSeries::new(truncation);
        for (e, c) in terms {
            s.add(e, c);
        }
        s
    }

    /// Adds `c·q^e`; terms beyond the truncation are dropped.
    pub fn add(&mut self, e: Rat, c: Rat) {
        if e > self.truncation || e < Rat::zero() || c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(e.clone()).or_insert_with(Rat::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    pub fn coeff(&self, e: &Rat) -> Rat {
        self.coeffs.get(e).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn truncation(&self) -> &Rat {
        &self.truncation
    }

    /// Non-zero terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&Rat, &Rat)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn has_integral_exponents(&self) -> bool {
        self.coeffs.keys().all(|e| e.is_integer())
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if e.is_zero() {
                write!(f, "{}", fmt_rat(c))?;
            } else {
                write!(f, "{}*q^{}", fmt_rat(c), fmt_rat(e))?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct QSeriesJson {
    truncation: String,
    coeffs: BTreeMap<String, String>,
}

impl Serialize for QSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QSeriesJson {
            truncation: fmt_rat(&self.truncation),
            coeffs: self.coeffs.iter().map(|(e, c)| (fmt_rat(e), fmt_rat(c))).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = QSeriesJson::deserialize(d)?;
        let parse = |s: &str| parse_rat(s).map_err(serde::de::Error::custom);
        let mut out = QSeries::new(parse(&j.truncation)?);
        for (e, c) in j.coeffs {
            out.add(parse(&e)?, parse(&c)?);
        }
        Ok(out)
    }
}

fn moment_matrix_of(lm: &LayerMoment, n: usize) -> RatMatrix {
    let mut m = RatMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, Rat::from_integer(BigInt::from(lm.moment[i * n + j])));
        }
    }
    m
}

/// Theta series of `Q` weighted by `p` (or by 1 when `p` is `None`), up to `q^T`.
pub fn theta_series(q: &GramMatrix, p: Option<&HarmonicPoly>, t: &Rat) -> Result<QSeries> {
    theta_series_with(q, p, t, Exec::from_features(), DEFAULT_BUDGET)
}

pub fn theta_series_with(q: &GramMatrix, p: Option<&HarmonicPoly>, t: &Rat, exec: Exec, budget: usize) -> Result<QSeries> {
    if *t <= Rat::zero() {
        return Err(Error::NonPositiveBound);
    }
    let n = q.dim();
    let mut s = QSeries::new(t.clone());
    if p.is_none() {
        s.add(Rat::zero(), Rat::one());
    }
    for lm in layer_moments(q, &(t * rat(2)), exec, budget)? {
        let e = &lm.norm / rat(2);
        let c = match p {
            None => Rat::from_integer(BigInt::from(lm.cardinality)),
            Some(p) => moment_matrix_of(&lm, n).trace_product(&p.coeff),
        };
        s.add(e, c);
    }
    Ok(s)
}

/// Cauchy product, truncated to the smaller of the two truncations.
pub fn theta_product(a: &QSeries, b: &QSeries) -> QSeries {
    let t = a.truncation.clone().min(b.truncation.clone());
    let mut out = QSeries::new(t);
    for (ea, ca) in &a.coeffs {
        for (eb, cb) in &b.coeffs {
            out.add(ea + eb, ca * cb);
        }
    }
    out
}

/// Whether every degree-2 harmonic coefficient vanishes at one exponent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingEntry {
    #[serde(with = "crate::design::rat_string")]
    pub exponent: Rat,
    pub all_vanish: bool,
}

/// Per-exponent vanishing of `θ_{Λ,P}` for a basis of harmonic `P` of degree 2.
///
/// The exponent 0 is listed first and always vanishes. Only non-empty layers
/// contribute further entries.
pub fn vanishing_report(q: &GramMatrix, t: u32, bound: &Rat) -> Result<Vec<VanishingEntry>> {
    if t != 2 {
        return Err(Error::InvalidStrength(t));
    }
    if !q.is_even() {
        return Err(Error::NotEven);
    }
    if *bound <= Rat::zero() {
        return Err(Error::NonPositiveBound);
    }
    let n = q.dim();
    let basis = harm2_basis_for(q)?;
    let mut out = vec![VanishingEntry { exponent: Rat::zero(), all_vanish: true }];
    for lm in layer_moments(q, &(bound * rat(2)), Exec::from_features(), DEFAULT_BUDGET)? {
        let s = moment_matrix_of(&lm, n);
        let all_vanish = basis.iter().all(|p| s.trace_product(&p.coeff).is_zero());
        out.push(VanishingEntry { exponent: &lm.norm / rat(2), all_vanish });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::harm2_basis;
    use crate::rational::ratio;

    fn g(rows: &[Vec<i64>]) -> GramMatrix {
        GramMatrix::from_i64_rows(rows).unwrap()
    }

    fn series(t: i64, terms: &[(i64, i64)]) -> QSeries {
        QSeries::from_terms(rat(t), terms.iter().map(|&(e, c)| (rat(e), rat(c))))
    }

    #[test]
    fn a1_series() {
        let s = theta_series(&g(&[vec![2]]), None, &rat(9)).unwrap();
        assert_eq!(s, series(9, &[(0, 1), (1, 2), (4, 2), (9, 2)]));
        assert_eq!(s.to_string(), "1 + 2*q^1 + 2*q^4 + 2*q^9");
    }

    #[test]
    fn a2_series() {
        let s = theta_series(&g(&[vec![2, 1], vec![1, 2]]), None, &rat(2)).unwrap();
        assert_eq!(s, series(2, &[(0, 1), (1, 6)]));
        assert_eq!(s.coeff(&rat(2)), rat(0));
        assert!(s.has_integral_exponents());
    }

    #[test]
    fn harmonic_series_of_square_lattice_vanish() {
        let q = GramMatrix::diagonal_i64(&[2, 2]).unwrap();
        for p in harm2_basis(2).unwrap() {
            assert!(theta_series(&q, Some(&p), &rat(20)).unwrap().is_zero());
        }
    }

    #[test]
    fn odd_lattice_has_half_integer_exponents() {
        let s = theta_series(&GramMatrix::identity(1), None, &rat(2)).unwrap();
        assert_eq!(s.coeff(&ratio(1, 2)), rat(2));
        assert_eq!(s.coeff(&rat(2)), rat(2));
        assert!(!s.has_integral_exponents());
    }

    #[test]
    fn product_identities() {
        let a1 = g(&[vec![2]]);
        let a2 = g(&[vec![2, 1], vec![1, 2]]);
        let t = rat(20);
        let lhs = theta_series(&a2.orthogonal_sum(&a1), None, &t).unwrap();
        let rhs = theta_product(&theta_series(&a2, None, &t).unwrap(), &theta_series(&a1, None, &t).unwrap());
        assert_eq!(lhs, rhs);
        let th = theta_series(&a1, None, &t).unwrap();
        assert_eq!(theta_product(&th, &QSeries::one(rat(50))), th);
    }

    #[test]
    fn product_truncates_to_smaller() {
        let a = series(3, &[(0, 1), (1, 1)]);
        let b = series(1, &[(0, 1), (1, 1)]);
        assert_eq!(theta_product(&a, &b), series(1, &[(0, 1), (1, 2)]));
    }

    #[test]
    fn json_round_trip() {
        let s = QSeries::from_terms(rat(3), [(rat(0), rat(1)), (ratio(1, 2), ratio(-3, 4))]);
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.contains("\"1/2\":\"-3/4\""));
        assert_eq!(serde_json::from_str::<QSeries>(&js).unwrap(), s);
    }

    #[test]
    fn vanishing_reports() {
        let bad = vanishing_report(&GramMatrix::diagonal_i64(&[2, 4]).unwrap(), 2, &rat(5)).unwrap();
        assert_eq!(bad[0], VanishingEntry { exponent: rat(0), all_vanish: true });
        assert!(!bad[1].all_vanish);
        let good = vanishing_report(&g(&[vec![2, 1], vec![1, 2]]), 2, &rat(30)).unwrap();
        assert!(good.iter().all(|e| e.all_vanish));
        assert!(vanishing_report(&GramMatrix::identity(2), 2, &rat(5)).is_err());
        assert!(vanishing_report(&g(&[vec![2, 1], vec![1, 2]]), 4, &rat(5)).is_err());
    }
}
