//! Exact spherical design tests on lattice layers.
//!
//! Three independent witnesses are provided for the 2-design property of a
//! layer `X = M_k(Q)` of squared norm `m` in dimension `n`:
//!
//! * the pair power sum `Σ_{x,y∈X} (xᵗQy)^t` against `c_t·m^t·|X|²`;
//! * the moment identity `n·Σ x xᵗ = m·|X|·Q⁻¹`;
//! * vanishing of `Σ_{x∈X} P(x)` for a basis of degree-2 harmonics.
//!
//! The frame-potential bound runs `Σ (x·y)^t ≥ c_t m^t |X|²`, with equality
//! exactly for t-designs. All comparisons are exact.

use num_bigint::BigInt;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::enumerate::{half_layer, Layer, LayerMoment};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gram::GramMatrix;
use crate::rational::{fmt_rat, parse_rat, rat, Rat, RatMatrix};

/// `c_t = (1·3⋯(t−1)) / (n(n+2)⋯(n+t−2)) · size`.
pub fn design_constant(n: usize, t: u32, size: usize) -> Result<Rat> {
    check_strength(t)?;
    if n < 1 {
        return Err(Error::Dimension { min: 1, got: n });
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..(t / 2) as usize {
        num *= BigInt::from(2 * i + 1);
        den *= BigInt::from(n + 2 * i);
    }
    Ok(Rat::new(num * BigInt::from(size), den))
}

fn check_strength(t: u32) -> Result<()> {
    if t == 0 || t % 2 == 1 {
        return Err(Error::InvalidStrength(t));
    }
    Ok(())
}

/// Outcome of one design test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignVerdict {
    #[serde(with = "rat_string")]
    pub norm: Rat,
    pub t: u32,
    pub cardinality: u64,
    #[serde(with = "rat_string")]
    pub lhs: Rat,
    #[serde(with = "rat_string")]
    pub rhs: Rat,
    pub is_design: bool,
}

impl DesignVerdict {
    fn assemble(n: usize, norm: Rat, t: u32, cardinality: u64, lhs: Rat) -> Result<Self> {
        let c = design_constant(n, t, cardinality as usize)?;
        let rhs = c * Pow::pow(&norm, t) * Rat::from_integer(BigInt::from(cardinality));
        if lhs < rhs {
            return Err(Error::InequalityViolated { norm: fmt_rat(&norm), lhs: fmt_rat(&lhs), rhs: fmt_rat(&rhs) });
        }
        let is_design = lhs == rhs;
        Ok(DesignVerdict { norm, t, cardinality, lhs, rhs, is_design })
    }

    /// Transcript line, e.g. `150 = 150, 2-DESIGN on the layer (x,x)=3`.
    ///
    /// `divisor` rescales both sides (a half-layer sum uses 4, a doubled form
    /// additionally `2^t`), and `norm` is the label printed for the layer.
    pub fn transcript_line(&self, divisor: &Rat, norm: &Rat) -> String {
        let l = fmt_rat(&(&self.lhs / divisor));
        let r = fmt_rat(&(&self.rhs / divisor));
        if self.is_design {
            format!("{l} = {r}, {}-DESIGN on the layer (x,x)={}", self.t, fmt_rat(norm))
        } else {
            format!("{l} != {r}, FAILURE on the layer (x,x)={}", fmt_rat(norm))
        }
    }
}

pub(crate) mod rat_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// Integer data shared by the pair-sum loops: `Q = qi / denom`.
struct IntForm {
    n: usize,
    qi: Vec<BigInt>,
    denom: BigInt,
}

impl IntForm {
    fn new(q: &GramMatrix) -> Self {
        let f = q.integer_form();
        IntForm { n: q.dim(), qi: f.entries.entries().iter().map(|v| v.to_integer()).collect(), denom: f.denom }
    }

    fn apply(&self, y: &[i64]) -> Vec<BigInt> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| &self.qi[i * self.n + j] * BigInt::from(y[j])).sum())
            .collect()
    }
}

/// `Σ_{x,y∈H} (xᵗQy)^t` over one representative per antipodal pair.
pub fn half_pair_power_sum(layer: &Layer, q: &GramMatrix, t: u32, exec: Exec) -> Result<Rat> {
    check_strength(t)?;
    let half = half_layer(layer);
    if half.is_empty() {
        return Ok(Rat::zero());
    }
    let form = IntForm::new(q);
    let images: Vec<Vec<BigInt>> = half.iter().map(|y| form.apply(y)).collect();
    // Small-integer fast path for the inner loop.
    let small: Option<Vec<Vec<i128>>> =
        images.iter().map(|v| v.iter().map(|c| c.to_i128()).collect::<Option<Vec<_>>>()).collect();

    let partials: Vec<BigInt> = exec.map_chunks(&half, 64, |chunk| {
        let mut total = BigInt::zero();
        let mut acc: i128 = 0;
        for x in chunk {
            for (k, img) in images.iter().enumerate() {
                let dot_small = small.as_ref().and_then(|s| {
                    let mut d: i128 = 0;
                    for (a, b) in x.iter().zip(&s[k]) {
                        d = d.checked_add((*a as i128).checked_mul(*b)?)?;
                    }
                    Some(d)
                });
                let term_small = dot_small.and_then(|d| d.checked_pow(t));
                match term_small.and_then(|p| acc.checked_add(p)) {
                    Some(v) => acc = v,
                    None => {
                        let dot: BigInt = x.iter().zip(img).map(|(a, b)| b * BigInt::from(*a)).sum();
                        total += Pow::pow(dot, t);
                    }
                }
            }
        }
        total + BigInt::from(acc)
    });
    let sum: BigInt = partials.into_iter().sum();
    Ok(Rat::new(sum, Pow::pow(&form.denom, t)))
}

/// `Σ_{x,y∈X} (xᵗQy)^t` over the full layer.
pub fn pair_power_sum(layer: &Layer, q: &GramMatrix, t: u32) -> Result<Rat> {
    pair_power_sum_with(layer, q, t, Exec::from_features())
}

pub fn pair_power_sum_with(layer: &Layer, q: &GramMatrix, t: u32, exec: Exec) -> Result<Rat> {
    Ok(half_pair_power_sum(layer, q, t, exec)? * rat(4))
}

/// Pair-sum test of the t-design property.
pub fn is_t_design(layer: &Layer, q: &GramMatrix, t: u32) -> Result<DesignVerdict> {
    is_t_design_with(layer, q, t, Exec::from_features())
}

pub fn is_t_design_with(layer: &Layer, q: &GramMatrix, t: u32, exec: Exec) -> Result<DesignVerdict> {
    let lhs = pair_power_sum_with(layer, q, t, exec)?;
    DesignVerdict::assemble(q.dim(), layer.norm.clone(), t, layer.cardinality() as u64, lhs)
}

/// `Σ_{x∈X} x xᵗ` in coordinates.
pub fn moment_matrix(layer: &Layer, n: usize) -> RatMatrix {
    let mut m = RatMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let s: i128 = layer.vectors.iter().map(|x| x[i] as i128 * x[j] as i128).sum();
            m.set(i, j, Rat::from_integer(BigInt::from(s)));
            m.set(j, i, Rat::from_integer(BigInt::from(s)));
        }
    }
    m
}

fn moment_from_streaming(lm: &LayerMoment, n: usize) -> RatMatrix {
    let mut m = RatMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, Rat::from_integer(BigInt::from(lm.moment[i * n + j])));
        }
    }
    m
}

/// `n·Σ x xᵗ = m_k·|M_k|·Q⁻¹`, checked exactly.
pub fn is_2_design_moment(layer: &Layer, q: &GramMatrix) -> bool {
    let n = q.dim();
    moment_identity_holds(&moment_matrix(layer, n), &layer.norm, layer.cardinality() as u64, q)
}

fn moment_identity_holds(s: &RatMatrix, norm: &Rat, card: u64, q: &GramMatrix) -> bool {
    let n = q.dim();
    let left = s.scale(&rat(n as i64));
    let right = q.inverse().matrix().scale(&(norm * Rat::from_integer(BigInt::from(card))));
    left == right
}

/// 2-design verdict from a streamed layer moment.
///
/// `Σ_{x,y}(xᵗQy)² = Tr(QSQS)` with `S = Σ x xᵗ`, so the pair sum is exact
/// without visiting pairs. The moment identity is cross-checked.
pub fn verdict_from_moment(lm: &LayerMoment, q: &GramMatrix) -> Result<DesignVerdict> {
    let n = q.dim();
    let s = moment_from_streaming(lm, n);
    let qs = q.matrix() * &s;
    let lhs = qs.trace_product(&qs);
    let v = DesignVerdict::assemble(n, lm.norm.clone(), 2, lm.cardinality, lhs)?;
    let by_moment = moment_identity_holds(&s, &lm.norm, lm.cardinality, q);
    if by_moment != v.is_design {
        return Err(Error::RouteDisagreement { norm: fmt_rat(&lm.norm) });
    }
    Ok(v)
}

/// A homogeneous quadratic `x ↦ xᵗPx` with symmetric rational `P`.
///
/// Harmonicity is relative to a form: `P` is harmonic for `Q` when
/// `Tr(Q⁻¹P) = 0`. For the identity this is the usual traceless condition;
/// for a general Gram matrix it is the pull-back of an ambient harmonic
/// polynomial to lattice coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicPoly {
    pub coeff: RatMatrix,
}

impl HarmonicPoly {
    pub fn degree(&self) -> u32 {
        2
    }

    pub fn is_harmonic_for(&self, q: &GramMatrix) -> bool {
        q.inverse().matrix().trace_product(&self.coeff).is_zero()
    }

    pub fn eval(&self, x: &[i64]) -> Rat {
        self.coeff.bilinear(x, x)
    }
}

/// Basis of traceless symmetric `n×n` matrices: off-diagonal pairs and
/// consecutive diagonal differences, `n(n+1)/2 − 1` elements.
pub fn harm2_basis(n: usize) -> Result<Vec<HarmonicPoly>> {
    if n < 2 {
        return Err(Error::Dimension { min: 2, got: n });
    }
    let mut out = Vec::with_capacity(n * (n + 1) / 2 - 1);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut p = RatMatrix::zeros(n);
            p.set(i, j, rat(1));
            p.set(j, i, rat(1));
            out.push(HarmonicPoly { coeff: p });
        }
    }
    for i in 0..n - 1 {
        let mut p = RatMatrix::zeros(n);
        p.set(i, i, rat(1));
        p.set(i + 1, i + 1, rat(-1));
        out.push(HarmonicPoly { coeff: p });
    }
    Ok(out)
}

/// Basis of quadratics harmonic for `Q`: each elementary symmetric matrix
/// other than `e₁e₁ᵗ`, corrected by a multiple of `e₁e₁ᵗ` to kill `Tr(Q⁻¹·)`.
pub fn harm2_basis_for(q: &GramMatrix) -> Result<Vec<HarmonicPoly>> {
    let n = q.dim();
    if n < 2 {
        return Err(Error::Dimension { min: 2, got: n });
    }
    let inv = q.inverse();
    let pivot = inv.entry(0, 0).clone();
    let mut out = Vec::with_capacity(n * (n + 1) / 2 - 1);
    for i in 0..n {
        for j in i..n {
            if i == 0 && j == 0 {
                continue;
            }
            let mut p = RatMatrix::zeros(n);
            p.set(i, j, rat(1));
            p.set(j, i, rat(1));
            let tr = inv.matrix().trace_product(&p);
            p.set(0, 0, -(tr / &pivot));
            out.push(HarmonicPoly { coeff: p });
        }
    }
    Ok(out)
}

/// `Σ_{x∈X} P(x)`.
pub fn harmonic_moment(layer: &Layer, p: &HarmonicPoly) -> Rat {
    match layer.dim() {
        Some(n) => moment_matrix(layer, n).trace_product(&p.coeff),
        None => Rat::zero(),
    }
}

/// All harmonic moments of the layer vanish for the `Q`-harmonic basis.
pub fn is_2_design_harmonic(layer: &Layer, q: &GramMatrix) -> Result<bool> {
    Ok(harm2_basis_for(q)?.iter().all(|p| harmonic_moment(layer, p).is_zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_layers;
    use crate::rational::ratio;

    fn g(rows: &[Vec<i64>]) -> GramMatrix {
        GramMatrix::from_i64_rows(rows).unwrap()
    }

    fn first_layer(q: &GramMatrix, norm: i64) -> Layer {
        enumerate_layers(q, &rat(norm)).unwrap().layer(&rat(norm)).cloned().unwrap()
    }

    /// Oracle: all ordered pairs of the full layer.
    fn brute_pair_sum(layer: &Layer, q: &GramMatrix, t: u32) -> Rat {
        let mut s = Rat::zero();
        for x in &layer.vectors {
            for y in &layer.vectors {
                s += Pow::pow(q.inner(x, y), t);
            }
        }
        s
    }

    #[test]
    fn constants() {
        assert_eq!(design_constant(5, 2, 30).unwrap(), rat(6));
        assert_eq!(design_constant(2, 4, 6).unwrap(), ratio(9, 4));
        assert_eq!(design_constant(6, 2, 10).unwrap(), ratio(5, 3));
        assert_eq!(design_constant(3, 3, 1), Err(Error::InvalidStrength(3)));
    }

    #[test]
    fn pair_sums() {
        let z2 = GramMatrix::identity(2);
        let l = first_layer(&z2, 1);
        assert_eq!(pair_power_sum(&l, &z2, 2).unwrap(), rat(8));
        assert_eq!(brute_pair_sum(&l, &z2, 2), rat(8));
        let d12 = GramMatrix::diagonal_i64(&[1, 2]).unwrap();
        let l = first_layer(&d12, 1);
        assert_eq!(pair_power_sum(&l, &d12, 2).unwrap(), rat(4));
        let a2 = g(&[vec![2, 1], vec![1, 2]]);
        let l = first_layer(&a2, 2);
        for t in [2, 4, 6] {
            assert_eq!(pair_power_sum(&l, &a2, t).unwrap(), brute_pair_sum(&l, &a2, t));
        }
    }

    #[test]
    fn verdicts() {
        let a2 = g(&[vec![2, 1], vec![1, 2]]);
        let v = is_t_design(&first_layer(&a2, 2), &a2, 2).unwrap();
        assert!(v.is_design);
        assert_eq!((v.lhs.clone(), v.rhs.clone()), (rat(72), rat(72)));
        // The hexagon is a 5-design, hence a 4-design but not a 6-design.
        assert!(is_t_design(&first_layer(&a2, 2), &a2, 4).unwrap().is_design);
        assert!(!is_t_design(&first_layer(&a2, 2), &a2, 6).unwrap().is_design);

        let d12 = GramMatrix::diagonal_i64(&[1, 2]).unwrap();
        let v = is_t_design(&first_layer(&d12, 1), &d12, 2).unwrap();
        assert!(!v.is_design);
        assert_eq!((v.lhs, v.rhs), (rat(4), rat(2)));
    }

    #[test]
    fn moment_examples() {
        let z2 = GramMatrix::identity(2);
        let s = enumerate_layers(&z2, &rat(5)).unwrap();
        assert_eq!(moment_matrix(s.layer(&rat(1)).unwrap(), 2), RatMatrix::identity(2).scale(&rat(2)));
        assert_eq!(moment_matrix(s.layer(&rat(5)).unwrap(), 2), RatMatrix::identity(2).scale(&rat(20)));
        assert!(is_2_design_moment(s.layer(&rat(1)).unwrap(), &z2));

        let a2 = g(&[vec![2, 1], vec![1, 2]]);
        let l = first_layer(&a2, 2);
        let expected = RatMatrix::from_i64_rows(&[vec![2, -1], vec![-1, 2]]).unwrap().scale(&rat(2));
        assert_eq!(moment_matrix(&l, 2), expected);
        assert!(is_2_design_moment(&l, &a2));

        let d12 = GramMatrix::diagonal_i64(&[1, 2]).unwrap();
        assert!(!is_2_design_moment(&first_layer(&d12, 1), &d12));
    }

    #[test]
    fn harmonic_examples() {
        let z2 = GramMatrix::identity(2);
        let s = enumerate_layers(&z2, &rat(2)).unwrap();
        let diff = HarmonicPoly { coeff: RatMatrix::from_i64_rows(&[vec![1, 0], vec![0, -1]]).unwrap() };
        let cross = HarmonicPoly { coeff: RatMatrix::from_i64_rows(&[vec![0, 1], vec![1, 0]]).unwrap().scale(&ratio(1, 2)) };
        assert_eq!(harmonic_moment(s.layer(&rat(1)).unwrap(), &diff), rat(0));
        assert_eq!(harmonic_moment(s.layer(&rat(2)).unwrap(), &cross), rat(0));
        let d12 = GramMatrix::diagonal_i64(&[1, 2]).unwrap();
        assert_eq!(harmonic_moment(&first_layer(&d12, 1), &diff), rat(2));
        assert!(!is_2_design_harmonic(&first_layer(&d12, 1), &d12).unwrap());
    }

    #[test]
    fn bases() {
        assert_eq!(harm2_basis(2).unwrap().len(), 2);
        assert_eq!(harm2_basis(6).unwrap().len(), 20);
        assert!(harm2_basis(6).unwrap().iter().all(|p| p.coeff.trace().is_zero() && !p.coeff.is_zero()));
        let q = g(&[vec![2, 1, 1], vec![1, 2, 1], vec![1, 1, 2]]);
        let b = harm2_basis_for(&q).unwrap();
        assert_eq!(b.len(), 5);
        assert!(b.iter().all(|p| p.is_harmonic_for(&q)));
        assert!(harm2_basis(1).is_err());
    }

    #[test]
    fn routes_agree_on_small_forms() {
        let forms = [
            GramMatrix::identity(2),
            g(&[vec![2, 1], vec![1, 2]]),
            GramMatrix::diagonal_i64(&[1, 2]).unwrap(),
            g(&[vec![2, 1, 1], vec![1, 2, 1], vec![1, 1, 2]]),
            g(&[vec![3, 1, 0], vec![1, 4, 1], vec![0, 1, 5]]),
        ];
        for q in &forms {
            let s = enumerate_layers(q, &rat(12)).unwrap();
            for l in &s.layers {
                let a = is_t_design(l, q, 2).unwrap().is_design;
                assert_eq!(a, is_2_design_moment(l, q));
                assert_eq!(a, is_2_design_harmonic(l, q).unwrap());
            }
        }
    }

    #[test]
    fn verdict_json_shape() {
        let a2 = g(&[vec![2, 1], vec![1, 2]]);
        let v = is_t_design(&first_layer(&a2, 2), &a2, 2).unwrap();
        let js = serde_json::to_value(&v).unwrap();
        assert_eq!(js["lhs"], "72");
        assert_eq!(js["norm"], "2");
        assert_eq!(js["is_design"], true);
        let back: DesignVerdict = serde_json::from_value(js).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn transcript_format() {
        let a2 = g(&[vec![2, 1], vec![1, 2]]);
        let v = is_t_design(&first_layer(&a2, 2), &a2, 2).unwrap();
        assert_eq!(v.transcript_line(&rat(4), &rat(2)), "18 = 18, 2-DESIGN on the layer (x,x)=2");
    }
}
