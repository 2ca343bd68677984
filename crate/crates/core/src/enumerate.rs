//! Enumeration of lattice layers `M_k(Q) = {x ∈ Zⁿ : Q[x] = m_k}`.
//!
//! The search is a Fincke–Pohst branch-and-bound over an LLL-reduced form.
//! Pruning uses a floating-point Cholesky factor with an inflated bound;
//! every surviving candidate is then checked exactly in integer arithmetic,
//! so the output contains precisely the vectors with `0 < Q[x] ≤ B`.
//!
//! Only one vector of each antipodal pair `{x, −x}` is visited (the one whose
//! last non-zero reduced coordinate is positive). Layers are re-expanded to
//! both signs when materialised.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gram::GramMatrix;
use crate::lll::lll_transform;
use crate::rational::{fmt_rat, Rat};

/// Relative inflation of the floating-point pruning bound.
const BOUND_SLACK: f64 = 1e-9;
/// Minimum number of independent subtrees handed to the parallel executor.
const MIN_TASKS: usize = 256;
/// Default cap on visited half-vectors.
pub const DEFAULT_BUDGET: usize = 20_000_000;

/// A prepared search over one form.
#[derive(Clone, Debug)]
pub struct Enumerator {
    n: usize,
    /// Unimodular transform, `x = U·y`.
    u: Vec<Vec<i64>>,
    /// `D·UᵗQU` as integers (row-major).
    qi: Vec<i128>,
    denom: i128,
    /// Fincke–Pohst coefficients: `Q'[y] = Σ_i diag[i]·(y_i + Σ_{j>i} off[i][j]·y_j)²`.
    diag: Vec<f64>,
    off: Vec<Vec<f64>>,
}

impl Enumerator {
    pub fn new(q: &GramMatrix) -> Result<Self> {
        let n = q.dim();
        let u = lll_transform(&q.to_f64(), 0.99);
        let reduced = q.transform(&u)?;
        let form = reduced.integer_form();
        let denom = form.denom.to_i128().ok_or_else(|| Error::Domain("denominator too large".into()))?;
        let qi = form.entries.to_i128().ok_or_else(|| Error::Domain("form entries too large".into()))?;

        let qf = reduced.to_f64();
        let chol = qf.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite {
            index: 0,
            minor: "floating-point Cholesky of the reduced form failed".into(),
        })?;
        let l = chol.l();
        let diag: Vec<f64> = (0..n).map(|i| l[(i, i)] * l[(i, i)]).collect();
        let off = (0..n).map(|i| (0..n).map(|j| if j > i { l[(j, i)] / l[(i, i)] } else { 0.0 }).collect()).collect();
        Ok(Enumerator { n, u, qi, denom, diag, off })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Common denominator `D`: exact norms are `numerator / D`.
    pub fn denom(&self) -> i128 {
        self.denom
    }

    pub fn norm_of(&self, numerator: i128) -> Rat {
        Rat::new(BigInt::from(numerator), BigInt::from(self.denom))
    }

    /// Integer bound `⌊B·D⌋` for the numerators.
    fn int_bound(&self, bound: &Rat) -> Result<i128> {
        if bound <= &Rat::zero() {
            return Err(Error::NonPositiveBound);
        }
        let scaled = (bound * BigInt::from(self.denom)).floor();
        scaled.to_integer().to_i128().ok_or_else(|| Error::Domain("bound too large".into()))
    }

    fn exact_numerator(&self, y: &[i64]) -> i128 {
        let n = self.n;
        let mut acc = 0i128;
        for i in 0..n {
            if y[i] == 0 {
                continue;
            }
            let mut row = 0i128;
            for j in 0..n {
                row += self.qi[i * n + j] * y[j] as i128;
            }
            acc += row * y[i] as i128;
        }
        acc
    }

    fn to_original(&self, y: &[i64]) -> Vec<i64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.u[i][j] * y[j]).sum()).collect()
    }

    /// Visits every half-vector `x` with `0 < Q[x] ≤ bound`, folding into one
    /// accumulator per subtree. Accumulators come back in a fixed task order.
    ///
    /// The callback receives the vector in original coordinates and the exact
    /// norm numerator (see [`Enumerator::norm_of`]).
    pub fn fold<A, I, F>(&self, bound: &Rat, exec: Exec, budget: usize, init: I, visit: F) -> Result<Vec<A>>
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(&mut A, &[i64], i128) + Sync + Send,
    {
        let ibound = self.int_bound(bound)?;
        let fbound = ibound as f64 / self.denom as f64;
        let fbound = fbound * (1.0 + BOUND_SLACK) + BOUND_SLACK;
        let prefixes = self.prefixes(fbound);
        let count = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);

        let run = |prefix: &Prefix| {
            let mut acc = init();
            let mut y = vec![0i64; self.n];
            y[prefix.level..].copy_from_slice(&prefix.coords);
            let mut local = 0usize;
            self.descend(prefix.level, prefix.residual, prefix.all_zero, fbound, &mut y, &mut |y| {
                if abort.load(Ordering::Relaxed) {
                    return false;
                }
                let v = self.exact_numerator(y);
                if v > 0 && v <= ibound {
                    local += 1;
                    if local % 4096 == 0 && count.fetch_add(4096, Ordering::Relaxed) + 4096 > budget {
                        abort.store(true, Ordering::Relaxed);
                        return false;
                    }
                    let x = self.to_original(y);
                    visit(&mut acc, &x, v);
                }
                true
            });
            count.fetch_add(local % 4096, Ordering::Relaxed);
            acc
        };
        let out = exec.map(&prefixes, run);
        if abort.load(Ordering::Relaxed) || count.load(Ordering::Relaxed) > budget {
            return Err(Error::BudgetExceeded { budget, bound: fmt_rat(bound) });
        }
        Ok(out)
    }

    /// Splits the top of the search tree into independent subtrees.
    fn prefixes(&self, fbound: f64) -> Vec<Prefix> {
        let n = self.n;
        let mut frontier = vec![Prefix { level: n, coords: vec![], residual: fbound, all_zero: true }];
        while frontier.len() < MIN_TASKS && frontier.iter().all(|p| p.level > 1) {
            let mut next = Vec::new();
            for p in &frontier {
                let i = p.level - 1;
                let mut y = vec![0i64; n];
                y[p.level..].copy_from_slice(&p.coords);
                let (lo, hi, center) = self.range(i, p.residual, &y, p.all_zero);
                for yi in lo..=hi {
                    let d = yi as f64 - center;
                    let residual = p.residual - self.diag[i] * d * d;
                    if residual < -fbound * BOUND_SLACK {
                        continue;
                    }
                    let residual = residual.max(0.0);
                    let mut coords = Vec::with_capacity(p.coords.len() + 1);
                    coords.push(yi);
                    coords.extend_from_slice(&p.coords);
                    next.push(Prefix { level: i, coords, residual, all_zero: p.all_zero && yi == 0 });
                }
            }
            frontier = next;
        }
        frontier
    }

    /// Admissible integer range for coordinate `i` given the higher ones.
    fn range(&self, i: usize, residual: f64, y: &[i64], all_zero: bool) -> (i64, i64, f64) {
        let center = -(i + 1..self.n).map(|j| self.off[i][j] * y[j] as f64).sum::<f64>();
        let radius = (residual.max(0.0) / self.diag[i]).sqrt();
        let mut lo = (center - radius).ceil() as i64;
        let hi = (center + radius).floor() as i64;
        if all_zero {
            lo = lo.max(0);
        }
        (lo, hi, center)
    }

    /// Depth-first completion of coordinates `0..level`.
    fn descend(
        &self,
        level: usize,
        residual: f64,
        all_zero: bool,
        fbound: f64,
        y: &mut [i64],
        emit: &mut dyn FnMut(&[i64]) -> bool,
    ) -> bool {
        if level == 0 {
            if all_zero {
                return true;
            }
            return emit(y);
        }
        let i = level - 1;
        let (lo, hi, center) = self.range(i, residual, y, all_zero);
        for yi in lo..=hi {
            let d = yi as f64 - center;
            let r = residual - self.diag[i] * d * d;
            if r < -fbound * BOUND_SLACK {
                continue;
            }
            y[i] = yi;
            if !self.descend(i, r.max(0.0), all_zero && yi == 0, fbound, y, emit) {
                y[i] = 0;
                return false;
            }
        }
        y[i] = 0;
        true
    }
}

#[derive(Clone, Debug)]
struct Prefix {
    level: usize,
    coords: Vec<i64>,
    residual: f64,
    all_zero: bool,
}

/// One layer `M_k(Q)`: all vectors of squared length `norm`, both signs.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub norm: Rat,
    /// Sorted lexicographically; closed under negation.
    pub vectors: Vec<Vec<i64>>,
}

impl Layer {
    /// Builds a layer from one representative per antipodal pair.
    pub fn from_half(norm: Rat, half: Vec<Vec<i64>>) -> Self {
        let mut vectors = Vec::with_capacity(2 * half.len());
        for x in half {
            vectors.push(x.iter().map(|v| -v).collect());
            vectors.push(x);
        }
        vectors.sort();
        vectors.dedup();
        Layer { norm, vectors }
    }

    pub fn empty(norm: Rat) -> Self {
        Layer { norm, vectors: Vec::new() }
    }

    pub fn cardinality(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.vectors.first().map(Vec::len)
    }
}

/// One representative per pair `{x, −x}`: the sign whose first non-zero coordinate is positive.
pub fn half_layer(layer: &Layer) -> Vec<Vec<i64>> {
    layer
        .vectors
        .iter()
        .filter(|x| x.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0))
        .cloned()
        .collect()
}

/// Layers of a form up to a norm bound.
#[derive(Clone, Debug)]
pub struct LayerSpectrum {
    pub gram: GramMatrix,
    pub bound: Rat,
    /// Non-empty layers in strictly increasing norm order.
    pub layers: Vec<Layer>,
}

impl LayerSpectrum {
    pub fn layer(&self, norm: &Rat) -> Option<&Layer> {
        self.layers.iter().find(|l| &l.norm == norm)
    }

    /// `(m_k, |M_k|)` in norm order.
    pub fn cardinalities(&self) -> Vec<(Rat, usize)> {
        self.layers.iter().map(|l| (l.norm.clone(), l.cardinality())).collect()
    }

    pub fn total_vectors(&self) -> usize {
        self.layers.iter().map(Layer::cardinality).sum()
    }

    /// Writes `"m_k count"` headers each followed by the layer's vectors.
    pub fn dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for layer in &self.layers {
            writeln!(w, "{} {}", fmt_rat(&layer.norm), layer.cardinality())?;
            for x in &layer.vectors {
                let cells: Vec<String> = x.iter().map(i64::to_string).collect();
                writeln!(w, "{}", cells.join(" "))?;
            }
        }
        Ok(())
    }
}

pub fn layer_cardinalities(s: &LayerSpectrum) -> Vec<(Rat, usize)> {
    s.cardinalities()
}

/// All non-zero `x` with `Q[x] ≤ bound`, grouped into layers.
pub fn enumerate_layers(q: &GramMatrix, bound: &Rat) -> Result<LayerSpectrum> {
    enumerate_layers_with(q, bound, Exec::from_features(), DEFAULT_BUDGET)
}

pub fn enumerate_layers_with(q: &GramMatrix, bound: &Rat, exec: Exec, budget: usize) -> Result<LayerSpectrum> {
    let e = Enumerator::new(q)?;
    let parts = e.fold(bound, exec, budget, Vec::new, |acc: &mut Vec<(i128, Vec<i64>)>, x, v| {
        acc.push((v, canonical_sign(x)));
    })?;
    let mut by_norm: BTreeMap<i128, Vec<Vec<i64>>> = BTreeMap::new();
    for (v, x) in parts.into_iter().flatten() {
        by_norm.entry(v).or_default().push(x);
    }
    let layers = by_norm.into_iter().map(|(v, half)| Layer::from_half(e.norm_of(v), half)).collect();
    Ok(LayerSpectrum { gram: q.clone(), bound: bound.clone(), layers })
}

fn canonical_sign(x: &[i64]) -> Vec<i64> {
    match x.iter().find(|&&v| v != 0) {
        Some(&v) if v < 0 => x.iter().map(|c| -c).collect(),
        _ => x.to_vec(),
    }
}

/// Streaming summary of one layer: its cardinality and `Σ x xᵗ` over all of it.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerMoment {
    pub norm: Rat,
    pub cardinality: u64,
    /// Row-major `n×n` integer matrix `Σ_{x∈M_k} x xᵗ`.
    pub moment: Vec<i128>,
}

/// Computes per-layer cardinalities and second moments without storing vectors.
pub fn layer_moments(q: &GramMatrix, bound: &Rat, exec: Exec, budget: usize) -> Result<Vec<LayerMoment>> {
    let e = Enumerator::new(q)?;
    let n = e.dim();
    let parts = e.fold(bound, exec, budget, BTreeMap::new, |acc: &mut BTreeMap<i128, (u64, Vec<i128>)>, x, v| {
        let entry = acc.entry(v).or_insert_with(|| (0, vec![0; n * n]));
        entry.0 += 1;
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            for j in i..n {
                entry.1[i * n + j] += (x[i] as i128) * (x[j] as i128);
            }
        }
    })?;
    let mut merged: BTreeMap<i128, (u64, Vec<i128>)> = BTreeMap::new();
    for part in parts {
        for (v, (c, m)) in part {
            let entry = merged.entry(v).or_insert_with(|| (0, vec![0; n * n]));
            entry.0 += c;
            for (a, b) in entry.1.iter_mut().zip(m) {
                *a += b;
            }
        }
    }
    Ok(merged
        .into_iter()
        .map(|(v, (c, mut m))| {
            // Half-vectors contribute half of the full moment; symmetrise and double.
            for i in 0..n {
                for j in i..n {
                    let val = 2 * m[i * n + j];
                    m[i * n + j] = val;
                    m[j * n + i] = val;
                }
            }
            LayerMoment { norm: e.norm_of(v), cardinality: 2 * c, moment: m }
        })
        .collect())
}
