//! Epstein zeta, the height of flat tori and its gradient on the space of
//! determinant-1 forms.
//!
//! For a form `Q` of determinant `|Q|` and `s ∉ {0, n/2}`,
//!
//! ```text
//! π^{−s}Γ(s)Z(Q,s) = |Q|^{−1/2}/(s − n/2) − 1/s
//!                  + Σ_{m≠0} φ_s(πQ[m]) + |Q|^{−1/2} Σ_{m≠0} φ_{n/2−s}(πQ⁻¹[m])
//! ```
//!
//! with `φ_a(x) = x^{−a}Γ(a,x) = ∫₁^∞ e^{−xt} t^{a−1} dt`. For `|Q| = 1`,
//! `Z'(Q⁻¹,0) = C + F_Q(0)` with `C = −2/n − γ − log π` and
//! `F_Q(0) = Σ φ_0(πQ⁻¹[m]) + Σ φ_{n/2}(πQ[m])`; the height of the torus is
//! `h = C + F_Q(0) + 2 log 2π`.
//!
//! Lattice sums include every `m` with `πQ[m] ≤ R` and carry an explicit
//! bound on the omitted tail. Summation runs over fixed chunks in a fixed
//! order, so results are bit-identical across thread counts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::enumerate::{layer_moments, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::exec::{Exec, REDUCE_CHUNK};
use crate::gram::{GramMatrix, LatticeDescriptor};
use crate::lll::lll_transform;
use crate::manifold::{exp_map, tangent_project, trace_product, RealForm, TangentDirection};
use crate::rational::{rat_to_f64, Rat};
use crate::special::{incomplete_gamma_upper, rgamma};

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Default truncation: all `m` with `πQ[m] ≤ 40`.
pub const DEFAULT_RADIUS: f64 = 40.0;
const MAX_RADIUS: f64 = 400.0;
const RADIUS_STEP: f64 = 10.0;
/// Target for the certified tail relative to the partial sum.
const TAIL_TARGET: f64 = 1e-13;
const POINT_BUDGET: usize = 5_000_000;

/// Truncation and execution parameters for lattice sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SumOptions {
    pub radius: f64,
    /// Grow the radius until the tail bound meets the target.
    pub auto_expand: bool,
    pub exec: Exec,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions { radius: DEFAULT_RADIUS, auto_expand: true, exec: Exec::from_features() }
    }
}

impl SumOptions {
    pub fn fixed(radius: f64) -> Self {
        SumOptions { radius, auto_expand: false, ..Default::default() }
    }
}

/// `φ_a(x) = x^{−a}Γ(a, x)`.
fn phi(a: f64, x: f64) -> f64 {
    let g = incomplete_gamma_upper(a, x).expect("x > 0 for non-zero lattice vectors");
    if a == 0.0 {
        g
    } else {
        (-a * x.ln()).exp() * g
    }
}

/// One representative of each pair `±m` with `Q[m] ≤ cutoff`, and its norm.
#[derive(Clone, Debug)]
struct HalfPoints {
    vectors: Vec<Vec<i64>>,
    norms: Vec<f64>,
}

fn half_points(form: &RealForm, cutoff: f64) -> Result<HalfPoints> {
    let n = form.dim();
    let g = form.matrix();
    let u = lll_transform(g, 0.99);
    let um = DMatrix::from_fn(n, n, |i, j| u[i][j] as f64);
    let gr = um.transpose() * g * &um;
    // gr = L D Lᵗ with unit lower-triangular L.
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = vec![0.0; n];
    for j in 0..n {
        let mut v = gr[(j, j)];
        for k in 0..j {
            v -= l[(j, k)] * l[(j, k)] * d[k];
        }
        d[j] = v;
        for i in (j + 1)..n {
            let mut w = gr[(i, j)];
            for k in 0..j {
                w -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = w / v;
        }
    }
    let slack = cutoff * (1.0 + 1e-12);
    let mut out = HalfPoints { vectors: Vec::new(), norms: Vec::new() };
    let mut y = vec![0i64; n];
    let mut visit = |y: &[i64]| -> Result<()> {
        let x: Vec<i64> = (0..n).map(|i| (0..n).map(|j| u[i][j] * y[j]).sum()).collect();
        let v = form.norm(&x);
        if v <= cutoff {
            if out.vectors.len() >= POINT_BUDGET {
                return Err(Error::BudgetExceeded { budget: POINT_BUDGET, bound: format!("{cutoff}") });
            }
            out.vectors.push(x);
            out.norms.push(v);
        }
        Ok(())
    };
    descend(&l, &d, n, slack, &mut y, true, &mut visit)?;
    Ok(out)
}

/// Depth-first search over coordinate `k − 1`, given coordinates `k..n`.
/// While all outer coordinates vanish only non-negative values are taken,
/// which selects one vector of each antipodal pair.
fn descend<F: FnMut(&[i64]) -> Result<()>>(
    l: &DMatrix<f64>,
    d: &[f64],
    k: usize,
    budget: f64,
    y: &mut [i64],
    outer_zero: bool,
    visit: &mut F,
) -> Result<()> {
    if k == 0 {
        if !outer_zero {
            visit(y)?;
        }
        return Ok(());
    }
    let i = k - 1;
    let n = y.len();
    let c: f64 = -((i + 1)..n).map(|j| l[(j, i)] * y[j] as f64).sum::<f64>();
    let r = (budget.max(0.0) / d[i]).sqrt();
    let mut lo = (c - r).ceil() as i64;
    let hi = (c + r).floor() as i64;
    if outer_zero {
        lo = lo.max(0);
    }
    for v in lo..=hi {
        let t = v as f64 - c;
        let rest = budget - d[i] * t * t;
        if rest < -1e-12 * budget.abs().max(1.0) {
            continue;
        }
        y[i] = v;
        descend(l, d, i, rest, y, outer_zero && v == 0, visit)?;
    }
    y[i] = 0;
    Ok(())
}

/// Deterministic `2·Σ_half f(Q[m])`.
fn sum_over(points: &HalfPoints, exec: Exec, f: impl Fn(f64) -> f64 + Sync + Send) -> f64 {
    let parts = exec.map_chunks(&points.norms, REDUCE_CHUNK, |c| c.iter().map(|&v| f(v)).sum::<f64>());
    2.0 * parts.into_iter().sum::<f64>()
}

/// Deterministic `2·Σ_half w(Q[m])·m mᵗ`.
fn weighted_moment(points: &HalfPoints, exec: Exec, w: impl Fn(f64) -> f64 + Sync + Send) -> DMatrix<f64> {
    let n = points.vectors.first().map_or(0, Vec::len);
    let idx: Vec<usize> = (0..points.vectors.len()).collect();
    let parts = exec.map_chunks(&idx, REDUCE_CHUNK, |c| {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for &k in c {
            let x = &points.vectors[k];
            let wk = w(points.norms[k]);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += wk * (x[i] * x[j]) as f64;
                }
            }
        }
        m
    });
    let mut total = DMatrix::<f64>::zeros(n, n);
    for p in parts {
        total += p;
    }
    total * 2.0
}

/// Upper bound on `#{m : Q[m] ≤ r}` from `|m_i| ≤ √(r·(Q⁻¹)_{ii})`.
fn count_bound(inv_diag: &[f64], r: f64) -> f64 {
    inv_diag.iter().map(|&q| 2.0 * (r * q).sqrt().floor() + 1.0).product()
}

/// Bound on `Σ_{Q[m] > cutoff} w(Q[m])·g(Q[m])` for decreasing `g` and
/// non-decreasing `w`, over unit-width shells.
fn tail_bound(form: &RealForm, cutoff: f64, g: impl Fn(f64) -> f64, w: impl Fn(f64) -> f64) -> f64 {
    let inv = form.inverse();
    let diag: Vec<f64> = (0..form.dim()).map(|i| inv.matrix()[(i, i)]).collect();
    let mut total = 0.0;
    for j in 0..100_000 {
        let lo = cutoff + j as f64;
        let term = count_bound(&diag, lo + 1.0) * g(lo) * w(lo + 1.0);
        total += term;
        if term < 1e-40 || (j > 10 && term < total * 1e-18) {
            break;
        }
    }
    total
}

fn largest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v))
}

/// A truncated lattice sum with its tail bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSum {
    pub value: f64,
    pub tail: f64,
    pub radius: f64,
    pub points: usize,
}

/// Runs `eval` at growing radii until the tail meets the target.
fn expand<T>(opts: &SumOptions, mut eval: impl FnMut(f64) -> Result<(T, f64, f64)>) -> Result<(T, f64, f64, f64)> {
    let mut radius = opts.radius;
    if !(radius > 0.0) {
        return Err(Error::NonPositiveBound);
    }
    loop {
        let (v, scale, tail) = eval(radius)?;
        if !opts.auto_expand || tail <= TAIL_TARGET * scale.abs() {
            return Ok((v, scale, tail, radius));
        }
        if radius >= MAX_RADIUS {
            return Err(Error::NoConvergence(format!("tail {tail:e} above target at radius {radius}")));
        }
        radius += RADIUS_STEP;
    }
}

/// `Λ(Q, s) = π^{−s}Γ(s)Z(Q,s)` via the incomplete-gamma continuation.
pub fn continuation(form: &RealForm, s: f64, opts: &SumOptions) -> Result<TruncatedSum> {
    let n = form.dim() as f64;
    check_s(s, n)?;
    let det = form.determinant();
    let c = det.powf(-0.5);
    let inv = form.inverse();
    let a1 = s;
    let a2 = n / 2.0 - s;
    let (value, _, tail, radius) = expand(opts, |r| {
        let p = half_points(form, r / PI)?;
        let d = half_points(&inv, r / PI)?;
        let main = c / (s - n / 2.0) - 1.0 / s;
        let v = main
            + sum_over(&p, opts.exec, |v| phi(a1, PI * v))
            + c * sum_over(&d, opts.exec, |v| phi(a2, PI * v));
        let tail = tail_bound(form, r / PI, |v| phi(a1, PI * v), |_| 1.0)
            + c * tail_bound(&inv, r / PI, |v| phi(a2, PI * v), |_| 1.0);
        Ok(((v, p.vectors.len() + d.vectors.len()), v, tail))
    })?;
    Ok(TruncatedSum { value: value.0, tail, radius, points: value.1 })
}

fn check_s(s: f64, n: f64) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("s = {s}")));
    }
    if (s - n / 2.0).abs() < 1e-12 {
        return Err(Error::Pole(s));
    }
    if s == 0.0 {
        return Err(Error::Domain("s = 0: Z(Q,0) = −1; use the height routines for derivative data".into()));
    }
    Ok(())
}

/// `Z(Q, s)` for a real form.
pub fn epstein_zeta_form(form: &RealForm, s: f64, opts: &SumOptions) -> Result<f64> {
    let l = continuation(form, s, opts)?;
    Ok(PI.powf(s) * rgamma(s) * l.value)
}

/// `Z(Q, s) = Σ_{m≠0} Q[m]^{−s}`, analytically continued.
pub fn epstein_zeta(q: &GramMatrix, s: f64) -> Result<f64> {
    epstein_zeta_form(&RealForm::from_gram(q), s, &SumOptions::default())
}

/// `C = −2/n − γ − log π`.
pub fn constant_c(n: usize) -> f64 {
    -2.0 / n as f64 - EULER_GAMMA - PI.ln()
}

/// `F_Q(0)` for a determinant-1 form.
pub fn f_value_form(form: &RealForm, opts: &SumOptions) -> Result<TruncatedSum> {
    let n = form.dim() as f64;
    let inv = form.inverse();
    let (value, _, tail, radius) = expand(opts, |r| {
        let p = half_points(form, r / PI)?;
        let d = half_points(&inv, r / PI)?;
        let v = sum_over(&d, opts.exec, |v| phi(0.0, PI * v)) + sum_over(&p, opts.exec, |v| phi(n / 2.0, PI * v));
        let tail = tail_bound(&inv, r / PI, |v| phi(0.0, PI * v), |_| 1.0)
            + tail_bound(form, r / PI, |v| phi(n / 2.0, PI * v), |_| 1.0);
        Ok(((v, p.vectors.len() + d.vectors.len()), v, tail))
    })?;
    Ok(TruncatedSum { value: value.0, tail, radius, points: value.1 })
}

/// `F_Q(0)` of `Q/|Q|^{1/n}`.
pub fn f_value(q: &GramMatrix) -> Result<f64> {
    Ok(f_value_form(&RealForm::normalized(q), &SumOptions::default())?.value)
}

/// Gradient of `F(·, 0)` together with its tail bound (Frobenius).
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub matrix: DMatrix<f64>,
    pub tail: f64,
    pub radius: f64,
}

/// `α(v) = π φ_{n/2+1}(πv)` and `β(v) = e^{−πv}/v`.
fn alpha(n: f64, v: f64) -> f64 {
    PI * phi(n / 2.0 + 1.0, PI * v)
}

fn beta(v: f64) -> f64 {
    (-PI * v).exp() / v
}

/// `Σ_m [−α(Q[m]) m mᵗ] + Σ_m [β(Q⁻¹[m]) Q⁻¹m mᵗQ⁻¹]`, one term per vector.
pub fn grad_f_form(form: &RealForm, opts: &SumOptions) -> Result<Gradient> {
    let n = form.dim() as f64;
    let inv = form.inverse();
    let qi = inv.matrix().clone();
    let k_q = largest_eigenvalue(&qi);
    let k_d = largest_eigenvalue(form.matrix());
    let qi_norm2 = k_q * k_q;
    let ((matrix, _), _, tail, radius) = expand(opts, |r| {
        let p = half_points(form, r / PI)?;
        let d = half_points(&inv, r / PI)?;
        let first = weighted_moment(&p, opts.exec, |v| alpha(n, v));
        let second = weighted_moment(&d, opts.exec, beta);
        let g = -first + &qi * second * &qi;
        let tail = tail_bound(form, r / PI, |v| alpha(n, v), |v| v * k_q)
            + tail_bound(&inv, r / PI, beta, |v| v * k_d * qi_norm2);
        let scale = g.norm().max(f64::MIN_POSITIVE);
        Ok(((g, p.vectors.len() + d.vectors.len()), scale, tail))
    })?;
    Ok(Gradient { matrix: (&matrix + matrix.transpose()) * 0.5, tail, radius })
}

/// Layer-grouped gradient at `Q/|Q|^{1/n}`: `α_k` and `β_j` are evaluated
/// once per layer and the layer moments `Σ m mᵗ` are exact integers.
pub fn grad_f(q0: &GramMatrix, radius: f64) -> Result<DMatrix<f64>> {
    if !(radius > 0.0) {
        return Err(Error::NonPositiveBound);
    }
    let n = q0.dim();
    let nf = n as f64;
    let delta = rat_to_f64(&q0.determinant()).powf(1.0 / nf);
    let qinv = q0.inverse();
    // Normalised norms are Q[m]/δ and δ·Q⁻¹[m].
    let bound_q = rat_upper(radius / PI * delta);
    let bound_d = rat_upper(radius / PI / delta);
    let exec = Exec::from_features();
    let moments_q = layer_moments(q0, &bound_q, exec, DEFAULT_BUDGET)?;
    let moments_d = layer_moments(&qinv, &bound_d, exec, DEFAULT_BUDGET)?;
    let to_mat = |m: &[i128]| DMatrix::from_fn(n, n, |i, j| m[i * n + j] as f64);
    let mut first = DMatrix::<f64>::zeros(n, n);
    for lm in &moments_q {
        let v = rat_to_f64(&lm.norm) / delta;
        first += to_mat(&lm.moment) * alpha(nf, v);
    }
    let mut second = DMatrix::<f64>::zeros(n, n);
    for lm in &moments_d {
        let v = rat_to_f64(&lm.norm) * delta;
        second += to_mat(&lm.moment) * beta(v);
    }
    let qi = qinv.to_f64() * delta;
    let g = -first + &qi * second * &qi;
    Ok((&g + g.transpose()) * 0.5)
}

fn rat_upper(x: f64) -> Rat {
    let scaled = (x * 1024.0).ceil() as i64 + 1;
    Rat::new(scaled.into(), 1024.into())
}

/// `‖P(G)‖_F / ‖G‖_F` with `P` the projection onto the tangent space at `form`.
pub fn stationarity_residual_form(form: &RealForm, opts: &SumOptions) -> Result<f64> {
    let g = grad_f_form(form, opts)?;
    let proj = tangent_project(form, &g.matrix);
    Ok(proj.h.norm() / g.matrix.norm().max(1e-300))
}

/// Stationarity residual of `Q/|Q|^{1/n}`.
pub fn stationarity_residual(q0: &GramMatrix) -> Result<f64> {
    stationarity_residual_form(&RealForm::normalized(q0), &SumOptions::default())
}

/// `(F(e(step·H)) − F(e(−step·H)))/(2·step)`.
pub fn directional_derivative_fd(dir: &TangentDirection, step: f64, opts: &SumOptions) -> Result<f64> {
    if step == 0.0 {
        return Err(Error::Domain("finite-difference step must be non-zero".into()));
    }
    if dir.h.norm() == 0.0 {
        return Ok(0.0);
    }
    let plus = f_value_form(&exp_map(dir, step)?, opts)?.value;
    let minus = f_value_form(&exp_map(dir, -step)?, opts)?.value;
    Ok((plus - minus) / (2.0 * step))
}

/// Everything computed for the height of one lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightReport {
    pub height: f64,
    pub f_value: f64,
    pub constant_c: f64,
    pub gradient: Vec<Vec<f64>>,
    pub projected_residual: f64,
    pub truncation_radius: f64,
    pub tail_estimate: f64,
    pub points: usize,
}

/// Height of the torus `Rⁿ/Λ` after scaling `Λ` to covolume 1.
pub fn height(l: &LatticeDescriptor) -> Result<HeightReport> {
    height_with(&l.gram, &SumOptions::default())
}

pub fn height_with(q: &GramMatrix, opts: &SumOptions) -> Result<HeightReport> {
    height_of_form(&RealForm::normalized(q), opts)
}

pub fn height_of_form(form: &RealForm, opts: &SumOptions) -> Result<HeightReport> {
    let n = form.dim();
    let f = f_value_form(form, opts)?;
    let pinned = SumOptions { radius: f.radius, auto_expand: opts.auto_expand, exec: opts.exec };
    let g = grad_f_form(form, &pinned)?;
    let proj = tangent_project(form, &g.matrix);
    let c = constant_c(n);
    Ok(HeightReport {
        height: c + f.value + 2.0 * (2.0 * PI).ln(),
        f_value: f.value,
        constant_c: c,
        gradient: (0..n).map(|i| (0..n).map(|j| g.matrix[(i, j)]).collect()).collect(),
        projected_residual: proj.h.norm() / g.matrix.norm().max(1e-300),
        truncation_radius: f.radius,
        tail_estimate: f.tail,
        points: f.points,
    })
}

/// Heuristic look at the second-order behaviour of `F` around a form:
/// for `samples` random tangent directions, the sign of
/// `F(e(tH)) + F(e(−tH)) − 2F(Q₀)`. This is sampling, not a classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProbe {
    pub samples: usize,
    pub step: f64,
    pub increasing: usize,
    pub decreasing: usize,
    pub heuristic: bool,
}

pub fn curvature_probe(form: &RealForm, samples: usize, step: f64, seed: u64, opts: &SumOptions) -> Result<CurvatureProbe> {
    let n = form.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = f_value_form(form, opts)?.value;
    let mut inc = 0;
    let mut dec = 0;
    for _ in 0..samples {
        let mut s = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        let dir = tangent_project(form, &s);
        let dir = TangentDirection { h: &dir.h / dir.h.norm().max(1e-300), base: dir.base };
        let plus = f_value_form(&exp_map(&dir, step)?, opts)?.value;
        let minus = f_value_form(&exp_map(&dir, -step)?, opts)?.value;
        if plus + minus - 2.0 * f0 > 0.0 {
            inc += 1;
        } else {
            dec += 1;
        }
    }
    Ok(CurvatureProbe { samples, step, increasing: inc, decreasing: dec, heuristic: true })
}

/// `⟨G, H⟩` for the analytic gradient.
pub fn directional_derivative(form: &RealForm, h: &DMatrix<f64>, opts: &SumOptions) -> Result<f64> {
    Ok(trace_product(&grad_f_form(form, opts)?.matrix, h))
}
