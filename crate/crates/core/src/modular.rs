//! Vanishing bounds for theta series with harmonic coefficients and the
//! driver deciding whether every layer of a lattice is a 2-design.
//!
//! For an even lattice of level `ℓ` in even dimension `n` and a harmonic `P`
//! of degree 2, `θ_{Λ,P}` is a cusp form in `M_{n/2+2}(Γ₁(ℓ))`. If its first
//! `B` coefficients vanish for `B` at least the Sturm bound of that space, it
//! vanishes identically, so checking the layers up to `Q[x] = 2B` certifies
//! all of them. Odd lattices are doubled first; odd dimensions borrow the
//! level and weight of `Λ ⊥ A₁`.

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::design::{is_t_design_with, verdict_from_moment, DesignVerdict};
use crate::enumerate::{enumerate_layers_with, layer_moments, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gram::{GramFile, GramMatrix, LatticeDescriptor};
use crate::rational::{fmt_rat, rat, Rat};

/// `[SL₂(Z) : Γ₁(N)]`.
pub fn gamma1_index(n: u64) -> u64 {
    match n {
        0 => panic!("level must be positive"),
        1 => 1,
        2 => 3,
        _ => {
            let mut num = n * n;
            let mut m = n;
            let mut p = 2;
            while p * p <= m {
                if m % p == 0 {
                    num = num / (p * p) * (p * p - 1);
                    while m % p == 0 {
                        m /= p;
                    }
                }
                p += 1;
            }
            if m > 1 {
                num = num / (m * m) * (m * m - 1);
            }
            num
        }
    }
}

/// `⌈k·[SL₂(Z):Γ₁(N)]/12⌉`.
pub fn sturm_bound(k: u64, n: u64) -> u64 {
    (k * gamma1_index(n)).div_ceil(12)
}

/// Where the certification bound came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    Sturm,
    Override,
    Reference,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    FullyCritical,
    /// `norm` is the squared length in the input lattice.
    FailureAt { norm: String },
    /// Enumeration stopped early; every layer up to `certified_norm` passed.
    Inconclusive { certified_norm: String, reason: String },
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::FullyCritical => 0,
            Verdict::FailureAt { .. } => 1,
            Verdict::Inconclusive { .. } => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullyCriticalOptions {
    pub override_bound: Option<u64>,
    /// Use the reference pivot exponent when the descriptor carries one.
    pub fast_paper_bound: bool,
    pub budget: usize,
    pub exec: Exec,
    /// Also evaluate the pair sums vector by vector (slow; cross-check).
    pub pair_sums: bool,
}

impl Default for FullyCriticalOptions {
    fn default() -> Self {
        FullyCriticalOptions {
            override_bound: None,
            fast_paper_bound: false,
            budget: DEFAULT_BUDGET,
            exec: Exec::from_features(),
            pair_sums: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullyCriticalReport {
    pub input: GramFile,
    pub doubled: bool,
    pub augmented_with_a1: bool,
    pub level: u64,
    pub weight: u64,
    pub bound_b: u64,
    pub bound_source: BoundSource,
    pub sturm_bound: u64,
    /// Verdicts on the non-empty layers of the working (even) lattice.
    pub per_layer: Vec<DesignVerdict>,
    pub verdict: Verdict,
}

impl FullyCriticalReport {
    /// Norm in the input lattice of a working-lattice norm.
    pub fn input_norm(&self, working: &Rat) -> Rat {
        if self.doubled {
            working / rat(2)
        } else {
            working.clone()
        }
    }

    /// Largest input norm covered by the tested layers.
    pub fn input_bound(&self) -> Rat {
        self.input_norm(&rat(2 * self.bound_b as i64))
    }

    /// `|M_k|/2` for input norms `k = 1..=upto` (zero for empty layers).
    pub fn half_cardinalities(&self, upto: u64) -> Vec<u64> {
        (1..=upto)
            .map(|k| {
                self.per_layer
                    .iter()
                    .find(|v| self.input_norm(&v.norm) == rat(k as i64))
                    .map_or(0, |v| v.cardinality / 2)
            })
            .collect()
    }

    /// Pair sums rescaled to one vector per antipodal pair and to the input
    /// lattice's inner product.
    pub fn transcript_divisor(&self, t: u32) -> Rat {
        let mut d = rat(4);
        if self.doubled {
            d *= rat(1 << t);
        }
        d
    }

    /// Text in the style of the worked example, one line per integral norm.
    pub fn transcript(&self) -> Vec<String> {
        let mut out = Vec::new();
        let top = self.input_bound();
        let upto = top.floor().to_integer().to_u64().unwrap_or(0);
        let divisor = self.transcript_divisor(2);
        for k in 1..=upto {
            let norm = rat(k as i64);
            match self.per_layer.iter().find(|v| self.input_norm(&v.norm) == norm) {
                None => out.push(format!("the layer (x,x)={k} is empty")),
                Some(v) => out.push(v.transcript_line(&divisor, &norm)),
            }
        }
        // Layers at non-integral norms (rational input) are listed after.
        for v in &self.per_layer {
            let norm = self.input_norm(&v.norm);
            if !norm.is_integer() {
                out.push(v.transcript_line(&divisor, &norm));
            }
        }
        out
    }
}

/// The even lattice actually tested, with its bookkeeping.
struct Working {
    gram: GramMatrix,
    doubled: bool,
    augmented: bool,
    level: u64,
    weight: u64,
}

fn working_lattice(q: &GramMatrix) -> Result<Working> {
    if !q.is_integral() {
        return Err(Error::NotIntegral);
    }
    let doubled = !q.is_even();
    let gram = if doubled { q.double() } else { q.clone() };
    let n = gram.dim() as u64;
    let augmented = n % 2 == 1;
    let (level, weight) = if augmented {
        (gram.orthosum_a1().level()?, (n + 1) / 2 + 2)
    } else {
        (gram.level()?, n / 2 + 2)
    };
    Ok(Working { gram, doubled, augmented, level, weight })
}

/// Runs the certification on `l`.
pub fn fully_critical(l: &LatticeDescriptor, opts: &FullyCriticalOptions) -> Result<FullyCriticalReport> {
    let w = working_lattice(&l.gram)?;
    let sturm = sturm_bound(w.weight, w.level);
    let (bound_b, source) = match (opts.override_bound, opts.fast_paper_bound, l.reference_n) {
        (Some(b), _, _) => (b, BoundSource::Override),
        (None, true, Some(nref)) => (nref as u64, BoundSource::Reference),
        _ => (sturm, BoundSource::Sturm),
    };
    if bound_b == 0 {
        return Err(Error::NonPositiveBound);
    }
    let mut report = FullyCriticalReport {
        input: GramFile::from_descriptor(l),
        doubled: w.doubled,
        augmented_with_a1: w.augmented,
        level: w.level,
        weight: w.weight,
        bound_b,
        bound_source: source,
        sturm_bound: sturm,
        per_layer: Vec::new(),
        verdict: Verdict::FullyCritical,
    };

    // Try the full bound; on budget exhaustion back off to certify a prefix.
    let full = rat(2 * bound_b as i64);
    let mut bound = full.clone();
    let mut reason = None;
    loop {
        match test_layers(&w.gram, &bound, opts) {
            Ok(verdicts) => {
                report.per_layer = verdicts;
                break;
            }
            Err(e @ Error::BudgetExceeded { .. }) => {
                reason.get_or_insert_with(|| e.to_string());
                bound = (&bound / rat(2)).floor();
                if bound.is_zero() {
                    report.verdict = Verdict::Inconclusive {
                        certified_norm: "0".into(),
                        reason: reason.unwrap_or_default(),
                    };
                    return Ok(report);
                }
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(bad) = report.per_layer.iter().find(|v| !v.is_design) {
        report.verdict = Verdict::FailureAt { norm: fmt_rat(&report.input_norm(&bad.norm)) };
    } else if bound < full {
        report.verdict = Verdict::Inconclusive {
            certified_norm: fmt_rat(&report.input_norm(&bound)),
            reason: reason.unwrap_or_default(),
        };
    }
    Ok(report)
}

fn test_layers(q: &GramMatrix, bound: &Rat, opts: &FullyCriticalOptions) -> Result<Vec<DesignVerdict>> {
    let moments = layer_moments(q, bound, opts.exec, opts.budget)?;
    let verdicts = opts.exec.map(&moments, |lm| verdict_from_moment(lm, q));
    let verdicts = verdicts.into_iter().collect::<Result<Vec<_>>>()?;
    if opts.pair_sums {
        let spectrum = enumerate_layers_with(q, bound, opts.exec, opts.budget)?;
        for (layer, v) in spectrum.layers.iter().zip(&verdicts) {
            let direct = is_t_design_with(layer, q, 2, opts.exec)?;
            if &direct != v {
                return Err(Error::RouteDisagreement { norm: fmt_rat(&layer.norm) });
            }
        }
    }
    Ok(verdicts)
}

/// Answers for the question: are the first two layers 2-designs, and are all?
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureProbe {
    pub first_two_designs: bool,
    /// `None` when the certification was inconclusive.
    pub fully_critical: Option<bool>,
    pub counterexample: bool,
}

pub fn conjecture_probe(l: &LatticeDescriptor, opts: &FullyCriticalOptions) -> Result<ConjectureProbe> {
    let w = working_lattice(&l.gram)?;
    // A failing first or second layer already settles the question.
    if !first_two_layers_are_designs(&w.gram, opts)? {
        return Ok(ConjectureProbe { first_two_designs: false, fully_critical: Some(false), counterexample: false });
    }
    let report = fully_critical(l, opts)?;
    let fully = match report.verdict {
        Verdict::FullyCritical => Some(true),
        Verdict::FailureAt { .. } => Some(false),
        Verdict::Inconclusive { .. } => None,
    };
    Ok(ConjectureProbe { first_two_designs: true, fully_critical: fully, counterexample: fully == Some(false) })
}

fn first_two_layers_are_designs(q: &GramMatrix, opts: &FullyCriticalOptions) -> Result<bool> {
    let mut bound = rat(4);
    loop {
        let moments = layer_moments(q, &bound, opts.exec, opts.budget)?;
        if moments.len() >= 2 {
            for lm in &moments[..2] {
                if !verdict_from_moment(lm, q)?.is_design {
                    return Ok(false);
                }
            }
            return Ok(true);
        }
        bound *= rat(2);
    }
}
