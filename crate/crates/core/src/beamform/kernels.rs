//! Per-pixel beamformers.
//!
//! Every kernel takes the `M` delayed samples gathered for one pixel. DMAS
//! and DS-DMAS come in two evaluation modes that compute the same value:
//!
//! * **naive** sums every pairwise product with an explicit double loop,
//!   `O(M^2)` multiplications;
//! * **fast** uses `sum_{i<j} a_i a_j = ((sum a)^2 - sum a^2) / 2`, `O(M)`.
//!
//! Both DMAS variants apply the signed square root to each sample first, so
//! a pair product `sqrt(x_i) * sqrt(x_j)` has the dimension of one sample.
//! DS-DMAS splits the DMAS sum into its `M - 1` row terms
//! `t_i = x_i * (x_{i+1} + ... + x_{M-1})` and couples those terms a second
//! time, again after a signed square root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Beamformer {
    Das,
    Dmas,
    #[serde(rename = "dsdmas")]
    DsDmas,
}

impl Beamformer {
    pub const ALL: [Beamformer; 3] = [Beamformer::Das, Beamformer::Dmas, Beamformer::DsDmas];

    /// Smallest element count the beamformer is defined for.
    pub fn min_elements(self) -> usize {
        match self {
            Beamformer::Das => 1,
            Beamformer::Dmas => 2,
            Beamformer::DsDmas => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Beamformer::Das => "das",
            Beamformer::Dmas => "dmas",
            Beamformer::DsDmas => "dsdmas",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Beamformer::Das => "DAS",
            Beamformer::Dmas => "DMAS",
            Beamformer::DsDmas => "DS-DMAS",
        }
    }

    pub fn check_elements(self, m: usize) -> Result<()> {
        if m < self.min_elements() {
            Err(Error::TooFewElements {
                method: self.label(),
                required: self.min_elements(),
                got: m,
            })
        } else {
            Ok(())
        }
    }

    pub fn parse(s: &str) -> Option<Beamformer> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "das" => Some(Beamformer::Das),
            "dmas" => Some(Beamformer::Dmas),
            "dsdmas" => Some(Beamformer::DsDmas),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Naive,
    #[default]
    Fast,
}

impl EvalMode {
    pub fn name(self) -> &'static str {
        match self {
            EvalMode::Naive => "naive",
            EvalMode::Fast => "fast",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BeamformMethod {
    pub beamformer: Beamformer,
    pub mode: EvalMode,
}

impl BeamformMethod {
    pub fn new(beamformer: Beamformer, mode: EvalMode) -> Self {
        Self { beamformer, mode }
    }

    pub fn fast(beamformer: Beamformer) -> Self {
        Self::new(beamformer, EvalMode::Fast)
    }

    pub fn naive(beamformer: Beamformer) -> Self {
        Self::new(beamformer, EvalMode::Naive)
    }
}

/// Operation tally for instrumented kernel runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    /// Pairwise products formed inside an explicit double loop.
    pub couplings: u64,
    /// DS-DMAS row-term products `x_i * suffix_i`.
    pub term_products: u64,
    /// Squarings in the factored forms.
    pub squares: u64,
    pub signed_sqrts: u64,
    pub additions: u64,
}

impl OpCounts {
    pub fn multiplications(&self) -> u64 {
        self.couplings + self.term_products + self.squares
    }
}

/// Sink for operation counts. `()` discards everything and compiles away.
pub trait OpCounter {
    fn coupling(&mut self);
    fn term_product(&mut self);
    fn square(&mut self);
    fn signed_sqrt(&mut self);
    fn addition(&mut self);
}

impl OpCounter for () {
    #[inline(always)]
    fn coupling(&mut self) {}
    #[inline(always)]
    fn term_product(&mut self) {}
    #[inline(always)]
    fn square(&mut self) {}
    #[inline(always)]
    fn signed_sqrt(&mut self) {}
    #[inline(always)]
    fn addition(&mut self) {}
}

impl OpCounter for OpCounts {
    fn coupling(&mut self) {
        self.couplings += 1;
    }
    fn term_product(&mut self) {
        self.term_products += 1;
    }
    fn square(&mut self) {
        self.squares += 1;
    }
    fn signed_sqrt(&mut self) {
        self.signed_sqrts += 1;
    }
    fn addition(&mut self) {
        self.additions += 1;
    }
}

/// `sign(v) * sqrt(|v|)`.
#[inline]
pub fn signed_sqrt(v: f64) -> f64 {
    // branchless: delayed RF samples flip sign unpredictably
    v.abs().sqrt().copysign(v)
}

/// Delay-and-sum: plain sum of the delayed samples.
pub fn das_pixel(delayed: &[f64]) -> f64 {
    das_counted(delayed, &mut ())
}

pub fn dmas_pixel(delayed: &[f64], mode: EvalMode) -> Result<f64> {
    Beamformer::Dmas.check_elements(delayed.len())?;
    let mut scratch = Scratch::with_capacity(delayed.len());
    Ok(dmas_counted(delayed, mode, &mut scratch, &mut ()))
}

/// The `M - 1` row terms of the DMAS expansion on signed-square-rooted
/// samples: `t_i = xbar_i * sum_{j > i} xbar_j`.
pub fn dsdmas_terms(delayed: &[f64]) -> Result<Vec<f64>> {
    Beamformer::Dmas.check_elements(delayed.len())?;
    let mut scratch = Scratch::with_capacity(delayed.len());
    fill_terms(delayed, &mut scratch, &mut ());
    Ok(scratch.terms)
}

pub fn dsdmas_pixel(delayed: &[f64], mode: EvalMode) -> Result<f64> {
    Beamformer::DsDmas.check_elements(delayed.len())?;
    let mut scratch = Scratch::with_capacity(delayed.len());
    Ok(dsdmas_counted(delayed, mode, &mut scratch, &mut ()))
}

/// Evaluates `method` once and reports the operations it performed.
pub fn count_ops(delayed: &[f64], method: BeamformMethod) -> Result<(f64, OpCounts)> {
    method.beamformer.check_elements(delayed.len())?;
    let mut scratch = Scratch::with_capacity(delayed.len());
    let mut counts = OpCounts::default();
    let v = scratch.eval(delayed, method, &mut counts);
    Ok((v, counts))
}

/// Reusable buffers so the image loop does not allocate per pixel.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    roots: Vec<f64>,
    terms: Vec<f64>,
}

impl Scratch {
    pub fn with_capacity(m: usize) -> Self {
        Self {
            roots: Vec::with_capacity(m),
            terms: Vec::with_capacity(m),
        }
    }

    /// Evaluates `method` without checking the element count; callers
    /// validate `M` once up front.
    #[inline]
    pub fn eval<C: OpCounter>(&mut self, delayed: &[f64], method: BeamformMethod, counter: &mut C) -> f64 {
        match method.beamformer {
            Beamformer::Das => das_counted(delayed, counter),
            Beamformer::Dmas => dmas_counted(delayed, method.mode, self, counter),
            Beamformer::DsDmas => dsdmas_counted(delayed, method.mode, self, counter),
        }
    }
}

#[inline]
fn das_counted<C: OpCounter>(delayed: &[f64], counter: &mut C) -> f64 {
    let mut acc = 0.0;
    for &x in delayed {
        acc += x;
        counter.addition();
    }
    acc
}

#[inline]
fn fill_roots<C: OpCounter>(delayed: &[f64], roots: &mut Vec<f64>, counter: &mut C) {
    roots.clear();
    roots.extend(delayed.iter().map(|&x| {
        counter.signed_sqrt();
        signed_sqrt(x)
    }));
}

/// Sum of `a_i * a_j` over all `i < j`.
#[inline]
fn pair_sum<C: OpCounter>(a: &[f64], mode: EvalMode, counter: &mut C) -> f64 {
    match mode {
        EvalMode::Naive => {
            let mut acc = 0.0;
            for i in 0..a.len() {
                for j in (i + 1)..a.len() {
                    acc += a[i] * a[j];
                    counter.coupling();
                    counter.addition();
                }
            }
            acc
        }
        EvalMode::Fast => {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for &v in a {
                sum += v;
                sq += v * v;
                counter.square();
                counter.addition();
                counter.addition();
            }
            counter.square();
            counter.addition();
            (sum * sum - sq) * 0.5
        }
    }
}

#[inline]
fn dmas_counted<C: OpCounter>(delayed: &[f64], mode: EvalMode, s: &mut Scratch, counter: &mut C) -> f64 {
    fill_roots(delayed, &mut s.roots, counter);
    pair_sum(&s.roots, mode, counter)
}

/// Row terms via one backward suffix-sum pass.
#[inline]
fn fill_terms<C: OpCounter>(delayed: &[f64], s: &mut Scratch, counter: &mut C) {
    fill_roots(delayed, &mut s.roots, counter);
    let m = s.roots.len();
    s.terms.clear();
    s.terms.resize(m - 1, 0.0);
    let mut suffix = 0.0;
    for i in (0..m - 1).rev() {
        suffix += s.roots[i + 1];
        counter.addition();
        s.terms[i] = s.roots[i] * suffix;
        counter.term_product();
    }
}

#[inline]
fn dsdmas_counted<C: OpCounter>(delayed: &[f64], mode: EvalMode, s: &mut Scratch, counter: &mut C) -> f64 {
    fill_terms(delayed, s, counter);
    for t in s.terms.iter_mut() {
        *t = signed_sqrt(*t);
        counter.signed_sqrt();
    }
    pair_sum(&s.terms, mode, counter)
}

/// Operation counts listed for each beamformer in the reference complexity
/// table: `M`, `M(M-1)/2 + 2(M-1)` and `M(M-1) + 3(M-1)`.
pub fn table_operation_count(beamformer: Beamformer, m: u64) -> u64 {
    match beamformer {
        Beamformer::Das => m,
        Beamformer::Dmas => m * (m - 1) / 2 + 2 * (m - 1),
        Beamformer::DsDmas => m * (m - 1) + 3 * (m - 1),
    }
}
