//! Stable special functions and binomial probabilities.
//!
//! Everything here is plain binary64; the accuracy targets are recorded in
//! [`PrecisionPolicy`]. The binomial pmf is computed with the saddle-point
//! method (Stirling error plus binomial deviance), which keeps the relative
//! error at a few ulp uniformly in `n` and `k`; cdf values are tail sums of
//! pmf terms taken in a fixed order with Neumaier compensation.

mod erf;

pub use erf::{erf, erfc};

use crate::{Error, Result};
use serde::Serialize;

/// `sqrt(2*pi)`.
pub const SQRT_2PI: f64 = 2.506628274631000502415765284811045253;
/// `1/sqrt(2*pi)`.
pub const FRAC_1_SQRT_2PI: f64 = 0.3989422804014326779399460599343818685;

/// The pair `(n, p)` with its derived quantities. `q` is computed once as
/// `1 - p` and reused everywhere so that every downstream formula sees the
/// same rounding of the complement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinomialPoint {
    n: u64,
    p: f64,
    q: f64,
    sigma: f64,
}

impl BinomialPoint {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain(format!("n must be >= 1, got {n}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("p must lie in (0,1), got {p}")));
        }
        let q = 1.0 - p;
        let sigma = (n as f64 * p * q).sqrt();
        if !(sigma > 0.0) {
            return Err(Error::domain(format!("sigma = sqrt(npq) vanished for n={n}, p={p}")));
        }
        Ok(BinomialPoint { n, p, q, sigma })
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    /// `sqrt(npq)`.
    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `n*p` as binary64.
    #[inline]
    pub fn mean(&self) -> f64 {
        self.n as f64 * self.p
    }
}

/// Accuracy targets for the kernels in this module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrecisionPolicy {
    /// Target relative error of `exp(log_binom_pmf(..))`.
    pub pmf_rel_tol: f64,
    /// Target absolute error of `binom_cdf_strict`.
    pub cdf_abs_tol: f64,
    /// Target absolute error of `normal_cdf`.
    pub phi_abs_tol: f64,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { pmf_rel_tol: 1e-13, cdf_abs_tol: 1e-14, phi_abs_tol: 1e-15 }
    }
}

impl PrecisionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.pmf_rel_tol > 0.0 && self.cdf_abs_tol > 0.0 && self.phi_abs_tol > 0.0 {
            Ok(())
        } else {
            Err(Error::domain("precision tolerances must be positive"))
        }
    }
}

/// Compensated accumulator (Kahan with Neumaier's correction), so tail sums
/// of many small terms stay accurate to a couple of ulp of the total.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    s: f64,
    c: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn new(v: f64) -> Self {
        NeumaierSum { s: v, c: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.s + self.c
    }
}

// stirlerr(n) = ln n! - [n ln n - n + 0.5 ln(2 pi n)], tabulated for small n.
const STIRLERR_TABLE: [f64; 30] = [
    0.08106146679532725821967, // 1
    0.04134069595540929409382, // 2
    0.02767792568499833914879, // 3
    0.02079067210376509311152, // 4
    0.01664469118982119216319, // 5
    0.01387612882307074799875, // 6
    0.01189670994589177009506, // 7
    0.01041126526197209649748, // 8
    0.009255462182712732917729, // 9
    0.008330563433362871256469, // 10
    0.007573675487951840794972, // 11
    0.006942840107209529865664, // 12
    0.00640899418800420706844,  // 13
    0.005951370112758847735624, // 14
    0.005554733551962801371039, // 15
    0.005207655919609640440718, // 16
    0.004901395948434737860717, // 17
    0.004629153749334028592427, // 18
    0.004385560249232324268288, // 19
    0.004166319691996922457463, // 20
    0.003967954218640859617288, // 21
    0.003787618068444434577867, // 22
    0.003622960224683094707381, // 23
    0.003472021382978766962945, // 24
    0.003333155636728092875807, // 25
    0.003204970228055038011184, // 26
    0.003086278682608777063256, // 27
    0.002976063983550408826021, // 28
    0.002873449362352466387552, // 29
    0.002777674929752693603595, // 30
];

const S0: f64 = 1.0 / 12.0;
const S1: f64 = 1.0 / 360.0;
const S2: f64 = 1.0 / 1260.0;
const S3: f64 = 1.0 / 1680.0;
const S4: f64 = 1.0 / 1188.0;

/// Stirling series error `ln n! - [n ln n - n + 0.5 ln(2 pi n)]` for `n >= 1`.
#[inline]
pub fn stirlerr(n: u64) -> f64 {
    if n <= 30 {
        return STIRLERR_TABLE[(n - 1) as usize];
    }
    let nn = n as f64;
    let w = 1.0 / (nn * nn);
    (S0 - w * (S1 - w * (S2 - w * (S3 - w * S4)))) / nn
}

/// Binomial deviance `x ln(x/m) + m - x`, evaluated without cancellation
/// when `x` is close to `m`.
#[inline]
pub fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let d = x - m;
        let v = d / (x + m);
        let mut s = d * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1u32;
        loop {
            ej *= v2;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1;
        }
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Natural log of `C(n,k) p^k q^(n-k)` via the saddle-point decomposition;
/// never touches raw factorials, so it stays finite and relatively accurate
/// for any `n` representable in binary64.
pub fn log_binom_pmf(n: u64, k: u64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    if k > n {
        return Err(Error::domain(format!("k = {k} outside [0, {n}]")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (0,1), got {p}")));
    }
    let q = 1.0 - p;
    Ok(log_binom_pmf_unchecked(n, k, p, q))
}

#[inline]
pub(crate) fn log_binom_pmf_unchecked(n: u64, k: u64, p: f64, q: f64) -> f64 {
    let n_f = n as f64;
    if k == 0 {
        return n_f * (-p).ln_1p();
    }
    if k == n {
        return n_f * p.ln();
    }
    let k_f = k as f64;
    let nk_f = (n - k) as f64;
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(k_f, n_f * p) - bd0(nk_f, n_f * q);
    lc + 0.5 * (n_f / (2.0 * std::f64::consts::PI * k_f * nk_f)).ln()
}

// Terms below this bound cannot move a cdf at the documented absolute
// tolerance; used to truncate tail walks.
const TERM_CUTOFF: f64 = 1e-30;

/// Anchor pmf value for tail walks: the `k = 0` and `k = n` edges are plain
/// powers and `powi` evaluates them with O(log n) roundings (and exactly for
/// tiny `n`), which matters for exact tie-breaking; interior anchors go
/// through the log-space kernel.
#[inline]
pub(crate) fn anchor_pmf(n: u64, k: u64, p: f64, q: f64) -> f64 {
    if n <= i32::MAX as u64 {
        if k == 0 {
            return q.powi(n as i32);
        }
        if k == n {
            return p.powi(n as i32);
        }
    }
    log_binom_pmf_unchecked(n, k, p, q).exp()
}

/// `P(S_n < x)` with the left-continuous (strict) convention. Returns 0 for
/// `x <= 0` and 1 for `x > n`. The sum is taken over the smaller of the two
/// tails, from its far end inward, with Neumaier compensation.
pub fn binom_cdf_strict(n: u64, x: i64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (0,1), got {p}")));
    }
    let mut scratch = Vec::new();
    Ok(cdf_strict_with_scratch(n, x, p, 1.0 - p, &mut scratch))
}

/// Workhorse behind [`binom_cdf_strict`]; `scratch` lets hot callers reuse
/// the term buffer across invocations.
pub(crate) fn cdf_strict_with_scratch(
    n: u64,
    x: i64,
    p: f64,
    q: f64,
    scratch: &mut Vec<f64>,
) -> f64 {
    if x <= 0 {
        return 0.0;
    }
    if x as u128 > n as u128 {
        return 1.0;
    }
    let m = (x - 1) as u64; // sum over k = 0..=m
    let n_f = n as f64;
    if (m as f64) < n_f * p {
        // left tail: anchor at k = m, walk down, then sum ascending in k
        scratch.clear();
        let mut term = anchor_pmf(n, m, p, q);
        let qp = q / p;
        let mut k = m;
        loop {
            scratch.push(term);
            if k == 0 || term < TERM_CUTOFF {
                break;
            }
            term *= (k as f64 / (n_f - (k - 1) as f64)) * qp;
            k -= 1;
        }
        let mut acc = NeumaierSum::default();
        for t in scratch.iter().rev() {
            acc.add(*t);
        }
        acc.total()
    } else {
        // right tail: anchor at k = m+1, walk up, then sum descending in k
        scratch.clear();
        let lo = m + 1;
        let mut term = anchor_pmf(n, lo, p, q);
        let pq = p / q;
        let mut k = lo;
        loop {
            scratch.push(term);
            if k == n || term < TERM_CUTOFF {
                break;
            }
            term *= ((n_f - k as f64) / (k as f64 + 1.0)) * pq;
            k += 1;
        }
        let mut acc = NeumaierSum::default();
        for t in scratch.iter().rev() {
            acc.add(*t);
        }
        1.0 - acc.total()
    }
}

/// Standard normal cdf via the complementary error function. Negative
/// arguments evaluate the small tail directly; positive ones go through the
/// complement, which keeps absolute accuracy and makes the reflection
/// identity `Phi(x) + Phi(-x) = 1` exact in binary64.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}
