//! Pointwise and maximal discrepancies between the binomial distribution and
//! its normal approximation.
//!
//! With `F(x) = P(S_n < x)` (left-continuous) and `G(x) = Phi((x-np)/sigma)`,
//! the Kolmogorov distance is attained at a jump of `F`, so it reduces to
//! the discrete maximum over `i` of
//! `D_{n,i}(p) = max(|F(i)-G(i)|, |F(i+1)-G(i)|)`.
//! For `n > 200` the maximizing `i` always lies in the window
//! `np - (nu+1) sigma <= i <= np + nu sigma` with `nu = sqrt(3+sqrt(6))`,
//! which cuts a full sweep down to `O(sigma)` work per point.

use crate::numerics::{
    anchor_pmf, cdf_strict_with_scratch, log_binom_pmf_unchecked, normal_cdf, normal_pdf,
    BinomialPoint, NeumaierSum,
};
use crate::{Error, Result};
use serde::Serialize;

/// `sqrt(3 + sqrt(6))`, the half-width multiplier of the restricted window.
pub fn window_nu() -> f64 {
    (3.0 + 6.0f64.sqrt()).sqrt()
}

/// Largest `n` for which `delta_n` always sweeps the full range `[0, n]`.
pub const FULL_RANGE_MAX_N: u64 = 200;

/// How the maximum over `i` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EvalMode {
    /// Every `i` in `[0, n]`.
    FullRange,
    /// Only the window around the mean; requires `n > 200`.
    RestrictedWindow,
}

/// Inclusive `i`-range actually evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KWindow {
    pub lo: u64,
    pub hi: u64,
}

impl KWindow {
    /// The restricted window for `point`; callers must have `n > 200`.
    pub fn restricted(point: &BinomialPoint) -> Result<Self> {
        let nu = window_nu();
        let mean = point.mean();
        let sigma = point.sigma();
        let lo_f = (mean - (nu + 1.0) * sigma).ceil().max(0.0);
        let hi_f = (mean + nu * sigma).floor().min(point.n() as f64);
        let lo = lo_f as u64;
        let hi = hi_f as u64;
        if lo > hi {
            return Err(Error::domain(format!(
                "degenerate window [{lo}, {hi}] for n={}, p={}",
                point.n(),
                point.p()
            )));
        }
        Ok(KWindow { lo, hi })
    }

    pub fn full(n: u64) -> Self {
        KWindow { lo: 0, hi: n }
    }
}

/// Result of a `Delta_n` evaluation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiscrepancyRecord {
    pub point: BinomialPoint,
    /// `Delta_n(p)`, the Kolmogorov distance.
    pub delta: f64,
    /// Smallest maximizing jump index.
    pub k_star: u64,
    /// `sqrt(n) * delta / rho(p)`.
    pub t_value: f64,
    pub mode: EvalMode,
}

/// Normalized third absolute moment `rho(p) = (p^2 + q^2) / sqrt(pq)`;
/// minimal at `p = 1/2` where it equals 1.
pub fn rho(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("rho: p must lie in (0,1), got {p}")));
    }
    let q = 1.0 - p;
    Ok((p * p + q * q) / (p * q).sqrt())
}

/// `E1(p) = (2-p) / (3 sqrt(2 pi))`, the numerator of the asymptotic
/// envelope; domain `(0, 0.5]`.
pub fn script_e1(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::domain(format!("script_e1: p must lie in (0,0.5], got {p}")));
    }
    Ok((2.0 - p) / (3.0 * crate::numerics::SQRT_2PI))
}

/// Asymptotic envelope `E(p) = (2-p) / (3 sqrt(2 pi) (p^2+q^2))`; its
/// maximum over `(0, 0.5]` is the Esseen constant.
pub fn script_e(p: f64) -> Result<f64> {
    let e1 = script_e1(p)?;
    let q = 1.0 - p;
    Ok(e1 / (p * p + q * q))
}

/// Modulus of the centered Bernoulli characteristic function,
/// `|q e^{-itp} + p e^{itq}| = sqrt(q^2 + p^2 + 2pq cos t)`.
pub fn char_fn_modulus(p: f64, t: f64) -> f64 {
    let q = 1.0 - p;
    (q * q + p * p + 2.0 * p * q * t.cos()).max(0.0).sqrt()
}

/// Signed local deviation `P_n(k) - phi((k-np)/sigma)/sigma` of the pmf from
/// the matching normal density.
pub fn local_delta(point: &BinomialPoint, k: u64) -> Result<f64> {
    if k > point.n() {
        return Err(Error::domain(format!("k = {k} outside [0, {}]", point.n())));
    }
    let pmf = log_binom_pmf_unchecked(point.n(), k, point.p(), point.q()).exp();
    let z = (k as f64 - point.mean()) / point.sigma();
    Ok(pmf - normal_pdf(z) / point.sigma())
}

/// `D_{n,i}(p) = max(|F(i) - G(i)|, |F(i+1) - G(i)|)` computed from scratch;
/// see [`DeltaEvaluator`] for the single-pass bulk version.
pub fn delta_nk(point: &BinomialPoint, i: u64) -> Result<f64> {
    if i > point.n() {
        return Err(Error::domain(format!("i = {i} outside [0, {}]", point.n())));
    }
    let mut scratch = Vec::new();
    let f_i = cdf_strict_with_scratch(point.n(), i as i64, point.p(), point.q(), &mut scratch);
    let f_i1 =
        cdf_strict_with_scratch(point.n(), i as i64 + 1, point.p(), point.q(), &mut scratch);
    let g = normal_cdf((i as f64 - point.mean()) / point.sigma());
    Ok((f_i - g).abs().max((f_i1 - g).abs()))
}

/// `Delta_n(p)` together with its argmax and `T_n(p)`.
pub fn delta_n(point: &BinomialPoint, mode: EvalMode) -> Result<DiscrepancyRecord> {
    DeltaEvaluator::new().eval(point, mode)
}

/// Reusable evaluator for `Delta_n`; keeps the tail-sum buffer alive across
/// calls so sweeps do not allocate per point.
#[derive(Default)]
pub struct DeltaEvaluator {
    scratch: Vec<f64>,
}

struct SegmentMax {
    best: f64,
    k_star: u64,
}

impl DeltaEvaluator {
    pub fn new() -> Self {
        DeltaEvaluator::default()
    }

    pub fn eval(&mut self, point: &BinomialPoint, mode: EvalMode) -> Result<DiscrepancyRecord> {
        let n = point.n();
        match mode {
            EvalMode::RestrictedWindow => {
                if n <= FULL_RANGE_MAX_N {
                    return Err(Error::precondition(format!(
                        "RestrictedWindow requires n > {FULL_RANGE_MAX_N}, got {n}"
                    )));
                }
                let w = KWindow::restricted(point)?;
                let (seg, _, _) = self.window_scan(point, w.lo, w.hi);
                Ok(self.record(point, seg, EvalMode::RestrictedWindow))
            }
            EvalMode::FullRange => {
                if n <= FULL_RANGE_MAX_N {
                    let (seg, _, _) = self.window_scan(point, 0, n);
                    return Ok(self.record(point, seg, EvalMode::FullRange));
                }
                // Same window pass as RestrictedWindow (bit-identical there),
                // extended over (hi, n] and complemented by a descent over
                // [0, lo). The window theorem puts the true maximum inside
                // the window, so the extra segments only confirm it.
                let w = KWindow::restricted(point)?;
                let (seg, f_lo, pmf_lo) = self.window_scan(point, w.lo, n);
                let seg = descend_left(point, w.lo, f_lo, pmf_lo, seg);
                Ok(self.record(point, seg, EvalMode::FullRange))
            }
        }
    }

    /// `T_n(p)` alone.
    pub fn t_value(&mut self, point: &BinomialPoint, mode: EvalMode) -> Result<f64> {
        Ok(self.eval(point, mode)?.t_value)
    }

    fn record(&self, point: &BinomialPoint, seg: SegmentMax, mode: EvalMode) -> DiscrepancyRecord {
        let t = (point.n() as f64).sqrt() * seg.best
            / rho(point.p()).expect("point.p validated on construction");
        DiscrepancyRecord { point: *point, delta: seg.best, k_star: seg.k_star, t_value: t, mode }
    }

    /// Single ascending pass over `i = a..=b`: one cdf anchor, one log-space
    /// pmf anchor, then the ratio recurrence with a compensated running sum.
    /// Returns the segment maximum plus `(F(a), pmf(a))` for callers that
    /// need to extend below `a`.
    fn window_scan(&mut self, point: &BinomialPoint, a: u64, b: u64) -> (SegmentMax, f64, f64) {
        let n = point.n();
        let (p, q) = (point.p(), point.q());
        let n_f = n as f64;
        let mean = point.mean();
        let inv_sigma = 1.0 / point.sigma();
        let pq = p / q;

        let f_a = cdf_strict_with_scratch(n, a as i64, p, q, &mut self.scratch);
        let pmf_a = anchor_pmf(n, a, p, q);

        let mut running = NeumaierSum::new(f_a);
        let mut pmf = pmf_a;
        let mut best = -1.0f64;
        let mut k_star = a;
        let mut f_i = f_a;
        for i in a..=b {
            let i_f = i as f64;
            let g = normal_cdf((i_f - mean) * inv_sigma);
            running.add(pmf);
            let f_next = running.total();
            let d = (f_i - g).abs().max((f_next - g).abs());
            if d > best {
                best = d;
                k_star = i;
            }
            f_i = f_next;
            pmf *= ((n_f - i_f) / (i_f + 1.0)) * pq;
        }
        (SegmentMax { best, k_star }, f_a, pmf_a)
    }
}

/// Walk `i = lo-1, .., 0` below the window, updating the running maximum.
/// `D_{n,i} <= max(F(i+1), G(i))` and both shrink as `i` decreases, so the
/// walk stops as soon as that envelope falls below the current best.
fn descend_left(
    point: &BinomialPoint,
    lo: u64,
    f_lo: f64,
    pmf_lo: f64,
    seg: SegmentMax,
) -> SegmentMax {
    let mut best = seg.best;
    let mut k_star = seg.k_star;
    if lo == 0 {
        return SegmentMax { best, k_star };
    }
    let n_f = point.n() as f64;
    let mean = point.mean();
    let inv_sigma = 1.0 / point.sigma();
    let qp = point.q() / point.p();

    let mut f_next = f_lo; // F(i+1) as i walks down
    let mut pmf = pmf_lo; // pmf(i+1)
    let mut i = lo - 1;
    loop {
        let i_f = i as f64;
        // pmf(i) from pmf(i+1)
        pmf *= ((i_f + 1.0) / (n_f - i_f)) * qp;
        let g = normal_cdf((i_f - mean) * inv_sigma);
        if f_next.max(g) < best {
            break; // nothing below can reach the running maximum
        }
        let f_i = f_next - pmf;
        let d = (f_i - g).abs().max((f_next - g).abs());
        if d >= best {
            best = d;
            k_star = i; // ties resolve toward smaller i
        }
        f_next = f_i;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    SegmentMax { best, k_star }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_basics() {
        assert!((rho(0.5).unwrap() - 1.0).abs() < 1e-15);
        // reciprocal value quoted to 8 digits in the source analysis
        assert!((1.0 / rho(0.1689).unwrap() - 0.52090548).abs() < 1e-8);
        for &p in &[0.1, 0.27, 0.42] {
            assert!((rho(p).unwrap() - rho(1.0 - p).unwrap()).abs() < 1e-15);
        }
        assert!(rho(0.0).is_err());
        assert!(rho(1.0).is_err());
    }

    #[test]
    fn script_e_values() {
        let v = script_e(0.5).unwrap();
        assert!((v - crate::numerics::FRAC_1_SQRT_2PI).abs() < 1e-15);
        let e1 = script_e1(0.5).unwrap();
        assert!((e1 - 0.5 * crate::numerics::FRAC_1_SQRT_2PI).abs() < 1e-15);
        assert!(script_e(0.6).is_err());
        assert!(script_e(0.0).is_err());
    }

    #[test]
    fn char_fn_endpoints() {
        for &p in &[0.1, 0.3, 0.5, 0.77] {
            assert!((char_fn_modulus(p, 0.0) - 1.0).abs() < 1e-15);
        }
        assert!(char_fn_modulus(0.5, std::f64::consts::PI) < 1e-7);
        let q = 0.7;
        let bound = (-2.0 * 0.3 * q * (0.5f64).sin().powi(2)).exp();
        assert!(char_fn_modulus(0.3, 1.0) <= bound + 1e-15);
    }

    #[test]
    fn delta_nk_two_point_case() {
        let pt = BinomialPoint::new(1, 0.5).unwrap();
        let expect = 0.5 - normal_cdf(-1.0);
        let d0 = delta_nk(&pt, 0).unwrap();
        let d1 = delta_nk(&pt, 1).unwrap();
        assert!((d0 - expect).abs() < 1e-15, "{d0} vs {expect}");
        assert!((d1 - expect).abs() < 1e-15, "{d1} vs {expect}");
        assert!(delta_nk(&pt, 2).is_err());
    }

    #[test]
    fn delta_n_single_trial() {
        let pt = BinomialPoint::new(1, 0.5).unwrap();
        let rec = delta_n(&pt, EvalMode::FullRange).unwrap();
        let expect = 0.5 - normal_cdf(-1.0); // ~ 0.3413447
        assert!((rec.delta - expect).abs() < 1e-15);
        assert!((rec.t_value - expect).abs() < 1e-15); // rho(0.5) = 1
        // The two jumps tie mathematically; in binary64 the i = 1 candidate
        // lands one ulp above the i = 0 one, so the smallest-argmax rule
        // settles on 1 here. Exact ties do resolve toward smaller i.
        assert!(rec.k_star <= 1);
        let d0 = delta_nk(&pt, 0).unwrap();
        let d1 = delta_nk(&pt, 1).unwrap();
        assert!((d0 - d1).abs() <= f64::EPSILON);
    }

    #[test]
    fn restricted_mode_needs_large_n() {
        let pt = BinomialPoint::new(200, 0.3).unwrap();
        assert!(matches!(
            delta_n(&pt, EvalMode::RestrictedWindow),
            Err(crate::Error::Precondition(_))
        ));
    }

    #[test]
    fn restricted_equals_full_range() {
        let mut ev = DeltaEvaluator::new();
        for &(n, p) in &[(300u64, 0.3f64), (501, 0.1689), (997, 0.437), (2048, 0.25)] {
            let pt = BinomialPoint::new(n, p).unwrap();
            let full = ev.eval(&pt, EvalMode::FullRange).unwrap();
            let win = ev.eval(&pt, EvalMode::RestrictedWindow).unwrap();
            assert_eq!(full.delta, win.delta, "n={n} p={p}");
            assert_eq!(full.k_star, win.k_star, "n={n} p={p}");
        }
    }

    #[test]
    fn delta_bounded_by_global_constant() {
        let mut ev = DeltaEvaluator::new();
        for &(n, p) in &[(1u64, 0.01f64), (1, 0.99), (2, 0.5), (17, 0.9), (333, 0.02)] {
            let pt = BinomialPoint::new(n, p).unwrap();
            let rec = ev.eval(&pt, EvalMode::FullRange).unwrap();
            assert!(rec.delta < 0.541, "n={n} p={p}: {}", rec.delta);
        }
    }

    #[test]
    fn local_delta_two_point() {
        let pt = BinomialPoint::new(1, 0.5).unwrap();
        let d = local_delta(&pt, 0).unwrap();
        let expect = 0.5 - 2.0 * normal_pdf(-1.0);
        assert!((d - expect).abs() < 1e-15);
    }

    #[test]
    fn window_bounds_inside_range() {
        let pt = BinomialPoint::new(5000, 0.1689).unwrap();
        let w = KWindow::restricted(&pt).unwrap();
        assert!(w.lo <= w.hi && w.hi <= 5000);
        let nu = window_nu();
        assert!((w.lo as f64) >= pt.mean() - (nu + 1.0) * pt.sigma());
        assert!((w.hi as f64) <= pt.mean() + nu * pt.sigma());
    }
}
