//! Lipschitz certification: converting finite-grid maxima of `T_n(p)` into
//! bounds over whole `p`-intervals.
//!
//! The key fact is a two-sided Lipschitz estimate for `Delta_{n,k}(p)/rho(p)`
//! with the explicit modulus
//!
//! ```text
//! L(p) = 1 / ((1-2pq) sqrt(pq)) * ( c1/p + c2 + c3 (1-2p)(1+2pq)/(1-2pq) )
//! ```
//!
//! which is decreasing on `(0, 0.5]`. A uniform grid with step `h` on
//! `[p_lo, p_hi]` therefore certifies
//! `sup T_n <= grid max + sqrt(n) (h/2) L(p_lo)`.

use crate::discrepancy::rho;
use crate::numerics::{log_binom_pmf_unchecked, normal_pdf};
use crate::{Error, Result};
use serde::Serialize;

/// The constants entering every Lipschitz expression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// `c1 = 0.516`, `c2 = 0.121`, `c3 = 0.271`.
pub const LIPSCHITZ: LipschitzConstants = LipschitzConstants { c1: 0.516, c2: 0.121, c3: 0.271 };

fn check_half_open(p: f64, what: &str) -> Result<()> {
    if p > 0.0 && p <= 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what}: p must lie in (0, 0.5], got {p}")))
    }
}

/// The Lipschitz modulus `L(p)`; decreasing on `(0, 0.5]`.
pub fn lipschitz_l(p: f64) -> Result<f64> {
    check_half_open(p, "lipschitz_l")?;
    let q = 1.0 - p;
    let pq = p * q;
    let den = 1.0 - 2.0 * pq;
    let LipschitzConstants { c1, c2, c3 } = LIPSCHITZ;
    Ok((c1 / p + c2 + c3 * (1.0 - 2.0 * p) * (1.0 + 2.0 * pq) / den) / (den * pq.sqrt()))
}

/// `L1(p) = (c1/q + c2) / (pq)`, the modulus of `d/dp [F(k+1) - G(k)]`.
pub fn l1(p: f64) -> Result<f64> {
    check_half_open(p, "l1")?;
    let q = 1.0 - p;
    Ok((LIPSCHITZ.c1 / q + LIPSCHITZ.c2) / (p * q))
}

/// `L2(p) = (c1/p + c2) / (pq)`, the modulus of `d/dp [F(k) - G(k)]`;
/// dominates `L1` on `(0, 0.5]`.
pub fn l2(p: f64) -> Result<f64> {
    check_half_open(p, "l2")?;
    let q = 1.0 - p;
    Ok((LIPSCHITZ.c1 / p + LIPSCHITZ.c2) / (p * q))
}

/// `A(p) = (1-2p)(1+2pq) / (sqrt(pq) (1-2pq)^2) = 2 d/dp (1/rho)`;
/// strictly decreasing on `(0, 0.5)` with limit 0 at `p = 0.5`.
pub fn a_func(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::domain(format!("a_func: p must lie in (0, 0.5), got {p}")));
    }
    let q = 1.0 - p;
    let pq = p * q;
    let den = 1.0 - 2.0 * pq;
    Ok((1.0 - 2.0 * p) * (1.0 + 2.0 * pq) / (pq.sqrt() * den * den))
}

/// Derivative of the binomial cdf in `p`:
/// `d/dp F(k) = -(k/p) P_n(k)` (`shifted = false`) and
/// `d/dp F(k+1) = -((n-k)/q) P_n(k)` (`shifted = true`).
pub fn df_dp(n: u64, k: u64, p: f64, shifted: bool) -> Result<f64> {
    if n == 0 || k > n {
        return Err(Error::domain(format!("df_dp: k = {k} outside [0, {n}]")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("df_dp: p must lie in (0,1), got {p}")));
    }
    let q = 1.0 - p;
    if !shifted && k == 0 {
        return Ok(0.0);
    }
    if shifted && k == n {
        return Ok(0.0);
    }
    let pmf = log_binom_pmf_unchecked(n, k, p, q).exp();
    Ok(if shifted { -((n - k) as f64 / q) * pmf } else { -(k as f64 / p) * pmf })
}

/// Derivative of the normal approximant in `p`:
/// `d/dp G(x) = -(x(1-2p) + np) / (2pq sigma) * phi((x-np)/sigma)`, `x = k`.
pub fn dg_dp(n: u64, k: f64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("dg_dp: n must be >= 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("dg_dp: p must lie in (0,1), got {p}")));
    }
    if !(k >= 0.0 && k <= n as f64) {
        return Err(Error::domain(format!("dg_dp: k = {k} outside [0, {n}]")));
    }
    let q = 1.0 - p;
    let n_f = n as f64;
    let sigma = (n_f * p * q).sqrt();
    let z = (k - n_f * p) / sigma;
    Ok(-(k * (1.0 - 2.0 * p) + n_f * p) / (2.0 * p * q * sigma) * normal_pdf(z))
}

/// A certified upper bound on `sup_{p in [p_lo, p_hi]} T_n(p)` built from a
/// uniform grid maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridCertificate {
    pub n: u64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub step: f64,
    pub grid_max: f64,
    /// `sqrt(n) * (step/2) * L(p_lo)`.
    pub slack: f64,
    /// `grid_max + slack`.
    pub certified_bound: f64,
}

impl GridCertificate {
    /// Certificate over `[p_lo, p_hi]` for a grid of step `h` whose maximum
    /// of `T_n` over the nodes is `grid_max`.
    pub fn new(n: u64, p_lo: f64, p_hi: f64, h: f64, grid_max: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("certificate: n must be >= 1"));
        }
        if !(h > 0.0) {
            return Err(Error::domain(format!("certificate: step must be positive, got {h}")));
        }
        if !(p_lo > 0.0 && p_lo < 0.5) {
            return Err(Error::domain(format!(
                "certificate: p_lo must lie in (0, 0.5), got {p_lo}"
            )));
        }
        if !(p_hi > p_lo && p_hi <= 0.5) {
            return Err(Error::domain(format!(
                "certificate: p_hi must lie in (p_lo, 0.5], got {p_hi}"
            )));
        }
        let slack = (n as f64).sqrt() * (h / 2.0) * lipschitz_l(p_lo)?;
        Ok(GridCertificate {
            n,
            p_lo,
            p_hi,
            step: h,
            grid_max,
            slack,
            certified_bound: grid_max + slack,
        })
    }
}

/// Interval certificate per the interpolation bound, with the grid covering
/// `[p_lo, 0.5]`.
pub fn certify_interval(n: u64, grid_max: f64, p_lo: f64, h: f64) -> Result<GridCertificate> {
    GridCertificate::new(n, p_lo, 0.5, h, grid_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::delta_nk;
    use crate::numerics::BinomialPoint;

    #[test]
    fn l_at_half() {
        // third term vanishes since 1-2p = 0
        let v = lipschitz_l(0.5).unwrap();
        let expect = 4.0 * (LIPSCHITZ.c1 / 0.5 + LIPSCHITZ.c2);
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
    }

    #[test]
    fn l_at_certification_edge() {
        let v = lipschitz_l(0.1689).unwrap();
        assert!(v < 12.98 && v > 12.9, "{v}");
    }

    #[test]
    fn l_decreasing() {
        let mut prev = f64::INFINITY;
        let mut p = 0.01;
        while p <= 0.5 {
            let v = lipschitz_l(p).unwrap();
            assert!(v < prev, "L not decreasing at {p}");
            prev = v;
            p += 0.005;
        }
    }

    #[test]
    fn l1_le_l2() {
        let v1 = l1(0.5).unwrap();
        let v2 = l2(0.5).unwrap();
        let expect = 4.0 * (0.516 / 0.5 + 0.121);
        assert!((v1 - expect).abs() < 1e-12);
        assert!((v2 - expect).abs() < 1e-12);
        for &p in &[0.05, 0.2, 0.25, 0.4999] {
            assert!(l1(p).unwrap() <= l2(p).unwrap(), "p={p}");
        }
        assert!(l2(0.25).unwrap() / l1(0.25).unwrap() > 1.0);
    }

    #[test]
    fn l_identity_via_l2_and_a() {
        // L(p) = L2(p)/rho(p) + c3 A(p)
        let mut p = 0.02;
        while p < 0.5 {
            let lhs = lipschitz_l(p).unwrap();
            let rhs = l2(p).unwrap() / rho(p).unwrap() + LIPSCHITZ.c3 * a_func(p).unwrap();
            assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs(), "p={p}: {lhs} vs {rhs}");
            p += 0.004973;
        }
    }

    #[test]
    fn a_func_limit_and_monotonicity() {
        assert!(a_func(0.4999999).unwrap() < 1e-5);
        assert!(a_func(0.2).unwrap() > a_func(0.3).unwrap());
        assert!(a_func(0.5).is_err());
        // A = 2 d/dp (1/rho), central difference check
        let p = 0.3;
        let h = 1e-6;
        let fd = (1.0 / rho(p + h).unwrap() - 1.0 / rho(p - h).unwrap()) / (2.0 * h);
        let a = a_func(p).unwrap();
        assert!((2.0 * fd - a).abs() < 1e-6 * a.abs(), "{a} vs {}", 2.0 * fd);
    }

    #[test]
    fn derivative_edges() {
        assert_eq!(df_dp(10, 0, 0.3, false).unwrap(), 0.0);
        assert_eq!(df_dp(10, 10, 0.3, true).unwrap(), 0.0);
        assert!(df_dp(10, 11, 0.3, false).is_err());
        assert!(dg_dp(10, -1.0, 0.3).is_err());
    }

    #[test]
    fn dg_dp_at_symmetric_center() {
        // p = 1/2, k = n/2: -(n/2) / (2 pq sigma) * phi(0)
        let n = 10u64;
        let v = dg_dp(n, 5.0, 0.5).unwrap();
        let sigma = (10.0f64 * 0.25).sqrt();
        let expect = -5.0 / (2.0 * 0.25 * sigma) * normal_pdf(0.0);
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn certificate_slack_values() {
        // full-scale slack: sqrt(5e5) * 5e-13 * L(0.1689) < 4.6e-9
        let c = certify_interval(500_000, 0.0, 0.1689, 1e-12).unwrap();
        assert!(c.slack < 4.6e-9, "{}", c.slack);
        // desk-scale: sqrt(200) * 5e-7 * L(0.1689) < 9.2e-5
        let c = certify_interval(200, 0.0, 0.1689, 1e-6).unwrap();
        assert!(c.slack < 9.2e-5 && c.slack > 9.0e-5, "{}", c.slack);
        assert_eq!(c.certified_bound, c.grid_max + c.slack);
        // h -> 0 collapses to the grid max
        let c = certify_interval(200, 0.41, 0.1689, 1e-300).unwrap();
        assert!((c.certified_bound - 0.41).abs() < 1e-15);
    }

    #[test]
    fn certificate_domain_errors() {
        assert!(certify_interval(10, 0.0, 0.1689, 0.0).is_err());
        assert!(certify_interval(10, 0.0, 0.0, 1e-6).is_err());
        assert!(certify_interval(10, 0.0, 0.5, 1e-6).is_err());
        assert!(GridCertificate::new(0, 0.1689, 0.5, 1e-6, 0.0).is_err());
    }

    #[test]
    fn two_sided_lipschitz_spot_check() {
        // |Delta_{n,k}(p)/rho(p) - Delta_{n,k}(p1)/rho(p1)| <= L(p1)(p - p1)
        for &(n, k, p1, p) in
            &[(24u64, 11u64, 0.21f64, 0.27f64), (57, 20, 0.3, 0.31), (200, 90, 0.44, 0.4991)]
        {
            let pt1 = BinomialPoint::new(n, p1).unwrap();
            let pt = BinomialPoint::new(n, p).unwrap();
            let lhs = (delta_nk(&pt, k).unwrap() / rho(p).unwrap()
                - delta_nk(&pt1, k).unwrap() / rho(p1).unwrap())
            .abs();
            let rhs = lipschitz_l(p1).unwrap() * (p - p1);
            assert!(lhs <= rhs + 1e-12, "n={n} k={k}: {lhs} vs {rhs}");
        }
    }
}
