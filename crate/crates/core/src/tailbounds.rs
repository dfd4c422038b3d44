//! Closed-form majorants of `T_n(p)` valid uniformly for all `n` above a
//! threshold: the second-order remainder `R(p,n) = K1 + K2 + K3` and the
//! envelope `E(p,n)`, their large-`n` coefficients `D2`/`G2`, the simpler
//! Uspensky/Neammanee-style bounds, and the `n`-free small-`p` bounds that
//! close the parameter interval on the left.

use crate::discrepancy::{rho, script_e, script_e1};
use crate::numerics::SQRT_2PI;
use crate::{Error, Result};
use serde::Serialize;

/// Every constant entering the closed-form remainder, gathered in one
/// serializable record so a run can be audited against its inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailBoundParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `gamma_6 .. gamma_10`.
    pub gamma: [f64; 5],
    /// `gamma~_6 .. gamma~_10`.
    pub gamma_tilde: [f64; 5],
    pub e5: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `(3 pi^2 - 16) / pi^4`.
    pub mu: f64,
    /// `chi(p,n)` switches off at this `p`.
    pub chi_threshold: f64,
}

impl Default for TailBoundParams {
    fn default() -> Self {
        use std::f64::consts::PI;
        TailBoundParams {
            c1: 0.516,
            c2: 0.121,
            c3: 0.271,
            gamma: [
                1.0 / 9.0,
                5.0 * SQRT_2PI / 96.0,
                24.0,
                7.0 * SQRT_2PI / 384.0,
                192.0 / 14400.0,
            ],
            gamma_tilde: [2.0 / 3.0, 7.0 / 8.0, 10.0 / 9.0, 11.0 / 8.0, 5.0 / 3.0],
            e5: 0.0277905,
            a1: 5.405,
            a2: 7.521,
            a3: 5.233,
            mu: (3.0 * PI * PI - 16.0) / (PI * PI * PI * PI),
            chi_threshold: 0.085,
        }
    }
}

/// The symmetric-function values at one `p` that the remainder is built
/// from.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OmegaSet {
    /// `p^2 + q^2`.
    pub omega: f64,
    /// `q - p`.
    pub omega3: f64,
    /// `|q^3 + p^3 - 3pq|`.
    pub omega4: f64,
    /// `q^4 - p^4`.
    pub omega5: f64,
    /// `q^5 + p^5 + 15 (pq)^2`.
    pub omega6: f64,
    /// `p^4 + q^4 + 5! e5 (pq)^{3/2}`.
    pub omega5_tilde: f64,
    /// `V_6 .. V_10`.
    pub v: [f64; 5],
    /// `(omega/6)^{2/3}`.
    pub zeta: f64,
}

impl OmegaSet {
    pub fn new(p: f64, params: &TailBoundParams) -> Result<Self> {
        if !(p > 0.0 && p <= 0.5) {
            return Err(Error::domain(format!("omega set: p must lie in (0, 0.5], got {p}")));
        }
        let q = 1.0 - p;
        let pq = p * q;
        let omega = p * p + q * q;
        let omega3 = q - p;
        let omega4 = (q * q * q + p * p * p - 3.0 * pq).abs();
        let omega5 = q.powi(4) - p.powi(4);
        let omega6 = q.powi(5) + p.powi(5) + 15.0 * pq * pq;
        let omega5_tilde = p.powi(4) + q.powi(4) + 120.0 * params.e5 * pq.powf(1.5);
        let v = [
            omega3 * omega3,
            omega3 * omega4,
            2.0 * omega5_tilde * omega3 / 720.0 + (omega4 / 24.0) * (omega4 / 24.0),
            omega5_tilde * omega4,
            omega5_tilde * omega5_tilde,
        ];
        let zeta = (omega / 6.0).powf(2.0 / 3.0);
        Ok(OmegaSet { omega, omega3, omega4, omega5, omega6, omega5_tilde, v, zeta })
    }
}

/// `A_k(n) = (n/(n-2))^{k/2} (n-1)/n`.
pub fn a_k(n: u64, k: u32) -> f64 {
    let n_f = n as f64;
    (n_f / (n_f - 2.0)).powf(k as f64 / 2.0) * (n_f - 1.0) / n_f
}

/// `e(n,p) = exp(1 / (24 sigma^{2/3} zeta^2))`.
pub fn e_np(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    let om = OmegaSet::new(p, params)?;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    Ok((1.0 / (24.0 * sigma.powf(2.0 / 3.0) * om.zeta * om.zeta)).exp())
}

/// `chi(p,n) = 2 zeta / sigma^{2/3}` below the threshold `p`, else 0.
pub fn chi(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    let om = OmegaSet::new(p, params)?;
    if p < params.chi_threshold {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        Ok(2.0 * om.zeta / sigma.powf(2.0 / 3.0))
    } else {
        Ok(0.0)
    }
}

fn check_domain(p: f64, n: u64) -> Result<()> {
    if n < 200 {
        return Err(Error::precondition(format!("remainder bound requires n >= 200, got {n}")));
    }
    if !(p <= 0.5 && p >= 4.0 / n as f64) {
        return Err(Error::precondition(format!(
            "remainder bound requires 4/n <= p <= 0.5, got p={p}, n={n}"
        )));
    }
    Ok(())
}

/// First remainder group (moment terms up to `1/sigma^4`).
pub fn k1(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    check_domain(p, n)?;
    let om = OmegaSet::new(p, params)?;
    let n_f = n as f64;
    let sigma = (n_f * p * (1.0 - p)).sqrt();
    let r = n_f / (n_f - 1.0);
    Ok(om.omega3 / (4.0 * sigma * SQRT_2PI * (n_f - 1.0)) * (1.0 + 1.0 / (4.0 * (n_f - 1.0)))
        + om.omega4 / (12.0 * sigma * sigma * std::f64::consts::PI) * r * r
        + om.omega5 / (40.0 * sigma.powi(3) * SQRT_2PI) * r.powf(2.5)
        + om.omega6 / (90.0 * sigma.powi(4) * std::f64::consts::PI) * r.powi(3))
}

/// Second remainder group (the `gamma_j V_j` series).
pub fn k2(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    check_domain(p, n)?;
    let om = OmegaSet::new(p, params)?;
    let n_f = n as f64;
    let sigma = (n_f * p * (1.0 - p)).sqrt();
    let e = e_np(p, n, params)?;
    let mut sum = 0.0;
    for j in 1..=5usize {
        let k = j + 5;
        let bracket = 1.0 + params.gamma_tilde[j - 1] * e * n_f / (sigma * sigma * (n_f - 2.0));
        sum += params.gamma[j - 1] * a_k(n, k as u32) * om.v[j - 1] / sigma.powi(j as i32)
            * bracket;
    }
    Ok(sum / (std::f64::consts::PI * sigma))
}

/// Third remainder group (integral cut-offs; contains the exponentially
/// small terms and the `chi` switch for small `p`).
pub fn k3(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    check_domain(p, n)?;
    use std::f64::consts::PI;
    let om = OmegaSet::new(p, params)?;
    let n_f = n as f64;
    let sigma = (n_f * p * (1.0 - p)).sqrt();
    let s2 = sigma * sigma;
    let z = om.zeta;
    let mu = params.mu;
    let chi_v = chi(p, n, params)?;
    let sum = 1.0 / (12.0 * s2)
        + (1.0 / 36.0 + mu / 8.0) / s2.powi(2)
        + ((1.0 / 36.0) * (params.a1 / 6.0).exp() + mu / 8.0) / s2.powi(3)
        + (5.0 * mu / 24.0) * (params.a2 / 6.0).exp() / s2.powi(4)
        + (1.0 / 3.0) * (-sigma * params.a1.sqrt() + params.a1 / 6.0).exp()
        + (PI - 2.0) * mu * (-sigma * params.a2.sqrt() + params.a2 / 6.0).exp()
        + (-sigma * params.a3.sqrt() + params.a3 / 6.0).exp()
            * 0.25
            * (PI.powi(4) * s2 / (4.0 * params.a3)).ln()
        + (-sigma.powf(2.0 / 3.0) / (2.0 * z)).exp()
            * (2.0 * z / sigma.powf(2.0 / 3.0)
                + (params.a3 / 6.0).exp() * (1.0 + chi_v) / (24.0 * z * sigma.powf(4.0 / 3.0)));
    Ok(sum / PI)
}

/// `R(p,n) = K1 + K2 + K3`, the full remainder of the uniform bound
/// `Delta_n(p) <= rho(p) E(p)/sqrt(n) + R(p,n)`.
pub fn remainder_r(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    Ok(k1(p, n, params)? + k2(p, n, params)? + k3(p, n, params)?)
}

/// `E(p,n) = E(p) + sqrt(n) R(p,n) / rho(p)`, an upper bound for `T_n(p)`
/// when `n >= 200` and `4/n <= p <= 0.5`; nonincreasing in `n`.
pub fn e_bound(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    let r = remainder_r(p, n, params)?;
    Ok(script_e(p)? + (n as f64).sqrt() / rho(p)? * r)
}

/// Coefficient of `1/sigma^2` in `R`: `D2(p,n) = G2(p,n) / (36 pi)`.
pub fn d2_coeff(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    Ok(g2(p, n, params)? / (36.0 * std::f64::consts::PI))
}

/// `G2(p,n) = 3 omega4 (n/(n-1))^2 + 4 A6(n) omega3^2 + 3`.
pub fn g2(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    if n < 3 {
        return Err(Error::precondition(format!("g2 requires n >= 3, got {n}")));
    }
    let om = OmegaSet::new(p, params)?;
    let n_f = n as f64;
    let r = n_f / (n_f - 1.0);
    Ok(3.0 * om.omega4 * r * r + 4.0 * a_k(n, 6) * om.omega3 * om.omega3 + 3.0)
}

/// Large-`n` limit of `G2`: piecewise quadratic with a kink at
/// `p = (3 - sqrt(3))/6`.
pub fn g2_limit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::domain(format!("g2_limit: p must lie in (0, 0.5], got {p}")));
    }
    let p1 = (3.0 - 3.0f64.sqrt()) / 6.0;
    Ok(if p <= p1 {
        2.0 * (17.0 * p * p - 17.0 * p + 5.0)
    } else {
        -2.0 * (p * p - p - 2.0)
    })
}

/// `D2(p) = G2(p) / (36 pi)` in the large-`n` limit.
pub fn d2_limit(p: f64) -> Result<f64> {
    Ok(g2_limit(p)? / (36.0 * std::f64::consts::PI))
}

/// `D2bar(p,n) = sigma^2 R(p,n)`, the exact coefficient that the plain
/// second-order bound `Delta <= E1/sigma + D2bar/sigma^2` carries.
pub fn d2_bar(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    let r = remainder_r(p, n, params)?;
    Ok(n as f64 * p * (1.0 - p) * r)
}

/// The principal part of `E(p,n)` (everything except the remainder tails):
/// `B(p,n) = E(p) + (omega4 (n/(n-1))^2 + 12 gamma6 A6 V6 + 1) / (12 pi omega sigma)`.
pub fn b_func(p: f64, n: u64, params: &TailBoundParams) -> Result<f64> {
    if n < 3 {
        return Err(Error::precondition(format!("b_func requires n >= 3, got {n}")));
    }
    let om = OmegaSet::new(p, params)?;
    let n_f = n as f64;
    let sigma = (n_f * p * (1.0 - p)).sqrt();
    let r = n_f / (n_f - 1.0);
    Ok(script_e(p)?
        + (om.omega4 * r * r + 12.0 * params.gamma[0] * a_k(n, 6) * om.v[0] + 1.0)
            / (12.0 * std::f64::consts::PI * om.omega * sigma))
}

/// T-scale form of the simple second-order bound with a fixed constant `d`:
/// `E(p) + d / (sigma (p^2+q^2))`.
fn second_order_t_bound(p: f64, n: u64, d: f64) -> Result<f64> {
    let q = 1.0 - p;
    let sigma = (n as f64 * p * q).sqrt();
    Ok(script_e(p)? + d / (sigma * (p * p + q * q)))
}

/// `E(p) + 0.05532/(sigma (p^2+q^2))`, valid on `p in [0.1689, 0.5]` for
/// all `n >= 5e5` (the constant majorizes `D2bar` there).
pub fn corollary_c_bound(p: f64, n: u64) -> Result<f64> {
    if !(0.1689..=0.5).contains(&p) {
        return Err(Error::precondition(format!(
            "corollary_c_bound: p must lie in [0.1689, 0.5], got {p}"
        )));
    }
    second_order_t_bound(p, n, 0.05532)
}

/// Same shape with the Neammanee constant `0.1618`; requires
/// `sigma^2 >= 100`.
pub fn neammanee_t_bound(p: f64, n: u64) -> Result<f64> {
    let q = 1.0 - p;
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::domain(format!("neammanee_t_bound: p must lie in (0,0.5], got {p}")));
    }
    if n as f64 * p * q < 100.0 {
        return Err(Error::precondition(format!(
            "neammanee_t_bound requires sigma^2 >= 100, got {}",
            n as f64 * p * q
        )));
    }
    second_order_t_bound(p, n, 0.1618)
}

/// Which modified Berry-Esseen inequality supplies the small-`p` bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SmallPVariant {
    /// Korolev-Shevtsova 2010: `0.33477 (rho + 0.429)`.
    Ks2010,
    /// Shevtsova 2013: `0.33554 (rho + 0.415)`.
    Shv2013a,
    /// Shevtsova 2013: `0.3328 (rho + 0.429)`.
    Shv2013b,
}

impl SmallPVariant {
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            SmallPVariant::Ks2010 => (0.33477, 0.429),
            SmallPVariant::Shv2013a => (0.33554, 0.415),
            SmallPVariant::Shv2013b => (0.3328, 0.429),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SmallPVariant::Ks2010 => "ks2010",
            SmallPVariant::Shv2013a => "shv2013a",
            SmallPVariant::Shv2013b => "shv2013b",
        }
    }
}

/// The `n`-free bound `coeff (1 + add/rho(p))` on `T_n(p)`; increasing in
/// `p` on `(0, 0.5]`, so its value at `b` bounds the whole interval
/// `(0, b]`.
pub fn small_p_t_bound(p: f64, variant: SmallPVariant) -> Result<f64> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::domain(format!("small_p_t_bound: p must lie in (0,0.5], got {p}")));
    }
    let (coeff, add) = variant.coefficients();
    Ok(coeff * (1.0 + add / rho(p)?))
}

/// Right side of the classical interval bound
/// `(0.13 + 0.18|p-q|)/sigma^2 + exp(-3 sigma/2)`; reference only.
pub fn uspensky_reference(p: f64, n: u64, a: i64, b: i64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("uspensky_reference: p must lie in (0,1), got {p}")));
    }
    if a >= b {
        return Err(Error::precondition(format!("uspensky_reference needs a < b, got {a}, {b}")));
    }
    let q = 1.0 - p;
    let s2 = n as f64 * p * q;
    if s2 < 25.0 {
        return Err(Error::precondition(format!(
            "uspensky_reference requires sigma^2 >= 25, got {s2}"
        )));
    }
    Ok((0.13 + 0.18 * (p - q).abs()) / s2 + (-1.5 * s2.sqrt()).exp())
}

/// Half-integer corrected abscissas `(x - np +- 1/2) / sigma`.
pub fn x_n_pm(x: f64, n: u64, p: f64) -> (f64, f64) {
    let mean = n as f64 * p;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    ((x - mean + 0.5) / sigma, (x - mean - 0.5) / sigma)
}

/// One-term Edgeworth-corrected normal cdf
/// `G(x) = Phi(x) + (q-p)(1-x^2) e^{-x^2/2} / (6 sqrt(2 pi) sigma)`.
pub fn edgeworth_g(x: f64, n: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    let sigma = (n as f64 * p * q).sqrt();
    crate::numerics::normal_cdf(x)
        + (q - p) / (6.0 * SQRT_2PI * sigma) * (1.0 - x * x) * (-0.5 * x * x).exp()
}

/// Maximum of `f` over `[lo, hi]`: scan of a 10^4-node bracketing grid, then
/// golden-section refinement of the best bracket down to 1e-9 in `p`.
/// Returns `(argmax, max)`.
pub fn max_over_p(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const NODES: usize = 10_000;
    let width = hi - lo;
    let mut best_j = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for j in 0..=NODES {
        let p = lo + width * (j as f64 / NODES as f64);
        let v = f(p);
        if v > best_v {
            best_v = v;
            best_j = j;
        }
    }
    let mut a = lo + width * ((best_j.saturating_sub(1)) as f64 / NODES as f64);
    let mut b = lo + width * ((best_j + 1).min(NODES) as f64 / NODES as f64);
    let mut best_p = lo + width * (best_j as f64 / NODES as f64);
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > 1e-9 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (a + b);
    let vm = f(mid);
    if vm > best_v {
        best_v = vm;
        best_p = mid;
    }
    if f1 > best_v {
        best_v = f1;
        best_p = x1;
    }
    if f2 > best_v {
        best_v = f2;
        best_p = x2;
    }
    (best_p, best_v)
}

/// One row of the reference coefficient table: maxima of `D2` and `D2bar`
/// over `p in [p_lo, p_hi]` at the given `n` (which bound the same maxima
/// for every larger `n`).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoeffTableRow {
    pub p_lo: f64,
    pub p_hi: f64,
    pub n: u64,
    pub d2_max: f64,
    pub d2_bar_max: f64,
}

/// Compute one table row.
pub fn coeff_table_row(p_lo: f64, p_hi: f64, n: u64, params: &TailBoundParams) -> Result<CoeffTableRow> {
    check_domain(p_lo, n)?;
    check_domain(p_hi, n)?;
    let (_, d2_max) = max_over_p(|p| d2_coeff(p, n, params).unwrap_or(f64::NEG_INFINITY), p_lo, p_hi);
    let (_, d2_bar_max) =
        max_over_p(|p| d2_bar(p, n, params).unwrap_or(f64::NEG_INFINITY), p_lo, p_hi);
    Ok(CoeffTableRow { p_lo, p_hi, n, d2_max, d2_bar_max })
}

/// The three canonical `(interval, n)` pairs of the reference table.
pub fn canonical_table(params: &TailBoundParams) -> Result<Vec<CoeffTableRow>> {
    Ok(vec![
        coeff_table_row(0.02, 0.5, 200, params)?,
        coeff_table_row(0.1689, 0.5, 200, params)?,
        coeff_table_row(0.1689, 0.5, 500_000, params)?,
    ])
}

/// CSV with columns `(p_lo, p_hi, n, d2_max, d2bar_max)`.
pub fn table_to_csv(rows: &[CoeffTableRow]) -> String {
    let mut out = String::from("p_lo,p_hi,n,d2_max,d2bar_max\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.p_lo, r.p_hi, r.n, r.d2_max, r.d2_bar_max));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TailBoundParams {
        TailBoundParams::default()
    }

    #[test]
    fn omega_values_at_half() {
        let om = OmegaSet::new(0.5, &params()).unwrap();
        assert_eq!(om.omega3, 0.0);
        assert_eq!(om.omega5, 0.0);
        assert!((om.omega - 0.5).abs() < 1e-15);
        // omega4(0.5) = |1/8 + 1/8 - 3/4| = 1/2
        assert!((om.omega4 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chi_switches_off() {
        assert_eq!(chi(0.3, 1000, &params()).unwrap(), 0.0);
        assert_eq!(chi(0.085, 1000, &params()).unwrap(), 0.0);
        assert!(chi(0.05, 1000, &params()).unwrap() > 0.0);
    }

    #[test]
    fn k_terms_domain_gates() {
        let p = params();
        assert!(k1(0.3, 199, &p).is_err());
        assert!(k1(0.01, 200, &p).is_err()); // p < 4/n
        assert!(k1(0.02, 200, &p).is_ok()); // boundary admitted
        assert!(remainder_r(0.3, 200, &p).is_ok());
    }

    #[test]
    fn internal_thresholds_from_the_derivation() {
        // sharp numeric checkpoints that pin the transcription of K1..K3
        let pr = params();
        assert!(a_k(500_000, 10) < 1.00001801);
        assert!(a_k(500_000, 6) < 1.0000101);
        assert!(e_np(0.5, 500_000, &pr).unwrap() < 1.02316);

        let p = 0.1689;
        let n = 500_000u64;
        let n_f = n as f64;
        let sigma = (n_f * p * (1.0 - p)).sqrt();
        let om = OmegaSet::new(p, &pr).unwrap();

        let e1 = 1.00000601;
        let e2 = 1.000000501;
        let r1t = e1 / om.omega
            * (e2 * om.omega3 / (4.0 * SQRT_2PI * (n_f - 1.0))
                + om.omega5 / (40.0 * SQRT_2PI * sigma * sigma)
                + om.omega6 / (90.0 * std::f64::consts::PI * sigma.powi(3)));
        assert!(r1t < 2.78e-7, "{r1t}");

        let e3 = 1.00001801;
        let e4 = 1.0000243;
        let mut s = 0.0;
        for j in 2..=5usize {
            s += pr.gamma[j - 1] * om.v[j - 1] / sigma.powi(j as i32);
        }
        let r2t = e3 * e4 / (std::f64::consts::PI * om.omega) * s
            + (1.0 / 9.0) * (2.0 / 3.0) * 1.0000101 * 1.02316
                / (std::f64::consts::PI
                    * om.omega
                    * (p * (1.0 - p)).powf(1.5)
                    * n_f.sqrt()
                    * (n_f - 2.0));
        assert!(r2t < 8.852e-8, "{r2t}");
    }

    #[test]
    fn e_bound_maximum_at_reference_scale() {
        let pr = params();
        let (_, m) = max_over_p(|p| e_bound(p, 500_000, &pr).unwrap(), 0.1689, 0.5);
        assert!(m > 0.40995378 && m < 0.409954, "{m}");
        assert!(m < 0.409954153);
    }

    #[test]
    fn b_func_maximum_at_reference_scale() {
        let pr = params();
        let (am, m) = max_over_p(|p| b_func(p, 500_000, &pr).unwrap(), 0.1689, 0.5);
        assert!((m - 0.40995378459).abs() < 1e-8, "{m}");
        assert!((am - 0.418886928).abs() < 1e-6, "{am}");
    }

    #[test]
    fn g2_limits() {
        assert!((g2_limit(0.5).unwrap() - 4.5).abs() < 1e-12);
        assert!((g2_limit(0.02).unwrap() - 9.3336).abs() < 1e-12);
        let pr = params();
        let v = g2(0.1689, 500_000, &pr).unwrap();
        assert!(v >= 5.227344 && v < 5.227345, "{v}");
        let lim = g2_limit(0.1689).unwrap();
        assert!(lim >= 5.2273251 && lim < 5.2273252, "{lim}");
    }

    #[test]
    fn corollary_c_dominated_by_neammanee() {
        for &(p, n) in &[(0.1689f64, 5000u64), (0.3, 10_000), (0.5, 971_000)] {
            let c = corollary_c_bound(p, n).unwrap();
            let m = neammanee_t_bound(p, n).unwrap();
            assert!(c <= m, "p={p} n={n}: {c} vs {m}");
        }
    }

    #[test]
    fn small_p_values() {
        let v = small_p_t_bound(0.1689, SmallPVariant::Ks2010).unwrap();
        assert!(v < 0.409581, "{v}");
        // monotone increasing in p
        assert!(
            small_p_t_bound(0.1, SmallPVariant::Ks2010).unwrap()
                < small_p_t_bound(0.2, SmallPVariant::Ks2010).unwrap()
        );
        assert!(small_p_t_bound(0.6, SmallPVariant::Ks2010).is_err());
    }

    #[test]
    fn uspensky_gates_and_values() {
        // sigma^2 = 25 boundary admitted, below rejected
        assert!(uspensky_reference(0.5, 100, 0, 1).is_ok());
        assert!(uspensky_reference(0.5, 96, 0, 1).is_err());
        assert!(uspensky_reference(0.5, 100, 3, 3).is_err());
        let v = uspensky_reference(0.5, 100, 0, 1).unwrap();
        let s2 = 25.0f64;
        assert!((v - (0.13 / s2 + (-1.5 * 5.0f64).exp())).abs() < 1e-15);
        // G(0) = Phi(0) + (q-p)/(6 sqrt(2 pi) sigma)
        let g = edgeworth_g(0.0, 100, 0.3);
        let sigma = (100.0f64 * 0.3 * 0.7).sqrt();
        assert!((g - (0.5 + 0.4 / (6.0 * SQRT_2PI * sigma))).abs() < 1e-15);
        let (xp, xm) = x_n_pm(10.0, 100, 0.3);
        assert!(xp > xm);
    }

    #[test]
    fn e_bound_decreasing_in_n() {
        let pr = params();
        for &p in &[0.1689, 0.25, 0.4, 0.5] {
            let mut prev = f64::INFINITY;
            for &n in &[200u64, 400, 1000, 10_000, 500_000] {
                let v = e_bound(p, n, &pr).unwrap();
                assert!(v <= prev + 1e-15, "p={p} n={n}");
                prev = v;
            }
        }
    }

    #[test]
    fn max_over_p_finds_plateau_edges() {
        // max of a downward parabola
        let (am, m) = max_over_p(|p| -(p - 0.3) * (p - 0.3), 0.1, 0.5);
        assert!((am - 0.3).abs() < 1e-8);
        assert!(m.abs() < 1e-16);
        // max at the interval edge
        let (am, m) = max_over_p(|p| p, 0.1, 0.5);
        assert!((am - 0.5).abs() < 1e-9);
        assert!((m - 0.5).abs() < 1e-9);
    }
}
