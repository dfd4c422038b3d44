//! Certified suprema by adaptive interval refinement.
//!
//! A uniform grid pays the full Lipschitz slack `sqrt(n) (h/2) L(p_lo)`
//! everywhere, so pushing a certificate below a tight target makes the node
//! count explode. Refinement splits only the cells whose certified roof
//!
//! ```text
//! roof = (T(a) + T(b))/2 + sqrt(n) L(a) (b - a)/2
//! ```
//!
//! still reaches the target; everything else is certified at its current
//! width. The roof is the apex of the two Lipschitz lines through the cell
//! endpoints, both valid with the modulus frozen at the cell's left edge
//! since `L` decreases.

use super::ScanSpec;
use crate::certify::lipschitz_l;
use crate::discrepancy::DeltaEvaluator;
use crate::numerics::BinomialPoint;
use crate::{Error, Result};
use serde::Serialize;
use std::time::Instant;

/// Parameters of an adaptive certification run.
#[derive(Clone, Debug, Serialize)]
pub struct AdaptiveSpec {
    pub n_lo: u64,
    pub n_hi: u64,
    pub p_lo: f64,
    pub p_hi: f64,
    /// Refine until every cell's roof is below this value.
    pub target: f64,
    /// Stop refining a cell once it is this narrow and report it as-is.
    pub width_floor: f64,
    /// Hard cap on evaluations for a single `n`.
    pub max_evals_per_n: u64,
    /// Worker threads; 0 picks the number of logical cpus.
    pub workers: usize,
}

impl AdaptiveSpec {
    pub fn new(n_lo: u64, n_hi: u64, p_lo: f64, p_hi: f64, target: f64) -> Self {
        AdaptiveSpec {
            n_lo,
            n_hi,
            p_lo,
            p_hi,
            target,
            width_floor: 1e-13,
            max_evals_per_n: 50_000_000,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_lo == 0 || self.n_lo > self.n_hi {
            return Err(Error::Spec(format!("bad n range [{}, {}]", self.n_lo, self.n_hi)));
        }
        if !(self.p_lo > 0.0 && self.p_lo < self.p_hi && self.p_hi <= 0.5) {
            return Err(Error::Spec(format!(
                "need 0 < p_lo < p_hi <= 0.5, got [{}, {}]",
                self.p_lo, self.p_hi
            )));
        }
        if !(self.target > 0.0) || !(self.width_floor > 0.0) {
            return Err(Error::Spec("target and width_floor must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome for one `n`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AdaptivePerN {
    pub n: u64,
    /// Upper bound on `sup_p T_n(p)` over `[p_lo, p_hi]`.
    pub certified_bound: f64,
    /// Largest evaluated node value (a lower estimate of the sup).
    pub best_t: f64,
    pub best_p: f64,
    pub evals: u64,
    /// False if the width floor or the eval budget stopped refinement while
    /// some roof still reached the target.
    pub converged: bool,
}

/// Whole-range outcome.
#[derive(Clone, Debug, Serialize)]
pub struct AdaptiveReport {
    pub spec: AdaptiveSpec,
    pub per_n: Vec<AdaptivePerN>,
    pub global_certified: f64,
    pub global_best: f64,
    pub all_converged: bool,
    pub total_evals: u64,
    pub elapsed_secs: f64,
}

struct Cell {
    a: f64,
    b: f64,
    ta: f64,
    tb: f64,
}

fn certify_one_n(spec: &AdaptiveSpec, n: u64, ev: &mut DeltaEvaluator) -> Result<AdaptivePerN> {
    let sqrt_n = (n as f64).sqrt();
    let mode = ScanSpec::mode_for(n);
    let mut evals = 0u64;
    let mut best_t = f64::NEG_INFINITY;
    let mut best_p = spec.p_lo;

    let mut eval = |p: f64, evals: &mut u64, best_t: &mut f64, best_p: &mut f64| -> Result<f64> {
        let t = ev.t_value(&BinomialPoint::new(n, p)?, mode)?;
        *evals += 1;
        if t > *best_t {
            *best_t = t;
            *best_p = p;
        }
        Ok(t)
    };

    // initial uniform cells, denser for larger n where the landscape is finer
    let init = (n.max(64)).min(1024) as usize;
    let width = spec.p_hi - spec.p_lo;
    let mut nodes = Vec::with_capacity(init + 1);
    for j in 0..=init {
        let p = spec.p_lo + width * (j as f64 / init as f64);
        nodes.push((p, eval(p, &mut evals, &mut best_t, &mut best_p)?));
    }

    let mut stack: Vec<Cell> = Vec::with_capacity(64);
    for w in nodes.windows(2).rev() {
        stack.push(Cell { a: w[0].0, b: w[1].0, ta: w[0].1, tb: w[1].1 });
    }

    let mut certified = f64::NEG_INFINITY;
    let mut converged = true;
    while let Some(Cell { a, b, ta, tb }) = stack.pop() {
        let slope = sqrt_n * lipschitz_l(a)?;
        let roof = 0.5 * (ta + tb) + 0.5 * slope * (b - a);
        if roof < spec.target {
            if roof > certified {
                certified = roof;
            }
            continue;
        }
        if b - a < spec.width_floor || evals >= spec.max_evals_per_n {
            converged = false;
            if roof > certified {
                certified = roof;
            }
            continue;
        }
        // split into enough children that flat interiors certify in one step
        let headroom = spec.target - ta.max(tb);
        let parts = if headroom > 0.0 {
            ((b - a) * slope / (2.0 * headroom)).ceil().min(8.0).max(2.0) as usize
        } else {
            2
        };
        let mut prev_p = a;
        let mut prev_t = ta;
        let mut children: Vec<Cell> = Vec::with_capacity(parts);
        for i in 1..=parts {
            let (p, t) = if i == parts {
                (b, tb)
            } else {
                let p = a + (b - a) * (i as f64 / parts as f64);
                (p, eval(p, &mut evals, &mut best_t, &mut best_p)?)
            };
            children.push(Cell { a: prev_p, b: p, ta: prev_t, tb: t });
            prev_p = p;
            prev_t = t;
        }
        for c in children.into_iter().rev() {
            stack.push(c);
        }
    }

    Ok(AdaptivePerN { n, certified_bound: certified, best_t, best_p, evals, converged })
}

/// Certify `sup_p T_n(p)` over `[p_lo, p_hi]` for every `n` in the range.
pub fn certify_sup(spec: &AdaptiveSpec) -> Result<AdaptiveReport> {
    spec.validate()?;
    let started = Instant::now();
    let ns: Vec<u64> = (spec.n_lo..=spec.n_hi).collect();

    let run = || -> Result<Vec<AdaptivePerN>> {
        use rayon::prelude::*;
        ns.par_iter()
            .map_init(DeltaEvaluator::new, |ev, &n| certify_one_n(spec, n, ev))
            .collect()
    };
    let mut per_n = if spec.workers == 0 {
        run()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| Error::Spec(format!("worker pool: {e}")))?;
        pool.install(run)?
    };
    per_n.sort_by_key(|r| r.n);

    let mut global_certified = f64::NEG_INFINITY;
    let mut global_best = f64::NEG_INFINITY;
    let mut all_converged = true;
    let mut total_evals = 0u64;
    for r in &per_n {
        global_certified = global_certified.max(r.certified_bound);
        global_best = global_best.max(r.best_t);
        all_converged &= r.converged;
        total_evals += r.evals;
    }
    Ok(AdaptiveReport {
        spec: spec.clone(),
        per_n,
        global_certified,
        global_best,
        all_converged,
        total_evals,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_range_certifies_quickly() {
        let spec = AdaptiveSpec::new(1, 40, 0.1689, 0.5, 0.41);
        let rep = certify_sup(&spec).unwrap();
        assert!(rep.all_converged);
        assert!(rep.global_certified < 0.41);
        assert!(rep.global_best <= rep.global_certified);
        assert_eq!(rep.per_n.len(), 40);
    }

    #[test]
    fn certificate_dominates_off_grid_values() {
        let spec = AdaptiveSpec::new(37, 37, 0.1689, 0.5, 0.41);
        let rep = certify_sup(&spec).unwrap();
        let bound = rep.per_n[0].certified_bound;
        let mut ev = DeltaEvaluator::new();
        for i in 0..200 {
            let p = 0.1689 + (0.5 - 0.1689) * ((i as f64 + 0.371) / 200.0);
            let t = ev
                .t_value(&BinomialPoint::new(37, p).unwrap(), ScanSpec::mode_for(37))
                .unwrap();
            assert!(t <= bound, "off-grid {p}: {t} > {bound}");
        }
    }

    #[test]
    fn unreachable_target_reports_nonconvergence() {
        let mut spec = AdaptiveSpec::new(5, 5, 0.1689, 0.5, 0.01);
        spec.width_floor = 1e-4; // keep runtime bounded
        let rep = certify_sup(&spec).unwrap();
        assert!(!rep.all_converged);
        assert!(rep.global_certified >= 0.01);
    }

    #[test]
    fn spec_validation() {
        assert!(AdaptiveSpec::new(0, 5, 0.1689, 0.5, 0.41).validate().is_err());
        assert!(AdaptiveSpec::new(1, 5, 0.6, 0.7, 0.41).validate().is_err());
        assert!(AdaptiveSpec::new(1, 5, 0.1689, 0.5, -1.0).validate().is_err());
    }
}
