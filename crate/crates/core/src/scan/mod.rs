//! The sweep over `(n, p-grid)` and the assembly of global certificates.
//!
//! Work is split by `n` (each `n` is one independent job); results are
//! merged in ascending `n` no matter which worker finished first, so a
//! report is bit-identical for any worker count. A line-oriented checkpoint
//! file lets a killed sweep resume without recomputing finished `n`.

pub mod adaptive;
mod checkpoint;

pub use checkpoint::{Checkpoint, CheckpointRecord};

use crate::certify::GridCertificate;
use crate::discrepancy::{DeltaEvaluator, EvalMode, FULL_RANGE_MAX_N};
use crate::numerics::BinomialPoint;
use crate::tailbounds::{
    corollary_c_bound, e_bound, max_over_p, neammanee_t_bound, small_p_t_bound, SmallPVariant,
    TailBoundParams,
};
use crate::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

/// Parameters of one sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanSpec {
    pub n_lo: u64,
    pub n_hi: u64,
    pub p_lo: f64,
    pub p_hi: f64,
    /// Grid step `h`; nodes are `p_lo + j*h`, the last clamped to `p_hi`.
    pub step: f64,
    /// Worker threads; 0 picks the number of logical cpus.
    pub workers: usize,
    /// Completed `n` values between checkpoint flushes.
    pub checkpoint_every: u64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        // desk-scale defaults; a full-scale sweep (h = 1e-12, n up to 5e5)
        // is accepted but takes supercomputer time
        ScanSpec {
            n_lo: 1,
            n_hi: 5000,
            p_lo: 0.1689,
            p_hi: 0.5,
            step: 1e-6,
            workers: 0,
            checkpoint_every: 64,
        }
    }
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_lo == 0 {
            return Err(Error::Spec("n_lo must be >= 1".into()));
        }
        if self.n_lo > self.n_hi {
            return Err(Error::Spec(format!("n_lo = {} > n_hi = {}", self.n_lo, self.n_hi)));
        }
        if !(self.p_lo > 0.0 && self.p_lo < self.p_hi && self.p_hi <= 0.5) {
            return Err(Error::Spec(format!(
                "need 0 < p_lo < p_hi <= 0.5, got [{}, {}]",
                self.p_lo, self.p_hi
            )));
        }
        if !(self.step > 0.0) {
            return Err(Error::Spec(format!("step must be positive, got {}", self.step)));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Spec("checkpoint_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of grid nodes. Node `j` is `p_lo + j*h` computed directly from
    /// the integer `j` (never by accumulation), with the last node clamped
    /// to `p_hi`.
    pub fn node_count(&self) -> u64 {
        let span = (self.p_hi - self.p_lo) / self.step;
        (span.ceil() as u64) + 1
    }

    #[inline]
    pub fn node(&self, j: u64) -> f64 {
        (self.p_lo + j as f64 * self.step).min(self.p_hi)
    }

    /// Mode policy: full range up to `n = 200`, restricted window above.
    pub fn mode_for(n: u64) -> EvalMode {
        if n <= FULL_RANGE_MAX_N {
            EvalMode::FullRange
        } else {
            EvalMode::RestrictedWindow
        }
    }

    /// Stable fingerprint of everything that determines the numbers; used
    /// to match checkpoints to their spec.
    pub fn digest(&self) -> String {
        checkpoint::spec_digest(self)
    }
}

/// Per-`n` result row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerN {
    pub n: u64,
    pub p_argmax: f64,
    pub t_max: f64,
    pub certified_bound: f64,
}

/// Full sweep output.
#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub spec: ScanSpec,
    pub per_n: Vec<PerN>,
    pub global_max: f64,
    pub global_certified: f64,
    pub elapsed_secs: f64,
    pub resumed_from: Option<String>,
}

impl ScanReport {
    /// The deterministic part of the report (everything except wall-clock
    /// metadata), serialized as JSON. Two runs of the same spec produce
    /// byte-identical output here for any worker count.
    pub fn results_json(&self) -> String {
        #[derive(Serialize)]
        struct Results<'a> {
            spec: &'a ScanSpec,
            per_n: &'a [PerN],
            global_max: f64,
            global_certified: f64,
        }
        serde_json::to_string_pretty(&Results {
            spec: &self.spec,
            per_n: &self.per_n,
            global_max: self.global_max,
            global_certified: self.global_certified,
        })
        .expect("report serialization cannot fail")
    }

    /// CSV rows `n,p_argmax,t_max,certified_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,p_argmax,t_max,certified_bound\n");
        for r in &self.per_n {
            out.push_str(&format!("{},{},{},{}\n", r.n, r.p_argmax, r.t_max, r.certified_bound));
        }
        out
    }
}

/// Grid maximum of `T_n` for one `n`: ascending-`j` pass, first maximum kept
/// on ties so the argmax is the smallest maximizing node.
fn scan_one_n(spec: &ScanSpec, n: u64) -> Result<(f64, f64)> {
    let mode = ScanSpec::mode_for(n);
    let mut ev = DeltaEvaluator::new();
    let nodes = spec.node_count();
    let mut best_t = f64::NEG_INFINITY;
    let mut best_p = spec.p_lo;
    let mut j = 0u64;
    while j < nodes {
        let p = spec.node(j);
        let point = BinomialPoint::new(n, p)?;
        let t = ev.t_value(&point, mode)?;
        if t > best_t {
            best_t = t;
            best_p = p;
        }
        j += 1;
    }
    Ok((best_p, best_t))
}

fn certificate_for(spec: &ScanSpec, n: u64, grid_max: f64) -> Result<GridCertificate> {
    GridCertificate::new(n, spec.p_lo, spec.p_hi, spec.step, grid_max)
}

struct Collector {
    done: BTreeMap<u64, (f64, f64)>, // n -> (p_argmax, t_max)
    checkpoint: Option<Checkpoint>,
    watermark: u64, // all n <= watermark flushed
    unflushed: u64,
    every: u64,
}

impl Collector {
    fn push(&mut self, n: u64, p_argmax: f64, t_max: f64) -> Result<()> {
        self.done.insert(n, (p_argmax, t_max));
        if let Some(cp) = self.checkpoint.as_mut() {
            // flush the contiguous ascending prefix in blocks
            let mut next = self.watermark + 1;
            while let Some(&(p, t)) = self.done.get(&next) {
                cp.stage(CheckpointRecord { n: next, p_argmax: p, t_max: t });
                self.unflushed += 1;
                self.watermark = next;
                next += 1;
            }
            if self.unflushed >= self.every {
                cp.flush()?;
                self.unflushed = 0;
            }
        }
        Ok(())
    }
}

/// Options routing a sweep to a checkpoint file.
#[derive(Clone, Debug, Default)]
pub struct CheckpointOptions {
    /// File that records completed `n` rows (created if absent).
    pub path: Option<PathBuf>,
    /// Load matching rows from `path` before scanning.
    pub resume: bool,
}

/// Run the sweep described by `spec`. Jobs are independent per `n`; the
/// reduction is ordered by `n`, so the report body is identical for any
/// worker count, and a resumed run reproduces an uninterrupted one.
pub fn scan_range(spec: &ScanSpec, ckpt: &CheckpointOptions) -> Result<ScanReport> {
    spec.validate()?;
    let started = Instant::now();

    let mut preloaded: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    let mut resumed_from = None;
    let digest = spec.digest();
    if ckpt.resume {
        let path = ckpt
            .path
            .as_ref()
            .ok_or_else(|| Error::Spec("resume requested without a checkpoint path".into()))?;
        if path.exists() {
            let records = checkpoint::load(path, &digest)?;
            for r in &records {
                if r.n >= spec.n_lo && r.n <= spec.n_hi {
                    preloaded.insert(r.n, (r.p_argmax, r.t_max));
                }
            }
            resumed_from = Some(format!("{}:{}", digest, preloaded.len()));
        }
    }

    // contiguous prefix already on disk
    let mut watermark = spec.n_lo - 1;
    while preloaded.contains_key(&(watermark + 1)) {
        watermark += 1;
    }

    let writer = match &ckpt.path {
        Some(path) => Some(Checkpoint::open(path, &digest, ckpt.resume)?),
        None => None,
    };

    let collector = Mutex::new(Collector {
        done: preloaded,
        checkpoint: writer,
        watermark,
        unflushed: 0,
        every: spec.checkpoint_every,
    });

    let pending: Vec<u64> = (spec.n_lo..=spec.n_hi)
        .filter(|n| {
            let c = collector.lock().unwrap();
            !c.done.contains_key(n)
        })
        .collect();

    let run = || -> Result<()> {
        use rayon::prelude::*;
        pending
            .par_iter()
            .map(|&n| {
                let (p_argmax, t_max) = scan_one_n(spec, n)?;
                let mut c = collector.lock().unwrap();
                c.push(n, p_argmax, t_max)
            })
            .collect::<Result<Vec<()>>>()?;
        Ok(())
    };

    if spec.workers == 0 {
        run()?;
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| Error::Spec(format!("worker pool: {e}")))?;
        pool.install(run)?;
    }

    let mut collector = collector.into_inner().unwrap();
    if let Some(cp) = collector.checkpoint.as_mut() {
        let mut next = collector.watermark + 1;
        while let Some(&(p, t)) = collector.done.get(&next) {
            cp.stage(CheckpointRecord { n: next, p_argmax: p, t_max: t });
            collector.watermark = next;
            next += 1;
        }
        cp.flush()?;
    }

    let mut per_n = Vec::with_capacity((spec.n_hi - spec.n_lo + 1) as usize);
    let mut global_max = f64::NEG_INFINITY;
    let mut global_certified = f64::NEG_INFINITY;
    for (&n, &(p_argmax, t_max)) in &collector.done {
        let cert = certificate_for(spec, n, t_max)?;
        global_max = global_max.max(t_max);
        global_certified = global_certified.max(cert.certified_bound);
        per_n.push(PerN { n, p_argmax, t_max, certified_bound: cert.certified_bound });
    }
    debug_assert_eq!(per_n.len() as u64, spec.n_hi - spec.n_lo + 1);

    Ok(ScanReport {
        spec: spec.clone(),
        per_n,
        global_max,
        global_certified,
        elapsed_secs: started.elapsed().as_secs_f64(),
        resumed_from,
    })
}

/// Which closed-form family bounds the tail `n >= n_tail`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailChoice {
    /// Full second-order envelope `E(p, n_tail)`.
    TheoremA,
    /// `E(p) + 0.05532/(sigma omega)`.
    CorollaryC,
    /// `E(p) + 0.1618/(sigma omega)`.
    Neammanee,
}

impl TailChoice {
    pub fn label(self) -> &'static str {
        match self {
            TailChoice::TheoremA => "theorem-a",
            TailChoice::CorollaryC => "corollary-c",
            TailChoice::Neammanee => "neammanee",
        }
    }
}

/// One regime of the global certificate.
#[derive(Clone, Debug, Serialize)]
pub struct CertificatePart {
    pub bound: f64,
    pub provenance: String,
}

/// Global verdict: `sup_{n >= 1} sup_{p in (0, 0.5]} T_n(p)` bounded by the
/// maximum of three regime bounds.
#[derive(Clone, Debug, Serialize)]
pub struct CertificateResult {
    pub finite_part: CertificatePart,
    pub small_p_part: CertificatePart,
    pub tail_part: CertificatePart,
    pub verdict: f64,
    pub n_tail: u64,
}

/// Combine a finite-range report with the small-`p` bound on `(0, p_lo]`
/// and a closed-form tail bound for `n >= n_tail`.
pub fn certify_global(
    report: &ScanReport,
    small_p: SmallPVariant,
    tail: TailChoice,
    n_tail: u64,
) -> Result<CertificateResult> {
    if report.spec.n_lo != 1 {
        return Err(Error::CoverageGap(format!(
            "report starts at n = {}, so n in [1, {}) is uncovered",
            report.spec.n_lo, report.spec.n_lo
        )));
    }
    if report.spec.n_hi < n_tail {
        return Err(Error::CoverageGap(format!(
            "report reaches n = {} but the tail bound starts at n = {n_tail}",
            report.spec.n_hi
        )));
    }
    if (report.spec.p_hi - 0.5).abs() > 1e-12 {
        return Err(Error::CoverageGap(format!(
            "report covers p up to {}, not 0.5",
            report.spec.p_hi
        )));
    }
    let p_lo = report.spec.p_lo;
    let params = TailBoundParams::default();

    let finite = CertificatePart {
        bound: report.global_certified,
        provenance: format!(
            "grid certificate: max over n in [{}, {}] of (grid max of T_n on [{}, {}] at step {}) + sqrt(n) (h/2) L({})",
            report.spec.n_lo, report.spec.n_hi, p_lo, report.spec.p_hi, report.spec.step, p_lo
        ),
    };

    let small = CertificatePart {
        bound: small_p_t_bound(p_lo, small_p)?,
        provenance: format!(
            "small-p bound ({}, coefficients {:?}) on (0, {}], all n; increasing in p so the right endpoint dominates",
            small_p.label(),
            small_p.coefficients(),
            p_lo
        ),
    };

    let (tail_bound, tail_note) = match tail {
        TailChoice::TheoremA => {
            if n_tail < 200 {
                return Err(Error::Precondition(format!(
                    "theorem-a tail requires n_tail >= 200, got {n_tail}"
                )));
            }
            if p_lo < 4.0 / n_tail as f64 {
                return Err(Error::Precondition(format!(
                    "theorem-a tail requires p >= 4/n over [{}, 0.5] at n = {n_tail}",
                    p_lo
                )));
            }
            let (pm, m) = max_over_p(
                |p| e_bound(p, n_tail, &params).unwrap_or(f64::NEG_INFINITY),
                p_lo,
                0.5,
            );
            (m, format!("sup_p E(p, {n_tail}) = {m} at p = {pm}, nonincreasing in n"))
        }
        TailChoice::CorollaryC => {
            if p_lo < 0.1689 {
                return Err(Error::Precondition(format!(
                    "corollary-c tail is stated on [0.1689, 0.5]; report starts at p = {p_lo}"
                )));
            }
            let (pm, m) =
                max_over_p(|p| corollary_c_bound(p, n_tail).unwrap_or(f64::NEG_INFINITY), p_lo, 0.5);
            (m, format!("sup_p [E(p) + 0.05532/(sigma omega)] at n = {n_tail}: {m} at p = {pm}"))
        }
        TailChoice::Neammanee => {
            if (n_tail as f64) * p_lo * (1.0 - p_lo) < 100.0 {
                return Err(Error::Precondition(format!(
                    "neammanee tail requires sigma^2 >= 100 at p = {p_lo}, n = {n_tail}"
                )));
            }
            let (pm, m) =
                max_over_p(|p| neammanee_t_bound(p, n_tail).unwrap_or(f64::NEG_INFINITY), p_lo, 0.5);
            (m, format!("sup_p [E(p) + 0.1618/(sigma omega)] at n = {n_tail}: {m} at p = {pm}"))
        }
    };
    let tail_part = CertificatePart {
        bound: tail_bound,
        provenance: format!("tail bound ({}) for all n >= {n_tail}: {tail_note}", tail.label()),
    };

    let verdict = finite.bound.max(small.bound).max(tail_part.bound);
    Ok(CertificateResult {
        finite_part: finite,
        small_p_part: small,
        tail_part,
        verdict,
        n_tail,
    })
}
