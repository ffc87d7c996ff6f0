//! Experiment orchestration: batches of solves, streaming statistics,
//! histograms, and the determinant estimators.
//!
//! Work is cut into fixed blocks of sample indices. Workers pull blocks from
//! a shared counter and the per-block statistics are merged in block order,
//! so reports do not depend on the number of workers.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use nalgebra::Matrix3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    mh_box_chain, rotated_points, sample_box, sample_essential_uniform, sample_psi, sample_quadric,
    sample_unifG, z_matrix, BoxConfig, MhChain,
};
use crate::error::{Error, Result};
use crate::rng::{domain, sample_rng};
use crate::solver::{count_real_cubic_pencil, solve_five_point, LinearSpace, SolveOptions, SolveStatus};

/// Volume of the essential variety in the half-trace metric.
pub const VOL_ESSENTIAL: f64 = 2.0 * PI * PI * PI;

/// `vol(E) / 8 = pi^3 / 4`, the constant relating `E|det Z|` to the mean count.
pub const DET_TO_COUNT: f64 = VOL_ESSENTIAL / 8.0;

/// Sample indices per work block.
pub const BLOCK: usize = 256;

/// Epsilons reported with every experiment.
pub const CHEBYSHEV_EPSILONS: [f64; 3] = [0.01, 0.05, 0.1];

/// Welford accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for StreamStats {
    fn default() -> Self {
        StreamStats { count: 0, mean: 0.0, m2: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }
}

impl StreamStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&mut self, other: &StreamStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        self.mean += d * nb / n;
        self.m2 += other.m2 + d * d * na * nb / n;
        self.count += other.count;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for StreamStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = StreamStats::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Runs `f` on consecutive blocks of `0..n` and returns the block results in order.
pub fn parallel_blocks<T, F>(n: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync,
{
    let blocks = n.div_ceil(BLOCK as u64) as usize;
    let range = |b: usize| (b as u64 * BLOCK as u64)..((b as u64 + 1) * BLOCK as u64).min(n);
    let workers = workers.max(1).min(blocks.max(1));
    if workers == 1 {
        return (0..blocks).map(|b| f(range(b))).collect();
    }
    let next = AtomicUsize::new(0);
    let mut out: Vec<Option<T>> = (0..blocks).map(|_| None).collect();
    let parts: Vec<Vec<(usize, T)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let b = next.fetch_add(1, Ordering::Relaxed);
                        if b >= blocks {
                            break;
                        }
                        mine.push((b, f(range(b))));
                    }
                    mine
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    for part in parts {
        for (b, t) in part {
            out[b] = Some(t);
        }
    }
    out.into_iter().map(|t| t.expect("every block computed")).collect()
}

/// The linear-space distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dist {
    UnifG,
    Psi,
    Box(BoxConfig),
}

impl Dist {
    pub fn tag(&self) -> &'static str {
        match self {
            Dist::UnifG => "unifG",
            Dist::Psi => "psi",
            Dist::Box(_) => "box",
        }
    }

    fn domain(&self) -> u64 {
        match self {
            Dist::UnifG => domain::UNIF_G,
            Dist::Psi => domain::PSI,
            Dist::Box(_) => domain::BOX,
        }
    }

    /// The instance with global index `index`.
    pub fn sample(&self, seed: u64, index: u64) -> Result<LinearSpace> {
        let mut rng = sample_rng(seed, self.domain(), index);
        match self {
            Dist::UnifG => Ok(sample_unifG(&mut rng)),
            Dist::Psi => Ok(sample_psi(&mut rng).1),
            Dist::Box(b) => Ok(sample_box(&mut rng, b)?.1),
        }
    }
}

/// Seed of the solver's re-randomization stream for one instance.
pub fn solver_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevEntry {
    pub epsilon: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub distribution: String,
    pub n: u64,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub histogram: [u64; 11],
    pub failures: u64,
    pub retried: u64,
    pub chebyshev: Vec<ChebyshevEntry>,
    pub wall_time: f64,
}

impl ExperimentReport {
    /// Copy with the timing field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        ExperimentReport { wall_time: 0.0, ..self.clone() }
    }

    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.n as f64
    }

    /// CSV with header `real_count,frequency` and one row per count 0..=10.
    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("real_count,frequency\n");
        for (k, c) in self.histogram.iter().enumerate() {
            s.push_str(&format!("{k},{c}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, Default)]
struct CountBlock {
    stats: StreamStats,
    histogram: [u64; 11],
    failures: u64,
    retried: u64,
}

fn check_sizes(n: u64, workers: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidValue("n must be at least 1".into()));
    }
    if workers == 0 {
        return Err(Error::InvalidValue("workers must be at least 1".into()));
    }
    Ok(())
}

/// Solves `n` instances of `dist` and summarizes the real-solution counts.
/// Failed solves are excluded from the mean and counted separately.
pub fn run_experiment(dist: &Dist, n: u64, seed: u64, workers: usize) -> Result<ExperimentReport> {
    check_sizes(n, workers)?;
    let start = Instant::now();
    let blocks = parallel_blocks(n, workers, |range| {
        let mut b = CountBlock::default();
        for i in range {
            let l = match dist.sample(seed, i) {
                Ok(l) => l,
                Err(_) => {
                    b.failures += 1;
                    continue;
                }
            };
            let res = solve_five_point(&l, &SolveOptions { retries: 5, seed: solver_seed(seed, i) });
            match res.status {
                SolveStatus::Failed(_) => b.failures += 1,
                status => {
                    if matches!(status, SolveStatus::Retried(_)) {
                        b.retried += 1;
                    }
                    b.stats.push(res.real_count as f64);
                    b.histogram[res.real_count] += 1;
                }
            }
        }
        b
    });
    let mut total = CountBlock::default();
    for b in &blocks {
        total.stats.merge(&b.stats);
        for k in 0..11 {
            total.histogram[k] += b.histogram[k];
        }
        total.failures += b.failures;
        total.retried += b.retried;
    }
    let ok = n - total.failures;
    // Mean from the histogram is exact; the stream supplies the variance.
    let mean = if ok > 0 {
        total.histogram.iter().enumerate().map(|(k, c)| k as f64 * *c as f64).sum::<f64>() / ok as f64
    } else {
        f64::NAN
    };
    let variance = total.stats.variance();
    let chebyshev = CHEBYSHEV_EPSILONS
        .iter()
        .map(|&eps| ChebyshevEntry { epsilon: eps, bound: plain_chebyshev(variance, ok.max(1), eps) })
        .collect();
    Ok(ExperimentReport {
        distribution: dist.tag().to_string(),
        n,
        seed,
        mean,
        variance,
        std_error: total.stats.std_error(),
        histogram: total.histogram,
        failures: total.failures,
        retried: total.retried,
        chebyshev,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn plain_chebyshev(sigma2: f64, n: u64, eps: f64) -> f64 {
    (sigma2 / (n as f64 * eps * eps)).min(1.0)
}

/// `min(1, (pi^6 / 16) sigma^2 / (n eps^2))`: Chebyshev's inequality for
/// `pi^3/4` times a sample mean of `|det Z|` with variance `sigma2`.
pub fn chebyshev_bound(sigma2: f64, n: u64, eps: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || n == 0 || !(eps > 0.0) {
        return Err(Error::InvalidValue(format!(
            "chebyshev bound needs sigma2 > 0, n >= 1, eps > 0 (got {sigma2}, {n}, {eps})"
        )));
    }
    Ok((PI.powi(6) / 16.0 * sigma2 / (n as f64 * eps * eps)).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetReport {
    pub n: u64,
    pub seed: u64,
    pub mean_abs_det: f64,
    pub se_abs_det: f64,
    pub second_moment: f64,
    pub se_second_moment: f64,
    /// `pi^3/4` times the mean of `|det Z|`.
    pub mean_count: f64,
    pub se_count: f64,
    pub wall_time: f64,
}

impl DetReport {
    pub fn without_timing(&self) -> Self {
        DetReport { wall_time: 0.0, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct DetBlock {
    abs: StreamStats,
    sq: StreamStats,
}

/// Streaming mean of `|det Z|` and `det(Z)^2` for `Z` with i.i.d. z-vector columns.
pub fn estimate_abs_det(n: u64, seed: u64, workers: usize) -> Result<DetReport> {
    check_sizes(n, workers)?;
    let start = Instant::now();
    let blocks = parallel_blocks(n, workers, |range| {
        let mut b = DetBlock::default();
        for i in range {
            let mut rng = sample_rng(seed, domain::DET, i);
            let d = z_matrix(&sample_quadric(&mut rng)).determinant();
            b.abs.push(d.abs());
            b.sq.push(d * d);
        }
        b
    });
    let mut t = DetBlock::default();
    for b in &blocks {
        t.abs.merge(&b.abs);
        t.sq.merge(&b.sq);
    }
    Ok(DetReport {
        n,
        seed,
        mean_abs_det: t.abs.mean,
        se_abs_det: t.abs.std_error(),
        second_moment: t.sq.mean,
        se_second_moment: t.sq.std_error(),
        mean_count: DET_TO_COUNT * t.abs.mean,
        se_count: DET_TO_COUNT * t.abs.std_error(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedReport {
    pub n: u64,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
    /// Fraction of draws with non-zero weight.
    pub support_fraction: f64,
    pub wall_time: f64,
}

/// Plain importance estimate `pi^3/4 * mean(W * |det Z|)` where `W` is the box
/// density of the rotated correspondences `(U u_i, V v_i)`; `None` means `W = 1`.
pub fn estimate_main3_plain(n: u64, seed: u64, boxes: Option<&BoxConfig>, workers: usize) -> Result<WeightedReport> {
    check_sizes(n, workers)?;
    let start = Instant::now();
    let blocks = parallel_blocks(n, workers, |range| {
        let mut s = StreamStats::default();
        let mut support = 0u64;
        for i in range {
            let mut rng = sample_rng(seed, domain::MAIN3, i);
            let (_, u, v) = sample_essential_uniform(&mut rng);
            let q = sample_quadric(&mut rng);
            let w = match boxes {
                Some(b) => b.density(&rotated_points(&q, &u, &v)),
                None => 1.0,
            };
            if w > 0.0 {
                support += 1;
            }
            let val = if w > 0.0 { DET_TO_COUNT * w * z_matrix(&q).determinant().abs() } else { 0.0 };
            s.push(val);
        }
        (s, support)
    });
    let mut total = StreamStats::default();
    let mut support = 0;
    for (s, c) in &blocks {
        total.merge(s);
        support += c;
    }
    Ok(WeightedReport {
        n,
        seed,
        mean: total.mean,
        std_error: total.std_error(),
        support_fraction: support as f64 / n as f64,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Metropolis-Hastings chain for the box density.
pub fn run_mh_box(n: u64, seed: u64, boxes: &BoxConfig) -> Result<MhChain> {
    mh_box_chain(&mut sample_rng(seed, domain::MH, 0), n, boxes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub solver_mean: f64,
    pub solver_se: f64,
    pub det_mean: f64,
    pub det_se: f64,
    pub gap: f64,
    /// `3 * (solver_se + det_se)`.
    pub tolerance: f64,
    pub agree: bool,
}

/// Compares a solver experiment with a determinant estimate.
pub fn check_agreement(solver: &ExperimentReport, det: &DetReport) -> Result<CrossCheck> {
    let gap = (solver.mean - det.mean_count).abs();
    let tolerance = 3.0 * (solver.std_error + det.se_count);
    let check = CrossCheck {
        solver_mean: solver.mean,
        solver_se: solver.std_error,
        det_mean: det.mean_count,
        det_se: det.se_count,
        gap,
        tolerance,
        agree: gap <= tolerance,
    };
    if !check.agree {
        return Err(Error::CrossCheckFailed {
            solver_mean: solver.mean,
            solver_ci: 3.0 * solver.std_error,
            det_mean: det.mean_count,
            det_ci: 3.0 * det.se_count,
        });
    }
    Ok(check)
}

/// Runs the psi solver experiment and the determinant estimator and checks
/// that their means agree.
pub fn cross_check_theorem2(n_solver: u64, n_det: u64, seed: u64, workers: usize) -> Result<CrossCheck> {
    let solver = run_experiment(&Dist::Psi, n_solver, seed, workers)?;
    let det = estimate_abs_det(n_det, seed, workers)?;
    check_agreement(&solver, &det)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilReport {
    pub n: u64,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
    /// Counts of pencils with 0..=3 real roots.
    pub histogram: [u64; 4],
    pub degenerate: u64,
    pub wall_time: f64,
}

/// Real-root counts of `det(sA + tB)` for i.i.d. Gaussian `A, B`.
pub fn pencil_experiment(n: u64, seed: u64, workers: usize) -> Result<PencilReport> {
    check_sizes(n, workers)?;
    let start = Instant::now();
    let blocks = parallel_blocks(n, workers, |range| {
        let mut s = StreamStats::default();
        let mut hist = [0u64; 4];
        let mut degenerate = 0;
        for i in range {
            let mut rng = sample_rng(seed, domain::PENCIL, i);
            let a = Matrix3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            let b = Matrix3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            match count_real_cubic_pencil(&a, &b) {
                Ok(k) => {
                    s.push(k as f64);
                    hist[k as usize] += 1;
                }
                Err(_) => degenerate += 1,
            }
        }
        (s, hist, degenerate)
    });
    let mut total = StreamStats::default();
    let mut histogram = [0u64; 4];
    let mut degenerate = 0;
    for (s, h, d) in &blocks {
        total.merge(s);
        for k in 0..4 {
            histogram[k] += h[k];
        }
        degenerate += d;
    }
    Ok(PencilReport {
        n,
        seed,
        mean: total.mean,
        std_error: total.std_error(),
        histogram,
        degenerate,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::BoxSpec;

    #[test]
    fn stream_stats_match_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let s: StreamStats = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((s.mean - mean).abs() < 1e-12 * mean);
        assert!((s.variance() - var).abs() < 1e-12 * var);
        let mut a: StreamStats = xs[..300].iter().copied().collect();
        let b: StreamStats = xs[300..].iter().copied().collect();
        a.merge(&b);
        assert!((a.mean - s.mean).abs() <= 1e-12 * s.mean);
        assert!((a.variance() - s.variance()).abs() <= 1e-12 * s.variance());
        assert_eq!(a.count, s.count);
        assert_eq!((a.min, a.max), (s.min, s.max));
    }

    #[test]
    fn chebyshev_values() {
        let b = chebyshev_bound(360.0, 5_000_000_000, 0.05).unwrap();
        assert!((b - 1.7305e-3).abs() < 1e-6, "{b}");
        assert!(chebyshev_bound(1.0, 10, 1e12).unwrap() < 1e-20);
        assert!(chebyshev_bound(0.0, 10, 0.1).is_err());
        assert_eq!(chebyshev_bound(1.0, 1, 1e-3).unwrap(), 1.0);
    }

    #[test]
    fn parallel_blocks_are_ordered() {
        for workers in [1, 3, 8] {
            let v = parallel_blocks(1000, workers, |r| (r.start, r.end));
            assert_eq!(v.len(), 4);
            assert_eq!(v[0], (0, 256));
            assert_eq!(v[3], (768, 1000));
        }
    }

    #[test]
    fn small_experiment_is_consistent() {
        let r = run_experiment(&Dist::UnifG, 300, 5, 2).unwrap();
        assert_eq!(r.histogram.iter().sum::<u64>() + r.failures, 300);
        for k in [1, 3, 5, 7, 9] {
            assert_eq!(r.histogram[k], 0);
        }
        assert_eq!(r.histogram_csv().lines().count(), 12);
        let r2 = run_experiment(&Dist::UnifG, 300, 5, 1).unwrap();
        assert_eq!(r.without_timing(), r2.without_timing());
        assert!(run_experiment(&Dist::Psi, 0, 1, 1).is_err());
        assert!(run_experiment(&Dist::Psi, 1, 1, 0).is_err());
    }

    #[test]
    fn unit_weight_matches_det_estimator() {
        let a = estimate_main3_plain(200_000, 3, None, 1).unwrap();
        let b = estimate_abs_det(200_000, 3, 1).unwrap();
        assert!((a.mean - b.mean_count).abs() <= 3.0 * (a.std_error + b.se_count));
        assert_eq!(a.support_fraction, 1.0);
    }

    #[test]
    fn far_boxes_give_zero() {
        let far = BoxConfig::uniform(BoxSpec::new(1e6, 1e6 + 1.0, 1e6, 1e6 + 1.0).unwrap());
        let r = estimate_main3_plain(20_000, 3, Some(&far), 1).unwrap();
        assert!(r.mean.abs() < 1e-6, "{}", r.mean);
    }

    #[test]
    fn corrupted_constant_fails_cross_check() {
        let solver = run_experiment(&Dist::Psi, 2_000, 9, 1).unwrap();
        let det = estimate_abs_det(200_000, 9, 1).unwrap();
        assert!(check_agreement(&solver, &det).is_ok());
        let wrong = DetReport { mean_count: det.mean_abs_det * PI * PI / 4.0, ..det.clone() };
        assert!(matches!(check_agreement(&solver, &wrong), Err(Error::CrossCheckFailed { .. })));
    }

    #[test]
    fn tiny_cross_check_agrees() {
        let c = cross_check_theorem2(100, 100, 4, 1).unwrap();
        assert!(c.agree);
        assert!(c.tolerance > c.gap);
    }
}
