//! Replication scaling benchmark: learn on k copies of every example with
//! minleaf scaled by k, check that the tree stays the same, and record how
//! time grows with the number of examples.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::engine::Program;
use crate::learn::{learn, LearnError};
use crate::settings::Settings;
use crate::store::{DatasetHandle, DatasetWriter, Selector, StoreError};
use crate::term::Term;

/// CPU time consumed by this process, when the platform reports it.
pub fn cpu_seconds() -> Option<f64> {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: clock_gettime only writes into the timespec we pass.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    (rc == 0).then_some(ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9)
}

/// Stopwatch for wall and CPU time.
#[derive(Clone, Copy, Debug)]
pub struct Timer {
    wall: Instant,
    cpu: Option<f64>,
}

impl Timer {
    pub fn start() -> Timer {
        Timer {
            wall: Instant::now(),
            cpu: cpu_seconds(),
        }
    }

    pub fn wall(&self) -> f64 {
        self.wall.elapsed().as_secs_f64()
    }

    /// CPU seconds since start, wall seconds where CPU time is unavailable.
    pub fn cpu(&self) -> f64 {
        match (self.cpu, cpu_seconds()) {
            (Some(a), Some(b)) => b - a,
            _ => self.wall(),
        }
    }
}

/// Every example `k` times, consecutively, with identifiers `r(Copy, Id)`.
pub fn replicate(
    data: &DatasetHandle,
    k: usize,
    dir: &Path,
    granularity: usize,
) -> Result<DatasetHandle, StoreError> {
    assert!(k >= 1, "replication factor must be positive");
    let mut w = DatasetWriter::create(dir, granularity, data.classes.clone())?;
    for item in data.stream(Selector::All) {
        let (_, e) = item?;
        for j in 1..=k {
            w.push(&e.with_id(Term::compound("r", vec![Term::Int(j as i64), e.id.clone()])))?;
        }
    }
    w.finish()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub k: usize,
    /// Number of examples N.
    pub examples: usize,
    /// Nodes in the tree n.
    pub nodes: usize,
    pub depth: usize,
    /// Mean candidates per expanded node t.
    pub mean_candidates: f64,
    /// Mean cost of one query evaluation c, in CPU seconds.
    pub mean_test_seconds: f64,
    pub passes: u64,
    pub peak_resident: usize,
    pub chunk_loads: u64,
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
    /// Time spent writing the replicated chunks.
    pub chunk_seconds: f64,
    pub tree_hash: String,
}

#[derive(Clone, Debug)]
pub struct BenchOutcome {
    pub reports: Vec<BenchReport>,
    /// All runs built the same tree.
    pub identical: bool,
}

impl BenchOutcome {
    /// Least-squares slope of log(cpu seconds) against log(N).
    pub fn slope(&self) -> Option<f64> {
        loglog_slope(
            &self
                .reports
                .iter()
                .map(|r| (r.examples as f64, r.cpu_seconds))
                .collect::<Vec<_>>(),
        )
    }

    /// Tab-separated table, one row per k.
    pub fn write_tsv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "k\tN\tcpu_seconds\tchunk_seconds\tpasses\ttree_hash")?;
        for r in &self.reports {
            writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
                r.k, r.examples, r.cpu_seconds, r.chunk_seconds, r.passes, r.tree_hash
            )?;
        }
        Ok(())
    }
}

/// Slope of the least-squares line through (ln x, ln y); `None` with
/// fewer than two distinct x or any nonpositive value.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// Run the benchmark for every k in `ks`. Replicated stores go to
/// `work/k<k>` and are left in place.
pub fn bench_run(
    data: &DatasetHandle,
    b: &Program,
    settings: &Settings,
    ks: &[usize],
    work: &Path,
) -> Result<BenchOutcome, BenchError> {
    let mut reports: Vec<BenchReport> = Vec::new();
    for &k in ks {
        let t = Timer::start();
        let rep = replicate(
            data,
            k,
            &work.join(format!("k{k}")),
            settings.params.granularity,
        )?;
        let chunk_seconds = t.cpu();

        let mut s = settings.clone();
        s.params.minleaf *= k as u64;
        rep.reset_stats();
        let t = Timer::start();
        let learned = learn(&rep, b, &s)?;
        let (cpu, wall) = (t.cpu(), t.wall());
        let r = &learned.report;
        let tree = &learned.model.tree;
        let report = BenchReport {
            k,
            examples: rep.total,
            nodes: tree.node_count(),
            depth: tree.depth(),
            mean_candidates: if r.expanded_nodes == 0 {
                0.0
            } else {
                r.candidates as f64 / r.expanded_nodes as f64
            },
            mean_test_seconds: if r.tests == 0 {
                0.0
            } else {
                cpu / r.tests as f64
            },
            passes: r.passes,
            peak_resident: rep.peak_resident(),
            chunk_loads: rep.chunk_loads(),
            cpu_seconds: cpu,
            wall_seconds: wall,
            chunk_seconds,
            tree_hash: learned.model.tree_hash(),
        };
        log::info!(
            "k {k} N {} cpu {:.3}s passes {} hash {}",
            report.examples,
            report.cpu_seconds,
            report.passes,
            report.tree_hash
        );
        reports.push(report);
    }
    let identical = reports.windows(2).all(|w| w[0].tree_hash == w[1].tree_hash);
    if !identical {
        log::warn!("benchmark invalid: the tree changed across replication factors");
    }
    Ok(BenchOutcome { reports, identical })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let lin: Vec<(f64, f64)> = [100.0, 200.0, 400.0]
            .iter()
            .map(|&x| (x, 3.0 * x))
            .collect();
        assert!((loglog_slope(&lin).unwrap() - 1.0).abs() < 1e-12);
        let quad: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, x * x)).collect();
        assert!((loglog_slope(&quad).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&[(1.0, 1.0), (1.0, 2.0)]), None);
        assert_eq!(loglog_slope(&[(1.0, 0.0), (2.0, 2.0)]), None);
    }

    #[test]
    fn cpu_clock_advances() {
        let t = Timer::start();
        let mut x = 0u64;
        for i in 0..2_000_000u64 {
            x = x.wrapping_mul(31).wrapping_add(i);
        }
        assert!(x != 1);
        assert!(t.cpu() >= 0.0);
    }
}
