//! Deterministic enumeration and sampling of vertex subsets.
//!
//! Exhaustive scans walk every size `k` from the density threshold up to `n`
//! and, within a size, all `k`-subsets in lexicographic order. The work is cut
//! into rank ranges processed in parallel; maxima are reduced with ties broken
//! by `(k, rank)`, so results are independent of the schedule. Sampled scans
//! derive one seeded stream per trial, so trial `t` always sees the same set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

pub const DEFAULT_SUBSET_BUDGET: u128 = 20_000_000;

const CHUNK: u128 = 2048;

/// How a family of subsets is explored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    Exhaustive,
    /// Uniform subsets; trial `t` has size `k_min + t mod (n - k_min + 1)`.
    Sampled { trials: usize, seed: u64 },
}

/// Sorted, deduplicated, range-checked copy of `set`.
pub fn normalize_set(n: usize, set: &[usize]) -> Result<Vec<usize>> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&v) = s.last() {
        if v >= n {
            return Err(Error::InvalidParameter(format!("vertex {v} out of range {n}")));
        }
    }
    Ok(s)
}

/// Smallest size `k` with `k ≥ δ·n`.
pub fn min_size(delta: f64, n: usize) -> Result<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("density {delta} outside (0, 1]")));
    }
    // Absorb rounding in products like 0.1 * 30.
    let k = (delta * n as f64 - 1e-9).ceil().max(1.0) as usize;
    Ok(k.min(n))
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Number of subsets of size at least `k_min`.
pub fn count_at_least(n: usize, k_min: usize) -> u128 {
    (k_min..=n).fold(0u128, |acc, k| acc.saturating_add(binomial(n, k)))
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
pub fn unrank(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let mut v = next;
        loop {
            let below = binomial(n - v - 1, k - slot - 1);
            if rank < below {
                break;
            }
            rank -= below;
            v += 1;
        }
        out.push(v);
        next = v + 1;
    }
    out
}

/// Advances to the lexicographically next `k`-subset; false after the last.
pub fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Subset for sampled trial `trial`.
pub fn sampled_subset(n: usize, k_min: usize, seed: u64, purpose: &str, trial: usize) -> Vec<usize> {
    let k = k_min + trial % (n - k_min + 1);
    SeedStream::derived(seed, purpose, trial as u64).subset(n, k)
}

/// Largest value seen for one statistic, with the set attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Worst {
    pub value: f64,
    pub subset: Vec<usize>,
}

/// Per-statistic maxima over a scanned family.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub worst: Vec<Worst>,
    pub checked: u128,
}

type Best = Vec<(f64, (usize, u128), Vec<usize>)>;

fn merge(a: Best, b: Best) -> Best {
    if a.is_empty() {
        return b;
    }
    if b.is_empty() {
        return a;
    }
    a.into_iter()
        .zip(b)
        .map(|(x, y)| match x.0.total_cmp(&y.0) {
            std::cmp::Ordering::Greater => x,
            std::cmp::Ordering::Less => y,
            std::cmp::Ordering::Equal => {
                if x.1 <= y.1 {
                    x
                } else {
                    y
                }
            }
        })
        .collect()
}

fn absorb(best: &mut Best, stats: &[f64], key: (usize, u128), set: &[usize]) {
    if best.is_empty() {
        *best = stats.iter().map(|&v| (v, key, set.to_vec())).collect();
        return;
    }
    for (slot, &v) in best.iter_mut().zip(stats) {
        if v > slot.0 {
            *slot = (v, key, set.to_vec());
        }
    }
}

fn finish(best: Best, checked: u128) -> ScanResult {
    ScanResult { worst: best.into_iter().map(|(value, _, subset)| Worst { value, subset }).collect(), checked }
}

/// Maxima of `stats(S)` over all `S ⊆ 0..n` with `|S| ≥ k_min`.
pub fn scan_exhaustive<F>(n: usize, k_min: usize, budget: u128, stats: F) -> Result<ScanResult>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync,
{
    let total = count_at_least(n, k_min.max(1));
    if total > budget {
        return Err(Error::BudgetExceeded { needed: total, budget });
    }
    let mut jobs = Vec::new();
    for k in k_min.max(1)..=n {
        let count = binomial(n, k);
        let mut start = 0;
        while start < count {
            jobs.push((k, start, (start + CHUNK).min(count)));
            start += CHUNK;
        }
    }
    let best = jobs
        .par_iter()
        .map(|&(k, start, end)| {
            let mut best = Best::new();
            let mut c = unrank(n, k, start);
            for rank in start..end {
                absorb(&mut best, &stats(&c), (k, rank), &c);
                next_combination(&mut c, n);
            }
            best
        })
        .reduce(Best::new, merge);
    Ok(finish(best, total))
}

/// Maxima of `stats(S)` over `trials` sampled subsets plus `extra`.
pub fn scan_sampled<F>(n: usize, k_min: usize, trials: usize, seed: u64, extra: &[Vec<usize>], stats: F) -> ScanResult
where
    F: Fn(&[usize]) -> Vec<f64> + Sync,
{
    let k_min = k_min.max(1);
    let best = (0..trials + extra.len())
        .into_par_iter()
        .map(|t| {
            let set = if t < extra.len() { extra[t].clone() } else { sampled_subset(n, k_min, seed, "subset", t - extra.len()) };
            let mut best = Best::new();
            absorb(&mut best, &stats(&set), (0, t as u128), &set);
            best
        })
        .reduce(Best::new, merge);
    finish(best, (trials + extra.len()) as u128)
}

pub fn scan<F>(n: usize, k_min: usize, mode: &ScanMode, budget: u128, extra: &[Vec<usize>], stats: F) -> Result<ScanResult>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync,
{
    match mode {
        ScanMode::Exhaustive => scan_exhaustive(n, k_min, budget, stats),
        ScanMode::Sampled { trials, seed } => {
            if *trials == 0 && extra.is_empty() {
                return Err(Error::InvalidParameter("sampled scans need at least one trial".into()));
            }
            Ok(scan_sampled(n, k_min, *trials, *seed, extra, stats))
        }
    }
}
