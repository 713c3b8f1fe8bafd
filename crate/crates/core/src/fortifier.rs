//! Extractor and fortifier certification.
//!
//! A left subset `S ⊆ W` induces a distribution `π` on `X`: pick `w ∈ S`
//! uniformly, then a uniform edge out of `w`. A graph is a
//! `(δ, ε)`-extractor when `|π − u|₁ ≤ ε` for every `|S| ≥ δ|W|`, and a
//! `(δ, ε₁, ε₂)`-fortifier when additionally `‖π − u‖² ≤ ε₂/|X|`.
//! Deviations are reported as `l1 = |π − u|₁` and `l2_scaled = |X|·‖π − u‖²`,
//! so both compare directly against `ε₁` and `ε₂`.

use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, GroundSet};
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::spectral::ExpanderCertificate;
use crate::subsets::{min_size, normalize_set, scan, ScanMode, Worst, DEFAULT_SUBSET_BUDGET};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Slack for floating-point comparisons against claimed parameters.
pub const CHECK_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub l1: f64,
    pub l2_scaled: f64,
}

pub fn induced_distribution(h: &BipartiteGraph, s: &[usize]) -> Result<Distribution> {
    let s = normalize_set(h.n_left(), s)?;
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    let deg = h.left_degrees();
    if let Some(&w) = s.iter().find(|&&w| deg[w] == 0) {
        return Err(Error::IsolatedVertex(w));
    }
    let in_s = crate::game::membership(h.n_left(), &s)?;
    let mut p = vec![0.0; h.n_right()];
    for &(w, x) in h.edges() {
        if in_s[w] {
            p[x] += 1.0 / (deg[w] as f64 * s.len() as f64);
        }
    }
    Distribution::new(GroundSet::RightVertices, p)
}

/// Evaluates deviations of induced distributions, with integer arithmetic on
/// left-regular graphs so that results do not depend on summation order.
pub struct DeviationKernel<'a> {
    h: &'a BipartiteGraph,
    adj: Vec<Vec<usize>>,
    degree: Option<usize>,
}

impl<'a> DeviationKernel<'a> {
    pub fn new(h: &'a BipartiteGraph) -> Self {
        Self { h, adj: h.left_adjacency(), degree: h.left_degree() }
    }

    /// Fails on isolated vertices so scans can reject them once up front.
    pub fn require_no_isolated(&self) -> Result<()> {
        match self.h.left_degrees().iter().position(|&d| d == 0) {
            Some(w) => Err(Error::IsolatedVertex(w)),
            None => Ok(()),
        }
    }

    /// `s` must be a nonempty set of non-isolated vertices without repeats.
    pub fn eval(&self, s: &[usize]) -> Deviation {
        let n = self.h.n_right();
        match self.degree {
            Some(d) if d > 0 => {
                let mut c = vec![0i64; n];
                for &w in s {
                    for &x in &self.adj[w] {
                        c[x] += 1;
                    }
                }
                // π(x) − 1/n = (n c_x − sD) / (n s D)
                let sd = (s.len() * d) as i64;
                let (mut abs, mut sq) = (0i128, 0i128);
                for &cx in &c {
                    let diff = (n as i64 * cx - sd) as i128;
                    abs += diff.abs();
                    sq += diff * diff;
                }
                let nsd = n as f64 * sd as f64;
                Deviation { l1: abs as f64 / nsd, l2_scaled: sq as f64 / (nsd * sd as f64) }
            }
            _ => {
                let mut p = vec![0.0; n];
                for &w in s {
                    let share = 1.0 / (self.adj[w].len() as f64 * s.len() as f64);
                    for &x in &self.adj[w] {
                        p[x] += share;
                    }
                }
                let u = 1.0 / n as f64;
                Deviation {
                    l1: p.iter().map(|v| (v - u).abs()).sum(),
                    l2_scaled: n as f64 * p.iter().map(|v| (v - u) * (v - u)).sum::<f64>(),
                }
            }
        }
    }
}

pub fn deviation(h: &BipartiteGraph, s: &[usize]) -> Result<Deviation> {
    let s = normalize_set(h.n_left(), s)?;
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    if let Some(&w) = s.iter().find(|&&w| h.left_degrees()[w] == 0) {
        return Err(Error::IsolatedVertex(w));
    }
    Ok(DeviationKernel::new(h).eval(&s))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub mode: ScanMode,
    pub budget: u128,
    /// Subsets always examined in sampled mode (ignored when exhaustive).
    pub extra: Vec<Vec<usize>>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { mode: ScanMode::Exhaustive, budget: DEFAULT_SUBSET_BUDGET, extra: Vec::new() }
    }
}

impl CheckOptions {
    pub fn sampled(trials: usize, seed: u64) -> Self {
        Self { mode: ScanMode::Sampled { trials, seed }, ..Self::default() }
    }
}

/// Worst deviations over all subsets of density at least `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub delta: f64,
    pub min_size: usize,
    pub mode: ScanMode,
    pub checked: u64,
    pub worst_l1: Worst,
    pub worst_l2: Worst,
    pub l1_worst_at_boundary: bool,
    pub l2_worst_at_boundary: bool,
    /// `max (l1² − l2_scaled)`; nonpositive by Cauchy–Schwarz.
    pub cauchy_schwarz_gap: f64,
}

pub fn measure_subsets(h: &BipartiteGraph, delta: f64, opts: &CheckOptions) -> Result<SubsetReport> {
    let kernel = DeviationKernel::new(h);
    kernel.require_no_isolated()?;
    let n = h.n_left();
    if n == 0 || h.n_right() == 0 {
        return Err(Error::EmptySet);
    }
    let k_min = min_size(delta, n)?;
    let extra = opts.extra.iter().map(|s| normalize_set(n, s)).collect::<Result<Vec<_>>>()?;
    if extra.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptySet);
    }
    let r = scan(n, k_min, &opts.mode, opts.budget, &extra, |s| {
        let d = kernel.eval(s);
        vec![d.l1, d.l2_scaled, d.l1 * d.l1 - d.l2_scaled]
    })?;
    let mut worst = r.worst.into_iter();
    let (l1, l2, cs) = (worst.next().unwrap(), worst.next().unwrap(), worst.next().unwrap());
    Ok(SubsetReport {
        delta,
        min_size: k_min,
        mode: opts.mode.clone(),
        checked: r.checked as u64,
        l1_worst_at_boundary: l1.subset.len() == k_min,
        l2_worst_at_boundary: l2.subset.len() == k_min,
        worst_l1: l1,
        worst_l2: l2,
        cauchy_schwarz_gap: cs.value,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateMode {
    Exhaustive,
    /// One-sided: sampling can refute a claim but never proves it.
    Sampled { trials: usize, seed: u64 },
    Spectral { lambda: f64 },
    Product { lambda: f64, extractor_eps: f64 },
}

impl CertificateMode {
    fn from_scan(mode: &ScanMode) -> Self {
        match mode {
            ScanMode::Exhaustive => Self::Exhaustive,
            ScanMode::Sampled { trials, seed } => Self::Sampled { trials: *trials, seed: *seed },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FortifierCertificate {
    pub delta: f64,
    pub eps1: f64,
    /// Coefficient in the bound `‖π − u‖² ≤ eps2 / |X|`.
    pub eps2: f64,
    pub mode: CertificateMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved: Option<Deviation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsets_checked: Option<u64>,
    pub version: String,
}

impl FortifierCertificate {
    pub fn extractor(&self) -> ExtractorCertificate {
        ExtractorCertificate {
            delta: self.delta,
            eps: self.eps1,
            mode: self.mode.clone(),
            achieved: self.achieved.map(|d| d.l1),
            witness: self.witness.clone(),
            subsets_checked: self.subsets_checked,
            version: self.version.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractorCertificate {
    pub delta: f64,
    pub eps: f64,
    pub mode: CertificateMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsets_checked: Option<u64>,
    pub version: String,
}

/// A subset refuting a claimed parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub subset: Vec<usize>,
    pub l1: f64,
    pub l2_scaled: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FortifierCheck {
    Certified(FortifierCertificate),
    Violated(Counterexample),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorCheck {
    Certified(ExtractorCertificate),
    Violated(Counterexample),
}

fn counterexample(h: &BipartiteGraph, subset: &[usize]) -> Counterexample {
    let d = DeviationKernel::new(h).eval(subset);
    Counterexample { subset: subset.to_vec(), l1: d.l1, l2_scaled: d.l2_scaled }
}

pub fn check_fortifier(h: &BipartiteGraph, delta: f64, eps1: f64, eps2: f64, opts: &CheckOptions) -> Result<FortifierCheck> {
    let r = measure_subsets(h, delta, opts)?;
    if r.worst_l1.value > eps1 + CHECK_TOLERANCE {
        return Ok(FortifierCheck::Violated(counterexample(h, &r.worst_l1.subset)));
    }
    if r.worst_l2.value > eps2 + CHECK_TOLERANCE {
        return Ok(FortifierCheck::Violated(counterexample(h, &r.worst_l2.subset)));
    }
    Ok(FortifierCheck::Certified(FortifierCertificate {
        delta,
        eps1,
        eps2,
        mode: CertificateMode::from_scan(&opts.mode),
        achieved: Some(Deviation { l1: r.worst_l1.value, l2_scaled: r.worst_l2.value }),
        witness: Some(r.worst_l2.subset),
        subsets_checked: Some(r.checked),
        version: VERSION.into(),
    }))
}

pub fn check_extractor(h: &BipartiteGraph, delta: f64, eps: f64, opts: &CheckOptions) -> Result<ExtractorCheck> {
    let r = measure_subsets(h, delta, opts)?;
    if r.worst_l1.value > eps + CHECK_TOLERANCE {
        return Ok(ExtractorCheck::Violated(counterexample(h, &r.worst_l1.subset)));
    }
    Ok(ExtractorCheck::Certified(ExtractorCertificate {
        delta,
        eps,
        mode: CertificateMode::from_scan(&opts.mode),
        achieved: Some(r.worst_l1.value),
        witness: Some(r.worst_l1.subset),
        subsets_checked: Some(r.checked),
        version: VERSION.into(),
    }))
}

/// A `λ`-expander is a `(δ, √(λ²/δ), λ²/δ)`-fortifier.
pub fn fortifier_from_expander(cert: &ExpanderCertificate, delta: f64) -> Result<FortifierCertificate> {
    min_size(delta, 1)?;
    let eps2 = cert.lambda * cert.lambda / delta;
    Ok(FortifierCertificate {
        delta,
        eps1: eps2.sqrt(),
        eps2,
        mode: CertificateMode::Spectral { lambda: cert.lambda },
        achieved: None,
        witness: None,
        subsets_checked: None,
        version: VERSION.into(),
    })
}

/// The product of a bi-regular `(δ, ε)`-extractor `h1` on `(V, W)` with a
/// bi-regular `λ`-expander `h2` on `(W, X)` is a `(δ, ε, λ²ε/δ)`-fortifier.
pub fn product_fortifier(
    h1: &BipartiteGraph,
    ext: &ExtractorCertificate,
    h2: &BipartiteGraph,
    exp: &ExpanderCertificate,
) -> Result<(BipartiteGraph, FortifierCertificate)> {
    if h1.n_right() != h2.n_left() {
        return Err(Error::DimensionMismatch(format!("extractor right side {} vs expander left side {}", h1.n_right(), h2.n_left())));
    }
    if (exp.n_left, exp.n_right) != (h2.n_left(), h2.n_right()) {
        return Err(Error::DimensionMismatch("expander certificate does not describe h2".into()));
    }
    if !h1.is_biregular() || !h2.is_biregular() {
        return Err(Error::NotBiregular);
    }
    let product = h1.product(h2)?;
    let cert = FortifierCertificate {
        delta: ext.delta,
        eps1: ext.eps,
        eps2: exp.lambda * exp.lambda * ext.eps / ext.delta,
        mode: CertificateMode::Product { lambda: exp.lambda, extractor_eps: ext.eps },
        achieved: None,
        witness: None,
        subsets_checked: None,
        version: VERSION.into(),
    };
    Ok((product, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{random_biregular, spectral_lambda};
    use crate::subsets::count_at_least;

    /// Direct summation oracle over edge instances.
    fn oracle_distribution(h: &BipartiteGraph, s: &[usize]) -> Vec<f64> {
        let mut p = vec![0.0; h.n_right()];
        for &w in s {
            let nbrs: Vec<usize> = h.edges().iter().filter(|e| e.0 == w).map(|e| e.1).collect();
            for x in &nbrs {
                p[*x] += 1.0 / nbrs.len() as f64 / s.len() as f64;
            }
        }
        p
    }

    fn oracle_worst(h: &BipartiteGraph, k_min: usize) -> (f64, f64) {
        let n = h.n_left();
        let (mut l1, mut l2) = (0.0f64, 0.0f64);
        for mask in 1u32..1 << n {
            let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if s.len() < k_min {
                continue;
            }
            let p = oracle_distribution(h, &s);
            let u = 1.0 / h.n_right() as f64;
            l1 = l1.max(p.iter().map(|v| (v - u).abs()).sum());
            l2 = l2.max(h.n_right() as f64 * p.iter().map(|v| (v - u).powi(2)).sum::<f64>());
        }
        (l1, l2)
    }

    #[test]
    fn induced_distribution_examples() {
        let h = random_biregular(6, 3, 2, 1).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let p = induced_distribution(&h, &all).unwrap();
        assert!(p.weights.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-12));

        let star = BipartiteGraph::new(2, 3, vec![(0, 2), (0, 2), (1, 0)]).unwrap();
        assert_eq!(induced_distribution(&star, &[0]).unwrap().weights, vec![0.0, 0.0, 1.0]);

        let c8 = BipartiteGraph::cycle(4);
        let p = induced_distribution(&c8, &[0, 1]).unwrap();
        let oracle = oracle_distribution(&c8, &[0, 1]);
        for (a, b) in p.weights.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(p.weights, vec![0.25, 0.5, 0.25, 0.0]);

        assert_eq!(induced_distribution(&c8, &[]).unwrap_err(), Error::EmptySet);
        let isolated = BipartiteGraph::new(2, 1, vec![(0, 0)]).unwrap();
        assert_eq!(induced_distribution(&isolated, &[1]).unwrap_err(), Error::IsolatedVertex(1));
    }

    #[test]
    fn kernel_matches_distribution_on_irregular_graphs() {
        let h = BipartiteGraph::new(3, 3, vec![(0, 0), (0, 1), (1, 1), (2, 0), (2, 1), (2, 2), (2, 2)]).unwrap();
        for s in [vec![0], vec![0, 2], vec![0, 1, 2]] {
            let d = deviation(&h, &s).unwrap();
            let p = induced_distribution(&h, &s).unwrap();
            assert!((d.l1 - p.l1_from_uniform()).abs() < 1e-12);
            assert!((d.l2_scaled - 3.0 * p.l2_sq_from_uniform()).abs() < 1e-12);
        }
    }

    #[test]
    fn complete_graph_is_perfect() {
        let k = BipartiteGraph::complete(6, 6);
        match check_fortifier(&k, 0.3, 0.0, 0.0, &CheckOptions::default()).unwrap() {
            FortifierCheck::Certified(c) => {
                assert_eq!(c.achieved, Some(Deviation { l1: 0.0, l2_scaled: 0.0 }));
                assert_eq!(c.subsets_checked, Some(count_at_least(6, 2) as u64));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(check_extractor(&k, 0.5, 0.0, &CheckOptions::default()).unwrap(), ExtractorCheck::Certified(_)));
    }

    #[test]
    fn matching_singletons_violate() {
        let n = 5;
        let m = BipartiteGraph::matching(n);
        match check_fortifier(&m, 1.0 / n as f64, 1.0, 1.0, &CheckOptions::default()).unwrap() {
            FortifierCheck::Violated(c) => {
                assert_eq!(c.subset.len(), 1);
                assert!((c.l1 - 2.0 * (1.0 - 1.0 / n as f64)).abs() < 1e-12);
                assert!((c.l2_scaled - (n as f64 - 1.0)).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(check_extractor(&m, 0.5, 0.1, &CheckOptions::default()).unwrap(), ExtractorCheck::Violated(_)));
    }

    #[test]
    fn exhaustive_matches_oracle_on_16x16() {
        let h = random_biregular(16, 16, 4, 3).unwrap();
        let r = measure_subsets(&h, 0.25, &CheckOptions::default()).unwrap();
        let (l1, l2) = oracle_worst(&h, 4);
        assert!((r.worst_l1.value - l1).abs() < 1e-12);
        assert!((r.worst_l2.value - l2).abs() < 1e-12);
        assert!(r.cauchy_schwarz_gap <= 1e-12);
    }

    #[test]
    fn sampled_mode_never_exceeds_exhaustive() {
        let h = random_biregular(10, 10, 3, 8).unwrap();
        let exact = measure_subsets(&h, 0.3, &CheckOptions::default()).unwrap();
        let sampled = measure_subsets(&h, 0.3, &CheckOptions::sampled(200, 4)).unwrap();
        assert!(sampled.worst_l1.value <= exact.worst_l1.value);
        assert!(sampled.worst_l2.value <= exact.worst_l2.value);
        assert_eq!(sampled.checked, 200);
    }

    #[test]
    fn spectral_fortifier_formula() {
        let base = spectral_lambda(&BipartiteGraph::complete(3, 3)).unwrap();
        let mut cert = base.clone();
        cert.lambda = 0.0;
        let f = fortifier_from_expander(&cert, 0.5).unwrap();
        assert_eq!((f.eps1, f.eps2), (0.0, 0.0));
        cert.lambda = 0.1;
        let f = fortifier_from_expander(&cert, 0.04).unwrap();
        assert!((f.eps1 - 0.5).abs() < 1e-12 && (f.eps2 - 0.25).abs() < 1e-12);
        cert.lambda = 1.0;
        let f = fortifier_from_expander(&cert, 1.0).unwrap();
        assert_eq!((f.eps1, f.eps2), (1.0, 1.0));
    }

    #[test]
    fn spectral_certificate_is_sound_exhaustively() {
        for seed in 0..10 {
            let h = random_biregular(10, 10, 3, seed).unwrap();
            let cert = spectral_lambda(&h).unwrap();
            for delta in [0.1, 0.25, 0.5] {
                let f = fortifier_from_expander(&cert, delta).unwrap();
                let r = measure_subsets(&h, delta, &CheckOptions::default()).unwrap();
                assert!(r.worst_l2.value <= f.eps2 + 1e-9);
                assert!(r.worst_l1.value <= f.eps1 + 1e-9);
            }
        }
    }

    #[test]
    fn product_certificates() {
        let h1 = random_biregular(8, 8, 2, 5).unwrap();
        let ext = match check_extractor(&h1, 0.5, 2.0, &CheckOptions::default()).unwrap() {
            ExtractorCheck::Certified(mut c) => {
                c.eps = c.achieved.unwrap();
                c
            }
            other => panic!("{other:?}"),
        };
        let h2 = random_biregular(8, 8, 3, 6).unwrap();
        let exp = spectral_lambda(&h2).unwrap();
        let (p, cert) = product_fortifier(&h1, &ext, &h2, &exp).unwrap();
        assert_eq!(p.left_degree(), Some(6));
        let check = check_fortifier(&p, cert.delta, cert.eps1, cert.eps2, &CheckOptions::default()).unwrap();
        assert!(matches!(check, FortifierCheck::Certified(_)), "{check:?}");

        let k = BipartiteGraph::complete(8, 8);
        let (_, c0) = product_fortifier(&h1, &ext, &k, &spectral_lambda(&k).unwrap()).unwrap();
        assert!(c0.eps2.abs() < 1e-20);
        let id = BipartiteGraph::matching(8);
        let (_, c1) = product_fortifier(&h1, &ext, &id, &spectral_lambda(&id).unwrap()).unwrap();
        assert!((c1.eps2 - ext.eps / ext.delta).abs() < 1e-12);

        assert!(matches!(
            product_fortifier(&h1, &ext, &BipartiteGraph::complete(4, 4), &spectral_lambda(&BipartiteGraph::complete(4, 4)).unwrap()),
            Err(Error::DimensionMismatch(_))
        ));
        let lopsided = BipartiteGraph::new(8, 8, (0..8).flat_map(|v| [(v, 0), (v, v)]).collect()).unwrap();
        assert_eq!(product_fortifier(&lopsided, &ext, &h2, &exp).unwrap_err(), Error::NotBiregular);
    }

    #[test]
    fn certificates_roundtrip_json() {
        let k = BipartiteGraph::complete(4, 4);
        let FortifierCheck::Certified(c) = check_fortifier(&k, 0.5, 0.1, 0.1, &CheckOptions::default()).unwrap() else {
            panic!()
        };
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"version\""));
        assert_eq!(serde_json::from_str::<FortifierCertificate>(&json).unwrap(), c);
    }
}
