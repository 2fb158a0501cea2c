use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algos::{multiply, Algorithm, RunOptions};
use crate::backend::{BackendConfig, HeBackend, OpStats, SimdEmulator};
use crate::error::{Error, Result};
use crate::matrix::{naive_matmul_in, Matrix};

use super::cost::{classify_shape, estimate_cost, CostEstimate, CostModel, ShapeCategory};

/// Draws per case before the sampler gives up on a dimension range.
const MAX_DRAWS_PER_CASE: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub cases: usize,
    pub dim_lo: usize,
    pub dim_hi: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub slot_count: usize,
    pub plaintext_modulus: Option<i64>,
    /// Operand entries are drawn uniformly from this closed range.
    pub value_range: (i64, i64),
    pub cost_model: CostModel,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            cases: 200,
            dim_lo: 1,
            dim_hi: 16,
            seed: 0,
            algorithms: Algorithm::ALL.to_vec(),
            slot_count: crate::backend::DEFAULT_SLOTS,
            plaintext_modulus: None,
            value_range: (-100, 100),
            cost_model: CostModel::default(),
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim_lo == 0 || self.dim_lo > self.dim_hi {
            return Err(Error::InvalidConfig(format!("bad dimension range [{}, {}]", self.dim_lo, self.dim_hi)));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms selected".into()));
        }
        if self.value_range.0 > self.value_range.1 {
            return Err(Error::InvalidConfig("empty value range".into()));
        }
        self.backend_config().validate()?;
        self.cost_model.validate()
    }

    pub fn backend_config(&self) -> BackendConfig {
        BackendConfig { slot_count: self.slot_count, plaintext_modulus: self.plaintext_modulus }
    }

    fn fits(&self, m: usize, l: usize, n: usize) -> bool {
        self.algorithms.iter().all(|a| a.fits(m, l, n, self.slot_count))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoRun {
    pub algorithm: Algorithm,
    pub stats: OpStats,
    pub cost: CostEstimate,
    pub exact: bool,
    pub peak_ciphertexts: usize,
    /// Peak live ciphertexts times slot count: a memory proxy, not a measurement.
    pub memory_proxy_slots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub index: usize,
    pub dims: (usize, usize, usize),
    pub categories: Vec<ShapeCategory>,
    pub runs: Vec<AlgoRun>,
}

impl CaseReport {
    pub fn run(&self, algo: Algorithm) -> Option<&AlgoRun> {
        self.runs.iter().find(|r| r.algorithm == algo)
    }
}

/// Predicted cloud-cost ratio `baseline / candidate` over a group of cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub baseline: Algorithm,
    pub candidate: Algorithm,
    /// `"all"` or a shape-category label.
    pub group: String,
    pub cases: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cases: usize,
    pub resampled: usize,
    pub all_exact: bool,
    /// Share of cases where the enhanced algorithm used no more ciphertext
    /// multiplications than the basic one; `None` unless both ran.
    pub en_cc_le_hegmm: Option<f64>,
    pub ratios: Vec<RatioSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub config: CampaignConfig,
    pub cases: Vec<CaseReport>,
    pub summary: Summary,
}

struct Draw {
    index: usize,
    dims: (usize, usize, usize),
    seed: u64,
}

fn sample(cfg: &CampaignConfig) -> Result<(Vec<Draw>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut resampled = 0;
    let mut draws = Vec::with_capacity(cfg.cases);
    for index in 0..cfg.cases {
        let mut attempts = 0;
        let dims = loop {
            let d = (
                rng.gen_range(cfg.dim_lo..=cfg.dim_hi),
                rng.gen_range(cfg.dim_lo..=cfg.dim_hi),
                rng.gen_range(cfg.dim_lo..=cfg.dim_hi),
            );
            if cfg.fits(d.0, d.1, d.2) {
                break d;
            }
            resampled += 1;
            attempts += 1;
            if attempts >= MAX_DRAWS_PER_CASE {
                return Err(Error::InvalidConfig(format!(
                    "no shape in [{}, {}] fits {} slots for every selected algorithm",
                    cfg.dim_lo, cfg.dim_hi, cfg.slot_count
                )));
            }
        };
        draws.push(Draw { index, dims, seed: rng.gen() });
    }
    Ok((draws, resampled))
}

fn run_case<B: HeBackend>(cfg: &CampaignConfig, draw: &Draw, backend: &B) -> Result<CaseReport> {
    let (m, l, n) = draw.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(draw.seed);
    let (lo, hi) = cfg.value_range;
    let a = Matrix::random(m, l, lo, hi, &mut rng);
    let b = Matrix::random(l, n, lo, hi, &mut rng);
    let arith = backend.config().arithmetic()?;
    let expect = naive_matmul_in(&a, &b, arith)?;
    let mut runs = Vec::with_capacity(cfg.algorithms.len());
    for &algorithm in &cfg.algorithms {
        backend.reset_stats();
        let got = multiply(algorithm, &a, &b, &RunOptions::default(), backend)?;
        let stats = backend.stats();
        let peak = backend.peak_live_ciphertexts();
        runs.push(AlgoRun {
            algorithm,
            stats,
            cost: estimate_cost(&stats, &cfg.cost_model),
            exact: got == expect,
            peak_ciphertexts: peak,
            memory_proxy_slots: peak * cfg.slot_count,
        });
    }
    Ok(CaseReport { index: draw.index, dims: draw.dims, categories: classify_shape(m, l, n), runs })
}

/// Runs a campaign with one fresh backend per case from `factory`.
pub fn run_campaign<B, F>(cfg: &CampaignConfig, factory: F) -> Result<Campaign>
where
    B: HeBackend,
    F: Fn(&BackendConfig) -> Result<B> + Sync,
{
    cfg.validate()?;
    let (draws, resampled) = sample(cfg)?;
    let cases =
        draws.par_iter().map(|d| run_case(cfg, d, &factory(&cfg.backend_config())?)).collect::<Result<Vec<_>>>()?;
    let summary = summarize(cfg, &cases, resampled);
    Ok(Campaign { config: cfg.clone(), cases, summary })
}

/// [`run_campaign`] on the built-in emulator.
pub fn run_emulated_campaign(cfg: &CampaignConfig) -> Result<Campaign> {
    run_campaign(cfg, |c| SimdEmulator::new(*c))
}

fn stats_of(mut ratios: Vec<f64>) -> (f64, f64, f64) {
    if ratios.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    let mean = ratios.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 { ratios[n / 2] } else { (ratios[n / 2 - 1] + ratios[n / 2]) / 2.0 };
    (mean, median, ratios[n - 1])
}

pub fn summarize(cfg: &CampaignConfig, cases: &[CaseReport], resampled: usize) -> Summary {
    let has = |a| cfg.algorithms.contains(&a);
    let pairs = [
        (Algorithm::SquarePad, Algorithm::Hegmm),
        (Algorithm::SquarePad, Algorithm::HegmmEn),
        (Algorithm::Hegmm, Algorithm::HegmmEn),
    ];
    let mut ratios = Vec::new();
    for (baseline, candidate) in pairs.into_iter().filter(|&(x, y)| has(x) && has(y)) {
        let groups = std::iter::once(None).chain(ShapeCategory::ALL.into_iter().map(Some));
        for group in groups {
            let values: Vec<f64> = cases
                .iter()
                .filter(|c| group.is_none_or(|g| c.categories.contains(&g)))
                .filter_map(|c| {
                    let b = c.run(baseline)?.cost.cloud_ms;
                    let x = c.run(candidate)?.cost.cloud_ms;
                    (x > 0.0).then_some(b / x)
                })
                .collect();
            let count = values.len();
            let (mean, median, max) = stats_of(values);
            ratios.push(RatioSummary {
                baseline,
                candidate,
                group: group.map_or("all".to_string(), |g| g.label().to_string()),
                cases: count,
                mean,
                median,
                max,
            });
        }
    }
    let en_cc_le_hegmm = (has(Algorithm::Hegmm) && has(Algorithm::HegmmEn) && !cases.is_empty()).then(|| {
        let ok = cases
            .iter()
            .filter(|c| match (c.run(Algorithm::HegmmEn), c.run(Algorithm::Hegmm)) {
                (Some(e), Some(h)) => e.stats.cloud.mult_cc <= h.stats.cloud.mult_cc,
                _ => false,
            })
            .count();
        ok as f64 / cases.len() as f64
    });
    Summary {
        cases: cases.len(),
        resampled,
        all_exact: cases.iter().all(|c| c.runs.iter().all(|r| r.exact)),
        en_cc_le_hegmm,
        ratios,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(cases: usize, seed: u64) -> CampaignConfig {
        CampaignConfig { cases, seed, dim_hi: 8, ..CampaignConfig::default() }
    }

    #[test]
    fn deterministic() {
        let a = run_emulated_campaign(&small(40, 9)).unwrap();
        let b = run_emulated_campaign(&small(40, 9)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = run_emulated_campaign(&small(40, 10)).unwrap();
        assert_ne!(a.cases, c.cases);
    }

    #[test]
    fn exact_and_counts() {
        let c = run_emulated_campaign(&CampaignConfig { cases: 200, seed: 1, ..CampaignConfig::default() }).unwrap();
        assert!(c.summary.all_exact);
        assert_eq!(c.summary.en_cc_le_hegmm, Some(1.0));
        for case in &c.cases {
            let (m, l, n) = case.dims;
            assert_eq!(case.run(Algorithm::Hegmm).unwrap().stats.cloud.mult_cc, l as u64);
            assert_eq!(case.run(Algorithm::HegmmEn).unwrap().stats.cloud.mult_cc, m.min(l).min(n) as u64);
            assert_eq!(case.run(Algorithm::SquarePad).unwrap().stats.cloud.mult_cc, m.max(l).max(n) as u64);
            assert!(case
                .runs
                .iter()
                .all(|r| r.memory_proxy_slots == r.peak_ciphertexts * 4096 && r.peak_ciphertexts > 0));
        }
        assert_eq!(c.summary.ratios.len(), 3 * 6);
    }

    #[test]
    fn resamples_infeasible_shapes() {
        let cfg =
            CampaignConfig { cases: 30, dim_lo: 1, dim_hi: 16, seed: 3, slot_count: 64, ..CampaignConfig::default() };
        let c = run_emulated_campaign(&cfg).unwrap();
        assert_eq!(c.cases.len(), 30);
        assert!(c.summary.resampled > 0);
        assert!(c.cases.iter().all(|k| cfg.fits(k.dims.0, k.dims.1, k.dims.2)));
        assert!(c.summary.all_exact);
    }

    #[test]
    fn impossible_range_is_an_error() {
        let cfg = CampaignConfig { cases: 1, dim_lo: 80, dim_hi: 90, ..CampaignConfig::default() };
        assert!(matches!(run_emulated_campaign(&cfg), Err(Error::InvalidConfig(_))));
        let cfg = CampaignConfig { dim_lo: 5, dim_hi: 4, ..CampaignConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn median_of_even_count() {
        assert_eq!(stats_of(vec![4.0, 1.0, 3.0, 2.0]), (2.5, 2.5, 4.0));
        assert_eq!(stats_of(vec![]), (0.0, 0.0, 0.0));
    }
}
