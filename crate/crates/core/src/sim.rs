//! Seeded Monte Carlo engine: sample erasure matrices, run a strategy,
//! estimate helper-to-master costs and the per-type maximum-class moments
//! consumed by the analytic pyramid cost formula.
//!
//! Every trial draws from its own RNG stream derived from (master seed,
//! trial index), so results do not depend on execution order and are
//! reproducible across runs.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{MdsCode, PyramidCode, RepetitionCode};
use crate::erasures::{binomial, class_key, ClassKey, ClassTable, ErasureMatrix, ErasurePattern, PatternType};
use crate::error::{Error, Result};
use crate::field::{FieldMatrix, FieldSpec};
use crate::strategies::{
    plan_amc, plan_arc, plan_arc_greedy, plan_naive, plan_pyramid, AggregationPlan,
};

/// Row-weight distribution: exactly s erasures per row (the standard model)
/// or uniform over all rows of weight at most s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    ExactS,
    UpToS,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_e: usize,
    pub n_h: usize,
    pub s: usize,
    pub trials: u64,
    pub seed: u64,
    pub weight_mode: WeightMode,
}

impl SimConfig {
    pub fn new(n_e: usize, n_h: usize, s: usize, trials: u64, seed: u64) -> Result<Self> {
        if trials < 1 {
            return Err(Error::parameter("trials must be >= 1"));
        }
        if s < 1 || s >= n_h {
            return Err(Error::parameter(format!("need 1 <= s <= n_h - 1, got n_h={n_h}, s={s}")));
        }
        Ok(SimConfig { n_e, n_h, s, trials, seed, weight_mode: WeightMode::ExactS })
    }

    pub fn with_weight_mode(mut self, mode: WeightMode) -> Self {
        self.weight_mode = mode;
        self
    }
}

/// Monte Carlo estimate with its standard error (sample stddev / sqrt(trials)).
#[derive(Clone, Debug, Serialize)]
pub struct McResult {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
    /// Per-trial |D_ag| histogram (symbol counts, not normalized costs).
    pub histogram: Option<BTreeMap<u64, u64>>,
}

/// A strategy bound to its client code, ready to plan sampled matrices.
#[derive(Clone, Debug)]
pub enum Strategy {
    Naive { code: MdsCode },
    Amc { code: MdsCode, m: usize },
    Pyramid { code: PyramidCode },
    Arc { code: RepetitionCode },
    ArcGreedy { code: RepetitionCode },
}

impl Strategy {
    pub fn naive(n_h: usize, s: usize) -> Result<Self> {
        if s >= n_h {
            return Err(Error::parameter("need s <= n_h - 1"));
        }
        Ok(Strategy::Naive { code: MdsCode::build(&FieldSpec::gf256(), n_h - s, s)? })
    }

    pub fn amc(n_h: usize, s: usize, m: usize) -> Result<Self> {
        if s >= n_h {
            return Err(Error::parameter("need s <= n_h - 1"));
        }
        Ok(Strategy::Amc { code: MdsCode::build(&FieldSpec::gf256(), n_h - s, s)?, m })
    }

    pub fn pyramid(field: &FieldSpec, n_h: usize, s: usize, t: usize) -> Result<Self> {
        Ok(Strategy::Pyramid { code: PyramidCode::build(field, n_h, s, t)? })
    }

    pub fn arc(n_h: usize, s: usize) -> Result<Self> {
        Ok(Strategy::Arc { code: RepetitionCode::build(n_h, s)? })
    }

    pub fn arc_greedy(n_h: usize, s: usize) -> Result<Self> {
        Ok(Strategy::ArcGreedy { code: RepetitionCode::build(n_h, s)? })
    }

    /// Message blocks per gradient; the cost normalizer.
    pub fn k(&self) -> usize {
        match self {
            Strategy::Naive { code } | Strategy::Amc { code, .. } => code.k,
            Strategy::Pyramid { code } => code.k_t,
            Strategy::Arc { code } | Strategy::ArcGreedy { code } => code.k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Naive { .. } => "naive",
            Strategy::Amc { .. } => "amc",
            Strategy::Pyramid { .. } => "pyramid",
            Strategy::Arc { .. } => "arc",
            Strategy::ArcGreedy { .. } => "arc-greedy",
        }
    }

    /// The client code's field and generator, for recovery checks.
    pub fn client_code(&self) -> (&FieldSpec, &FieldMatrix) {
        match self {
            Strategy::Naive { code } | Strategy::Amc { code, .. } => (code.field(), &code.generator),
            Strategy::Pyramid { code } => (code.field(), &code.generator),
            Strategy::Arc { code } | Strategy::ArcGreedy { code } => (code.field(), &code.generator),
        }
    }

    pub fn plan(&self, matrix: &ErasureMatrix) -> Result<AggregationPlan> {
        match self {
            Strategy::Naive { code } => plan_naive(matrix, code.k),
            Strategy::Amc { code, m } => plan_amc(matrix, code.k, *m),
            Strategy::Pyramid { code } => plan_pyramid(code, matrix),
            Strategy::Arc { code } => plan_arc(code, matrix),
            Strategy::ArcGreedy { code } => plan_arc_greedy(code, matrix),
        }
    }
}

/// RNG stream for one trial, derived from the master seed.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One uniformly random erasure pattern.
pub fn sample_pattern(
    n_h: usize,
    s: usize,
    mode: WeightMode,
    rng: &mut impl Rng,
) -> Result<ErasurePattern> {
    let weight = match mode {
        WeightMode::ExactS => s,
        WeightMode::UpToS => {
            // weight w with probability proportional to C(n_h, w)
            let weights: Vec<u64> = (0..=s).map(|w| binomial(n_h as u64, w as u64)).collect();
            let total: u64 = weights.iter().sum();
            let mut x = rng.random_range(0..total);
            let mut w = 0usize;
            for (i, &c) in weights.iter().enumerate() {
                if x < c {
                    w = i;
                    break;
                }
                x -= c;
            }
            w
        }
    };
    let cols = rand::seq::index::sample(rng, n_h, weight).into_vec();
    ErasurePattern::from_cols(n_h, &cols)
}

/// One erasure matrix: rows i.i.d. uniform under the weight mode.
pub fn sample_matrix(config: &SimConfig, rng: &mut impl Rng) -> Result<ErasureMatrix> {
    let rows: Result<Vec<ErasurePattern>> =
        (0..config.n_e).map(|_| sample_pattern(config.n_h, config.s, config.weight_mode, rng)).collect();
    ErasureMatrix::new(config.n_h, rows?)
}

fn finish(sum: u128, sumsq: u128, trials: u64, seed: u64, k: usize, histogram: Option<BTreeMap<u64, u64>>) -> McResult {
    let n = trials as f64;
    let k = k as f64;
    let mean = sum as f64 / (k * n);
    let mean_sq = sumsq as f64 / (k * k * n);
    let var = if trials > 1 { ((mean_sq - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
    McResult { mean, stderr: (var / n).sqrt(), trials, seed, histogram }
}

/// Estimates E[cost] of a strategy by planning sampled matrices.
pub fn estimate_chm(config: &SimConfig, strategy: &Strategy) -> Result<McResult> {
    let mut sum: u128 = 0;
    let mut sumsq: u128 = 0;
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    for trial in 0..config.trials {
        let mut rng = trial_rng(config.seed, trial);
        let matrix = sample_matrix(config, &mut rng)?;
        let plan = strategy
            .plan(&matrix)
            .map_err(|e| Error::internal(format!("trial {trial}: {e}")))?;
        let symbols = plan.total_symbols() as u128;
        sum += symbols;
        sumsq += symbols * symbols;
        *histogram.entry(symbols as u64).or_insert(0) += 1;
    }
    Ok(finish(sum, sumsq, config.trials, config.seed, strategy.k(), Some(histogram)))
}

/// Per-type estimates of E[M] and Pr[M >= 1], where M is the largest number
/// of rows falling into one equivalence class of the type.
#[derive(Clone, Debug)]
pub struct TypeMoments {
    pub ty: PatternType,
    pub e_max: f64,
    pub e_max_stderr: f64,
    pub p_hit: f64,
    pub p_hit_stderr: f64,
}

/// Maximum class occupancy per observed type for one matrix.
pub fn type_maxima(code: &PyramidCode, matrix: &ErasureMatrix) -> BTreeMap<PatternType, u64> {
    let mut class_counts: HashMap<ClassKey, u64> = HashMap::new();
    for row in matrix.rows() {
        *class_counts.entry(class_key(code, row)).or_insert(0) += 1;
    }
    let mut maxima: BTreeMap<PatternType, u64> = BTreeMap::new();
    for (key, count) in class_counts {
        let entry = maxima.entry(key.ty).or_insert(0);
        *entry = (*entry).max(count);
    }
    maxima
}

pub fn estimate_type_moments(
    config: &SimConfig,
    code: &PyramidCode,
    table: &ClassTable,
) -> Result<Vec<TypeMoments>> {
    if config.weight_mode != WeightMode::ExactS {
        return Err(Error::parameter("type moments are defined for the exact-s model only"));
    }
    let index: HashMap<&PatternType, usize> =
        table.types.iter().enumerate().map(|(i, tc)| (&tc.ty, i)).collect();
    let mut sum = vec![0u64; table.types.len()];
    let mut sumsq = vec![0u128; table.types.len()];
    let mut hits = vec![0u64; table.types.len()];
    for trial in 0..config.trials {
        let mut rng = trial_rng(config.seed, trial);
        let matrix = sample_matrix(config, &mut rng)?;
        for (ty, m) in type_maxima(code, &matrix) {
            let i = *index.get(&ty).expect("table covers all types");
            sum[i] += m;
            sumsq[i] += (m as u128) * (m as u128);
            hits[i] += 1;
        }
    }
    let n = config.trials as f64;
    Ok(table
        .types
        .iter()
        .enumerate()
        .map(|(i, tc)| {
            let e_max = sum[i] as f64 / n;
            let var_m = if config.trials > 1 {
                ((sumsq[i] as f64 / n - e_max * e_max) * n / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            let p_hit = hits[i] as f64 / n;
            let var_p =
                if config.trials > 1 { (p_hit * (1.0 - p_hit) * n / (n - 1.0)).max(0.0) } else { 0.0 };
            TypeMoments {
                ty: tc.ty.clone(),
                e_max,
                e_max_stderr: (var_m / n).sqrt(),
                p_hit,
                p_hit_stderr: (var_p / n).sqrt(),
            }
        })
        .collect())
}

/// Monte Carlo estimates of the analytic pyramid cost in both bookkeeping
/// variants, evaluated per trial from the same sampled maxima (so the
/// standard errors account for cross-type correlation).
#[derive(Clone, Debug)]
pub struct PyramidFormulaEstimate {
    pub as_printed: McResult,
    pub operational: McResult,
}

/// Per-matrix aggregated-set sizes under the two bookkeeping variants.
///
/// Overwhelmed types charge `sum_{i unaffected} k_t(i) * M + sum_{i
/// overwhelmed} k_t(i)` in both variants. Types with no overwhelmed local
/// charge `k_t * M` as printed, but only `k_t` operationally (one aggregated
/// information set per class, which is what the strategy transmits).
pub fn formula_symbol_counts(
    code: &PyramidCode,
    maxima: &BTreeMap<PatternType, u64>,
    n_e: usize,
) -> (u64, u64) {
    let k_t = code.k_t as u64;
    let mut printed = 0u64;
    let mut operational = 0u64;
    let mut total_m = 0u64;
    for (ty, &m) in maxima {
        total_m += m;
        if ty.u.iter().any(|&b| b) {
            let unaffected: u64 = (0..code.t)
                .filter(|&i| !ty.u[i])
                .map(|i| code.local_dims[i] as u64)
                .sum();
            let overwhelmed: u64 = (0..code.t)
                .filter(|&i| ty.u[i])
                .map(|i| code.local_dims[i] as u64)
                .sum();
            let term = unaffected * m + overwhelmed;
            printed += term;
            operational += term;
        } else {
            printed += k_t * m;
            operational += k_t;
        }
    }
    let leftover = (n_e as u64 - total_m) * k_t;
    (printed + leftover, operational + leftover)
}

pub fn estimate_pyramid_formula(
    config: &SimConfig,
    code: &PyramidCode,
) -> Result<PyramidFormulaEstimate> {
    if config.weight_mode != WeightMode::ExactS {
        return Err(Error::parameter("the pyramid formula assumes the exact-s model"));
    }
    let mut sums = [0u128; 2];
    let mut sumsqs = [0u128; 2];
    for trial in 0..config.trials {
        let mut rng = trial_rng(config.seed, trial);
        let matrix = sample_matrix(config, &mut rng)?;
        let maxima = type_maxima(code, &matrix);
        let (printed, operational) = formula_symbol_counts(code, &maxima, config.n_e);
        for (i, v) in [printed, operational].into_iter().enumerate() {
            sums[i] += v as u128;
            sumsqs[i] += (v as u128) * (v as u128);
        }
    }
    Ok(PyramidFormulaEstimate {
        as_printed: finish(sums[0], sumsqs[0], config.trials, config.seed, code.k_t, None),
        operational: finish(sums[1], sumsqs[1], config.trials, config.seed, code.k_t, None),
    })
}
