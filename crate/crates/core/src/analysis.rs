//! Closed-form and semi-analytic communication costs.
//!
//! Edge-side costs come straight from the code rates. Helper-side costs:
//! the MDS scheme has an exact expression through the bunched balls-and-bins
//! expectation, and the pyramid scheme's expected aggregated-set size is a
//! linear functional of the per-type maximum-class moments. The printed
//! bookkeeping and the strategy's operational bookkeeping disagree for types
//! with no overwhelmed local, so both variants are exposed side by side.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

use crate::codes::PyramidCode;
use crate::erasures::{binomial, ClassTable, Combinations, ErasureMatrix, ErasurePattern, PatternType};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::occupancy::{phi_exact, rational_to_f64, rho_exact, OccupancyParams};
use crate::sim::{estimate_chm, estimate_pyramid_formula, SimConfig, Strategy, TypeMoments};

/// System size: edges, helpers, stragglers per edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemParams {
    pub n_e: usize,
    pub n_h: usize,
    pub s: usize,
}

impl SystemParams {
    pub fn new(n_e: usize, n_h: usize, s: usize) -> Result<Self> {
        if n_e < 1 {
            return Err(Error::parameter("need n_e >= 1"));
        }
        if s < 1 || s >= n_h {
            return Err(Error::parameter(format!("need 1 <= s <= n_h - 1, got n_h={n_h}, s={s}")));
        }
        Ok(SystemParams { n_e, n_h, s })
    }
}

/// Scheme selector for cost formulas and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Naive,
    Amc { m: usize },
    Pyramid { t: usize },
    Arc,
    ArcGreedy,
}

/// Which bookkeeping the pyramid cost formula uses for types with no
/// overwhelmed local: the printed form charges every matched row, the
/// operational form charges one information set per class, matching what the
/// strategy actually transmits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormulaVariant {
    AsPrinted,
    Operational,
}

impl FormulaVariant {
    pub fn method_tag(&self) -> &'static str {
        match self {
            FormulaVariant::AsPrinted => "formula-as-printed",
            FormulaVariant::Operational => "formula-operational",
        }
    }
}

/// Edge-to-helper cost: n_h / k for the scheme's client code.
pub fn ceh(params: &SystemParams, scheme: &Scheme) -> Result<Ratio<u64>> {
    let n_h = params.n_h as u64;
    let s = params.s as u64;
    match scheme {
        Scheme::Naive | Scheme::Amc { .. } => Ok(Ratio::new(n_h, n_h - s)),
        Scheme::Pyramid { t } => {
            if *t == 1 {
                // degenerate case: the pyramid scheme with t = 1 is the MDS scheme
                return Ok(Ratio::new(n_h, n_h - s));
            }
            let t_max = PyramidCode::max_t(params.n_h, params.s);
            if *t < 2 || *t > t_max {
                return Err(Error::parameter(format!(
                    "pyramid parameter t={t} outside [2, {t_max}] for (n_h={}, s={})",
                    params.n_h, params.s
                )));
            }
            Ok(Ratio::new(n_h, n_h - s - *t as u64 + 1))
        }
        Scheme::Arc | Scheme::ArcGreedy => Ok(Ratio::from_integer(s + 1)),
    }
}

/// Exact helper-to-master cost of the MDS scheme:
/// n_e + 1 - rho(C(n_h,s), n_e, C(n_h,s), 1).
pub fn chm_amc_exact(params: &SystemParams, budget: u64) -> Result<BigRational> {
    let bins = binomial(params.n_h as u64, params.s as u64);
    let p = OccupancyParams::new(bins, params.n_e as u64, bins, 1)?;
    let rho = rho_exact(&p, budget)?;
    Ok(BigRational::from(BigInt::from(params.n_e as u64 + 1)) - rho)
}

/// The coarse balls-and-bins upper bound n_e - n_e/(n_h - s) + 1, reported
/// alongside the exact value. Not asserted anywhere: tiny parameter sets
/// exceed it.
pub fn chm_amc_bound(params: &SystemParams) -> BigRational {
    let ne = BigRational::from(BigInt::from(params.n_e as u64));
    let denom = BigRational::from(BigInt::from((params.n_h - params.s) as u64));
    &ne - &ne / denom + BigRational::one()
}

/// Exact per-type moments (E[M], Pr[M >= 1]) through the bunched occupancy
/// identification: n = C(n_h,s) bins, n_e balls, mu artificial bins of beta
/// real bins for each type.
pub fn pyramid_type_moments_exact(
    table: &ClassTable,
    n_e: usize,
    budget: u64,
) -> Result<Vec<(PatternType, BigRational, BigRational)>> {
    let bins = table.total;
    let mut out = Vec::with_capacity(table.types.len());
    for tc in &table.types {
        if tc.size == 0 {
            out.push((tc.ty.clone(), BigRational::zero(), BigRational::zero()));
            continue;
        }
        let beta = tc.beta.expect("nonempty type has a bunching factor");
        let p = OccupancyParams::new(bins, n_e as u64, tc.mu, beta)?;
        out.push((tc.ty.clone(), rho_exact(&p, budget)?, phi_exact(&p, budget)?));
    }
    Ok(out)
}

fn local_dim_split(code: &PyramidCode, ty: &PatternType) -> (u64, u64) {
    let unaffected: u64 =
        (0..code.t).filter(|&i| !ty.u[i]).map(|i| code.local_dims[i] as u64).sum();
    let overwhelmed: u64 =
        (0..code.t).filter(|&i| ty.u[i]).map(|i| code.local_dims[i] as u64).sum();
    (unaffected, overwhelmed)
}

/// E[|D_ag|] / k_t from exact per-type moments.
pub fn chm_pyramid_formula_exact(
    code: &PyramidCode,
    table: &ClassTable,
    n_e: usize,
    variant: FormulaVariant,
    budget: u64,
) -> Result<BigRational> {
    let moments = pyramid_type_moments_exact(table, n_e, budget)?;
    let k_t = BigRational::from(BigInt::from(code.k_t as u64));
    let mut expected = BigRational::zero();
    let mut total_e_max = BigRational::zero();
    for (ty, e_max, p_hit) in &moments {
        total_e_max += e_max;
        if ty.u.iter().any(|&b| b) {
            let (unaff, over) = local_dim_split(code, ty);
            expected += BigRational::from(BigInt::from(unaff)) * e_max
                + BigRational::from(BigInt::from(over)) * p_hit;
        } else {
            match variant {
                FormulaVariant::AsPrinted => expected += &k_t * e_max,
                FormulaVariant::Operational => expected += &k_t * p_hit,
            }
        }
    }
    expected += (BigRational::from(BigInt::from(n_e as u64)) - total_e_max) * &k_t;
    Ok(expected / k_t)
}

/// Same functional, evaluated on Monte Carlo moment estimates.
pub fn chm_pyramid_formula_float(
    code: &PyramidCode,
    moments: &[TypeMoments],
    n_e: usize,
    variant: FormulaVariant,
) -> f64 {
    let k_t = code.k_t as f64;
    let mut expected = 0.0f64;
    let mut total_e_max = 0.0f64;
    for m in moments {
        total_e_max += m.e_max;
        if m.ty.u.iter().any(|&b| b) {
            let (unaff, over) = local_dim_split(code, &m.ty);
            expected += unaff as f64 * m.e_max + over as f64 * m.p_hit;
        } else {
            match variant {
                FormulaVariant::AsPrinted => expected += k_t * m.e_max,
                FormulaVariant::Operational => expected += k_t * m.p_hit,
            }
        }
    }
    (expected + (n_e as f64 - total_e_max) * k_t) / k_t
}

/// Guard for exhaustive expectation: number of matrices C(n_h,s)^n_e.
pub const EXHAUSTIVE_GUARD: u64 = 10_000_000;

/// Exact expected cost of a strategy by full enumeration of all weight-s
/// erasure matrices. The brute-force oracle for the analytic expressions.
pub fn chm_exhaustive(strategy: &Strategy, params: &SystemParams, guard: u64) -> Result<BigRational> {
    let patterns: Vec<ErasurePattern> = Combinations::new(params.n_h, params.s)
        .map(|cols| ErasurePattern::from_cols(params.n_h, &cols))
        .collect::<Result<_>>()?;
    let count = patterns.len() as u128;
    let mut matrices: u128 = 1;
    for _ in 0..params.n_e {
        matrices = matrices.saturating_mul(count);
        if matrices > guard as u128 {
            return Err(Error::infeasible(format!(
                "{count}^{} erasure matrices exceed the exhaustive guard {guard}",
                params.n_e
            )));
        }
    }

    let mut total_symbols = BigInt::zero();
    let mut idx = vec![0usize; params.n_e];
    loop {
        let rows: Vec<ErasurePattern> = idx.iter().map(|&i| patterns[i]).collect();
        let matrix = ErasureMatrix::new(params.n_h, rows)?;
        let plan = strategy.plan(&matrix)?;
        total_symbols += plan.total_symbols() as u64;
        // odometer
        let mut pos = params.n_e;
        loop {
            if pos == 0 {
                return Ok(BigRational::new(
                    total_symbols,
                    BigInt::from(matrices) * BigInt::from(strategy.k() as u64),
                ));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < patterns.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// How a reported C_HM value was obtained.
#[derive(Clone, Debug)]
pub enum CostValue {
    Exact(BigRational),
    Float(f64),
}

impl CostValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            CostValue::Exact(x) => rational_to_f64(x),
            CostValue::Float(x) => *x,
        }
    }

    pub fn render(&self) -> String {
        match self {
            CostValue::Exact(x) => x.to_string(),
            CostValue::Float(x) => format!("{x}"),
        }
    }
}

/// One line of the cost/tradeoff output.
#[derive(Clone, Debug)]
pub struct CostRow {
    pub scheme: &'static str,
    pub t_or_m: Option<usize>,
    pub c_eh: Ratio<u64>,
    pub c_hm: CostValue,
    pub method: &'static str,
    pub stderr: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

/// Pyramid C_HM rows (both formula variants), exact moments when the work
/// budget admits them, Monte Carlo otherwise.
pub fn pyramid_cost_rows(
    params: &SystemParams,
    t: usize,
    trials: u64,
    seed: u64,
    budget: u64,
) -> Result<Vec<CostRow>> {
    let field = FieldSpec::gf256();
    let code = PyramidCode::build(&field, params.n_h, params.s, t)?;
    let c_eh = ceh(params, &Scheme::Pyramid { t })?;

    let exact = ClassTable::build(&code).and_then(|table| {
        let printed =
            chm_pyramid_formula_exact(&code, &table, params.n_e, FormulaVariant::AsPrinted, budget)?;
        let operational = chm_pyramid_formula_exact(
            &code,
            &table,
            params.n_e,
            FormulaVariant::Operational,
            budget,
        )?;
        Ok((printed, operational))
    });
    match exact {
        Ok((printed, operational)) => Ok(vec![
            CostRow {
                scheme: "pyramid",
                t_or_m: Some(t),
                c_eh,
                c_hm: CostValue::Exact(printed),
                method: FormulaVariant::AsPrinted.method_tag(),
                stderr: None,
                trials: None,
                seed: None,
            },
            CostRow {
                scheme: "pyramid",
                t_or_m: Some(t),
                c_eh,
                c_hm: CostValue::Exact(operational),
                method: FormulaVariant::Operational.method_tag(),
                stderr: None,
                trials: None,
                seed: None,
            },
        ]),
        Err(Error::Infeasible(_)) | Err(Error::Parameter(_)) => {
            let config = SimConfig::new(params.n_e, params.n_h, params.s, trials, seed)?;
            let est = estimate_pyramid_formula(&config, &code)?;
            Ok(vec![
                CostRow {
                    scheme: "pyramid",
                    t_or_m: Some(t),
                    c_eh,
                    c_hm: CostValue::Float(est.as_printed.mean),
                    method: FormulaVariant::AsPrinted.method_tag(),
                    stderr: Some(est.as_printed.stderr),
                    trials: Some(trials),
                    seed: Some(seed),
                },
                CostRow {
                    scheme: "pyramid",
                    t_or_m: Some(t),
                    c_eh,
                    c_hm: CostValue::Float(est.operational.mean),
                    method: FormulaVariant::Operational.method_tag(),
                    stderr: Some(est.operational.stderr),
                    trials: Some(trials),
                    seed: Some(seed),
                },
            ])
        }
        Err(e) => Err(e),
    }
}

/// The full tradeoff sweep: MDS scheme (the t = 1 degenerate point), every
/// admissible pyramid t, and the repetition scheme, sorted by C_EH.
pub fn tradeoff(params: &SystemParams, trials: u64, seed: u64, budget: u64) -> Result<Vec<CostRow>> {
    let mut rows = Vec::new();

    let amc_ceh = ceh(params, &Scheme::Amc { m: 1 })?;
    match chm_amc_exact(params, budget) {
        Ok(v) => rows.push(CostRow {
            scheme: "amc",
            t_or_m: Some(1),
            c_eh: amc_ceh,
            c_hm: CostValue::Exact(v),
            method: "exact",
            stderr: None,
            trials: None,
            seed: None,
        }),
        Err(Error::Infeasible(_)) => {
            let config = SimConfig::new(params.n_e, params.n_h, params.s, trials, seed)?;
            let est = estimate_chm(&config, &Strategy::amc(params.n_h, params.s, 1)?)?;
            rows.push(CostRow {
                scheme: "amc",
                t_or_m: Some(1),
                c_eh: amc_ceh,
                c_hm: CostValue::Float(est.mean),
                method: "monte-carlo",
                stderr: Some(est.stderr),
                trials: Some(trials),
                seed: Some(seed),
            });
        }
        Err(e) => return Err(e),
    }

    for t in 2..=PyramidCode::max_t(params.n_h, params.s) {
        rows.extend(pyramid_cost_rows(params, t, trials, seed, budget)?);
    }

    let arc_ceh = ceh(params, &Scheme::Arc)?;
    if params.n_h.is_multiple_of(params.s + 1) {
        let config = SimConfig::new(params.n_e, params.n_h, params.s, trials, seed)?;
        let est = estimate_chm(&config, &Strategy::arc(params.n_h, params.s)?)?;
        rows.push(CostRow {
            scheme: "arc",
            t_or_m: None,
            c_eh: arc_ceh,
            c_hm: CostValue::Float(est.mean),
            method: "monte-carlo",
            stderr: Some(est.stderr),
            trials: Some(trials),
            seed: Some(seed),
        });
    } else {
        // the repetition code does not exist at these parameters; report the
        // scheme's guaranteed ceiling so the tradeoff endpoint is still drawn
        rows.push(CostRow {
            scheme: "arc",
            t_or_m: None,
            c_eh: arc_ceh,
            c_hm: CostValue::Float((params.s + 1) as f64),
            method: "bound",
            stderr: None,
            trials: None,
            seed: None,
        });
    }

    rows.sort_by_key(|a| a.c_eh);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupancy::DEFAULT_WORK_BUDGET;

    fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn ceh_values() {
        let p = SystemParams::new(2048, 16, 5).unwrap();
        assert_eq!(ceh(&p, &Scheme::Amc { m: 1 }).unwrap(), Ratio::new(16, 11));
        assert_eq!(ceh(&p, &Scheme::Pyramid { t: 1 }).unwrap(), Ratio::new(16, 11));
        assert_eq!(ceh(&p, &Scheme::Pyramid { t: 4 }).unwrap(), Ratio::new(2, 1));
        assert!(ceh(&p, &Scheme::Pyramid { t: 5 }).is_err());
        let p = SystemParams::new(4, 6, 2).unwrap();
        assert_eq!(ceh(&p, &Scheme::Arc).unwrap(), Ratio::new(3, 1));
    }

    #[test]
    fn amc_exact_small_cases() {
        let p = SystemParams::new(2, 2, 1).unwrap();
        assert_eq!(chm_amc_exact(&p, DEFAULT_WORK_BUDGET).unwrap(), big(3, 2));
        let p = SystemParams::new(2, 3, 1).unwrap();
        assert_eq!(chm_amc_exact(&p, DEFAULT_WORK_BUDGET).unwrap(), big(5, 3));
        let p = SystemParams::new(1, 8, 3).unwrap();
        assert_eq!(chm_amc_exact(&p, DEFAULT_WORK_BUDGET).unwrap(), BigRational::one());
    }

    #[test]
    fn amc_exact_matches_exhaustive() {
        for (n_e, n_h, s) in [(2usize, 2usize, 1usize), (2, 3, 1)] {
            let p = SystemParams::new(n_e, n_h, s).unwrap();
            let exact = chm_amc_exact(&p, DEFAULT_WORK_BUDGET).unwrap();
            let strategy = Strategy::amc(n_h, s, 1).unwrap();
            let brute = chm_exhaustive(&strategy, &p, EXHAUSTIVE_GUARD).unwrap();
            assert_eq!(exact, brute, "({n_e},{n_h},{s})");
        }
    }

    #[test]
    fn amc_bound_values() {
        let p = SystemParams::new(2048, 16, 5).unwrap();
        assert_eq!(chm_amc_bound(&p), big(20491, 11));
        // the printed bound is exceeded by the exact value at tiny parameters
        let p = SystemParams::new(2, 2, 1).unwrap();
        assert_eq!(chm_amc_bound(&p), BigRational::one());
        assert!(chm_amc_exact(&p, DEFAULT_WORK_BUDGET).unwrap() > chm_amc_bound(&p));
    }

    #[test]
    fn pyramid_formula_single_row_is_one() {
        let field = FieldSpec::gf256();
        let code = PyramidCode::build(&field, 8, 3, 2).unwrap();
        let table = ClassTable::build(&code).unwrap();
        for variant in [FormulaVariant::AsPrinted, FormulaVariant::Operational] {
            let v = chm_pyramid_formula_exact(&code, &table, 1, variant, DEFAULT_WORK_BUDGET).unwrap();
            assert_eq!(v, BigRational::one(), "{variant:?}");
        }
    }

    #[test]
    fn pyramid_operational_formula_matches_exhaustive_two_rows() {
        let field = FieldSpec::gf256();
        let code = PyramidCode::build(&field, 8, 3, 2).unwrap();
        let table = ClassTable::build(&code).unwrap();
        let params = SystemParams::new(2, 8, 3).unwrap();
        let formula = chm_pyramid_formula_exact(
            &code,
            &table,
            2,
            FormulaVariant::Operational,
            DEFAULT_WORK_BUDGET,
        )
        .unwrap();
        let strategy = Strategy::pyramid(&field, 8, 3, 2).unwrap();
        let brute = chm_exhaustive(&strategy, &params, EXHAUSTIVE_GUARD).unwrap();
        assert_eq!(formula, brute);
    }

    #[test]
    fn exhaustive_guard_trips() {
        let p = SystemParams::new(64, 6, 1).unwrap();
        let strategy = Strategy::amc(6, 1, 1).unwrap();
        assert!(matches!(
            chm_exhaustive(&strategy, &p, EXHAUSTIVE_GUARD),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn tradeoff_single_edge_all_costs_one() {
        let p = SystemParams::new(1, 8, 3).unwrap();
        let rows = tradeoff(&p, 50, 7, DEFAULT_WORK_BUDGET).unwrap();
        assert!(rows.len() >= 3);
        for row in &rows {
            assert!((row.c_hm.to_f64() - 1.0).abs() < 1e-12, "{}: {}", row.scheme, row.c_hm.to_f64());
        }
    }

    #[test]
    fn tradeoff_ceh_points() {
        let p = SystemParams::new(2, 16, 5).unwrap();
        let rows = tradeoff(&p, 20, 3, DEFAULT_WORK_BUDGET).unwrap();
        let cehs: Vec<Ratio<u64>> = rows.iter().map(|r| r.c_eh).collect();
        assert_eq!(cehs.first().unwrap(), &Ratio::new(16, 11));
        assert_eq!(cehs.last().unwrap(), &Ratio::new(6, 1));
        let pyramid: Vec<Ratio<u64>> =
            rows.iter().filter(|r| r.scheme == "pyramid").map(|r| r.c_eh).collect();
        assert_eq!(pyramid, vec![
            Ratio::new(16, 10), Ratio::new(16, 10),
            Ratio::new(16, 9), Ratio::new(16, 9),
            Ratio::new(2, 1), Ratio::new(2, 1),
        ]);
        // (s+1) does not divide 16: the repetition endpoint is its ceiling
        let arc = rows.last().unwrap();
        assert_eq!(arc.method, "bound");
        assert_eq!(arc.c_hm.to_f64(), 6.0);
    }

    #[test]
    fn exact_moments_agree_with_mc_estimator() {
        let field = FieldSpec::gf256();
        let code = PyramidCode::build(&field, 8, 3, 2).unwrap();
        let table = ClassTable::build(&code).unwrap();
        let config = SimConfig::new(6, 8, 3, 100_000, 77).unwrap();
        let est = estimate_pyramid_formula(&config, &code).unwrap();
        for (variant, mc) in [
            (FormulaVariant::AsPrinted, &est.as_printed),
            (FormulaVariant::Operational, &est.operational),
        ] {
            let exact = rational_to_f64(
                &chm_pyramid_formula_exact(&code, &table, 6, variant, DEFAULT_WORK_BUDGET).unwrap(),
            );
            assert!(
                (exact - mc.mean).abs() <= 3.0 * mc.stderr,
                "{variant:?}: exact {exact} vs mc {} +- {}",
                mc.mean,
                mc.stderr
            );
        }
    }

    #[test]
    fn mc_moments_feed_the_same_formula_mean() {
        use crate::sim::estimate_type_moments;
        let field = FieldSpec::gf256();
        let code = PyramidCode::build(&field, 8, 3, 2).unwrap();
        let table = ClassTable::build(&code).unwrap();
        let config = SimConfig::new(6, 8, 3, 2_000, 5).unwrap();
        let moments = estimate_type_moments(&config, &code, &table).unwrap();
        let est = estimate_pyramid_formula(&config, &code).unwrap();
        for (variant, mc) in [
            (FormulaVariant::AsPrinted, &est.as_printed),
            (FormulaVariant::Operational, &est.operational),
        ] {
            let from_moments = chm_pyramid_formula_float(&code, &moments, 6, variant);
            assert!((from_moments - mc.mean).abs() < 1e-9, "{variant:?}");
        }
    }
}
