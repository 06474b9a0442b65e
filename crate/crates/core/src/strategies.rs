//! The five aggregation strategies, executed on a concrete erasure matrix.
//!
//! Every plan is a list of helper transmissions. A transmission is either a
//! raw code symbol from one row or the sum of one column over a set of rows;
//! in both cases its coefficient vector over the `n_e * k` unknown partial
//! gradients is determined by the client-code generator, which is what
//! [`verify_recovery`] checks against the master's recovery targets.
//!
//! All tie-breaking is fixed, so identical inputs produce identical plans.

use num_rational::Ratio;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::codes::{PyramidCode, RepetitionCode};
use crate::erasures::{class_key, support_a, support_b, ClassKey, ErasureMatrix, PatternType};
use crate::error::{Error, Result};
use crate::field::{Elem, FieldMatrix, FieldSpec, GfBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransmissionKind {
    Aggregated,
    Raw,
}

/// One symbol sent by a helper: column `helper` summed over `rows`.
/// Raw means `rows` is a single edge node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub helper: usize,
    pub kind: TransmissionKind,
    pub rows: Vec<usize>,
    /// Message component covered, for repetition-code strategies.
    pub component: Option<usize>,
}

impl Transmission {
    fn new(helper: usize, rows: Vec<usize>, component: Option<usize>) -> Self {
        let kind =
            if rows.len() >= 2 { TransmissionKind::Aggregated } else { TransmissionKind::Raw };
        Transmission { helper, kind, rows, component }
    }

    /// Coefficient vector over the unknowns g_{i,r}, laid out as i*k + r.
    /// Equals the sum over contributing rows of that row's encoding
    /// coefficients for this helper column.
    pub fn coefficients(&self, generator: &FieldMatrix, n_e: usize) -> Vec<Elem> {
        let k = generator.rows();
        let mut v = vec![0 as Elem; n_e * k];
        for &i in &self.rows {
            for r in 0..k {
                v[i * k + r] ^= generator.get(r, self.helper);
            }
        }
        v
    }
}

/// The full list of helper transmissions for one erasure matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregationPlan {
    pub n_h: usize,
    pub transmissions: Vec<Transmission>,
}

impl AggregationPlan {
    /// Per-helper symbol counts m_j.
    pub fn helper_counts(&self) -> Vec<usize> {
        let mut m = vec![0usize; self.n_h];
        for t in &self.transmissions {
            m[t.helper] += 1;
        }
        m
    }

    /// |D_ag|, the total number of transmitted symbols.
    pub fn total_symbols(&self) -> usize {
        self.transmissions.len()
    }

    /// Normalized cost |D_ag| / k as an exact rational.
    pub fn cost(&self, k: usize) -> Ratio<u64> {
        Ratio::new(self.total_symbols() as u64, k as u64)
    }

    pub fn describe(&self) -> PlanDescription {
        PlanDescription {
            transmissions: self
                .transmissions
                .iter()
                .map(|t| TransmissionDescription {
                    helper: t.helper + 1,
                    kind: match t.kind {
                        TransmissionKind::Aggregated => "aggregated".into(),
                        TransmissionKind::Raw => "raw".into(),
                    },
                    rows: t.rows.iter().map(|&r| r + 1).collect(),
                    column: t.helper + 1,
                    components: t.component.iter().map(|&c| c + 1).collect(),
                })
                .collect(),
            m_j: self.helper_counts(),
            total: self.total_symbols(),
        }
    }
}

/// JSON form of a plan (1-based helpers, rows and components).
#[derive(Clone, Debug, Serialize)]
pub struct PlanDescription {
    pub transmissions: Vec<TransmissionDescription>,
    pub m_j: Vec<usize>,
    pub total: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransmissionDescription {
    pub helper: usize,
    pub kind: String,
    pub rows: Vec<usize>,
    pub column: usize,
    pub components: Vec<usize>,
}

/// Aggregates code symbols over rows `rows` and candidate columns `t_cols`.
///
/// All rows must carry equivalent erasure patterns and `t_cols` must be
/// A(u) (some local overwhelmed) or B(u) (none overwhelmed) for their type.
/// When locals are overwhelmed, each row first sends the lowest-indexed
/// lambda_i - 1 unerased symbols of every unaffected local (enough to decode
/// the local single-parity-check code), and the aggregated columns complete
/// those locals' information coordinates to an information set, trying
/// global-parity columns first. When no local is overwhelmed nothing is sent
/// raw and the aggregated columns alone form an information set.
pub fn aggregate_over(
    code: &PyramidCode,
    matrix: &ErasureMatrix,
    rows: &[usize],
    t_cols: &[usize],
) -> Result<Vec<Transmission>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let key = class_key(code, matrix.row(rows[0]));
    debug_assert!(
        rows.iter().all(|&i| class_key(code, matrix.row(i)) == key),
        "aggregate_over called on inequivalent rows"
    );
    let overwhelmed = key.ty.u.iter().any(|&b| b);
    debug_assert_eq!(
        t_cols,
        if overwhelmed { support_a(code, &key.ty.u) } else { support_b(code, &key.ty.u) },
        "t_cols must be A(u) or B(u) for the rows' type"
    );

    let mut out = Vec::new();
    let mut forced: Vec<usize> = Vec::new();
    if overwhelmed {
        for &i in rows {
            let e = matrix.row(i);
            for (l, support) in code.locals.iter().enumerate() {
                if key.ty.u[l] {
                    continue;
                }
                let unerased: Vec<usize> =
                    support.iter().copied().filter(|&c| !e.is_erased(c)).collect();
                for &c in unerased.iter().take(support.len() - 1) {
                    out.push(Transmission::new(c, vec![i], None));
                }
            }
        }
        for (l, support) in code.locals.iter().enumerate() {
            if !key.ty.u[l] {
                forced.extend_from_slice(&support[..code.local_dims[l]]);
            }
        }
    }

    // columns unerased in every row of the class; global parities first when
    // completing around overwhelmed locals, plain ascending otherwise
    let common_ok = |c: &usize| rows.iter().all(|&i| !matrix.row(i).is_erased(*c));
    let candidates: Vec<usize> = if overwhelmed {
        let (q, rest): (Vec<usize>, Vec<usize>) =
            t_cols.iter().copied().filter(common_ok).partition(|c| code.global.contains(c));
        q.into_iter().chain(rest).collect()
    } else {
        t_cols.iter().copied().filter(common_ok).collect()
    };

    let field = code.field();
    let mut basis = GfBasis::new(field, code.k_t);
    for &c in &forced {
        let grew = basis.try_insert(&code.generator.column(c));
        debug_assert!(grew, "identity columns of distinct locals are independent");
    }
    let mut selected: Vec<usize> = Vec::new();
    for c in candidates {
        if basis.rank() == code.k_t {
            break;
        }
        if basis.try_insert(&code.generator.column(c)) {
            selected.push(c);
        }
    }
    if basis.rank() != code.k_t {
        return Err(Error::internal(format!(
            "no information set completable over rows {rows:?}; the code corrects any s erasures, \
             so this is a bug"
        )));
    }
    selected.sort_unstable();
    for c in selected {
        out.push(Transmission::new(c, rows.to_vec(), None));
    }
    Ok(out)
}

/// The pyramid aggregation strategy: rows are grouped into equivalence
/// classes, the largest class of every observed type is aggregated, and all
/// remaining rows send a lowest-index information set raw.
pub fn plan_pyramid(code: &PyramidCode, matrix: &ErasureMatrix) -> Result<AggregationPlan> {
    if matrix.n_h() != code.n_h {
        return Err(Error::parameter("matrix width does not match the code blocklength"));
    }
    for (i, row) in matrix.rows().iter().enumerate() {
        if row.weight() != code.s {
            return Err(Error::parameter(format!(
                "row {} has weight {}, the pyramid strategy requires exactly s = {}",
                i + 1,
                row.weight(),
                code.s
            )));
        }
    }

    let mut classes: BTreeMap<ClassKey, Vec<usize>> = BTreeMap::new();
    for (i, row) in matrix.rows().iter().enumerate() {
        classes.entry(class_key(code, row)).or_default().push(i);
    }
    let mut by_type: BTreeMap<PatternType, Vec<(&ClassKey, &Vec<usize>)>> = BTreeMap::new();
    for (key, rows) in &classes {
        by_type.entry(key.ty.clone()).or_default().push((key, rows));
    }

    let mut transmissions = Vec::new();
    let mut aggregated_rows: Vec<usize> = Vec::new();
    for (ty, cls) in &by_type {
        // largest class; ties resolve to the lexicographically smallest key,
        // which is the first seen in BTreeMap order
        let (_, rows) = cls
            .iter()
            .max_by(|(ka, ra), (kb, rb)| ra.len().cmp(&rb.len()).then(kb.cmp(ka)))
            .expect("every observed type has a class");
        let t_cols = if ty.u.iter().any(|&b| b) {
            support_a(code, &ty.u)
        } else {
            support_b(code, &ty.u)
        };
        transmissions.extend(aggregate_over(code, matrix, rows, &t_cols)?);
        aggregated_rows.extend_from_slice(rows);
    }

    aggregated_rows.sort_unstable();
    for i in 0..matrix.n_e() {
        if aggregated_rows.binary_search(&i).is_ok() {
            continue;
        }
        let cols = raw_information_set(code.field(), &code.generator, matrix.row(i).unerased())?;
        for c in cols {
            transmissions.push(Transmission::new(c, vec![i], None));
        }
    }

    Ok(AggregationPlan { n_h: code.n_h, transmissions })
}

/// Lowest-index greedy information set among the given columns.
fn raw_information_set(
    field: &FieldSpec,
    generator: &FieldMatrix,
    candidates: Vec<usize>,
) -> Result<Vec<usize>> {
    let k = generator.rows();
    let mut basis = GfBasis::new(field, k);
    let mut selected = Vec::with_capacity(k);
    for c in candidates {
        if basis.rank() == k {
            break;
        }
        if basis.try_insert(&generator.column(c)) {
            selected.push(c);
        }
    }
    if basis.rank() != k {
        return Err(Error::internal("unerased columns do not contain an information set"));
    }
    Ok(selected)
}

/// AMC with m maximas: the m largest groups of identical rows aggregate,
/// everything else goes raw. m = 1 is the plain AMC scheme; m = 0 degenerates
/// to the naive scheme.
pub fn plan_amc(matrix: &ErasureMatrix, k: usize, m: usize) -> Result<AggregationPlan> {
    check_k_unerased(matrix, k)?;
    let mut groups: BTreeMap<u128, Vec<usize>> = BTreeMap::new();
    for (i, row) in matrix.rows().iter().enumerate() {
        groups.entry(row.lex_key()).or_default().push(i);
    }
    // by descending size, then lexicographically smallest pattern
    let mut ordered: Vec<(u128, Vec<usize>)> = groups.into_iter().collect();
    ordered.sort_by(|(ka, ra), (kb, rb)| rb.len().cmp(&ra.len()).then(ka.cmp(kb)));

    let chosen = ordered.len().min(m);
    let mut transmissions = Vec::new();
    for (idx, (_, rows)) in ordered.iter().enumerate() {
        let cols: Vec<usize> = matrix.row(rows[0]).unerased().into_iter().take(k).collect();
        if idx < chosen {
            for c in cols {
                transmissions.push(Transmission::new(c, rows.clone(), None));
            }
        } else {
            for &i in rows {
                for &c in &cols {
                    transmissions.push(Transmission::new(c, vec![i], None));
                }
            }
        }
    }

    Ok(AggregationPlan { n_h: matrix.n_h(), transmissions })
}

/// The naive baseline: every row forwards k unerased symbols.
pub fn plan_naive(matrix: &ErasureMatrix, k: usize) -> Result<AggregationPlan> {
    check_k_unerased(matrix, k)?;
    let mut transmissions = Vec::new();
    for (i, row) in matrix.rows().iter().enumerate() {
        for c in row.unerased().into_iter().take(k) {
            transmissions.push(Transmission::new(c, vec![i], None));
        }
    }
    Ok(AggregationPlan { n_h: matrix.n_h(), transmissions })
}

fn check_k_unerased(matrix: &ErasureMatrix, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::parameter("k must be positive"));
    }
    for (i, row) in matrix.rows().iter().enumerate() {
        if matrix.n_h() - row.weight() < k {
            return Err(Error::parameter(format!(
                "row {} keeps only {} symbols, fewer than k = {k}",
                i + 1,
                matrix.n_h() - row.weight()
            )));
        }
    }
    Ok(())
}

fn check_arc_weights(code: &RepetitionCode, matrix: &ErasureMatrix) -> Result<()> {
    if matrix.n_h() != code.n_h {
        return Err(Error::parameter("matrix width does not match the code blocklength"));
    }
    for (i, row) in matrix.rows().iter().enumerate() {
        if row.weight() > code.s {
            return Err(Error::parameter(format!(
                "row {} has weight {} > s = {}",
                i + 1,
                row.weight(),
                code.s
            )));
        }
    }
    Ok(())
}

/// The repetition-code strategy: each partial gradient is assigned to the
/// first helper that received it; every assigned helper sends one aggregated
/// symbol.
pub fn plan_arc(code: &RepetitionCode, matrix: &ErasureMatrix) -> Result<AggregationPlan> {
    check_arc_weights(code, matrix)?;
    let mut assigned: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..matrix.n_e() {
        for r in 0..code.k {
            let helper = (0..code.n_h)
                .filter(|&j| code.component_of(j) == r)
                .find(|&j| !matrix.row(i).is_erased(j));
            match helper {
                Some(j) => assigned.entry(j).or_default().push(i),
                None => {
                    return Err(Error::internal(format!(
                        "component {} of row {} unreachable despite weight <= s",
                        r + 1,
                        i + 1
                    )))
                }
            }
        }
    }
    let transmissions = assigned
        .into_iter()
        .map(|(j, rows)| Transmission::new(j, rows, Some(code.component_of(j))))
        .collect();
    Ok(AggregationPlan { n_h: code.n_h, transmissions })
}

/// Greedy set cover over the helpers' received partial gradients. Each chosen
/// helper aggregates what it newly covers into one symbol per component.
///
/// Ties on coverage size prefer the lexicographically largest covered set
/// (then the lowest helper index), which reproduces the hand-worked cover for
/// the 4x6 reference scenario.
pub fn plan_arc_greedy(code: &RepetitionCode, matrix: &ErasureMatrix) -> Result<AggregationPlan> {
    check_arc_weights(code, matrix)?;
    let n_e = matrix.n_e();
    let k = code.k;
    // universe element (i, r) -> bit i*k + r
    let words = (n_e * k).div_ceil(64).max(1);
    let mut sets: Vec<Vec<u64>> = vec![vec![0u64; words]; code.n_h];
    for (j, set) in sets.iter_mut().enumerate() {
        let r = code.component_of(j);
        for i in 0..n_e {
            if !matrix.row(i).is_erased(j) {
                let bit = i * k + r;
                set[bit / 64] |= 1 << (bit % 64);
            }
        }
    }
    let mut universe = vec![0u64; words];
    for i in 0..n_e {
        for r in 0..k {
            let bit = i * k + r;
            universe[bit / 64] |= 1 << (bit % 64);
        }
    }

    let popcount = |v: &[u64]| -> u32 { v.iter().map(|w| w.count_ones()).sum() };
    let mut transmissions = Vec::new();
    while popcount(&universe) > 0 {
        let mut best: Option<(usize, Vec<u64>, u32)> = None;
        for (j, set) in sets.iter().enumerate() {
            let covered: Vec<u64> = set.iter().zip(&universe).map(|(s, u)| s & u).collect();
            let count = popcount(&covered);
            if count == 0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some((_, bcov, bcount)) => {
                    count > *bcount || (count == *bcount && covered_lex_gt(&covered, bcov))
                }
            };
            if better {
                best = Some((j, covered, count));
            }
        }
        let Some((j, covered, _)) = best else {
            return Err(Error::internal("uncovered partial gradient with no holding helper"));
        };
        let rows: Vec<usize> = (0..n_e)
            .filter(|&i| {
                let bit = i * k + code.component_of(j);
                covered[bit / 64] >> (bit % 64) & 1 == 1
            })
            .collect();
        transmissions.push(Transmission::new(j, rows, Some(code.component_of(j))));
        for (u, c) in universe.iter_mut().zip(&covered) {
            *u &= !c;
        }
    }
    Ok(AggregationPlan { n_h: code.n_h, transmissions })
}

/// Lexicographic comparison of covered element sets: true when a's sorted
/// element list is strictly greater than b's. Bit index order equals
/// (row, component) order, so the set whose first differing element is larger
/// wins.
fn covered_lex_gt(a: &[u64], b: &[u64]) -> bool {
    for (wa, wb) in a.iter().zip(b) {
        if wa != wb {
            // the lowest differing bit belongs to exactly one set; the set
            // NOT holding it has the lexicographically larger element list
            let diff = wa ^ wb;
            let low = diff & diff.wrapping_neg();
            return wa & low == 0;
        }
    }
    false
}

/// Checks that every master recovery target (the componentwise sum of all
/// rows' partial gradients) lies in the row span of the plan's transmission
/// coefficients.
pub fn verify_recovery(
    field: &FieldSpec,
    generator: &FieldMatrix,
    plan: &AggregationPlan,
    n_e: usize,
) -> bool {
    let k = generator.rows();
    let rows: Vec<Vec<Elem>> =
        plan.transmissions.iter().map(|t| t.coefficients(generator, n_e)).collect();
    let coeffs = match FieldMatrix::from_rows(rows) {
        Ok(m) => m,
        Err(_) => return false,
    };
    if coeffs.rows() == 0 {
        return n_e == 0;
    }
    let mut targets = FieldMatrix::zero(k, n_e * k);
    for r in 0..k {
        for i in 0..n_e {
            targets.set(r, i * k + r, 1);
        }
    }
    match crate::field::rank_and_solve(field, &coeffs, Some(&targets)) {
        Ok(out) => out.witnesses.unwrap().iter().all(|w| w.is_some()),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erasures::ErasurePattern;
    use crate::field::FieldSpec;

    fn pyramid_8_3_2() -> PyramidCode {
        PyramidCode::build(&FieldSpec::gf256(), 8, 3, 2).unwrap()
    }

    /// The 10 x 8 reference scenario with one three-row class, one four-row
    /// class with an overwhelmed local, and three stray rows.
    fn reference_matrix_10x8() -> ErasureMatrix {
        ErasureMatrix::from_bits(&[
            &[0, 1, 0, 1, 0, 0, 1, 0],
            &[0, 1, 0, 1, 0, 0, 0, 1],
            &[0, 1, 0, 1, 0, 0, 0, 1],
            &[1, 0, 1, 1, 0, 0, 0, 0],
            &[0, 1, 1, 1, 0, 0, 0, 0],
            &[0, 0, 1, 1, 1, 0, 0, 0],
            &[0, 0, 1, 1, 1, 0, 0, 0],
            &[0, 0, 0, 1, 0, 0, 1, 1],
            &[0, 0, 1, 0, 0, 0, 1, 1],
            &[0, 0, 1, 1, 0, 0, 0, 1],
        ])
        .unwrap()
    }

    /// 5 x 4 matrix with a triple and a double group.
    fn matrix_5x4_two_groups() -> ErasureMatrix {
        ErasureMatrix::from_bits(&[
            &[0, 0, 0, 1],
            &[0, 0, 0, 1],
            &[0, 0, 0, 1],
            &[1, 0, 0, 0],
            &[1, 0, 0, 0],
        ])
        .unwrap()
    }

    /// 4 x 6 matrix of the repetition-code scenario.
    fn matrix_4x6_repetition() -> ErasureMatrix {
        ErasureMatrix::from_bits(&[
            &[0, 1, 1, 0, 0, 0],
            &[1, 0, 0, 0, 0, 1],
            &[1, 0, 1, 0, 0, 0],
            &[0, 1, 0, 1, 0, 0],
        ])
        .unwrap()
    }

    fn cols_of(trans: &[Transmission]) -> Vec<usize> {
        trans.iter().map(|t| t.helper).collect()
    }

    #[test]
    fn aggregate_unaffected_class() {
        let code = pyramid_8_3_2();
        let m = reference_matrix_10x8();
        let t = support_b(&code, &[false, false]);
        let out = aggregate_over(&code, &m, &[0, 1, 2], &t).unwrap();
        assert_eq!(cols_of(&out), vec![0, 2, 4, 5]);
        assert!(out.iter().all(|tr| tr.kind == TransmissionKind::Aggregated));
        assert!(out.iter().all(|tr| tr.rows == vec![0, 1, 2]));
    }

    #[test]
    fn aggregate_overwhelmed_class() {
        let code = pyramid_8_3_2();
        let m = reference_matrix_10x8();
        let t = support_a(&code, &[false, true]);
        assert_eq!(t, vec![2, 3, 5, 6, 7]);
        let out = aggregate_over(&code, &m, &[3, 4, 5, 6], &t).unwrap();
        let raws: Vec<(usize, usize)> = out
            .iter()
            .filter(|tr| tr.kind == TransmissionKind::Raw)
            .map(|tr| (tr.rows[0], tr.helper))
            .collect();
        assert_eq!(raws, vec![(3, 1), (3, 4), (4, 0), (4, 4), (5, 0), (5, 1), (6, 0), (6, 1)]);
        let agg: Vec<usize> = out
            .iter()
            .filter(|tr| tr.kind == TransmissionKind::Aggregated)
            .map(|tr| tr.helper)
            .collect();
        assert_eq!(agg, vec![6, 7]);
    }

    #[test]
    fn aggregate_singleton_unaffected_row() {
        let code = pyramid_8_3_2();
        let m = reference_matrix_10x8();
        let t = support_b(&code, &[false, false]);
        let out = aggregate_over(&code, &m, &[7], &t).unwrap();
        assert_eq!(cols_of(&out), vec![0, 1, 2, 5]);
        assert!(out.iter().all(|tr| tr.kind == TransmissionKind::Raw));
    }

    #[test]
    fn pyramid_plan_on_reference_matrix() {
        let code = pyramid_8_3_2();
        let m = reference_matrix_10x8();
        let plan = plan_pyramid(&code, &m).unwrap();
        assert_eq!(plan.total_symbols(), 26);
        assert_eq!(plan.cost(4), Ratio::new(26, 4));
        assert_eq!(plan.helper_counts().iter().sum::<usize>(), 26);
        assert!(verify_recovery(code.field(), &code.generator, &plan, 10));
        // determinism: byte-identical plans on identical input
        assert_eq!(plan, plan_pyramid(&code, &m).unwrap());
    }

    #[test]
    fn pyramid_all_rows_equivalent() {
        let code = pyramid_8_3_2();
        let rows: Vec<ErasurePattern> =
            (0..6).map(|_| ErasurePattern::from_cols(8, &[1, 3, 6]).unwrap()).collect();
        let m = ErasureMatrix::new(8, rows).unwrap();
        let plan = plan_pyramid(&code, &m).unwrap();
        assert_eq!(plan.total_symbols(), code.k_t);
        assert_eq!(plan.cost(code.k_t), Ratio::new(1, 1));
    }

    #[test]
    fn pyramid_single_row() {
        let code = pyramid_8_3_2();
        let m = ErasureMatrix::new(8, vec![ErasurePattern::from_cols(8, &[2, 3, 7]).unwrap()])
            .unwrap();
        let plan = plan_pyramid(&code, &m).unwrap();
        assert_eq!(plan.total_symbols(), code.k_t);
        assert!(verify_recovery(code.field(), &code.generator, &plan, 1));
    }

    #[test]
    fn pyramid_rejects_wrong_weight() {
        let code = pyramid_8_3_2();
        let m = ErasureMatrix::new(8, vec![ErasurePattern::from_cols(8, &[1]).unwrap()]).unwrap();
        assert!(plan_pyramid(&code, &m).is_err());
    }

    #[test]
    fn amc_m_maxima_costs() {
        let m = matrix_5x4_two_groups();
        let plan1 = plan_amc(&m, 3, 1).unwrap();
        assert_eq!(plan1.cost(3), Ratio::new(3, 1));
        let plan2 = plan_amc(&m, 3, 2).unwrap();
        assert_eq!(plan2.cost(3), Ratio::new(2, 1));
        // m = 0 is the naive scheme
        assert_eq!(plan_amc(&m, 3, 0).unwrap().cost(3), Ratio::new(5, 1));

        let rows: Vec<ErasurePattern> =
            (0..7).map(|_| ErasurePattern::from_cols(4, &[2]).unwrap()).collect();
        let same = ErasureMatrix::new(4, rows).unwrap();
        assert_eq!(plan_amc(&same, 3, 1).unwrap().cost(3), Ratio::new(1, 1));
    }

    #[test]
    fn amc_tie_breaks_to_lex_smallest_pattern() {
        let m = ErasureMatrix::from_bits(&[
            &[0, 0, 0, 1],
            &[1, 0, 0, 0],
        ])
        .unwrap();
        let plan = plan_amc(&m, 3, 1).unwrap();
        // group (0,0,0,1) is lexicographically smaller than (1,0,0,0), so row 0
        // aggregates (here: goes first) and row 1 stays raw
        assert_eq!(plan.transmissions[0].rows, vec![0]);
        assert_eq!(cols_of(&plan.transmissions[..3]), vec![0, 1, 2]);
        assert_eq!(cols_of(&plan.transmissions[3..]), vec![1, 2, 3]);
    }

    #[test]
    fn naive_cost_is_ne() {
        let m = matrix_5x4_two_groups();
        let plan = plan_naive(&m, 3).unwrap();
        assert_eq!(plan.cost(3), Ratio::new(5, 1));
        assert!(plan.transmissions.iter().all(|t| t.kind == TransmissionKind::Raw));
    }

    #[test]
    fn arc_reference_scenario_uses_all_helpers() {
        let code = RepetitionCode::build(6, 2).unwrap();
        let plan = plan_arc(&code, &matrix_4x6_repetition()).unwrap();
        assert_eq!(plan.total_symbols(), 6);
        assert_eq!(plan.cost(2), Ratio::new(3, 1));
        assert!(verify_recovery(code.field(), &code.generator, &plan, 4));
    }

    #[test]
    fn arc_zero_erasures_uses_first_copies() {
        let code = RepetitionCode::build(6, 2).unwrap();
        let m = ErasureMatrix::from_bits(&[&[0, 0, 0, 0, 0, 0], &[0, 0, 0, 0, 0, 0]]).unwrap();
        let plan = plan_arc(&code, &m).unwrap();
        assert_eq!(cols_of(&plan.transmissions), vec![0, 1]);
        assert_eq!(plan.cost(2), Ratio::new(1, 1));
    }

    #[test]
    fn arc_single_row_cost_one() {
        let code = RepetitionCode::build(6, 2).unwrap();
        let m = ErasureMatrix::from_bits(&[&[1, 1, 0, 0, 0, 0]]).unwrap();
        assert_eq!(plan_arc(&code, &m).unwrap().cost(2), Ratio::new(1, 1));
    }

    #[test]
    fn greedy_arc_reproduces_hand_worked_cover() {
        let code = RepetitionCode::build(6, 2).unwrap();
        let plan = plan_arc_greedy(&code, &matrix_4x6_repetition()).unwrap();
        let helpers: Vec<usize> = plan.transmissions.iter().map(|t| t.helper + 1).collect();
        assert_eq!(helpers, vec![5, 6, 2]);
        assert_eq!(plan.transmissions[0].rows, vec![0, 1, 2, 3]);
        assert_eq!(plan.transmissions[1].rows, vec![0, 2, 3]);
        assert_eq!(plan.transmissions[2].rows, vec![1]);
        assert_eq!(plan.cost(2), Ratio::new(3, 2));
        assert!(verify_recovery(code.field(), &code.generator, &plan, 4));
    }

    #[test]
    fn greedy_arc_never_worse_than_arc_on_single_rows() {
        let code = RepetitionCode::build(6, 2).unwrap();
        for cols in crate::erasures::Combinations::new(6, 2) {
            let m =
                ErasureMatrix::new(6, vec![ErasurePattern::from_cols(6, &cols).unwrap()]).unwrap();
            let greedy = plan_arc_greedy(&code, &m).unwrap().cost(2);
            let plain = plan_arc(&code, &m).unwrap().cost(2);
            assert!(greedy <= plain, "{cols:?}");
        }
    }

    #[test]
    fn verify_recovery_fails_on_mutilated_plans() {
        let code = pyramid_8_3_2();
        let m = reference_matrix_10x8();
        let plan = plan_pyramid(&code, &m).unwrap();
        for drop in 0..plan.total_symbols() {
            let mut broken = plan.clone();
            broken.transmissions.remove(drop);
            assert!(
                !verify_recovery(code.field(), &code.generator, &broken, 10),
                "plan stayed recoverable without transmission {drop}"
            );
        }
    }

    #[test]
    fn transmitted_columns_are_unerased() {
        let code = pyramid_8_3_2();
        let m = reference_matrix_10x8();
        let plan = plan_pyramid(&code, &m).unwrap();
        for t in &plan.transmissions {
            for &i in &t.rows {
                assert!(!m.row(i).is_erased(t.helper));
            }
        }
    }

    #[test]
    fn empty_matrix_empty_plan() {
        let m = ErasureMatrix::new(4, vec![]).unwrap();
        let plan = plan_naive(&m, 3).unwrap();
        assert_eq!(plan.total_symbols(), 0);
        assert_eq!(plan.cost(3), Ratio::new(0, 1));
    }

    #[test]
    fn plan_json_shape() {
        let code = RepetitionCode::build(4, 1).unwrap();
        let m = ErasureMatrix::from_bits(&[&[1, 0, 0, 0], &[0, 1, 0, 0]]).unwrap();
        let plan = plan_arc(&code, &m).unwrap();
        let json = serde_json::to_value(plan.describe()).unwrap();
        assert_eq!(json["total"], plan.total_symbols());
        assert!(json["transmissions"][0]["helper"].as_u64().unwrap() >= 1);
        assert_eq!(json["m_j"].as_array().unwrap().len(), 4);
    }
}
