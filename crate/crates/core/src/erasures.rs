//! Erasure patterns, the observed erasure matrix, and the classification of
//! weight-s patterns against a pyramid code: code-erasure patterns `f`, types
//! `(u, v)`, equivalence classes, bunching factors and class counts.
//!
//! A local code is *unaffected* by a pattern when it sees at most one erasure
//! (its single parity check then recovers everything) and *overwhelmed*
//! otherwise. Two patterns of the same type are equivalent when they agree on
//! the overwhelmed-locals-plus-globals support `A(u)` (or, for u = 0, on the
//! locals support `B(u)`). Class sizes within a type are all equal to the
//! bunching factor.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codes::PyramidCode;
use crate::error::{Error, Result};

/// A straggling pattern over the n_h helper links of one edge node.
/// Columns are 0-based; bit c set means the link to helper c straggled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ErasurePattern {
    mask: u128,
    len: usize,
}

impl ErasurePattern {
    pub fn from_cols(n_h: usize, cols: &[usize]) -> Result<Self> {
        if n_h > 128 {
            return Err(Error::parameter(format!("pattern length {n_h} exceeds 128")));
        }
        let mut mask = 0u128;
        for &c in cols {
            if c >= n_h {
                return Err(Error::parameter(format!("erased column {c} out of range 0..{n_h}")));
            }
            mask |= 1 << c;
        }
        Ok(ErasurePattern { mask, len: n_h })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let cols: Vec<usize> =
            bits.iter().enumerate().filter(|&(_, &b)| b != 0).map(|(i, _)| i).collect();
        Self::from_cols(bits.len(), &cols)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn weight(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_erased(&self, col: usize) -> bool {
        self.mask >> col & 1 == 1
    }

    /// Erased columns, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&c| self.is_erased(c)).collect()
    }

    /// Unerased columns, ascending.
    pub fn unerased(&self) -> Vec<usize> {
        (0..self.len).filter(|&c| !self.is_erased(c)).collect()
    }

    pub fn count_in(&self, cols: &[usize]) -> usize {
        cols.iter().filter(|&&c| self.is_erased(c)).count()
    }

    /// Key whose numeric order equals lexicographic order on the bit vector
    /// (column 0 first).
    pub fn lex_key(&self) -> u128 {
        if self.len == 0 {
            return 0;
        }
        self.mask.reverse_bits() >> (128 - self.len)
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.len).map(|c| u8::from(self.is_erased(c))).collect()
    }
}

/// The observed erasure matrix: one pattern per edge node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ErasureMatrixJson", into = "ErasureMatrixJson")]
pub struct ErasureMatrix {
    n_h: usize,
    rows: Vec<ErasurePattern>,
}

#[derive(Serialize, Deserialize)]
struct ErasureMatrixJson {
    rows: Vec<Vec<u8>>,
}

impl TryFrom<ErasureMatrixJson> for ErasureMatrix {
    type Error = Error;
    fn try_from(j: ErasureMatrixJson) -> Result<Self> {
        let rows: Result<Vec<ErasurePattern>> =
            j.rows.iter().map(|r| ErasurePattern::from_bits(r)).collect();
        let rows = rows?;
        let n_h = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_h) {
            return Err(Error::parameter("ragged erasure matrix"));
        }
        Ok(ErasureMatrix { n_h, rows })
    }
}

impl From<ErasureMatrix> for ErasureMatrixJson {
    fn from(m: ErasureMatrix) -> Self {
        ErasureMatrixJson { rows: m.rows.iter().map(|r| r.bits()).collect() }
    }
}

impl ErasureMatrix {
    pub fn new(n_h: usize, rows: Vec<ErasurePattern>) -> Result<Self> {
        if rows.iter().any(|r| r.len() != n_h) {
            return Err(Error::parameter("row length does not match n_h"));
        }
        Ok(ErasureMatrix { n_h, rows })
    }

    pub fn from_bits(rows: &[&[u8]]) -> Result<Self> {
        let pats: Result<Vec<ErasurePattern>> =
            rows.iter().map(|r| ErasurePattern::from_bits(r)).collect();
        let pats = pats?;
        let n_h = pats.first().map_or(0, |r| r.len());
        Self::new(n_h, pats)
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn n_e(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &ErasurePattern {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[ErasurePattern] {
        &self.rows
    }

    pub fn max_weight(&self) -> usize {
        self.rows.iter().map(|r| r.weight()).max().unwrap_or(0)
    }
}

/// Pattern type (u, v): which locals are overwhelmed, and the 0/1 erasure
/// counts within the unaffected locals (ascending local index).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternType {
    pub u: Vec<bool>,
    pub v: Vec<u8>,
}

impl PatternType {
    pub fn u_string(&self) -> String {
        self.u.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn v_string(&self) -> String {
        if self.v.is_empty() {
            "-".to_string()
        } else {
            self.v.iter().map(|&d| char::from(b'0' + d)).collect()
        }
    }
}

impl fmt::Display for PatternType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.u_string(), self.v_string())
    }
}

/// Equivalence-class key: patterns with equal keys are interchangeable for
/// aggregation purposes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassKey {
    pub ty: PatternType,
    /// Supp(e) intersected with A(u) (u != 0) or B(u) (u = 0), ascending.
    pub anchor: Vec<usize>,
}

/// Per-local and per-global erasure counts f = (f_1..f_t, f_{t+1}).
pub fn code_erasure_pattern(code: &PyramidCode, e: &ErasurePattern) -> Vec<usize> {
    let mut f: Vec<usize> = code.locals.iter().map(|l| e.count_in(l)).collect();
    f.push(e.count_in(&code.global));
    f
}

/// The type (u, v) of a pattern.
pub fn pattern_type(code: &PyramidCode, e: &ErasurePattern) -> PatternType {
    let f = code_erasure_pattern(code, e);
    type_from_f(code, &f)
}

fn type_from_f(code: &PyramidCode, f: &[usize]) -> PatternType {
    let u: Vec<bool> = (0..code.t).map(|i| f[i] > 1).collect();
    let v: Vec<u8> = (0..code.t).filter(|&i| !u[i]).map(|i| f[i] as u8).collect();
    PatternType { u, v }
}

/// Support of overwhelmed locals plus global parities, ascending.
pub fn support_a(code: &PyramidCode, u: &[bool]) -> Vec<usize> {
    let mut cols: Vec<usize> = code
        .locals
        .iter()
        .zip(u)
        .filter(|&(_, &o)| o)
        .flat_map(|(l, _)| l.iter().copied())
        .chain(code.global.iter().copied())
        .collect();
    cols.sort_unstable();
    cols
}

/// Support of unaffected locals, ascending.
pub fn support_b(code: &PyramidCode, u: &[bool]) -> Vec<usize> {
    let mut cols: Vec<usize> = code
        .locals
        .iter()
        .zip(u)
        .filter(|&(_, &o)| !o)
        .flat_map(|(l, _)| l.iter().copied())
        .collect();
    cols.sort_unstable();
    cols
}

/// Canonical class key of a pattern.
pub fn class_key(code: &PyramidCode, e: &ErasurePattern) -> ClassKey {
    let ty = pattern_type(code, e);
    let region = if ty.u.iter().any(|&b| b) {
        support_a(code, &ty.u)
    } else {
        support_b(code, &ty.u)
    };
    let anchor: Vec<usize> = region.into_iter().filter(|&c| e.is_erased(c)).collect();
    ClassKey { ty, anchor }
}

/// Bunching factor of a type given its code-erasure pattern.
pub fn bunching_factor(code: &PyramidCode, ty: &PatternType, f: &[usize]) -> u64 {
    let lambdas = code.lambdas();
    if ty.u.iter().any(|&b| b) {
        (0..code.t)
            .filter(|&l| !ty.u[l])
            .map(|l| binomial(lambdas[l] as u64, f[l] as u64))
            .product()
    } else {
        binomial(lambdas[code.t] as u64, f[code.t] as u64)
    }
}

/// Binomial coefficient, saturating at `u64::MAX` (the saturated value only
/// ever feeds guard comparisons).
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// One (type, f) row of the classification table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FRow {
    pub f: Vec<usize>,
    pub count: u64,
}

/// All data for one type: the observed code-erasure patterns with counts,
/// |S|, the bunching factor and the number of classes mu = |S| / beta.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeClass {
    pub ty: PatternType,
    pub f_rows: Vec<FRow>,
    pub size: u64,
    pub beta: Option<u64>,
    pub mu: u64,
}

/// Classification of all weight-s patterns for a pyramid code. Types are
/// listed in lexicographic (u, v) order, including types with |S| = 0.
#[derive(Clone, Debug)]
pub struct ClassTable {
    pub types: Vec<TypeClass>,
    pub total: u64,
}

/// Enumeration guard for [`ClassTable::build`].
pub const CLASS_TABLE_GUARD: u64 = 10_000_000;

impl ClassTable {
    pub fn build(code: &PyramidCode) -> Result<Self> {
        Self::build_with_guard(code, CLASS_TABLE_GUARD)
    }

    pub fn build_with_guard(code: &PyramidCode, guard: u64) -> Result<Self> {
        let total_patterns = binomial(code.n_h as u64, code.s as u64);
        if total_patterns > guard {
            return Err(Error::parameter(format!(
                "C({}, {}) = {total_patterns} weight-s patterns exceed the enumeration guard \
                 {guard}; use Monte Carlo estimation instead",
                code.n_h, code.s
            )));
        }

        let mut by_type: BTreeMap<PatternType, BTreeMap<Vec<usize>, u64>> = BTreeMap::new();
        // seed every possible (u, v) combination so empty types are reported
        for ty in all_types(code.t) {
            by_type.insert(ty, BTreeMap::new());
        }
        let mut seen = 0u64;
        for cols in Combinations::new(code.n_h, code.s) {
            let e = ErasurePattern::from_cols(code.n_h, &cols)?;
            let f = code_erasure_pattern(code, &e);
            debug_assert_eq!(f.iter().sum::<usize>(), code.s);
            let ty = type_from_f(code, &f);
            *by_type.get_mut(&ty).expect("all types pre-seeded").entry(f).or_insert(0) += 1;
            seen += 1;
        }
        debug_assert_eq!(seen, total_patterns);

        let lambdas = code.lambdas();
        let mut types = Vec::with_capacity(by_type.len());
        for (ty, f_map) in by_type {
            let mut f_rows = Vec::with_capacity(f_map.len());
            let mut size = 0u64;
            for (f, count) in f_map {
                // observed count must equal the product formula N(f)
                let expected: u64 = f
                    .iter()
                    .zip(&lambdas)
                    .map(|(&fi, &li)| binomial(li as u64, fi as u64))
                    .product();
                if count != expected {
                    return Err(Error::internal(format!(
                        "N(f) mismatch for {ty} f={f:?}: enumerated {count}, formula {expected}"
                    )));
                }
                size += count;
                f_rows.push(FRow { f, count });
            }
            let beta = f_rows.first().map(|r| bunching_factor(code, &ty, &r.f));
            if let Some(b) = beta {
                if !size.is_multiple_of(b) {
                    return Err(Error::internal(format!(
                        "bunching factor {b} does not divide |S| = {size} for type {ty}"
                    )));
                }
            }
            let mu = beta.map_or(0, |b| size / b);
            types.push(TypeClass { ty, f_rows, size, beta, mu });
        }
        Ok(ClassTable { types, total: total_patterns })
    }

    pub fn get(&self, ty: &PatternType) -> Option<&TypeClass> {
        self.types.iter().find(|tc| &tc.ty == ty)
    }

    /// Number of equivalence classes mu for a type; 0 when the type has no
    /// patterns.
    pub fn class_count(&self, ty: &PatternType) -> u64 {
        self.get(ty).map_or(0, |tc| tc.mu)
    }

    /// CSV rows, one per (type, f) pair; types with no patterns contribute no
    /// rows. Header: type_u,type_v,f,N_f,S_size,beta,mu
    pub fn to_csv(&self) -> String {
        let mut out = String::from("type_u,type_v,f,N_f,S_size,beta,mu\n");
        for tc in &self.types {
            let beta = tc.beta.map_or_else(|| "-".to_string(), |b| b.to_string());
            for row in &tc.f_rows {
                let f_str: Vec<String> = row.f.iter().map(|x| x.to_string()).collect();
                out.push_str(&format!(
                    "{},{},\"({})\",{},{},{},{}\n",
                    tc.ty.u_string(),
                    tc.ty.v_string(),
                    f_str.join(","),
                    row.count,
                    tc.size,
                    beta,
                    tc.mu
                ));
            }
        }
        out
    }
}

/// All (u, v) combinations for t local codes, lexicographic.
fn all_types(t: usize) -> Vec<PatternType> {
    let mut out = Vec::new();
    for ubits in 0..(1u32 << t) {
        let u: Vec<bool> = (0..t).map(|i| ubits >> (t - 1 - i) & 1 == 1).collect();
        let tau = u.iter().filter(|&&b| !b).count();
        for vbits in 0..(1u32 << tau) {
            let v: Vec<u8> = (0..tau).map(|i| (vbits >> (tau - 1 - i) & 1) as u8).collect();
            out.push(PatternType { u: u.clone(), v });
        }
    }
    out.sort();
    out
}

/// Iterator over k-subsets of 0..n in lexicographic order.
pub struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let state = if k <= n { Some((0..k).collect()) } else { None };
        Combinations { n, k, state }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.state.clone()?;
        // advance to the next combination
        let mut next = cur.clone();
        let mut i = self.k;
        loop {
            if i == 0 {
                self.state = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - (self.k - i) {
                next[i] += 1;
                for j in i + 1..self.k {
                    next[j] = next[j - 1] + 1;
                }
                self.state = Some(next);
                break;
            }
        }
        Some(cur)
    }
}
