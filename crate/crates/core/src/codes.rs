//! The three client codes: systematic MDS with Cauchy parities, the pyramid
//! transformation of that MDS code, and the plain repetition code.
//!
//! The pyramid code is built from a `[k_t+s, k_t]` MDS code by splitting its
//! first parity column into `t` sub-vectors, one per local code. Each local
//! code is a single-parity-check code; the remaining `s-1` parities stay
//! global. Supports use 0-based column indices internally and 1-based indices
//! in the JSON description.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{cauchy_matrix, Elem, FieldMatrix, FieldSpec};

/// Systematic [k+s, k] MDS code with generator `[I_k | Cauchy]`.
#[derive(Clone, Debug)]
pub struct MdsCode {
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub generator: FieldMatrix,
    field: FieldSpec,
}

/// Pyramid code with `t` local single-parity-check codes and `s-1` global
/// parities, blocklength `n_h`, dimension `k_t = n_h - s - t + 1`.
#[derive(Clone, Debug)]
pub struct PyramidCode {
    pub n_h: usize,
    pub s: usize,
    pub t: usize,
    pub k_t: usize,
    /// k_t = t*a + b with 0 <= b < t and a >= 2.
    pub a: usize,
    pub b: usize,
    /// Local supports L_1..L_t, each sorted ascending (0-based columns).
    pub locals: Vec<Vec<usize>>,
    /// Global parity support Q, sorted ascending (0-based columns).
    pub global: Vec<usize>,
    /// Dimensions k_t(i) of the local codes; sums to k_t.
    pub local_dims: Vec<usize>,
    pub generator: FieldMatrix,
    field: FieldSpec,
}

/// Repetition code: k = n_h/(s+1) message parts, each sent to s+1 helpers.
/// Generator is `[I_k | I_k | ... ]`, s+1 blocks.
#[derive(Clone, Debug)]
pub struct RepetitionCode {
    pub n_h: usize,
    pub s: usize,
    pub k: usize,
    pub generator: FieldMatrix,
    field: FieldSpec,
}

impl MdsCode {
    /// `[k+s, k, s+1]` code; requires k+s distinct field elements.
    pub fn build(field: &FieldSpec, k: usize, s: usize) -> Result<Self> {
        if k < 1 || s < 1 {
            return Err(Error::parameter(format!("need k >= 1 and s >= 1, got k={k}, s={s}")));
        }
        let parity = cauchy_matrix(field, k, s)?;
        let mut generator = FieldMatrix::zero(k, k + s);
        for i in 0..k {
            generator.set(i, i, 1);
            for j in 0..s {
                generator.set(i, k + j, parity.get(i, j));
            }
        }
        Ok(MdsCode { n: k + s, k, s, generator, field: field.clone() })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn encode(&self, message: &[Elem]) -> Result<Vec<Elem>> {
        encode(&self.field, &self.generator, message)
    }

    pub fn erasure_decodable(&self, erased: &[usize]) -> bool {
        erasure_decodable(&self.field, &self.generator, erased)
    }
}

impl PyramidCode {
    /// Admissible t range for given (n_h, s): `2 <= t <= (n_h - s + 1) / 3`.
    pub fn max_t(n_h: usize, s: usize) -> usize {
        (n_h - s + 1) / 3
    }

    pub fn build(field: &FieldSpec, n_h: usize, s: usize, t: usize) -> Result<Self> {
        if s < 1 || s + 1 > n_h {
            return Err(Error::parameter(format!("need 1 <= s <= n_h - 1, got n_h={n_h}, s={s}")));
        }
        let t_max = Self::max_t(n_h, s);
        if t < 2 || t > t_max {
            return Err(Error::parameter(format!(
                "pyramid parameter t={t} outside the admissible interval [2, {t_max}] for (n_h={n_h}, s={s})"
            )));
        }
        let k_t = n_h - s - t + 1;
        let a = k_t / t;
        let b = k_t % t;
        debug_assert!(a >= 2, "t <= (n_h-s+1)/3 guarantees a >= 2");

        let mds = MdsCode::build(field, k_t, s)?;

        // Message-position blocks: the first b locals take a+1 message
        // symbols, the rest take a. Local parity columns sit at k_t..k_t+t,
        // global parities fill the tail.
        let mut locals = Vec::with_capacity(t);
        let mut local_dims = Vec::with_capacity(t);
        let mut start = 0usize;
        for i in 0..t {
            let dim = if i < b { a + 1 } else { a };
            let mut support: Vec<usize> = (start..start + dim).collect();
            support.push(k_t + i);
            locals.push(support);
            local_dims.push(dim);
            start += dim;
        }
        debug_assert_eq!(start, k_t);
        let global: Vec<usize> = (k_t + t..n_h).collect();
        debug_assert_eq!(global.len(), s - 1);

        // Generator: identity, block-diagonal split of the first Cauchy
        // parity, then the remaining s-1 parities unchanged.
        let mut generator = FieldMatrix::zero(k_t, n_h);
        for r in 0..k_t {
            generator.set(r, r, 1);
        }
        for (i, support) in locals.iter().enumerate() {
            for &col in &support[..local_dims[i]] {
                generator.set(col, k_t + i, mds.generator.get(col, k_t));
            }
        }
        for j in 1..s {
            for r in 0..k_t {
                generator.set(r, k_t + t + (j - 1), mds.generator.get(r, k_t + j));
            }
        }

        Ok(PyramidCode {
            n_h,
            s,
            t,
            k_t,
            a,
            b,
            locals,
            global,
            local_dims,
            generator,
            field: field.clone(),
        })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    /// Support sizes lambda_1..lambda_t, lambda_{t+1} = |Q|.
    pub fn lambdas(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.locals.iter().map(|l| l.len()).collect();
        v.push(self.global.len());
        v
    }

    /// Locality profile kappa: k_t(i) information symbols at locality
    /// k_t(i) for each local code, i.e. (t-b)*a symbols at locality a and
    /// b*(a+1) at locality a+1.
    pub fn locality_profile(&self) -> Vec<usize> {
        let mut kappa = vec![0usize; self.a + 2];
        kappa[self.a] = (self.t - self.b) * self.a;
        kappa[self.a + 1] = self.b * (self.a + 1);
        kappa
    }

    pub fn encode(&self, message: &[Elem]) -> Result<Vec<Elem>> {
        encode(&self.field, &self.generator, message)
    }

    pub fn erasure_decodable(&self, erased: &[usize]) -> bool {
        erasure_decodable(&self.field, &self.generator, erased)
    }
}

impl RepetitionCode {
    pub fn build(n_h: usize, s: usize) -> Result<Self> {
        if s < 1 || s + 1 > n_h {
            return Err(Error::parameter(format!("need 1 <= s <= n_h - 1, got n_h={n_h}, s={s}")));
        }
        if !n_h.is_multiple_of(s + 1) {
            return Err(Error::parameter(format!(
                "repetition code needs (s+1) | n_h, got n_h={n_h}, s={s}"
            )));
        }
        let k = n_h / (s + 1);
        let mut generator = FieldMatrix::zero(k, n_h);
        for copy in 0..s + 1 {
            for r in 0..k {
                generator.set(r, copy * k + r, 1);
            }
        }
        Ok(RepetitionCode { n_h, s, k, generator, field: FieldSpec::gf256() })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    /// The message component carried by helper column `j` (0-based).
    pub fn component_of(&self, j: usize) -> usize {
        j % self.k
    }

    pub fn encode(&self, message: &[Elem]) -> Result<Vec<Elem>> {
        encode(&self.field, &self.generator, message)
    }

    pub fn erasure_decodable(&self, erased: &[usize]) -> bool {
        erasure_decodable(&self.field, &self.generator, erased)
    }
}

/// Vector-matrix encoding; the systematic prefix equals the message whenever
/// the generator is systematic.
pub fn encode(field: &FieldSpec, generator: &FieldMatrix, message: &[Elem]) -> Result<Vec<Elem>> {
    generator.vec_mul(field, message)
}

/// True iff the generator restricted to unerased columns still has full rank.
pub fn erasure_decodable(field: &FieldSpec, generator: &FieldMatrix, erased: &[usize]) -> bool {
    let erased: std::collections::HashSet<usize> = erased.iter().copied().collect();
    let keep: Vec<usize> = (0..generator.cols()).filter(|c| !erased.contains(c)).collect();
    generator.select_columns(&keep).rank(field) == generator.rows()
}

/// JSON form of a code: parameters, 1-based supports, generator entries as
/// integers.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CodeDescription {
    pub kind: String,
    pub n_h: usize,
    pub s: usize,
    pub t: Option<usize>,
    pub k: usize,
    pub locals: Vec<Vec<usize>>,
    pub global: Vec<usize>,
    pub generator: Vec<Vec<u32>>,
}

fn generator_entries(g: &FieldMatrix) -> Vec<Vec<u32>> {
    (0..g.rows()).map(|r| g.row(r).iter().map(|&e| e as u32).collect()).collect()
}

impl From<&MdsCode> for CodeDescription {
    fn from(c: &MdsCode) -> Self {
        CodeDescription {
            kind: "mds".into(),
            n_h: c.n,
            s: c.s,
            t: None,
            k: c.k,
            locals: Vec::new(),
            global: Vec::new(),
            generator: generator_entries(&c.generator),
        }
    }
}

impl From<&PyramidCode> for CodeDescription {
    fn from(c: &PyramidCode) -> Self {
        CodeDescription {
            kind: "pyramid".into(),
            n_h: c.n_h,
            s: c.s,
            t: Some(c.t),
            k: c.k_t,
            locals: c.locals.iter().map(|l| l.iter().map(|&i| i + 1).collect()).collect(),
            global: c.global.iter().map(|&i| i + 1).collect(),
            generator: generator_entries(&c.generator),
        }
    }
}

impl From<&RepetitionCode> for CodeDescription {
    fn from(c: &RepetitionCode) -> Self {
        CodeDescription {
            kind: "repetition".into(),
            n_h: c.n_h,
            s: c.s,
            t: None,
            k: c.k,
            locals: Vec::new(),
            global: Vec::new(),
            generator: generator_entries(&c.generator),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn gf() -> FieldSpec {
        FieldSpec::gf256()
    }

    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(n, k, i + 1, cur, out);
                cur.pop();
            }
        }
        rec(n, k, 0, &mut cur, &mut out);
        out
    }

    #[test]
    fn mds_7_4_every_4_columns_full_rank() {
        let code = MdsCode::build(&gf(), 4, 3).unwrap();
        assert_eq!(code.n, 7);
        for cols in combinations(7, 4) {
            assert_eq!(code.generator.select_columns(&cols).rank(&gf()), 4, "{cols:?}");
        }
    }

    #[test]
    fn mds_2_1_repetition_like() {
        let code = MdsCode::build(&gf(), 1, 1).unwrap();
        assert_eq!(code.n, 2);
        assert_ne!(code.generator.get(0, 1), 0);
    }

    #[test]
    fn mds_16_11_random_column_sets() {
        let code = MdsCode::build(&gf(), 11, 5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let cols = rand::seq::index::sample(&mut rng, 16, 11).into_vec();
            assert_eq!(code.generator.select_columns(&cols).rank(&gf()), 11);
        }
    }

    #[test]
    fn pyramid_8_3_2_construction() {
        let code = PyramidCode::build(&gf(), 8, 3, 2).unwrap();
        assert_eq!(code.k_t, 4);
        assert_eq!((code.a, code.b), (2, 0));
        assert_eq!(code.locals, vec![vec![0, 1, 4], vec![2, 3, 5]]);
        assert_eq!(code.global, vec![6, 7]);
        assert_eq!(code.lambdas(), vec![3, 3, 2]);
        assert_eq!(code.local_dims, vec![2, 2]);
        // generator shape: systematic prefix, block-diagonal first parity
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(code.generator.get(r, c), u16::from(r == c));
            }
        }
        for r in 0..4 {
            let in_first = r < 2;
            assert_eq!(code.generator.get(r, 4) != 0, in_first);
            assert_eq!(code.generator.get(r, 5) != 0, !in_first);
            assert_ne!(code.generator.get(r, 6), 0);
            assert_ne!(code.generator.get(r, 7), 0);
        }
    }

    #[test]
    fn pyramid_16_5_2_support_sizes() {
        let code = PyramidCode::build(&gf(), 16, 5, 2).unwrap();
        assert_eq!(code.k_t, 10);
        assert_eq!(code.lambdas(), vec![6, 6, 4]);
    }

    #[test]
    fn pyramid_16_5_4_has_four_dim2_locals() {
        let code = PyramidCode::build(&gf(), 16, 5, 4).unwrap();
        assert_eq!(code.k_t, 8);
        assert_eq!(code.local_dims, vec![2, 2, 2, 2]);
        assert_eq!(code.lambdas(), vec![3, 3, 3, 3, 4]);
    }

    #[test]
    fn pyramid_t_out_of_range() {
        let err = PyramidCode::build(&gf(), 16, 5, 5).unwrap_err();
        assert!(err.to_string().contains("[2, 4]"), "{err}");
        assert!(PyramidCode::build(&gf(), 8, 3, 1).is_err());
    }

    #[test]
    fn pyramid_uneven_split() {
        // k_t = 7 = 3*2 + 1: one local of size a+2, two of size a+1
        let code = PyramidCode::build(&gf(), 12, 3, 3).unwrap();
        assert_eq!((code.a, code.b), (2, 1));
        assert_eq!(code.locals, vec![vec![0, 1, 2, 7], vec![3, 4, 8], vec![5, 6, 9]]);
        assert_eq!(code.global, vec![10, 11]);
        assert_eq!(code.locality_profile(), vec![0, 0, 4, 3]);
    }

    #[test]
    fn locality_profile_closed_form_over_admissible_range() {
        for n_h in 6..=18usize {
            for s in 2..n_h {
                for t in 2..=PyramidCode::max_t(n_h, s) {
                    let code = PyramidCode::build(&gf(), n_h, s, t).unwrap();
                    let kappa = code.locality_profile();
                    assert_eq!(kappa.iter().sum::<usize>(), code.k_t);
                    assert_eq!(kappa[code.a], (code.t - code.b) * code.a);
                    assert_eq!(kappa[code.a + 1], code.b * (code.a + 1));
                }
            }
        }
    }

    #[test]
    fn local_restrictions_are_single_parity_check() {
        for (n_h, s, t) in [(8, 3, 2), (16, 5, 2), (16, 5, 4), (12, 3, 3)] {
            let code = PyramidCode::build(&gf(), n_h, s, t).unwrap();
            for (i, support) in code.locals.iter().enumerate() {
                let sub = code.generator.select_columns(support);
                // restricted to its message rows, the local has rank k_t(i)
                // and exactly one parity relation among its lambda_i columns
                assert_eq!(sub.rank(&gf()), code.local_dims[i]);
                assert_eq!(support.len(), code.local_dims[i] + 1);
                // every lambda_i - 1 columns already span the local space
                for drop in 0..support.len() {
                    let kept: Vec<usize> =
                        support.iter().enumerate().filter(|&(p, _)| p != drop).map(|(_, &c)| c).collect();
                    assert_eq!(code.generator.select_columns(&kept).rank(&gf()), code.local_dims[i]);
                }
            }
        }
    }

    #[test]
    fn pyramid_corrects_any_s_erasures_exhaustively() {
        for (n_h, s, t) in [(8, 3, 2), (12, 3, 3), (16, 5, 2), (16, 5, 4)] {
            let code = PyramidCode::build(&gf(), n_h, s, t).unwrap();
            for erased in combinations(n_h, s) {
                assert!(code.erasure_decodable(&erased), "failed at {erased:?}");
            }
        }
    }

    #[test]
    fn pyramid_weight4_erasures_can_fail() {
        let code = PyramidCode::build(&gf(), 8, 3, 2).unwrap();
        assert!(code.erasure_decodable(&[]));
        let failures: Vec<Vec<usize>> = combinations(8, 4)
            .into_iter()
            .filter(|e| !code.erasure_decodable(e))
            .collect();
        assert!(!failures.is_empty(), "a [8,4] code cannot correct all weight-4 erasures");
        // all of L1 plus a global parity kills local 1's information
        assert!(failures.contains(&vec![0, 1, 4, 6]));
    }

    #[test]
    fn repetition_construction_and_divisibility() {
        let code = RepetitionCode::build(6, 2).unwrap();
        assert_eq!(code.k, 2);
        let expected = FieldMatrix::from_rows(vec![
            vec![1, 0, 1, 0, 1, 0],
            vec![0, 1, 0, 1, 0, 1],
        ])
        .unwrap();
        assert_eq!(code.generator, expected);
        assert_eq!(RepetitionCode::build(4, 1).unwrap().k, 2);
        assert!(RepetitionCode::build(5, 1).is_err());
    }

    #[test]
    fn repetition_decodable_up_to_s_erasures() {
        let code = RepetitionCode::build(6, 2).unwrap();
        for w in 0..=2usize {
            for erased in combinations(6, w) {
                assert!(code.erasure_decodable(&erased));
            }
        }
        // erasing all three copies of component 0 is fatal
        assert!(!code.erasure_decodable(&[0, 2, 4]));
    }

    #[test]
    fn encode_systematic_prefix() {
        let code = PyramidCode::build(&gf(), 8, 3, 2).unwrap();
        assert_eq!(code.encode(&[0, 0, 0, 0]).unwrap(), vec![0; 8]);
        let e1 = code.encode(&[1, 0, 0, 0]).unwrap();
        assert_eq!(&e1, &code.generator.row(0).to_vec());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let msg: Vec<Elem> = (0..4).map(|_| rng.random_range(0..256) as Elem).collect();
            let cw = code.encode(&msg).unwrap();
            assert_eq!(&cw[..4], &msg[..]);
        }
        assert!(code.encode(&[1, 2, 3]).is_err());
    }

    #[test]
    fn json_description_round_trip() {
        let code = PyramidCode::build(&gf(), 8, 3, 2).unwrap();
        let desc = CodeDescription::from(&code);
        assert_eq!(desc.locals, vec![vec![1, 2, 5], vec![3, 4, 6]]);
        assert_eq!(desc.global, vec![7, 8]);
        assert_eq!(desc.k, 4);
        let json = serde_json::to_string(&desc).unwrap();
        let back: CodeDescription = serde_json::from_str(&json).unwrap();
        assert_eq!(back, desc);
    }

    #[test]
    fn json_description_matches_golden_file() {
        let code = PyramidCode::build(&gf(), 8, 3, 2).unwrap();
        let desc = CodeDescription::from(&code);
        let golden: CodeDescription =
            serde_json::from_str(include_str!("../tests/data/pyramid_8_3_2.json")).unwrap();
        assert_eq!(desc, golden);
    }
}
