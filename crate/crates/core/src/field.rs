//! Arithmetic over GF(2^w) and the dense matrix algebra built on it.
//!
//! Elements are stored as integers below `2^w`. Multiplication goes through
//! log/exp tables built once per [`FieldSpec`]; addition is XOR. The tables
//! are generated by repeated multiplication by `x`, which also validates the
//! reduction polynomial: the walk must visit every nonzero element exactly
//! once before closing, i.e. the polynomial must be primitive.

use crate::error::{Error, Result};

/// A field element. Always `< 2^w` for the owning [`FieldSpec`].
pub type Elem = u16;

/// GF(2^w) with a fixed primitive polynomial, 1 <= w <= 16.
#[derive(Clone, Debug)]
pub struct FieldSpec {
    width: u32,
    poly: u32,
    exp: Vec<Elem>, // exp[i] = x^i, i in 0..q-1
    log: Vec<u32>,  // log[e] defined for e != 0
}

/// Polynomial x^8 + x^4 + x^3 + x^2 + 1.
pub const GF256_POLY: u32 = 0x11D;

impl FieldSpec {
    /// Builds the field, generating the log/exp tables.
    ///
    /// Fails if `poly` does not have degree `width` or is not primitive
    /// (the powers of `x` must enumerate all `2^w - 1` nonzero elements).
    pub fn new(width: u32, poly: u32) -> Result<Self> {
        if !(1..=16).contains(&width) {
            return Err(Error::parameter(format!(
                "field width must be in 1..=16, got {width}"
            )));
        }
        if poly >> width != 1 {
            return Err(Error::parameter(format!(
                "polynomial {poly:#x} does not have degree {width}"
            )));
        }
        if poly & 1 == 0 {
            return Err(Error::parameter(
                "polynomial has zero constant term, so it is divisible by x",
            ));
        }
        let q = 1usize << width;
        let mut exp = vec![0 as Elem; q - 1];
        let mut log = vec![0u32; q];
        let mut seen = vec![false; q];
        let mut val: u32 = 1;
        for (i, slot) in exp.iter_mut().enumerate() {
            if seen[val as usize] {
                return Err(Error::parameter(format!(
                    "polynomial {poly:#x} is not primitive over GF(2^{width})"
                )));
            }
            seen[val as usize] = true;
            *slot = val as Elem;
            log[val as usize] = i as u32;
            val <<= 1;
            if val >> width != 0 {
                val ^= poly;
            }
        }
        if val != 1 {
            return Err(Error::parameter(format!(
                "polynomial {poly:#x} is not primitive over GF(2^{width})"
            )));
        }
        Ok(FieldSpec { width, poly, exp, log })
    }

    /// The default field: GF(2^8) with polynomial x^8+x^4+x^3+x^2+1.
    /// Large enough for any blocklength up to 255.
    pub fn gf256() -> Self {
        FieldSpec::new(8, GF256_POLY).expect("default polynomial is primitive")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Field order q = 2^w.
    pub fn order(&self) -> usize {
        1 << self.width
    }

    /// The i-th element in generator-power order: x^0, x^1, ..., x^(q-2), 0.
    pub fn element(&self, i: usize) -> Elem {
        if i < self.exp.len() {
            self.exp[i]
        } else if i == self.exp.len() {
            0
        } else {
            panic!("element index {i} out of range for field of order {}", self.order())
        }
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.exp.len() as u32;
        let mut s = self.log[a as usize] + self.log[b as usize];
        if s >= n {
            s -= n;
        }
        self.exp[s as usize]
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a == 0 {
            return Err(Error::domain("inverse of zero"));
        }
        let n = self.exp.len() as u32;
        let l = self.log[a as usize];
        Ok(self.exp[((n - l) % n) as usize])
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem> {
        Ok(self.mul(a, self.inv(b)?))
    }
}

/// Dense row-major matrix over a GF(2^w).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

impl FieldMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        FieldMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = FieldMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Elem>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::parameter("ragged rows in matrix literal"));
        }
        Ok(FieldMatrix { rows: nrows, cols: ncols, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Elem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Elem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Column c as an owned vector.
    pub fn column(&self, c: usize) -> Vec<Elem> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// New matrix made of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FieldMatrix {
        let mut m = FieldMatrix::zero(self.rows, cols.len());
        for (j, &c) in cols.iter().enumerate() {
            for r in 0..self.rows {
                m.set(r, j, self.get(r, c));
            }
        }
        m
    }

    /// Vector-matrix product `msg * self` over the field.
    pub fn vec_mul(&self, field: &FieldSpec, msg: &[Elem]) -> Result<Vec<Elem>> {
        if msg.len() != self.rows {
            return Err(Error::parameter(format!(
                "message length {} does not match generator rows {}",
                msg.len(),
                self.rows
            )));
        }
        let mut out = vec![0 as Elem; self.cols];
        for (r, &m) in msg.iter().enumerate() {
            if m == 0 {
                continue;
            }
            for (o, &g) in out.iter_mut().zip(self.row(r)) {
                *o ^= field.mul(m, g);
            }
        }
        Ok(out)
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self, field: &FieldSpec) -> usize {
        rank_and_solve(field, self, None).expect("no targets, cannot fail").rank
    }
}

/// Outcome of [`rank_and_solve`]: the rank of `m`, and for each requested
/// target row either a coefficient vector `c` with `c * m = target` or `None`
/// if the target is outside the row span.
#[derive(Clone, Debug)]
pub struct RankSolve {
    pub rank: usize,
    pub witnesses: Option<Vec<Option<Vec<Elem>>>>,
}

/// Gaussian elimination over GF(2^w) with optional span membership checks.
pub fn rank_and_solve(
    field: &FieldSpec,
    m: &FieldMatrix,
    targets: Option<&FieldMatrix>,
) -> Result<RankSolve> {
    if let Some(t) = targets {
        if t.cols() != m.cols() {
            return Err(Error::parameter(format!(
                "target width {} does not match matrix width {}",
                t.cols(),
                m.cols()
            )));
        }
    }
    let mut work = m.clone();
    // transform tracks the row operations: transform * m == work at all times
    let mut transform = FieldMatrix::identity(m.rows());
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut rank = 0usize;
    for col in 0..work.cols() {
        let Some(pivot) = (rank..work.rows()).find(|&r| work.get(r, col) != 0) else {
            continue;
        };
        swap_rows(&mut work, rank, pivot);
        swap_rows(&mut transform, rank, pivot);
        let scale = field.inv(work.get(rank, col))?;
        scale_row(field, &mut work, rank, scale);
        scale_row(field, &mut transform, rank, scale);
        for r in 0..work.rows() {
            if r != rank && work.get(r, col) != 0 {
                let factor = work.get(r, col);
                add_scaled_row(field, &mut work, r, rank, factor);
                add_scaled_row(field, &mut transform, r, rank, factor);
            }
        }
        pivots.push((rank, col));
        rank += 1;
        if rank == work.rows() {
            break;
        }
    }

    let witnesses = targets.map(|t| {
        (0..t.rows())
            .map(|ti| {
                let mut residual: Vec<Elem> = t.row(ti).to_vec();
                let mut coeff = vec![0 as Elem; m.rows()];
                for &(prow, pcol) in &pivots {
                    let factor = residual[pcol];
                    if factor == 0 {
                        continue;
                    }
                    for (rc, &wv) in residual.iter_mut().zip(work.row(prow)) {
                        *rc ^= field.mul(factor, wv);
                    }
                    for (cc, &tv) in coeff.iter_mut().zip(transform.row(prow)) {
                        *cc ^= field.mul(factor, tv);
                    }
                }
                if residual.iter().all(|&v| v == 0) {
                    Some(coeff)
                } else {
                    None
                }
            })
            .collect()
    });

    Ok(RankSolve { rank, witnesses })
}

fn swap_rows(m: &mut FieldMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for c in 0..m.cols() {
        let (va, vb) = (m.get(a, c), m.get(b, c));
        m.set(a, c, vb);
        m.set(b, c, va);
    }
}

fn scale_row(field: &FieldSpec, m: &mut FieldMatrix, r: usize, s: Elem) {
    for c in 0..m.cols() {
        let v = m.get(r, c);
        m.set(r, c, field.mul(v, s));
    }
}

fn add_scaled_row(field: &FieldSpec, m: &mut FieldMatrix, dst: usize, src: usize, s: Elem) {
    for c in 0..m.cols() {
        let v = m.get(dst, c) ^ field.mul(s, m.get(src, c));
        m.set(dst, c, v);
    }
}

/// k x s Cauchy matrix: entry (i, j) = 1 / (x_i + y_j) with the point sets
/// taken as consecutive elements in generator-power order, so the matrix is
/// the same on every run. Every square submatrix is nonsingular.
pub fn cauchy_matrix(field: &FieldSpec, k: usize, s: usize) -> Result<FieldMatrix> {
    let q = field.order();
    if k + s > q {
        let need = (usize::BITS - (k + s - 1).leading_zeros()).max(1);
        return Err(Error::parameter(format!(
            "Cauchy matrix needs {} distinct field elements but GF(2^{}) has only {q}; \
             use field width >= {need}",
            k + s,
            field.width()
        )));
    }
    let mut m = FieldMatrix::zero(k, s);
    for i in 0..k {
        let x = field.element(i);
        for j in 0..s {
            let y = field.element(k + j);
            m.set(i, j, field.inv(x ^ y)?);
        }
    }
    Ok(m)
}

/// Incremental row basis over GF(2^w); used for greedy information-set
/// selection. Vectors are kept in echelon form by leading position.
pub struct GfBasis<'a> {
    field: &'a FieldSpec,
    rows: Vec<Vec<Elem>>,
    dim: usize,
}

impl<'a> GfBasis<'a> {
    pub fn new(field: &'a FieldSpec, dim: usize) -> Self {
        GfBasis { field, rows: Vec::new(), dim }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Inserts `v` if it is independent of the current basis. Returns whether
    /// the rank grew.
    pub fn try_insert(&mut self, v: &[Elem]) -> bool {
        assert_eq!(v.len(), self.dim);
        let mut v = v.to_vec();
        for row in &self.rows {
            let lead = row.iter().position(|&x| x != 0).unwrap();
            if v[lead] != 0 {
                let factor = v[lead]; // rows are normalized to leading 1
                for (vc, &rc) in v.iter_mut().zip(row) {
                    *vc ^= self.field.mul(factor, rc);
                }
            }
        }
        match v.iter().position(|&x| x != 0) {
            Some(lead) => {
                let inv = self.field.inv(v[lead]).unwrap();
                for vc in v.iter_mut() {
                    *vc = self.field.mul(*vc, inv);
                }
                let at = self
                    .rows
                    .iter()
                    .position(|r| r.iter().position(|&x| x != 0).unwrap() > lead)
                    .unwrap_or(self.rows.len());
                self.rows.insert(at, v);
                true
            }
            None => false,
        }
    }
}
