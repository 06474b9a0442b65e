//! Maximum bin-size with bunching.
//!
//! `r` unlabeled balls are thrown uniformly at `n` labeled bins; the first
//! `b*m` bins are bunched into `m` artificial bins of `b` real bins each.
//! With `Z` the maximum artificial-bin size, `rho = E[Z]` and
//! `phi = Pr[Z >= 1]`. Both are inclusion-exclusion sums over terms
//! `A_{i,l}`; the l-fold constrained multinomial sum inside each term is
//! evaluated by a DP over (bins processed, balls allocated), which is
//! polynomial instead of exponential in l.
//!
//! Alternating sums cancel catastrophically in floating point, so the exact
//! rational path is the default; the float path uses compensated summation
//! and is opt-in for large parameters.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Default elementary-step allowance for exact evaluation (`r*r*m` must not
/// exceed it).
pub const DEFAULT_WORK_BUDGET: u64 = 1_000_000_000;

/// Guard for the brute-force oracle enumeration.
pub const BRUTEFORCE_GUARD: u64 = 1_000_000;

/// Balls-and-bins parameters. `b * m <= n` is required.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OccupancyParams {
    pub n: u64,
    pub r: u64,
    pub m: u64,
    pub b: u64,
}

impl OccupancyParams {
    pub fn new(n: u64, r: u64, m: u64, b: u64) -> Result<Self> {
        if n == 0 || r == 0 || m == 0 || b == 0 {
            return Err(Error::parameter("occupancy parameters must all be positive"));
        }
        if b * m > n {
            return Err(Error::parameter(format!(
                "bunching b*m = {} exceeds the number of bins n = {n}",
                b * m
            )));
        }
        Ok(OccupancyParams { n, r, m, b })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    Float,
}

/// rho/phi value in the arithmetic the caller picked.
#[derive(Clone, Debug)]
pub enum OccupancyValue {
    Exact(BigRational),
    Float(f64),
}

impl OccupancyValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            OccupancyValue::Exact(x) => rational_to_f64(x),
            OccupancyValue::Float(x) => *x,
        }
    }
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    let num = x.numer();
    let den = x.denom();
    // scale down big integers through strings only when they fit; otherwise
    // divide via 64-bit mantissa extraction
    bigint_to_f64(num) / bigint_to_f64(den)
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    let (sign, digits) = x.to_u64_digits();
    let mut acc = 0.0f64;
    for &d in digits.iter().rev() {
        acc = acc * 1.8446744073709552e19 + d as f64;
    }
    if sign == num_bigint::Sign::Minus {
        -acc
    } else {
        acc
    }
}

fn big_factorials(upto: u64) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(upto as usize + 1);
    let mut acc = BigInt::one();
    out.push(acc.clone());
    for i in 1..=upto {
        acc *= i;
        out.push(acc.clone());
    }
    out
}

fn big_binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn rat(p: u64, q: u64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// x^e with the 0^0 = 1 convention used throughout the multinomial sums.
fn rat_pow(x: &BigRational, e: u64) -> BigRational {
    if e == 0 {
        return BigRational::one();
    }
    if x.is_zero() {
        return BigRational::zero();
    }
    let mut base = x.clone();
    let mut e = e;
    let mut acc = BigRational::one();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

fn f64_pow00(x: f64, e: u64) -> f64 {
    if e == 0 {
        1.0
    } else {
        x.powi(e as i32)
    }
}

fn check_a_term_args(p: &OccupancyParams, i: u64, ell: u64) -> Result<()> {
    if ell < 1 || ell > p.m {
        return Err(Error::parameter(format!("need 1 <= l <= m = {}, got l = {ell}", p.m)));
    }
    if i < 1 || i > p.r / ell {
        return Err(Error::parameter(format!(
            "need 1 <= i <= floor(r/l) = {}, got i = {i}",
            p.r / ell
        )));
    }
    if ell * p.b > p.n {
        return Err(Error::parameter(format!(
            "degenerate probability: l*b = {} exceeds n = {}",
            ell * p.b,
            p.n
        )));
    }
    Ok(())
}

/// Inclusion-exclusion term A_{i,l} as an exact rational.
pub fn a_term_exact(p: &OccupancyParams, i: u64, ell: u64) -> Result<BigRational> {
    check_a_term_args(p, i, ell)?;
    let r = p.r as usize;
    let fact = big_factorials(p.r);
    let inv_fact: Vec<BigRational> = fact
        .iter()
        .map(|f| BigRational::new(BigInt::one(), f.clone()))
        .collect();

    // w[u] = sum over (k_1..k_j >= i, sum k = u) of prod 1/k_z!
    let mut w = vec![BigRational::zero(); r + 1];
    w[0] = BigRational::one();
    for _ in 0..ell {
        let mut next = vec![BigRational::zero(); r + 1];
        for u in 0..=r {
            if w[u].is_zero() {
                continue;
            }
            for c in i as usize..=r - u {
                let add = &w[u] * &inv_fact[c];
                next[u + c] += add;
            }
        }
        w = next;
    }

    let b_over_n = rat(p.b, p.n);
    let rest = BigRational::one() - rat(ell * p.b, p.n);
    let mut sum = BigRational::zero();
    for u in (ell * i) as usize..=r {
        if w[u].is_zero() {
            continue;
        }
        // r! / (r-u)! * w[u] * (b/n)^u * (1 - l b/n)^(r-u)
        let falling = BigRational::from(&fact[r] / &fact[r - u]);
        sum += falling * &w[u] * rat_pow(&b_over_n, u as u64) * rat_pow(&rest, (r - u) as u64);
    }

    let scaled = BigRational::from(big_binomial(p.m, ell)) * sum;
    Ok(if ell % 2 == 1 { scaled } else { -scaled })
}

/// A_{i,l} in floating point (same DP, compensated summation at the end).
pub fn a_term_float(p: &OccupancyParams, i: u64, ell: u64) -> Result<f64> {
    check_a_term_args(p, i, ell)?;
    let r = p.r as usize;
    let mut log_fact = vec![0.0f64; r + 1];
    for c in 1..=r {
        log_fact[c] = log_fact[c - 1] + (c as f64).ln();
    }
    let mut w = vec![0.0f64; r + 1];
    w[0] = 1.0;
    for _ in 0..ell {
        let mut next = vec![0.0f64; r + 1];
        for u in 0..=r {
            if w[u] == 0.0 {
                continue;
            }
            for c in i as usize..=r - u {
                next[u + c] += w[u] * (-log_fact[c]).exp();
            }
        }
        w = next;
    }
    let b_over_n = p.b as f64 / p.n as f64;
    let rest = 1.0 - (ell * p.b) as f64 / p.n as f64;
    let mut sum = KahanSum::default();
    for u in (ell * i) as usize..=r {
        if w[u] == 0.0 {
            continue;
        }
        let falling = (log_fact[r] - log_fact[r - u]).exp();
        sum.add(falling * w[u] * f64_pow00(b_over_n, u as u64) * f64_pow00(rest, (r - u) as u64));
    }
    let mut binom = 1.0f64;
    for j in 0..ell {
        binom = binom * (p.m - j) as f64 / (j + 1) as f64;
    }
    let v = binom * sum.value();
    Ok(if ell % 2 == 1 { v } else { -v })
}

fn check_budget(p: &OccupancyParams, budget: u64) -> Result<()> {
    // the full inclusion-exclusion evaluation costs about sum_l (r/l) DP
    // sweeps of l*r^2 cells each, i.e. m*r^3 elementary steps
    let work = (p.m as u128) * (p.r as u128).pow(3);
    if work > budget as u128 {
        return Err(Error::infeasible(format!(
            "exact occupancy work m*r^3 = {work} exceeds the budget {budget}; \
             estimate by Monte Carlo instead"
        )));
    }
    Ok(())
}

/// E[Z], exact. Refuses when `r*r*m` exceeds `budget`.
pub fn rho_exact(p: &OccupancyParams, budget: u64) -> Result<BigRational> {
    check_budget(p, budget)?;
    let mut sum = BigRational::zero();
    for ell in 1..=p.m {
        for i in 1..=p.r / ell {
            sum += a_term_exact(p, i, ell)?;
        }
    }
    Ok(sum)
}

/// Pr[Z >= 1], exact. Terms with l > r are empty sums and contribute zero.
pub fn phi_exact(p: &OccupancyParams, budget: u64) -> Result<BigRational> {
    check_budget(p, budget)?;
    let mut sum = BigRational::zero();
    for ell in 1..=p.m.min(p.r) {
        sum += a_term_exact(p, 1, ell)?;
    }
    Ok(sum)
}

/// E[Z] in floating point with compensated summation over the (l, i) terms.
pub fn rho_float(p: &OccupancyParams) -> Result<f64> {
    let mut sum = KahanSum::default();
    for ell in 1..=p.m {
        for i in 1..=p.r / ell {
            sum.add(a_term_float(p, i, ell)?);
        }
    }
    Ok(sum.value())
}

pub fn phi_float(p: &OccupancyParams) -> Result<f64> {
    let mut sum = KahanSum::default();
    for ell in 1..=p.m.min(p.r) {
        sum.add(a_term_float(p, 1, ell)?);
    }
    Ok(sum.value())
}

pub fn rho(p: &OccupancyParams, mode: EvalMode, budget: u64) -> Result<OccupancyValue> {
    match mode {
        EvalMode::Exact => Ok(OccupancyValue::Exact(rho_exact(p, budget)?)),
        EvalMode::Float => Ok(OccupancyValue::Float(rho_float(p)?)),
    }
}

pub fn phi(p: &OccupancyParams, mode: EvalMode, budget: u64) -> Result<OccupancyValue> {
    match mode {
        EvalMode::Exact => Ok(OccupancyValue::Exact(phi_exact(p, budget)?)),
        EvalMode::Float => Ok(OccupancyValue::Float(phi_float(p)?)),
    }
}

/// Closed form for phi: 1 - (1 - bm/n)^r. Used as an independent oracle.
pub fn phi_closed_form(p: &OccupancyParams) -> BigRational {
    BigRational::one() - rat_pow(&(BigRational::one() - rat(p.b * p.m, p.n)), p.r)
}

/// Exact (rho, phi) by direct enumeration of the multinomial distribution.
/// Independent of the inclusion-exclusion path; guarded for small cases.
pub fn occupancy_bruteforce(p: &OccupancyParams) -> Result<(BigRational, BigRational)> {
    let nu = p.n - p.b * p.m + p.m;
    let states = crate::erasures::binomial(p.r + nu - 1, nu - 1);
    if states > BRUTEFORCE_GUARD {
        return Err(Error::parameter(format!(
            "brute-force enumeration of {states} compositions exceeds the guard {BRUTEFORCE_GUARD}"
        )));
    }

    // The n - b*m unbunched bins never enter the maximum, so they are lumped
    // into a single rest bin; the joint law of the m artificial bins is
    // unchanged.
    let fact = big_factorials(p.r);
    let b_over_n = rat(p.b, p.n);
    let rest_prob = rat(p.n - p.b * p.m, p.n);
    let mut expect = BigRational::zero();
    let mut tail = BigRational::zero();

    let mut counts = vec![0u64; p.m as usize];
    enumerate_counts(&mut counts, 0, p.r, &mut |counts, used| {
        let rest = p.r - used;
        let mut coef = fact[p.r as usize].clone();
        for &k in counts.iter() {
            coef /= &fact[k as usize];
        }
        coef /= &fact[rest as usize];
        let prob = BigRational::from(coef)
            * rat_pow(&b_over_n, used)
            * rat_pow(&rest_prob, rest);
        let max = counts.iter().copied().max().unwrap_or(0);
        expect += BigRational::from(BigInt::from(max)) * &prob;
        if max >= 1 {
            tail += prob;
        }
    });

    Ok((expect, tail))
}

fn enumerate_counts(counts: &mut Vec<u64>, idx: usize, remaining: u64, f: &mut impl FnMut(&[u64], u64)) {
    if idx == counts.len() {
        let used: u64 = counts.iter().sum();
        f(counts, used);
        return;
    }
    for k in 0..=remaining {
        counts[idx] = k;
        enumerate_counts(counts, idx + 1, remaining - k, f);
    }
    counts[idx] = 0;
}

/// Compensated (Kahan) float accumulator.
#[derive(Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn r64(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn a_term_small_cases() {
        let p = OccupancyParams::new(4, 3, 2, 1).unwrap();
        assert_eq!(a_term_exact(&p, 1, 1).unwrap(), r64(37, 32));

        let p = OccupancyParams::new(2, 2, 2, 1).unwrap();
        assert_eq!(a_term_exact(&p, 1, 1).unwrap(), r64(3, 2));
        assert_eq!(a_term_exact(&p, 1, 2).unwrap(), r64(-1, 2));
        assert_eq!(a_term_exact(&p, 2, 1).unwrap(), r64(1, 2));
    }

    #[test]
    fn a_term_sign_follows_parity() {
        let p = OccupancyParams::new(6, 5, 3, 1).unwrap();
        for i in 1..=5 {
            assert!(a_term_exact(&p, i, 1).unwrap().is_positive());
        }
        for i in 1..=2 {
            assert!(a_term_exact(&p, i, 2).unwrap().is_negative());
        }
    }

    #[test]
    fn rho_small_cases() {
        let p = OccupancyParams::new(2, 2, 2, 1).unwrap();
        assert_eq!(rho_exact(&p, DEFAULT_WORK_BUDGET).unwrap(), r64(3, 2));

        // single artificial bin covering the whole table holds every ball
        for (n, r) in [(3u64, 4u64), (5, 2), (2, 7)] {
            let p = OccupancyParams::new(n, r, 1, n).unwrap();
            assert_eq!(rho_exact(&p, DEFAULT_WORK_BUDGET).unwrap(), BigRational::from(BigInt::from(r)));
        }

        let p = OccupancyParams::new(4, 1, 2, 1).unwrap();
        assert_eq!(rho_exact(&p, DEFAULT_WORK_BUDGET).unwrap(), r64(1, 2));
    }

    #[test]
    fn phi_matches_closed_form() {
        let p = OccupancyParams::new(4, 3, 2, 1).unwrap();
        assert_eq!(phi_exact(&p, DEFAULT_WORK_BUDGET).unwrap(), r64(7, 8));
        assert_eq!(phi_closed_form(&p), r64(7, 8));

        let p = OccupancyParams::new(6, 4, 3, 2).unwrap();
        assert_eq!(phi_exact(&p, DEFAULT_WORK_BUDGET).unwrap(), BigRational::one());
    }

    #[test]
    fn bruteforce_small_cases() {
        // all bins bunched: the maximum is >= 1 whenever a ball exists
        let p = OccupancyParams::new(2, 2, 2, 1).unwrap();
        let (rho_bf, phi_bf) = occupancy_bruteforce(&p).unwrap();
        assert_eq!(rho_bf, r64(3, 2));
        assert_eq!(phi_bf, BigRational::one());
        assert_eq!(phi_closed_form(&p), BigRational::one());

        let p = OccupancyParams::new(2, 2, 1, 2).unwrap();
        let (rho_bf, phi_bf) = occupancy_bruteforce(&p).unwrap();
        assert_eq!(rho_bf, r64(2, 1));
        assert_eq!(phi_bf, BigRational::one());

        let p = OccupancyParams::new(4, 3, 2, 1).unwrap();
        let (_, phi_bf) = occupancy_bruteforce(&p).unwrap();
        assert_eq!(phi_bf, r64(7, 8));
    }

    #[test]
    fn oracle_agreement_on_grid() {
        // full agreement grid lives in the acceptance suite; spot-check here
        for (n, r, m, b) in [(4u64, 5u64, 2u64, 2u64), (5, 6, 2, 2), (6, 4, 3, 1), (3, 8, 3, 1)] {
            let p = OccupancyParams::new(n, r, m, b).unwrap();
            let (rho_bf, phi_bf) = occupancy_bruteforce(&p).unwrap();
            assert_eq!(rho_exact(&p, DEFAULT_WORK_BUDGET).unwrap(), rho_bf, "rho {p:?}");
            assert_eq!(phi_exact(&p, DEFAULT_WORK_BUDGET).unwrap(), phi_bf, "phi {p:?}");
            assert_eq!(phi_closed_form(&p), phi_bf, "phi closed form {p:?}");
        }
    }

    #[test]
    fn float_tracks_exact() {
        for (n, r, m, b) in [(4u64, 5u64, 2u64, 2u64), (6, 8, 3, 2), (5, 7, 5, 1)] {
            let p = OccupancyParams::new(n, r, m, b).unwrap();
            let exact = rational_to_f64(&rho_exact(&p, DEFAULT_WORK_BUDGET).unwrap());
            let float = rho_float(&p).unwrap();
            assert!((exact - float).abs() <= 1e-9 * exact.abs().max(1.0), "{p:?}: {exact} vs {float}");
            let exact = rational_to_f64(&phi_exact(&p, DEFAULT_WORK_BUDGET).unwrap());
            let float = phi_float(&p).unwrap();
            assert!((exact - float).abs() <= 1e-9 * exact.abs().max(1.0), "{p:?}: {exact} vs {float}");
        }
    }

    #[test]
    fn monotone_in_r_and_bunching() {
        let mut prev = BigRational::zero();
        for r in 1..=8u64 {
            let p = OccupancyParams::new(6, r, 2, 1).unwrap();
            let v = rho_exact(&p, DEFAULT_WORK_BUDGET).unwrap();
            assert!(v >= prev, "rho not nondecreasing in r at {r}");
            prev = v;
        }
        // growing the bunched region cannot shrink the expected maximum
        let base = rho_exact(&OccupancyParams::new(6, 5, 2, 1).unwrap(), DEFAULT_WORK_BUDGET).unwrap();
        let bigger = rho_exact(&OccupancyParams::new(6, 5, 2, 2).unwrap(), DEFAULT_WORK_BUDGET).unwrap();
        assert!(bigger >= base);
    }

    #[test]
    fn bounds_phi_le_rho_le_r() {
        for (n, r, m, b) in [(5u64, 4u64, 2u64, 1u64), (6, 8, 2, 3), (4, 6, 4, 1)] {
            let p = OccupancyParams::new(n, r, m, b).unwrap();
            let rho = rho_exact(&p, DEFAULT_WORK_BUDGET).unwrap();
            let phi = phi_exact(&p, DEFAULT_WORK_BUDGET).unwrap();
            assert!(phi >= BigRational::zero() && phi <= BigRational::one());
            assert!(phi <= rho);
            assert!(rho <= BigRational::from(BigInt::from(r)));
        }
    }

    #[test]
    fn budget_and_guard_errors() {
        let p = OccupancyParams::new(4368, 2048, 4368, 1).unwrap();
        let err = rho_exact(&p, DEFAULT_WORK_BUDGET).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");

        let p = OccupancyParams::new(600, 40, 300, 2).unwrap();
        assert!(occupancy_bruteforce(&p).is_err());

        assert!(OccupancyParams::new(4, 3, 3, 2).is_err()); // b*m > n
        let p = OccupancyParams::new(6, 6, 2, 1).unwrap();
        assert!(a_term_exact(&p, 4, 2).is_err()); // i > r/l
    }
}
