//! Truncated multivariate Dirichlet series with exact rational coefficients.
//!
//! One formal variable `X_v = p^(-s_v)` per quiver vertex. A series is a
//! coefficient table over exponent tuples bounded by per-variable caps;
//! identities between zeta functions are checked coefficient by coefficient
//! at a fixed numeric prime. Exponent tuples are ordered graded-lex (total
//! degree first), which fixes the division recursion, every iteration order,
//! and the rendered output.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::padic::PAdicContext;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DirichletError {
    #[error("cap mismatch: {0:?} vs {1:?}")]
    CapMismatch(Vec<u32>, Vec<u32>),
    #[error("division requires constant coefficient 1, found {0}")]
    NonUnitConstantTerm(String),
}

/// Exponent tuple with graded-lexicographic ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Exp(pub Vec<u32>);

impl Exp {
    pub fn zero(nvars: usize) -> Self {
        Exp(vec![0; nvars])
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&k| k as u64).sum()
    }
}

impl Ord for Exp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Truncated Dirichlet series: exact rational coefficients indexed by
/// exponent tuples within per-variable caps. Absent tuples are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirichletPoly {
    caps: Vec<u32>,
    coeffs: BTreeMap<Exp, BigRational>,
}

impl DirichletPoly {
    /// The zero series.
    pub fn zero(caps: Vec<u32>) -> Self {
        DirichletPoly {
            caps,
            coeffs: BTreeMap::new(),
        }
    }

    /// The constant series 1.
    pub fn one(caps: Vec<u32>) -> Self {
        let n = caps.len();
        let mut s = Self::zero(caps);
        s.coeffs.insert(Exp::zero(n), BigRational::one());
        s
    }

    /// A single monomial; silently drops it if the exponent exceeds the caps.
    pub fn monomial(caps: Vec<u32>, exp: Exp, coeff: BigRational) -> Self {
        let mut s = Self::zero(caps);
        s.set(exp, coeff);
        s
    }

    pub fn caps(&self) -> &[u32] {
        &self.caps
    }

    pub fn nvars(&self) -> usize {
        self.caps.len()
    }

    fn in_caps(&self, exp: &Exp) -> bool {
        exp.0.len() == self.caps.len() && exp.0.iter().zip(&self.caps).all(|(k, cap)| k <= cap)
    }

    pub fn coeff(&self, exp: &Exp) -> BigRational {
        self.coeffs
            .get(exp)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Set a coefficient (dropping zeros and out-of-cap exponents).
    pub fn set(&mut self, exp: Exp, coeff: BigRational) {
        if !self.in_caps(&exp) {
            return;
        }
        if coeff.is_zero() {
            self.coeffs.remove(&exp);
        } else {
            self.coeffs.insert(exp, coeff);
        }
    }

    pub fn add_to(&mut self, exp: Exp, delta: BigRational) {
        if !self.in_caps(&exp) || delta.is_zero() {
            return;
        }
        match self.coeffs.entry(exp) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(delta);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += delta;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    /// Stored (nonzero) coefficients in graded-lex order.
    pub fn iter(&self) -> impl Iterator<Item = (&Exp, &BigRational)> {
        self.coeffs.iter()
    }

    /// Every exponent tuple within the caps, in graded-lex order.
    pub fn cap_box(caps: &[u32]) -> Vec<Exp> {
        let mut all = vec![Exp::zero(caps.len())];
        for (v, &cap) in caps.iter().enumerate() {
            let mut next = Vec::with_capacity(all.len() * (cap as usize + 1));
            for base in &all {
                for k in 0..=cap {
                    let mut e = base.clone();
                    e.0[v] = k;
                    next.push(e);
                }
            }
            all = next;
        }
        all.sort();
        all
    }

    fn check_caps(&self, other: &Self) -> Result<(), DirichletError> {
        if self.caps != other.caps {
            return Err(DirichletError::CapMismatch(
                self.caps.clone(),
                other.caps.clone(),
            ));
        }
        Ok(())
    }

    /// Convolution product; exponents beyond the caps are discarded.
    pub fn mul(&self, other: &Self) -> Result<Self, DirichletError> {
        self.check_caps(other)?;
        let mut out = Self::zero(self.caps.clone());
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let mut e = ea.clone();
                let mut ok = true;
                for (k, kb) in e.0.iter_mut().zip(&eb.0) {
                    *k += kb;
                }
                for (k, cap) in e.0.iter().zip(&self.caps) {
                    if k > cap {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    out.add_to(e, ca * cb);
                }
            }
        }
        Ok(out)
    }

    /// Sum of two series with equal caps.
    pub fn add(&self, other: &Self) -> Result<Self, DirichletError> {
        self.check_caps(other)?;
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            out.add_to(e.clone(), c.clone());
        }
        Ok(out)
    }

    /// The unique `c` with `b * c = a` up to the caps, for `b` with constant
    /// coefficient 1; computed by forward substitution on exponent tuples in
    /// graded-lex order.
    pub fn div(&self, b: &Self) -> Result<Self, DirichletError> {
        self.check_caps(b)?;
        let one_exp = Exp::zero(self.nvars());
        let b0 = b.coeff(&one_exp);
        if b0 != BigRational::one() {
            return Err(DirichletError::NonUnitConstantTerm(b0.to_string()));
        }
        let mut out = Self::zero(self.caps.clone());
        for k in Self::cap_box(&self.caps) {
            let mut acc = self.coeff(&k);
            // subtract b(j) * out(k - j) over 0 < j <= k componentwise
            for (j, bj) in &b.coeffs {
                if j == &one_exp {
                    continue;
                }
                if j.0.iter().zip(&k.0).all(|(a, b)| a <= b) {
                    let diff = Exp(k.0.iter().zip(&j.0).map(|(a, b)| a - b).collect());
                    let prev = out.coeff(&diff);
                    if !prev.is_zero() {
                        acc -= bj * &prev;
                    }
                }
            }
            out.set(k, acc);
        }
        Ok(out)
    }

    /// Substitute `s_v -> m * s_v` for each selected variable: the coefficient
    /// at `k` moves to `m * k`; exponents beyond the caps are discarded.
    pub fn scale_exponents(&self, m: u32, vars: &[usize]) -> Self {
        assert!(m >= 1, "exponent scale must be positive");
        let mut out = Self::zero(self.caps.clone());
        for (e, c) in &self.coeffs {
            let mut scaled = e.clone();
            for &v in vars {
                scaled.0[v] *= m;
            }
            out.add_to(scaled, c.clone());
        }
        out
    }

    /// Scale every variable.
    pub fn scale_all(&self, m: u32) -> Self {
        let vars: Vec<usize> = (0..self.nvars()).collect();
        self.scale_exponents(m, &vars)
    }

    /// Restrict to smaller caps, dropping coefficients beyond them. Caps are
    /// never coerced silently by the binary operations; this is the one
    /// explicit way to re-cap a series.
    pub fn restrict_caps(&self, new_caps: &[u32]) -> Self {
        assert_eq!(new_caps.len(), self.nvars(), "variable count must match");
        assert!(
            new_caps.iter().zip(&self.caps).all(|(n, o)| n <= o),
            "restriction cannot enlarge caps"
        );
        let mut out = Self::zero(new_caps.to_vec());
        for (e, c) in &self.coeffs {
            out.set(e.clone(), c.clone());
        }
        out
    }

    /// True when every stored coefficient is a non-negative integer (all
    /// zeta series are counting series).
    pub fn is_counting_series(&self) -> bool {
        self.coeffs
            .values()
            .all(|c| c.is_integer() && !c.is_negative())
    }

    /// First graded-lex exponent where the two series differ, with both
    /// coefficients; `None` when they agree everywhere within the caps.
    pub fn first_mismatch(&self, other: &Self) -> Option<(Exp, BigRational, BigRational)> {
        if self.caps != other.caps {
            return Some((
                Exp::zero(self.nvars()),
                self.coeff(&Exp::zero(self.nvars())),
                other.coeff(&Exp::zero(other.nvars())),
            ));
        }
        for k in Self::cap_box(&self.caps) {
            let a = self.coeff(&k);
            let b = other.coeff(&k);
            if a != b {
                return Some((k, a, b));
            }
        }
        None
    }

    /// TSV rows `k_1 ... k_r <tab> coefficient` in graded-lex order over the
    /// whole cap box, coefficients as exact integers or `num/den`.
    pub fn render_tsv(&self) -> String {
        let mut out = String::new();
        for k in Self::cap_box(&self.caps) {
            let c = self.coeff(&k);
            let ks: Vec<String> = k.0.iter().map(|x| x.to_string()).collect();
            out.push_str(&ks.join(" "));
            out.push('\t');
            out.push_str(&rational_to_string(&c));
            out.push('\n');
        }
        out
    }
}

/// `num/den`, or the plain integer when the denominator is 1.
pub fn rational_to_string(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for DirichletPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render_tsv())
    }
}

/// Truncated geometric series `sum_t (q^a X_v^step)^t = 1/(1 - q^a X_v^step)`.
fn geometric(caps: &[u32], var: usize, p: u64, ratio_exp: u32, step: u32) -> DirichletPoly {
    let mut s = DirichletPoly::zero(caps.to_vec());
    let q = BigInt::from(p);
    let mut t = 0u32;
    loop {
        let k = t.checked_mul(step).expect("exponent overflow");
        if k > caps[var] {
            break;
        }
        let mut e = Exp::zero(caps.len());
        e.0[var] = k;
        s.set(e, BigRational::from(q.pow(ratio_exp * t)));
        if step == 0 {
            break; // constant factor: only t = 0 is meaningful
        }
        t += 1;
    }
    s
}

/// Ideal zeta function of the free module `Z_p^n`, truncated: the expansion
/// of `prod_{i=0}^{n-1} (1 - q^i X_v)^(-1)` with `q = p`. `n = 0` gives 1.
pub fn abelian_zeta(n: u32, var: usize, ctx: &PAdicContext, caps: &[u32]) -> DirichletPoly {
    let mut s = DirichletPoly::one(caps.to_vec());
    for i in 0..n {
        let factor = geometric(caps, var, ctx.p(), i, 1);
        s = s.mul(&factor).expect("caps agree by construction");
    }
    s
}

/// Closed form for the amalgamated Heisenberg zeta function, truncated:
/// `abelian_zeta(2m) * 1/(1 - q^(2m) X^(2m+1))` in a single variable.
pub fn heisenberg_amalgam_zeta(m: u32, ctx: &PAdicContext, cap: u32) -> DirichletPoly {
    assert!(m >= 1, "amalgamation power must be positive");
    let caps = [cap];
    let ab = abelian_zeta(2 * m, 0, ctx, &caps);
    let tail = geometric(&caps, 0, ctx.p(), 2 * m, 2 * m + 1);
    ab.mul(&tail).expect("caps agree by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn rat(n: i64) -> BigRational {
        BigRational::from_i64(n).unwrap()
    }

    fn ctx(p: u64) -> PAdicContext {
        PAdicContext::new(p, 8).unwrap()
    }

    fn single(caps: u32, coeffs: &[i64]) -> DirichletPoly {
        let mut s = DirichletPoly::zero(vec![caps]);
        for (k, &c) in coeffs.iter().enumerate() {
            s.set(Exp(vec![k as u32]), rat(c));
        }
        s
    }

    #[test]
    fn graded_lex_order() {
        let mut exps = vec![
            Exp(vec![2, 0]),
            Exp(vec![0, 0]),
            Exp(vec![1, 1]),
            Exp(vec![0, 1]),
            Exp(vec![1, 0]),
            Exp(vec![0, 2]),
        ];
        exps.sort();
        assert_eq!(
            exps,
            vec![
                Exp(vec![0, 0]),
                Exp(vec![0, 1]),
                Exp(vec![1, 0]),
                Exp(vec![0, 2]),
                Exp(vec![1, 1]),
                Exp(vec![2, 0]),
            ]
        );
    }

    #[test]
    fn mul_identity_and_binomial() {
        let a = single(3, &[1, 5, 0, 2]);
        let one = DirichletPoly::one(vec![3]);
        assert_eq!(a.mul(&one).unwrap(), a);
        let x1 = single(2, &[1, 1]);
        assert_eq!(x1.mul(&x1).unwrap(), single(2, &[1, 2, 1]));
        // all-ones squared truncates to 1, 2, 3
        let ones = single(2, &[1, 1, 1]);
        assert_eq!(ones.mul(&ones).unwrap(), single(2, &[1, 2, 3]));
    }

    #[test]
    fn mul_rejects_cap_mismatch() {
        let a = DirichletPoly::one(vec![2]);
        let b = DirichletPoly::one(vec![3]);
        assert!(matches!(a.mul(&b), Err(DirichletError::CapMismatch(..))));
    }

    #[test]
    fn div_basics() {
        let a = single(3, &[1, 4, 2, 7]);
        assert_eq!(a.div(&a).unwrap(), DirichletPoly::one(vec![3]));
        // 1/(1 - X) is the all-ones series
        let geom = single(3, &[1, -1]);
        assert_eq!(
            DirichletPoly::one(vec![3]).div(&geom).unwrap(),
            single(3, &[1, 1, 1, 1])
        );
        let nonunit = single(3, &[2, 1]);
        assert!(matches!(
            a.div(&nonunit),
            Err(DirichletError::NonUnitConstantTerm(_))
        ));
    }

    #[test]
    fn div_zeta_ratio_expands_like_hand_series() {
        // (1+X)/(1-qX) at q = 2: coefficients 1, 1+q, q+q^2, q^2+q^3 -> 1, 3, 6, 12
        let c = ctx(2);
        let num = abelian_zeta(2, 0, &c, &[3]);
        let den = abelian_zeta(1, 0, &c, &[3]).scale_all(2);
        let ratio = num.div(&den).unwrap();
        assert_eq!(ratio, single(3, &[1, 3, 6, 12]));
    }

    #[test]
    fn scaling() {
        let a = single(2, &[1, 1]);
        assert_eq!(a.scale_all(1), a);
        assert_eq!(a.scale_all(2), single(2, &[1, 0, 1]));
        let ones = single(4, &[1, 1, 1, 1, 1]);
        assert_eq!(ones.scale_all(2), single(4, &[1, 0, 1, 0, 1]));
        // per-variable scaling
        let mut two = DirichletPoly::zero(vec![2, 2]);
        two.set(Exp(vec![1, 1]), rat(5));
        let scaled = two.scale_exponents(2, &[1]);
        assert_eq!(scaled.coeff(&Exp(vec![1, 2])), rat(5));
    }

    #[test]
    fn abelian_zeta_values() {
        let c2 = ctx(2);
        let c3 = ctx(3);
        // n = 1: all coefficients 1
        assert_eq!(abelian_zeta(1, 0, &c2, &[4]), single(4, &[1, 1, 1, 1, 1]));
        // n = 2, p = 3, k = 2: 1 + q + q^2 = 13
        assert_eq!(abelian_zeta(2, 0, &c3, &[3]).coeff(&Exp(vec![2])), rat(13));
        // n = 3, p = 2, k = 1: 1 + q + q^2 = 7
        assert_eq!(abelian_zeta(3, 0, &c2, &[2]).coeff(&Exp(vec![1])), rat(7));
        // n = 0 is the constant 1
        assert_eq!(abelian_zeta(0, 0, &c2, &[2]), DirichletPoly::one(vec![2]));
    }

    #[test]
    fn heisenberg_closed_form_values() {
        let c2 = ctx(2);
        // m = 1, p = 2: abelian rank-2 part (1, 3, 7, 15) plus q^2 X^3.
        let z = heisenberg_amalgam_zeta(1, &c2, 5);
        assert_eq!(z.coeff(&Exp(vec![0])), rat(1));
        assert_eq!(z.coeff(&Exp(vec![1])), rat(3));
        assert_eq!(z.coeff(&Exp(vec![2])), rat(7));
        assert_eq!(z.coeff(&Exp(vec![3])), rat(19));
        assert_eq!(z.coeff(&Exp(vec![4])), rat(43));
        assert_eq!(z.coeff(&Exp(vec![5])), rat(91));
        // m = 2: rank-4 abelian part 1, 15, 155, 1395, 11811, 97155 with the
        // q^4 X^5 tail adding 16 at k = 5.
        let z2 = heisenberg_amalgam_zeta(2, &c2, 5);
        for (k, want) in [1, 15, 155, 1395, 11811, 97171].into_iter().enumerate() {
            assert_eq!(z2.coeff(&Exp(vec![k as u32])), rat(want), "k = {k}");
        }
        // any m: constant term 1
        let z3 = heisenberg_amalgam_zeta(3, &ctx(3), 2);
        assert_eq!(z3.coeff(&Exp(vec![0])), rat(1));
    }

    #[test]
    fn restriction_is_the_only_recap() {
        let c2 = ctx(2);
        let wide = abelian_zeta(2, 0, &c2, &[4]);
        let narrow = wide.restrict_caps(&[2]);
        assert_eq!(narrow, abelian_zeta(2, 0, &c2, &[2]));
        // binary ops refuse mismatched caps rather than coercing
        assert!(wide.mul(&narrow).is_err());
        assert!(narrow.mul(&wide.restrict_caps(&[2])).is_ok());
    }

    #[test]
    fn abelian_coefficients_increase_with_rank() {
        for p in [2u64, 3] {
            let c = ctx(p);
            for n in 1..=3u32 {
                let smaller = abelian_zeta(n, 0, &c, &[5]);
                let larger = abelian_zeta(n + 1, 0, &c, &[5]);
                for k in 0..=5u32 {
                    let e = Exp(vec![k]);
                    assert!(smaller.coeff(&e) <= larger.coeff(&e), "n={n} k={k} p={p}");
                }
            }
        }
    }

    #[test]
    fn counting_series_predicate() {
        let c2 = ctx(2);
        assert!(abelian_zeta(3, 0, &c2, &[4]).is_counting_series());
        let mut neg = DirichletPoly::zero(vec![1]);
        neg.set(Exp(vec![1]), rat(-1));
        assert!(!neg.is_counting_series());
    }

    #[test]
    fn tsv_rendering() {
        let mut s = DirichletPoly::zero(vec![1, 1]);
        s.set(Exp(vec![0, 0]), rat(1));
        s.set(
            Exp(vec![1, 1]),
            BigRational::new(BigInt::from(1), BigInt::from(2)),
        );
        assert_eq!(s.render_tsv(), "0 0\t1\n0 1\t0\n1 0\t0\n1 1\t1/2\n");
    }
}
