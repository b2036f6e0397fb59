//! Good-basis measure and its brute-force verification oracle.
//!
//! For a finite-index submodule `M <= Z_p^r` with flag `U_i = <e_i, ..., e_r>`,
//! an upper-triangular matrix is a good basis of `M` when its rows `c_i, ...,
//! c_r` satisfy `<c_i, ..., c_r> = M /\ U_i` for every `i`. The set of good
//! bases is open in the space of upper-triangular integral matrices and has
//! Haar measure `(1 - 1/q)^r q^(-sum i*nu_i)`, where `nu` is the diagonal
//! profile of the canonical Hermite normal form of `M`.
//!
//! [`good_basis_count_mod`] counts residue matrices satisfying the predicate
//! verbatim over `Z/p^N`. For diagonal lattices any `N > max nu` makes
//! `count / p^(N r(r+1)/2)` equal the measure exactly. For lattices with
//! off-diagonal entries the required precision can be larger (up to
//! `nu_i + nu_j - v_p(c_ij)` in rank two), because the coset containing a
//! row is pinned down only once the leading entry is known to that depth;
//! the tests below pin both regimes.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::hnf::{hnf_reduce, HNFLattice};
use super::{PAdicContext, PadicError};

/// Exact Haar measure of the set of good bases for a lattice with diagonal
/// profile `lambda`: `(1 - 1/q)^r * q^(-sum_{i=1..r} i*lambda_i)` with `q = p`.
pub fn good_basis_measure(lambda: &[u32], ctx: &PAdicContext) -> BigRational {
    let q = BigInt::from(ctx.p());
    let r = lambda.len() as u32;
    let weighted: u64 = lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| (i as u64 + 1) * l as u64)
        .sum();
    let num = (q.clone() - BigInt::one()).pow(r);
    let den = q.pow(r + weighted as u32);
    BigRational::new(num, den)
}

/// Count upper-triangular matrices over `Z/p^N` whose rows form a good basis
/// of `lat` modulo `p^N`: row `i` must generate, together with the rows below
/// it, the image of `M /\ U_i` in `(Z/p^N)^(r-i+1)`.
///
/// The contract `count / p^(N r(r+1)/2) = good_basis_measure(profile)` holds
/// whenever `p^N`-residues determine membership in the row cosets; see the
/// module docs for when `N = max nu + 1` suffices.
pub fn good_basis_count_mod(
    lat: &HNFLattice,
    n_precision: u32,
    ctx: &PAdicContext,
) -> Result<BigUint, PadicError> {
    let r = lat.rank();
    let max_nu = lat.profile().iter().copied().max().unwrap_or(0);
    if n_precision <= max_nu {
        return Err(PadicError::PrecisionTooSmall {
            n: n_precision,
            max_nu,
        });
    }
    if !super::fits_prime_power(ctx.p(), n_precision) {
        return Err(PadicError::CapTooLarge {
            p: ctx.p(),
            cap: n_precision,
        });
    }
    let dim = (r * (r + 1) / 2) as u32;
    let space = BigUint::from(ctx.p()).pow(n_precision * dim);
    if space > BigUint::from(ctx.limit()) {
        return Err(PadicError::EnumerationTooLarge {
            predicted: space,
            limit: ctx.limit(),
        });
    }
    if r == 0 {
        return Ok(BigUint::one());
    }

    let pn = ctx.pow(n_precision);
    let rows = lat.rows(ctx);

    // Canonical image of M /\ U_i inside (Z/p^N)^(r-i), realized as the
    // lattice spanned by the trailing HNF rows together with p^N times the
    // identity.
    let targets: Vec<HNFLattice> = (0..r)
        .map(|i| {
            let width = r - i;
            let mut gens: Vec<Vec<i64>> = rows[i..].iter().map(|row| row[i..].to_vec()).collect();
            for j in 0..width {
                let mut e = vec![0i64; width];
                e[j] = pn;
                gens.push(e);
            }
            hnf_reduce(width, &gens, ctx).expect("p^N identity rows force full rank")
        })
        .collect();

    // DFS from the bottom row up; prune as soon as the trailing rows fail to
    // span their target.
    fn dfs(
        level: usize,
        r: usize,
        pn: i64,
        chosen: &mut Vec<Vec<i64>>,
        targets: &[HNFLattice],
        ctx: &PAdicContext,
    ) -> BigUint {
        let i = r - 1 - level; // row index being chosen
        let width = r - i;
        let mut total = BigUint::zero();
        let mut row = vec![0i64; width];
        loop {
            // span check: chosen rows are for indices i+1..r, each padded to
            // the current width on the left with zeros.
            let mut gens: Vec<Vec<i64>> = Vec::with_capacity(width + chosen.len() + 1);
            gens.push(row.clone());
            for (d, prev) in chosen.iter().enumerate() {
                let mut padded = vec![0i64; d + 1];
                padded.extend_from_slice(prev);
                debug_assert_eq!(padded.len(), width);
                gens.push(padded);
            }
            for j in 0..width {
                let mut e = vec![0i64; width];
                e[j] = pn;
                gens.push(e);
            }
            let span = hnf_reduce(width, &gens, ctx).expect("p^N identity rows force full rank");
            if span == targets[i] {
                if i == 0 {
                    total += BigUint::one();
                } else {
                    chosen.insert(0, row.clone());
                    total += dfs(level + 1, r, pn, chosen, targets, ctx);
                    chosen.remove(0);
                }
            }
            // odometer over the row entries
            let mut pos = width;
            loop {
                if pos == 0 {
                    return total;
                }
                pos -= 1;
                row[pos] += 1;
                if row[pos] < pn {
                    break;
                }
                row[pos] = 0;
            }
        }
    }

    let mut chosen: Vec<Vec<i64>> = Vec::new();
    Ok(dfs(0, r, pn, &mut chosen, &targets, ctx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn ratio(count: &BigUint, p: u64, n: u32, r: usize) -> BigRational {
        let dim = (r * (r + 1) / 2) as u32;
        BigRational::new(BigInt::from(count.clone()), BigInt::from(p).pow(n * dim))
    }

    #[test]
    fn measure_formula_values() {
        let ctx = PAdicContext::new(2, 6).unwrap();
        // r = 1, profile (k): (1 - 1/q) q^-k
        assert_eq!(
            good_basis_measure(&[3], &ctx),
            BigRational::new(BigInt::one(), BigInt::from(16))
        );
        // r = 2, zero profile: (1 - 1/q)^2
        assert_eq!(
            good_basis_measure(&[0, 0], &ctx),
            BigRational::new(BigInt::one(), BigInt::from(4))
        );
        // r = 2, profile (1,1), p = 2: (1/2)^2 * 2^-3 = 1/32
        assert_eq!(
            good_basis_measure(&[1, 1], &ctx),
            BigRational::new(BigInt::one(), BigInt::from(32))
        );
    }

    #[test]
    fn count_rank1_index_p() {
        // Only c = 2 generates 2Z/4Z; 1/4 = (1 - 1/2) * 2^-1.
        let ctx = PAdicContext::new(2, 6).unwrap();
        let lat = HNFLattice::diagonal(vec![1]);
        let count = good_basis_count_mod(&lat, 2, &ctx).unwrap();
        assert_eq!(count, BigUint::one());
        assert_eq!(ratio(&count, 2, 2, 1), good_basis_measure(&[1], &ctx));
    }

    #[test]
    fn count_rank1_full_p3() {
        // The units of Z/3; 2/3 = 1 - 1/3.
        let ctx = PAdicContext::new(3, 6).unwrap();
        let lat = HNFLattice::full(1);
        let count = good_basis_count_mod(&lat, 1, &ctx).unwrap();
        assert_eq!(count, BigUint::from_u64(2).unwrap());
        assert_eq!(ratio(&count, 3, 1, 1), good_basis_measure(&[0], &ctx));
    }

    #[test]
    fn count_rank2_full_quotients_correctly() {
        // The top-right entry of a good basis of the full lattice is
        // constrained modulo the row below it: the count is 2, not 4,
        // and 2/8 matches the measure (1 - 1/2)^2 = 1/4.
        let ctx = PAdicContext::new(2, 6).unwrap();
        let lat = HNFLattice::full(2);
        let count = good_basis_count_mod(&lat, 1, &ctx).unwrap();
        assert_eq!(count, BigUint::from_u64(2).unwrap());
        assert_eq!(ratio(&count, 2, 1, 2), good_basis_measure(&[0, 0], &ctx));
    }

    #[test]
    fn diagonal_lattices_are_exact_at_low_precision() {
        for p in [2u64, 3] {
            let ctx = PAdicContext::new(p, 8).unwrap().with_limit(100_000_000);
            for nu in [[0u32, 0], [1, 0], [0, 1], [1, 1], [2, 1]] {
                let lat = HNFLattice::diagonal(nu.to_vec());
                let maxnu = nu.iter().copied().max().unwrap();
                for n in [maxnu + 1, maxnu + 2] {
                    let count = good_basis_count_mod(&lat, n, &ctx).unwrap();
                    assert_eq!(
                        ratio(&count, p, n, 2),
                        good_basis_measure(&nu, &ctx),
                        "p={p} nu={nu:?} N={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn offdiagonal_lattice_needs_and_gets_full_precision() {
        // rows (2,1),(0,2): threshold nu_1 + nu_2 - v(c) = 2 = max nu + 1,
        // so both N = 2 and N = 3 are exact.
        let ctx = PAdicContext::new(2, 8).unwrap().with_limit(100_000_000);
        let skew = HNFLattice::new(vec![1, 1], vec![1], &ctx).unwrap();
        for n in [2, 3] {
            let count = good_basis_count_mod(&skew, n, &ctx).unwrap();
            assert_eq!(ratio(&count, 2, n, 2), good_basis_measure(&[1, 1], &ctx));
        }
        // rows (4,1),(0,4): threshold is 4; N = 3 overcounts, N = 4 is exact.
        let deep = HNFLattice::new(vec![2, 2], vec![1], &ctx).unwrap();
        let at3 = good_basis_count_mod(&deep, 3, &ctx).unwrap();
        assert!(ratio(&at3, 2, 3, 2) > good_basis_measure(&[2, 2], &ctx));
        let at4 = good_basis_count_mod(&deep, 4, &ctx).unwrap();
        assert_eq!(ratio(&at4, 2, 4, 2), good_basis_measure(&[2, 2], &ctx));
    }

    #[test]
    fn guards() {
        let ctx = PAdicContext::new(2, 6).unwrap();
        let lat = HNFLattice::diagonal(vec![2]);
        assert!(matches!(
            good_basis_count_mod(&lat, 2, &ctx),
            Err(PadicError::PrecisionTooSmall { .. })
        ));
        let tight = ctx.with_limit(2);
        assert!(matches!(
            good_basis_count_mod(&lat, 3, &tight),
            Err(PadicError::EnumerationTooLarge { .. })
        ));
    }
}
