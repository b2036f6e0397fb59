//! Canonical Hermite-normal-form lattices and their operations.
//!
//! A finite-index submodule of `Z_p^r` has a unique generating matrix that is
//! upper triangular, has diagonal entries `p^nu_i`, and has each entry above
//! the diagonal of column `j` reduced into `{0, ..., p^nu_j - 1}`. Two
//! [`HNFLattice`] values are equal iff they describe the same submodule, so
//! the type is freely usable as a map key.
//!
//! All mutating arithmetic on generator rows happens modulo `p^(sum nu_i)`:
//! the quotient `Z_p^r / L` has exponent dividing the index, so membership
//! and span questions are insensitive to that reduction. This keeps every
//! intermediate value inside a machine word (the context guards `p^cap`).

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{PAdicContext, PadicError};

/// Canonical Hermite normal form of a finite-index submodule of `Z_p^r`.
///
/// `diag[i]` is the exponent `nu_i` (the diagonal entry is `p^nu_i`);
/// `offdiag` stores the above-diagonal entries row-major, entry `(i, j)`
/// (for `i < j`) lying in `{0, ..., p^nu_j - 1}`. The rank-0 lattice is the
/// unique empty lattice with index exponent 0.
///
/// Values are canonical only relative to a fixed prime; mixing lattices
/// built under different contexts is a caller bug.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HNFLattice {
    diag: Vec<u32>,
    offdiag: Vec<i64>,
}

impl HNFLattice {
    /// The full lattice `Z_p^rank`.
    pub fn full(rank: usize) -> Self {
        Self::diagonal(vec![0; rank])
    }

    /// Diagonal lattice with rows `p^nu_i e_i`.
    pub fn diagonal(profile: Vec<u32>) -> Self {
        let rank = profile.len();
        HNFLattice {
            diag: profile,
            offdiag: vec![0; rank * rank.saturating_sub(1) / 2],
        }
    }

    /// Build from parts, validating the canonical entry ranges and the
    /// word-size bound on the total index.
    pub fn new(diag: Vec<u32>, offdiag: Vec<i64>, ctx: &PAdicContext) -> Result<Self, PadicError> {
        let rank = diag.len();
        if offdiag.len() != rank * rank.saturating_sub(1) / 2 {
            return Err(PadicError::LengthMismatch {
                rank: rank * rank.saturating_sub(1) / 2,
                got: offdiag.len(),
            });
        }
        if !super::fits_prime_power(ctx.p(), diag.iter().sum()) {
            return Err(PadicError::EntryOverflow);
        }
        let lat = HNFLattice { diag, offdiag };
        for i in 0..rank {
            for j in (i + 1)..rank {
                let bound = ctx.pow(lat.diag[j]);
                let c = lat.entry(i, j);
                if c < 0 || c >= bound {
                    return Err(PadicError::EntryOverflow);
                }
            }
        }
        Ok(lat)
    }

    pub fn rank(&self) -> usize {
        self.diag.len()
    }

    /// Diagonal exponent profile `(nu_1, ..., nu_r)`.
    pub fn profile(&self) -> &[u32] {
        &self.diag
    }

    /// Index exponent: the index of the lattice is `p^index_exp`.
    pub fn index_exp(&self) -> u32 {
        self.diag.iter().sum()
    }

    fn off_idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.rank());
        let r = self.rank();
        i * r - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Entry of the canonical generating matrix at `(i, j)`, `i < j`.
    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.offdiag[self.off_idx(i, j)]
    }

    /// Materialize the canonical generator rows.
    pub fn rows(&self, ctx: &PAdicContext) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        self.write_rows_into(ctx, &mut out);
        out
    }

    /// Write the generator rows into a reusable buffer without reallocating
    /// in steady state.
    pub(crate) fn write_rows_into(&self, ctx: &PAdicContext, out: &mut Vec<Vec<i64>>) {
        let r = self.rank();
        out.resize_with(r, Vec::new);
        for i in 0..r {
            let row = &mut out[i];
            row.clear();
            row.resize(r, 0);
            row[i] = ctx.pow(self.diag[i]);
            for j in (i + 1)..r {
                row[j] = self.entry(i, j);
            }
        }
        out.truncate(r);
    }

    pub(crate) fn offdiag_mut(&mut self) -> &mut [i64] {
        &mut self.offdiag
    }
}

/// Index exponent of a lattice (`[Z_p^r : L] = p^index_exp`).
pub fn index_exp(lat: &HNFLattice) -> u32 {
    lat.index_exp()
}

/// Test whether `vec` lies in the `Z_p`-row span of `lat`.
///
/// Back-substitution column by column: at column `j` the running remainder
/// must be exactly divisible by `p^nu_j`. Arithmetic is carried modulo
/// `p^index_exp`, which the quotient cannot see.
pub fn contains_vector(lat: &HNFLattice, vec: &[i64], ctx: &PAdicContext) -> bool {
    let r = lat.rank();
    assert_eq!(vec.len(), r, "vector length must equal lattice rank");
    if r <= 16 {
        let mut rem = [0i64; 16];
        contains_with(lat, vec, ctx, &mut rem[..r])
    } else {
        let mut rem = vec![0i64; r];
        contains_with(lat, vec, ctx, &mut rem)
    }
}

fn contains_with(lat: &HNFLattice, vec: &[i64], ctx: &PAdicContext, rem: &mut [i64]) -> bool {
    let r = lat.rank();
    if r == 0 {
        return true;
    }
    let modulus = ctx.pow(lat.index_exp());
    for (slot, &x) in rem.iter_mut().zip(vec) {
        *slot = x.rem_euclid(modulus);
    }
    for j in 0..r {
        let pj = ctx.pow(lat.diag[j]);
        if rem[j] % pj != 0 {
            return false;
        }
        let a = rem[j] / pj;
        if a != 0 {
            rem[j] = 0;
            for col in (j + 1)..r {
                rem[col] = (rem[col] - a * lat.entry(j, col)).rem_euclid(modulus);
            }
        }
    }
    true
}

/// Test whether every row of a set lies in `outer`.
pub fn contains_rows(outer: &HNFLattice, rows: &[Vec<i64>], ctx: &PAdicContext) -> bool {
    rows.iter().all(|row| contains_vector(outer, row, ctx))
}

/// Test whether `inner` is a submodule of `outer` (equal ranks required).
pub fn contains_lattice(outer: &HNFLattice, inner: &HNFLattice, ctx: &PAdicContext) -> bool {
    assert_eq!(outer.rank(), inner.rank(), "lattice ranks must match");
    contains_rows(outer, &inner.rows(ctx), ctx)
}

fn bigint_valuation(x: &BigInt, p: &BigInt) -> Option<u64> {
    if x.is_zero() {
        return None;
    }
    let mut x = x.clone();
    let mut v = 0u64;
    loop {
        let (q, r) = num_integer::Integer::div_rem(&x, p);
        if !r.is_zero() {
            return Some(v);
        }
        x = q;
        v += 1;
    }
}

fn rational_valuation(x: &BigRational, p: &BigInt) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let vn = bigint_valuation(x.numer(), p).unwrap() as i64;
    let vd = bigint_valuation(x.denom(), p).unwrap() as i64;
    Some(vn - vd)
}

/// Canonical residue of a p-integral rational modulo `p^e`, in `{0, ..., p^e - 1}`.
fn canonical_residue(y: &BigRational, pe: i64) -> i64 {
    if pe == 1 {
        return 0;
    }
    let m = BigInt::from(pe);
    let a = num_integer::Integer::mod_floor(y.numer(), &m)
        .to_i64()
        .unwrap();
    let b = num_integer::Integer::mod_floor(y.denom(), &m)
        .to_i64()
        .unwrap();
    let inv = mod_inverse(b, pe);
    (a as i128 * inv as i128).rem_euclid(pe as i128) as i64
}

/// Inverse of `a` modulo `m` for `gcd(a, m) = 1`.
fn mod_inverse(a: i64, m: i64) -> i64 {
    let e = num_integer::Integer::extended_gcd(&a.rem_euclid(m), &m);
    debug_assert!(e.gcd == 1, "element not invertible");
    e.x.rem_euclid(m)
}

/// Canonicalize the `Z_p`-span of integer rows into Hermite normal form.
///
/// Pivoting is on p-adic valuation; above-diagonal entries are then reduced
/// into the least non-negative residues. Rejects rank-deficient input (the
/// span would have infinite index).
pub fn hnf_reduce(
    rank: usize,
    rows: &[Vec<i64>],
    ctx: &PAdicContext,
) -> Result<HNFLattice, PadicError> {
    for row in rows {
        if row.len() != rank {
            return Err(PadicError::LengthMismatch {
                rank,
                got: row.len(),
            });
        }
    }
    if rank == 0 {
        return Ok(HNFLattice::full(0));
    }
    let p = BigInt::from(ctx.p());
    let mut work: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|&x| BigRational::from(BigInt::from(x)))
                .collect()
        })
        .collect();

    // Stage 1: triangularize. Pivot at column j on minimal valuation, scale
    // the pivot row so its leading entry is exactly p^nu_j (dividing by a
    // p-adic unit, which preserves the span), then clear the column.
    let mut tri: Vec<Vec<BigRational>> = Vec::with_capacity(rank);
    let mut profile: Vec<u32> = Vec::with_capacity(rank);
    for j in 0..rank {
        let pivot_pos = work
            .iter()
            .enumerate()
            .filter_map(|(idx, row)| rational_valuation(&row[j], &p).map(|v| (v, idx)))
            .min()
            .map(|(_, idx)| idx);
        let Some(pos) = pivot_pos else {
            return Err(PadicError::RankDeficient);
        };
        let mut pivot = work.swap_remove(pos);
        let nu = rational_valuation(&pivot[j], &p).unwrap();
        // rows stay p-integral: every row operation multiplies by a unit or
        // subtracts a p-integral multiple
        debug_assert!(nu >= 0, "elimination broke p-integrality");
        let nu = nu as u32;
        let lead = BigRational::from(p.pow(nu)) / pivot[j].clone();
        for e in pivot.iter_mut() {
            *e *= lead.clone();
        }
        for row in work.iter_mut() {
            if !row[j].is_zero() {
                let mult = row[j].clone() / pivot[j].clone();
                for col in j..rank {
                    let delta = mult.clone() * pivot[col].clone();
                    row[col] -= delta;
                }
            }
        }
        profile.push(nu);
        tri.push(pivot);
    }

    let total: u32 = profile.iter().sum();
    if !super::fits_prime_power(ctx.p(), total) {
        return Err(PadicError::EntryOverflow);
    }

    // Stage 2: reduce above-diagonal entries to canonical residues, bottom up.
    for i in (0..rank.saturating_sub(1)).rev() {
        for j in (i + 1)..rank {
            let pe = ctx.pow(profile[j]);
            let c = canonical_residue(&tri[i][j], pe);
            let m = (tri[i][j].clone() - BigRational::from(BigInt::from(c)))
                / BigRational::from(BigInt::from(pe));
            if !m.is_zero() {
                let lower = tri[j].clone();
                for col in j..rank {
                    let delta = m.clone() * lower[col].clone();
                    tri[i][col] -= delta;
                }
            }
        }
    }

    let mut offdiag = Vec::with_capacity(rank * (rank - 1) / 2);
    for i in 0..rank {
        for j in (i + 1)..rank {
            let e = &tri[i][j];
            debug_assert!(e.is_integer(), "canonical entries must be integers");
            offdiag.push(e.numer().to_i64().ok_or(PadicError::EntryOverflow)?);
        }
    }
    Ok(HNFLattice {
        diag: profile,
        offdiag,
    })
}

/// Sum of two finite-index lattices of the same rank: the span of both row sets.
pub fn sum_lattices(a: &HNFLattice, b: &HNFLattice, ctx: &PAdicContext) -> HNFLattice {
    assert_eq!(a.rank(), b.rank(), "lattice ranks must match");
    let mut rows = a.rows(ctx);
    rows.extend(b.rows(ctx));
    hnf_reduce(a.rank(), &rows, ctx).expect("sum of finite-index lattices has finite index")
}

/// Sum of all block projections of a rank-`m*n` lattice down to rank `n`.
///
/// Coordinates are grouped as `m` consecutive blocks of `n`; the result is
/// the span of every block of every generator row.
pub fn project_and_sum(lat: &HNFLattice, m: usize, n: usize, ctx: &PAdicContext) -> HNFLattice {
    assert_eq!(lat.rank(), m * n, "rank must be m*n");
    let mut blocks: Vec<Vec<i64>> = Vec::with_capacity(lat.rank() * m);
    for row in lat.rows(ctx) {
        for b in 0..m {
            blocks.push(row[b * n..(b + 1) * n].to_vec());
        }
    }
    hnf_reduce(n, &blocks, ctx)
        .expect("projections of a finite-index lattice span a finite-index lattice")
}

/// Row echelon form of an integer row set modulo `p^modexp`.
///
/// Preserves the span up to `p^modexp Z^width`, which is all later
/// membership tests against lattices of index exponent `<= modexp` can see.
/// The result has at most `width` rows and may have fewer when the span is
/// not of finite index (e.g. the image of an edge map). Entries stay below
/// `p^modexp`.
pub fn row_echelon_mod(
    rows: &[Vec<i64>],
    width: usize,
    modexp: u32,
    ctx: &PAdicContext,
) -> Vec<Vec<i64>> {
    let mut flat = Vec::with_capacity(rows.len() * width);
    for r in rows {
        debug_assert_eq!(r.len(), width);
        flat.extend_from_slice(r);
    }
    let kept = echelon_in_place(&mut flat, rows.len(), width, modexp, ctx);
    (0..kept)
        .map(|i| flat[i * width..(i + 1) * width].to_vec())
        .collect()
}

/// In-place flat-buffer echelon; returns the number of pivot rows, compacted
/// at the front of the buffer. Row operations use the unit trick
/// `unit*row - mult*pivot` (multiplying a row by a p-adic unit keeps the
/// span), so everything stays integral.
pub(crate) fn echelon_in_place(
    buf: &mut [i64],
    nrows: usize,
    width: usize,
    modexp: u32,
    ctx: &PAdicContext,
) -> usize {
    if width == 0 || nrows == 0 {
        return 0;
    }
    let modulus = ctx.pow(modexp);
    for x in buf[..nrows * width].iter_mut() {
        *x = x.rem_euclid(modulus);
    }
    let mut out = 0usize;
    for col in 0..width {
        let mut best: Option<(u32, usize)> = None;
        for r in out..nrows {
            let x = buf[r * width + col];
            if x != 0 {
                let v = ctx.valuation(x).expect("nonzero");
                if best.map_or(true, |(bv, _)| v < bv) {
                    best = Some((v, r));
                }
            }
        }
        let Some((vp, piv)) = best else { continue };
        if piv != out {
            for c in 0..width {
                buf.swap(out * width + c, piv * width + c);
            }
        }
        let pdiv = ctx.pow(vp);
        let unit = buf[out * width + col] / pdiv;
        for r in (out + 1)..nrows {
            let x = buf[r * width + col];
            if x != 0 {
                let mult = x / pdiv;
                for c in col..width {
                    let val = unit as i128 * buf[r * width + c] as i128
                        - mult as i128 * buf[out * width + c] as i128;
                    buf[r * width + c] = val.rem_euclid(modulus as i128) as i64;
                }
            }
        }
        out += 1;
        if out == nrows {
            break;
        }
    }
    out
}

/// Exact number of sublattices of `Z_p^rank` with index exponent exactly `k`.
///
/// Counts Hermite normal forms directly: a diagonal profile `nu` admits
/// `prod_j p^((j-1) nu_j)` choices of reduced above-diagonal entries.
pub fn sublattice_count(rank: usize, k: u32, p: u64) -> BigUint {
    // dp[j][t] = count over the first j columns with exponent sum t
    let mut dp = vec![BigUint::zero(); (k + 1) as usize];
    dp[0] = BigUint::one();
    let p = BigUint::from(p);
    for j in 1..=rank {
        let mut next = vec![BigUint::zero(); (k + 1) as usize];
        for t in 0..=k {
            for nu in 0..=t {
                let ways = p.pow((j as u32 - 1) * nu);
                let prev = dp[(t - nu) as usize].clone();
                next[t as usize] += prev * ways;
            }
        }
        dp = next;
    }
    dp[k as usize].clone()
}

/// Number of sublattices with index exponent at most `kmax`.
pub fn sublattice_count_upto(rank: usize, kmax: u32, p: u64) -> BigUint {
    (0..=kmax).map(|k| sublattice_count(rank, k, p)).sum()
}

/// All diagonal profiles of length `rank` with exponent sum `k`, in
/// lexicographically ascending order.
pub fn profiles_of_weight(rank: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; rank];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
    }
    if rank == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(0, k, &mut cur, &mut out);
    out
}

pub(crate) fn offdiag_moduli(profile: &[u32], ctx: &PAdicContext) -> Vec<i64> {
    let r = profile.len();
    let mut m = Vec::with_capacity(r * r.saturating_sub(1) / 2);
    for i in 0..r {
        for j in (i + 1)..r {
            let _ = i;
            m.push(ctx.pow(profile[j]));
        }
    }
    m
}

/// Step an off-diagonal odometer to the next entry tuple in lexicographic
/// order; returns `false` when it wraps back to all zeros.
pub(crate) fn advance_offdiag(off: &mut [i64], moduli: &[i64]) -> bool {
    advance_offdiag_from(off, moduli, 0)
}

/// Odometer step touching only positions `>= start` (earlier positions stay
/// frozen; used to partition one profile's entry space across workers).
pub(crate) fn advance_offdiag_from(off: &mut [i64], moduli: &[i64], start: usize) -> bool {
    let mut pos = moduli.len();
    loop {
        if pos == start {
            return false;
        }
        pos -= 1;
        off[pos] += 1;
        if off[pos] < moduli[pos] {
            return true;
        }
        off[pos] = 0;
    }
}

/// Visit every canonical lattice with the given diagonal profile, reusing
/// one scratch value. The off-diagonal entries run through an odometer in
/// lexicographic order.
pub(crate) fn for_each_in_profile(
    profile: &[u32],
    ctx: &PAdicContext,
    f: &mut impl FnMut(&HNFLattice),
) {
    let moduli = offdiag_moduli(profile, ctx);
    let mut lat = HNFLattice::diagonal(profile.to_vec());
    loop {
        f(&lat);
        if !advance_offdiag(lat.offdiag_mut(), &moduli) {
            return;
        }
    }
}

/// Deterministic stream over all finite-index sublattices of `Z_p^rank`
/// with index exponent at most `kmax`.
///
/// Order: ascending total exponent, then diagonal profile lexicographically,
/// then off-diagonal entries lexicographically.
#[derive(Debug)]
pub struct SublatticeIter {
    ctx: PAdicContext,
    rank: usize,
    kmax: u32,
    k: u32,
    profiles: Vec<Vec<u32>>,
    pidx: usize,
    cur: HNFLattice,
    moduli: Vec<i64>,
    fresh: bool,
    done: bool,
}

impl SublatticeIter {
    fn load_profile(&mut self) {
        let profile = self.profiles[self.pidx].clone();
        self.moduli = offdiag_moduli(&profile, &self.ctx);
        self.cur = HNFLattice::diagonal(profile);
        self.fresh = true;
    }

    fn advance_profile(&mut self) -> bool {
        self.pidx += 1;
        while self.pidx >= self.profiles.len() {
            if self.k >= self.kmax {
                self.done = true;
                return false;
            }
            self.k += 1;
            self.profiles = profiles_of_weight(self.rank, self.k);
            self.pidx = 0;
        }
        self.load_profile();
        true
    }
}

impl Iterator for SublatticeIter {
    type Item = HNFLattice;

    fn next(&mut self) -> Option<HNFLattice> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(self.cur.clone());
        }
        let off = self.cur.offdiag_mut();
        let mut pos = self.moduli.len();
        loop {
            if pos == 0 {
                if !self.advance_profile() {
                    return None;
                }
                self.fresh = false;
                return Some(self.cur.clone());
            }
            pos -= 1;
            off[pos] += 1;
            if off[pos] < self.moduli[pos] {
                return Some(self.cur.clone());
            }
            off[pos] = 0;
        }
    }
}

/// Stream every finite-index sublattice of `Z_p^rank` with index exponent
/// `<= kmax`, exactly once, in a deterministic order.
///
/// Refuses (with the predicted size) when the count would exceed the
/// context's enumeration limit.
pub fn enumerate_sublattices(
    rank: usize,
    kmax: u32,
    ctx: &PAdicContext,
) -> Result<SublatticeIter, PadicError> {
    if !super::fits_prime_power(ctx.p(), kmax) {
        return Err(PadicError::CapTooLarge {
            p: ctx.p(),
            cap: kmax,
        });
    }
    let predicted = sublattice_count_upto(rank, kmax, ctx.p());
    if predicted > BigUint::from(ctx.limit()) {
        return Err(PadicError::EnumerationTooLarge {
            predicted,
            limit: ctx.limit(),
        });
    }
    let mut it = SublatticeIter {
        ctx: ctx.clone(),
        rank,
        kmax,
        k: 0,
        profiles: profiles_of_weight(rank, 0),
        pidx: 0,
        cur: HNFLattice::full(rank),
        moduli: Vec::new(),
        fresh: false,
        done: false,
    };
    it.load_profile();
    Ok(it)
}
