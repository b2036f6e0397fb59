//! Truncated zeta functions of admissible representations, by independent
//! routes, and verifiers for the structural identities relating them.
//!
//! Three ways to the same series:
//!
//! - [`zeta_direct`]: enumerate full-rank sublattices per vertex and test
//!   closure under every edge map. Brute force, the ground truth.
//! - [`zeta_pairsum`]: enumerate pairs `(H_v <= L_{v,1}, M_v <= L_{v,2})`
//!   with `f(H) <= M`, weighting each pair by `q^(n(v,1) * iexp(M_v))` for
//!   the block-triangular completions it represents.
//! - [`rewrite_rhs`]: the pair sum of the *original* representation with
//!   exponents rescaled by the amalgamation power `m`, times the explicit
//!   per-vertex factor `zeta_{A^(m n1)}(s) / zeta_{A^n1}(m s)`. Equal to the
//!   pair sum of the amalgamated representation.
//!
//! The [`verify_amalgam`], [`verify_pairsum`], [`verify_sum_lattice`] and
//! [`verify_measure`] entry points compare the routes coefficient by
//! coefficient and report the first graded-lex mismatch on failure.

mod report;

pub use report::{EnumStats, Mismatch, VerifyReport, VerifyStatus};

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::dirichlet::{abelian_zeta, DirichletError, DirichletPoly, Exp};
use crate::model::{AdmissibleRep, IntMatrix, ModelError};
use crate::padic::{
    advance_offdiag_from, contains_vector, enumerate_sublattices, good_basis_count_mod,
    good_basis_measure, offdiag_moduli, profiles_of_weight, project_and_sum, sublattice_count,
    sublattice_count_upto, HNFLattice, PAdicContext, PadicError,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Dirichlet(#[from] DirichletError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A subrepresentation candidate in block coordinates: one pair
/// `(H_v <= Z_p^n(v,1), M_v <= Z_p^n(v,2))` per vertex. It is a witness when
/// the image of every generator of `H_{t(e)}` under `a^e` lies in `M_{h(e)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubrepWitness {
    pub h: Vec<HNFLattice>,
    pub m: Vec<HNFLattice>,
}

impl SubrepWitness {
    pub fn is_valid(&self, rep: &AdmissibleRep, ctx: &PAdicContext) -> bool {
        let q = rep.quiver();
        if self.h.len() != q.vertex_count() || self.m.len() != q.vertex_count() {
            return false;
        }
        for v in 0..q.vertex_count() {
            if self.h[v].rank() != rep.n1(v) as usize || self.m[v].rank() != rep.n2(v) as usize {
                return false;
            }
        }
        (0..q.edge_count()).all(|e| {
            let target = &self.m[q.head(e)];
            // membership only sees the map modulo p^iexp(target)
            let map = reduce_map_mod(rep.edge_map(e), ctx.pow(target.index_exp()));
            self.h[q.tail(e)]
                .rows(ctx)
                .iter()
                .all(|row| contains_vector(target, &map.apply_row(row), ctx))
        })
    }

    /// Per-vertex index exponent `iexp(H_v) + iexp(M_v)`.
    pub fn exponents(&self) -> Vec<u32> {
        self.h
            .iter()
            .zip(&self.m)
            .map(|(h, m)| h.index_exp() + m.index_exp())
            .collect()
    }
}

/// Which pair enumeration is being accumulated.
#[derive(Debug, Clone, Copy)]
enum PairMode {
    /// Bound `kh + km <= K`; exponent `kh + km`; weight `q^(n1 * km)`.
    PairSum,
    /// Bound `m*kh + km <= K`; exponent `m*kh + km`; weight `q^(m * n1 * km)`
    /// (or the deliberately wrong `q^(n1 * km)` when `corrupted`, kept as a
    /// negative control for the comparators).
    Rewrite { m: u32, corrupted: bool },
}

impl PairMode {
    fn kh_max(&self, cap: u32) -> u32 {
        match self {
            PairMode::PairSum => cap,
            PairMode::Rewrite { m, .. } => cap / m,
        }
    }

    fn km_bound(&self, cap: u32, kh: u32) -> u32 {
        match self {
            PairMode::PairSum => cap - kh,
            PairMode::Rewrite { m, .. } => cap - m * kh,
        }
    }

    fn exponent(&self, kh: u32, km: u32) -> u32 {
        match self {
            PairMode::PairSum => kh + km,
            PairMode::Rewrite { m, .. } => m * kh + km,
        }
    }

    fn weight_exp(&self, n1: u32, km: u32) -> u32 {
        match self {
            PairMode::PairSum => n1 * km,
            PairMode::Rewrite { m, corrupted } => {
                if *corrupted {
                    n1 * km
                } else {
                    m * n1 * km
                }
            }
        }
    }
}

struct PairShared<'a> {
    rep: &'a AdmissibleRep,
    ctx: &'a PAdicContext,
    caps: Vec<u32>,
    /// Edge maps with entries reduced mod `p^K_head`; membership in a lattice
    /// of index exponent `<= K_head` cannot see the difference.
    maps_mod: Vec<IntMatrix>,
    /// All candidate `M_v`, ascending by index exponent.
    m_lists: Vec<Vec<HNFLattice>>,
    /// Edges checked when `M_v` is chosen: head = v, tail <= v.
    incoming: Vec<Vec<usize>>,
    /// Edges checked when `H_v` is chosen: tail = v, head < v.
    outgoing: Vec<Vec<usize>>,
    strides: Vec<usize>,
    tuple_count: usize,
    wmax: u32,
    mode: PairMode,
}

fn reduce_map_mod(map: &IntMatrix, modulus: i64) -> IntMatrix {
    let mut out = IntMatrix::zero(map.rows(), map.cols());
    for r in 0..map.rows() {
        for c in 0..map.cols() {
            out.set(r, c, map.get(r, c).rem_euclid(modulus));
        }
    }
    out
}

fn tuple_strides(caps: &[u32]) -> (Vec<usize>, usize) {
    let mut strides = Vec::with_capacity(caps.len());
    let mut acc = 1usize;
    for &c in caps {
        strides.push(acc);
        acc *= c as usize + 1;
    }
    (strides, acc)
}

impl<'a> PairShared<'a> {
    fn build(
        rep: &'a AdmissibleRep,
        ctx: &'a PAdicContext,
        caps: Vec<u32>,
        mode: PairMode,
    ) -> Result<Self, EngineError> {
        let q = rep.quiver();
        let nv = q.vertex_count();
        let maps_mod = (0..q.edge_count())
            .map(|e| reduce_map_mod(rep.edge_map(e), ctx.pow(caps[q.head(e)])))
            .collect();
        let mut m_lists = Vec::with_capacity(nv);
        for v in 0..nv {
            let list: Vec<HNFLattice> =
                enumerate_sublattices(rep.n2(v) as usize, caps[v], ctx)?.collect();
            m_lists.push(list);
        }
        let mut incoming = vec![Vec::new(); nv];
        let mut outgoing = vec![Vec::new(); nv];
        for e in 0..q.edge_count() {
            let (t, h) = (q.tail(e), q.head(e));
            if t <= h {
                incoming[h].push(e);
            } else {
                outgoing[t].push(e);
            }
        }
        let (strides, tuple_count) = tuple_strides(&caps);
        let wmax = (0..nv).map(|v| mode.weight_exp(rep.n1(v), caps[v])).sum();
        Ok(PairShared {
            rep,
            ctx,
            caps,
            maps_mod,
            m_lists,
            incoming,
            outgoing,
            strides,
            tuple_count,
            wmax,
            mode,
        })
    }

    fn counter_len(&self) -> usize {
        self.tuple_count * (self.wmax as usize + 1)
    }
}

struct PairWorker<'w, 'a> {
    sh: &'w PairShared<'a>,
    h_rows: Vec<Vec<Vec<i64>>>,
    /// Per-vertex flat scratch for edge-image rows (reused per candidate).
    images: Vec<Vec<i64>>,
    img_buf: Vec<i64>,
    m_idx: Vec<usize>,
    kh: Vec<u32>,
    km: Vec<u32>,
    counters: Vec<u128>,
    stats: EnumStats,
}

impl<'w, 'a> PairWorker<'w, 'a> {
    fn new(sh: &'w PairShared<'a>) -> Self {
        let nv = sh.rep.quiver().vertex_count();
        PairWorker {
            sh,
            h_rows: vec![Vec::new(); nv],
            images: vec![Vec::new(); nv],
            img_buf: Vec::new(),
            m_idx: vec![0; nv],
            kh: vec![0; nv],
            km: vec![0; nv],
            counters: vec![0u128; sh.counter_len()],
            stats: EnumStats::default(),
        }
    }

    fn run_vertex(&mut self, v: usize) {
        if v == self.sh.rep.quiver().vertex_count() {
            self.finalize();
            return;
        }
        let n1 = self.sh.rep.n1(v) as usize;
        for kh in 0..=self.sh.mode.kh_max(self.sh.caps[v]) {
            for profile in profiles_of_weight(n1, kh) {
                self.scan_profile(v, kh, &profile, None);
            }
        }
    }

    /// Stream all H-lattices of one diagonal profile through `handle_h`.
    /// `fixed` freezes a leading off-diagonal entry, letting callers fan one
    /// large profile out across parallel workers.
    fn scan_profile(&mut self, v: usize, kh: u32, profile: &[u32], fixed: Option<(usize, i64)>) {
        let moduli = offdiag_moduli(profile, self.sh.ctx);
        let mut lat = HNFLattice::diagonal(profile.to_vec());
        let start = match fixed {
            Some((pos, val)) => {
                lat.offdiag_mut()[pos] = val;
                pos + 1
            }
            None => 0,
        };
        loop {
            self.handle_h(v, kh, &lat);
            if !advance_offdiag_from(lat.offdiag_mut(), &moduli, start) {
                return;
            }
        }
    }

    fn handle_h(&mut self, v: usize, kh: u32, h: &HNFLattice) {
        self.stats.visited += 1;
        let sh = self.sh;
        let q = sh.rep.quiver();
        let mut rows = std::mem::take(&mut self.h_rows[v]);
        h.write_rows_into(sh.ctx, &mut rows);
        for &e in &sh.outgoing[v] {
            let head = q.head(e);
            let target = &sh.m_lists[head][self.m_idx[head]];
            let n2h = sh.rep.n2(head) as usize;
            self.img_buf.resize(n2h, 0);
            for r in &rows {
                sh.maps_mod[e].apply_row_into(r, &mut self.img_buf);
                if !contains_vector(target, &self.img_buf, sh.ctx) {
                    self.h_rows[v] = rows;
                    return;
                }
            }
        }
        let n2 = sh.rep.n2(v) as usize;
        let mut flat = std::mem::take(&mut self.images[v]);
        flat.clear();
        for &e in &sh.incoming[v] {
            let tail = q.tail(e);
            let src = if tail == v { &rows } else { &self.h_rows[tail] };
            for r in src {
                let at = flat.len();
                flat.resize(at + n2, 0);
                sh.maps_mod[e].apply_row_into(r, &mut flat[at..]);
            }
        }
        let nrows = flat.len().checked_div(n2).unwrap_or(0);
        let kept = crate::padic::echelon_in_place(&mut flat, nrows, n2, sh.caps[v], sh.ctx);
        self.h_rows[v] = rows;
        self.kh[v] = kh;
        let bound = sh.mode.km_bound(sh.caps[v], kh);
        for idx in 0..sh.m_lists[v].len() {
            let mlat = &sh.m_lists[v][idx];
            if mlat.index_exp() > bound {
                break; // lists are sorted by index exponent
            }
            let ok = (0..kept).all(|i| contains_vector(mlat, &flat[i * n2..(i + 1) * n2], sh.ctx));
            if ok {
                self.m_idx[v] = idx;
                self.km[v] = mlat.index_exp();
                self.run_vertex(v + 1);
            }
        }
        self.images[v] = flat;
    }

    fn finalize(&mut self) {
        let sh = self.sh;
        let mut tuple = 0usize;
        let mut wexp = 0u32;
        for v in 0..sh.rep.quiver().vertex_count() {
            tuple += sh.mode.exponent(self.kh[v], self.km[v]) as usize * sh.strides[v];
            wexp += sh.mode.weight_exp(sh.rep.n1(v), self.km[v]);
        }
        self.counters[tuple * (sh.wmax as usize + 1) + wexp as usize] += 1;
        self.stats.accepted += 1;
    }
}

fn predicted_pairs(rep: &AdmissibleRep, caps: &[u32], p: u64, mode: PairMode) -> BigUint {
    let mut total = BigUint::one();
    for v in 0..rep.quiver().vertex_count() {
        let mut vertex_sum = BigUint::zero();
        for kh in 0..=mode.kh_max(caps[v]) {
            let h_count = sublattice_count(rep.n1(v) as usize, kh, p);
            let m_count: BigUint = (0..=mode.km_bound(caps[v], kh))
                .map(|km| sublattice_count(rep.n2(v) as usize, km, p))
                .sum();
            vertex_sum += h_count * m_count;
        }
        total *= vertex_sum;
    }
    total
}

fn counters_to_poly(
    counters: &[u128],
    caps: &[u32],
    strides: &[usize],
    wmax: u32,
    p: u64,
) -> DirichletPoly {
    let q = BigInt::from(p);
    let mut poly = DirichletPoly::zero(caps.to_vec());
    let wspan = wmax as usize + 1;
    for (slot, &count) in counters.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let tuple = slot / wspan;
        let wexp = (slot % wspan) as u32;
        let exps: Vec<u32> = (0..caps.len())
            .map(|v| (tuple / strides[v] % (caps[v] as usize + 1)) as u32)
            .collect();
        let coeff = BigRational::from(BigInt::from(count) * q.pow(wexp));
        poly.add_to(Exp(exps), coeff);
    }
    poly
}

fn pair_sum_core(
    rep: &AdmissibleRep,
    ctx: &PAdicContext,
    mode: PairMode,
) -> Result<(DirichletPoly, EnumStats), EngineError> {
    let caps = ctx.caps().resolve(rep.quiver().vertex_ids())?;
    let nv = rep.quiver().vertex_count();
    if nv == 0 {
        return Ok((DirichletPoly::one(Vec::new()), EnumStats::default()));
    }
    let predicted = predicted_pairs(rep, &caps, ctx.p(), mode);
    if predicted > BigUint::from(ctx.limit()) {
        return Err(PadicError::EnumerationTooLarge {
            predicted,
            limit: ctx.limit(),
        }
        .into());
    }
    let sh = PairShared::build(rep, ctx, caps, mode)?;

    // Tasks: one per (exponent, profile) of the first vertex's H-lattice.
    // Under parallelism, large profiles are fanned out further by freezing
    // their first wide off-diagonal entry, since a single profile can hold
    // most of the enumeration.
    type Task = (u32, Vec<u32>, Option<(usize, i64)>);
    let mut tasks: Vec<Task> = Vec::new();
    for kh in 0..=mode.kh_max(sh.caps[0]) {
        for profile in profiles_of_weight(sh.rep.n1(0) as usize, kh) {
            let moduli = offdiag_moduli(&profile, ctx);
            let total: i64 = moduli.iter().product();
            let split = if ctx.parallel() && total > 4096 {
                moduli.iter().position(|&m| m > 1)
            } else {
                None
            };
            match split {
                Some(pos) => {
                    for val in 0..moduli[pos] {
                        tasks.push((kh, profile.clone(), Some((pos, val))));
                    }
                }
                None => tasks.push((kh, profile, None)),
            }
        }
    }
    let run_task = |task: &Task| -> (Vec<u128>, EnumStats) {
        let mut w = PairWorker::new(&sh);
        w.scan_profile(0, task.0, &task.1, task.2);
        (w.counters, w.stats)
    };
    let merge = |(mut ca, mut sa): (Vec<u128>, EnumStats), (cb, sb): (Vec<u128>, EnumStats)| {
        for (a, b) in ca.iter_mut().zip(cb) {
            *a += b;
        }
        sa.merge(sb);
        (ca, sa)
    };
    let init = || (vec![0u128; sh.counter_len()], EnumStats::default());
    let (counters, stats) = if ctx.parallel() {
        tasks.par_iter().map(run_task).reduce(init, merge)
    } else {
        tasks.iter().map(run_task).fold(init(), merge)
    };
    let poly = counters_to_poly(&counters, &sh.caps, &sh.strides, sh.wmax, ctx.p());
    debug_assert!(poly.is_counting_series());
    Ok((poly, stats))
}

/// Zeta series via the pair-sum expansion: subrepresentations are counted
/// through block-triangular normal forms, one pair `(H_v, M_v)` at a time,
/// with `q^(n(v,1) * iexp(M_v))` completions each.
pub fn zeta_pairsum(rep: &AdmissibleRep, ctx: &PAdicContext) -> Result<DirichletPoly, EngineError> {
    Ok(pair_sum_core(rep, ctx, PairMode::PairSum)?.0)
}

/// [`zeta_pairsum`] plus enumeration statistics.
pub fn zeta_pairsum_with_stats(
    rep: &AdmissibleRep,
    ctx: &PAdicContext,
) -> Result<(DirichletPoly, EnumStats), EngineError> {
    pair_sum_core(rep, ctx, PairMode::PairSum)
}

/// [`zeta_direct`] plus enumeration statistics.
pub fn zeta_direct_with_stats(
    rep: &AdmissibleRep,
    ctx: &PAdicContext,
) -> Result<(DirichletPoly, EnumStats), EngineError> {
    direct_core(rep, ctx)
}

/// The per-vertex explicit factor `zeta_{A^(m n1)}(s_v) / zeta_{A^n1}(m s_v)`.
fn rewrite_prefactor(
    rep: &AdmissibleRep,
    m: u32,
    ctx: &PAdicContext,
    caps: &[u32],
) -> Result<DirichletPoly, EngineError> {
    let mut out = DirichletPoly::one(caps.to_vec());
    for v in 0..rep.quiver().vertex_count() {
        let num = abelian_zeta(m * rep.n1(v), v, ctx, caps);
        let den = abelian_zeta(rep.n1(v), v, ctx, caps).scale_exponents(m, &[v]);
        out = out.mul(&num.div(&den)?)?;
    }
    Ok(out)
}

fn rewrite_rhs_inner(
    rep: &AdmissibleRep,
    m: u32,
    ctx: &PAdicContext,
    corrupted: bool,
) -> Result<(DirichletPoly, EnumStats), EngineError> {
    if m == 0 {
        return Err(ModelError::ZeroPower.into());
    }
    let (inner, stats) = pair_sum_core(rep, ctx, PairMode::Rewrite { m, corrupted })?;
    let caps = ctx.caps().resolve(rep.quiver().vertex_ids())?;
    let pre = rewrite_prefactor(rep, m, ctx, &caps)?;
    Ok((pre.mul(&inner)?, stats))
}

/// Zeta series of the amalgamated m-th power computed *without* amalgamating:
/// the pair sum over the original representation with `H`-exponents scaled by
/// `m` and weights `q^(m n(v,1) iexp(M_v))`, times the explicit per-vertex
/// abelian factor.
pub fn rewrite_rhs(
    rep: &AdmissibleRep,
    m: u32,
    ctx: &PAdicContext,
) -> Result<DirichletPoly, EngineError> {
    Ok(rewrite_rhs_inner(rep, m, ctx, false)?.0)
}

struct DirectShared<'a> {
    rep: &'a AdmissibleRep,
    ctx: &'a PAdicContext,
    caps: Vec<u32>,
    maps_mod: Vec<IntMatrix>,
    lists: Vec<Vec<(HNFLattice, Vec<Vec<i64>>)>>,
    /// Edges checked once both endpoints are assigned (at the later vertex).
    checks_at: Vec<Vec<usize>>,
    strides: Vec<usize>,
    tuple_count: usize,
}

struct DirectWorker<'w, 'a> {
    sh: &'w DirectShared<'a>,
    chosen: Vec<usize>,
    counters: Vec<u128>,
    stats: EnumStats,
}

impl<'w, 'a> DirectWorker<'w, 'a> {
    fn new(sh: &'w DirectShared<'a>) -> Self {
        DirectWorker {
            sh,
            chosen: vec![0; sh.rep.quiver().vertex_count()],
            counters: vec![0u128; sh.tuple_count],
            stats: EnumStats::default(),
        }
    }

    fn edges_hold(&self, v: usize) -> bool {
        let sh = self.sh;
        let q = sh.rep.quiver();
        for &e in &sh.checks_at[v] {
            let (t, h) = (q.tail(e), q.head(e));
            let src = &sh.lists[t][self.chosen[t]].1;
            let target = &sh.lists[h][self.chosen[h]].0;
            let n1t = sh.rep.n1(t) as usize;
            let n1h = sh.rep.n1(h) as usize;
            for row in src {
                let img = sh.maps_mod[e].apply_row(&row[..n1t]);
                let mut padded = vec![0i64; n1h];
                padded.extend_from_slice(&img);
                if !contains_vector(target, &padded, sh.ctx) {
                    return false;
                }
            }
        }
        true
    }

    fn run_vertex(&mut self, v: usize) {
        let sh = self.sh;
        if v == sh.rep.quiver().vertex_count() {
            let tuple: usize = (0..v)
                .map(|w| sh.lists[w][self.chosen[w]].0.index_exp() as usize * sh.strides[w])
                .sum();
            self.counters[tuple] += 1;
            self.stats.accepted += 1;
            return;
        }
        for i in 0..sh.lists[v].len() {
            self.chosen[v] = i;
            self.stats.visited += 1;
            if self.edges_hold(v) {
                self.run_vertex(v + 1);
            }
        }
    }
}

/// Zeta series by brute force: enumerate full-rank sublattices of each
/// vertex module and keep the families closed under every edge map. The
/// independent oracle for [`zeta_pairsum`]; intended for small caps.
pub fn zeta_direct(rep: &AdmissibleRep, ctx: &PAdicContext) -> Result<DirichletPoly, EngineError> {
    Ok(direct_core(rep, ctx)?.0)
}

fn direct_core(
    rep: &AdmissibleRep,
    ctx: &PAdicContext,
) -> Result<(DirichletPoly, EnumStats), EngineError> {
    let caps = ctx.caps().resolve(rep.quiver().vertex_ids())?;
    let q = rep.quiver();
    let nv = q.vertex_count();
    if nv == 0 {
        return Ok((DirichletPoly::one(Vec::new()), EnumStats::default()));
    }
    let mut predicted = BigUint::one();
    for v in 0..nv {
        predicted *= sublattice_count_upto((rep.n1(v) + rep.n2(v)) as usize, caps[v], ctx.p());
    }
    if predicted > BigUint::from(ctx.limit()) {
        return Err(PadicError::EnumerationTooLarge {
            predicted,
            limit: ctx.limit(),
        }
        .into());
    }
    let maps_mod: Vec<IntMatrix> = (0..q.edge_count())
        .map(|e| reduce_map_mod(rep.edge_map(e), ctx.pow(caps[q.head(e)])))
        .collect();
    let mut lists = Vec::with_capacity(nv);
    for v in 0..nv {
        let rank = (rep.n1(v) + rep.n2(v)) as usize;
        let list: Vec<(HNFLattice, Vec<Vec<i64>>)> = enumerate_sublattices(rank, caps[v], ctx)?
            .map(|l| {
                let rows = l.rows(ctx);
                (l, rows)
            })
            .collect();
        lists.push(list);
    }
    let mut checks_at = vec![Vec::new(); nv];
    for e in 0..q.edge_count() {
        checks_at[q.tail(e).max(q.head(e))].push(e);
    }
    let (strides, tuple_count) = tuple_strides(&caps);
    let sh = DirectShared {
        rep,
        ctx,
        caps,
        maps_mod,
        lists,
        checks_at,
        strides,
        tuple_count,
    };
    let tasks: Vec<usize> = (0..sh.lists[0].len()).collect();
    let run_task = |&first: &usize| -> (Vec<u128>, EnumStats) {
        let mut w = DirectWorker::new(&sh);
        w.chosen[0] = first;
        w.stats.visited += 1;
        if w.edges_hold(0) {
            w.run_vertex(1);
        }
        (w.counters, w.stats)
    };
    let merge = |(mut ca, mut sa): (Vec<u128>, EnumStats), (cb, sb): (Vec<u128>, EnumStats)| {
        for (a, b) in ca.iter_mut().zip(cb) {
            *a += b;
        }
        sa.merge(sb);
        (ca, sa)
    };
    let init = || (vec![0u128; sh.tuple_count], EnumStats::default());
    let (counters, stats) = if ctx.parallel() {
        tasks.par_iter().map(run_task).reduce(init, merge)
    } else {
        tasks.iter().map(run_task).fold(init(), merge)
    };
    // weights are all 1: reuse the counter decoding with wmax = 0
    let poly = counters_to_poly(&counters, &sh.caps, &sh.strides, 0, ctx.p());
    debug_assert!(poly.is_counting_series());
    Ok((poly, stats))
}

/// Sum over sublattices of `Z_p^(m n)` whose block projections sum to `h`:
/// brute-force enumeration, accumulating `X^iexp` per member.
pub fn sum_lattice_lhs(
    m: u32,
    n: u32,
    h: &HNFLattice,
    ctx: &PAdicContext,
    cap: u32,
) -> Result<DirichletPoly, EngineError> {
    assert_eq!(h.rank(), n as usize, "target lattice must have rank n");
    let (buckets, _) = sum_lattice_buckets(m, n, ctx, cap)?;
    let mut poly = DirichletPoly::zero(vec![cap]);
    if let Some(counts) = buckets.get(h) {
        for (k, &c) in counts.iter().enumerate() {
            if c > 0 {
                poly.set(Exp(vec![k as u32]), BigRational::from(BigInt::from(c)));
            }
        }
    }
    Ok(poly)
}

/// Closed form for the same sum: `zeta_{A^(mn)}(s) / zeta_{A^n}(m s)` times
/// the monomial `X^(m iexp(h))`.
pub fn sum_lattice_rhs(
    m: u32,
    n: u32,
    h: &HNFLattice,
    ctx: &PAdicContext,
    cap: u32,
) -> Result<DirichletPoly, EngineError> {
    assert_eq!(h.rank(), n as usize, "target lattice must have rank n");
    let caps = [cap];
    let num = abelian_zeta(m * n, 0, ctx, &caps);
    let den = abelian_zeta(n, 0, ctx, &caps).scale_all(m);
    let ratio = num.div(&den)?;
    let mono = DirichletPoly::monomial(vec![cap], Exp(vec![m * h.index_exp()]), BigRational::one());
    Ok(ratio.mul(&mono)?)
}

/// One pass over all sublattices of `Z_p^(m n)` with `iexp <= cap`, bucketed
/// by the sum of their block projections; bucket values are counts per index
/// exponent.
fn sum_lattice_buckets(
    m: u32,
    n: u32,
    ctx: &PAdicContext,
    cap: u32,
) -> Result<(BTreeMap<HNFLattice, Vec<u64>>, EnumStats), EngineError> {
    let rank = (m * n) as usize;
    let predicted = sublattice_count_upto(rank, cap, ctx.p());
    if predicted > BigUint::from(ctx.limit()) {
        return Err(PadicError::EnumerationTooLarge {
            predicted,
            limit: ctx.limit(),
        }
        .into());
    }
    let tasks: Vec<Vec<u32>> = (0..=cap)
        .flat_map(|k| profiles_of_weight(rank, k))
        .collect();
    let run_task = |profile: &Vec<u32>| {
        let mut local: BTreeMap<HNFLattice, Vec<u64>> = BTreeMap::new();
        let mut stats = EnumStats::default();
        crate::padic::for_each_in_profile(profile, ctx, &mut |lat| {
            stats.visited += 1;
            stats.accepted += 1;
            let s = project_and_sum(lat, m as usize, n as usize, ctx);
            local
                .entry(s)
                .or_insert_with(|| vec![0u64; cap as usize + 1])[lat.index_exp() as usize] += 1;
        });
        (local, stats)
    };
    let merge = |(mut ma, mut sa): (BTreeMap<HNFLattice, Vec<u64>>, EnumStats),
                 (mb, sb): (BTreeMap<HNFLattice, Vec<u64>>, EnumStats)| {
        for (k, counts) in mb {
            let entry = ma.entry(k).or_insert_with(|| vec![0u64; cap as usize + 1]);
            for (a, b) in entry.iter_mut().zip(counts) {
                *a += b;
            }
        }
        sa.merge(sb);
        (ma, sa)
    };
    let out = if ctx.parallel() {
        tasks
            .par_iter()
            .map(run_task)
            .reduce(|| (BTreeMap::new(), EnumStats::default()), merge)
    } else {
        tasks
            .iter()
            .map(run_task)
            .fold((BTreeMap::new(), EnumStats::default()), merge)
    };
    Ok(out)
}

fn counts_to_poly(counts: &[u64], cap: u32) -> DirichletPoly {
    let mut poly = DirichletPoly::zero(vec![cap]);
    for (k, &c) in counts.iter().enumerate() {
        if c > 0 {
            poly.set(Exp(vec![k as u32]), BigRational::from(BigInt::from(c)));
        }
    }
    poly
}

/// Check the sum-of-projections identity at `(m, n)` up to `cap`: for every
/// `H` with `m * iexp(H) <= cap` the bucketed enumeration must match the
/// closed form, and the buckets together must partition the full abelian
/// count `zeta_{A^(mn)}`.
pub fn verify_sum_lattice(
    m: u32,
    n: u32,
    ctx: &PAdicContext,
    cap: u32,
) -> Result<VerifyReport, EngineError> {
    let t0 = Instant::now();
    let check = format!("sum-lattice m={m} n={n}");
    let (buckets, stats) = sum_lattice_buckets(m, n, ctx, cap)?;
    let zero = DirichletPoly::zero(vec![cap]);
    for h in enumerate_sublattices(n as usize, cap / m, ctx)? {
        let lhs = buckets
            .get(&h)
            .map(|c| counts_to_poly(c, cap))
            .unwrap_or_else(|| zero.clone());
        let rhs = sum_lattice_rhs(m, n, &h, ctx, cap)?;
        if let Some((exp, a, b)) = lhs.first_mismatch(&rhs) {
            let mm = Mismatch::from_coeffs(&exp, &a, &b)
                .with_detail(format!("H with profile {:?}", h.profile()));
            return Ok(VerifyReport::fail(
                check,
                mm,
                stats,
                t0.elapsed().as_millis() as u64,
            ));
        }
    }
    // partition identity: summing over every bucket recovers the abelian count
    let mut total = zero;
    for counts in buckets.values() {
        total = total.add(&counts_to_poly(counts, cap))?;
    }
    let expect = abelian_zeta(m * n, 0, ctx, &[cap]);
    if let Some((exp, a, b)) = total.first_mismatch(&expect) {
        let mm = Mismatch::from_coeffs(&exp, &a, &b).with_detail("partition identity");
        return Ok(VerifyReport::fail(
            check,
            mm,
            stats,
            t0.elapsed().as_millis() as u64,
        ));
    }
    Ok(VerifyReport::pass(
        check,
        stats,
        t0.elapsed().as_millis() as u64,
    ))
}

/// Compare the pair sum of the amalgamated representation against the
/// rewritten right-hand side computed on the original representation.
pub fn verify_amalgam(
    rep: &AdmissibleRep,
    m: u32,
    ctx: &PAdicContext,
) -> Result<VerifyReport, EngineError> {
    let t0 = Instant::now();
    let amalgam = crate::model::amalgamate_rep(rep, m)?;
    let (lhs, mut stats) = pair_sum_core(&amalgam, ctx, PairMode::PairSum)?;
    let (rhs, stats2) = rewrite_rhs_inner(rep, m, ctx, false)?;
    stats.merge(stats2);
    Ok(VerifyReport::from_comparison(
        format!("amalgam m={m}"),
        &lhs,
        &rhs,
        stats,
        t0.elapsed().as_millis() as u64,
    ))
}

/// Compare the brute-force enumeration against the pair-sum expansion.
pub fn verify_pairsum(
    rep: &AdmissibleRep,
    ctx: &PAdicContext,
) -> Result<VerifyReport, EngineError> {
    let t0 = Instant::now();
    let (lhs, mut stats) = direct_core(rep, ctx)?;
    let (rhs, stats2) = pair_sum_core(rep, ctx, PairMode::PairSum)?;
    stats.merge(stats2);
    Ok(VerifyReport::from_comparison(
        "pairsum",
        &lhs,
        &rhs,
        stats,
        t0.elapsed().as_millis() as u64,
    ))
}

/// Check the good-basis measure against the brute-force residue count, for
/// every diagonal profile with entries `<= nu_max` and ranks `1..=max_rank`,
/// at two precision levels (stability in N).
pub fn verify_measure(
    max_rank: usize,
    nu_max: u32,
    ctx: &PAdicContext,
) -> Result<VerifyReport, EngineError> {
    let t0 = Instant::now();
    let check = format!("measure r<={max_rank} nu<={nu_max}");
    let mut stats = EnumStats::default();
    for r in 1..=max_rank {
        let mut profile = vec![0u32; r];
        loop {
            let lat = HNFLattice::diagonal(profile.clone());
            let max_nu = profile.iter().copied().max().unwrap_or(0);
            for dn in [1u32, 2] {
                let n = max_nu + dn;
                let count = good_basis_count_mod(&lat, n, ctx)?;
                let dim = (r * (r + 1) / 2) as u32;
                let ratio =
                    BigRational::new(BigInt::from(count), BigInt::from(ctx.p()).pow(n * dim));
                let measure = good_basis_measure(&profile, ctx);
                stats.visited += 1;
                if ratio != measure {
                    let mm = Mismatch {
                        exponents: profile.clone(),
                        lhs: crate::dirichlet::rational_to_string(&ratio),
                        rhs: crate::dirichlet::rational_to_string(&measure),
                        detail: Some(format!("rank {r}, precision N = {n}")),
                    };
                    return Ok(VerifyReport::fail(
                        check,
                        mm,
                        stats,
                        t0.elapsed().as_millis() as u64,
                    ));
                }
                stats.accepted += 1;
            }
            // odometer over profiles with entries <= nu_max
            let mut pos = r;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                profile[pos] += 1;
                if profile[pos] <= nu_max {
                    break;
                }
                profile[pos] = 0;
            }
            if profile.iter().all(|&x| x == 0) {
                break;
            }
        }
    }
    Ok(VerifyReport::pass(
        check,
        stats,
        t0.elapsed().as_millis() as u64,
    ))
}

/// Negative controls: deliberately wrong computations that the comparators
/// must catch. Guards against vacuously-passing verification.
pub mod selfcheck {
    use super::*;

    /// The rewritten right-hand side with the multiplicity weight exponent
    /// `m * n(v,1)` replaced by `n(v,1)`.
    pub fn corrupted_rewrite_rhs(
        rep: &AdmissibleRep,
        m: u32,
        ctx: &PAdicContext,
    ) -> Result<DirichletPoly, EngineError> {
        Ok(rewrite_rhs_inner(rep, m, ctx, true)?.0)
    }

    /// [`verify_amalgam`] against the corrupted right-hand side; expected to
    /// FAIL whenever the truncation window contains a pair with `M` proper.
    pub fn verify_amalgam_corrupted(
        rep: &AdmissibleRep,
        m: u32,
        ctx: &PAdicContext,
    ) -> Result<VerifyReport, EngineError> {
        let t0 = Instant::now();
        let amalgam = crate::model::amalgamate_rep(rep, m)?;
        let (lhs, mut stats) = pair_sum_core(&amalgam, ctx, PairMode::PairSum)?;
        let (rhs, stats2) = rewrite_rhs_inner(rep, m, ctx, true)?;
        stats.merge(stats2);
        Ok(VerifyReport::from_comparison(
            format!("amalgam m={m} (corrupted weight)"),
            &lhs,
            &rhs,
            stats,
            t0.elapsed().as_millis() as u64,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::heisenberg_amalgam_zeta;
    use crate::model::{algebra_to_rep, amalgamate_rep, NilpotentAlgebra, Quiver};
    use num_traits::FromPrimitive;

    fn ctx(p: u64, cap: u32) -> PAdicContext {
        PAdicContext::new(p, cap).unwrap()
    }

    fn rat(n: i64) -> BigRational {
        BigRational::from_i64(n).unwrap()
    }

    fn single_coeffs(poly: &DirichletPoly, upto: u32) -> Vec<BigRational> {
        (0..=upto).map(|k| poly.coeff(&Exp(vec![k]))).collect()
    }

    fn two_vertex_rep(entry: i64) -> AdmissibleRep {
        let q = Quiver::new(
            vec!["a".into(), "b".into()],
            vec![("e".into(), "a".into(), "b".into())],
        )
        .unwrap();
        AdmissibleRep::new(
            q,
            vec![(1, 1), (1, 1)],
            vec![IntMatrix::new(1, 1, vec![entry]).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn pairsum_abelian_matches_closed_form() {
        let c = ctx(2, 3);
        let rep = algebra_to_rep(&NilpotentAlgebra::abelian(2));
        let z = zeta_pairsum(&rep, &c).unwrap();
        assert_eq!(z, abelian_zeta(2, 0, &c, &[3]));
        assert_eq!(single_coeffs(&z, 3), vec![rat(1), rat(3), rat(7), rat(15)]);
    }

    #[test]
    fn pairsum_heisenberg_matches_closed_form() {
        let c = ctx(2, 3);
        let rep = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        let z = zeta_pairsum(&rep, &c).unwrap();
        assert_eq!(z, heisenberg_amalgam_zeta(1, &c, 3));
        assert_eq!(single_coeffs(&z, 3), vec![rat(1), rat(3), rat(7), rat(19)]);
    }

    #[test]
    fn pairsum_zero_edge_factorizes() {
        let c = ctx(2, 2);
        let rep = two_vertex_rep(0);
        let z = zeta_pairsum(&rep, &c).unwrap();
        // with a vacuous constraint, the series is the product of the two
        // single-vertex series
        let single = {
            let q = Quiver::new(vec!["a".into()], vec![]).unwrap();
            let r = AdmissibleRep::new(q, vec![(1, 1)], vec![]).unwrap();
            zeta_pairsum(&r, &ctx(2, 2)).unwrap()
        };
        for k1 in 0..=2u32 {
            for k2 in 0..=2u32 {
                assert_eq!(
                    z.coeff(&Exp(vec![k1, k2])),
                    single.coeff(&Exp(vec![k1])) * single.coeff(&Exp(vec![k2])),
                    "({k1}, {k2})"
                );
            }
        }
    }

    #[test]
    fn direct_small_values() {
        let c = ctx(2, 2);
        let rep = algebra_to_rep(&NilpotentAlgebra::abelian(2));
        let z = zeta_direct(&rep, &c).unwrap();
        assert_eq!(single_coeffs(&z, 2), vec![rat(1), rat(3), rat(7)]);
        let h = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        let zh = zeta_direct(&h, &c).unwrap();
        assert_eq!(single_coeffs(&zh, 2), vec![rat(1), rat(3), rat(7)]);
        // cap 0 is the constant 1
        let z0 = zeta_direct(&h, &ctx(2, 0)).unwrap();
        assert_eq!(z0.coeff(&Exp(vec![0])), rat(1));
        assert_eq!(z0, DirichletPoly::one(vec![0]));
    }

    #[test]
    fn direct_equals_pairsum_on_two_vertex_rep() {
        for p in [2u64, 3] {
            let c = ctx(p, 2);
            let rep = two_vertex_rep(1);
            let a = zeta_direct(&rep, &c).unwrap();
            let b = zeta_pairsum(&rep, &c).unwrap();
            assert_eq!(a, b, "p = {p}");
        }
    }

    #[test]
    fn direct_equals_pairsum_with_edges_both_ways() {
        // an edge whose tail comes later than its head exercises the
        // deferred membership check against an already-chosen M
        let q = Quiver::new(
            vec!["a".into(), "b".into()],
            vec![
                ("f".into(), "a".into(), "b".into()),
                ("g".into(), "b".into(), "a".into()),
            ],
        )
        .unwrap();
        let rep = AdmissibleRep::new(
            q,
            vec![(1, 1), (1, 1)],
            vec![
                IntMatrix::new(1, 1, vec![1]).unwrap(),
                IntMatrix::new(1, 1, vec![2]).unwrap(),
            ],
        )
        .unwrap();
        for p in [2u64, 3] {
            let c = ctx(p, 2);
            let a = zeta_direct(&rep, &c).unwrap();
            let b = zeta_pairsum(&rep, &c).unwrap();
            assert_eq!(a, b, "p = {p}");
            assert!(a.is_counting_series());
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let rep = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        let serial = zeta_pairsum(&rep, &ctx(3, 3)).unwrap();
        let parallel = zeta_pairsum(&rep, &ctx(3, 3).with_parallel(true)).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn witness_validity() {
        let c = ctx(2, 3);
        let rep = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        // H = p Z_p^2, M = p Z_p: every bracket image lands in p Z_p
        let good = SubrepWitness {
            h: vec![HNFLattice::diagonal(vec![1, 1])],
            m: vec![HNFLattice::diagonal(vec![1])],
        };
        assert!(good.is_valid(&rep, &c));
        assert_eq!(good.exponents(), vec![3]);
        // H full, M = p Z_p: the image of (1,0) under left_1 is 1, not in p Z_p
        let bad = SubrepWitness {
            h: vec![HNFLattice::full(2)],
            m: vec![HNFLattice::diagonal(vec![1])],
        };
        assert!(!bad.is_valid(&rep, &c));
    }

    #[test]
    fn sum_lattice_examples() {
        let c = ctx(2, 3);
        // m = 1: the single monomial X^iexp(H)
        let h = HNFLattice::diagonal(vec![1]);
        let lhs1 = sum_lattice_lhs(1, 1, &h, &c, 3).unwrap();
        assert_eq!(
            single_coeffs(&lhs1, 3),
            vec![rat(0), rat(1), rat(0), rat(0)]
        );
        assert_eq!(lhs1, sum_lattice_rhs(1, 1, &h, &c, 3).unwrap());
        // m = 2, n = 1, H = pZ, p = 2: coefficients 1 at k = 2, 3 at k = 3
        let lhs = sum_lattice_lhs(2, 1, &h, &c, 3).unwrap();
        assert_eq!(single_coeffs(&lhs, 3), vec![rat(0), rat(0), rat(1), rat(3)]);
        // rhs continues with q + q^2 = 6 at k = 4
        let rhs = sum_lattice_rhs(2, 1, &h, &ctx(2, 4), 4).unwrap();
        assert_eq!(
            single_coeffs(&rhs, 4),
            vec![rat(0), rat(0), rat(1), rat(3), rat(6)]
        );
        // H = full: constant term 1
        let full = HNFLattice::full(1);
        let rhs_full = sum_lattice_rhs(3, 1, &full, &c, 3).unwrap();
        assert_eq!(rhs_full.coeff(&Exp(vec![0])), rat(1));
        let lhs_full = sum_lattice_lhs(2, 1, &full, &c, 0).unwrap();
        assert_eq!(lhs_full.coeff(&Exp(vec![0])), rat(1));
    }

    #[test]
    fn verify_sum_lattice_passes() {
        for (m, n, p, cap) in [(1u32, 2u32, 2u64, 3u32), (2, 1, 2, 4), (2, 1, 3, 3)] {
            let c = ctx(p, cap);
            let rep = verify_sum_lattice(m, n, &c, cap).unwrap();
            assert!(rep.status.is_pass(), "{}", rep.summary());
        }
    }

    #[test]
    fn rewrite_rhs_reduces_to_pairsum_at_m1() {
        let c = ctx(2, 3);
        let rep = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        assert_eq!(
            rewrite_rhs(&rep, 1, &c).unwrap(),
            zeta_pairsum(&rep, &c).unwrap()
        );
    }

    #[test]
    fn rewrite_rhs_heisenberg_matches_closed_form() {
        // the rewritten side reproduces the closed form without ever
        // amalgamating; at cap 5 this pins the q^(2m) X^(2m+1) tail term
        let c = ctx(2, 5);
        let rep = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        let rhs = rewrite_rhs(&rep, 2, &c).unwrap();
        assert_eq!(rhs, heisenberg_amalgam_zeta(2, &c, 5));
        assert_eq!(rhs.coeff(&Exp(vec![5])), rat(97171));
    }

    #[test]
    fn rewrite_rhs_abelian_collapses() {
        // the inner sum telescopes and the result is the abelian closed form
        let c = ctx(3, 3);
        let rep = algebra_to_rep(&NilpotentAlgebra::abelian(2));
        for m in 1..=3 {
            assert_eq!(
                rewrite_rhs(&rep, m, &c).unwrap(),
                abelian_zeta(2 * m, 0, &c, &[3]),
                "m = {m}"
            );
        }
    }

    #[test]
    fn verify_amalgam_heisenberg() {
        for (m, p) in [(1u32, 2u64), (2, 2), (1, 3), (2, 3)] {
            let c = ctx(p, 3);
            let rep = algebra_to_rep(&NilpotentAlgebra::heisenberg());
            let report = verify_amalgam(&rep, m, &c).unwrap();
            assert!(report.status.is_pass(), "{}", report.summary());
            // both sides equal the closed form
            let lhs = zeta_pairsum(&amalgamate_rep(&rep, m).unwrap(), &c).unwrap();
            assert_eq!(lhs, heisenberg_amalgam_zeta(m, &c, 3), "m={m} p={p}");
        }
    }

    #[test]
    fn corrupted_weight_is_caught() {
        let mut alg = NilpotentAlgebra::zero_structure(1, 1);
        alg.set_c(0, 0, 0, 5);
        let rep = algebra_to_rep(&alg);
        let c = ctx(2, 4);
        let good = verify_amalgam(&rep, 2, &c).unwrap();
        assert!(good.status.is_pass(), "{}", good.summary());
        let bad = selfcheck::verify_amalgam_corrupted(&rep, 2, &c).unwrap();
        assert!(!bad.status.is_pass());
        let mm = bad.mismatch.unwrap();
        assert!(mm.exponents[0] >= 2, "mismatch at {:?}", mm.exponents);
    }

    #[test]
    fn verify_pairsum_passes() {
        let c = ctx(2, 2);
        let rep = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        let report = verify_pairsum(&rep, &c).unwrap();
        assert!(report.status.is_pass(), "{}", report.summary());
        assert!(report.counts.visited > 0);
    }

    #[test]
    fn verify_measure_passes() {
        let c = ctx(2, 8).with_limit(100_000_000);
        let report = verify_measure(2, 1, &c).unwrap();
        assert!(report.status.is_pass(), "{}", report.summary());
    }

    #[test]
    fn resource_guard_refuses() {
        let c = ctx(2, 3).with_limit(5);
        let rep = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        assert!(matches!(
            zeta_pairsum(&rep, &c),
            Err(EngineError::Padic(PadicError::EnumerationTooLarge { .. }))
        ));
        assert!(matches!(
            zeta_direct(&rep, &c),
            Err(EngineError::Padic(PadicError::EnumerationTooLarge { .. }))
        ));
    }

    #[test]
    fn amalgam_power_composes_up_to_zeta() {
        // (rep^*2)^*2 and rep^*4 have equal zeta series at small caps
        let c = ctx(2, 2);
        let rep = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        let twice = amalgamate_rep(&amalgamate_rep(&rep, 2).unwrap(), 2).unwrap();
        let once = amalgamate_rep(&rep, 4).unwrap();
        assert_eq!(
            zeta_pairsum(&twice, &c).unwrap(),
            zeta_pairsum(&once, &c).unwrap()
        );
    }
}
