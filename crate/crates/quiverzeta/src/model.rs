//! Quivers, admissible representations, class-two nilpotent algebras, and
//! the constructions relating them.
//!
//! An admissible representation assigns each vertex a pair of free modules
//! `(L_{v,1}, L_{v,2})` and each edge an integer matrix: the edge map kills
//! the second summand of its tail and lands in the second summand of its
//! head. A nilpotent algebra of class at most two is given by ranks `(n, d)`
//! and bracket structure constants `c[i][j][k]` with `[b_i, b_j] =
//! sum_k c[i][j][k] beta_k`; its ideal-counting problem is the
//! subrepresentation-counting problem of a one-vertex quiver with `2n` loops
//! (left and right multiplication by each generator).
//!
//! Structure constants are plain integers: a representation over any p-adic
//! ring is obtained by reading them modulo p-powers. All values here are
//! immutable after construction and deterministic byte for byte.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("edge {edge:?} references unknown vertex {vertex:?}")]
    UnknownVertex { edge: String, vertex: String },
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("rank list length {got} does not match vertex count {want}")]
    RankCount { want: usize, got: usize },
    #[error(
        "edge {index} ({id:?}): matrix is {got_rows}x{got_cols}, expected {want_rows}x{want_cols}"
    )]
    MatrixShape {
        index: usize,
        id: String,
        want_rows: u32,
        want_cols: u32,
        got_rows: u32,
        got_cols: u32,
    },
    #[error("structure constant array has length {got}, expected n*n*d = {want}")]
    StructureLen { want: usize, got: usize },
    #[error("bracket index ({i}, {j}) out of range 1..={n}")]
    BracketIndex { i: u32, j: u32, n: u32 },
    #[error("amalgamation power m must be positive")]
    ZeroPower,
}

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntMatrix {
    rows: u32,
    cols: u32,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn new(rows: u32, cols: u32, data: Vec<i64>) -> Option<Self> {
        if data.len() == (rows as usize) * (cols as usize) {
            Some(IntMatrix { rows, cols, data })
        } else {
            None
        }
    }

    pub fn zero(rows: u32, cols: u32) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; (rows as usize) * (cols as usize)],
        }
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn get(&self, r: u32, c: u32) -> i64 {
        self.data[(r as usize) * (self.cols as usize) + c as usize]
    }

    pub fn set(&mut self, r: u32, c: u32, v: i64) {
        self.data[(r as usize) * (self.cols as usize) + c as usize] = v;
    }

    pub fn row(&self, r: u32) -> &[i64] {
        let w = self.cols as usize;
        &self.data[(r as usize) * w..(r as usize + 1) * w]
    }

    pub fn as_nested(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// Row vector times matrix (the action of an edge map on coordinates).
    pub fn apply_row(&self, row: &[i64]) -> Vec<i64> {
        let mut out = vec![0i64; self.cols as usize];
        self.apply_row_into(row, &mut out);
        out
    }

    /// Allocation-free variant of [`IntMatrix::apply_row`].
    pub(crate) fn apply_row_into(&self, row: &[i64], out: &mut [i64]) {
        assert_eq!(row.len(), self.rows as usize);
        assert_eq!(out.len(), self.cols as usize);
        let w = self.cols as usize;
        for c in 0..w {
            let mut acc = 0i128;
            for (i, &x) in row.iter().enumerate() {
                acc += x as i128 * self.data[i * w + c] as i128;
            }
            out[c] = i64::try_from(acc).expect("edge image overflow; reduce inputs first");
        }
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_nested())
    }
}

/// Directed multigraph with stable vertex and edge order. Loops and parallel
/// edges are permitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quiver {
    vertices: Vec<String>,
    edge_ids: Vec<String>,
    tails: Vec<usize>,
    heads: Vec<usize>,
}

impl Quiver {
    pub fn new(
        vertices: Vec<String>,
        edges: Vec<(String, String, String)>, // (edge id, tail id, head id)
    ) -> Result<Self, ModelError> {
        for (i, v) in vertices.iter().enumerate() {
            if vertices[..i].contains(v) {
                return Err(ModelError::DuplicateVertex(v.clone()));
            }
        }
        let index_of = |edge: &str, id: &str| {
            vertices
                .iter()
                .position(|v| v == id)
                .ok_or_else(|| ModelError::UnknownVertex {
                    edge: edge.to_string(),
                    vertex: id.to_string(),
                })
        };
        let mut edge_ids = Vec::with_capacity(edges.len());
        let mut tails = Vec::with_capacity(edges.len());
        let mut heads = Vec::with_capacity(edges.len());
        for (id, tail, head) in edges {
            tails.push(index_of(&id, &tail)?);
            heads.push(index_of(&id, &head)?);
            edge_ids.push(id);
        }
        Ok(Quiver {
            vertices,
            edge_ids,
            tails,
            heads,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edge_ids.len()
    }

    pub fn edge_id(&self, e: usize) -> &str {
        &self.edge_ids[e]
    }

    pub fn tail(&self, e: usize) -> usize {
        self.tails[e]
    }

    pub fn head(&self, e: usize) -> usize {
        self.heads[e]
    }
}

/// Admissible representation: per-vertex rank pair and one integer matrix per
/// edge, of shape `n1(tail) x n2(head)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissibleRep {
    quiver: Quiver,
    ranks: Vec<(u32, u32)>,
    edge_maps: Vec<IntMatrix>,
}

impl AdmissibleRep {
    pub fn new(
        quiver: Quiver,
        ranks: Vec<(u32, u32)>,
        edge_maps: Vec<IntMatrix>,
    ) -> Result<Self, ModelError> {
        if ranks.len() != quiver.vertex_count() {
            return Err(ModelError::RankCount {
                want: quiver.vertex_count(),
                got: ranks.len(),
            });
        }
        if edge_maps.len() != quiver.edge_count() {
            return Err(ModelError::RankCount {
                want: quiver.edge_count(),
                got: edge_maps.len(),
            });
        }
        for (e, m) in edge_maps.iter().enumerate() {
            let want_rows = ranks[quiver.tail(e)].0;
            let want_cols = ranks[quiver.head(e)].1;
            if m.rows() != want_rows || m.cols() != want_cols {
                return Err(ModelError::MatrixShape {
                    index: e,
                    id: quiver.edge_id(e).to_string(),
                    want_rows,
                    want_cols,
                    got_rows: m.rows(),
                    got_cols: m.cols(),
                });
            }
        }
        Ok(AdmissibleRep {
            quiver,
            ranks,
            edge_maps,
        })
    }

    pub fn quiver(&self) -> &Quiver {
        &self.quiver
    }

    /// Rank vector `(n(v,1), n(v,2))` per vertex.
    pub fn ranks(&self) -> &[(u32, u32)] {
        &self.ranks
    }

    pub fn n1(&self, v: usize) -> u32 {
        self.ranks[v].0
    }

    pub fn n2(&self, v: usize) -> u32 {
        self.ranks[v].1
    }

    pub fn edge_map(&self, e: usize) -> &IntMatrix {
        &self.edge_maps[e]
    }

    /// Edge matrices with their endpoints, sorted; two representations on the
    /// same quiver agree as representations iff these lists are equal.
    pub fn sorted_edge_matrices(&self) -> Vec<(usize, usize, IntMatrix)> {
        let mut v: Vec<(usize, usize, IntMatrix)> = (0..self.quiver.edge_count())
            .map(|e| {
                (
                    self.quiver.tail(e),
                    self.quiver.head(e),
                    self.edge_maps[e].clone(),
                )
            })
            .collect();
        v.sort();
        v
    }
}

/// Class-(at most)-two nilpotent algebra: free module of rank `n + d` where
/// the last `d` generators are central and span the image of the bracket,
/// with `[b_i, b_j] = sum_k c[i][j][k] beta_k`.
///
/// A central ideal strictly larger than the span of the brackets is modeled
/// by enlarging `d` and leaving the extra structure constants zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NilpotentAlgebra {
    n: u32,
    d: u32,
    structure: Vec<i64>, // c[i][j][k] at ((i*n)+j)*d + k, all 0-indexed
}

impl NilpotentAlgebra {
    pub fn new(n: u32, d: u32, structure: Vec<i64>) -> Result<Self, ModelError> {
        let want = (n as usize) * (n as usize) * (d as usize);
        if structure.len() != want {
            return Err(ModelError::StructureLen {
                want,
                got: structure.len(),
            });
        }
        Ok(NilpotentAlgebra { n, d, structure })
    }

    pub fn zero_structure(n: u32, d: u32) -> Self {
        NilpotentAlgebra {
            n,
            d,
            structure: vec![0; (n as usize) * (n as usize) * (d as usize)],
        }
    }

    /// The abelian algebra of rank `n` (zero bracket, trivial center part).
    pub fn abelian(n: u32) -> Self {
        Self::zero_structure(n, 0)
    }

    /// The Heisenberg Lie algebra: generators `x, y` with `[x, y] = z` central.
    pub fn heisenberg() -> Self {
        let mut alg = Self::zero_structure(2, 1);
        alg.set_c(0, 1, 0, 1);
        alg.set_c(1, 0, 0, -1);
        alg
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Structure constant `c[i][j][k]`, 0-indexed.
    pub fn c(&self, i: u32, j: u32, k: u32) -> i64 {
        self.structure[((i as usize * self.n as usize) + j as usize) * self.d as usize + k as usize]
    }

    pub fn set_c(&mut self, i: u32, j: u32, k: u32, v: i64) {
        self.structure
            [((i as usize * self.n as usize) + j as usize) * self.d as usize + k as usize] = v;
    }
}

/// True iff the multiplication is anti-symmetric: `c[i][j][k] = -c[j][i][k]`
/// for all indices. The Jacobi identity is automatic in class two (every
/// triple bracket vanishes).
pub fn validate_lie(alg: &NilpotentAlgebra) -> bool {
    for i in 0..alg.n() {
        for j in 0..alg.n() {
            for k in 0..alg.d() {
                if alg.c(i, j, k) != -alg.c(j, i, k) {
                    return false;
                }
            }
        }
    }
    true
}

/// Translate an algebra into a representation of the one-vertex quiver with
/// `2n` loops: loop `left_i` acts by left multiplication by `b_i` (matrix
/// `(c[i][j][k])_{j,k}`), loop `right_i` by right multiplication (matrix
/// `(c[j][i][k])_{j,k}`), in the order `left_1..left_n, right_1..right_n`.
/// Finite-index subrepresentations correspond to finite-index two-sided
/// ideals, index for index.
pub fn algebra_to_rep(alg: &NilpotentAlgebra) -> AdmissibleRep {
    let n = alg.n();
    let d = alg.d();
    let mut edges = Vec::with_capacity(2 * n as usize);
    for i in 1..=n {
        edges.push((format!("left_{i}"), "v0".to_string(), "v0".to_string()));
    }
    for i in 1..=n {
        edges.push((format!("right_{i}"), "v0".to_string(), "v0".to_string()));
    }
    let quiver = Quiver::new(vec!["v0".to_string()], edges).expect("one-vertex quiver is valid");
    let mut maps = Vec::with_capacity(2 * n as usize);
    for i in 0..n {
        let mut m = IntMatrix::zero(n, d);
        for j in 0..n {
            for k in 0..d {
                m.set(j, k, alg.c(i, j, k));
            }
        }
        maps.push(m);
    }
    for i in 0..n {
        let mut m = IntMatrix::zero(n, d);
        for j in 0..n {
            for k in 0..d {
                m.set(j, k, alg.c(j, i, k));
            }
        }
        maps.push(m);
    }
    AdmissibleRep::new(quiver, vec![(n, d)], maps).expect("shapes are consistent by construction")
}

/// Amalgamated m-th power of a representation: the same vertex set, ranks
/// `(m*n1, n2)`, and edges `E x [m]` in (edge, copy) order, where copy `i` of
/// edge `e` applies `a^e` to the i-th block of the m-fold first summand and
/// kills the rest.
pub fn amalgamate_rep(rep: &AdmissibleRep, m: u32) -> Result<AdmissibleRep, ModelError> {
    if m == 0 {
        return Err(ModelError::ZeroPower);
    }
    let q = rep.quiver();
    let mut edges = Vec::with_capacity(q.edge_count() * m as usize);
    for e in 0..q.edge_count() {
        for i in 1..=m {
            edges.push((
                format!("{}:{i}", q.edge_id(e)),
                q.vertex_ids()[q.tail(e)].clone(),
                q.vertex_ids()[q.head(e)].clone(),
            ));
        }
    }
    let quiver = Quiver::new(q.vertex_ids().to_vec(), edges)?;
    let ranks: Vec<(u32, u32)> = rep.ranks().iter().map(|&(n1, n2)| (m * n1, n2)).collect();
    let mut maps = Vec::with_capacity(q.edge_count() * m as usize);
    for e in 0..q.edge_count() {
        let n1 = rep.n1(q.tail(e));
        let n2 = rep.n2(q.head(e));
        let a = rep.edge_map(e);
        for i in 0..m {
            let mut block = IntMatrix::zero(m * n1, n2);
            for r in 0..n1 {
                for c in 0..n2 {
                    block.set(i * n1 + r, c, a.get(r, c));
                }
            }
            maps.push(block);
        }
    }
    AdmissibleRep::new(quiver, ranks, maps)
}

/// Amalgamated m-th power of an algebra: `m` copies glued along the central
/// span of the `beta` generators. Generators are `b_i^(r)` for `r in [m]`,
/// `i in [n]`, copy-major; brackets of generators from different copies
/// vanish, brackets within a copy keep the original constants.
pub fn amalgamate_algebra(alg: &NilpotentAlgebra, m: u32) -> Result<NilpotentAlgebra, ModelError> {
    if m == 0 {
        return Err(ModelError::ZeroPower);
    }
    let n = alg.n();
    let d = alg.d();
    let mut out = NilpotentAlgebra::zero_structure(m * n, d);
    for r in 0..m {
        for i in 0..n {
            for j in 0..n {
                for k in 0..d {
                    out.set_c(r * n + i, r * n + j, k, alg.c(i, j, k));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: u32, cols: u32, data: &[i64]) -> IntMatrix {
        IntMatrix::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn heisenberg_to_rep() {
        let rep = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        assert_eq!(rep.quiver().vertex_count(), 1);
        assert_eq!(rep.ranks(), &[(2, 1)]);
        assert_eq!(rep.quiver().edge_count(), 4);
        let want = [
            mat(2, 1, &[0, 1]),
            mat(2, 1, &[-1, 0]),
            mat(2, 1, &[0, -1]),
            mat(2, 1, &[1, 0]),
        ];
        for (e, w) in want.iter().enumerate() {
            assert_eq!(rep.edge_map(e), w, "edge {e}");
        }
        assert_eq!(rep.quiver().edge_id(0), "left_1");
        assert_eq!(rep.quiver().edge_id(3), "right_2");
    }

    #[test]
    fn abelian_to_rep_has_empty_matrices() {
        let rep = algebra_to_rep(&NilpotentAlgebra::abelian(3));
        assert_eq!(rep.ranks(), &[(3, 0)]);
        assert_eq!(rep.quiver().edge_count(), 6);
        for e in 0..6 {
            assert_eq!(rep.edge_map(e).rows(), 3);
            assert_eq!(rep.edge_map(e).cols(), 0);
        }
    }

    #[test]
    fn non_lie_algebra_to_rep() {
        let mut alg = NilpotentAlgebra::zero_structure(1, 1);
        alg.set_c(0, 0, 0, 5);
        let rep = algebra_to_rep(&alg);
        assert_eq!(rep.quiver().edge_count(), 2);
        assert_eq!(rep.edge_map(0), &mat(1, 1, &[5]));
        assert_eq!(rep.edge_map(1), &mat(1, 1, &[5]));
        assert!(!validate_lie(&alg));
    }

    #[test]
    fn lie_checks() {
        assert!(validate_lie(&NilpotentAlgebra::heisenberg()));
        assert!(validate_lie(&NilpotentAlgebra::abelian(4)));
        let mut diag = NilpotentAlgebra::zero_structure(1, 1);
        diag.set_c(0, 0, 0, 1);
        assert!(!validate_lie(&diag));
    }

    #[test]
    fn amalgamate_rep_shapes_and_blocks() {
        let h = algebra_to_rep(&NilpotentAlgebra::heisenberg());
        let h2 = amalgamate_rep(&h, 2).unwrap();
        assert_eq!(h2.ranks(), &[(4, 1)]);
        assert_eq!(h2.quiver().edge_count(), 8);
        // copy 2 of left_1 places [[0],[1]] in the second block
        assert_eq!(h2.quiver().edge_id(1), "left_1:2");
        assert_eq!(h2.edge_map(1), &mat(4, 1, &[0, 0, 0, 1]));

        // m = 1 only relabels edges
        let h1 = amalgamate_rep(&h, 1).unwrap();
        assert_eq!(h1.ranks(), h.ranks());
        assert_eq!(h1.sorted_edge_matrices(), h.sorted_edge_matrices());

        assert_eq!(amalgamate_rep(&h, 0), Err(ModelError::ZeroPower));
    }

    #[test]
    fn amalgamate_rep_degenerate_first_rank() {
        let q = Quiver::new(vec!["v".into()], vec![("e".into(), "v".into(), "v".into())]).unwrap();
        let rep = AdmissibleRep::new(q, vec![(0, 2)], vec![IntMatrix::zero(0, 2)]).unwrap();
        let r3 = amalgamate_rep(&rep, 3).unwrap();
        assert_eq!(r3.ranks(), &[(0, 2)]);
        assert_eq!(r3.edge_map(0).rows(), 0);
    }

    #[test]
    fn amalgamate_algebra_structure() {
        let h = NilpotentAlgebra::heisenberg();
        assert_eq!(amalgamate_algebra(&h, 1).unwrap(), h);
        let h2 = amalgamate_algebra(&h, 2).unwrap();
        assert_eq!((h2.n(), h2.d()), (4, 1));
        for i in 0..4 {
            for j in 0..4 {
                let want = match (i, j) {
                    (0, 1) | (2, 3) => 1,
                    (1, 0) | (3, 2) => -1,
                    _ => 0,
                };
                assert_eq!(h2.c(i, j, 0), want, "bracket ({i}, {j})");
            }
        }
        let ab = amalgamate_algebra(&NilpotentAlgebra::abelian(2), 3).unwrap();
        assert_eq!((ab.n(), ab.d()), (6, 0));
        assert_eq!(amalgamate_algebra(&h, 0), Err(ModelError::ZeroPower));
    }

    #[test]
    fn dictionary_commutes_up_to_edge_order() {
        let mut non_lie = NilpotentAlgebra::zero_structure(1, 1);
        non_lie.set_c(0, 0, 0, 5);
        for alg in [
            NilpotentAlgebra::heisenberg(),
            non_lie,
            NilpotentAlgebra::abelian(2),
        ] {
            for m in 1..=3 {
                let via_algebra = algebra_to_rep(&amalgamate_algebra(&alg, m).unwrap());
                let via_rep = amalgamate_rep(&algebra_to_rep(&alg), m).unwrap();
                assert_eq!(via_algebra.ranks(), via_rep.ranks());
                assert_eq!(
                    via_algebra.sorted_edge_matrices(),
                    via_rep.sorted_edge_matrices(),
                    "alg ({}, {}), m = {m}",
                    alg.n(),
                    alg.d()
                );
            }
        }
    }

    #[test]
    fn constructions_are_deterministic() {
        let h = NilpotentAlgebra::heisenberg();
        assert_eq!(algebra_to_rep(&h), algebra_to_rep(&h));
        assert_eq!(
            amalgamate_rep(&algebra_to_rep(&h), 2),
            amalgamate_rep(&algebra_to_rep(&h), 2)
        );
    }

    #[test]
    fn validation_errors() {
        let q = Quiver::new(vec!["a".into()], vec![("e".into(), "a".into(), "b".into())]);
        assert!(matches!(q, Err(ModelError::UnknownVertex { .. })));

        let q = Quiver::new(vec!["a".into()], vec![("e".into(), "a".into(), "a".into())]).unwrap();
        let bad = AdmissibleRep::new(q, vec![(1, 1)], vec![IntMatrix::zero(2, 1)]);
        assert!(matches!(bad, Err(ModelError::MatrixShape { index: 0, .. })));

        assert!(matches!(
            NilpotentAlgebra::new(2, 1, vec![0; 3]),
            Err(ModelError::StructureLen { want: 4, got: 3 })
        ));
    }
}
