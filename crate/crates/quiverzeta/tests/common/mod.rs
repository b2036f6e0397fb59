//! Shared fixtures for the integration suites: the representation corpus
//! and a gate that keeps the heavyweight criteria from competing for cores.
//!
//! Each integration test target compiles this module independently and uses
//! a different slice of it.
#![allow(dead_code)]

use std::sync::{Mutex, MutexGuard, OnceLock};

use quiverzeta::model::{algebra_to_rep, AdmissibleRep, IntMatrix, NilpotentAlgebra, Quiver};

/// Serialize the acceptance criteria: each one is internally parallel, and
/// the stated time budgets assume it has the machine to itself.
pub fn run_alone() -> MutexGuard<'static, ()> {
    static GATE: OnceLock<Mutex<()>> = OnceLock::new();
    match GATE.get_or_init(|| Mutex::new(())).lock() {
        Ok(g) => g,
        Err(poisoned) => poisoned.into_inner(),
    }
}

/// Rank-1 algebra with `[b, b] = 5 beta`: not anti-symmetric, so not Lie.
pub fn non_lie_algebra() -> NilpotentAlgebra {
    let mut alg = NilpotentAlgebra::zero_structure(1, 1);
    alg.set_c(0, 0, 0, 5);
    alg
}

fn two_vertex_rep() -> AdmissibleRep {
    let q = Quiver::new(
        vec!["a".into(), "b".into()],
        vec![("f".into(), "a".into(), "b".into())],
    )
    .unwrap();
    AdmissibleRep::new(
        q,
        vec![(1, 1), (1, 1)],
        vec![IntMatrix::new(1, 1, vec![1]).unwrap()],
    )
    .unwrap()
}

fn wide_center_rep() -> AdmissibleRep {
    let q = Quiver::new(vec!["v".into()], vec![("e".into(), "v".into(), "v".into())]).unwrap();
    AdmissibleRep::new(
        q,
        vec![(1, 2)],
        vec![IntMatrix::new(1, 2, vec![2, 1]).unwrap()],
    )
    .unwrap()
}

/// The test corpus: abelian ranks 1 and 2, Heisenberg, a non-Lie algebra,
/// a two-vertex representation with a nonzero edge, and a representation
/// with a rank-2 second summand.
pub fn corpus() -> Vec<(&'static str, AdmissibleRep)> {
    vec![
        ("abelian-1", algebra_to_rep(&NilpotentAlgebra::abelian(1))),
        ("abelian-2", algebra_to_rep(&NilpotentAlgebra::abelian(2))),
        (
            "heisenberg",
            algebra_to_rep(&NilpotentAlgebra::heisenberg()),
        ),
        ("non-lie", algebra_to_rep(&non_lie_algebra())),
        ("two-vertex", two_vertex_rep()),
        ("wide-center", wide_center_rep()),
    ]
}

/// Reps whose first summand is a single generator everywhere get the wider
/// verification window.
pub fn is_single_generator(rep: &AdmissibleRep) -> bool {
    rep.ranks().iter().all(|&(n1, _)| n1 <= 1)
}
