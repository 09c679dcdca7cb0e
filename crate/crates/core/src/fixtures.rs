//! Built-in metrics used by tests, the invariant suite, and the CLI.

use crate::metric::MetricSpec;
use crate::poly::PolyField;
use crate::symtensor::{build_from_representatives, MultiIndex};

/// `(sorted 1-based indices, [(exponents, coefficient)])`
type Entry<'a> = (&'a [usize], &'a [(&'a [u32], f64)]);

fn spec_from(name: &str, n: usize, m: usize, entries: &[Entry]) -> MetricSpec {
    let entries = entries
        .iter()
        .map(|(idx, terms)| {
            let poly = PolyField::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c)));
            (MultiIndex(idx.iter().map(|i| i - 1).collect()), poly)
        })
        .collect();
    let a = build_from_representatives(n, m, entries).expect("fixture is well formed");
    MetricSpec::new(a, None).expect("fixture is well formed").with_name(name)
}

/// `K^4 = (p1^2 + p2^2)^2`, a Euclidean metric written as a quartic root.
pub fn m_euc4() -> MetricSpec {
    spec_from(
        "M_EUC4",
        2,
        4,
        &[
            (&[1, 1, 1, 1], &[(&[0, 0], 1.0)]),
            (&[2, 2, 2, 2], &[(&[0, 0], 1.0)]),
            (&[1, 1, 2, 2], &[(&[0, 0], 1.0 / 3.0)]),
        ],
    )
}

/// `K^3 = p1^3 + p2^3`.
pub fn m_cub() -> MetricSpec {
    spec_from(
        "M_CUB",
        2,
        3,
        &[(&[1, 1, 1], &[(&[0, 0], 1.0)]), (&[2, 2, 2], &[(&[0, 0], 1.0)])],
    )
}

/// `K^3 = (1 + x1) p1^3 + p2^3`, a Berwald metric with quadratic spray.
pub fn m_x() -> MetricSpec {
    spec_from(
        "M_X",
        2,
        3,
        &[
            (&[1, 1, 1], &[(&[0, 0], 1.0), (&[1, 0], 1.0)]),
            (&[2, 2, 2], &[(&[0, 0], 1.0)]),
        ],
    )
}

/// Berwald-Moor cubic `K^3 = 6 p1 p2 p3`.
pub fn m_bm() -> MetricSpec {
    spec_from("M_BM", 3, 3, &[(&[1, 2, 3], &[(&[0, 0, 0], 1.0)])])
}

/// Position-dependent Riemannian control metric (`m = 2`):
/// `a^{11} = 1 + x1^2`, `a^{12} = x2 / 5`, `a^{22} = 1`.
pub fn m_riem2() -> MetricSpec {
    spec_from(
        "M_RIEM2",
        2,
        2,
        &[
            (&[1, 1], &[(&[0, 0], 1.0), (&[2, 0], 1.0)]),
            (&[1, 2], &[(&[0, 1], 0.2)]),
            (&[2, 2], &[(&[0, 0], 1.0)]),
        ],
    )
}

/// Position-dependent quartic that is neither Riemannian nor Berwald:
/// `a^{1111} = 1 + 3 x1/10`, `a^{2222} = 1 + x2/5`, `a^{1122} = 1/10 + x1 x2/20`,
/// `a^{1112} = x2/10`.
pub fn m_qx() -> MetricSpec {
    spec_from(
        "M_QX",
        2,
        4,
        &[
            (&[1, 1, 1, 1], &[(&[0, 0], 1.0), (&[1, 0], 0.3)]),
            (&[2, 2, 2, 2], &[(&[0, 0], 1.0), (&[0, 1], 0.2)]),
            (&[1, 1, 2, 2], &[(&[0, 0], 0.1), (&[1, 1], 0.05)]),
            (&[1, 1, 1, 2], &[(&[0, 1], 0.1)]),
        ],
    )
}

/// Three-dimensional position-dependent quartic.
pub fn m_q3() -> MetricSpec {
    spec_from(
        "M_Q3",
        3,
        4,
        &[
            (&[1, 1, 1, 1], &[(&[0, 0, 0], 1.0), (&[0, 1, 0], 0.2)]),
            (&[2, 2, 2, 2], &[(&[0, 0, 0], 1.0), (&[0, 0, 1], 0.1)]),
            (&[3, 3, 3, 3], &[(&[0, 0, 0], 1.0), (&[1, 0, 0], 0.1)]),
            (&[1, 1, 2, 2], &[(&[0, 0, 0], 0.1)]),
            (&[1, 1, 3, 3], &[(&[0, 0, 0], 0.1), (&[1, 1, 0], 0.05)]),
            (&[2, 2, 3, 3], &[(&[0, 0, 0], 0.1)]),
            (&[1, 2, 3, 3], &[(&[0, 0, 1], 0.05)]),
        ],
    )
}

/// `K^2 = p . p` in dimension `n`.
pub fn identity_quadratic(n: usize) -> MetricSpec {
    let entries = (0..n)
        .map(|i| (MultiIndex(vec![i, i]), PolyField::constant(n, 1.0)))
        .collect();
    let a = build_from_representatives(n, 2, entries).expect("valid");
    MetricSpec::new(a, None).expect("valid").with_name(format!("EUC2_{n}"))
}

/// Every named fixture.
pub fn all() -> Vec<MetricSpec> {
    vec![m_euc4(), m_cub(), m_x(), m_bm(), m_riem2(), m_qx(), m_q3()]
}

pub fn by_name(name: &str) -> Option<MetricSpec> {
    all().into_iter().find(|s| s.name() == Some(name))
}

/// A momentum inside the positive cone of every fixture, used as a default.
pub fn default_momentum(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + 0.25 * i as f64).collect()
}
