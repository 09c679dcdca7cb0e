use mroot_core::metric::mat_vec;
use mroot_core::spray::SprayContext;
use mroot_core::suite::metric_identity_errors;
use mroot_core::symtensor::{canonical_indices, multiplicity, sorted_rank, sym_len};
use mroot_core::{fixtures, EvalPoint, MetricBundle, MetricSpec, SymValueTensor};
use proptest::prelude::*;

fn fixture(k: usize) -> MetricSpec {
    fixtures::all().swap_remove(k % fixtures::all().len())
}

/// Momentum in the sampling annulus, from a raw vector of the right length.
fn momentum(raw: &[f64], n: usize) -> Option<Vec<f64>> {
    let p = raw[..n].to_vec();
    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm > 0.5).then_some(p)
}

fn point(spec: &MetricSpec, x: &[f64], raw: &[f64]) -> Option<EvalPoint> {
    let p = momentum(raw, spec.n())?;
    let pt = EvalPoint::new(spec, &x[..spec.n()], &p).ok()?;
    // stay away from the cone boundary where the metric degenerates
    let b = MetricBundle::new(spec, &pt).ok()?;
    (b.condition < 1e6).then_some(pt)
}

proptest! {
    #[test]
    fn storage_rank_is_a_bijection(n in 1usize..5, r in 0usize..5) {
        let all = canonical_indices(n, r);
        prop_assert_eq!(all.len(), sym_len(n, r));
        for (k, idx) in all.iter().enumerate() {
            prop_assert_eq!(sorted_rank(idx), k);
        }
        let orbit_total: usize = all.iter().map(|i| multiplicity(i)).sum();
        prop_assert_eq!(orbit_total, n.pow(r as u32));
    }

    #[test]
    fn rank_ignores_permutation(mut idx in prop::collection::vec(0usize..4, 0..6), seed in any::<u64>()) {
        let before = sorted_rank(&idx);
        let len = idx.len().max(1);
        idx.rotate_left((seed as usize) % len);
        prop_assert_eq!(sorted_rank(&idx), before);
    }

    #[test]
    fn contraction_matches_dense_sum(
        vals in prop::collection::vec(-2.0f64..2.0, 20),
        p in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        // order-3 symmetric tensor over n = 3 has 10 orbits
        let t = SymValueTensor::from_fn(3, 3, |i| vals[sorted_rank(i)]);
        let c = t.contract_momenta(&p, 2).unwrap();
        for i in 0..3 {
            let mut dense = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    dense += t.get(&[i, j, k]) * p[j] * p[k];
                }
            }
            prop_assert!((c.get(&[i]) - dense).abs() <= 1e-12 * (1.0 + dense.abs()));
        }
        let twice = t.contract_momenta(&p, 1).unwrap().contract_momenta(&p, 1).unwrap();
        for i in 0..3 {
            prop_assert!((twice.get(&[i]) - c.get(&[i])).abs() <= 1e-12);
        }
    }

    #[test]
    fn metric_identities_hold(
        k in 0usize..7,
        x in prop::collection::vec(-0.4f64..0.4, 3),
        raw in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let spec = fixture(k);
        if let Some(pt) = point(&spec, &x, &raw) {
            let errors = metric_identity_errors(&spec, &pt).unwrap();
            for e in errors {
                prop_assert!(e <= 1e-9, "{:?} {:?}", spec.name(), errors);
            }
        }
    }

    #[test]
    fn euler_relations(
        k in 0usize..7,
        x in prop::collection::vec(-0.4f64..0.4, 3),
        raw in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let spec = fixture(k);
        if let Some(pt) = point(&spec, &x, &raw) {
            let b = MetricBundle::new(&spec, &pt).unwrap();
            let p = pt.p();
            // the angular vector contracted with p is K
            let lp: f64 = b.l.iter().zip(p).map(|(a, b)| a * b).sum();
            prop_assert!((lp - b.k).abs() <= 1e-12 * b.k);
            // g^{ij} p_j = K l^i
            let gp = mat_vec(&b.g_up, p);
            for (g, l) in gp.iter().zip(&b.l) {
                prop_assert!((g - b.k * l).abs() <= 1e-10 * b.k);
            }
            // G is 2-homogeneous: G1 p = 2 G
            let jet = SprayContext::new(&spec, &pt).unwrap().hierarchy(3).unwrap();
            let n = spec.n();
            for i in 0..n {
                let g1p: f64 = (0..n).map(|j| jet.g1().get(&[j, i]) * p[j]).sum();
                prop_assert!((g1p - 2.0 * jet.g()[i]).abs() <= 1e-10 * b.k * b.k);
            }
        }
    }

    #[test]
    fn berwald_levels_are_symmetric(
        x in prop::collection::vec(-0.4f64..0.4, 2),
        raw in prop::collection::vec(0.3f64..2.0, 2),
    ) {
        let spec = fixtures::m_qx();
        if let Some(pt) = point(&spec, &x, &raw) {
            let jet = SprayContext::new(&spec, &pt).unwrap().hierarchy(3).unwrap();
            let g3 = jet.g3();
            for a in 0..2 { for b in 0..2 { for c in 0..2 { for i in 0..2 {
                let v = g3.get(&[a, b, c, i]);
                prop_assert!((v - g3.get(&[b, a, c, i])).abs() <= 1e-12 * (1.0 + v.abs()));
                prop_assert!((v - g3.get(&[a, c, b, i])).abs() <= 1e-12 * (1.0 + v.abs()));
            }}}}
        }
    }
}
