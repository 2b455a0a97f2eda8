use comwalk::increments::{make_lazy_ssrw, make_ssrw, make_stable_lattice, LatticeLaw};
use comwalk::lattice::{
    check_minimality, det_bound, reduce_to_unit, ssrw_basis, verify_support, LatticeBasis, DEFAULT_RHO,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Integer matrix with determinant +-1, built from elementary row operations.
fn unimodular(d: usize, ops: &[(usize, usize, i64)], flip: bool) -> DMatrix<f64> {
    let mut v = DMatrix::<f64>::identity(d, d);
    for &(i, j, k) in ops {
        let (i, j) = (i % d, j % d);
        if i != j {
            let row = v.row(j) * k as f64;
            let mut target = v.row_mut(i);
            target += row;
        }
    }
    if flip {
        v.row_mut(0).neg_mut();
    }
    v
}

fn ops() -> impl Strategy<Value = Vec<(usize, usize, i64)>> {
    prop::collection::vec((0usize..6, 0usize..6, -2i64..=2), 0..6)
}

/// Random finite law on `Z^d` with up to five atoms in `[-3, 3]^d`.
fn random_law(d: usize) -> impl Strategy<Value = LatticeLaw> {
    prop::collection::btree_map(prop::collection::vec(-3i64..=3, d), 1u32..100, 1..6).prop_map(move |m| {
        let total: u32 = m.values().sum();
        let atoms: Vec<(Vec<i64>, f64)> = m.into_iter().map(|(p, w)| (p, w as f64 / total as f64)).collect();
        let refs: Vec<(&[i64], f64)> = atoms.iter().map(|(p, q)| (p.as_slice(), *q)).collect();
        LatticeLaw::finite(d, &refs).unwrap()
    })
}

fn bundled() -> Vec<(LatticeLaw, LatticeBasis)> {
    let mut out = Vec::new();
    for d in 1..=4 {
        out.push((make_ssrw(d).unwrap(), ssrw_basis(d).unwrap()));
        out.push((make_ssrw(d).unwrap(), LatticeBasis::unit(d)));
        out.push((make_lazy_ssrw(d).unwrap(), LatticeBasis::unit(d)));
    }
    out
}

#[test]
fn ssrw_bases_have_determinant_two_and_carry_the_walk() {
    for d in 1..=6 {
        let b = ssrw_basis(d).unwrap();
        assert_eq!(b.h().round(), 2.0);
        assert!((b.h() - 2.0).abs() < 1e-12);
        assert!(verify_support(&make_ssrw(d).unwrap(), &b));
    }
}

#[test]
fn ssrw_bases_are_minimal_and_unit_basis_is_not() {
    let rho = DEFAULT_RHO;
    for d in 1..=6 {
        let r = check_minimality(&make_ssrw(d).unwrap(), &ssrw_basis(d).unwrap(), rho, rho / 16.0).unwrap();
        assert!(r.is_minimal(), "d = {d}: {:?}", r.candidate_violations.first());
        assert!(r.c_rho > 0.0);
    }
    let r = check_minimality(&make_ssrw(1).unwrap(), &LatticeBasis::unit(1), rho, rho / 16.0).unwrap();
    assert!(!r.is_minimal());
    assert!(r
        .candidate_violations
        .iter()
        .any(|t| (t[0].abs() - PI).abs() <= rho / 16.0));
}

#[test]
fn det_bound_dominates_h_for_bundled_pairs() {
    for (law, basis) in bundled() {
        assert!(verify_support(&law, &basis));
        assert!(det_bound(&law).unwrap() + 1e-9 >= basis.h());
    }
}

#[test]
fn stable_law_sits_on_the_unit_lattice() {
    let law = make_stable_lattice(0.5).unwrap();
    let unit = LatticeBasis::unit(1);
    assert!(verify_support(&law, &unit));
    assert!(!verify_support(&law, &ssrw_basis(1).unwrap()));
    let r = check_minimality(&law, &unit, DEFAULT_RHO, DEFAULT_RHO / 16.0).unwrap();
    assert!(r.is_minimal());
}

#[test]
fn unimodular_change_of_basis_keeps_the_minimality_report() {
    let rho = DEFAULT_RHO;
    for d in 1..=3 {
        let law = make_ssrw(d).unwrap();
        let basis = ssrw_basis(d).unwrap();
        let v = unimodular(d, &[(0, 1, 1), (1, 0, -2), (2, 1, 1)], d > 1);
        let other = basis.with_change_of_basis(&v).unwrap();
        let a = check_minimality(&law, &basis, rho, rho / 16.0).unwrap();
        let b = check_minimality(&law, &other, rho, rho / 16.0).unwrap();
        assert_eq!(a.is_minimal(), b.is_minimal());
        assert_eq!(a.grid_points_evaluated, b.grid_points_evaluated);
        assert!((a.c_rho - b.c_rho).abs() < 1e-12, "d = {d}");
        assert!((a.max_abs_phi - b.max_abs_phi).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn change_of_basis_keeps_the_lattice(d in 1usize..=4, ops in ops(), flip: bool) {
        let basis = ssrw_basis(d).unwrap();
        let v = unimodular(d, &ops, flip);
        let other = basis.with_change_of_basis(&v).unwrap();
        prop_assert!((other.h() - basis.h()).abs() < 1e-9);
        prop_assert!(verify_support(&make_ssrw(d).unwrap(), &other));
        // same dual lattice: each generator of one is an integer combination of the other
        let k = other.dual_generator().try_inverse().unwrap() * basis.dual_generator();
        prop_assert!(k.iter().all(|x| (x - x.round()).abs() < 1e-9));
    }

    #[test]
    fn reduction_round_trips(law in random_law(2), ops in ops(), flip: bool) {
        let basis = LatticeBasis::new(unimodular(2, &ops, flip), DVector::from_vec(vec![1.0, -2.0])).unwrap();
        prop_assert!(verify_support(&law, &basis));
        let unit = reduce_to_unit(&law, &basis).unwrap();
        let original: BTreeMap<Vec<i64>, f64> = law.atoms().iter().map(|a| (a.point.clone(), a.prob)).collect();
        let pushed: BTreeMap<Vec<i64>, f64> = unit
            .atoms()
            .iter()
            .map(|a| {
                let z = DVector::from_iterator(2, a.point.iter().map(|v| *v as f64));
                let x = basis.matrix() * z + basis.offset();
                (x.iter().map(|v| v.round() as i64).collect(), a.prob)
            })
            .collect();
        prop_assert_eq!(original, pushed);
    }

    #[test]
    fn det_bound_dominates_h_for_supporting_bases(
        ops in ops(),
        scale in (1i64..=3, 1i64..=3),
        offset in prop::collection::vec(-2i64..=2, 2),
        coords in prop::collection::btree_set(prop::collection::vec(-2i64..=2, 2), 3..6),
    ) {
        let h = unimodular(2, &ops, false) * DMatrix::from_diagonal(&DVector::from_vec(vec![scale.0 as f64, scale.1 as f64]));
        let b = DVector::from_iterator(2, offset.iter().map(|v| *v as f64));
        let basis = LatticeBasis::new(h, b).unwrap();
        let points: Vec<Vec<i64>> = coords
            .iter()
            .map(|z| {
                let x = basis.matrix() * DVector::from_iterator(2, z.iter().map(|v| *v as f64)) + basis.offset();
                x.iter().map(|v| v.round() as i64).collect()
            })
            .collect();
        let p = 1.0 / points.len() as f64;
        let refs: Vec<(&[i64], f64)> = points.iter().map(|x| (x.as_slice(), p)).collect();
        let law = LatticeLaw::finite(2, &refs).unwrap();
        prop_assert!(verify_support(&law, &basis));
        if let Ok(det) = det_bound(&law) {
            prop_assert!(det + 1e-9 >= basis.h());
        }
    }

    #[test]
    fn charfn_is_bounded_and_conjugate_symmetric(law in random_law(2), t in prop::collection::vec(-20.0f64..20.0, 2)) {
        let p = law.charfn(&t);
        prop_assert!(p.norm() <= 1.0 + 1e-12);
        let neg: Vec<f64> = t.iter().map(|v| -v).collect();
        let q = law.charfn(&neg);
        prop_assert!((p.conj() - q).norm() < 1e-14);
    }

    #[test]
    fn abs_charfn_is_periodic_on_the_dual_lattice(
        d in 1usize..=3,
        t in prop::collection::vec(-5.0f64..5.0, 3),
        k in prop::collection::vec(-4i64..=4, 3),
    ) {
        let law = make_ssrw(d).unwrap();
        let basis = ssrw_basis(d).unwrap();
        let s = basis.dual_generator() * DVector::from_iterator(d, k[..d].iter().map(|v| *v as f64));
        let shifted: Vec<f64> = (0..d).map(|i| t[i] + s[i]).collect();
        let a = law.charfn(&t[..d]).norm();
        let b = law.charfn(&shifted).norm();
        prop_assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn symmetric_laws_have_real_charfn() {
    let mut rng = 0x1234_5678u64;
    let mut next = || {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        (rng >> 11) as f64 / (1u64 << 53) as f64 * 40.0 - 20.0
    };
    let sym = LatticeLaw::finite(1, &[(&[-3], 0.1), (&[3], 0.1), (&[-1], 0.3), (&[1], 0.3), (&[0], 0.2)]).unwrap();
    let laws = [make_ssrw(1).unwrap(), make_lazy_ssrw(1).unwrap(), sym];
    for law in &laws {
        assert!(law.is_symmetric());
        for _ in 0..1000 {
            assert!(law.charfn(&[next()]).im.abs() < 1e-12);
        }
    }
    let lazy2 = make_lazy_ssrw(2).unwrap();
    for _ in 0..1000 {
        assert!(lazy2.charfn(&[next(), next()]).im.abs() < 1e-12);
    }
}
