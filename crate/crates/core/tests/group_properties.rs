use entire_ma::group::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cyclic_epsilon_is_invariant_under_conjugation(m in 3usize..=12, angle in 0.0f64..6.3, flip in any::<bool>()) {
        let c = cyclic(m).unwrap();
        let mut r = OrthoMatrix::rotation2(angle);
        if flip {
            r = r.mul(&OrthoMatrix::from_row_major(2, vec![1.0, 0.0, 0.0, -1.0]).unwrap());
        }
        let conj = c.conjugate_by(&r);
        let e0 = lemma1_epsilon(&c, 4096);
        let e1 = lemma1_epsilon(&conj, 4096);
        prop_assert!((e0 - e1).abs() <= 1e-9);
        prop_assert!((e0 - (std::f64::consts::PI / m as f64).cos()).abs() <= 1e-9);
    }

    #[test]
    fn orbits_are_group_invariant(m in 2usize..=10, x in prop::array::uniform2(-2.0f64..2.0)) {
        let d = dihedral(m).unwrap();
        let orb = orbit(&x, &d);
        for g in d.elements() {
            for p in &orb.points {
                let q = g.apply(p);
                let nearest = orb.points.iter().map(|s| ((s[0] - q[0]).powi(2) + (s[1] - q[1]).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
                prop_assert!(nearest < 1e-9);
            }
        }
    }

    #[test]
    fn symmetrized_functions_are_invariant(m in 2usize..=8, x in prop::array::uniform2(-2.0f64..2.0)) {
        let d = dihedral(m).unwrap();
        let h = |p: &[f64]| (p[0] - 0.3).exp() + p[1] * p[1] * p[0];
        let s = symmetrize_function(h, &d);
        let v = s(&x);
        for g in d.elements() {
            prop_assert!((s(&g.apply(&x)) - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }
}

#[test]
fn antipodal_groups_have_zero_epsilon() {
    for n in 2..=4 {
        assert_eq!(lemma1_epsilon(&neg_identity(n).unwrap(), 2000), 0.0);
    }
}

#[test]
fn epsilon_never_exceeds_one_and_hyperoctahedral_is_positive() {
    let e = lemma1_epsilon(&hyperoctahedral(3).unwrap(), 2000);
    assert!(e > 0.0 && e <= 1.0, "{e}");
}
