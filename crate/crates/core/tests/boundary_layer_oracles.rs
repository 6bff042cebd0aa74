mod common;

use common::{layer_checks, oracle_layers};
use numbl::boundary_layer::{profile_for, CnumKind, Layer};
use numbl::{builtin_scheme, BuiltinScheme};
use proptest::prelude::*;

#[test]
fn lax_friedrichs_layers_match_truncated_solve() {
    for lambda in [0.3, 0.5, 0.8] {
        let s = builtin_scheme(BuiltinScheme::LaxFriedrichs, -1.0, lambda).unwrap();
        let p = profile_for(&s).unwrap();
        let c = layer_checks(&s, &p);
        assert!(c.profile_recurrence < 1e-9);
        assert!(c.corrector_recurrence < 1e-9);
        assert!(c.boundary_rows < 1e-12);
        assert_eq!(c.decay_violations, 0);
        assert!(c.oracle_gap < 1e-6, "{}", c.oracle_gap);
    }
}

#[test]
fn ab3_layers_match_truncated_solve() {
    for lambda in [0.2, 0.3, 0.4] {
        let s = builtin_scheme(BuiltinScheme::Ab3FivePoint, -1.0, lambda).unwrap();
        let p = profile_for(&s).unwrap();
        let c = layer_checks(&s, &p);
        assert!(c.profile_recurrence < 1e-9);
        assert!(c.corrector_recurrence < 1e-9);
        assert!(c.boundary_rows < 1e-12);
        assert_eq!(c.decay_violations, 0);
        assert!(c.oracle_gap < 1e-6, "{}", c.oracle_gap);
    }
}

#[test]
fn lax_friedrichs_profile_is_geometric() {
    let (a, lambda) = (-1.0, 0.5);
    let s = builtin_scheme(BuiltinScheme::LaxFriedrichs, a, lambda).unwrap();
    let p = profile_for(&s).unwrap();
    let z = (1.0 + lambda * a) / (1.0 - lambda * a);
    for j in 0..40 {
        assert!((p.evaluate(Layer::Profile, j) + z.powi(j as i32)).abs() < 1e-14);
    }
}

#[test]
fn incoming_velocity_gives_trivial_layers() {
    for b in [
        BuiltinScheme::Upwind,
        BuiltinScheme::LaxWendroff,
        BuiltinScheme::LaxFriedrichs,
    ] {
        let s = builtin_scheme(b, 1.0, 0.5).unwrap();
        let p = profile_for(&s).unwrap();
        assert_eq!(p.c_num_kind, CnumKind::Trivial);
        assert!(p.sequence(Layer::Profile).is_zero());
        assert!(p.sequence(Layer::Corrector).is_zero());
        assert!((0..20).all(|j| p.evaluate(Layer::Profile, j) == 0.0));
    }
}

#[test]
fn oracle_itself_satisfies_boundary_rows() {
    let s = builtin_scheme(BuiltinScheme::Ab3FivePoint, -1.0, 0.4).unwrap();
    let (w, wt) = oracle_layers(&s, 400);
    assert_eq!((w[0], w[1]), (-1.0, -1.0));
    assert_eq!((wt[0], wt[1]), (0.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lax_wendroff_layers_satisfy_their_equations(cfl in 0.1f64..0.9, a in -2.0f64..-0.2) {
        let s = builtin_scheme(BuiltinScheme::LaxWendroff, a, cfl / a.abs()).unwrap();
        let p = profile_for(&s).unwrap();
        let c = layer_checks(&s, &p);
        prop_assert!(c.profile_recurrence < 1e-9);
        prop_assert!(c.corrector_recurrence < 1e-9);
        prop_assert!(c.boundary_rows < 1e-12);
        prop_assert_eq!(c.decay_violations, 0);
        prop_assert!(c.oracle_gap < 1e-6);
    }

    #[test]
    fn profile_decays_geometrically(lambda in 0.15f64..0.42) {
        let s = builtin_scheme(BuiltinScheme::Ab3FivePoint, -1.0, lambda).unwrap();
        let p = profile_for(&s).unwrap();
        prop_assert!(p.decay_rate < 1.0);
        let h = p.sequence(Layer::Profile).truncation_horizon();
        prop_assert!(p.evaluate(Layer::Profile, h + 10).abs() < 1e-12);
    }
}
