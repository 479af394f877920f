use proptest::prelude::*;
use sheetwalk::transport::{build_telegraph, eval_transport, uniform_grid, TelegraphPath};
use sheetwalk::derive_stream;

fn path_for(n: u64, seed: u64) -> TelegraphPath {
    build_telegraph(n, &mut derive_stream(seed, &[0])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_sweep_matches_pointwise(n in 1u64..5000, seed in any::<u64>(), points in 2usize..300) {
        let path = path_for(n, seed);
        let grid = uniform_grid(points);
        let swept = path.eval_grid(&grid).unwrap();
        for (&t, &v) in grid.iter().zip(&swept) {
            prop_assert_eq!(v, path.eval(t).unwrap());
        }
    }

    #[test]
    fn speed_is_sqrt_n(n in 1u64..5000, seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let path = path_for(n, seed);
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let dx = (path.eval(b).unwrap() - path.eval(a).unwrap()).abs();
        prop_assert!(dx <= (n as f64).sqrt() * (b - a) * (1.0 + 1e-9) + 1e-12);
        // no kink between a and b: the velocity is exactly +-sqrt(n)
        let events = path.events();
        let (ua, ub) = (a * n as f64, b * n as f64);
        if events.partition_point(|&e| e <= ua) == events.partition_point(|&e| e <= ub) {
            prop_assert!((dx - (n as f64).sqrt() * (b - a)).abs() <= 1e-9 * (n as f64).sqrt());
        }
    }

    #[test]
    fn flip_negates_and_keeps_sup(n in 1u64..5000, seed in any::<u64>(), t in 0.0f64..=1.0) {
        let path = path_for(n, seed);
        let flipped = path.flipped();
        prop_assert_eq!(flipped.eval(t).unwrap(), -path.eval(t).unwrap());
        prop_assert_eq!(flipped.sup_abs(), path.sup_abs());
    }

    #[test]
    fn sup_bounds_every_value(n in 1u64..3000, seed in any::<u64>()) {
        let path = path_for(n, seed);
        let sup = path.sup_abs();
        let grid_max = path.eval_grid(&uniform_grid(4097)).unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(grid_max <= sup + 1e-12);
        // attained at a kink or the endpoint
        let at_kinks = path.kink_values().chain([path.eval(1.0).unwrap()]).fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!((at_kinks - sup).abs() <= 1e-12);
    }
}

#[test]
fn explicit_path_values() {
    // flips at u = 1 and u = 3 for n = 4: +1 on [0,1), -1 on [1,3), +1 on [3,4]
    let path = TelegraphPath::from_parts(4, 1.0, vec![1.0, 3.0]).unwrap();
    let expect = |u: f64| -> f64 {
        let v = if u <= 1.0 {
            u
        } else if u <= 3.0 {
            2.0 - u
        } else {
            u - 4.0
        };
        v / 2.0
    };
    for k in 0..=40 {
        let t = k as f64 / 40.0;
        assert!((eval_transport(&path, t).unwrap() - expect(4.0 * t)).abs() < 1e-15, "t = {t}");
    }
    assert_eq!(path.sup_abs(), 0.5);
}

#[test]
fn invalid_parts_rejected() {
    assert!(TelegraphPath::from_parts(0, 1.0, vec![]).is_err());
    assert!(TelegraphPath::from_parts(4, 0.5, vec![]).is_err());
    assert!(TelegraphPath::from_parts(4, 1.0, vec![2.0, 1.0]).is_err());
    assert!(TelegraphPath::from_parts(4, 1.0, vec![5.0]).is_err());
    assert!(path_for(16, 1).eval(1.5).is_err());
}
