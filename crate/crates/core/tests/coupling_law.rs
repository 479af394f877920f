use rayon::prelude::*;
use sheetwalk::coupling::{bm_sup_distances, couple_bm};
use sheetwalk::stats::{bootstrap_quantile_se, ks_pvalue_normal, median, variance};
use sheetwalk::transport::{build_telegraph, uniform_grid};
use sheetwalk::derive_stream;

#[test]
fn marginals_are_standard_brownian() {
    let n = 1u64 << 14;
    let grid = uniform_grid(101);
    let samples: Vec<Vec<f64>> = (0..1000u64)
        .into_par_iter()
        .map(|r| {
            let s = derive_stream(3, &[r]);
            let path = build_telegraph(n, &mut s.child(0)).unwrap();
            couple_bm(&path, &s.child(1), &grid).unwrap().bm_values().to_vec()
        })
        .collect();
    for &j in &[25usize, 50, 100] {
        let t = grid[j];
        let z: Vec<f64> = samples.iter().map(|b| b[j] / t.sqrt()).collect();
        let p = ks_pvalue_normal(&z);
        assert!(p > 1e-3, "B({t}) / sqrt(t): KS p = {p}");
    }
    // independent increments of the right size
    let inc: Vec<f64> = samples.iter().map(|b| b[100] - b[50]).collect();
    let v = variance(&inc);
    assert!((v - 0.5).abs() < 5.0 * 0.5 * (2.0f64 / 999.0).sqrt(), "Var(B(1) - B(1/2)) = {v}");
    let cross: f64 = samples.iter().map(|b| b[50] * (b[100] - b[50])).sum::<f64>() / 1000.0;
    assert!(cross.abs() < 5.0 * 0.5 / 1000f64.sqrt(), "E B(1/2)(B(1) - B(1/2)) = {cross}");
}

#[test]
fn kink_values_match_a_grid_through_the_kinks() {
    let n = 1u64 << 10;
    for r in 0..5u64 {
        let s = derive_stream(11, &[r]);
        let path = build_telegraph(n, &mut s.child(0)).unwrap();
        let coarse = uniform_grid(257);
        let pair = couple_bm(&path, &s.child(1), &coarse).unwrap();

        // the kinks as grid points: the Brownian leg does not depend on the grid
        let mut fine: Vec<f64> = coarse.iter().copied().chain(path.kink_times()).collect();
        fine.sort_by(f64::total_cmp);
        let through = couple_bm(&path, &s.child(1), &fine).unwrap();
        for (t, &b) in path.kink_times().zip(pair.kink_bm()) {
            let k = fine.partition_point(|&x| x < t);
            assert!((through.bm_values()[k] - b).abs() < 1e-12, "kink at {t}");
        }
        let x = path.eval_grid(&fine).unwrap();
        let direct = x
            .iter()
            .zip(through.bm_values())
            .fold(0.0f64, |m, (x, b)| m.max((x - b).abs()));
        assert!((direct - pair.sup_distance()).abs() < 1e-12);
    }
}

#[test]
fn median_stable_under_replica_doubling() {
    let n = 1u64 << 10;
    let small = bm_sup_distances(n, 200, 5, 257).unwrap();
    let large = bm_sup_distances(n, 400, 6, 257).unwrap();
    let mut boot = derive_stream(99, &[0]);
    let se_small = bootstrap_quantile_se(&small, 0.5, 200, &mut boot);
    let se_large = bootstrap_quantile_se(&large, 0.5, 200, &mut boot);
    let gap = (median(&small) - median(&large)).abs();
    assert!(gap < 4.0 * (se_small.powi(2) + se_large.powi(2)).sqrt(), "gap {gap}");
}

#[test]
fn median_distance_decreases_in_n() {
    let medians: Vec<f64> = [1u64 << 6, 1 << 8, 1 << 10, 1 << 12]
        .iter()
        .map(|&n| median(&bm_sup_distances(n, 100, 8, 513).unwrap()))
        .collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}
