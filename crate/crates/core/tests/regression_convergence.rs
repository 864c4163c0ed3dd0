use seqate_core::regression::{KnnRegressor, PlugInRegressor};
use seqate_core::rng::seeded_rng;
use seqate_core::sim::Dgp;
use seqate_core::types::Arm;

// Held-out squared error of the treated-arm mean against the true
// conditional mean, after `n` training points.
fn mse_after(n: usize, seed: u64) -> f64 {
    let dgp = Dgp::Bernoulli;
    let mut rng = seeded_rng(seed, 0);
    let mut knn = KnnRegressor::new(10, 3).unwrap();
    let mut x = [0.0; 3];
    for _ in 0..n {
        dgp.draw_context(&mut rng, &mut x);
        let y = dgp.draw_outcome(&mut rng, Arm::Treatment, &x);
        knn.insert(&x, y);
    }
    let mut err = 0.0;
    let m = 400;
    for _ in 0..m {
        dgp.draw_context(&mut rng, &mut x);
        let p = knn.predict(&x).unwrap().clamped();
        let d = p.f_hat - dgp.mean(Arm::Treatment, &x);
        err += d * d;
    }
    err / m as f64
}

#[test]
fn knn_error_shrinks_with_sample_size() {
    let sizes = [100, 1000, 8000];
    let mse: Vec<f64> = sizes.iter().map(|&n| (0..4).map(|s| mse_after(n, s)).sum::<f64>() / 4.0).collect();
    assert!(mse[1] < mse[0], "{mse:?}");
    assert!(mse[2] < mse[1], "{mse:?}");
    // Variance part of a 10-NN average alone is at most 0.25/10.
    assert!(mse[2] < 0.03, "{mse:?}");
}
