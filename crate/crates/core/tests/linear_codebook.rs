use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spkid_core::linear_codebook::{
    cluster_stddev, distance_mae, lloyd_iterate, split_hyperplane, train_codebook,
    train_codebook_stages, Distance, LinearCodebook, SplitMethod, VqConfig,
};
use spkid_core::LpccVector;
use spkid_oracles as oracle;

fn random_vec(rng: &mut impl Rng, scale: f64) -> LpccVector {
    LpccVector(std::array::from_fn(|_| rng.gen_range(-scale..scale)))
}

fn as_vecs(v: &[LpccVector]) -> Vec<Vec<f64>> {
    v.iter().map(|x| x.0.to_vec()).collect()
}

/// Mixture of Gaussian blobs with per-dimension scales.
fn blobs(rng: &mut impl Rng, centres: usize, per: usize, spread: f64) -> Vec<LpccVector> {
    let means: Vec<LpccVector> = (0..centres).map(|_| random_vec(rng, 1.0)).collect();
    let mut out = Vec::new();
    for m in &means {
        for _ in 0..per {
            out.push(LpccVector(std::array::from_fn(|d| {
                m.0[d] + spread * oracle::normal(rng)
            })));
        }
    }
    out
}

#[test]
fn mae_matches_elementwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let a = random_vec(&mut rng, 2.0);
        let b = random_vec(&mut rng, 2.0);
        assert!((distance_mae(&a, &b) - oracle::mean_abs_diff(&a.0, &b.0)).abs() < 1e-15);
    }
}

#[test]
fn quantize_matches_exhaustive_scan_on_1000_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for case in 0..1000 {
        let size = 1 << (case % 6);
        let cents: Vec<LpccVector> = (0..size).map(|_| random_vec(&mut rng, 1.0)).collect();
        let cb =
            LinearCodebook::from_centroids(cents.clone(), SplitMethod::Hyperplane, Distance::Mae)
                .unwrap();
        let v = random_vec(&mut rng, 1.0);
        let got = cb.quantize(&v);
        let (idx, d) = oracle::nearest(&v.0, &as_vecs(&cents));
        if got.nearest_index != idx || (got.distortion - d).abs() > 1e-15 {
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn stddev_matches_one_pass_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.gen_range(2..60);
        let pts: Vec<LpccVector> = (0..n).map(|_| random_vec(&mut rng, 3.0)).collect();
        let got = cluster_stddev(&pts).unwrap();
        let want = oracle::stddev_per_dim(&as_vecs(&pts));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }
}

#[test]
fn hyperplane_direction_matches_dense_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let scales: [f64; 12] = std::array::from_fn(|d| 1.0 / (1.0 + d as f64));
        let pts: Vec<LpccVector> = (0..200)
            .map(|_| {
                LpccVector(std::array::from_fn(|d| {
                    scales[d] * oracle::normal(&mut rng)
                }))
            })
            .collect();
        let c = LpccVector::ZERO;
        let (plus, minus) = split_hyperplane(&pts, &c).unwrap();
        let (lambda, u) = oracle::dominant_covariance_eigen(&as_vecs(&pts));
        // plus - c = 0.1 sqrt(lambda) u_hat
        let off: Vec<f64> = plus.0.iter().map(|x| x / 0.1).collect();
        let norm = off.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(
            (norm * norm - lambda).abs() < 1e-6 * lambda,
            "{} vs {lambda}",
            norm * norm
        );
        let dot: f64 = off.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / norm;
        let sign = dot.signum();
        for (o, e) in off.iter().zip(&u) {
            assert!((o / norm - sign * e).abs() < 1e-6);
        }
        for d in 0..12 {
            assert!((plus.0[d] + minus.0[d]).abs() < 1e-15);
        }
    }
}

#[test]
fn lloyd_is_monotone_and_assignments_match_oracle() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let data = blobs(&mut rng, 6, 40, 0.3);
        let start: Vec<LpccVector> = (0..8).map(|_| random_vec(&mut rng, 1.0)).collect();
        let mut cb =
            LinearCodebook::from_centroids(start, SplitMethod::Hyperplane, Distance::Mae).unwrap();
        let mut prev = cb.mean_distortion(&data);
        for _ in 0..5 {
            let cents = as_vecs(cb.centroids());
            for (v, &i) in data.iter().zip(&cb.assign(&data)) {
                assert_eq!(oracle::nearest(&v.0, &cents).0, i);
            }
            let (next, d) = lloyd_iterate(&cb, &data).unwrap();
            assert!(d <= prev, "seed {seed}: {d} > {prev}");
            prev = d;
            cb = next;
        }
    }
}

/// Four blobs on the corners of a 2 x 1 rectangle. Binary splitting first
/// separates along the long side, then along the short one. (For four
/// arbitrarily placed blobs the first split may isolate one blob from three,
/// a local minimum no Lloyd pass escapes.) 5000 points per blob keep the
/// sampling error of each centroid coordinate well under the tolerance.
#[test]
fn recovers_separated_cluster_means() {
    let sigma = 0.05;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
        let offset = random_vec(&mut rng, 1.0);
        let means: Vec<LpccVector> = [(1.0, 0.5), (1.0, -0.5), (-1.0, 0.5), (-1.0, -0.5)]
            .iter()
            .map(|&(a, b)| {
                let mut m = offset.0;
                m[0] += a;
                m[1] += b;
                LpccVector(m)
            })
            .collect();
        let mut data = Vec::new();
        for m in &means {
            for _ in 0..5000 {
                data.push(LpccVector(std::array::from_fn(|d| {
                    m.0[d] + sigma * oracle::normal(&mut rng)
                })));
            }
        }
        for method in [SplitMethod::StdDev, SplitMethod::Hyperplane] {
            let cb = train_codebook(&data, 2, method).unwrap();
            for m in &means {
                let nearest = cb
                    .centroids()
                    .iter()
                    .map(|c| {
                        c.0.iter()
                            .zip(&m.0)
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0, f64::max)
                    })
                    .fold(f64::INFINITY, f64::min);
                // every coordinate of the matched centroid within 0.1 sigma
                assert!(nearest < 0.1 * sigma, "seed {seed} {method:?}: {nearest}");
            }
        }
    }
}

#[test]
fn doubling_never_increases_distortion_and_no_cell_is_empty() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let data = blobs(&mut rng, 10, 60, 0.4);
        for method in [SplitMethod::StdDev, SplitMethod::Hyperplane] {
            let stages = train_codebook_stages(&data, &VqConfig::new(6, method)).unwrap();
            for w in stages.windows(2) {
                assert!(w[1].training_distortion() <= w[0].training_distortion() + 1e-12);
            }
            for cb in &stages {
                let mut used = vec![false; cb.len()];
                cb.assign(&data).iter().for_each(|&i| used[i] = true);
                assert!(
                    used.iter().all(|&u| u),
                    "empty cell at {} bits",
                    cb.size_bits()
                );
                let n = cb.len();
                for i in 0..n {
                    for j in i + 1..n {
                        assert_ne!(cb.centroids()[i], cb.centroids()[j]);
                    }
                }
            }
            // separately trained sizes agree with the stage run
            let direct = train_codebook(&data, 4, method).unwrap();
            assert_eq!(&direct, &stages[4]);
        }
    }
}

#[test]
fn lloyd_fixed_point_is_bit_identical() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        // even cell sizes make the MAE median an interval
        let data = blobs(&mut rng, 4, 30, 0.3);
        for distance in [Distance::Mae, Distance::SquaredEuclidean] {
            let start: Vec<LpccVector> = (0..4).map(|_| random_vec(&mut rng, 1.0)).collect();
            let mut cb =
                LinearCodebook::from_centroids(start, SplitMethod::Hyperplane, distance).unwrap();
            let mut prev = cb.mean_distortion(&data);
            for _ in 0..100 {
                let (next, d) = lloyd_iterate(&cb, &data).unwrap();
                let stable = next.assign(&data) == cb.assign(&data);
                cb = next;
                if stable {
                    break;
                }
                prev = d;
            }
            let (again, d) = lloyd_iterate(&cb, &data).unwrap();
            assert_eq!(
                again.centroids(),
                cb.centroids(),
                "seed {seed} {distance:?}"
            );
            assert!(d <= prev);
        }
    }
}
