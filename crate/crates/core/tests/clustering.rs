mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::oracles::brute_hac;
use cure::cluster::{assign, cut, hac};

fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect()
}

#[test]
fn merge_order_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..100 {
        let n = rng.gen_range(2..=8);
        let dim = rng.gen_range(1..=4);
        let pts = random_points(&mut rng, n, dim);
        let got = hac(&pts).unwrap();
        let want = brute_hac(&pts);
        let order: Vec<(usize, usize)> = got.merges.iter().map(|m| (m.a, m.b)).collect();
        let expected: Vec<(usize, usize)> = want.iter().map(|m| (m.0, m.1)).collect();
        assert_eq!(order, expected, "trial {trial}");
        for (m, w) in got.merges.iter().zip(&want) {
            assert!((m.distance - w.2).abs() <= 1e-12 * w.2.max(1.0));
        }
    }
}

#[test]
fn equidistant_ties_take_lowest_pair() {
    // Unit square: four equal nearest pairs; (0, 1) must go first.
    let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
    let d = hac(&pts).unwrap();
    assert_eq!((d.merges[0].a, d.merges[0].b), (0, 1));
    let want = brute_hac(&pts);
    assert_eq!(
        d.merges.iter().map(|m| (m.a, m.b)).collect::<Vec<_>>(),
        want.iter().map(|m| (m.0, m.1)).collect::<Vec<_>>()
    );
}

#[test]
fn separated_blobs_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let centers = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]];
    let mut pts = Vec::new();
    for i in 0..30 {
        let c = centers[i % 3];
        pts.push(vec![c[0] + rng.gen_range(-1.0..1.0), c[1] + rng.gen_range(-1.0..1.0)]);
    }
    let clusters = cut(&hac(&pts).unwrap(), &pts, 3).unwrap();
    for c in &clusters {
        assert_eq!(c.members.len(), 10);
        assert!(c.members.iter().all(|m| m % 3 == c.members[0] % 3));
    }
    for (i, p) in pts.iter().enumerate() {
        let home = clusters.iter().find(|c| c.members.contains(&i)).unwrap().id;
        assert_eq!(assign(p, &clusters).unwrap(), home);
    }
}

#[test]
fn degenerate_inputs_rejected() {
    assert!(hac(&[vec![1.0]]).is_err());
    assert!(hac(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    assert!(hac(&[vec![f64::NAN], vec![1.0]]).is_err());
    let pts = vec![vec![0.0], vec![1.0]];
    let d = hac(&pts).unwrap();
    assert!(cut(&d, &pts, 0).is_err());
    assert!(cut(&d, &pts, 3).is_err());
}

fn points_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..12, 1usize..4)
        .prop_flat_map(|(n, dim)| proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, dim), n))
}

proptest! {
    #[test]
    fn cut_partitions_the_inputs(pts in points_strategy(), k_seed in 0usize..100) {
        let k = 1 + k_seed % pts.len();
        let clusters = cut(&hac(&pts).unwrap(), &pts, k).unwrap();
        prop_assert_eq!(clusters.len(), k);
        let mut all: Vec<usize> = clusters.iter().flat_map(|c| c.members.clone()).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..pts.len()).collect::<Vec<_>>());
        for w in clusters.windows(2) {
            prop_assert!(w[0].members.len() > w[1].members.len()
                || (w[0].members.len() == w[1].members.len() && w[0].members[0] < w[1].members[0]));
        }
        for (i, c) in clusters.iter().enumerate() {
            prop_assert_eq!(c.id, i);
            for d in 0..pts[0].len() {
                let mean = c.members.iter().map(|&m| pts[m][d]).sum::<f64>() / c.members.len() as f64;
                prop_assert!((c.centroid[d] - mean).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn merge_heights_never_decrease(pts in points_strategy()) {
        // Average linkage is monotone.
        let d = hac(&pts).unwrap();
        prop_assert_eq!(d.merges.len(), pts.len() - 1);
        for w in d.merges.windows(2) {
            prop_assert!(w[1].distance >= w[0].distance - 1e-9);
        }
        prop_assert_eq!(d.merges.last().unwrap().size, pts.len());
    }

    #[test]
    fn coarser_cuts_nest(pts in points_strategy()) {
        let d = hac(&pts).unwrap();
        for k in 2..=pts.len() {
            let fine = cut(&d, &pts, k).unwrap();
            let coarse = cut(&d, &pts, k - 1).unwrap();
            for f in &fine {
                prop_assert!(coarse.iter().any(|c| f.members.iter().all(|m| c.members.contains(m))));
            }
        }
    }
}
