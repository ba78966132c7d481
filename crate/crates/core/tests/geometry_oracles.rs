mod common;

use common::*;
use rand::Rng;
use swarmtopo::embedding::{classical_mds, double_center, symmetric_eigen};
use swarmtopo::geodesic::GeodesicOracle;
use swarmtopo::subsample::maxmin_from;
use swarmtopo::{Domain, Point, Polygon};

fn centred_square() -> (Domain, Square) {
    let domain = Domain::new(10.0, 10.0, vec![Polygon::rect(3.0, 3.0, 4.0, 4.0)]).unwrap();
    (domain, Square { x0: 3.0, y0: 3.0, side: 4.0 })
}

#[test]
fn geodesics_match_any_angle_grid_search() {
    let (domain, square) = centred_square();
    let oracle = GeodesicOracle::new(&domain).unwrap();
    let res = 0.02;
    let mut r = rng(21);
    let mut checked = 0;
    while checked < 4 {
        let p = Point::new(r.random_range(0.0..10.0), r.random_range(0.0..10.0));
        let q = Point::new(r.random_range(0.0..10.0), r.random_range(0.0..10.0));
        if !domain.is_free(p) || !domain.is_free(q) {
            continue;
        }
        let exact = oracle.distance(p, q).unwrap();
        let grid = theta_star(10.0, 10.0, res, square, (p.x, p.y), (q.x, q.y));
        assert!((exact - grid).abs() <= 2.0 * res, "{p:?} {q:?}: {exact} vs {grid}");
        assert!(exact <= grid + 1e-9);
        checked += 1;
    }
}

#[test]
fn opposite_sides_of_the_obstacle() {
    let (domain, square) = centred_square();
    let oracle = GeodesicOracle::new(&domain).unwrap();
    let (p, q) = (Point::new(5.0, 1.0), Point::new(5.0, 9.0));
    // around one corner pair: two tangents of length hypot(2, 2) plus the side
    let expected = 2.0 * 8f64.sqrt() + 4.0;
    assert!((oracle.distance(p, q).unwrap() - expected).abs() < 1e-12);
    let grid = theta_star(10.0, 10.0, 0.05, square, (5.0, 1.0), (5.0, 9.0));
    assert!((grid - expected).abs() <= 0.1);
}

#[test]
fn mds_recovers_planar_points() {
    let mut r = rng(3);
    let pts = random_cloud(&mut r, 20);
    let dist = euclidean(&pts);
    let emb = classical_mds(&dist, 2).unwrap();
    let y: Vec<(f64, f64)> = emb.coordinates.iter().map(|c| (c[0], c[1])).collect();
    assert!(procrustes_rmse(&pts, &y) < 1e-6);
    let b = double_center(&dist);
    let n = pts.len();
    let (values, vectors) = symmetric_eigen(&b, n);
    let norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..n {
        for i in 0..n {
            let bv: f64 = (0..n).map(|j| b[i * n + j] * vectors[j * n + k]).sum();
            assert!((bv - values[k] * vectors[i * n + k]).abs() <= 1e-8 * norm);
        }
    }
}

#[test]
fn maxmin_packing_is_within_half_of_optimal() {
    // 100 points on a circle: the optimal 10-point packing is the regular
    // decagon, so its minimum separation is the chord over ten steps
    let pts = circle(100);
    let dist = euclidean(&pts);
    let all: Vec<usize> = (0..100).collect();
    let optimal = dist.get(0, 10);
    for first in [0, 37, 99] {
        let s = maxmin_from(&dist, &all, 10, first).unwrap();
        let mut sep = f64::INFINITY;
        for (a, &i) in s.iter().enumerate() {
            for &j in &s[a + 1..] {
                sep = sep.min(dist.get(i, j));
            }
        }
        assert!(sep >= optimal / 2.0);
    }
}
