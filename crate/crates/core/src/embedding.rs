//! Classical multidimensional scaling.

use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

const JACOBI_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    /// One row per input point, `dim` columns, centred at the origin.
    pub coordinates: Vec<Vec<f64>>,
    pub eigenvalues_used: Vec<f64>,
    pub stress: f64,
}

/// `B = -1/2 J D^2 J` with `J = I - 11^T / n`, row-major.
pub fn double_center(dist: &DistanceMatrix) -> Vec<f64> {
    let n = dist.len();
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = dist.get(i, j);
            b[i * n + j] = d * d;
        }
    }
    let row_means: Vec<f64> = (0..n)
        .map(|i| b[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            // D^2 is symmetric so column means equal row means
            b[i * n + j] = -0.5 * (b[i * n + j] - row_means[i] - row_means[j] + grand);
        }
    }
    b
}

/// Eigen-decomposition of a symmetric row-major matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in descending order and the matching
/// eigenvectors as columns of a row-major matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + col] = v[k * n + src];
        }
    }
    (values, vectors)
}

/// Embeds a finite symmetric matrix into `dim` dimensions. Negative
/// eigenvalues are clamped to zero; the residual shows up in `stress`.
pub fn classical_mds(dist: &DistanceMatrix, dim: usize) -> Result<Embedding2D> {
    dist.validate()?;
    if !dist.is_finite() {
        return Err(Error::Matrix("classical MDS needs finite distances".into()));
    }
    let n = dist.len();
    if n == 0 {
        return Err(Error::Empty("distance matrix"));
    }
    let b = double_center(dist);
    let (values, vectors) = symmetric_eigen(&b, n);
    let used: Vec<f64> = (0..dim).map(|k| values.get(k).copied().unwrap_or(0.0).max(0.0)).collect();
    let mut coordinates = vec![vec![0.0; dim]; n];
    for (k, &lambda) in used.iter().enumerate() {
        if k >= n {
            break;
        }
        let s = lambda.sqrt();
        for (i, row) in coordinates.iter_mut().enumerate() {
            row[k] = vectors[i * n + k] * s;
        }
    }
    for k in 0..dim {
        let m = coordinates.iter().map(|r| r[k]).sum::<f64>() / n as f64;
        for row in &mut coordinates {
            row[k] -= m;
        }
    }
    let stress = stress(dist, &coordinates);
    Ok(Embedding2D {
        coordinates,
        eigenvalues_used: used,
        stress,
    })
}

/// Kruskal stress-1 between input distances and embedded Euclidean ones.
pub fn stress(dist: &DistanceMatrix, coords: &[Vec<f64>]) -> f64 {
    let n = dist.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let e: f64 = coords[i]
                .iter()
                .zip(&coords[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let d = dist.get(i, j);
            num += (d - e) * (d - e);
            den += d * d;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}
