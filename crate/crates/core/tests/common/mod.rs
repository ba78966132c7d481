//! Independent reference implementations shared by the integration tests
//! and the acceptance runner. None of them call into the library's
//! algorithms; they only consume its plain data types.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarmtopo::persistence::{Feature, PersistenceDiagram};
use swarmtopo::DistanceMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn euclidean(points: &[(f64, f64)]) -> DistanceMatrix {
    DistanceMatrix::from_fn(points.len(), |i, j| {
        (points[i].0 - points[j].0).hypot(points[i].1 - points[j].1)
    })
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64)> {
    (0..n).map(|_| (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0))).collect()
}

pub fn circle(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect()
}

// ---------------------------------------------------------------- graphs

/// Classic triple loop over a dense weight matrix (`inf` = no edge).
pub fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(i, j, w) in edges {
        if w < d[i][j] {
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Kruskal: finite dim-0 deaths (all births are zero) and the component count.
pub fn mst_deaths(dist: &DistanceMatrix) -> (Vec<f64>, usize) {
    let n = dist.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if dist.get(i, j).is_finite() {
                edges.push((dist.get(i, j), i, j));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    let mut deaths = Vec::new();
    for (w, i, j) in edges {
        let (a, b) = (root(&mut parent, i), root(&mut parent, j));
        if a != b {
            parent[a] = b;
            deaths.push(w);
        }
    }
    let components = n - deaths.len();
    deaths.retain(|&w| w > 0.0);
    deaths.sort_by(f64::total_cmp);
    (deaths, components)
}

// ----------------------------------------------------------- persistence

/// Rips filtration up to `scale` built by plain enumeration, reduced by the
/// textbook left-to-right algorithm on dense bit columns without clearing.
/// Returns `(dim, birth, death)` triples of positive length, sorted.
pub fn dense_rips_diagram(dist: &DistanceMatrix, scale: f64) -> Vec<(usize, f64, f64)> {
    let n = dist.len();
    let mut simplices: Vec<(f64, usize, Vec<usize>)> = (0..n).map(|i| (0.0, 0, vec![i])).collect();
    for i in 0..n {
        for j in i + 1..n {
            let v = dist.get(i, j);
            if v <= scale {
                simplices.push((v, 1, vec![i, j]));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let v = dist.get(i, j).max(dist.get(i, k)).max(dist.get(j, k));
                if v <= scale {
                    simplices.push((v, 2, vec![i, j, k]));
                }
            }
        }
    }
    simplices.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let m = simplices.len();
    let words = m.div_ceil(64);
    let position = |verts: &[usize]| simplices.iter().position(|s| s.2 == verts).expect("face present");
    let mut cols: Vec<Vec<u64>> = Vec::with_capacity(m);
    for s in &simplices {
        let mut col = vec![0u64; words];
        if s.1 > 0 {
            for skip in 0..s.2.len() {
                let face: Vec<usize> = s.2.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v).collect();
                let f = position(&face);
                col[f / 64] ^= 1 << (f % 64);
            }
        }
        cols.push(col);
    }
    let low = |c: &[u64]| {
        c.iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(k, &w)| k * 64 + 63 - w.leading_zeros() as usize)
    };
    let mut low_owner: Vec<Option<usize>> = vec![None; m];
    let mut paired = vec![false; m];
    let mut out = Vec::new();
    for j in 0..m {
        while let Some(l) = low(&cols[j]) {
            match low_owner[l] {
                Some(o) => {
                    let src = cols[o].clone();
                    for (a, b) in cols[j].iter_mut().zip(src) {
                        *a ^= b;
                    }
                }
                None => break,
            }
        }
        if let Some(l) = low(&cols[j]) {
            low_owner[l] = Some(j);
            paired[l] = true;
            paired[j] = true;
            let (birth, death) = (simplices[l].0, simplices[j].0);
            if death > birth {
                out.push((simplices[l].1, birth, death));
            }
        }
    }
    for (j, s) in simplices.iter().enumerate() {
        if !paired[j] && s.1 < 2 {
            out.push((s.1, s.0, f64::INFINITY));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    out
}

pub fn triples(pd: &PersistenceDiagram) -> Vec<(usize, f64, f64)> {
    let mut out: Vec<(usize, f64, f64)> = pd.features.iter().map(|f| (f.dim, f.birth, f.death)).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    out
}

// ------------------------------------------------------------ bottleneck

fn linf(a: &Feature, b: &Feature) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

fn gap(f: &Feature) -> f64 {
    (f.death - f.birth) / 2.0
}

/// Minimum over every partial matching between two small finite diagrams;
/// unmatched points pay their distance to the diagonal.
pub fn brute_bottleneck(a: &[Feature], b: &[Feature]) -> f64 {
    fn go(k: usize, a: &[Feature], b: &[Feature], used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if k == a.len() {
            let rest = b.iter().zip(used.iter()).filter(|(_, &u)| !u).map(|(f, _)| gap(f)).fold(0.0, f64::max);
            *best = best.min(acc.max(rest));
            return;
        }
        go(k + 1, a, b, used, acc.max(gap(&a[k])), best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(k + 1, a, b, used, acc.max(linf(&a[k], &b[j])), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, a, b, &mut vec![false; b.len()], 0.0, &mut best);
    best
}

pub fn random_features(rng: &mut ChaCha8Rng, max: usize) -> Vec<Feature> {
    let n = rng.random_range(0..=max);
    (0..n)
        .map(|_| {
            let birth = rng.random_range(0.0..5.0);
            Feature { dim: 1, birth, death: birth + rng.random_range(0.0..5.0) }
        })
        .collect()
}

// ------------------------------------------------------- any-angle grid

/// Axis-aligned open square obstacle `(x0, y0, side)`.
#[derive(Clone, Copy)]
pub struct Square {
    pub x0: f64,
    pub y0: f64,
    pub side: f64,
}

impl Square {
    fn inside(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x0 + self.side && y > self.y0 && y < self.y0 + self.side
    }

    /// Liang-Barsky clip against the open square: true when the segment
    /// passes through its interior.
    fn cuts(&self, p: (f64, f64), q: (f64, f64)) -> bool {
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        let checks = [
            (-dx, p.0 - self.x0),
            (dx, self.x0 + self.side - p.0),
            (-dy, p.1 - self.y0),
            (dy, self.y0 + self.side - p.1),
        ];
        for (pk, qk) in checks {
            if pk == 0.0 {
                if qk <= 0.0 {
                    return false;
                }
            } else {
                let r = qk / pk;
                if pk < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        // a segment that only grazes the boundary has a degenerate overlap
        if t1 - t0 <= 1e-12 {
            return false;
        }
        let tm = (t0 + t1) / 2.0;
        self.inside(p.0 + tm * dx, p.1 + tm * dy)
    }
}

/// Theta* over the node lattice of spacing `res` on `[0,w]x[0,h]`. Start and
/// goal are attached exactly to the surrounding lattice nodes.
pub fn theta_star(w: f64, h: f64, res: f64, obstacle: Square, s: (f64, f64), g: (f64, f64)) -> f64 {
    let (nx, ny) = ((w / res).round() as usize + 1, (h / res).round() as usize + 1);
    let node = |i: usize, j: usize| (i as f64 * res, j as f64 * res);
    let los = |p: (f64, f64), q: (f64, f64)| !obstacle.cuts(p, q);
    let d = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).hypot(p.1 - q.1);
    if los(s, g) {
        return d(s, g);
    }
    let idx = |i: usize, j: usize| i * ny + j;
    let mut cost = vec![f64::INFINITY; nx * ny];
    let mut parent = vec![(0.0, 0.0, 0.0); nx * ny]; // point and its path cost
    let mut closed = vec![false; nx * ny];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    let key = |f: f64| f.to_bits(); // non-negative floats order like their bits
    let around = |p: (f64, f64)| {
        let (i, j) = ((p.0 / res).floor() as usize, (p.1 / res).floor() as usize);
        let mut v = Vec::new();
        for a in i..=(i + 1).min(nx - 1) {
            for b in j..=(j + 1).min(ny - 1) {
                v.push((a, b));
            }
        }
        v
    };
    for (i, j) in around(s) {
        let p = node(i, j);
        if !obstacle.inside(p.0, p.1) && los(s, p) {
            let c = d(s, p);
            cost[idx(i, j)] = c;
            parent[idx(i, j)] = (s.0, s.1, 0.0);
            heap.push(Reverse((key(c + d(p, g)), idx(i, j))));
        }
    }
    let goal_nodes: Vec<usize> = around(g).into_iter().map(|(i, j)| idx(i, j)).collect();
    let mut best = f64::INFINITY;
    while let Some(Reverse((f, u))) = heap.pop() {
        if f64::from_bits(f) >= best {
            break;
        }
        if closed[u] {
            continue;
        }
        closed[u] = true;
        let (ui, uj) = (u / ny, u % ny);
        let up = node(ui, uj);
        let (px, py, pc) = parent[u];
        if goal_nodes.contains(&u) {
            let via_parent = if los((px, py), g) { pc + d((px, py), g) } else { f64::INFINITY };
            let direct = if los(up, g) { cost[u] + d(up, g) } else { f64::INFINITY };
            best = best.min(via_parent).min(direct);
        }
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (vi, vj) = (ui as i64 + di, uj as i64 + dj);
                if vi < 0 || vj < 0 || vi >= nx as i64 || vj >= ny as i64 {
                    continue;
                }
                let v = idx(vi as usize, vj as usize);
                let vp = node(vi as usize, vj as usize);
                if closed[v] || obstacle.inside(vp.0, vp.1) || !los(up, vp) {
                    continue;
                }
                let (cand, par) = if los((px, py), vp) {
                    (pc + d((px, py), vp), (px, py, pc))
                } else {
                    (cost[u] + d(up, vp), (up.0, up.1, cost[u]))
                };
                if cand < cost[v] {
                    cost[v] = cand;
                    parent[v] = par;
                    heap.push(Reverse((key(cand + d(vp, g)), v)));
                }
            }
        }
    }
    best
}

// ------------------------------------------------------------- Procrustes

/// RMSE after the best rotation or reflection of centred `y` onto centred `x`.
pub fn procrustes_rmse(x: &[(f64, f64)], y: &[(f64, f64)]) -> f64 {
    let centre = |p: &[(f64, f64)]| {
        let n = p.len() as f64;
        let (sx, sy) = p.iter().fold((0.0, 0.0), |a, q| (a.0 + q.0, a.1 + q.1));
        p.iter().map(|q| (q.0 - sx / n, q.1 - sy / n)).collect::<Vec<_>>()
    };
    let (x, y) = (centre(x), centre(y));
    let fit = |y: &[(f64, f64)]| {
        // rotation maximising sum x . R y
        let (mut a, mut b) = (0.0, 0.0);
        for (p, q) in x.iter().zip(y) {
            a += p.0 * q.0 + p.1 * q.1;
            b += p.1 * q.0 - p.0 * q.1;
        }
        let t = b.atan2(a);
        let (c, s) = (t.cos(), t.sin());
        let sse: f64 = x
            .iter()
            .zip(y)
            .map(|(p, q)| {
                let r = (c * q.0 - s * q.1, s * q.0 + c * q.1);
                (p.0 - r.0).powi(2) + (p.1 - r.1).powi(2)
            })
            .sum();
        (sse / x.len() as f64).sqrt()
    };
    let mirrored: Vec<(f64, f64)> = y.iter().map(|q| (q.0, -q.1)).collect();
    fit(&y).min(fit(&mirrored))
}
