//! Vietoris-Rips filtrations and persistent homology in dimensions 0 and 1
//! over the two-element field.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::distance::{parse_real, write_real, DistanceMatrix};
use crate::error::{Error, Result};

/// A vertex, edge or triangle. Unused vertex slots hold `u32::MAX`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    pub verts: [u32; 3],
    pub dim: u8,
    pub value: f64,
}

impl Simplex {
    pub fn vertex(v: u32) -> Self {
        Self { verts: [v, u32::MAX, u32::MAX], dim: 0, value: 0.0 }
    }

    /// Vertices are sorted so that faces can be enumerated canonically.
    pub fn edge(a: u32, b: u32, value: f64) -> Self {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Self { verts: [a, b, u32::MAX], dim: 1, value }
    }

    pub fn triangle(a: u32, b: u32, c: u32, value: f64) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        Self { verts: v, dim: 2, value }
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..=self.dim as usize]
    }

    fn faces(&self) -> Vec<Simplex> {
        let v = self.verts;
        match self.dim {
            0 => Vec::new(),
            1 => vec![Simplex::vertex(v[0]), Simplex::vertex(v[1])],
            _ => vec![
                Simplex::edge(v[0], v[1], 0.0),
                Simplex::edge(v[0], v[2], 0.0),
                Simplex::edge(v[1], v[2], 0.0),
            ],
        }
    }

    fn key(&self) -> (u8, [u32; 3]) {
        (self.dim, self.verts)
    }
}

/// Simplices sorted by `(value, dim, vertices)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Filtration {
    pub simplices: Vec<Simplex>,
}

impl Filtration {
    /// Sorts arbitrary simplices into filtration order.
    pub fn from_simplices(mut simplices: Vec<Simplex>) -> Self {
        simplices.sort_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(a.dim.cmp(&b.dim))
                .then(a.verts.cmp(&b.verts))
        });
        Self { simplices }
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn count(&self, dim: u8) -> usize {
        self.simplices.iter().filter(|s| s.dim == dim).count()
    }
}

/// Rips filtration up to `max_dim` (at most 2) with all simplices of
/// diameter at most `max_scale`. Infinite entries never enter.
pub fn build_rips_filtration(dist: &DistanceMatrix, max_scale: f64, max_dim: usize) -> Result<Filtration> {
    dist.validate()?;
    if !(max_scale > 0.0) {
        return Err(Error::param("max_scale must be positive"));
    }
    if max_dim > 2 {
        return Err(Error::param("max_dim must be at most 2"));
    }
    let n = dist.len();
    let mut simplices: Vec<Simplex> = (0..n as u32).map(Simplex::vertex).collect();
    if max_dim >= 1 {
        for i in 0..n {
            for j in i + 1..n {
                let d = dist.get(i, j);
                if d <= max_scale {
                    simplices.push(Simplex::edge(i as u32, j as u32, d));
                }
            }
        }
    }
    if max_dim >= 2 {
        for i in 0..n {
            for j in i + 1..n {
                let dij = dist.get(i, j);
                if !(dij <= max_scale) {
                    continue;
                }
                for k in j + 1..n {
                    let v = dij.max(dist.get(i, k)).max(dist.get(j, k));
                    if v <= max_scale {
                        simplices.push(Simplex::triangle(i as u32, j as u32, k as u32, v));
                    }
                }
            }
        }
    }
    Ok(Filtration::from_simplices(simplices))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub dim: usize,
    pub birth: f64,
    #[serde(with = "crate::util::real")]
    pub death: f64,
}

impl Feature {
    pub fn length(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub features: Vec<Feature>,
}

impl PersistenceDiagram {
    pub fn new(mut features: Vec<Feature>) -> Self {
        features.sort_by(|a, b| {
            a.dim
                .cmp(&b.dim)
                .then(a.birth.total_cmp(&b.birth))
                .then(a.death.total_cmp(&b.death))
        });
        Self { features }
    }

    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &Feature> + '_ {
        self.features.iter().filter(move |f| f.dim == dim)
    }

    pub fn restricted(&self, dim: usize) -> Self {
        Self { features: self.in_dim(dim).copied().collect() }
    }

    /// Lengths of the finite features in `dim`.
    pub fn finite_lengths(&self, dim: usize) -> Vec<f64> {
        self.in_dim(dim).filter(|f| !f.is_essential()).map(Feature::length).collect()
    }

    pub fn essential_count(&self, dim: usize) -> usize {
        self.in_dim(dim).filter(|f| f.is_essential()).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "dim,birth,death")?;
        for f in &self.features {
            let mut line = format!("{},", f.dim);
            write_real(&mut line, f.birth);
            line.push(',');
            write_real(&mut line, f.death);
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?;
        match header.as_deref().map(str::trim) {
            Some("dim,birth,death") => {}
            _ => return Err(Error::Parse("diagram CSV must start with `dim,birth,death`".into())),
        }
        let mut features = Vec::new();
        for (no, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!("diagram line {}: expected 3 fields", no + 2)));
            }
            let dim = cols[0]
                .parse()
                .map_err(|_| Error::Parse(format!("diagram line {}: bad dim", no + 2)))?;
            let birth = parse_real(cols[1])?;
            let death = parse_real(cols[2])?;
            if !(death >= birth) {
                return Err(Error::Parse(format!("diagram line {}: death before birth", no + 2)));
            }
            features.push(Feature { dim, birth, death });
        }
        // keep file order so that round trips are exact
        Ok(Self { features })
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiCounts {
    pub beta0: usize,
    pub beta1: usize,
}

/// Features alive at `scale`, i.e. with `birth <= scale < death`.
pub fn betti_at_scale(diagram: &PersistenceDiagram, scale: f64) -> BettiCounts {
    let alive = |dim| diagram.in_dim(dim).filter(|f| f.birth <= scale && scale < f.death).count();
    BettiCounts { beta0: alive(0), beta1: alive(1) }
}

/// Symmetric difference of two sorted index lists.
fn add_columns(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Boundary columns as sorted filtration indices; fails when a face is
/// missing or does not precede its coface.
fn boundary_columns(filtration: &Filtration) -> Result<Vec<Vec<u32>>> {
    let index: HashMap<(u8, [u32; 3]), usize> = filtration
        .simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.key(), i))
        .collect();
    if index.len() != filtration.len() {
        return Err(Error::Filtration("duplicate simplex".into()));
    }
    let mut columns = Vec::with_capacity(filtration.len());
    for (pos, s) in filtration.simplices.iter().enumerate() {
        let mut col = Vec::with_capacity(s.dim as usize + 1);
        for face in s.faces() {
            match index.get(&face.key()) {
                Some(&f) if f < pos => col.push(f as u32),
                Some(_) => {
                    let mut msg = String::new();
                    let _ = write!(msg, "face {:?} of {:?} appears after it", face.vertices(), s.vertices());
                    return Err(Error::Filtration(msg));
                }
                None => {
                    return Err(Error::Filtration(format!(
                        "face {:?} of {:?} is missing",
                        face.vertices(),
                        s.vertices()
                    )))
                }
            }
        }
        col.sort_unstable();
        columns.push(col);
    }
    Ok(columns)
}

/// Persistence pairs of a filtration of dimension at most 2.
///
/// Dimension 0 is the elder-rule union-find, which yields the same pairs
/// as reducing the edge columns. Dimension 1 reduces the anti-transposed
/// boundary matrix (coboundary columns of edges, processed from the last
/// edge backwards), whose low-entry pairing coincides with that of the
/// boundary matrix but needs far fewer column additions on Rips complexes.
/// Edges already paired in dimension 0 are cleared.
pub fn compute_persistence(filtration: &Filtration) -> Result<PersistenceDiagram> {
    let columns = boundary_columns(filtration)?;
    let simplices = &filtration.simplices;
    let m = simplices.len();
    let max_dim = simplices.iter().map(|s| s.dim).max().unwrap_or(0);
    let mut paired = vec![false; m];
    let mut features = Vec::new();

    // vertices and edges are indices into the filtration; a root is the
    // oldest vertex of its component
    let mut parent: Vec<u32> = (0..m as u32).collect();
    for (j, s) in simplices.iter().enumerate() {
        if s.dim != 1 {
            continue;
        }
        let (a, b) = (find(&mut parent, columns[j][0]), find(&mut parent, columns[j][1]));
        if a == b {
            continue;
        }
        let (old, young) = (a.min(b), a.max(b));
        parent[young as usize] = old;
        paired[young as usize] = true;
        paired[j] = true;
        let (birth, death) = (simplices[young as usize].value, s.value);
        if death > birth {
            features.push(Feature { dim: 0, birth, death });
        }
    }

    if max_dim >= 2 {
        let mut cofaces: Vec<Vec<u32>> = vec![Vec::new(); m];
        for (j, s) in simplices.iter().enumerate() {
            if s.dim == 2 {
                for &f in &columns[j] {
                    cofaces[f as usize].push(j as u32);
                }
            }
        }
        let mut owner: Vec<u32> = vec![u32::MAX; m];
        let mut reduced: Vec<Vec<u32>> = Vec::new();
        let mut scratch = Vec::new();
        for j in (0..m).rev() {
            if simplices[j].dim != 1 || paired[j] {
                continue;
            }
            // indices are pushed in increasing order, so the list is sorted
            let mut col = std::mem::take(&mut cofaces[j]);
            while let Some(&low) = col.first() {
                let o = owner[low as usize];
                if o == u32::MAX {
                    break;
                }
                add_columns(&col, &reduced[o as usize], &mut scratch);
                std::mem::swap(&mut col, &mut scratch);
            }
            if let Some(&low) = col.first() {
                let low = low as usize;
                owner[low] = reduced.len() as u32;
                reduced.push(col);
                paired[low] = true;
                paired[j] = true;
                let (birth, death) = (simplices[j].value, simplices[low].value);
                if death > birth {
                    features.push(Feature { dim: 1, birth, death });
                }
            }
        }
    }
    for (j, s) in simplices.iter().enumerate() {
        if !paired[j] && s.dim <= 1 {
            features.push(Feature { dim: s.dim as usize, birth: s.value, death: f64::INFINITY });
        }
    }
    Ok(PersistenceDiagram::new(features))
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

/// Largest finite entry, the default truncation scale.
pub fn diameter(dist: &DistanceMatrix) -> f64 {
    dist.max_finite()
}

/// Rips persistence in dimensions 0 and 1 up to `max_scale` (the diameter
/// when `None`).
pub fn rips_persistence(dist: &DistanceMatrix, max_scale: Option<f64>) -> Result<PersistenceDiagram> {
    // a zero scale still has to glue coincident points
    let scale = max_scale.unwrap_or_else(|| diameter(dist)).max(f64::MIN_POSITIVE);
    compute_persistence(&build_rips_filtration(dist, scale, 2)?)
}
