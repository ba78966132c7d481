//! Dense symmetric distance store shared by every stage of the pipeline.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// All-zero matrix.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Matrix with `inf` off the diagonal.
    pub fn unreachable(n: usize) -> Self {
        let mut m = Self {
            n,
            data: vec![f64::INFINITY; n * n],
        };
        for i in 0..n {
            m.data[i * n + i] = 0.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                m.data[i * n + j] = d;
                m.data[j * n + i] = d;
            }
        }
        m
    }

    /// Builds from full rows, checking shape, symmetry and the diagonal.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Matrix(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            data.extend(row);
        }
        let m = Self { n, data };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i) != 0.0 {
                return Err(Error::Matrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..self.n {
                let d = self.get(i, j);
                if d.is_nan() || d < 0.0 {
                    return Err(Error::Matrix(format!("invalid entry at ({i}, {j})")));
                }
                if d != self.get(j, i) {
                    return Err(Error::Matrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, d: f64) {
        self.data[i * self.n + j] = d;
        self.data[j * self.n + i] = d;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|d| d.is_finite())
    }

    /// Largest finite entry (0 for empty or fully unreachable matrices).
    pub fn max_finite(&self) -> f64 {
        self.data
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|d| d * c).collect(),
        }
    }

    /// Principal submatrix on `idx`, in that order.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut data = Vec::with_capacity(m * m);
        for &i in idx {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        Self { n: m, data }
    }

    /// Connected components of the finite-distance relation.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut comps = Vec::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            let c = comps.len();
            let mut members = Vec::new();
            for j in 0..self.n {
                if self.get(s, j).is_finite() {
                    label[j] = c;
                    members.push(j);
                }
            }
            comps.push(members);
        }
        comps
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.n)?;
        let mut line = String::new();
        for i in 0..self.n {
            line.clear();
            for (j, d) in self.row(i).iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                write_real(&mut line, *d);
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::Empty("distance matrix file"))??;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad size header {header:?}")))?;
        let mut rows = Vec::with_capacity(n);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            rows.push(
                line.split(',')
                    .map(parse_real)
                    .collect::<Result<Vec<f64>>>()?,
            );
        }
        if rows.len() != n {
            return Err(Error::Matrix(format!("expected {n} rows, found {}", rows.len())));
        }
        Self::from_rows(rows)
    }
}

pub(crate) fn write_real(out: &mut String, d: f64) {
    if d.is_infinite() {
        out.push_str("inf");
    } else {
        let _ = write!(out, "{d}");
    }
}

pub(crate) fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad number {s:?}")))
}
