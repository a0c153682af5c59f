//! Band storage for the assembled matrices and a banded Cholesky solver.
//!
//! Both triangles are stored, so symmetry is a property of the assembled data
//! and can be checked rather than assumed.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    // row-major, row i holds columns i-bw ..= i+bw
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || i.abs_diff(j) > self.bw {
            return None;
        }
        Some(i * (2 * self.bw + 1) + (j + self.bw - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band {}", self.bw));
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.matvec(y)).map(|(a, b)| a * b).sum()
    }

    /// `alpha * self + beta * other`
    pub fn combine(&self, alpha: f64, other: &BandMatrix, beta: f64) -> BandMatrix {
        assert_eq!(self.n, other.n);
        let bw = self.bw.max(other.bw);
        let mut out = BandMatrix::zeros(self.n, bw);
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw).min(self.n - 1);
            for j in lo..=hi {
                let v = alpha * self.get(i, j) + beta * other.get(i, j);
                if v != 0.0 {
                    out.add(i, j, v);
                }
            }
        }
        out
    }

    /// `max |A - A^T|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..=(i + self.bw).min(self.n.saturating_sub(1)) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Nonzero entries as `(row, col, value)`, sorted by row then column.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            for j in lo..=hi {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Text export: a header line `n bandwidth`, then one `row col value`
    /// triplet per line (0-based, sorted, values with 17 significant digits).
    pub fn to_triplet_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# n={} bandwidth={}", self.n, self.bw);
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i} {j} {v:.16e}");
        }
        s
    }

    pub fn from_triplet_text(text: &str) -> Result<BandMatrix> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::invalid("empty matrix text"))?;
        let parse_kv = |key: &str| -> Result<usize> {
            header
                .split_whitespace()
                .find_map(|t| t.strip_prefix(key))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::invalid(format!("matrix header lacks {key}")))
        };
        let n = parse_kv("n=")?;
        let bw = parse_kv("bandwidth=")?;
        let mut m = BandMatrix::zeros(n, bw);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace();
            let mut next = || it.next().ok_or_else(|| Error::invalid(format!("short line `{line}`")));
            let i: usize = next()?.parse().map_err(|_| Error::invalid(line.to_string()))?;
            let j: usize = next()?.parse().map_err(|_| Error::invalid(line.to_string()))?;
            let v: f64 = next()?.parse().map_err(|_| Error::invalid(line.to_string()))?;
            if m.slot(i, j).is_none() {
                return Err(Error::invalid(format!("entry ({i}, {j}) outside band")));
            }
            m.add(i, j, v);
        }
        Ok(m)
    }
}

/// `A = L L^T` in lower band storage.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    // row i holds L[i, i-bw ..= i]
    l: Vec<f64>,
}

impl BandCholesky {
    /// Factors the lower triangle of `a`. Fails on a non-positive pivot.
    pub fn factor(a: &BandMatrix) -> Result<Self> {
        let n = a.dim();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        let idx = |i: usize, j: usize| i * w + (j + bw - i);
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = a.get(i, j);
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= l[idx(i, k)] * l[idx(j, k)];
                }
                if i == j {
                    if !(s > scale * 1e-15) {
                        return Err(Error::Factorization { pivot: i, value: s });
                    }
                    l[idx(i, i)] = s.sqrt();
                } else {
                    l[idx(i, j)] = s / l[idx(j, j)];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let idx = |i: usize, j: usize| i * w + (j + bw - i);
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.l[idx(i, k)] * y[k];
            }
            y[i] = s / self.l[idx(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= self.l[idx(k, i)] * y[k];
            }
            y[i] = s / self.l[idx(i, i)];
        }
        y
    }
}
