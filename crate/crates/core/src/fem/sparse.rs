/// Compressed sparse row matrix with a fixed symbolic pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Pattern holding every pair `(i, j)` of indices that share a group.
    pub fn from_groups<I, G>(n: usize, groups: I) -> CsrMatrix
    where
        I: IntoIterator<Item = G>,
        G: AsRef<[usize]>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for g in groups {
            let g = g.as_ref();
            for &i in g {
                rows[i].extend_from_slice(g);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn zeroed(&self) -> CsrMatrix {
        CsrMatrix {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Add to an existing pattern entry. Panics if `(i, j)` is outside the
    /// pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// `self + a·other` for matrices sharing one pattern.
    pub fn add_scaled(&self, a: f64, other: &CsrMatrix) -> CsrMatrix {
        assert!(self.row_ptr == other.row_ptr && self.col_idx == other.col_idx);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        CsrMatrix {
            values,
            ..self.clone()
        }
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_and_product() {
        let mut a = CsrMatrix::from_groups(4, [[0usize, 1], [1, 2], [2, 3]]);
        assert_eq!(a.nnz(), 10);
        for i in 0..4 {
            a.add(i, i, 2.0);
        }
        for i in 0..3 {
            a.add(i, i + 1, -1.0);
            a.add(i + 1, i, -1.0);
        }
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0, 1.0]), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(a.get(0, 3), 0.0);
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    #[should_panic(expected = "not in the sparsity pattern")]
    fn add_outside_pattern_panics() {
        let mut a = CsrMatrix::from_groups(3, [[0usize, 1]]);
        a.add(0, 2, 1.0);
    }
}
