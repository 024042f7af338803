//! Compressed sparse column matrices built from triplets.
//!
//! Duplicates are summed in insertion order after a stable sort, so the
//! assembled values depend only on the order of the triplet list.

#[derive(Debug, Clone, Default)]
pub struct Triplets {
    pub n_rows: usize,
    pub n_cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Triplets {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.entries.push((row, col, value));
    }

    pub fn extend_scaled(&mut self, other: &Triplets, scale: f64) {
        self.entries
            .extend(other.entries.iter().map(|&(r, c, v)| (r, c, v * scale)));
    }

    pub fn to_csc(&self) -> CscMatrix {
        CscMatrix::from_triplets(self.n_rows, self.n_cols, &self.entries)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn from_triplets(n_rows: usize, n_cols: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by_key(|&i| (entries[i].1, entries[i].0));
        let mut col_ptr = vec![0; n_cols + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &i in &order {
            let (r, c, v) = entries[i];
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..n_cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CscMatrix {
            n_rows: n,
            n_cols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[range.clone()].binary_search(&row) {
            Ok(i) => self.values[range.start + i],
            Err(_) => 0.0,
        }
    }

    /// Iterates `(row, col, value)` over stored entries, column by column.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1])
                .map(move |i| (self.row_idx[i], c, self.values[i]))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for c in 0..self.n_cols {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for i in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[i]] += self.values[i] * xc;
            }
        }
        y
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &CscMatrix, b: f64) -> Self {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let entries: Vec<_> = self
            .iter()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.iter().map(|(r, c, v)| (r, c, b * v)))
            .collect();
        CscMatrix::from_triplets(self.n_rows, self.n_cols, &entries)
    }

    /// Submatrix with the given row and column selections (old index to new
    /// index, `None` dropping the row or column).
    pub fn select(
        &self,
        rows: &[Option<usize>],
        n_rows: usize,
        cols: &[Option<usize>],
        n_cols: usize,
    ) -> Self {
        let entries: Vec<_> = self
            .iter()
            .filter_map(|(r, c, v)| Some((rows[r]?, cols[c]?, v)))
            .collect();
        CscMatrix::from_triplets(n_rows, n_cols, &entries)
    }

    pub fn transpose(&self) -> Self {
        let entries: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        CscMatrix::from_triplets(self.n_cols, self.n_rows, &entries)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.iter() {
            d[(r, c)] += v;
        }
        d
    }

    /// True when `(i, j)` stored implies `(j, i)` stored.
    pub fn has_symmetric_pattern(&self) -> bool {
        self.n_rows == self.n_cols
            && self.iter().all(|(r, c, _)| {
                let range = self.col_ptr[r]..self.col_ptr[r + 1];
                self.row_idx[range].binary_search(&c).is_ok()
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m =
            CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (1, 1, 5.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![4.0, 7.0]);
    }

    #[test]
    fn select_and_transpose() {
        let m = CscMatrix::from_triplets(3, 3, &[(0, 1, 1.0), (2, 0, 2.0), (1, 2, 3.0)]);
        let t = m.transpose();
        assert_eq!(t.get(1, 0), 1.0);
        assert!(!m.has_symmetric_pattern());
        let s = m.select(&[Some(0), None, Some(1)], 2, &[Some(0), Some(1), None], 2);
        assert_eq!(
            s.to_dense(),
            nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0])
        );
        let sum = m.combine(1.0, &t, 1.0);
        assert!(sum.has_symmetric_pattern());
    }
}
