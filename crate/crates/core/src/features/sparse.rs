//! Sparse vector and row-major sparse matrix.
//!
//! Feature vectors are ~99% zero, so the model's input layer multiplies in
//! time proportional to the stored entries. Indices are strictly
//! increasing and stored values are non-zero.

/// Immutable sparse vector: parallel index and value lists.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Build from entries. Zero values are dropped; entries must not repeat
    /// an index.
    ///
    /// # Panics
    /// On duplicate indices or non-finite values.
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> SparseVector {
        entries.retain(|(_, v)| *v != 0.0);
        entries.sort_by_key(|(i, _)| *i);
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            assert!(v.is_finite(), "non-finite feature value at index {i}");
            assert!(
                indices.last().map_or(true, |last| *last < i),
                "duplicate feature index {i}"
            );
            indices.push(i);
            values.push(v);
        }
        SparseVector { indices, values }
    }

    pub fn from_dense(dense: &[f64]) -> SparseVector {
        SparseVector::from_entries(
            dense
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v))
                .collect(),
        )
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut dense = vec![0.0; dim];
        for (i, v) in self.iter() {
            dense[i as usize] = v;
        }
        dense
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Largest stored index plus one; 0 when empty.
    pub fn min_dim(&self) -> usize {
        self.indices.last().map_or(0, |i| *i as usize + 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Stored value at `index`, or 0.
    pub fn get(&self, index: u32) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    /// Dot product against a dense slice indexed by feature index.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i as usize]).sum()
    }
}

/// Row-major collection of sparse vectors with a fixed column count.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_cols: usize,
    pub rows: Vec<SparseVector>,
}

impl SparseMatrix {
    pub fn new(n_cols: usize) -> SparseMatrix {
        SparseMatrix {
            n_cols,
            rows: Vec::new(),
        }
    }

    /// # Panics
    /// When the row references an index outside `n_cols`.
    pub fn push_row(&mut self, row: SparseVector) {
        assert!(
            row.min_dim() <= self.n_cols,
            "row index {} exceeds {} columns",
            row.min_dim(),
            self.n_cols
        );
        self.rows.push(row);
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseVector::nnz).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_entries_sorts_and_drops_zeros() {
        let v = SparseVector::from_entries(vec![(7, 2.0), (1, 0.0), (3, -1.5)]);
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![(3, -1.5), (7, 2.0)]);
        assert_eq!(v.nnz(), 2);
        assert_eq!(v.get(3), -1.5);
        assert_eq!(v.get(4), 0.0);
    }

    #[test]
    #[should_panic(expected = "duplicate feature index")]
    fn duplicate_indices_rejected() {
        SparseVector::from_entries(vec![(2, 1.0), (2, 3.0)]);
    }

    #[test]
    fn dense_round_trip() {
        let dense = vec![0.0, 1.0, 0.0, 0.0, 2.5, 0.0];
        let v = SparseVector::from_dense(&dense);
        assert_eq!(v.to_dense(6), dense);
        assert_eq!(v.nnz(), 2);
    }

    #[test]
    fn dot_against_dense() {
        let v = SparseVector::from_entries(vec![(0, 2.0), (3, 4.0)]);
        let w = [1.0, 10.0, 10.0, 0.5];
        assert_eq!(v.dot_dense(&w), 4.0);
    }

    #[test]
    fn matrix_tracks_nnz() {
        let mut m = SparseMatrix::new(4);
        m.push_row(SparseVector::from_entries(vec![(0, 1.0)]));
        m.push_row(SparseVector::from_entries(vec![(1, 1.0), (3, 2.0)]));
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.nnz(), 3);
    }
}
