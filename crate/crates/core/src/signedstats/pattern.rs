use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gaussmodel::BitMatrix;

/// Edge subset of the complete bipartite graph between row vertices and
/// column vertices. Edges are kept sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternGraph {
    edges: Vec<(usize, usize)>,
}

impl PatternGraph {
    /// Edges are `(row, column)` pairs.
    pub fn new(mut edges: Vec<(usize, usize)>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::invalid("a pattern needs at least one edge"));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate edge {:?}", w[0])));
        }
        Ok(Self { edges })
    }

    /// Pattern whose edges are the set bits of `bits` under row-major
    /// packing of an `n x m` matrix.
    pub fn from_bits(n: usize, m: usize, bits: u64) -> Result<Self> {
        let edges = (0..n * m)
            .filter(|k| (bits >> k) & 1 == 1)
            .map(|k| (k / m, k % m))
            .collect();
        Self::new(edges)
    }

    pub fn to_bits(&self, m: usize) -> u64 {
        self.edges.iter().fold(0, |acc, &(i, j)| acc | 1 << (i * m + j))
    }

    /// Star with center column `center` and leaves at the given rows.
    pub fn star(center: usize, leaves: &[usize]) -> Result<Self> {
        Self::new(leaves.iter().map(|&r| (r, center)).collect())
    }

    /// The four-cycle on rows `{0, 1}` and columns `{0, 1}`.
    pub fn four_cycle() -> Self {
        Self::new(vec![(0, 0), (0, 1), (1, 0), (1, 1)]).expect("valid")
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Number of edges.
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn row_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().map(|e| e.0).collect();
        v.dedup();
        v
    }

    pub fn col_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().map(|e| e.1).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn vertex_count(&self) -> usize {
        self.row_vertices().len() + self.col_vertices().len()
    }

    /// True when some vertex has degree one.
    pub fn has_leaf(&self) -> bool {
        let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
        let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
        for &(i, j) in &self.edges {
            *rows.entry(i).or_default() += 1;
            *cols.entry(j).or_default() += 1;
        }
        rows.values().chain(cols.values()).any(|&deg| deg == 1)
    }

    pub fn fits(&self, rows: usize, cols: usize) -> bool {
        self.edges.iter().all(|&(i, j)| i < rows && j < cols)
    }
}

/// Product over pattern edges of `(M_e - p)`.
pub fn signed_weight_of_pattern(m: &BitMatrix, p: f64, pattern: &PatternGraph) -> Result<f64> {
    if let Some(&(i, j)) = pattern
        .edges()
        .iter()
        .find(|&&(i, j)| i >= m.rows() || j >= m.cols())
    {
        return Err(Error::invalid(format!(
            "edge ({i}, {j}) lies outside the {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(pattern.edges().iter().map(|&(i, j)| m.value(i, j) - p).product())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rules() {
        assert!(PatternGraph::new(vec![]).is_err());
        assert!(PatternGraph::new(vec![(0, 1), (0, 1)]).is_err());
        let g = PatternGraph::new(vec![(1, 0), (0, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 0), (1, 0)]);
        assert_eq!(PatternGraph::from_bits(2, 3, g.to_bits(3)).unwrap(), g);
    }

    #[test]
    fn leaves() {
        assert!(PatternGraph::new(vec![(0, 0)]).unwrap().has_leaf());
        assert!(PatternGraph::star(0, &[0, 1]).unwrap().has_leaf());
        assert!(!PatternGraph::four_cycle().has_leaf());
        assert_eq!(PatternGraph::four_cycle().vertex_count(), 4);
    }

    #[test]
    fn weight_examples() {
        let ones = BitMatrix::ones(3, 3);
        let e = PatternGraph::new(vec![(1, 2)]).unwrap();
        assert!((signed_weight_of_pattern(&ones, 0.3, &e).unwrap() - 0.7).abs() < 1e-15);
        let two = PatternGraph::new(vec![(0, 0), (2, 1)]).unwrap();
        assert!((signed_weight_of_pattern(&ones, 0.3, &two).unwrap() - 0.49).abs() < 1e-15);
        let far = PatternGraph::new(vec![(3, 0)]).unwrap();
        assert!(signed_weight_of_pattern(&ones, 0.3, &far).is_err());

        let m = BitMatrix::from_rows(&[[1u8, 0, 1], [0, 0, 1]]).unwrap();
        let g = PatternGraph::new(vec![(0, 0), (0, 1), (1, 2), (1, 1)]).unwrap();
        let direct = (1.0 - 0.4) * (0.0 - 0.4) * (1.0 - 0.4) * (0.0 - 0.4);
        assert!((signed_weight_of_pattern(&m, 0.4, &g).unwrap() - direct).abs() < 1e-15);
    }
}
