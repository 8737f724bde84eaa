use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest pattern size with an enumerated covering set.
pub const MAX_ALPHA_SIZE: usize = 8;

/// One sequence of ordered index pairs together with how often each index
/// occurs in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoveringTuple {
    /// Zero-based pairs `(a, b)`.
    pub pairs: Vec<(u8, u8)>,
    /// `multiplicities[e]` counts the occurrences of index `e`.
    pub multiplicities: Vec<u8>,
}

/// All sequences of `ell = ceil(k / 2)` ordered pairs over `0..k` whose
/// entries cover every index.
#[derive(Debug, Clone, Serialize)]
pub struct CoveringTupleSet {
    pub alpha_size: usize,
    pub ell: usize,
    pub tuples: Vec<CoveringTuple>,
}

impl CoveringTupleSet {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

fn build(k: usize) -> CoveringTupleSet {
    let ell = k.div_ceil(2);
    let mut tuples = Vec::new();
    let mut pairs = Vec::with_capacity(ell);
    let mut counts = vec![0u8; k];
    extend(k, ell, &mut pairs, &mut counts, 0, &mut tuples);
    CoveringTupleSet {
        alpha_size: k,
        ell,
        tuples,
    }
}

fn extend(
    k: usize,
    ell: usize,
    pairs: &mut Vec<(u8, u8)>,
    counts: &mut [u8],
    covered: usize,
    out: &mut Vec<CoveringTuple>,
) {
    if pairs.len() == ell {
        if covered == k {
            out.push(CoveringTuple {
                pairs: pairs.clone(),
                multiplicities: counts.to_vec(),
            });
        }
        return;
    }
    let slots_after = 2 * (ell - pairs.len() - 1);
    for a in 0..k {
        for b in 0..k {
            let new = (counts[a] == 0) as usize + (a != b && counts[b] == 0) as usize;
            if k - covered - new > slots_after {
                continue;
            }
            counts[a] += 1;
            counts[b] += 1;
            pairs.push((a as u8, b as u8));
            extend(k, ell, pairs, counts, covered + new, out);
            pairs.pop();
            counts[a] -= 1;
            counts[b] -= 1;
        }
    }
}

/// Covering tuples for a pattern of `alpha_size` edges, built once per size.
pub fn enumerate_covering_tuples(alpha_size: usize) -> Result<&'static CoveringTupleSet> {
    static CACHE: [OnceLock<CoveringTupleSet>; MAX_ALPHA_SIZE + 1] = [const { OnceLock::new() }; MAX_ALPHA_SIZE + 1];
    if alpha_size == 0 {
        return Err(Error::invalid("pattern size must be at least 1"));
    }
    if alpha_size > MAX_ALPHA_SIZE {
        return Err(Error::SizeCap {
            what: "pattern size for covering tuples",
            max: MAX_ALPHA_SIZE,
            got: alpha_size,
        });
    }
    Ok(CACHE[alpha_size].get_or_init(|| build(alpha_size)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(k: usize) -> Vec<Vec<(u8, u8)>> {
        let ell = k.div_ceil(2);
        let total = (k * k).pow(ell as u32);
        let mut out = Vec::new();
        for code in 0..total {
            let mut c = code;
            let seq: Vec<(u8, u8)> = (0..ell)
                .map(|_| {
                    let pair = c % (k * k);
                    c /= k * k;
                    ((pair / k) as u8, (pair % k) as u8)
                })
                .collect();
            let mut seen = vec![false; k];
            for &(a, b) in &seq {
                seen[a as usize] = true;
                seen[b as usize] = true;
            }
            if seen.iter().all(|&s| s) {
                out.push(seq);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn small_sizes() {
        let one = enumerate_covering_tuples(1).unwrap();
        assert_eq!(one.ell, 1);
        assert_eq!(one.tuples.len(), 1);
        assert_eq!(one.tuples[0].pairs, [(0, 0)]);
        assert_eq!(one.tuples[0].multiplicities, [2]);
        let two = enumerate_covering_tuples(2).unwrap();
        let pairs: Vec<_> = two.tuples.iter().map(|t| t.pairs.clone()).collect();
        assert_eq!(pairs, [vec![(0, 1)], vec![(1, 0)]]);
        assert!(two.tuples.iter().all(|t| t.multiplicities == [1, 1]));
        assert!(enumerate_covering_tuples(0).is_err());
        assert!(enumerate_covering_tuples(9).is_err());
    }

    #[test]
    fn matches_brute_force_filter() {
        for k in 1..=5 {
            let mut got: Vec<_> = enumerate_covering_tuples(k).unwrap().tuples.iter().map(|t| t.pairs.clone()).collect();
            got.sort();
            assert_eq!(got, brute_force(k), "k={k}");
        }
    }

    #[test]
    fn multiplicity_structure() {
        for k in 1..=MAX_ALPHA_SIZE {
            let set = enumerate_covering_tuples(k).unwrap();
            for t in &set.tuples {
                let total: usize = t.multiplicities.iter().map(|&s| s as usize).sum();
                assert_eq!(total, 2 * set.ell);
                assert!(t.multiplicities.iter().all(|&s| s >= 1));
                if k % 2 == 0 {
                    assert!(t.multiplicities.iter().all(|&s| s == 1));
                }
            }
        }
        let fact: usize = (1..=8).product();
        assert_eq!(enumerate_covering_tuples(8).unwrap().len(), fact);
    }
}
