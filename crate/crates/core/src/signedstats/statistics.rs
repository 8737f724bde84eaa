//! Signed wedge and signed four-cycle counts.
//!
//! With centred entries `A = M - p` every entry takes one of two values, so
//! the row-pair Gram entry `D_ij = sum_k A_ik A_jk` and the diagonal
//! correction `E_ij = sum_k A_ik^2 A_jk^2` are determined by the four
//! co-occurrence counts of the two rows, which come from popcounts on the
//! packed bits. Then
//!
//! ```text
//! C4 = sum_{i<j} (D_ij^2 - E_ij) / 2,   P2 = sum_i ((sum_k A_ik)^2 - sum_k A_ik^2) / 2.
//! ```
//!
//! The four-cycle count is symmetric under transposition, so pairs are taken
//! over the shorter side. The mask-restricted variants zero every centred
//! entry outside the mask, which is the same as keeping only wedges and
//! cycles that lie entirely inside it.

use crate::error::Result;
use crate::gaussmodel::BitMatrix;
use crate::numerics::CompensatedSum;

#[derive(Clone, Copy)]
struct Centred {
    hi: f64,
    lo: f64,
}

impl Centred {
    fn new(p: f64) -> Self {
        Self { hi: 1.0 - p, lo: -p }
    }

    /// `(sum_k a_k b_k, sum_k a_k^2 b_k^2)` over a set of visible positions.
    #[inline]
    fn pair_sums(&self, n11: u32, n10: u32, n01: u32, n00: u32) -> (f64, f64) {
        let (h, l) = (self.hi, self.lo);
        let mixed = (n10 + n01) as f64;
        let d = n11 as f64 * h * h + mixed * h * l + n00 as f64 * l * l;
        let e = n11 as f64 * (h * h) * (h * h) + mixed * (h * h) * (l * l) + n00 as f64 * (l * l) * (l * l);
        (d, e)
    }

    /// `(sum_k a_k, sum_k a_k^2)` for `ones` ones among `visible` entries.
    #[inline]
    fn row_sums(&self, ones: u32, visible: u32) -> (f64, f64) {
        let zeros = (visible - ones) as f64;
        let ones = ones as f64;
        (
            ones * self.hi + zeros * self.lo,
            ones * self.hi * self.hi + zeros * self.lo * self.lo,
        )
    }
}

/// `P2(M) = sum_i sum_{k<l} (M_ik - p)(M_il - p)`.
pub fn signed_wedges(m: &BitMatrix, p: f64) -> f64 {
    let c = Centred::new(p);
    let cols = m.cols() as u32;
    (0..m.rows())
        .map(|i| {
            let (s, q) = c.row_sums(m.row_count_ones(i) as u32, cols);
            0.5 * (s * s - q)
        })
        .collect::<CompensatedSum>()
        .value()
}

/// Signed wedges whose two edges both lie inside the mask.
pub fn signed_wedges_masked(m: &BitMatrix, mask: &BitMatrix, p: f64) -> Result<f64> {
    m.check_same_shape(mask)?;
    let c = Centred::new(p);
    Ok((0..m.rows())
        .map(|i| {
            let (mut ones, mut visible) = (0u32, 0u32);
            for (&w, &k) in m.row_words(i).iter().zip(mask.row_words(i)) {
                ones += (w & k).count_ones();
                visible += k.count_ones();
            }
            let (s, q) = c.row_sums(ones, visible);
            0.5 * (s * s - q)
        })
        .collect::<CompensatedSum>()
        .value())
}

/// `C4(M) = sum_{i<j} sum_{k<l} (M_ik - p)(M_il - p)(M_jk - p)(M_jl - p)`.
pub fn signed_four_cycles(m: &BitMatrix, p: f64) -> f64 {
    let owned;
    let m = if m.rows() <= m.cols() {
        m
    } else {
        owned = m.transpose();
        &owned
    };
    let c = Centred::new(p);
    let width = m.cols() as u32;
    let counts: Vec<u32> = (0..m.rows()).map(|i| m.row_count_ones(i) as u32).collect();
    let mut acc = CompensatedSum::new();
    for i in 0..m.rows() {
        let ri = m.row_words(i);
        for j in i + 1..m.rows() {
            let n11: u32 = ri.iter().zip(m.row_words(j)).map(|(a, b)| (a & b).count_ones()).sum();
            let n10 = counts[i] - n11;
            let n01 = counts[j] - n11;
            let n00 = width - n11 - n10 - n01;
            let (d, e) = c.pair_sums(n11, n10, n01, n00);
            acc.add(0.5 * (d * d - e));
        }
    }
    acc.value()
}

/// Signed four-cycles whose four edges all lie inside the mask.
pub fn signed_four_cycles_masked(m: &BitMatrix, mask: &BitMatrix, p: f64) -> Result<f64> {
    m.check_same_shape(mask)?;
    let (owned_m, owned_k);
    let (m, mask) = if m.rows() <= m.cols() {
        (m, mask)
    } else {
        owned_m = m.transpose();
        owned_k = mask.transpose();
        (&owned_m, &owned_k)
    };
    let c = Centred::new(p);
    let mut acc = CompensatedSum::new();
    for i in 0..m.rows() {
        let (ri, ki) = (m.row_words(i), mask.row_words(i));
        for j in i + 1..m.rows() {
            let (rj, kj) = (m.row_words(j), mask.row_words(j));
            let (mut n11, mut ni, mut nj, mut nv) = (0u32, 0u32, 0u32, 0u32);
            for w in 0..ri.len() {
                let v = ki[w] & kj[w];
                let a = ri[w] & v;
                let b = rj[w] & v;
                n11 += (a & b).count_ones();
                ni += a.count_ones();
                nj += b.count_ones();
                nv += v.count_ones();
            }
            let (n10, n01) = (ni - n11, nj - n11);
            let n00 = nv - n11 - n10 - n01;
            let (d, e) = c.pair_sums(n11, n10, n01, n00);
            acc.add(0.5 * (d * d - e));
        }
    }
    Ok(acc.value())
}
