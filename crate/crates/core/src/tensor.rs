//! Dense totally-symmetric tensors.
//!
//! One entry is stored per non-decreasing index multiset, in lexicographic
//! order; any permutation of an index tuple reads the same entry.

use serde::Serialize;

pub const MAX_DIM: usize = 6;

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of multisets of size `rank` drawn from `n` values.
pub fn multiset_count(n: usize, rank: usize) -> usize {
    binomial(n + rank - 1, rank)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymTensor<const R: usize> {
    n: usize,
    data: Vec<f64>,
}

pub type SymTensor2 = SymTensor<2>;
pub type SymTensor3 = SymTensor<3>;
pub type SymTensor4 = SymTensor<4>;

/// Non-decreasing index tuples of length `R` over `0..n`, lexicographic.
pub fn multisets<const R: usize>(n: usize) -> impl Iterator<Item = [usize; R]> {
    let mut next = if n == 0 { None } else { Some([0usize; R]) };
    std::iter::from_fn(move || {
        let cur = next?;
        // advance: find rightmost slot that can grow, reset tail to it
        let mut t = cur;
        let mut p = R;
        next = loop {
            if p == 0 {
                break None;
            }
            p -= 1;
            if t[p] + 1 < n {
                let v = t[p] + 1;
                for slot in t.iter_mut().skip(p) {
                    *slot = v;
                }
                break Some(t);
            }
        };
        Some(cur)
    })
}

impl<const R: usize> SymTensor<R> {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} unsupported");
        Self {
            n,
            data: vec![0.0; multiset_count(n, R)],
        }
    }

    /// Fill by evaluating `f` once per sorted multiset.
    pub fn from_fn(n: usize, mut f: impl FnMut([usize; R]) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for (slot, idx) in t.data.iter_mut().zip(multisets::<R>(n)) {
            *slot = f(idx);
        }
        t
    }

    /// Like [`SymTensor::from_fn`] with a fallible filler.
    pub fn try_from_fn<E>(n: usize, mut f: impl FnMut([usize; R]) -> Result<f64, E>) -> Result<Self, E> {
        let mut t = Self::zeros(n);
        for (slot, idx) in t.data.iter_mut().zip(multisets::<R>(n)) {
            *slot = f(idx)?;
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn stored(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: [usize; R]) -> usize {
        let mut sorted = idx;
        sorted.sort_unstable();
        assert!(sorted[R - 1] < self.n, "index {idx:?} out of range for n = {}", self.n);
        // rank of a sorted tuple among lexicographically ordered multisets
        let mut rank = 0;
        let mut lo = 0;
        for (p, &v) in sorted.iter().enumerate() {
            let remaining = R - p - 1;
            for w in lo..v {
                rank += multiset_count(self.n - w, remaining);
            }
            lo = v;
        }
        rank
    }

    pub fn get(&self, idx: [usize; R]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: [usize; R], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    /// Largest |a − b| over stored entries.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Contract the first slot with a vector: v^a T_{a…}.
    pub fn contract_first(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        // result has R-1 free indices, returned as a full (not symmetric-packed) array
        let n = self.n;
        let free = R - 1;
        let len = n.pow(free as u32);
        let mut out = vec![0.0; len];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut idx = [0usize; R];
            let mut rem = flat;
            for p in (1..R).rev() {
                idx[p] = rem % n;
                rem /= n;
            }
            *slot = (0..n)
                .map(|a| {
                    idx[0] = a;
                    v[a] * self.get(idx)
                })
                .sum();
        }
        out
    }
}

impl SymTensor2 {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |[i, j]| if i == j { 1.0 } else { 0.0 })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get([i, j])).collect())
            .collect()
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get([i, j]) * v[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get([i, i])).sum()
    }
}

impl SymTensor3 {
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.get([i, j, k])).collect()).collect())
            .collect()
    }
}

impl SymTensor4 {
    /// Full nested array in index order h, i, j, k.
    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        let n = self.n;
        (0..n)
            .map(|h| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| (0..n).map(|k| self.get([h, i, j, k])).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Rank-(1,2) tensor symmetric in its two lower slots: `C^r_{jk}` is stored
/// as one symmetric matrix per upper index r.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedTensor {
    pub slices: Vec<SymTensor2>,
}

impl MixedTensor {
    pub fn dim(&self) -> usize {
        self.slices.len()
    }

    pub fn get(&self, r: usize, j: usize, k: usize) -> f64 {
        self.slices[r].get([j, k])
    }

    pub fn max_abs(&self) -> f64 {
        self.slices.iter().fold(0.0, |m, s| m.max(s.max_abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.slices
            .iter()
            .zip(&other.slices)
            .fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        self.slices.iter().map(SymTensor2::to_rows).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn storage_sizes() {
        assert_eq!(multiset_count(3, 2), 6);
        assert_eq!(multiset_count(3, 3), 10);
        assert_eq!(multiset_count(3, 4), 15);
        assert_eq!(multiset_count(6, 4), 126);
        assert_eq!(multisets::<4>(6).count(), 126);
        assert_eq!(multisets::<2>(1).count(), 1);
    }

    #[test]
    fn multisets_are_lexicographic_and_sorted() {
        let all: Vec<[usize; 3]> = multisets::<3>(4).collect();
        for w in all.windows(2) {
            assert!(w[0] < w[1]);
        }
        for m in &all {
            assert!(m.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn offsets_enumerate_storage() {
        let t = SymTensor4::zeros(5);
        for (k, idx) in multisets::<4>(5).enumerate() {
            assert_eq!(t.offset(idx), k);
        }
    }

    #[test]
    fn contract_first_matches_manual() {
        let t = SymTensor3::from_fn(3, |[i, j, k]| (1 + i + 2 * j + 3 * k) as f64);
        let v = [1.0, -2.0, 0.5];
        let c = t.contract_first(&v);
        for j in 0..3 {
            for k in 0..3 {
                let want: f64 = (0..3).map(|a| v[a] * t.get([a, j, k])).sum();
                assert_eq!(c[j * 3 + k], want);
            }
        }
    }

    proptest! {
        #[test]
        fn permutation_invariant_reads(n in 1usize..=6, seed in any::<u64>(), perm in 0usize..24) {
            let t = SymTensor4::from_fn(n, |idx| {
                idx.iter().fold(seed as f64 * 1e-20, |a, &i| a * 7.0 + i as f64)
            });
            let idx = [
                (seed as usize) % n,
                (seed as usize / 7) % n,
                (seed as usize / 49) % n,
                (seed as usize / 343) % n,
            ];
            // apply the perm-th permutation of four slots
            let mut slots = vec![0, 1, 2, 3];
            let mut p = perm;
            let mut permuted = [0usize; 4];
            for (k, out) in permuted.iter_mut().enumerate() {
                let pick = p % (4 - k);
                p /= 4 - k;
                *out = idx[slots.remove(pick)];
            }
            prop_assert_eq!(t.get(idx), t.get(permuted));
        }
    }
}
