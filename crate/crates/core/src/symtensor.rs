//! Fully symmetric tensors over dimension `n`: polynomial-valued coefficient
//! tensors and their point values, stored once per symmetry orbit.
//!
//! Indices are 0-based inside the library. The metric-file layer converts
//! from the 1-based notation used in input documents.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::poly::PolyField;

pub const MAX_DIM: usize = 8;
pub const MAX_ORDER: usize = 6;

/// A multi-index `(i_1, ..., i_k)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Sorts a multi-index into non-decreasing order after range-checking it.
pub fn canonicalize(idx: &MultiIndex, n: usize) -> Result<MultiIndex> {
    if let Some(&bad) = idx.0.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    let mut v = idx.0.clone();
    v.sort_unstable();
    Ok(MultiIndex(v))
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of stored components of a symmetric order-`r` tensor.
pub fn sym_len(n: usize, r: usize) -> usize {
    binomial(n + r - 1, r)
}

/// Rank of a sorted multi-index among all sorted multi-indices of the same
/// length (colexicographic order on `i_k + k`).
fn rank_sorted(sorted: &[usize]) -> usize {
    sorted
        .iter()
        .enumerate()
        .map(|(k, &i)| binomial(i + k, k + 1))
        .sum()
}

/// Storage rank of any multi-index (sorted internally).
pub fn sorted_rank(idx: &[usize]) -> usize {
    let mut s = smallsort::Buf::from(idx);
    s.sort();
    rank_sorted(s.as_slice())
}

/// Number of distinct orderings of a multi-index.
pub fn multiplicity(idx: &[usize]) -> usize {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    let mut denom = 1usize;
    let mut run = 1usize;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
            denom *= run;
        } else {
            run = 1;
        }
    }
    factorial(idx.len()) / denom
}

pub fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// All sorted multi-indices of length `r` over `0..n`, listed in storage order.
pub fn canonical_indices(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); sym_len(n, r)];
    let mut cur = vec![0usize; r];
    loop {
        out[rank_sorted(&cur)] = cur.clone();
        // advance to the next non-decreasing sequence
        let mut pos = r;
        while pos > 0 && cur[pos - 1] == n - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        let v = cur[pos - 1] + 1;
        for c in &mut cur[pos - 1..] {
            *c = v;
        }
    }
    out
}

fn merge_sorted(a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Point values of a symmetric tensor of order `r`, one entry per orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymValueTensor {
    n: usize,
    order: usize,
    values: Vec<f64>,
}

impl SymValueTensor {
    pub fn zeros(n: usize, order: usize) -> Self {
        Self { n, order, values: vec![0.0; sym_len(n, order)] }
    }

    pub fn scalar(n: usize, v: f64) -> Self {
        Self { n, order: 0, values: vec![v] }
    }

    /// Builds the tensor by evaluating `f` on every sorted multi-index.
    pub fn from_fn(n: usize, order: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let values = canonical_indices(n, order).iter().map(|i| f(i)).collect();
        Self { n, order, values }
    }

    /// Symmetric part of a dense tensor. Exact when the input is symmetric.
    pub fn from_dense(d: &DenseTensor) -> Self {
        Self::from_fn(d.n(), d.order(), |i| d.get(i))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of an order-0 tensor.
    pub fn as_scalar(&self) -> f64 {
        debug_assert_eq!(self.order, 0);
        self.values[0]
    }

    /// Component lookup under any permutation of the indices.
    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.order);
        let mut s: smallsort::Buf = smallsort::Buf::from(idx);
        s.sort();
        self.values[rank_sorted(s.as_slice())]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let mut s: smallsort::Buf = smallsort::Buf::from(idx);
        s.sort();
        self.values[rank_sorted(s.as_slice())] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { n: self.n, order: self.order, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!((self.n, self.order), (other.n, other.order));
        Self {
            n: self.n,
            order: self.order,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn to_dense(&self) -> DenseTensor {
        DenseTensor::from_fn(self.n, self.order, |i| self.get(i))
    }

    /// Contracts `k` slots with the momentum `p`.
    pub fn contract_momenta(&self, p: &[f64], k: usize) -> Result<SymValueTensor> {
        if k > self.order {
            return Err(Error::ArityExceeded { requested: k, order: self.order });
        }
        Ok(contract_sym(self, p, k))
    }
}

fn contract_sym(t: &SymValueTensor, p: &[f64], k: usize) -> SymValueTensor {
    let n = t.n;
    // weights for every orbit of contracted slots: multiplicity * p^J
    let contracted: Vec<(Vec<usize>, f64)> = canonical_indices(n, k)
        .into_iter()
        .map(|j| {
            let w = multiplicity(&j) as f64 * j.iter().map(|&s| p[s]).product::<f64>();
            (j, w)
        })
        .filter(|(_, w)| *w != 0.0)
        .collect();
    let mut buf = Vec::with_capacity(t.order);
    SymValueTensor::from_fn(n, t.order - k, |free| {
        let mut acc = 0.0;
        for (j, w) in &contracted {
            merge_sorted(free, j, &mut buf);
            acc += w * t.values[rank_sorted(&buf)];
        }
        acc
    })
}

/// Plain row-major tensor with `n^order` components, used for objects that
/// are only partially symmetric (e.g. the Berwald hierarchy with its lower slot).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    n: usize,
    order: usize,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(n: usize, order: usize) -> Self {
        Self { n, order, data: vec![0.0; n.pow(order as u32)] }
    }

    pub fn from_fn(n: usize, order: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(n, order);
        let mut idx = vec![0usize; order];
        for k in 0..t.data.len() {
            t.data[k] = f(&idx);
            increment(&mut idx, n);
        }
        t
    }

    pub fn from_vec(n: usize, order: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n.pow(order as u32));
        Self { n, order, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn add_at(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, order: self.order, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!((self.n, self.order), (other.n, other.order));
        Self {
            n: self.n,
            order: self.order,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Largest `|T[..] - T[permuted ..]|` over swaps of the first `k` slots.
    pub fn asymmetry(&self, k: usize) -> f64 {
        let mut worst = 0.0f64;
        let mut idx = vec![0usize; self.order];
        for _ in 0..self.data.len() {
            for a in 0..k {
                for b in a + 1..k {
                    let mut j = idx.clone();
                    j.swap(a, b);
                    worst = worst.max((self.get(&idx) - self.get(&j)).abs());
                }
            }
            increment(&mut idx, self.n);
        }
        worst
    }

    /// Contracts the slot `slot` with the vector `v`.
    pub fn contract_slot(&self, slot: usize, v: &[f64]) -> DenseTensor {
        DenseTensor::from_fn(self.n, self.order - 1, |rest| {
            let mut full = Vec::with_capacity(self.order);
            full.extend_from_slice(&rest[..slot]);
            full.push(0);
            full.extend_from_slice(&rest[slot..]);
            (0..self.n)
                .map(|s| {
                    full[slot] = s;
                    v[s] * self.get(&full)
                })
                .sum()
        })
    }
}

/// Odometer increment of a multi-index over `0..n`.
pub fn increment(idx: &mut [usize], n: usize) {
    for i in idx.iter_mut().rev() {
        *i += 1;
        if *i < n {
            return;
        }
        *i = 0;
    }
}

/// Symmetric order-`m` tensor whose components are polynomials in `x`.
/// Absent orbits read as the zero polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct SymCoeffTensor {
    n: usize,
    m: usize,
    entries: BTreeMap<Vec<usize>, PolyField>,
}

impl SymCoeffTensor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Orbit representatives (sorted, 0-based) and their polynomials.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], &PolyField)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn get(&self, idx: &[usize]) -> PolyField {
        let mut k = idx.to_vec();
        k.sort_unstable();
        self.entries.get(&k).cloned().unwrap_or_else(|| PolyField::zero(self.n))
    }

    pub fn is_constant(&self) -> bool {
        self.entries.values().all(PolyField::is_constant)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            m: self.m,
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v.scaled(s))).collect(),
        }
    }

    /// Component values at `x`.
    pub fn eval(&self, x: &[f64]) -> SymValueTensor {
        let mut t = SymValueTensor::zeros(self.n, self.m);
        for (k, f) in &self.entries {
            t.values[rank_sorted(k)] = f.eval(x);
        }
        t
    }

    /// `d a / d x_s` for every `s`.
    pub fn eval_gradient(&self, x: &[f64]) -> Vec<SymValueTensor> {
        let mut out = vec![SymValueTensor::zeros(self.n, self.m); self.n];
        for (k, f) in &self.entries {
            let (_, g) = f.eval_grad(x);
            let r = rank_sorted(k);
            for (s, gs) in g.into_iter().enumerate() {
                out[s].values[r] = gs;
            }
        }
        out
    }

    /// `d^2 a / dx_s dx_t`, flattened as `s * n + t`.
    pub fn eval_hessian(&self, x: &[f64]) -> Vec<SymValueTensor> {
        let n = self.n;
        let mut out = vec![SymValueTensor::zeros(n, self.m); n * n];
        for (k, f) in &self.entries {
            let h = f.hessian(x);
            let r = rank_sorted(k);
            for (st, v) in h.into_iter().enumerate() {
                out[st].values[r] = v;
            }
        }
        out
    }

    /// Evaluates at `x`, then contracts `k` slots with `p`.
    pub fn contract_momenta(&self, x: &[f64], p: &[f64], k: usize) -> Result<SymValueTensor> {
        self.eval(x).contract_momenta(p, k)
    }
}

/// Builds a symmetric coefficient tensor from one representative per orbit.
/// Each value is the common symmetric component, not the orbit sum.
pub fn build_from_representatives(
    n: usize,
    m: usize,
    entries: Vec<(MultiIndex, PolyField)>,
) -> Result<SymCoeffTensor> {
    if !(1..=MAX_DIM).contains(&n) {
        return Err(Error::InvalidSpec(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    if !(1..=MAX_ORDER).contains(&m) {
        return Err(Error::OrderOutOfRange { order: m, min: 1, max: MAX_ORDER });
    }
    let mut map = BTreeMap::new();
    for (idx, poly) in entries {
        if idx.len() != m {
            return Err(Error::IndexLength { got: idx.len(), expected: m });
        }
        if poly.nvars() != n {
            return Err(Error::InvalidSpec(format!(
                "polynomial has {} variables, expected {n}",
                poly.nvars()
            )));
        }
        let key = canonicalize(&idx, n)?.0;
        if map.contains_key(&key) {
            return Err(Error::DuplicateOrbit(key));
        }
        map.insert(key, poly);
    }
    map.retain(|_, p| !p.is_zero());
    Ok(SymCoeffTensor { n, m, entries: map })
}

mod smallsort {
    /// Stack buffer for sorting short index lists without allocating.
    pub struct Buf {
        len: usize,
        data: [usize; 16],
    }

    impl From<&[usize]> for Buf {
        fn from(s: &[usize]) -> Self {
            let mut data = [0usize; 16];
            data[..s.len()].copy_from_slice(s);
            Buf { len: s.len(), data }
        }
    }

    impl Buf {
        pub fn sort(&mut self) {
            self.data[..self.len].sort_unstable();
        }

        pub fn as_slice(&self) -> &[usize] {
            &self.data[..self.len]
        }
    }
}
