//! Multi-index bookkeeping for polynomial expansions in the normal coordinates.
//!
//! A mapping coefficient is attached to a *monomial* in the `2n` normal
//! coordinates `z_1 … z_{2n}` (masters first, their conjugates after).  Because
//! all coefficient sets are symmetric under permutation of the factors, a
//! monomial is represented canonically as a sorted multiset of coordinate
//! labels: `z_1^2 z_3` on two master pairs becomes `{0, 0, 2}` with zero-based
//! labels.  The number of distinct monomials of order `p` is the number of
//! multisets of size `p` drawn from `2n` labels, `C(2n + p - 1, p)`.
//!
//! The homological right-hand sides are convolutions over sub-multisets, so
//! the type carries the multiset algebra needed there: multiplicities,
//! differences, unions, conjugation (swap of each master label with its
//! conjugate partner) and enumeration of all distinct sub-multisets of a given
//! size.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Canonical (sorted) multiset of coordinate labels, each in `0..2n`.
///
/// The empty multiset is the order-zero monomial `1`, which appears in the
/// forced (non-autonomous) expansions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial(Vec<u8>);

impl Monomial {
    /// Builds a monomial from arbitrary label order; labels are sorted.
    pub fn new(mut labels: Vec<u8>) -> Self {
        labels.sort_unstable();
        Monomial(labels)
    }

    /// Polynomial order: the number of factors, counted with multiplicity.
    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// The sorted labels of the factors.
    pub fn labels(&self) -> &[u8] {
        &self.0
    }

    /// How many factors carry the given label.
    pub fn multiplicity(&self, label: u8) -> usize {
        self.0.iter().filter(|&&l| l == label).count()
    }

    /// The distinct labels present, each reported once.
    pub fn distinct_labels(&self) -> Vec<u8> {
        let mut out = self.0.clone();
        out.dedup();
        out
    }

    /// Multiset union with one extra factor of the given label.
    pub fn insert(&self, label: u8) -> Monomial {
        let mut labels = self.0.clone();
        let pos = labels.partition_point(|&l| l <= label);
        labels.insert(pos, label);
        Monomial(labels)
    }

    /// Multiset difference `self ∖ other`, or `None` when `other` is not
    /// contained in `self`.
    pub fn minus(&self, other: &Monomial) -> Option<Monomial> {
        let mut rest = Vec::with_capacity(self.0.len() - other.0.len().min(self.0.len()));
        let mut take = other.0.iter().peekable();
        for &l in &self.0 {
            match take.peek() {
                Some(&&t) if t == l => {
                    take.next();
                }
                _ => rest.push(l),
            }
        }
        if take.peek().is_none() && rest.len() + other.0.len() == self.0.len() {
            Some(Monomial(rest))
        } else {
            None
        }
    }

    /// Swaps every master label `s` with its conjugate partner `s + n` and
    /// re-sorts; applying it twice is the identity.
    pub fn conjugate(&self, n_masters: usize) -> Monomial {
        let n = n_masters as u8;
        let labels = self
            .0
            .iter()
            .map(|&l| if l < n { l + n } else { l - n })
            .collect();
        Monomial::new(labels)
    }

    /// All distinct sub-multisets of the given size, in lexicographic order.
    ///
    /// `{0,0,1}` has the size-2 sub-multisets `{0,0}` and `{0,1}` — each
    /// distinct multiset appears exactly once, regardless of how many ways it
    /// could be picked from the factors.
    pub fn sub_multisets(&self, size: usize) -> Vec<Monomial> {
        if size > self.order() {
            return Vec::new();
        }
        let counts: Vec<(u8, usize)> = {
            let mut counts: Vec<(u8, usize)> = Vec::new();
            for &l in &self.0 {
                match counts.last_mut() {
                    Some((label, c)) if *label == l => *c += 1,
                    _ => counts.push((l, 1)),
                }
            }
            counts
        };
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(size);
        fn recurse(
            counts: &[(u8, usize)],
            pos: usize,
            remaining: usize,
            current: &mut Vec<u8>,
            out: &mut Vec<Monomial>,
        ) {
            if remaining == 0 {
                out.push(Monomial(current.clone()));
                return;
            }
            if pos == counts.len() {
                return;
            }
            let available: usize = counts[pos..].iter().map(|&(_, c)| c).sum();
            if available < remaining {
                return;
            }
            let (label, c) = counts[pos];
            for take in 0..=c.min(remaining) {
                let before = current.len();
                current.extend(std::iter::repeat(label).take(take));
                recurse(counts, pos + 1, remaining - take, current, out);
                current.truncate(before);
            }
        }
        recurse(&counts, 0, size, &mut current, &mut out);
        out.sort_unstable();
        out
    }

    /// Evaluates the monomial at a point of the normal coordinate space.
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &l| acc * z[l as usize])
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Monomial {
    /// Human-readable form with one-based labels, e.g. `{1 1 4}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", l + 1)?;
        }
        write!(f, "}}")
    }
}

/// Number of distinct monomials of the given order in `n_labels` coordinates:
/// `C(n_labels + order - 1, order)`.
pub fn monomial_count(order: usize, n_labels: usize) -> usize {
    if n_labels == 0 {
        return usize::from(order == 0);
    }
    // Binomial coefficient computed incrementally; exact in u128 for every
    // order and label count the expansions use.
    let n = (n_labels + order - 1) as u128;
    let k = order as u128;
    let mut value: u128 = 1;
    for i in 0..k {
        value = value * (n - i) / (i + 1);
    }
    value as usize
}

/// All distinct monomials of one order, in lexicographic label order.
pub fn enumerate_monomials(order: usize, n_labels: usize) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(monomial_count(order, n_labels));
    let mut current = Vec::with_capacity(order);
    fn recurse(order: usize, n_labels: usize, start: u8, current: &mut Vec<u8>, out: &mut Vec<Monomial>) {
        if current.len() == order {
            out.push(Monomial(current.clone()));
            return;
        }
        for l in start..n_labels as u8 {
            current.push(l);
            recurse(order, n_labels, l, current, out);
            current.pop();
        }
    }
    recurse(order, n_labels, 0, &mut current, &mut out);
    out
}

/// Dense index of every monomial up to a maximum order.
///
/// Coefficient sets are stored as flat vectors aligned with `monomials(p)`;
/// the basis maps a multiset back to its position in that vector.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    n_labels: usize,
    orders: Vec<Vec<Monomial>>,
    index: Vec<BTreeMap<Vec<u8>, usize>>,
}

impl MonomialBasis {
    pub fn new(n_labels: usize, max_order: usize) -> Self {
        let orders: Vec<Vec<Monomial>> = (0..=max_order)
            .map(|p| enumerate_monomials(p, n_labels))
            .collect();
        let index = orders
            .iter()
            .map(|list| {
                list.iter()
                    .enumerate()
                    .map(|(i, m)| (m.0.clone(), i))
                    .collect()
            })
            .collect();
        MonomialBasis {
            n_labels,
            orders,
            index,
        }
    }

    /// Number of coordinate labels (`2n` for `n` master pairs).
    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn max_order(&self) -> usize {
        self.orders.len() - 1
    }

    /// The monomials of one order, in the storage order of coefficient sets.
    pub fn monomials(&self, order: usize) -> &[Monomial] {
        &self.orders[order]
    }

    /// Position of a monomial within its order's storage.
    ///
    /// Panics if the monomial was not enumerated by this basis — indices are
    /// produced by the basis itself, so a miss is a programming error.
    pub fn position(&self, monomial: &Monomial) -> usize {
        self.index[monomial.order()][&monomial.0]
    }
}
