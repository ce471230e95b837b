use std::collections::BTreeMap;
use std::fmt;

use smallvec::{smallvec, SmallVec};

/// Index of a binary circuit variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A fixed-length bit vector over some declared variable list.
///
/// Position `i` holds the value of the `i`-th variable of that list. The
/// numeric bit pattern of an assignment puts position `i` at bit `i`, so
/// `"100"` (position 0 set) is pattern 1 and `"001"` is pattern 4.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

impl Assignment {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: smallvec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(values: &[bool]) -> Self {
        let mut a = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            a.set(i, v);
        }
        a
    }

    /// Builds an assignment of `len` positions from the low bits of `pattern`.
    pub fn from_index(pattern: u64, len: usize) -> Self {
        assert!(len <= 64 || pattern == 0);
        let mut a = Self::zeros(len);
        if len > 0 {
            a.words[0] = if len >= 64 { pattern } else { pattern & ((1u64 << len) - 1) };
        }
        a
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Bit pattern as an integer. Only meaningful for assignments of at most 64 positions.
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64, "assignment too long for a u64 pattern");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn hamming_distance(&self, other: &Assignment) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Compares numeric bit patterns (most significant word first).
    pub fn cmp_pattern(&self, other: &Assignment) -> std::cmp::Ordering {
        self.words.iter().rev().cmp(other.words.iter().rev())
    }

    /// Parses a string of `0`/`1` characters, position 0 first.
    pub fn parse_bits(s: &str) -> Option<Self> {
        let values: Option<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        values.map(|v| Self::from_bools(&v))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in self.iter() {
            f.write_str(if v { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Assignment({self})")
    }
}

/// Values fixed for a subset of the circuit variables (evidence).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialAssignment {
    bindings: BTreeMap<VarId, bool>,
}

impl PartialAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `var`. Returns `false` (and leaves the binding untouched) if it was already bound.
    pub fn insert(&mut self, var: VarId, value: bool) -> bool {
        use std::collections::btree_map::Entry;
        match self.bindings.entry(var) {
            Entry::Vacant(e) => {
                e.insert(value);
                true
            }
            Entry::Occupied(_) => false,
        }
    }

    pub fn get(&self, var: VarId) -> Option<bool> {
        self.bindings.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.bindings.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, bool)> + '_ {
        self.bindings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.bindings.keys().copied()
    }
}

impl FromIterator<(VarId, bool)> for PartialAssignment {
    fn from_iter<T: IntoIterator<Item = (VarId, bool)>>(iter: T) -> Self {
        let mut p = Self::new();
        for (k, v) in iter {
            p.insert(k, v);
        }
        p
    }
}
