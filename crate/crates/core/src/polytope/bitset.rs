//! Fixed-capacity bitsets for facet incidences.

pub const CAPACITY: usize = 512;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FacetSet([u64; 8]);

impl FacetSet {
    pub fn new() -> Self {
        FacetSet([0; 8])
    }

    pub fn from_indices(idx: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::new();
        for i in idx {
            s.insert(i);
        }
        s
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.0[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.0[i >> 6] &= !(1 << (i & 63));
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.0[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn and(&self, o: &Self) -> Self {
        let mut r = [0u64; 8];
        for (k, v) in r.iter_mut().enumerate() {
            *v = self.0[k] & o.0[k];
        }
        FacetSet(r)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    /// True when `self ⊇ o`.
    #[inline]
    pub fn is_superset(&self, o: &Self) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| b & !a == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..8).flat_map(move |k| {
            let mut w = self.0[k];
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + t)
                }
            })
        })
    }
}

impl std::fmt::Debug for FacetSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
