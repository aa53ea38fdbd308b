/// Set of shard ordinals backed by a bitmap over `0..universe`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocSet {
    universe: usize,
    words: Vec<u64>,
}

impl DocSet {
    pub fn empty(universe: usize) -> Self {
        DocSet {
            universe,
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn all(universe: usize) -> Self {
        let mut set = DocSet {
            universe,
            words: vec![u64::MAX; universe.div_ceil(64)],
        };
        set.clear_tail();
        set
    }

    pub fn from_ordinals(universe: usize, ordinals: &[u32]) -> Self {
        let mut set = Self::empty(universe);
        for &o in ordinals {
            set.insert(o);
        }
        set
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, ordinal: u32) {
        let o = ordinal as usize;
        assert!(o < self.universe, "ordinal {o} outside universe {}", self.universe);
        self.words[o / 64] |= 1 << (o % 64);
    }

    pub fn contains(&self, ordinal: u32) -> bool {
        let o = ordinal as usize;
        o < self.universe && self.words[o / 64] >> (o % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn intersect_with(&mut self, other: &DocSet) {
        debug_assert_eq!(self.universe, other.universe);
        self.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a &= b);
    }

    pub fn union_with(&mut self, other: &DocSet) {
        debug_assert_eq!(self.universe, other.universe);
        self.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a |= b);
    }

    pub fn complement(&mut self) {
        self.words.iter_mut().for_each(|w| *w = !*w);
        self.clear_tail();
    }

    /// Ordinals in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros();
                w &= w - 1;
                Some((i * 64) as u32 + bit)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    fn clear_tail(&mut self) {
        if !self.universe.is_multiple_of(64) {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (self.universe % 64)) - 1;
            }
        }
    }
}
