use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Item multiset with a stable (sorted) iteration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Multiset {
    counts: BTreeMap<String, u32>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, item: &str) {
        *self.counts.entry(item.to_string()).or_insert(0) += 1;
    }

    /// Removes one copy; false when absent.
    pub fn remove(&mut self, item: &str) -> bool {
        match self.counts.get_mut(item) {
            Some(n) if *n > 1 => {
                *n -= 1;
                true
            }
            Some(_) => {
                self.counts.remove(item);
                true
            }
            None => false,
        }
    }

    pub fn count(&self, item: &str) -> u32 {
        self.counts.get(item).copied().unwrap_or(0)
    }

    pub fn contains(&self, item: &str) -> bool {
        self.count(item) > 0
    }

    pub fn len(&self) -> usize {
        self.counts.values().map(|&n| n as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn clear(&mut self) {
        self.counts.clear();
    }

    /// Every copy, in sorted order.
    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.counts.iter().flat_map(|(k, &n)| std::iter::repeat_n(k.as_str(), n as usize))
    }

    pub fn distinct(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn is_subset_of(&self, other: &Multiset) -> bool {
        self.counts.iter().all(|(k, &n)| other.count(k) >= n)
    }

    /// `self - other`, saturating at zero.
    pub fn difference(&self, other: &Multiset) -> Multiset {
        let mut out = Multiset::new();
        for (k, &n) in &self.counts {
            let left = n.saturating_sub(other.count(k));
            if left > 0 {
                out.counts.insert(k.clone(), left);
            }
        }
        out
    }

    pub fn extend(&mut self, other: &Multiset) {
        for (k, &n) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += n;
        }
    }
}

impl<'a> FromIterator<&'a str> for Multiset {
    fn from_iter<T: IntoIterator<Item = &'a str>>(iter: T) -> Self {
        let mut m = Multiset::new();
        iter.into_iter().for_each(|i| m.add(i));
        m
    }
}

impl FromIterator<String> for Multiset {
    fn from_iter<T: IntoIterator<Item = String>>(iter: T) -> Self {
        let mut m = Multiset::new();
        iter.into_iter().for_each(|i| m.add(&i));
        m
    }
}

impl Serialize for Multiset {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.items())
    }
}

impl<'de> Deserialize<'de> for Multiset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Vec::<String>::deserialize(d)?.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiset_operations() {
        let mut m: Multiset = ["b", "a", "b"].into_iter().collect();
        assert_eq!(m.items().collect::<Vec<_>>(), vec!["a", "b", "b"]);
        assert_eq!(m.len(), 3);
        let small: Multiset = ["b", "b"].into_iter().collect();
        assert!(small.is_subset_of(&m));
        assert!(!m.is_subset_of(&small));
        assert_eq!(m.difference(&small).items().collect::<Vec<_>>(), vec!["a"]);
        assert!(m.remove("b"));
        assert!(m.remove("b"));
        assert!(!m.remove("b"));
        assert_eq!(serde_json::to_string(&m).unwrap(), r#"["a"]"#);
    }
}
