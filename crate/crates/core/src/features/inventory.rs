use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Reserved symbol filling context slots beyond the utterance edges.
pub const EDGE: &str = "<edge>";

/// Ordered phone symbols; the edge symbol is always present at index 0 and
/// counts towards the size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhoneInventory {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl PhoneInventory {
    pub fn new<S: AsRef<str>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut inv = Self { symbols: vec![EDGE.to_string()], index: HashMap::from([(EDGE.to_string(), 0)]) };
        for s in symbols {
            let s = s.as_ref();
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!("invalid phone symbol {s:?}")));
            }
            if s == EDGE {
                continue;
            }
            if inv.index.contains_key(s) {
                return Err(Error::InvalidArgument(format!("duplicate phone symbol {s:?}")));
            }
            inv.index.insert(s.to_string(), inv.symbols.len());
            inv.symbols.push(s.to_string());
        }
        Ok(inv)
    }

    /// Sorted union of the phones in `utterances`.
    pub fn from_utterances<'a>(utterances: impl IntoIterator<Item = &'a super::AlignedUtterance>) -> Result<Self> {
        let mut set = std::collections::BTreeSet::new();
        for u in utterances {
            for e in &u.entries {
                set.insert(e.phone.clone());
            }
        }
        Self::new(set)
    }

    /// One symbol per line; blank lines ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.symbols.join("\n");
        text.push('\n');
        crate::signal::write_atomic_bytes(path, text.as_bytes())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.index.get(symbol).copied().ok_or_else(|| Error::UnknownPhone(symbol.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_symbol_is_implicit() {
        let inv = PhoneInventory::new(["a", "b", "c"]).unwrap();
        assert_eq!(inv.len(), 4);
        assert_eq!(inv.index_of(EDGE).unwrap(), 0);
        assert_eq!(inv.index_of("c").unwrap(), 3);
        assert!(matches!(inv.index_of("zz"), Err(Error::UnknownPhone(_))));
        assert!(PhoneInventory::new(["a", "a"]).is_err());
        let again = PhoneInventory::new(["<edge>", "a", "b", "c"]).unwrap();
        assert_eq!(again, inv);
    }
}
