use std::hash::Hash;

use parking_lot::RwLock;
use rustc_hash::FxHashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{what} table full: id budget of {limit} exhausted")]
pub struct TableFull {
    pub what: &'static str,
    pub limit: usize,
}

/// Append-only interner handing out dense ids in first-seen order.
#[derive(Debug)]
pub struct Interner<T> {
    inner: RwLock<Inner<T>>,
    limit: usize,
    what: &'static str,
}

#[derive(Debug)]
struct Inner<T> {
    items: Vec<T>,
    index: FxHashMap<T, u32>,
}

impl<T: Copy + Eq + Hash> Interner<T> {
    pub fn new(what: &'static str, limit: usize) -> Self {
        Interner {
            inner: RwLock::new(Inner { items: Vec::new(), index: FxHashMap::default() }),
            limit: limit.min(u32::MAX as usize),
            what,
        }
    }

    pub fn intern(&self, item: T) -> Result<u32, TableFull> {
        if let Some(&id) = self.inner.read().index.get(&item) {
            return Ok(id);
        }
        let mut w = self.inner.write();
        if let Some(&id) = w.index.get(&item) {
            return Ok(id);
        }
        if w.items.len() >= self.limit {
            return Err(TableFull { what: self.what, limit: self.limit });
        }
        let id = w.items.len() as u32;
        w.items.push(item);
        w.index.insert(item, id);
        Ok(id)
    }

    pub fn lookup(&self, item: &T) -> Option<u32> {
        self.inner.read().index.get(item).copied()
    }

    /// Panics on an id this interner never issued.
    pub fn get(&self, id: u32) -> T {
        self.inner.read().items[id as usize]
    }

    pub fn try_get(&self, id: u32) -> Option<T> {
        self.inner.read().items.get(id as usize).copied()
    }

    pub fn len(&self) -> usize {
        self.inner.read().items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<T> {
        self.inner.read().items.clone()
    }

    /// Runs `f` with shared access to all interned items.
    pub fn with_items<R>(&self, f: impl FnOnce(&[T]) -> R) -> R {
        f(&self.inner.read().items)
    }

    pub fn limit(&self) -> usize {
        self.limit
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_dense_and_stable() {
        let i = Interner::new("thing", 10);
        assert_eq!(i.intern('a'), Ok(0));
        assert_eq!(i.intern('b'), Ok(1));
        assert_eq!(i.intern('a'), Ok(0));
        assert_eq!(i.get(1), 'b');
        assert_eq!(i.len(), 2);
    }

    #[test]
    fn budget_is_enforced() {
        let i = Interner::new("thing", 2);
        i.intern(1).unwrap();
        i.intern(2).unwrap();
        assert_eq!(i.intern(1), Ok(0));
        assert_eq!(i.intern(3), Err(TableFull { what: "thing", limit: 2 }));
    }

    #[test]
    fn concurrent_interning_agrees() {
        let i = Interner::new("n", 1000);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for v in 0..200u32 {
                        i.intern(v).unwrap();
                    }
                });
            }
        });
        assert_eq!(i.len(), 200);
        for v in 0..200u32 {
            assert_eq!(i.get(i.lookup(&v).unwrap()), v);
        }
    }
}
