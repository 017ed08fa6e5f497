//! Process-wide memo tables for exact coefficient data reused across evaluations.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::Result;

pub(crate) struct Memo<K, V> {
    map: OnceLock<Mutex<HashMap<K, Arc<V>>>>,
}

impl<K: Eq + Hash + Clone, V> Memo<K, V> {
    pub(crate) const fn new() -> Self {
        Memo { map: OnceLock::new() }
    }

    pub(crate) fn get_or(&self, key: K, build: impl FnOnce() -> Result<V>) -> Result<Arc<V>> {
        let map = self.map.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = map.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(v.clone());
        }
        // built outside the lock; a racing duplicate build is harmless
        let v = Arc::new(build()?);
        map.lock().unwrap_or_else(|e| e.into_inner()).entry(key).or_insert(v.clone());
        Ok(v)
    }
}
