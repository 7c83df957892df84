//! Shared service state: one knowledge base behind a single-writer lock,
//! optionally persisted to a data directory after every mutation.

use std::sync::{Arc, RwLock};

use ontokms_core::kb::{DataDir, KnowledgeBase};
use ontokms_core::Result;

#[derive(Debug)]
struct Inner {
    kb: KnowledgeBase,
    data: Option<DataDir>,
}

#[derive(Debug, Clone)]
pub struct AppState {
    inner: Arc<RwLock<Inner>>,
    pub default_lang: String,
}

impl AppState {
    /// State that lives only in memory.
    pub fn in_memory(kb: KnowledgeBase, default_lang: impl Into<String>) -> Self {
        Self::build(kb, None, default_lang)
    }

    /// State that writes snapshot, log and catalog to `data` after each mutation.
    pub fn persistent(kb: KnowledgeBase, data: DataDir, default_lang: impl Into<String>) -> Self {
        Self::build(kb, Some(data), default_lang)
    }

    fn build(kb: KnowledgeBase, data: Option<DataDir>, default_lang: impl Into<String>) -> Self {
        Self { inner: Arc::new(RwLock::new(Inner { kb, data })), default_lang: default_lang.into() }
    }

    pub fn read<T>(&self, f: impl FnOnce(&KnowledgeBase) -> T) -> T {
        let guard = self.inner.read().unwrap_or_else(|e| e.into_inner());
        f(&guard.kb)
    }

    /// Runs a mutation under the write lock and persists the result. If
    /// persisting fails the in-memory state is rolled back and the I/O error
    /// returned, so memory and disk never disagree.
    pub fn write<T>(&self, f: impl FnOnce(&mut KnowledgeBase) -> Result<T>) -> Result<T> {
        let mut guard = self.inner.write().unwrap_or_else(|e| e.into_inner());
        let inner = &mut *guard;
        let Some(data) = inner.data.as_mut() else { return f(&mut inner.kb) };
        let before = (inner.kb.clone(), data.clone());
        let value = f(&mut inner.kb)?;
        if let Err(e) = data.save(&inner.kb) {
            inner.kb = before.0;
            *data = before.1;
            return Err(e);
        }
        Ok(value)
    }
}
