use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use async_trait::async_trait;

use super::types::{TxBundle, TxHash};
use super::{ChainError, ChainSource};

/// One JSON file per transaction hash. Writes go through a temp file and a
/// rename so readers never see a partial bundle; writers to the same key are
/// serialized.
pub struct BundleCache {
    dir: PathBuf,
    locks: Mutex<HashMap<TxHash, Arc<tokio::sync::Mutex<()>>>>,
}

impl BundleCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, tx_hash: &TxHash) -> PathBuf {
        self.dir.join(format!("{tx_hash}.json"))
    }

    fn key_lock(&self, tx_hash: &TxHash) -> Arc<tokio::sync::Mutex<()>> {
        self.locks
            .lock()
            .expect("cache lock table")
            .entry(*tx_hash)
            .or_default()
            .clone()
    }

    pub async fn get(&self, tx_hash: &TxHash) -> Result<Option<TxBundle>, ChainError> {
        let path = self.path_for(tx_hash);
        match tokio::fs::read_to_string(&path).await {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| ChainError::Malformed(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ChainError::Io(format!("{}: {e}", path.display()))),
        }
    }

    pub async fn put(&self, bundle: &TxBundle) -> Result<PathBuf, ChainError> {
        let lock = self.key_lock(&bundle.tx_hash);
        let _guard = lock.lock().await;
        let io = |e: std::io::Error| ChainError::Io(e.to_string());
        tokio::fs::create_dir_all(&self.dir).await.map_err(io)?;
        let path = self.path_for(&bundle.tx_hash);
        let tmp = self.dir.join(format!(".{}.tmp", bundle.tx_hash));
        let mut text = serde_json::to_string_pretty(bundle).expect("bundle serializes");
        text.push('\n');
        tokio::fs::write(&tmp, text).await.map_err(io)?;
        tokio::fs::rename(&tmp, &path).await.map_err(io)?;
        Ok(path)
    }
}

/// Serves from the cache, falling through to `inner` on a miss.
pub struct CachedSource<S> {
    inner: S,
    cache: BundleCache,
}

impl<S: ChainSource> CachedSource<S> {
    pub fn new(inner: S, cache: BundleCache) -> Self {
        Self { inner, cache }
    }

    pub fn cache(&self) -> &BundleCache {
        &self.cache
    }
}

#[async_trait]
impl<S: ChainSource> ChainSource for CachedSource<S> {
    async fn fetch_bundle(&self, tx_hash: &TxHash) -> Result<TxBundle, ChainError> {
        if let Some(hit) = self.cache.get(tx_hash).await? {
            return Ok(hit);
        }
        let bundle = self.inner.fetch_bundle(tx_hash).await?;
        self.cache.put(&bundle).await?;
        Ok(bundle)
    }

    fn describe(&self) -> String {
        format!("{} (cache {})", self.inner.describe(), self.cache.dir.display())
    }
}
