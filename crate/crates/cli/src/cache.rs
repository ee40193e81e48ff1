//! One JSON record per input hash under a cache directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::record::{PointInput, ResultRecord};

/// Overrides the cache location.
pub const CACHE_ENV: &str = "FLOQUET_CACHE_DIR";

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `$FLOQUET_CACHE_DIR`, else `<out>/cache`.
    pub fn locate(out: &Path) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::new(d),
            _ => Self::new(out.join("cache")),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    /// A stored record whose echoed input equals `input`; unreadable files are misses.
    pub fn get(&self, input: &PointInput) -> Option<ResultRecord> {
        let hash = input.hash();
        let text = fs::read(self.path(&hash)).ok()?;
        let r: ResultRecord = serde_json::from_slice(&text).ok()?;
        (r.input_hash == hash && &r.input == input && r.error.is_none()).then_some(r)
    }

    pub fn put(&self, record: &ResultRecord) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let target = self.path(&record.input_hash);
        static SERIAL: AtomicUsize = AtomicUsize::new(0);
        let serial = SERIAL.fetch_add(1, Ordering::Relaxed);
        let tmp = target.with_extension(format!("tmp{}-{serial}", std::process::id()));
        fs::write(&tmp, serde_json::to_vec_pretty(record)?)?;
        fs::rename(tmp, target)
    }
}
