//! Worker-pool helper shared by the batch operations.

use crate::error::{Error, Result};

/// Number of data-parallel workers. Results never depend on this value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Workers(usize);

impl Workers {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("worker count must be at least 1".into()));
        }
        Ok(Self(n))
    }

    pub fn single() -> Self {
        Self(1)
    }

    /// One worker per available core.
    pub fn available() -> Self {
        Self(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Runs `f` inside a pool capped at this many threads.
    pub fn install<R: Send>(self, f: impl FnOnce() -> R + Send) -> R {
        match rayon::ThreadPoolBuilder::new().num_threads(self.0).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self::available()
    }
}
