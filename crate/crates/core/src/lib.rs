//! SUSHI finite volume schemes for anisotropic diffusion on polygonal meshes.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod gradient;
pub mod mesh;
pub mod meshgen;
pub mod postproc;
pub mod problems;
pub mod run;
pub mod solver;
pub mod space;
pub mod sparse;

pub use error::{Error, Result};

/// Caps the global rayon pool at `SUSHI_THREADS` threads when the variable is
/// set. Called by the parallel entry points; later calls are no-ops.
pub fn ensure_thread_pool() {
    static INIT: std::sync::Once = std::sync::Once::new();
    INIT.call_once(|| {
        if let Some(n) = std::env::var("SUSHI_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            // fails only if a global pool already exists, which then wins
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    });
}
