//! On-disk cache of modular polynomials, one text file per level in the
//! directory named by `HECKE_LAB_CACHE`.

use std::fs;
use std::path::{Path, PathBuf};

use hecke_lab_core::hecke::{modular_polynomial, HeckeError, ModularPolynomial};

pub const CACHE_ENV: &str = "HECKE_LAB_CACHE";

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn cache_path(dir: &Path, n: u64) -> PathBuf {
    dir.join(format!("phi_{n}.txt"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Cache,
    Computed,
}

/// Reads `Phi_n` from `dir`, or computes it and writes it back.
pub fn load_or_compute_in(dir: Option<&Path>, n: u64) -> Result<(ModularPolynomial, Source), HeckeError> {
    if let Some(dir) = dir {
        let path = cache_path(dir, n);
        if let Ok(text) = fs::read_to_string(&path) {
            let phi = ModularPolynomial::from_cache_str(&text)?;
            if phi.n() != n {
                return Err(HeckeError::Cache(format!("{} holds level {}", path.display(), phi.n())));
            }
            return Ok((phi, Source::Cache));
        }
    }
    let phi = modular_polynomial(n)?;
    if let Some(dir) = dir {
        let write = fs::create_dir_all(dir).and_then(|_| fs::write(cache_path(dir, n), phi.to_cache_string()));
        if let Err(e) = write {
            eprintln!("warning: cannot write cache in {}: {e}", dir.display());
        }
    }
    Ok((phi, Source::Computed))
}

pub fn load_or_compute(n: u64) -> Result<(ModularPolynomial, Source), HeckeError> {
    load_or_compute_in(cache_dir().as_deref(), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_then_reads() {
        let dir = std::env::temp_dir().join(format!("hecke-lab-cache-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let (a, s1) = load_or_compute_in(Some(&dir), 3).unwrap();
        let (b, s2) = load_or_compute_in(Some(&dir), 3).unwrap();
        assert_eq!((s1, s2), (Source::Computed, Source::Cache));
        assert_eq!(a, b);
        fs::write(cache_path(&dir, 5), a.to_cache_string()).unwrap();
        assert!(matches!(load_or_compute_in(Some(&dir), 5), Err(HeckeError::Cache(_))));
        // beyond the compute range only a cache file helps
        assert!(matches!(
            load_or_compute_in(None, 11),
            Err(HeckeError::NotComputable(11))
        ));
        fs::remove_dir_all(&dir).unwrap();
    }
}
