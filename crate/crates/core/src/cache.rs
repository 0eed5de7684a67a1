//! Bubble cache files: canonical decimal JSON (17 significant digits, so
//! every f64 round-trips bit-exactly), content checksums, key hashing, and
//! atomic publication via temp-file rename.

use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::bubble::{BubbleSolution, RadialProfile, SolverMeta, TailCoefficients};
use crate::error::{Error, Result};
use crate::hyperbola::{self, Regime};

/// Bump when the on-disk layout changes; stale versions are recomputed.
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheMeta {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub tol: f64,
    pub r_max: f64,
    pub beta_star: f64,
    pub version: u32,
    /// FNV-1a 64 over the canonical serialization with this field blank.
    #[serde(default)]
    pub checksum: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheTail {
    pub a: f64,
    pub b: f64,
    pub gamma: Option<f64>,
    pub regime: Regime,
    pub fit_variation: f64,
    pub fit_window: (f64, f64),
    pub slope_u: f64,
    pub slope_v: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheResidual {
    pub ode_residual: f64,
}

/// On-disk bubble representation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BubbleCache {
    pub meta: CacheMeta,
    pub grid: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    #[serde(rename = "dU")]
    pub du: Vec<f64>,
    #[serde(rename = "dV")]
    pub dv: Vec<f64>,
    pub tail: CacheTail,
    pub residual: CacheResidual,
}

/// serde_json formatter printing every float with 17 significant digits:
/// enough to reproduce any f64 bit-exactly, and canonical (no shortest-form
/// ambiguity).
struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.8e}")
    }
}

/// Serialize any value as canonical JSON text.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Domain(format!("serialization failed: {e}")))?;
    String::from_utf8(out).map_err(|e| Error::Domain(format!("non-utf8 serialization: {e}")))
}

/// FNV-1a 64-bit.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325_u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Cache key: hash of the canonical rendering of the inputs.
pub fn cache_key(n: u32, p: f64, q: f64, tol: f64, r_max: f64) -> String {
    let text = format!("N={n};p={p:.16e};q={q:.16e};tol={tol:.16e};r_max={r_max:.16e}");
    format!("{:016x}", fnv1a(text.as_bytes()))
}

impl BubbleCache {
    pub fn from_solution(sol: &BubbleSolution) -> Self {
        BubbleCache {
            meta: CacheMeta {
                n: sol.pair.n,
                p: sol.pair.p,
                q: sol.pair.q,
                tol: sol.solver_meta.tol,
                r_max: sol.solver_meta.r_max,
                beta_star: sol.beta_star,
                version: CACHE_VERSION,
                checksum: String::new(),
            },
            grid: sol.profile.r.clone(),
            u: sol.profile.u.clone(),
            v: sol.profile.v.clone(),
            du: sol.profile.du.clone(),
            dv: sol.profile.dv.clone(),
            tail: CacheTail {
                a: sol.tail.a,
                b: sol.tail.b,
                gamma: sol.tail.gamma,
                regime: sol.tail.regime,
                fit_variation: sol.tail.fit_variation,
                fit_window: sol.tail.fit_window,
                slope_u: sol.tail.slope_u,
                slope_v: sol.tail.slope_v,
            },
            residual: CacheResidual {
                ode_residual: sol.ode_residual,
            },
        }
    }

    /// Rebuild a usable solution (the bisection trace is not persisted).
    pub fn into_solution(self) -> Result<BubbleSolution> {
        let pair = hyperbola::classify(self.meta.n, self.meta.p, self.meta.q)?;
        pair.require_critical()?;
        let profile = RadialProfile {
            r: self.grid,
            u: self.u,
            v: self.v,
            du: self.du,
            dv: self.dv,
        };
        let len = profile.r.len();
        if [profile.u.len(), profile.v.len(), profile.du.len(), profile.dv.len()]
            .iter()
            .any(|&l| l != len)
            || len < 16
        {
            return Err(Error::Domain("cache arrays inconsistent".into()));
        }
        let decay = hyperbola::decay_exponent(&pair)?;
        let tail = TailCoefficients {
            a: self.tail.a,
            b: self.tail.b,
            gamma: self.tail.gamma,
            regime: self.tail.regime,
            fit_window: self.tail.fit_window,
            fit_variation: self.tail.fit_variation,
            slope_u: self.tail.slope_u,
            slope_v: self.tail.slope_v,
        };
        if decay.regime != self.tail.regime {
            return Err(Error::Domain("cached regime disagrees with the pair".into()));
        }
        let meta = SolverMeta {
            tol: self.meta.tol,
            r_max: self.meta.r_max,
            nodes_per_decade: 0,
            bracket: (self.meta.beta_star, self.meta.beta_star),
            trace: Vec::new(),
            forced_steps: 0,
        };
        BubbleSolution::from_parts(
            pair,
            self.meta.beta_star,
            profile,
            tail,
            self.residual.ode_residual,
            meta,
        )
    }

    /// Canonical serialization with the checksum filled in.
    pub fn to_json(&self) -> Result<String> {
        let mut blank = self.clone();
        blank.meta.checksum = String::new();
        let payload = to_canonical_json(&blank)?;
        let mut stamped = self.clone();
        stamped.meta.checksum = format!("{:016x}", fnv1a(payload.as_bytes()));
        to_canonical_json(&stamped)
    }

    /// Parse and verify checksum and version.
    pub fn from_json(text: &str) -> Result<BubbleCache> {
        let cache: BubbleCache = serde_json::from_str(text)
            .map_err(|e| Error::Domain(format!("cache parse error: {e}")))?;
        if cache.meta.version != CACHE_VERSION {
            return Err(Error::Domain(format!(
                "stale cache version {} (current {CACHE_VERSION})",
                cache.meta.version
            )));
        }
        let mut blank = cache.clone();
        blank.meta.checksum = String::new();
        let payload = to_canonical_json(&blank)?;
        let expected = format!("{:016x}", fnv1a(payload.as_bytes()));
        if expected != cache.meta.checksum {
            return Err(Error::Domain(format!(
                "cache checksum mismatch: stored {}, computed {expected}",
                cache.meta.checksum
            )));
        }
        Ok(cache)
    }

    pub fn key(&self) -> String {
        cache_key(
            self.meta.n,
            self.meta.p,
            self.meta.q,
            self.meta.tol,
            self.meta.r_max,
        )
    }
}

/// Write bytes to `dir/name` atomically (temp file in the same directory,
/// then rename), safe under concurrent writers.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Domain(format!("cannot create cache dir {dir:?}: {e}")))?;
    let unique = format!(
        ".{name}.{}.{}.tmp",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    );
    let tmp = dir.join(&unique);
    let target = dir.join(name);
    std::fs::write(&tmp, bytes).map_err(|e| Error::Domain(format!("cache write failed: {e}")))?;
    std::fs::rename(&tmp, &target)
        .map_err(|e| Error::Domain(format!("cache rename failed: {e}")))?;
    Ok(target)
}
