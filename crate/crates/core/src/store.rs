//! Curve catalog and on-disk trace caches.
//!
//! Catalogs are JSON arrays of `{"label", "model", "tags"}`. A trace cache is
//! a line-oriented text file:
//!
//! ```text
//! #frobkit-cache v1
//! #curve [0,-1,1,-10,-20]
//! #covered 1000
//! 2,-2
//! 3,-1
//! ...
//! ```
//!
//! holding `a_p` for every good prime `p <= covered`, in increasing order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arith::{self, FundamentalDiscriminant};
use crate::curve::{format_model, parse_model, CurveError, WeierstrassCurve};
use crate::frobenius::{self, satisfies_hasse, FrobeniusError, TraceEngine, TraceRecord};

pub const CACHE_HEADER: &str = "#frobkit-cache v1";
const CURVE_PREFIX: &str = "#curve ";
const COVERED_PREFIX: &str = "#covered ";

const BUNDLED_CATALOG: &str = include_str!("../catalog/default.json");

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("catalog parse error at line {line}, column {column}: {msg}")]
    CatalogParse {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("duplicate catalog label {0:?}")]
    DuplicateLabel(String),
    #[error("catalog entry {label:?}: {source}")]
    InvalidEntry { label: String, source: CurveError },
    #[error("{0:?} is neither a catalog label nor a model [a1,a2,a3,a4,a6]")]
    UnknownCurve(String),
    #[error("cache line {line}: {msg}")]
    CacheFormat { line: usize, msg: String },
    #[error("cache belongs to curve {found}, not {expected}")]
    KeyMismatch { expected: String, found: String },
    #[error("cache covers p <= {covered}, requested {requested}")]
    NotCovered { requested: u64, covered: u64 },
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Catalog annotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Tag {
    Cm(FundamentalDiscriminant),
    NonCm,
    IsogenyClass(String),
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Cm(d) => write!(f, "cm:{d}"),
            Tag::NonCm => f.write_str("non-cm"),
            Tag::IsogenyClass(id) => write!(f, "isogeny-class:{id}"),
        }
    }
}

impl FromStr for Tag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "non-cm" {
            return Ok(Tag::NonCm);
        }
        if let Some(d) = s.strip_prefix("cm:") {
            let v: i64 = d
                .parse()
                .map_err(|_| format!("bad CM discriminant in tag {s:?}"))?;
            let disc = FundamentalDiscriminant::new(v).map_err(|e| e.to_string())?;
            return Ok(Tag::Cm(disc));
        }
        if let Some(id) = s.strip_prefix("isogeny-class:") {
            if !id.is_empty() {
                return Ok(Tag::IsogenyClass(id.to_string()));
            }
        }
        Err(format!("unknown tag {s:?}"))
    }
}

impl TryFrom<String> for Tag {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Tag> for String {
    fn from(t: Tag) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawEntry {
    label: String,
    model: [i64; 5],
    #[serde(default)]
    tags: Vec<Tag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub label: String,
    pub model: [i64; 5],
    pub tags: BTreeSet<Tag>,
    #[serde(skip)]
    curve: WeierstrassCurve,
}

impl CatalogEntry {
    pub fn curve(&self) -> &WeierstrassCurve {
        &self.curve
    }

    /// The CM discriminant claimed by the tags, if any.
    pub fn cm_tag(&self) -> Option<FundamentalDiscriminant> {
        self.tags.iter().find_map(|t| match t {
            Tag::Cm(d) => Some(*d),
            _ => None,
        })
    }

    pub fn isogeny_class(&self) -> Option<&str> {
        self.tags.iter().find_map(|t| match t {
            Tag::IsogenyClass(id) => Some(id.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let raw: Vec<RawEntry> =
            serde_json::from_str(text).map_err(|e| StoreError::CatalogParse {
                line: e.line(),
                column: e.column(),
                msg: e.to_string(),
            })?;
        let mut seen = BTreeSet::new();
        let mut entries = Vec::with_capacity(raw.len());
        for r in raw {
            if !seen.insert(r.label.clone()) {
                return Err(StoreError::DuplicateLabel(r.label));
            }
            let curve = WeierstrassCurve::new(r.model)
                .map_err(|source| StoreError::InvalidEntry {
                    label: r.label.clone(),
                    source,
                })?
                .with_label(r.label.clone());
            entries.push(CatalogEntry {
                label: r.label,
                model: r.model,
                tags: r.tags.into_iter().collect(),
                curve,
            });
        }
        Ok(Self { entries })
    }

    /// The catalog shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CATALOG).expect("bundled catalog is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn get(&self, label: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    /// Resolves a catalog label or a bracket model.
    pub fn resolve(&self, name: &str) -> Result<WeierstrassCurve, StoreError> {
        if let Some(e) = self.get(name) {
            return Ok(e.curve.clone());
        }
        if name.trim_start().starts_with('[') {
            return name.parse().map_err(|source| StoreError::InvalidEntry {
                label: name.to_string(),
                source,
            });
        }
        Err(StoreError::UnknownCurve(name.to_string()))
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Vec<CatalogEntry>, StoreError> {
    Ok(Catalog::load(path)?.entries)
}

/// Stable identifier of a model: leading 16 hex digits of SHA-256 of its bracket form.
pub fn curve_key(model: &[i64; 5]) -> String {
    let digest = Sha256::digest(format_model(model).as_bytes());
    hex::encode(&digest[..8])
}

/// Cached traces of one curve for every good prime up to `covered_up_to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceCache {
    model: [i64; 5],
    entries: BTreeMap<u64, i64>,
    covered_up_to: u64,
}

impl TraceCache {
    pub fn new(curve: &WeierstrassCurve) -> Self {
        Self {
            model: curve.coefficients(),
            entries: BTreeMap::new(),
            covered_up_to: 0,
        }
    }

    pub fn key(&self) -> String {
        curve_key(&self.model)
    }

    pub fn model(&self) -> [i64; 5] {
        self.model
    }

    pub fn covered_up_to(&self) -> u64 {
        self.covered_up_to
    }

    pub fn entries(&self) -> &BTreeMap<u64, i64> {
        &self.entries
    }

    fn check_key(&self, curve: &WeierstrassCurve) -> Result<(), StoreError> {
        if curve.coefficients() != self.model {
            return Err(StoreError::KeyMismatch {
                expected: format!("{} ({})", curve, curve_key(&curve.coefficients())),
                found: format!("{} ({})", format_model(&self.model), self.key()),
            });
        }
        Ok(())
    }

    /// Computes traces for the good primes in `(covered_up_to, new_bound]`
    /// and returns how many were computed.
    pub fn extend(
        &mut self,
        curve: &WeierstrassCurve,
        new_bound: u64,
        engine: &TraceEngine,
    ) -> Result<usize, StoreError> {
        self.check_key(curve)?;
        if new_bound <= self.covered_up_to {
            return Ok(0);
        }
        let fresh: Vec<u64> = arith::primes_up_to(new_bound)
            .into_iter()
            .filter(|&p| p > self.covered_up_to)
            .collect();
        let traces = engine.traces(curve, &fresh);
        let computed = traces.len();
        self.entries.extend(traces);
        self.covered_up_to = new_bound;
        Ok(computed)
    }

    /// Scan records for `p <= x_max`; the cache must already cover `x_max`.
    pub fn records(&self, x_max: u64) -> Result<Vec<TraceRecord>, StoreError> {
        if x_max > self.covered_up_to {
            return Err(StoreError::NotCovered {
                requested: x_max,
                covered: self.covered_up_to,
            });
        }
        Ok(frobenius::records_from_traces(
            self.entries.range(..=x_max).map(|(&p, &a)| (p, a)),
        )?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 * self.entries.len() + 64);
        out.push_str(CACHE_HEADER);
        out.push('\n');
        out.push_str(CURVE_PREFIX);
        out.push_str(&format_model(&self.model));
        out.push('\n');
        out.push_str(COVERED_PREFIX);
        out.push_str(&self.covered_up_to.to_string());
        out.push('\n');
        for (p, a) in &self.entries {
            out.push_str(&format!("{p},{a}\n"));
        }
        out
    }

    /// Parses cache text, checking the header, ordering, primality and Hasse bound.
    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let err = |line: usize, msg: String| StoreError::CacheFormat { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, CACHE_HEADER)) => {}
            _ => return Err(err(1, format!("expected header {CACHE_HEADER:?}"))),
        }
        let model = match lines.next() {
            Some((n, l)) => {
                let m = l
                    .strip_prefix(CURVE_PREFIX)
                    .ok_or_else(|| err(n, format!("expected {CURVE_PREFIX:?}")))?;
                parse_model(m).map_err(|e| err(n, e.to_string()))?
            }
            None => return Err(err(2, "missing curve line".into())),
        };
        let covered_up_to = match lines.next() {
            Some((n, l)) => l
                .strip_prefix(COVERED_PREFIX)
                .and_then(|v| v.parse::<u64>().ok())
                .ok_or_else(|| err(n, format!("expected {COVERED_PREFIX:?}<N>")))?,
            None => return Err(err(3, "missing covered line".into())),
        };
        let mut entries = BTreeMap::new();
        let mut last = 0u64;
        for (n, l) in lines {
            let (p, a) = l
                .split_once(',')
                .and_then(|(p, a)| Some((p.parse::<u64>().ok()?, a.parse::<i64>().ok()?)))
                .ok_or_else(|| err(n, format!("expected p,a_p but found {l:?}")))?;
            if p <= last {
                return Err(err(n, format!("prime {p} out of order")));
            }
            if p > covered_up_to {
                return Err(err(
                    n,
                    format!("prime {p} beyond covered bound {covered_up_to}"),
                ));
            }
            if !arith::is_prime(p) {
                return Err(err(n, format!("{p} is not prime")));
            }
            if !satisfies_hasse(p, a) {
                return Err(err(
                    n,
                    format!("a_p = {a} violates the Hasse bound at p = {p}"),
                ));
            }
            entries.insert(p, a);
            last = p;
        }
        Ok(Self {
            model,
            entries,
            covered_up_to,
        })
    }

    /// Checks that the cache belongs to `curve` and lists exactly its good primes.
    pub fn validate_for(&self, curve: &WeierstrassCurve) -> Result<(), StoreError> {
        self.check_key(curve)?;
        let expected = arith::primes_up_to(self.covered_up_to)
            .into_iter()
            .filter(|&p| curve.has_good_reduction(p));
        let mut present = self.entries.keys().copied();
        for p in expected {
            match present.next() {
                Some(q) if q == p => {}
                _ => {
                    return Err(StoreError::CacheFormat {
                        line: 0,
                        msg: format!("entry for good prime {p} missing or misplaced"),
                    })
                }
            }
        }
        if let Some(q) = present.next() {
            return Err(StoreError::CacheFormat {
                line: 0,
                msg: format!("entry for bad prime {q}"),
            });
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>, curve: &WeierstrassCurve) -> Result<Self, StoreError> {
        let cache = Self::parse(&fs::read_to_string(path)?)?;
        cache.validate_for(curve)?;
        Ok(cache)
    }

    /// Writes through a temporary file in the same directory, then renames.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let path = path.as_ref();
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.to_text().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }
}

/// Functional form of [`TraceCache::extend`].
pub fn cache_extend(
    mut cache: TraceCache,
    curve: &WeierstrassCurve,
    new_bound: u64,
    engine: &TraceEngine,
) -> Result<TraceCache, StoreError> {
    cache.extend(curve, new_bound, engine)?;
    Ok(cache)
}

/// Directory of cache files named by curve key.
#[derive(Debug, Clone)]
pub struct CacheDir {
    root: PathBuf,
}

impl CacheDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, curve: &WeierstrassCurve) -> PathBuf {
        self.root
            .join(format!("{}.cache", curve_key(&curve.coefficients())))
    }

    pub fn load_or_new(&self, curve: &WeierstrassCurve) -> Result<TraceCache, StoreError> {
        let path = self.path_for(curve);
        if path.exists() {
            TraceCache::read(&path, curve)
        } else {
            Ok(TraceCache::new(curve))
        }
    }

    pub fn save(&self, cache: &TraceCache) -> Result<(), StoreError> {
        cache.write(self.root.join(format!("{}.cache", cache.key())))
    }

    /// Extends the stored cache of `curve` to `x_max`, persisting it if anything
    /// was computed. Returns the cache and the number of traces computed.
    pub fn ensure(
        &self,
        curve: &WeierstrassCurve,
        x_max: u64,
        engine: &TraceEngine,
    ) -> Result<(TraceCache, usize), StoreError> {
        let mut cache = self.load_or_new(curve)?;
        let computed = cache.extend(curve, x_max, engine)?;
        if computed > 0 || !self.path_for(curve).exists() {
            self.save(&cache)?;
        }
        Ok((cache, computed))
    }
}
