//! Corpus ledger: extraction attempts, registered dumps, canonical-hash
//! bookkeeping, and per-cell success summaries.
//!
//! Storage is a directory holding two line-delimited JSON files:
//! `attempts.jsonl` (append-only) and `dumps.jsonl`. One JSON object per
//! line, field names matching the record structs, timestamps in ISO-8601
//! UTC. Single writer, any number of readers.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Digest, Fixture, Interface};

pub const ATTEMPTS_FILE: &str = "attempts.jsonl";
pub const DUMPS_FILE: &str = "dumps.jsonl";

/// Reference digests for targets whose canonical dumps are established.
/// Useful for flagging known-good reads at the bench.
pub const KNOWN_CANONICAL_DIGESTS: [(&str, &str); 2] = [
    (
        "HS175D",
        "4a7f46cc581c45cbc46e28663d910a960f340f822fd3e05c1c5da4bf7fd8a7ff",
    ),
    (
        "HS720",
        "0b327498562ac286c4dd14e57f87a1b4ba1f8986b4c0baa153bc4ce830c2a351",
    ),
];

/// Look up the published canonical digest for a device model, if any.
pub fn known_canonical_digest(device_model: &str) -> Option<Digest> {
    KNOWN_CANONICAL_DIGESTS
        .iter()
        .find(|(model, _)| *model == device_model)
        .map(|(_, hex)| hex.parse().expect("reference digests are valid hex"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Success,
    Failure,
}

/// Failure vocabulary observed at the bench.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureType {
    None,
    ClipMisalignment,
    NoChipDetected,
    BadRdid,
    IntermittentContact,
    UnstableDetection,
    CorruptDump,
    NoSerialOutput,
    Other,
}

/// One extraction attempt, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub device_model: String,
    pub interface: Interface,
    pub fixture: Fixture,
    pub outcome: Outcome,
    pub failure_type: FailureType,
    pub notes: String,
    pub recorded_at: DateTime<Utc>,
}

impl AttemptRecord {
    pub fn validate(&self) -> Result<()> {
        if self.device_model.is_empty() {
            return Err(Error::RecordValidation("device_model must be non-empty".into()));
        }
        match (self.outcome, self.failure_type) {
            (Outcome::Success, FailureType::None) => Ok(()),
            (Outcome::Success, other) => Err(Error::RecordValidation(format!(
                "successful attempt cannot carry failure type {other:?}"
            ))),
            (Outcome::Failure, FailureType::None) => Err(Error::RecordValidation(
                "failed attempt must carry a failure type".into(),
            )),
            (Outcome::Failure, _) => Ok(()),
        }
    }
}

/// A registered (successful) dump file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpRecord {
    pub digest: Digest,
    pub device_model: String,
    pub interface: Interface,
    pub fixture: Fixture,
    pub canonical: bool,
    pub verdict_summary: String,
    pub file_reference: String,
}

impl DumpRecord {
    pub fn validate(&self) -> Result<()> {
        if self.device_model.is_empty() {
            return Err(Error::RecordValidation("device_model must be non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HashesIdentical {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
    #[serde(rename = "N/A")]
    NotApplicable,
}

impl HashesIdentical {
    pub fn label(&self) -> &'static str {
        match self {
            HashesIdentical::Yes => "YES",
            HashesIdentical::No => "NO",
            HashesIdentical::NotApplicable => "N/A",
        }
    }
}

/// One summary row per (device model, interface, fixture) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummaryRow {
    pub device_model: String,
    pub interface: Interface,
    pub fixture: Fixture,
    pub attempts: u64,
    pub successes: u64,
    /// Exact success ratio; `None` when no attempts are recorded.
    pub rate: Option<f64>,
    pub hashes_identical: HashesIdentical,
}

impl CorpusSummaryRow {
    /// "SPI (alligator)" style interface+fixture label.
    pub fn interface_fixture(&self) -> String {
        let iface = match self.interface {
            Interface::Spi => "SPI",
            Interface::Swd => "SWD",
            Interface::Uart => "UART",
            Interface::Other => "OTHER",
        };
        let fixture = match self.fixture {
            Fixture::Alligator => Some("alligator"),
            Fixture::Hook => Some("hooks"),
            Fixture::Direct => Some("direct"),
            Fixture::None => None,
        };
        match fixture {
            Some(f) => format!("{iface} ({f})"),
            None => iface.to_string(),
        }
    }

    /// Rate rendered the way bench logs print it: "~75%" at whole-percent
    /// rounding, or "n/a" with no attempts.
    pub fn rate_display(&self) -> String {
        match self.rate {
            Some(r) => format!("~{}%", (r * 100.0).round()),
            None => "n/a".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub rows: Vec<CorpusSummaryRow>,
}

impl CorpusSummary {
    /// CSV export, one line per summary row.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("device_model,interface_fixture,attempts,successes,rate,hashes_identical\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.device_model,
                row.interface_fixture(),
                row.attempts,
                row.successes,
                row.rate_display(),
                row.hashes_identical.label()
            ));
        }
        out
    }
}

/// Success counts for one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRate {
    pub attempts: u64,
    pub successes: u64,
    /// `None` when `attempts` is zero — undefined, not 0%.
    pub rate: Option<f64>,
}

/// Directory-backed corpus ledger.
#[derive(Debug)]
pub struct CorpusStore {
    dir: PathBuf,
    attempts: Vec<AttemptRecord>,
    dumps: Vec<DumpRecord>,
}

impl CorpusStore {
    /// Open (or create) a store directory and load both ledgers.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(Error::Persistence)?;
        let attempts = load_jsonl(&dir.join(ATTEMPTS_FILE))?;
        let dumps = load_jsonl(&dir.join(DUMPS_FILE))?;
        Ok(CorpusStore {
            dir,
            attempts,
            dumps,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn attempts(&self) -> &[AttemptRecord] {
        &self.attempts
    }

    pub fn dumps(&self) -> &[DumpRecord] {
        &self.dumps
    }

    /// Append an attempt to the ledger. Attempts are never mutated or
    /// deleted.
    pub fn record_attempt(&mut self, record: AttemptRecord) -> Result<()> {
        record.validate()?;
        append_jsonl(&self.dir.join(ATTEMPTS_FILE), &record)?;
        self.attempts.push(record);
        Ok(())
    }

    /// Register a dump. At most one canonical dump may exist per device
    /// model; demote the old one first when replacing it.
    pub fn register_dump(&mut self, record: DumpRecord) -> Result<()> {
        record.validate()?;
        if record.canonical
            && self
                .dumps
                .iter()
                .any(|d| d.canonical && d.device_model == record.device_model)
        {
            return Err(Error::CanonicalConflict {
                device_model: record.device_model,
            });
        }
        append_jsonl(&self.dir.join(DUMPS_FILE), &record)?;
        self.dumps.push(record);
        Ok(())
    }

    /// Clear the canonical flag for a device model, rewriting the dump
    /// ledger. Returns whether a canonical record existed.
    pub fn demote_canonical(&mut self, device_model: &str) -> Result<bool> {
        let mut changed = false;
        for d in &mut self.dumps {
            if d.canonical && d.device_model == device_model {
                d.canonical = false;
                changed = true;
            }
        }
        if changed {
            rewrite_jsonl(&self.dir.join(DUMPS_FILE), &self.dumps)?;
        }
        Ok(changed)
    }

    pub fn canonical_dump(&self, device_model: &str) -> Option<&DumpRecord> {
        self.dumps
            .iter()
            .find(|d| d.canonical && d.device_model == device_model)
    }

    /// Attempts matching a (model, interface, fixture) cell.
    pub fn attempts_for(
        &self,
        device_model: &str,
        interface: Interface,
        fixture: Fixture,
    ) -> Vec<&AttemptRecord> {
        self.attempts
            .iter()
            .filter(|a| {
                a.device_model == device_model && a.interface == interface && a.fixture == fixture
            })
            .collect()
    }

    /// Exact success counts for one cell.
    pub fn success_rate(
        &self,
        device_model: &str,
        interface: Interface,
        fixture: Fixture,
    ) -> SuccessRate {
        let cell = self.attempts_for(device_model, interface, fixture);
        let attempts = cell.len() as u64;
        let successes = cell
            .iter()
            .filter(|a| a.outcome == Outcome::Success)
            .count() as u64;
        let rate = if attempts > 0 {
            Some(successes as f64 / attempts as f64)
        } else {
            None
        };
        SuccessRate {
            attempts,
            successes,
            rate,
        }
    }

    /// One row per populated cell, ordered by (model, interface, fixture).
    /// `hashes_identical` is YES when at least two dumps in the cell share
    /// a single digest, NO when they diverge, N/A with fewer than two.
    pub fn summarize(&self) -> CorpusSummary {
        let mut cells: BTreeMap<(String, Interface, Fixture), ()> = BTreeMap::new();
        for a in &self.attempts {
            cells.insert((a.device_model.clone(), a.interface, a.fixture), ());
        }
        for d in &self.dumps {
            cells.insert((d.device_model.clone(), d.interface, d.fixture), ());
        }

        let rows = cells
            .into_keys()
            .map(|(model, interface, fixture)| {
                let SuccessRate {
                    attempts,
                    successes,
                    rate,
                } = self.success_rate(&model, interface, fixture);
                let digests: Vec<&Digest> = self
                    .dumps
                    .iter()
                    .filter(|d| {
                        d.device_model == model && d.interface == interface && d.fixture == fixture
                    })
                    .map(|d| &d.digest)
                    .collect();
                let hashes_identical = if digests.len() < 2 {
                    HashesIdentical::NotApplicable
                } else if digests.iter().all(|d| *d == digests[0]) {
                    HashesIdentical::Yes
                } else {
                    HashesIdentical::No
                };
                CorpusSummaryRow {
                    device_model: model,
                    interface,
                    fixture,
                    attempts,
                    successes,
                    rate,
                    hashes_identical,
                }
            })
            .collect();
        CorpusSummary { rows }
    }

    /// Per-failure-type counts over all failed attempts.
    pub fn failure_histogram(&self) -> BTreeMap<String, u64> {
        let mut hist = BTreeMap::new();
        for a in &self.attempts {
            if a.outcome == Outcome::Failure {
                let key = serde_json::to_value(a.failure_type)
                    .expect("enum serializes")
                    .as_str()
                    .unwrap()
                    .to_string();
                *hist.entry(key).or_insert(0) += 1;
            }
        }
        hist
    }
}

fn load_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(Error::Persistence)?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|source| Error::CorruptRecord {
            file: path.display().to_string(),
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

fn append_jsonl<T: Serialize>(path: &Path, record: &T) -> Result<()> {
    let mut line = serde_json::to_string(record).expect("record serializes");
    line.push('\n');
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(Error::Persistence)?;
    file.write_all(line.as_bytes()).map_err(Error::Persistence)
}

fn rewrite_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("record serializes"));
        text.push('\n');
    }
    fs::write(path, text).map_err(Error::Persistence)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attempt(model: &str, fixture: Fixture, outcome: Outcome, failure: FailureType) -> AttemptRecord {
        AttemptRecord {
            device_model: model.to_string(),
            interface: Interface::Spi,
            fixture,
            outcome,
            failure_type: failure,
            notes: String::new(),
            recorded_at: DateTime::<Utc>::UNIX_EPOCH,
        }
    }

    fn dump(model: &str, fixture: Fixture, digest: Digest, canonical: bool) -> DumpRecord {
        DumpRecord {
            digest,
            device_model: model.to_string(),
            interface: Interface::Spi,
            fixture,
            canonical,
            verdict_summary: String::new(),
            file_reference: format!("{model}.bin"),
        }
    }

    #[test]
    fn success_with_failure_type_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = CorpusStore::open(dir.path()).unwrap();
        let bad = attempt("HS175D", Fixture::Alligator, Outcome::Success, FailureType::BadRdid);
        assert!(matches!(
            store.record_attempt(bad),
            Err(Error::RecordValidation(_))
        ));
        let ok = attempt("HS175D", Fixture::Alligator, Outcome::Success, FailureType::None);
        store.record_attempt(ok).unwrap();
    }

    #[test]
    fn failure_without_type_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = CorpusStore::open(dir.path()).unwrap();
        let bad = attempt("HS175D", Fixture::Hook, Outcome::Failure, FailureType::None);
        assert!(store.record_attempt(bad).is_err());
        let ok = attempt(
            "HS175D",
            Fixture::Alligator,
            Outcome::Failure,
            FailureType::ClipMisalignment,
        );
        store.record_attempt(ok).unwrap();
        assert_eq!(store.failure_histogram()["CLIP_MISALIGNMENT"], 1);
    }

    #[test]
    fn rates_are_exact_and_zero_attempts_is_undefined() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = CorpusStore::open(dir.path()).unwrap();
        for i in 0..8 {
            let (outcome, failure) = if i < 6 {
                (Outcome::Success, FailureType::None)
            } else {
                (Outcome::Failure, FailureType::IntermittentContact)
            };
            store
                .record_attempt(attempt("HS175D", Fixture::Hook, outcome, failure))
                .unwrap();
        }
        let r = store.success_rate("HS175D", Interface::Spi, Fixture::Hook);
        assert_eq!((r.attempts, r.successes), (8, 6));
        assert_eq!(r.rate, Some(0.75));
        let empty = store.success_rate("HS175D", Interface::Swd, Fixture::None);
        assert_eq!(empty.rate, None);
    }

    #[test]
    fn canonical_conflicts_and_demotion() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = CorpusStore::open(dir.path()).unwrap();
        let d1 = Digest::of(b"dump one");
        store
            .register_dump(dump("HS175D", Fixture::Hook, d1, true))
            .unwrap();
        // duplicate digest, non-canonical: repeated reads are expected
        store
            .register_dump(dump("HS175D", Fixture::Hook, d1, false))
            .unwrap();
        let err = store
            .register_dump(dump("HS175D", Fixture::Alligator, d1, true))
            .unwrap_err();
        assert!(matches!(err, Error::CanonicalConflict { .. }));

        assert!(store.demote_canonical("HS175D").unwrap());
        store
            .register_dump(dump("HS175D", Fixture::Alligator, d1, true))
            .unwrap();
        assert_eq!(
            store.canonical_dump("HS175D").unwrap().fixture,
            Fixture::Alligator
        );
    }

    #[test]
    fn summary_counts_and_hash_flags() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = CorpusStore::open(dir.path()).unwrap();
        let d1 = Digest::of(b"stable");
        let d2 = Digest::of(b"unstable");
        store.register_dump(dump("HS360S", Fixture::Hook, d1, false)).unwrap();
        store.register_dump(dump("HS360S", Fixture::Hook, d2, false)).unwrap();
        store.register_dump(dump("HS720", Fixture::Hook, d1, false)).unwrap();
        let summary = store.summarize();
        let row_360 = summary
            .rows
            .iter()
            .find(|r| r.device_model == "HS360S")
            .unwrap();
        assert_eq!(row_360.hashes_identical, HashesIdentical::No);
        let row_720 = summary
            .rows
            .iter()
            .find(|r| r.device_model == "HS720")
            .unwrap();
        assert_eq!(row_720.hashes_identical, HashesIdentical::NotApplicable);
    }

    #[test]
    fn empty_store_summarizes_to_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::open(dir.path()).unwrap();
        assert!(store.summarize().rows.is_empty());
    }

    #[test]
    fn reopening_reproduces_summaries() {
        let dir = tempfile::tempdir().unwrap();
        let before = {
            let mut store = CorpusStore::open(dir.path()).unwrap();
            store
                .record_attempt(attempt(
                    "HS720",
                    Fixture::Alligator,
                    Outcome::Success,
                    FailureType::None,
                ))
                .unwrap();
            store
                .record_attempt(attempt(
                    "HS720",
                    Fixture::Alligator,
                    Outcome::Failure,
                    FailureType::NoChipDetected,
                ))
                .unwrap();
            store
                .register_dump(dump("HS720", Fixture::Alligator, Digest::of(b"x"), true))
                .unwrap();
            store.summarize()
        };
        let reopened = CorpusStore::open(dir.path()).unwrap();
        assert_eq!(reopened.summarize(), before);
        assert_eq!(reopened.attempts().len(), 2);
        assert_eq!(reopened.dumps().len(), 1);
    }

    #[test]
    fn rate_display_rounds_to_whole_percent() {
        let row = CorpusSummaryRow {
            device_model: "X".into(),
            interface: Interface::Spi,
            fixture: Fixture::Alligator,
            attempts: 8,
            successes: 5,
            rate: Some(0.625),
            hashes_identical: HashesIdentical::Yes,
        };
        assert_eq!(row.rate_display(), "~63%");
        assert_eq!(row.interface_fixture(), "SPI (alligator)");
    }

    #[test]
    fn known_reference_digests_parse() {
        let d = known_canonical_digest("HS175D").unwrap();
        assert_eq!(
            d.to_hex(),
            "4a7f46cc581c45cbc46e28663d910a960f340f822fd3e05c1c5da4bf7fd8a7ff"
        );
        assert!(known_canonical_digest("HS720").is_some());
        assert!(known_canonical_digest("HS360S").is_none());
    }
}
