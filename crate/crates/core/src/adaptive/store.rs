//! Append-only store of force/torque observations, indexed by device.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CSV_HEADER: [&str; 6] = ["device_id", "trial", "attempt", "sim_time", "torque", "force"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FTRecord {
    pub device_id: String,
    pub trial: u32,
    pub attempt: u32,
    /// s
    pub sim_time: f64,
    /// Magnitude of the reactive torque about the device axis, N·m.
    pub torque: f64,
    /// N; not produced by the simulator.
    pub force: f64,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("torque must be a finite value ≥ 0, got {0}")]
    NegativeTorque(f64),
    #[error("duplicate record for device `{device_id}` trial {trial} attempt {attempt} at t={sim_time}")]
    Duplicate {
        device_id: String,
        trial: u32,
        attempt: u32,
        sim_time: f64,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

type RecordKey = (String, u32, u32, u64);

#[derive(Debug, Clone, Default)]
pub struct DataStore {
    records: Vec<FTRecord>,
    max_torque: BTreeMap<String, f64>,
    keys: HashSet<RecordKey>,
}

impl PartialEq for DataStore {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records && self.max_torque == other.max_torque
    }
}

impl DataStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: impl IntoIterator<Item = FTRecord>) -> Result<Self, StoreError> {
        let mut store = Self::new();
        for r in records {
            store.append(r)?;
        }
        Ok(store)
    }

    pub fn records(&self) -> &[FTRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record_ft(
        &mut self,
        device_id: &str,
        trial: u32,
        attempt: u32,
        sim_time: f64,
        torque: f64,
    ) -> Result<(), StoreError> {
        self.append(FTRecord {
            device_id: device_id.to_string(),
            trial,
            attempt,
            sim_time,
            torque,
            force: 0.0,
        })
    }

    pub fn append(&mut self, record: FTRecord) -> Result<(), StoreError> {
        if !(record.torque >= 0.0) || !record.torque.is_finite() {
            return Err(StoreError::NegativeTorque(record.torque));
        }
        let key = (
            record.device_id.clone(),
            record.trial,
            record.attempt,
            record.sim_time.to_bits(),
        );
        if !self.keys.insert(key) {
            return Err(StoreError::Duplicate {
                device_id: record.device_id,
                trial: record.trial,
                attempt: record.attempt,
                sim_time: record.sim_time,
            });
        }
        let max = self.max_torque.entry(record.device_id.clone()).or_insert(0.0);
        *max = max.max(record.torque);
        self.records.push(record);
        Ok(())
    }

    /// Largest torque recorded for `device_id`, 0 if it has no records.
    pub fn max_recorded_torque(&self, device_id: &str) -> f64 {
        self.max_torque.get(device_id).copied().unwrap_or(0.0)
    }

    pub fn devices(&self) -> impl Iterator<Item = &str> {
        self.max_torque.keys().map(String::as_str)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), StoreError> {
        let mut w = csv::Writer::from_writer(out);
        let to_io = |e: csv::Error| StoreError::Io(io::Error::other(e));
        w.write_record(CSV_HEADER).map_err(to_io)?;
        for r in &self.records {
            // `{}` on f64 is the shortest representation that round-trips
            w.write_record([
                r.device_id.clone(),
                r.trial.to_string(),
                r.attempt.to_string(),
                r.sim_time.to_string(),
                r.torque.to_string(),
                r.force.to_string(),
            ])
            .map_err(to_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Self, StoreError> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
        let header = reader.headers().map_err(|e| malformed(1, e))?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(StoreError::Malformed {
                line: 1,
                message: format!("expected header `{}`", CSV_HEADER.join(",")),
            });
        }
        let mut store = DataStore::new();
        for row in reader.records() {
            let row = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                malformed(line, e)
            })?;
            let line = row.position().map_or(0, |p| p.line());
            if row.len() != CSV_HEADER.len() {
                return Err(StoreError::Malformed {
                    line,
                    message: format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
                });
            }
            let record: FTRecord = row
                .deserialize(Some(&header))
                .map_err(|e| malformed(line, e))?;
            store.append(record).map_err(|e| match e {
                StoreError::Io(_) | StoreError::Malformed { .. } => e,
                other => malformed(line, other),
            })?;
        }
        Ok(store)
    }

    pub fn persist(&self, path: &Path) -> Result<(), StoreError> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        Self::read_csv(io::BufReader::new(File::open(path)?))
    }
}

fn malformed(line: u64, e: impl std::fmt::Display) -> StoreError {
    StoreError::Malformed {
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_tracks_running_max() {
        let mut s = DataStore::new();
        s.record_ft("A", 1, 1, 0.1, 0.3).unwrap();
        s.record_ft("A", 1, 1, 0.2, 0.2).unwrap();
        assert_eq!(s.max_recorded_torque("A"), 0.3);
    }

    #[test]
    fn devices_are_isolated() {
        let mut s = DataStore::new();
        s.record_ft("A", 1, 1, 0.1, 0.3).unwrap();
        s.record_ft("B", 1, 1, 0.1, 4.0).unwrap();
        assert_eq!(s.max_recorded_torque("A"), 0.3);
        assert_eq!(s.max_recorded_torque("B"), 4.0);
    }

    #[test]
    fn unknown_device_reads_zero() {
        let s = DataStore::new();
        assert_eq!(s.max_recorded_torque("nope"), 0.0);
        let mut s = DataStore::new();
        for (t, tq) in [0.1, 0.45, 0.3].into_iter().enumerate() {
            s.record_ft("A", 1, 1, t as f64, tq).unwrap();
        }
        assert_eq!(s.max_recorded_torque("A"), 0.45);
        assert_eq!(s.max_recorded_torque("B"), 0.0);
    }

    #[test]
    fn rejects_duplicates_and_negative_torque() {
        let mut s = DataStore::new();
        s.record_ft("A", 1, 1, 0.1, 0.3).unwrap();
        assert!(matches!(s.record_ft("A", 1, 1, 0.1, 0.5), Err(StoreError::Duplicate { .. })));
        assert!(matches!(s.record_ft("A", 1, 1, 0.2, -0.1), Err(StoreError::NegativeTorque(_))));
        assert_eq!(s.len(), 1);
        assert_eq!(s.max_recorded_torque("A"), 0.3);
    }

    #[test]
    fn empty_store_writes_header_only() {
        let mut buf = Vec::new();
        DataStore::new().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "device_id,trial,attempt,sim_time,torque,force\n");
    }

    #[test]
    fn truncated_row_reports_its_line() {
        let text = "device_id,trial,attempt,sim_time,torque,force\nA,1,1,0.1,0.3,0\nA,1,1,0.2\n";
        match DataStore::read_csv(text.as_bytes()) {
            Err(StoreError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_its_line() {
        let text = "device_id,trial,attempt,sim_time,torque,force\nA,1,1,0.1,abc,0\n";
        match DataStore::read_csv(text.as_bytes()) {
            Err(StoreError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(matches!(
            DataStore::read_csv("a,b\n".as_bytes()),
            Err(StoreError::Malformed { line: 1, .. })
        ));
    }
}
