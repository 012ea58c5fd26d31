//! Binary field files, trajectory tables, and output manifests.
//!
//! Field files are plain binary: a fixed header (magic, format version,
//! node count, box ends), the interleaved complex samples as little-endian
//! 64-bit floats, and a SHA-256 checksum of everything before it. The
//! format carries the full spatial grid, so a reader needs no side
//! channel. Trajectory tables are CSV with one row per sample time.
//! Manifests list every artifact of a run with its size and checksum; all
//! writers here are deterministic, so identical inputs produce
//! byte-identical files.

use crate::error::{Error, Result};
use crate::field::{FrequencyPair, SpinorField};
use crate::grid::{Grid1D, KGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Leading magic bytes of a field file.
pub const FIELD_MAGIC: [u8; 4] = *b"CTMF";

/// Current field-file format version.
pub const FIELD_VERSION: u32 = 1;

/// Bytes of the fixed field-file header: magic, version, n_x, x_min, x_max.
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8;

/// Bytes of the trailing SHA-256 checksum.
const CHECKSUM_LEN: usize = 32;

// serializes header and samples; the checksum is appended by the caller
fn field_body(field: &SpinorField) -> Vec<u8> {
    let grid = field.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + 32 * grid.n_x + CHECKSUM_LEN);
    out.extend_from_slice(&FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.n_x as u64).to_le_bytes());
    out.extend_from_slice(&grid.x_min.to_le_bytes());
    out.extend_from_slice(&grid.x_max.to_le_bytes());
    for v in &field.values {
        for c in 0..2 {
            out.extend_from_slice(&v[c].re.to_le_bytes());
            out.extend_from_slice(&v[c].im.to_le_bytes());
        }
    }
    out
}

/// Serializes a field to the binary format, checksum included.
pub fn field_to_bytes(field: &SpinorField) -> Vec<u8> {
    let mut out = field_body(field);
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

/// Parses a field from the binary format, validating magic, version,
/// length, and checksum.
pub fn field_from_bytes(bytes: &[u8]) -> Result<SpinorField> {
    if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(Error::CorruptFile("field file shorter than its header".into()));
    }
    if bytes[..4] != FIELD_MAGIC {
        return Err(Error::CorruptFile("bad magic, not a field file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FIELD_VERSION {
        return Err(Error::CorruptFile(format!(
            "unsupported field format version {version}, expected {FIELD_VERSION}"
        )));
    }
    let n_x = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let x_min = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let x_max = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let expect = HEADER_LEN + 32 * n_x + CHECKSUM_LEN;
    if bytes.len() != expect {
        return Err(Error::CorruptFile(format!(
            "field file length {} does not match its header ({expect} expected)",
            bytes.len()
        )));
    }
    let (body, stored) = bytes.split_at(expect - CHECKSUM_LEN);
    let digest = Sha256::digest(body);
    if digest[..] != stored[..] {
        return Err(Error::CorruptFile("field file checksum mismatch".into()));
    }
    let grid = Grid1D::new(x_min, x_max, n_x)?;
    let mut field = SpinorField::zeros(grid);
    let mut off = HEADER_LEN;
    for v in field.values.iter_mut() {
        for c in 0..2 {
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
            v[c] = Complex64::new(re, im);
            off += 16;
        }
    }
    Ok(field)
}

/// Writes a field file at `path`.
pub fn write_field(path: &Path, field: &SpinorField) -> Result<()> {
    std::fs::write(path, field_to_bytes(field))?;
    Ok(())
}

/// Reads and validates a field file.
pub fn read_field(path: &Path) -> Result<SpinorField> {
    field_from_bytes(&std::fs::read(path)?)
}

/// Leading magic bytes of a frequency-pair file.
pub const PAIR_MAGIC: [u8; 4] = *b"CTMP";

/// Bytes of the fixed pair-file header: magic, version, n_k, k_max.
const PAIR_HEADER_LEN: usize = 4 + 4 + 8 + 8;

/// Serializes a frequency pair to the binary format, checksum included.
/// Same layout as a field file with the frequency grid in the header.
pub fn pair_to_bytes(pair: &FrequencyPair) -> Vec<u8> {
    let kg = pair.kgrid;
    let mut out = Vec::with_capacity(PAIR_HEADER_LEN + 32 * kg.n_nodes() + CHECKSUM_LEN);
    out.extend_from_slice(&PAIR_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.extend_from_slice(&(kg.n_k as u64).to_le_bytes());
    out.extend_from_slice(&kg.k_max.to_le_bytes());
    for v in &pair.values {
        for c in 0..2 {
            out.extend_from_slice(&v[c].re.to_le_bytes());
            out.extend_from_slice(&v[c].im.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

/// Parses a frequency pair from the binary format, validating magic,
/// version, length, and checksum.
pub fn pair_from_bytes(bytes: &[u8]) -> Result<FrequencyPair> {
    if bytes.len() < PAIR_HEADER_LEN + CHECKSUM_LEN {
        return Err(Error::CorruptFile("pair file shorter than its header".into()));
    }
    if bytes[..4] != PAIR_MAGIC {
        return Err(Error::CorruptFile("bad magic, not a frequency-pair file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FIELD_VERSION {
        return Err(Error::CorruptFile(format!(
            "unsupported pair format version {version}, expected {FIELD_VERSION}"
        )));
    }
    let n_k = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let k_max = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expect = PAIR_HEADER_LEN + 32 * (n_k + 1) + CHECKSUM_LEN;
    if bytes.len() != expect {
        return Err(Error::CorruptFile(format!(
            "pair file length {} does not match its header ({expect} expected)",
            bytes.len()
        )));
    }
    let (body, stored) = bytes.split_at(expect - CHECKSUM_LEN);
    let digest = Sha256::digest(body);
    if digest[..] != stored[..] {
        return Err(Error::CorruptFile("pair file checksum mismatch".into()));
    }
    let kgrid = KGrid::new(k_max, n_k)?;
    let mut pair = FrequencyPair::zeros(kgrid);
    let mut off = PAIR_HEADER_LEN;
    for v in pair.values.iter_mut() {
        for c in 0..2 {
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
            v[c] = Complex64::new(re, im);
            off += 16;
        }
    }
    Ok(pair)
}

/// Writes a frequency-pair file at `path`.
pub fn write_pair(path: &Path, pair: &FrequencyPair) -> Result<()> {
    std::fs::write(path, pair_to_bytes(pair))?;
    Ok(())
}

/// Reads and validates a frequency-pair file.
pub fn read_pair(path: &Path) -> Result<FrequencyPair> {
    pair_from_bytes(&std::fs::read(path)?)
}

/// One sampled row of an evolution trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRow {
    /// Sample time.
    pub t: f64,
    /// L² norm of the field.
    pub l2: f64,
    /// Pointwise sup norm.
    pub linf: f64,
    /// H¹ norm.
    pub h1: f64,
    /// Windowed norms around each track, first three cells.
    pub weighted: [f64; 3],
    /// σ₃ pairings against the tracked discrete modes, by magnitude.
    pub pairings: Vec<f64>,
}

/// Writes a trajectory table as CSV with columns t, L2, Linf, H1,
/// weighted_j0..j2, and one pairing column per tracked mode.
///
/// Every row must carry the same number of pairings.
pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    let n_modes = rows.first().map_or(0, |r| r.pairings.len());
    if rows.iter().any(|r| r.pairings.len() != n_modes) {
        return Err(Error::ConfigError(
            "trajectory rows disagree on the number of tracked modes".into(),
        ));
    }
    let mut out = String::from("t,L2,Linf,H1,weighted_j0,weighted_j1,weighted_j2");
    for i in 0..n_modes {
        out.push_str(&format!(",pairing_mode_{i}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.l2, r.linf, r.h1, r.weighted[0], r.weighted[1], r.weighted[2]
        ));
        for p in &r.pairings {
            out.push_str(&format!(",{p:e}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One artifact recorded in a run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// File name relative to the output directory.
    pub name: String,
    /// Size in bytes.
    pub bytes: u64,
    /// Hex SHA-256 of the contents.
    pub sha256: String,
}

/// Deterministic index of every artifact a run produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    /// Name of the producing tool.
    pub tool: String,
    /// Version of the producing tool.
    pub version: String,
    /// Recorded artifacts, in the order they were added.
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Starts an empty manifest for the named tool version.
    pub fn new(tool: &str, version: &str) -> Self {
        Self { tool: tool.into(), version: version.into(), entries: Vec::new() }
    }

    /// Records a file already written under `dir`.
    pub fn record(&mut self, dir: &Path, name: &str) -> Result<()> {
        let bytes = std::fs::read(dir.join(name))?;
        let digest = Sha256::digest(&bytes);
        self.entries.push(ManifestEntry {
            name: name.into(),
            bytes: bytes.len() as u64,
            sha256: hex_string(&digest),
        });
        Ok(())
    }

    /// Writes the manifest as pretty JSON under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::ConfigError(format!("manifest serialization failed: {e}")))?;
        std::fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

// lowercase hex of a digest
fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(2 * bytes.len());
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> SpinorField {
        let grid = Grid1D::new(-8.0, 8.0, 64).unwrap();
        SpinorField::from_fn(grid, |x| {
            [Complex64::new((-x * x).exp(), 0.25 * x), Complex64::new(x.sin(), -0.5)]
        })
    }

    /// A field survives the byte round trip exactly.
    #[test]
    fn field_round_trip_is_exact() {
        let field = sample_field();
        let back = field_from_bytes(&field_to_bytes(&field)).unwrap();
        assert_eq!(back.grid, field.grid);
        assert_eq!(back.values, field.values);
    }

    /// Flipping one payload byte is caught by the checksum.
    #[test]
    fn corrupted_payload_is_rejected() {
        let mut bytes = field_to_bytes(&sample_field());
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x01;
        match field_from_bytes(&bytes) {
            Err(Error::CorruptFile(msg)) => assert!(msg.contains("checksum")),
            other => panic!("expected checksum rejection, got {other:?}"),
        }
    }

    /// Wrong magic and truncation are rejected before any parse.
    #[test]
    fn bad_magic_and_truncation_are_rejected() {
        let bytes = field_to_bytes(&sample_field());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(field_from_bytes(&wrong), Err(Error::CorruptFile(_))));
        assert!(matches!(
            field_from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::CorruptFile(_))
        ));
    }

    /// Field files written twice are byte-identical.
    #[test]
    fn field_serialization_is_deterministic() {
        let field = sample_field();
        assert_eq!(field_to_bytes(&field), field_to_bytes(&field));
    }

    /// A frequency pair survives the byte round trip exactly and its
    /// files reject corruption like field files do.
    #[test]
    fn pair_round_trip_and_validation() {
        let kg = KGrid::new(4.0, 16).unwrap();
        let pair = FrequencyPair::from_fn(kg, |k| {
            [Complex64::new((-k * k).exp(), k), Complex64::new(k.cos(), 0.5)]
        });
        let bytes = pair_to_bytes(&pair);
        let back = pair_from_bytes(&bytes).unwrap();
        assert_eq!(back.kgrid, pair.kgrid);
        assert_eq!(back.values, pair.values);
        let mut wrong = bytes.clone();
        wrong[bytes.len() / 2] ^= 0x01;
        assert!(matches!(pair_from_bytes(&wrong), Err(Error::CorruptFile(_))));
        assert!(matches!(
            pair_from_bytes(&field_to_bytes(&sample_field())),
            Err(Error::CorruptFile(_))
        ));
    }

    /// The CSV writer emits the documented columns and one line per row.
    #[test]
    fn trajectory_csv_has_documented_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let rows = vec![
            TrajectoryRow {
                t: 0.0,
                l2: 1.0,
                linf: 0.5,
                h1: 2.0,
                weighted: [0.1, 0.2, 0.0],
                pairings: vec![0.3, 0.4],
            },
            TrajectoryRow {
                t: 0.5,
                l2: 1.0,
                linf: 0.4,
                h1: 1.9,
                weighted: [0.1, 0.2, 0.0],
                pairings: vec![0.2, 0.1],
            },
        ];
        write_trajectory_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[0],
            "t,L2,Linf,H1,weighted_j0,weighted_j1,weighted_j2,pairing_mode_0,pairing_mode_1"
        );
        assert_eq!(lines[1].split(',').count(), 9);
    }

    /// Rows with inconsistent mode counts are refused.
    #[test]
    fn trajectory_csv_checks_mode_counts() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            TrajectoryRow {
                t: 0.0,
                l2: 1.0,
                linf: 0.5,
                h1: 2.0,
                weighted: [0.0; 3],
                pairings: vec![0.3],
            },
            TrajectoryRow {
                t: 0.5,
                l2: 1.0,
                linf: 0.4,
                h1: 1.9,
                weighted: [0.0; 3],
                pairings: vec![],
            },
        ];
        let err = write_trajectory_csv(&dir.path().join("t.csv"), &rows);
        assert!(matches!(err, Err(Error::ConfigError(_))));
    }

    /// Manifests record size and checksum and serialize deterministically.
    #[test]
    fn manifest_records_artifacts_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        write_field(&dir.path().join("f.ctmf"), &sample_field()).unwrap();
        let mut m1 = Manifest::new("ctm", "0.1.0");
        m1.record(dir.path(), "f.ctmf").unwrap();
        m1.write(dir.path()).unwrap();
        let first = std::fs::read(dir.path().join("manifest.json")).unwrap();
        let mut m2 = Manifest::new("ctm", "0.1.0");
        m2.record(dir.path(), "f.ctmf").unwrap();
        m2.write(dir.path()).unwrap();
        let second = std::fs::read(dir.path().join("manifest.json")).unwrap();
        assert_eq!(first, second);
        let parsed: Manifest = serde_json::from_slice(&first).unwrap();
        assert_eq!(parsed.entries.len(), 1);
        assert_eq!(parsed.entries[0].sha256.len(), 64);
    }
}
