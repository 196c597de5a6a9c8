//! On-disk field snapshots and resumable checkpoints.
//!
//! A snapshot is a short self-describing text header followed by raw
//! little-endian f64 samples (interleaved re, im per node), so a field
//! round-trips bit-for-bit. A checkpoint pairs a snapshot with a TOML
//! sidecar carrying the integrator state, which is enough to resume a
//! run and reproduce the original byte stream exactly.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convolution::NonlinearMode;
use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;

pub fn write_snapshot(path: &Path, u: &RadialField, time: f64) -> Result<()> {
    let grid = u.grid();
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "n = {}", grid.n())?;
    writeln!(out, "r_max = {}", grid.r_max())?;
    writeln!(out, "time = {}", time)?;
    writeln!(out)?;
    for v in u.values() {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn header_value(line: &str, key: &str) -> Result<f64> {
    let rest = line
        .strip_prefix(key)
        .and_then(|s| s.trim_start().strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("snapshot header: expected `{key} = ...`, got `{line}`")))?;
    rest.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("snapshot header `{line}`: {e}")))
}

pub fn read_snapshot(path: &Path) -> Result<(RadialField, f64)> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    let next = |reader: &mut BufReader<std::fs::File>, line: &mut String| -> Result<String> {
        line.clear();
        reader.read_line(line)?;
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    };
    let n = header_value(&next(&mut reader, &mut line)?, "n")? as usize;
    let r_max = header_value(&next(&mut reader, &mut line)?, "r_max")?;
    let time = header_value(&next(&mut reader, &mut line)?, "time")?;
    let blank = next(&mut reader, &mut line)?;
    if !blank.is_empty() {
        return Err(Error::Parse(format!(
            "snapshot header must end with a blank line, got `{blank}`"
        )));
    }
    let grid = RadialGrid::new(n, r_max)?;
    let mut bytes = vec![0u8; 16 * n];
    reader.read_exact(&mut bytes).map_err(|e| {
        Error::Parse(format!("snapshot payload short of {} samples: {e}", 2 * n))
    })?;
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(Error::Parse("snapshot payload has trailing bytes".into()));
    }
    let values: Vec<Complex64> = bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().expect("8-byte chunk")),
                f64::from_le_bytes(c[8..16].try_into().expect("8-byte chunk")),
            )
        })
        .collect();
    Ok((RadialField::from_values(grid, values)?, time))
}

/// Integrator state stored beside the field data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub t: f64,
    pub dt: f64,
    pub step_count: u64,
    pub mode: NonlinearMode,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub field: RadialField,
    pub meta: CheckpointMeta,
}

fn sidecar_path(snapshot_path: &Path) -> PathBuf {
    let mut p = snapshot_path.as_os_str().to_owned();
    p.push(".toml");
    PathBuf::from(p)
}

pub fn write_checkpoint(path: &Path, field: &RadialField, meta: &CheckpointMeta) -> Result<()> {
    write_snapshot(path, field, meta.t)?;
    let text = toml::to_string_pretty(meta)
        .map_err(|e| Error::Parse(format!("checkpoint metadata: {e}")))?;
    std::fs::write(sidecar_path(path), text)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let (field, time) = read_snapshot(path)?;
    let text = std::fs::read_to_string(sidecar_path(path))?;
    let meta: CheckpointMeta =
        toml::from_str(&text).map_err(|e| Error::Parse(format!("checkpoint metadata: {e}")))?;
    if meta.t.to_bits() != time.to_bits() {
        return Err(Error::Parse(format!(
            "checkpoint time mismatch: snapshot says {time}, sidecar says {}",
            meta.t
        )));
    }
    Ok(Checkpoint { field, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::testkit;
    use proptest::prelude::*;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.snap");
        let grid = RadialGrid::new(128, 7.5).unwrap();
        let u = testkit::random_complex_field(grid, &mut testkit::seeded_rng(11));
        let t = 0.1 + 0.2;
        write_snapshot(&path, &u, t).unwrap();
        let (v, t_back) = read_snapshot(&path).unwrap();
        assert_eq!(t_back.to_bits(), t.to_bits(), "time must survive exactly");
        assert_eq!(v.grid().n(), 128);
        assert_eq!(v.grid().r_max(), 7.5);
        for (a, b) in u.values().iter().zip(v.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn snapshot_header_is_human_readable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.snap");
        let grid = RadialGrid::new(32, 4.0).unwrap();
        let u = RadialField::gaussian(grid, 1.0, 1.0).unwrap();
        write_snapshot(&path, &u, 0.25).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = String::from_utf8_lossy(&bytes[..bytes.len().min(64)]);
        assert!(header.starts_with("n = 32\nr_max = 4\ntime = 0.25\n\n"));
        assert_eq!(bytes.len(), "n = 32\nr_max = 4\ntime = 0.25\n\n".len() + 16 * 32);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.snap");
        let grid = RadialGrid::new(32, 4.0).unwrap();
        let u = RadialField::gaussian(grid, 1.0, 1.0).unwrap();
        write_snapshot(&path, &u, 0.0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_snapshot(&path), Err(Error::Parse(_))));
        std::fs::write(&path, [bytes.as_slice(), &[0u8; 4]].concat()).unwrap();
        assert!(matches!(read_snapshot(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn checkpoint_resumes_with_identical_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ckpt");
        let grid = RadialGrid::new(64, 6.0).unwrap();
        let u = testkit::random_complex_field(grid, &mut testkit::seeded_rng(5));
        let meta = CheckpointMeta {
            t: 0.7000000000000001,
            dt: 1.25e-4,
            step_count: 5600,
            mode: NonlinearMode::Hartree(Potential::log_core(2.0, 0.01).unwrap()),
        };
        write_checkpoint(&path, &u, &meta).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.meta.t.to_bits(), meta.t.to_bits());
        assert_eq!(back.meta.dt.to_bits(), meta.dt.to_bits());
        assert_eq!(back.meta.step_count, 5600);
        assert!(matches!(back.meta.mode, NonlinearMode::Hartree(_)));
        assert_eq!(back.field, u, "field must survive the checkpoint");

        let local = CheckpointMeta {
            t: 0.0,
            dt: 1e-3,
            step_count: 0,
            mode: NonlinearMode::CubicNls,
        };
        write_checkpoint(&path, &u, &local).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert!(matches!(back.meta.mode, NonlinearMode::CubicNls));
    }

    proptest! {
        #[test]
        fn random_fields_round_trip(seed in 0u64..400) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.snap");
            let grid = RadialGrid::new(48, 5.0).unwrap();
            let u = testkit::random_complex_field(grid, &mut testkit::seeded_rng(seed));
            write_snapshot(&path, &u, seed as f64 * 1e-3).unwrap();
            let (v, _) = read_snapshot(&path).unwrap();
            prop_assert_eq!(u, v);
        }
    }
}
