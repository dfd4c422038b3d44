//! Line-oriented checkpoint file with per-record digests.
//!
//! Layout: a header line `# bescan v1 <spec-digest>`, then one record per
//! completed `n`:
//!
//! ```text
//! R <n> <p_argmax> <t_max> <digest16>
//! ```
//!
//! Floats are written as shortest round-trip decimals, so parsing restores
//! the exact bits. The digest is the first 16 hex chars of
//! `sha256(spec_digest || payload)`; any complete line that fails it makes
//! the whole file unusable (a torn final line without a newline is treated
//! as an interrupted write and ignored).

use super::ScanSpec;
use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub(crate) fn spec_digest(spec: &ScanSpec) -> String {
    let mut h = Sha256::new();
    h.update(b"bescan-spec-v1");
    h.update(spec.n_lo.to_le_bytes());
    h.update(spec.n_hi.to_le_bytes());
    h.update(spec.p_lo.to_bits().to_le_bytes());
    h.update(spec.p_hi.to_bits().to_le_bytes());
    h.update(spec.step.to_bits().to_le_bytes());
    hex16(&h.finalize())
}

fn hex16(bytes: &[u8]) -> String {
    bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn record_digest(spec_digest: &str, payload: &str) -> String {
    let mut h = Sha256::new();
    h.update(spec_digest.as_bytes());
    h.update(payload.as_bytes());
    hex16(&h.finalize())
}

/// One completed `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointRecord {
    pub n: u64,
    pub p_argmax: f64,
    pub t_max: f64,
}

/// Append-side handle.
pub struct Checkpoint {
    writer: BufWriter<File>,
    spec_digest: String,
}

impl Checkpoint {
    /// Open for appending; writes the header if the file is new. When
    /// `append` is false an existing file is truncated.
    pub fn open(path: &Path, spec_digest: &str, append: bool) -> Result<Self> {
        let existed = append && path.exists() && path.metadata()?.len() > 0;
        let file = OpenOptions::new()
            .create(true)
            .append(append)
            .write(true)
            .truncate(!append)
            .open(path)?;
        let mut writer = BufWriter::new(file);
        if !existed {
            writeln!(writer, "# bescan v1 {spec_digest}")?;
        }
        Ok(Checkpoint { writer, spec_digest: spec_digest.to_string() })
    }

    /// Queue one record; call [`flush`](Self::flush) to make it durable.
    pub fn stage(&mut self, rec: CheckpointRecord) {
        let payload = format!("{} {} {}", rec.n, rec.p_argmax, rec.t_max);
        let digest = record_digest(&self.spec_digest, &payload);
        // buffered; errors surface on flush
        let _ = writeln!(self.writer, "R {payload} {digest}");
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        self.writer.get_ref().sync_data()?;
        Ok(())
    }
}

/// Load all records of a checkpoint written for `spec_digest`.
pub fn load(path: &Path, spec_digest: &str) -> Result<Vec<CheckpointRecord>> {
    let mut raw = Vec::new();
    File::open(path)?.read_to_end(&mut raw)?;
    // a final line without '\n' is a torn write from a kill: ignore it
    let complete = match raw.iter().rposition(|&b| b == b'\n') {
        Some(i) => &raw[..=i],
        None => &raw[..0],
    };
    let mut lines = BufReader::new(complete).lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::CheckpointCorrupt("empty checkpoint".into()))?;
    let expect = format!("# bescan v1 {spec_digest}");
    if header != expect {
        return Err(Error::CheckpointCorrupt(format!(
            "header mismatch: found {header:?}, this spec needs {expect:?}"
        )));
    }
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(' ').collect();
        if parts.len() != 5 || parts[0] != "R" {
            return Err(Error::CheckpointCorrupt(format!(
                "malformed record at line {}",
                idx + 2
            )));
        }
        let payload = format!("{} {} {}", parts[1], parts[2], parts[3]);
        if record_digest(spec_digest, &payload) != parts[4] {
            return Err(Error::CheckpointCorrupt(format!(
                "digest mismatch at line {}",
                idx + 2
            )));
        }
        let n = parts[1]
            .parse::<u64>()
            .map_err(|e| Error::CheckpointCorrupt(format!("bad n at line {}: {e}", idx + 2)))?;
        let p_argmax = parts[2]
            .parse::<f64>()
            .map_err(|e| Error::CheckpointCorrupt(format!("bad p at line {}: {e}", idx + 2)))?;
        let t_max = parts[3]
            .parse::<f64>()
            .map_err(|e| Error::CheckpointCorrupt(format!("bad t at line {}: {e}", idx + 2)))?;
        out.push(CheckpointRecord { n, p_argmax, t_max });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_corruption() {
        let dir = std::env::temp_dir().join(format!("bescan-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ck.txt");
        let digest = "0123456789abcdef";
        {
            let mut cp = Checkpoint::open(&path, digest, false).unwrap();
            cp.stage(CheckpointRecord { n: 1, p_argmax: 0.25, t_max: 0.3 });
            cp.stage(CheckpointRecord { n: 2, p_argmax: 0.1689, t_max: 0.30000000000000004 });
            cp.flush().unwrap();
        }
        let recs = load(&path, digest).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].t_max, 0.30000000000000004); // exact round-trip

        // wrong spec digest is rejected
        assert!(matches!(load(&path, "ffffffffffffffff"), Err(Error::CheckpointCorrupt(_))));

        // flip a digit inside a record
        let text = std::fs::read_to_string(&path).unwrap().replace("0.25", "0.26");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load(&path, digest), Err(Error::CheckpointCorrupt(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn torn_final_line_is_ignored() {
        let dir = std::env::temp_dir().join(format!("bescan-torn-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ck.txt");
        let digest = "0123456789abcdef";
        {
            let mut cp = Checkpoint::open(&path, digest, false).unwrap();
            cp.stage(CheckpointRecord { n: 1, p_argmax: 0.25, t_max: 0.3 });
            cp.flush().unwrap();
        }
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("R 2 0.3 0.4"); // no newline, no digest: torn write
        std::fs::write(&path, &text).unwrap();
        let recs = load(&path, digest).unwrap();
        assert_eq!(recs.len(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
