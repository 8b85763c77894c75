//! On-disk formats: weight checkpoints and run-log CSVs.
//!
//! Checkpoint layout: magic `UWGT`, format version (`u32`), parameter count
//! (`u64`), then the raw parameters — all integers and the IEEE-754 reals in
//! little-endian order.
//!
//! Run-log CSV: header `step,loss,accuracy,sigma_top,delta_w_norm`; the
//! `sigma_top` field is empty on steps where σ₁ was not sampled. Decimal
//! separators are always `.`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::unlearn::{RunLog, StepRecord};
use crate::vector::ParamVector;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"UWGT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Writes a parameter vector in the checkpoint format.
pub fn write_checkpoint(path: &Path, params: &ParamVector) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(params.len() as u64).to_le_bytes())?;
    for v in params.iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a checkpoint, validating magic, version, length, and finiteness.
pub fn read_checkpoint(path: &Path) -> Result<ParamVector> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!(
            "bad checkpoint magic {magic:02x?} at byte 0"
        )));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version} at byte 4"
        )));
    }
    let mut long = [0u8; 8];
    input.read_exact(&mut long)?;
    let count = u64::from_le_bytes(long) as usize;
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for i in 0..count {
        input.read_exact(&mut buf).map_err(|e| {
            Error::Format(format!("truncated checkpoint at parameter {i}: {e}"))
        })?;
        values.push(f64::from_le_bytes(buf));
    }
    if input.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint payload".into()));
    }
    ParamVector::new(values).map_err(|_| Error::Format("non-finite checkpoint values".into()))
}

fn record_line(r: &StepRecord) -> String {
    let sigma = match r.sigma_top {
        Some(s) => format!("{s}"),
        None => String::new(),
    };
    format!("{},{},{},{},{}\n", r.step, r.loss, r.accuracy, sigma, r.delta_w_norm)
}

/// Serializes a run log as CSV.
pub fn runlog_to_csv(run: &RunLog) -> String {
    let mut out = String::from("step,loss,accuracy,sigma_top,delta_w_norm\n");
    for r in &run.records {
        out.push_str(&record_line(r));
    }
    out
}

pub fn write_runlog_csv(path: &Path, run: &RunLog) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(runlog_to_csv(run).as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Parses the records back from a run-log CSV.
pub fn read_runlog_csv(path: &Path) -> Result<Vec<StepRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("step,loss,accuracy,sigma_top,delta_w_norm") => {}
        other => {
            return Err(Error::Format(format!("unexpected run-log header: {other:?}")));
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format(format!(
                "run-log line {}: expected 5 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f64 = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("run-log line {}: {e}", lineno + 2)))
        };
        records.push(StepRecord {
            step: fields[0]
                .parse()
                .map_err(|e| Error::Format(format!("run-log line {}: {e}", lineno + 2)))?,
            loss: parse_f64(fields[1])?,
            accuracy: parse_f64(fields[2])?,
            sigma_top: if fields[3].is_empty() { None } else { Some(parse_f64(fields[3])?) },
            delta_w_norm: parse_f64(fields[4])?,
        });
    }
    Ok(records)
}
