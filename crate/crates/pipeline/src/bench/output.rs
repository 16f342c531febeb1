//! Atomic writers: every file is written to a temporary sibling and renamed.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::BenchError;

fn atomic(
    path: &Path,
    fill: impl FnOnce(&mut dyn Write) -> Result<(), BenchError>,
) -> Result<(), BenchError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path)
        .map_err(|e| BenchError::Io(e.to_string()))?;
    Ok(())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    atomic(path, |w| Ok(w.write_all(bytes)?))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), BenchError> {
    atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

/// One JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), BenchError> {
    atomic(path, |w| {
        for it in items {
            serde_json::to_writer(&mut *w, it).map_err(|e| BenchError::Io(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), BenchError> {
    atomic(path, |w| {
        let mut c = csv::Writer::from_writer(w);
        let io = |e: csv::Error| BenchError::Io(e.to_string());
        c.write_record(header).map_err(io)?;
        for r in rows {
            c.write_record(r).map_err(io)?;
        }
        c.flush()?;
        Ok(())
    })
}
