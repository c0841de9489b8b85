//! File helpers shared by the writers.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use tempfile::NamedTempFile;

/// Writes `path` through a temporary sibling file that is renamed into
/// place only after `fill` succeeds, so failed runs leave no partial output.
pub fn write_atomic<Fill>(path: &Path, fill: Fill) -> io::Result<()>
where
    Fill: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_string_atomic(path: &Path, contents: &str) -> io::Result<()> {
    write_atomic(path, |w| w.write_all(contents.as_bytes()))
}
