use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Write a CSV with a leading `# config:` stamp. The file appears under its
/// final name only once complete.
pub fn write_csv(dir: &Path, name: &str, stamp: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut body = format!("# config: {stamp}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut body);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.partial"));
    fs::write(&tmp, &body)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

pub fn num(v: f64) -> String {
    format!("{v}")
}
