use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Version written into every output; readers accept any `1.x`.
pub const SCHEMA_VERSION: &str = "1.0";

pub fn check_schema(version: &str) -> Result<()> {
    let major = version.split('.').next().unwrap_or_default();
    if major == "1" {
        Ok(())
    } else {
        Err(Error::Schema(format!("unsupported schema version {version:?}")))
    }
}

/// Writes `value` (which must serialize to a JSON object) with a
/// `schema_version` field.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::Schema("reports must be JSON objects".into()))?;
    obj.insert("schema_version".into(), Value::String(SCHEMA_VERSION.into()));
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &v)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let mut v: Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let version = v
        .get("schema_version")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Schema(format!("{} has no schema_version", path.display())))?;
    check_schema(version)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("schema_version");
    }
    Ok(serde_json::from_value(v)?)
}

/// CSV writer whose first line is a `# schema_version: ..` comment.
pub fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# schema_version: {SCHEMA_VERSION}")?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(f))
}

/// Reader for files produced by [`csv_writer`]; checks the version line.
pub fn csv_reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    use std::io::BufRead;
    let mut f = BufReader::new(File::open(path)?);
    let mut first = String::new();
    f.read_line(&mut first)?;
    let version = first
        .trim_end()
        .strip_prefix("# schema_version: ")
        .ok_or_else(|| Error::Schema(format!("{} has no schema_version line", path.display())))?;
    check_schema(version)?;
    Ok(csv::ReaderBuilder::new().from_reader(f))
}
