//! Atomic file emission with the config hash embedded in every output.

use std::io;
use std::path::{Path, PathBuf};

/// Write-temp-rename so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp-{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV with a `# config_sha256=...` comment line on top.
pub fn write_csv(dir: &Path, name: &str, hash: &str, body: &str) -> io::Result<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, &format!("# config_sha256={hash}\n{body}"))?;
    Ok(path)
}

/// JSON with a top-level `config_sha256` field wrapping the payload.
pub fn write_json(dir: &Path, name: &str, hash: &str, payload: serde_json::Value) -> io::Result<PathBuf> {
    let doc = serde_json::json!({ "config_sha256": hash, "data": payload });
    let path = dir.join(name);
    write_atomic(&path, &format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable")))?;
    Ok(path)
}
