use std::io::Write;
use std::path::{Path, PathBuf};

use super::FinalIntentReport;
use crate::transcript::Transcript;

pub const REPORT_FILE: &str = "report.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistedPaths {
    pub report: PathBuf,
    pub transcript: PathBuf,
}

/// Writes to a sibling temporary file and renames it over the target, so a
/// reader never sees a half-written file.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// report.json and transcript.jsonl in `out_dir`, created if missing.
pub fn persist_report(
    report: &FinalIntentReport,
    transcript: &Transcript,
    out_dir: &Path,
) -> std::io::Result<PersistedPaths> {
    std::fs::create_dir_all(out_dir)?;
    let paths = PersistedPaths {
        report: out_dir.join(REPORT_FILE),
        transcript: out_dir.join(TRANSCRIPT_FILE),
    };
    write_atomic(&paths.transcript, &transcript.to_jsonl())?;
    write_atomic(&paths.report, &report.to_json())?;
    Ok(paths)
}

/// The transcript alone, for runs that failed before producing a report.
pub fn persist_transcript(transcript: &Transcript, out_dir: &Path) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(TRANSCRIPT_FILE);
    write_atomic(&path, &transcript.to_jsonl())?;
    Ok(path)
}
