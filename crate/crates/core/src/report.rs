//! Output files. JSON reports are deterministic: no timings, sorted maps.
//! Timings go to a separate sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::checker::CheckResult;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// File stem for a property id.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// One `.json` and one `.txt` per violated result under `dir/traces`.
pub fn write_traces(dir: &Path, results: &[CheckResult]) -> io::Result<Vec<String>> {
    let mut written = Vec::new();
    let tdir = dir.join("traces");
    for r in results {
        let Some(t) = r.verdict.trace() else { continue };
        fs::create_dir_all(&tdir)?;
        let stem = file_stem(&r.property);
        write_json(&tdir.join(format!("{stem}.json")), t)?;
        if let Some(table) = &r.table {
            fs::write(tdir.join(format!("{stem}.txt")), table)?;
        }
        written.push(stem);
    }
    Ok(written)
}

#[derive(Serialize)]
struct Timing {
    slicer: String,
    explored: usize,
    millis: f64,
}

pub fn write_timings(path: &Path, results: &[CheckResult]) -> io::Result<()> {
    let m: BTreeMap<&str, Timing> = results
        .iter()
        .map(|r| {
            (
                r.property.as_str(),
                Timing {
                    slicer: r.slicer.clone(),
                    explored: r.explored,
                    millis: r.elapsed.as_secs_f64() * 1e3,
                },
            )
        })
        .collect();
    write_json(path, &m)
}

/// One line per result for the terminal.
pub fn summary_line(r: &CheckResult) -> String {
    let detail = match &r.verdict {
        crate::checker::Verdict::Rejected(why) => format!(" ({why})"),
        crate::checker::Verdict::Violated(t) => format!(" ({} steps)", t.steps.len()),
        crate::checker::Verdict::Holds => String::new(),
    };
    format!(
        "{:<9} {} [{}, {} states]{detail}",
        r.verdict.word(),
        r.property,
        r.slicer,
        r.explored
    )
}

#[cfg(test)]
mod tests {
    #[test]
    fn stems_are_path_safe() {
        assert_eq!(super::file_stem("T4:a:b/reach"), "T4_a_b_reach");
    }
}
