//! Event file v1: UTF-8 text with `# key=value` metadata, one `q,p` pair per
//! line at 17 significant digits, and a trailing CRC-32 of every byte before
//! the checksum line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::simulator::EventBatch;
use crate::state::StateSpec;

pub const FILE_VERSION: &str = "v1";
const MAGIC: &str = "# phasekit-events ";
const CRC_PREFIX: &str = "# crc32=";

/// The file contents for `batch`. `producer`, if given, is stored as a
/// `# producer=` line that loading skips; line breaks in it become spaces.
pub fn render_events(batch: &EventBatch, producer: Option<&str>) -> String {
    let mut out = String::with_capacity(48 * batch.n() + 256);
    out.push_str(MAGIC);
    out.push_str(FILE_VERSION);
    out.push('\n');
    if let Some(p) = producer {
        let _ = writeln!(out, "# producer={}", p.replace(['\n', '\r'], " "));
    }
    let _ = writeln!(out, "# state={}", batch.state_spec);
    let _ = writeln!(out, "# eta={}", batch.eta);
    let _ = writeln!(out, "# seed={}", batch.seed);
    let _ = writeln!(out, "# n={}", batch.n());
    let _ = writeln!(out, "# generator={}", batch.generator);
    for (q, p) in &batch.events {
        let _ = writeln!(out, "{q:.16e},{p:.16e}");
    }
    let crc = crc32fast::hash(out.as_bytes());
    let _ = writeln!(out, "{CRC_PREFIX}{crc:08x}");
    out
}

pub fn save_events(batch: &EventBatch, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_events(batch, None))?;
    Ok(())
}

pub fn load_events(path: impl AsRef<Path>) -> Result<EventBatch> {
    let bytes = fs::read(path)?;
    parse(&bytes)
}

fn format_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        offset,
        reason: reason.into(),
    }
}

fn parse(bytes: &[u8]) -> Result<EventBatch> {
    let text = std::str::from_utf8(bytes).map_err(|e| format_err(e.valid_up_to(), "invalid UTF-8"))?;
    let first = text.lines().next().unwrap_or("");
    match first.strip_prefix(MAGIC) {
        Some(FILE_VERSION) => {}
        Some(other) => return Err(Error::Version(other.to_string())),
        None => return Err(format_err(0, "missing `# phasekit-events` header")),
    }

    // the checksum line must be the last line
    let body_end = text.strip_suffix('\n').unwrap_or(text);
    let crc_start = body_end.rfind('\n').map_or(0, |i| i + 1);
    let crc_line = &body_end[crc_start..];
    let Some(hex) = crc_line.strip_prefix(CRC_PREFIX) else {
        return Err(format_err(bytes.len(), "file ends without a `# crc32=` line (truncated?)"));
    };
    let expected = u32::from_str_radix(hex, 16)
        .ok()
        .filter(|_| hex.len() == 8)
        .ok_or_else(|| format_err(crc_start, format!("bad checksum `{hex}`")))?;
    let actual = crc32fast::hash(&bytes[..crc_start]);
    if actual != expected {
        return Err(Error::Checksum { expected, actual });
    }

    let mut state = None;
    let mut eta = None;
    let mut seed = None;
    let mut n = None;
    let mut generator = None;
    let mut events = Vec::new();
    let mut offset = first.len() + 1;
    for line in text[offset..crc_start].split_inclusive('\n') {
        let at = offset;
        offset += line.len();
        let line = line.trim_end_matches('\n');
        if let Some(meta) = line.strip_prefix("# ") {
            let (key, value) = meta
                .split_once('=')
                .ok_or_else(|| format_err(at, format!("metadata line without `=`: `{line}`")))?;
            let bad = |what: &str| format_err(at, format!("invalid {what} `{value}`"));
            match key {
                "state" => state = Some(value.parse::<StateSpec>().map_err(|_| bad("state"))?),
                "eta" => eta = Some(value.parse::<f64>().map_err(|_| bad("eta"))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
                "n" => n = Some(value.parse::<usize>().map_err(|_| bad("count"))?),
                "generator" => generator = Some(value.to_string()),
                "producer" => {}
                _ => return Err(format_err(at, format!("unknown metadata key `{key}`"))),
            }
            continue;
        }
        let (q, p) = line
            .split_once(',')
            .and_then(|(q, p)| Some((q.parse::<f64>().ok()?, p.parse::<f64>().ok()?)))
            .ok_or_else(|| format_err(at, format!("malformed event `{line}`")))?;
        events.push((q, p));
    }

    let missing = |key: &str| format_err(crc_start, format!("missing `{key}` metadata"));
    let n = n.ok_or_else(|| missing("n"))?;
    if n != events.len() {
        return Err(format_err(crc_start, format!("header declares {n} events, found {}", events.len())));
    }
    Ok(EventBatch {
        events,
        state_spec: state.ok_or_else(|| missing("state"))?,
        eta: eta.ok_or_else(|| missing("eta"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        generator: generator.ok_or_else(|| missing("generator"))?,
    })
}
