//! Text keypoint file format.
//!
//! ```text
//! signpose-keypoints 1
//! layout mediapipe
//! shape 2 67 3            # frames keypoints dims
//! confidence no           # yes | no
//! label 4                 # class id or -
//! gloss HELLO             # optional line
//! signer s01              # optional line
//! frames
//! 0 | <K*D coordinates> | <K presence bits> | <K confidences, if any>
//! 1 | ...
//! end
//! ```
//!
//! Coordinates are written in shortest round-trip form, so a write/read
//! cycle reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::layout::EstimatorFamily;
use crate::sequence::KeypointSequence;

pub const MAGIC: &str = "signpose-keypoints";
pub const VERSION: u32 = 1;

pub fn format_sequence(seq: &KeypointSequence) -> String {
    let (t, k, d) = (seq.frames(), seq.keypoints(), seq.dims());
    let mut out = String::with_capacity(t * k * (d * 8 + 2) + 128);
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "layout {}", seq.layout);
    let _ = writeln!(out, "shape {t} {k} {d}");
    let _ = writeln!(out, "confidence {}", if seq.confidence().is_some() { "yes" } else { "no" });
    match seq.label {
        Some(l) => {
            let _ = writeln!(out, "label {l}");
        }
        None => out.push_str("label -\n"),
    }
    if let Some(g) = &seq.gloss {
        let _ = writeln!(out, "gloss {g}");
    }
    if let Some(s) = &seq.signer_id {
        let _ = writeln!(out, "signer {s}");
    }
    out.push_str("frames\n");
    for f in 0..t {
        let _ = write!(out, "{f} |");
        for v in seq.frame(f) {
            let _ = write!(out, " {v}");
        }
        out.push_str(" | ");
        out.extend(seq.frame_present(f).iter().map(|p| if *p { '1' } else { '0' }));
        if let Some(conf) = seq.confidence() {
            out.push_str(" |");
            for c in &conf[f * k..(f + 1) * k] {
                let _ = write!(out, " {c}");
            }
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_floats(line: usize, field: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let values = field
        .split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|e| parse_err(line, format!("{what} `{s}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected {
        return Err(parse_err(
            line,
            format!("expected {expected} {what} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

pub fn parse_sequence(text: &str) -> Result<KeypointSequence> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| parse_err(0, format!("unexpected end of file, expected {what}")))
    };

    let (n, header) = next("header")?;
    let mut it = header.split_whitespace();
    if it.next() != Some(MAGIC) {
        return Err(parse_err(n, "missing signpose-keypoints header"));
    }
    match it.next().map(str::parse::<u32>) {
        Some(Ok(VERSION)) => {}
        _ => return Err(parse_err(n, "unsupported format version")),
    }

    let (n, line) = next("layout")?;
    let layout: EstimatorFamily = line
        .strip_prefix("layout ")
        .ok_or_else(|| parse_err(n, "expected `layout <id>`"))?
        .trim()
        .parse()?;

    let (n, line) = next("shape")?;
    let dims: Vec<usize> = line
        .strip_prefix("shape ")
        .ok_or_else(|| parse_err(n, "expected `shape T K D`"))?
        .split_whitespace()
        .map(|s| s.parse::<usize>().map_err(|e| parse_err(n, format!("shape: {e}"))))
        .collect::<Result<_>>()?;
    let [t, k, d] = dims[..] else {
        return Err(parse_err(n, "shape needs exactly three extents"));
    };

    let (n, line) = next("confidence flag")?;
    let has_conf = match line {
        "confidence yes" => true,
        "confidence no" => false,
        _ => return Err(parse_err(n, "expected `confidence yes|no`")),
    };

    let (n, line) = next("label")?;
    let label = match line.strip_prefix("label ").map(str::trim) {
        Some("-") => None,
        Some(v) => Some(v.parse::<usize>().map_err(|e| parse_err(n, format!("label: {e}")))?),
        None => return Err(parse_err(n, "expected `label <id|->`")),
    };

    let mut gloss = None;
    let mut signer = None;
    loop {
        let (n, line) = next("frames")?;
        if line == "frames" {
            break;
        } else if let Some(g) = line.strip_prefix("gloss ") {
            gloss = Some(g.to_string());
        } else if let Some(s) = line.strip_prefix("signer ") {
            signer = Some(s.to_string());
        } else {
            return Err(parse_err(n, format!("unexpected header line `{line}`")));
        }
    }

    let mut coords = Vec::with_capacity(t * k * d);
    let mut present = Vec::with_capacity(t * k);
    let mut confidence = has_conf.then(|| Vec::with_capacity(t * k));
    for f in 0..t {
        let (n, line) = next("frame record")?;
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        let expected_fields = if has_conf { 4 } else { 3 };
        if fields.len() != expected_fields {
            return Err(parse_err(n, format!("frame record needs {expected_fields} fields")));
        }
        if fields[0].parse::<usize>() != Ok(f) {
            return Err(parse_err(n, format!("expected frame index {f}")));
        }
        coords.extend(parse_floats(n, fields[1], k * d, "coordinate")?);
        if fields[2].len() != k {
            return Err(parse_err(n, format!("presence field must have {k} bits")));
        }
        for c in fields[2].chars() {
            present.push(match c {
                '1' => true,
                '0' => false,
                other => return Err(parse_err(n, format!("invalid presence bit `{other}`"))),
            });
        }
        if let Some(conf) = confidence.as_mut() {
            conf.extend(parse_floats(n, fields[3], k, "confidence")?);
        }
    }
    let (n, line) = next("end")?;
    if line != "end" {
        return Err(parse_err(n, "expected `end` after the last frame"));
    }

    let mut seq = KeypointSequence::new(layout, t, k, d, coords, present, confidence)
        .map_err(|e| parse_err(n, e.to_string()))?;
    seq.label = label;
    seq.gloss = gloss;
    seq.signer_id = signer;
    Ok(seq)
}

pub fn write_sequence(seq: &KeypointSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_sequence(seq)).map_err(|e| Error::io(path, e))
}

pub fn read_sequence(path: impl AsRef<Path>) -> Result<KeypointSequence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sequence(&text)
}
