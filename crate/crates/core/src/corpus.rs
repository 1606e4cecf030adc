//! A labelled collection of keypoint sequences stored as a directory: an
//! `annotations.tsv` index (`sequence`, `gloss`, `signer` columns) next to
//! one `<sequence>.kp` keypoint file per clip.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_sequence, write_sequence};
use crate::sequence::{AnnotationRecord, KeypointSequence};

pub const ANNOTATIONS_FILE: &str = "annotations.tsv";
pub const SEQUENCE_EXTENSION: &str = "kp";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub records: Vec<AnnotationRecord>,
    pub sequences: BTreeMap<String, KeypointSequence>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sequences in record order.
    pub fn ordered_sequences(&self) -> Vec<&KeypointSequence> {
        self.records.iter().filter_map(|r| self.sequences.get(&r.sequence)).collect()
    }

    pub fn format_annotations(&self) -> String {
        let mut out = String::from("sequence\tgloss\tsigner\n");
        for r in &self.records {
            out += &format!("{}\t{}\t{}\n", r.sequence, r.gloss_label, r.signer_id);
        }
        out
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let index = dir.join(ANNOTATIONS_FILE);
        fs::write(&index, self.format_annotations()).map_err(|e| Error::io(&index, e))?;
        for (name, seq) in &self.sequences {
            write_sequence(seq, dir.join(format!("{name}.{SEQUENCE_EXTENSION}")))?;
        }
        Ok(())
    }

    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let index = dir.join(ANNOTATIONS_FILE);
        let text = fs::read_to_string(&index).map_err(|e| Error::io(&index, e))?;
        let records = parse_annotations(&text)?;
        let mut sequences = BTreeMap::new();
        for r in &records {
            if !sequences.contains_key(&r.sequence) {
                let seq = read_sequence(dir.join(format!("{}.{SEQUENCE_EXTENSION}", r.sequence)))?;
                sequences.insert(r.sequence.clone(), seq);
            }
        }
        Ok(Self { records, sequences })
    }
}

pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationRecord>> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        records.push(AnnotationRecord::new(cols[0], cols[1], cols[2]).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::EstimatorFamily;

    #[test]
    fn directory_round_trip() {
        let seq = KeypointSequence::fully_present(EstimatorFamily::OpenPose, 2, 54, 2, vec![0.5; 216]).unwrap();
        let corpus = Corpus {
            records: vec![
                AnnotationRecord::new("a", "HELLO", "s1").unwrap(),
                AnnotationRecord::new("b", "BYE", "s2").unwrap(),
            ],
            sequences: [("a".to_string(), seq.clone()), ("b".to_string(), seq)].into_iter().collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        corpus.write_dir(dir.path()).unwrap();
        assert_eq!(Corpus::read_dir(dir.path()).unwrap(), corpus);
    }

    #[test]
    fn bad_annotation_row() {
        let err = parse_annotations("sequence\tgloss\tsigner\na\tb\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
