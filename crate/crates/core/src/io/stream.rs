//! Plain-text record streams.
//!
//! One record per line: ascending item indices separated by spaces. A blank
//! line is an empty record and lines starting with `#` are comments.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::generators::StreamRecord;
use crate::itemset::Itemset;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl StreamError {
    pub fn line(&self) -> Option<u64> {
        match self {
            StreamError::Parse { line, .. } => Some(*line),
            StreamError::Io(_) => None,
        }
    }
}

/// Iterates the records of a stream file. In strict mode the first
/// malformed line is returned as an error; in lenient mode such lines are
/// skipped and remembered in [`StreamReader::skipped`].
pub struct StreamReader<R> {
    lines: io::Lines<R>,
    line: u64,
    seq: u64,
    universe: Option<u32>,
    lenient: bool,
    skipped: Vec<StreamError>,
}

impl<R: BufRead> StreamReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line: 0,
            seq: 0,
            universe: None,
            lenient: false,
            skipped: Vec::new(),
        }
    }

    /// Rejects items `>= n`.
    pub fn with_universe(mut self, n: u32) -> Self {
        self.universe = Some(n);
        self
    }

    pub fn lenient(mut self, lenient: bool) -> Self {
        self.lenient = lenient;
        self
    }

    pub fn skipped(&self) -> &[StreamError] {
        &self.skipped
    }

    fn parse_line(&self, text: &str) -> Result<Itemset, StreamError> {
        let mut items = Itemset::new();
        for tok in text.split_whitespace() {
            let item: u32 = tok.parse().map_err(|_| StreamError::Parse {
                line: self.line,
                message: format!("invalid item {tok:?}"),
            })?;
            if let Some(n) = self.universe.filter(|&n| item >= n) {
                return Err(StreamError::Parse {
                    line: self.line,
                    message: format!("item {item} is outside the universe 0..{n}"),
                });
            }
            items.insert(item);
        }
        Ok(items)
    }
}

impl<R: BufRead> Iterator for StreamReader<R> {
    type Item = Result<StreamRecord, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim_start().starts_with('#') {
                continue;
            }
            match self.parse_line(&text) {
                Ok(items) => {
                    self.seq += 1;
                    return Some(Ok(StreamRecord {
                        seq: self.seq,
                        items,
                    }));
                }
                Err(e) if self.lenient => self.skipped.push(e),
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

pub fn write_stream<'a, W, I>(out: &mut W, records: I) -> io::Result<()>
where
    W: Write + ?Sized,
    I: IntoIterator<Item = &'a Itemset>,
{
    for r in records {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_all(text: &str) -> Vec<Result<StreamRecord, StreamError>> {
        StreamReader::new(text.as_bytes())
            .with_universe(10)
            .collect()
    }

    #[test]
    fn parses_records_comments_and_blank_lines() {
        let recs: Vec<StreamRecord> = read_all("# header\n1 2 3\n\n  # indented comment\n4\n")
            .into_iter()
            .map(Result::unwrap)
            .collect();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].items, Itemset::from_items([1, 2, 3]));
        assert!(recs[1].items.is_empty());
        assert_eq!((recs[2].seq, recs[2].items.to_vec()), (3, vec![4]));
    }

    #[test]
    fn strict_mode_reports_line_numbers() {
        let out = read_all("1 2\n3 x\n4\n");
        let err = out[1].as_ref().unwrap_err();
        assert_eq!(err.line(), Some(2));
        let out = read_all("1 2\n# c\n3 12\n");
        assert_eq!(out[1].as_ref().unwrap_err().line(), Some(3));
        assert!(out[1]
            .as_ref()
            .unwrap_err()
            .to_string()
            .contains("outside the universe"));
    }

    #[test]
    fn lenient_mode_skips_bad_lines() {
        let mut reader = StreamReader::new("1\nbad\n2\n11\n3\n".as_bytes())
            .with_universe(10)
            .lenient(true);
        let recs: Vec<_> = reader.by_ref().map(Result::unwrap).collect();
        assert_eq!(
            recs.iter().map(|r| r.seq).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert_eq!(
            reader
                .skipped()
                .iter()
                .map(|e| e.line())
                .collect::<Vec<_>>(),
            vec![Some(2), Some(4)]
        );
    }

    #[test]
    fn writer_round_trips() {
        let records = vec![
            Itemset::from_items([3, 1]),
            Itemset::new(),
            Itemset::from_items([7]),
        ];
        let mut buf = Vec::new();
        write_stream(&mut buf, &records).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1 3\n\n7\n");
        let back: Vec<Itemset> = StreamReader::new(buf.as_slice())
            .map(|r| r.unwrap().items)
            .collect();
        assert_eq!(back, records);
    }
}
