use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Pre-trained vectors in the word2vec text layout: an optional
/// `count dim` header, then `token v1 ... vd` per line.
#[derive(Clone, Debug, PartialEq)]
pub struct PretrainedVectors {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl PretrainedVectors {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file), path.to_owned())
    }

    pub fn parse(reader: impl BufRead, path: PathBuf) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut declared_count = None;
        let mut index = HashMap::new();
        let mut data = Vec::new();
        let mut first = true;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io(&path, e))?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let rest: Vec<&str> = fields.collect();
            if first {
                first = false;
                if rest.len() == 1 {
                    if let (Ok(count), Ok(d)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                        declared_count = Some(count);
                        dim = Some(d);
                        continue;
                    }
                }
            }
            let expected = *dim.get_or_insert(rest.len());
            if rest.len() != expected || expected == 0 {
                return Err(Error::Parse {
                    path,
                    line: line_no,
                    message: format!("expected {expected} components, found {}", rest.len()),
                });
            }
            let values = rest
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| Error::Parse {
                        path: path.clone(),
                        line: line_no,
                        message: format!("`{field}` is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            // first occurrence of a repeated token wins
            if !index.contains_key(token) {
                index.insert(token.to_owned(), index.len());
                data.extend(values);
            }
        }
        let dim = dim.ok_or_else(|| Error::Parse {
            path: path.clone(),
            line: 0,
            message: "no vectors found".into(),
        })?;
        if let Some(count) = declared_count {
            if count != index.len() {
                log::warn!(
                    "{}: header declares {count} vectors, found {}",
                    path.display(),
                    index.len()
                );
            }
        }
        Ok(PretrainedVectors { dim, index, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PretrainedVectors> {
        PretrainedVectors::parse(text.as_bytes(), PathBuf::from("mem"))
    }

    #[test]
    fn with_header() {
        let v = parse("2 3\nfoo 1 2 3\nbar 0.5 -1 1e-3\n").unwrap();
        assert_eq!(v.dim(), 3);
        assert_eq!(v.len(), 2);
        assert_eq!(v.get("bar").unwrap(), &[0.5, -1.0, 1e-3]);
        assert!(v.get("baz").is_none());
    }

    #[test]
    fn without_header() {
        let v = parse("foo 1 2\nbar 3 4\n").unwrap();
        assert_eq!(v.dim(), 2);
        assert_eq!(v.get("foo").unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn two_dimensional_rows_are_not_mistaken_for_a_header() {
        let v = parse("foo 1\nbar 2\n").unwrap();
        assert_eq!(v.dim(), 1);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn ragged_rows_fail_with_line() {
        match parse("3 2\na 1 2\nb 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn first_duplicate_wins() {
        let v = parse("a 1\na 2\nb 3\n").unwrap();
        assert_eq!(v.get("a").unwrap(), &[1.0]);
        assert_eq!(v.get("b").unwrap(), &[3.0]);
    }

    #[test]
    fn empty_input() {
        assert!(parse("").is_err());
    }
}
