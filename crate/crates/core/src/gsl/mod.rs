//! Group-supervised learning machinery: the attributed-dataset model, the
//! shared-attribute multigraph, the Cover predicate, and the group samplers
//! the training regime draws from.

pub mod multigraph;
pub mod sampler;

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{AttributeClass, AttributeSchema};

pub use multigraph::Multigraph;
pub use sampler::{GroupSample, NoOverlapDraw};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleRecord {
    pub file: String,
    pub attrs: Vec<u16>,
}

/// n samples, each an image reference plus one attribute value per class.
#[derive(Clone, Debug)]
pub struct AttributedDataset {
    pub schema: AttributeSchema,
    pub samples: Vec<SampleRecord>,
    pub colors: BTreeMap<String, [u8; 3]>,
    pub extent: usize,
    pub root: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct ManifestHeader {
    schema: Vec<AttributeClass>,
    colors: BTreeMap<String, [u8; 3]>,
    extent: usize,
}

#[derive(Serialize, Deserialize)]
struct ManifestRow {
    file: String,
    attrs: Vec<serde_json::Value>,
}

impl AttributedDataset {
    pub fn new(
        schema: AttributeSchema,
        samples: Vec<SampleRecord>,
        colors: BTreeMap<String, [u8; 3]>,
        extent: usize,
        root: PathBuf,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("dataset must hold at least one sample".into()));
        }
        for rec in &samples {
            schema.check_tuple(&rec.attrs)?;
        }
        Ok(Self { schema, samples, colors, extent, root })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn m(&self) -> usize {
        self.schema.m()
    }

    pub fn attrs(&self, id: usize) -> &[u16] {
        &self.samples[id].attrs
    }

    pub fn check_id(&self, id: usize) -> Result<()> {
        if id >= self.n() {
            return Err(Error::IdRange { id, n: self.n() });
        }
        Ok(())
    }

    pub fn image_path(&self, id: usize) -> PathBuf {
        self.root.join(&self.samples[id].file)
    }

    /// Human-readable value names of a sample's tuple.
    pub fn tuple_names(&self, id: usize) -> Vec<&str> {
        self.attrs(id)
            .iter()
            .enumerate()
            .map(|(j, &v)| self.schema.value_name(j, v as usize))
            .collect()
    }

    /// JSON Lines manifest: header line with schema/colors/extent, then one
    /// line per sample. The letter class stores value names, other classes
    /// store value indices; the reader accepts either form for any class.
    pub fn write_manifest(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        let header = ManifestHeader {
            schema: self.schema.classes.clone(),
            colors: self.colors.clone(),
            extent: self.extent,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for rec in &self.samples {
            let attrs: Vec<serde_json::Value> = rec
                .attrs
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    if j == 0 {
                        serde_json::Value::String(self.schema.value_name(j, v as usize).to_string())
                    } else {
                        serde_json::Value::Number((v as u64).into())
                    }
                })
                .collect();
            let row = ManifestRow { file: rec.file.clone(), attrs };
            serde_json::to_writer(&mut w, &row)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_manifest(path: &Path) -> Result<Self> {
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut lines = reader.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Manifest { line: 1, msg: "empty manifest".into() })??;
        let header: ManifestHeader =
            serde_json::from_str(&header_line).map_err(|e| Error::Manifest {
                line: 1,
                msg: format!("header: {e}"),
            })?;
        let schema = AttributeSchema::new(header.schema)?;

        let mut samples = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: ManifestRow = serde_json::from_str(&line).map_err(|e| Error::Manifest {
                line: lineno + 2,
                msg: e.to_string(),
            })?;
            if row.attrs.len() != schema.m() {
                return Err(Error::Manifest {
                    line: lineno + 2,
                    msg: format!("expected {} attrs, got {}", schema.m(), row.attrs.len()),
                });
            }
            let mut attrs = Vec::with_capacity(schema.m());
            for (j, v) in row.attrs.iter().enumerate() {
                let idx = match v {
                    serde_json::Value::String(s) => schema.value_index(j, s)?,
                    serde_json::Value::Number(n) => {
                        let raw = n.as_u64().ok_or_else(|| Error::Manifest {
                            line: lineno + 2,
                            msg: format!("attr {j} is not an index"),
                        })?;
                        if raw as usize >= schema.cardinality(j) {
                            return Err(Error::UnknownValue {
                                class: schema.class_name(j).to_string(),
                                value: format!("#{raw}"),
                            });
                        }
                        raw as u16
                    }
                    other => {
                        return Err(Error::Manifest {
                            line: lineno + 2,
                            msg: format!("attr {j} has unsupported type: {other}"),
                        })
                    }
                };
                attrs.push(idx);
            }
            samples.push(SampleRecord { file: row.file, attrs });
        }
        Self::new(schema, samples, header.colors, header.extent, root)
    }
}

/// A train/test split over sample ids.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Split {
    pub mode: String,
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(BufReader::new(f))?)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip_reproduces_every_tuple() {
        let ds = testutil::factorial_dataset(&[3, 2, 2]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.jsonl");
        ds.write_manifest(&path).unwrap();
        let back = AttributedDataset::load_manifest(&path).unwrap();
        assert_eq!(back.n(), ds.n());
        assert_eq!(back.schema, ds.schema);
        for id in 0..ds.n() {
            assert_eq!(back.attrs(id), ds.attrs(id));
            assert_eq!(back.samples[id].file, ds.samples[id].file);
        }
    }

    #[test]
    fn manifest_rejects_bad_rows() {
        let ds = testutil::factorial_dataset(&[2, 2]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.jsonl");
        ds.write_manifest(&path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{\"file\":\"x.png\",\"attrs\":[\"nope\",0]}\n");
        std::fs::write(&path, text).unwrap();
        assert!(AttributedDataset::load_manifest(&path).is_err());
    }

    #[test]
    fn split_roundtrip() {
        let split = Split {
            mode: "random-75-25".into(),
            seed: 7,
            train: vec![0, 2, 3],
            test: vec![1],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.json");
        split.save(&path).unwrap();
        let back = Split::load(&path).unwrap();
        assert_eq!(back.train, split.train);
        assert_eq!(back.test, split.test);
        assert_eq!(back.seed, 7);
    }
}
