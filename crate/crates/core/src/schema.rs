//! Attribute schema shared by the dataset generator and the group-supervised
//! learning machinery.
//!
//! An attributed dataset carries `m` attribute classes. Each class has a name
//! and a finite, ordered list of value names; a sample stores one value index
//! per class. The ordering is fixed for the dataset's lifetime so that value
//! indices stay stable across manifests, splits and checkpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeClass {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub classes: Vec<AttributeClass>,
}

impl AttributeSchema {
    pub fn new(classes: Vec<AttributeClass>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for class in &classes {
            if class.values.is_empty() {
                return Err(Error::Config(format!(
                    "attribute class {:?} has an empty value list",
                    class.name
                )));
            }
            if !seen.insert(class.name.clone()) {
                return Err(Error::Config(format!(
                    "duplicate attribute class name {:?}",
                    class.name
                )));
            }
            let mut vals = std::collections::HashSet::new();
            for v in &class.values {
                if !vals.insert(v) {
                    return Err(Error::Config(format!(
                        "duplicate value {:?} in class {:?}",
                        v, class.name
                    )));
                }
            }
        }
        Ok(Self { classes })
    }

    /// Number of attribute classes (`m`).
    pub fn m(&self) -> usize {
        self.classes.len()
    }

    pub fn class_name(&self, j: usize) -> &str {
        &self.classes[j].name
    }

    pub fn cardinality(&self, j: usize) -> usize {
        self.classes[j].values.len()
    }

    /// Total number of raw attribute combinations.
    pub fn combinations(&self) -> usize {
        self.classes.iter().map(|c| c.values.len()).product()
    }

    pub fn value_name(&self, j: usize, idx: usize) -> &str {
        &self.classes[j].values[idx]
    }

    pub fn value_index(&self, j: usize, name: &str) -> Result<u16> {
        self.classes[j]
            .values
            .iter()
            .position(|v| v == name)
            .map(|i| i as u16)
            .ok_or_else(|| Error::UnknownValue {
                class: self.classes[j].name.clone(),
                value: name.to_string(),
            })
    }

    pub fn class_index(&self, name: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::Config(format!("unknown attribute class {:?}", name)))
    }

    /// Validate one attribute tuple against the schema.
    pub fn check_tuple(&self, attrs: &[u16]) -> Result<()> {
        if attrs.len() != self.m() {
            return Err(Error::Dimension {
                axis: 0,
                expected: self.m(),
                actual: attrs.len(),
                context: "attribute tuple length".into(),
            });
        }
        for (j, &a) in attrs.iter().enumerate() {
            if a as usize >= self.cardinality(j) {
                return Err(Error::UnknownValue {
                    class: self.classes[j].name.clone(),
                    value: format!("#{a}"),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class() -> AttributeSchema {
        AttributeSchema::new(vec![
            AttributeClass {
                name: "letter".into(),
                values: vec!["A".into(), "B".into()],
            },
            AttributeClass {
                name: "size".into(),
                values: vec!["small".into(), "large".into()],
            },
        ])
        .unwrap()
    }

    #[test]
    fn lookup_roundtrip() {
        let s = two_class();
        assert_eq!(s.m(), 2);
        assert_eq!(s.value_index(0, "B").unwrap(), 1);
        assert_eq!(s.value_name(1, 0), "small");
        assert_eq!(s.combinations(), 4);
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(AttributeSchema::new(vec![AttributeClass {
            name: "x".into(),
            values: vec![],
        }])
        .is_err());
        assert!(AttributeSchema::new(vec![
            AttributeClass {
                name: "x".into(),
                values: vec!["a".into()],
            },
            AttributeClass {
                name: "x".into(),
                values: vec!["b".into()],
            },
        ])
        .is_err());
    }

    #[test]
    fn tuple_validation() {
        let s = two_class();
        assert!(s.check_tuple(&[1, 1]).is_ok());
        assert!(s.check_tuple(&[2, 0]).is_err());
        assert!(s.check_tuple(&[0]).is_err());
    }
}
