//! Attribute schemas and the profile types built on them.
//!
//! A schema is an ordered list of categorical attributes, each with an
//! ordered set of at least two level names. Order is part of schema
//! identity: level order drives every deterministic tie-break in the
//! crate, and attribute order fixes the column layout of the CSV format.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Names usable in the unquoted CSV dialect (attributes, levels, ids).
pub fn is_valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ' ' || c == '-')
}

/// Tolerance on posterior vector sums; vectors inside it are renormalized
/// exactly on construction.
pub const POSTERIOR_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("schema has no attributes")]
    NoAttributes,
    #[error("duplicate attribute name '{0}'")]
    DuplicateAttribute(String),
    #[error("invalid attribute name '{0}': names are non-empty and limited to [A-Za-z0-9_ -]")]
    InvalidAttributeName(String),
    #[error("attribute '{attribute}' has {count} level(s); at least 2 are required")]
    TooFewLevels { attribute: String, count: usize },
    #[error("invalid level name '{level}' in attribute '{attribute}': names are non-empty and limited to [A-Za-z0-9_ -]")]
    InvalidLevelName { attribute: String, level: String },
    #[error("duplicate level '{level}' in attribute '{attribute}'")]
    DuplicateLevel { attribute: String, level: String },
}

/// Errors from validating a profile or posterior profile against a schema.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("profile has {found} values but the schema has {expected} attributes")]
    WrongArity { expected: usize, found: usize },
    #[error("level index {index} out of range for attribute '{attribute}' ({levels} levels)")]
    LevelOutOfRange {
        attribute: String,
        index: u16,
        levels: usize,
    },
    #[error("posterior vector for attribute {position} has {found} entries but the attribute has {expected} levels")]
    DimensionMismatch {
        position: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid probability distribution: {0}")]
    BadDistribution(String),
}

/// One categorical attribute: a name and its ordered level names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeDef {
    pub name: String,
    pub levels: Vec<String>,
}

/// Ordered list of attribute definitions. Construction validates all
/// schema rules, so a value of this type is always well-formed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct AttributeSchema {
    attributes: Vec<AttributeDef>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    attributes: Vec<AttributeDef>,
}

impl TryFrom<RawSchema> for AttributeSchema {
    type Error = SchemaError;

    fn try_from(raw: RawSchema) -> Result<Self, SchemaError> {
        AttributeSchema::new(raw.attributes)
    }
}

impl AttributeSchema {
    pub fn new(attributes: Vec<AttributeDef>) -> Result<Self, SchemaError> {
        if attributes.is_empty() {
            return Err(SchemaError::NoAttributes);
        }
        for (i, attr) in attributes.iter().enumerate() {
            if !is_valid_name(&attr.name) {
                return Err(SchemaError::InvalidAttributeName(attr.name.clone()));
            }
            if attributes[..i].iter().any(|a| a.name == attr.name) {
                return Err(SchemaError::DuplicateAttribute(attr.name.clone()));
            }
            if attr.levels.len() < 2 {
                return Err(SchemaError::TooFewLevels {
                    attribute: attr.name.clone(),
                    count: attr.levels.len(),
                });
            }
            for (j, level) in attr.levels.iter().enumerate() {
                if !is_valid_name(level) {
                    return Err(SchemaError::InvalidLevelName {
                        attribute: attr.name.clone(),
                        level: level.clone(),
                    });
                }
                if attr.levels[..j].contains(level) {
                    return Err(SchemaError::DuplicateLevel {
                        attribute: attr.name.clone(),
                        level: level.clone(),
                    });
                }
            }
        }
        Ok(Self { attributes })
    }

    pub fn from_json_str(s: &str) -> Result<Self, String> {
        serde_json::from_str(s).map_err(|e| e.to_string())
    }

    pub fn attributes(&self) -> &[AttributeDef] {
        &self.attributes
    }

    /// Number of attributes.
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute(&self, index: usize) -> &AttributeDef {
        &self.attributes[index]
    }

    pub fn level_count(&self, index: usize) -> usize {
        self.attributes[index].levels.len()
    }

    pub fn level_index(&self, attribute: usize, level: &str) -> Option<u16> {
        self.attributes[attribute]
            .levels
            .iter()
            .position(|l| l == level)
            .map(|i| i as u16)
    }

    /// Fixed-field-order JSON used for hashing and for the schema file
    /// format.
    pub fn canonical_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            attributes: &'a [AttributeDef],
        }
        serde_json::to_string(&Doc {
            attributes: &self.attributes,
        })
        .expect("schema serialization cannot fail")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Checks all schema invariants; `AttributeSchema::new` applies the same
/// rules, so this is the standalone form for pre-validated raw input.
pub fn validate_schema(attributes: &[AttributeDef]) -> Result<(), SchemaError> {
    AttributeSchema::new(attributes.to_vec()).map(|_| ())
}

/// One level index per schema attribute. Equality is exact match on all
/// indices; there is no partial matching.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile {
    values: Vec<u16>,
}

impl Profile {
    pub fn new(values: Vec<u16>, schema: &AttributeSchema) -> Result<Self, ProfileError> {
        if values.len() != schema.len() {
            return Err(ProfileError::WrongArity {
                expected: schema.len(),
                found: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if (v as usize) >= schema.level_count(i) {
                return Err(ProfileError::LevelOutOfRange {
                    attribute: schema.attribute(i).name.clone(),
                    index: v,
                    levels: schema.level_count(i),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn level_names<'s>(&self, schema: &'s AttributeSchema) -> Vec<&'s str> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| schema.attribute(i).levels[v as usize].as_str())
            .collect()
    }
}

/// One probability vector per schema attribute.
///
/// Vectors are renormalized exactly (divided by their sum) on
/// construction, so stored entries lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorProfile {
    distributions: Vec<Vec<f64>>,
}

impl PosteriorProfile {
    /// Validates and renormalizes. `tolerance` bounds how far each
    /// vector's sum may be from 1 before rejection; use
    /// [`POSTERIOR_SUM_TOLERANCE`] unless ingesting text formats.
    pub fn with_tolerance(
        mut distributions: Vec<Vec<f64>>,
        tolerance: f64,
    ) -> Result<Self, ProfileError> {
        for dist in &mut distributions {
            if dist.is_empty() {
                return Err(ProfileError::BadDistribution("empty vector".into()));
            }
            let mut sum = 0.0;
            for &p in dist.iter() {
                if !p.is_finite() {
                    return Err(ProfileError::BadDistribution(format!("non-finite entry {p}")));
                }
                if p < 0.0 {
                    return Err(ProfileError::BadDistribution(format!("negative entry {p}")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > tolerance {
                return Err(ProfileError::BadDistribution(format!(
                    "vector sums to {sum}, outside 1±{tolerance:e}"
                )));
            }
            for p in dist.iter_mut() {
                *p /= sum;
            }
        }
        Ok(Self { distributions })
    }

    pub fn new(distributions: Vec<Vec<f64>>) -> Result<Self, ProfileError> {
        Self::with_tolerance(distributions, POSTERIOR_SUM_TOLERANCE)
    }

    pub fn distributions(&self) -> &[Vec<f64>] {
        &self.distributions
    }

    pub fn check_dimensions(&self, schema: &AttributeSchema) -> Result<(), ProfileError> {
        if self.distributions.len() != schema.len() {
            return Err(ProfileError::WrongArity {
                expected: schema.len(),
                found: self.distributions.len(),
            });
        }
        for (i, dist) in self.distributions.iter().enumerate() {
            if dist.len() != schema.level_count(i) {
                return Err(ProfileError::DimensionMismatch {
                    position: i,
                    expected: schema.level_count(i),
                    found: dist.len(),
                });
            }
        }
        Ok(())
    }
}

/// Per attribute, the index of the maximal posterior probability. Ties
/// break to the lowest level index, i.e. the level that comes first in
/// schema order.
pub fn argmax_profile(
    p: &PosteriorProfile,
    schema: &AttributeSchema,
) -> Result<Profile, ProfileError> {
    p.check_dimensions(schema)?;
    let values = p
        .distributions()
        .iter()
        .map(|dist| {
            let mut best = 0usize;
            for (i, &v) in dist.iter().enumerate().skip(1) {
                if v > dist[best] {
                    best = i;
                }
            }
            best as u16
        })
        .collect();
    // Indices come straight from validated vector positions.
    Ok(Profile { values })
}
