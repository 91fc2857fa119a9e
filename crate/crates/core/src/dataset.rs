//! In-memory profile datasets.
//!
//! A dataset is an immutable set of records keyed by (speaker id,
//! utterance id), all valid against one schema and all carrying the same
//! payload kind. Records are held in canonical order (speaker id, then
//! utterance id, lexicographic by bytes), which makes dataset equality,
//! serialization, and every downstream computation independent of input
//! order.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

use crate::schema::{is_valid_name, AttributeSchema, PosteriorProfile, Profile, ProfileError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Utterance,
    Speaker,
}

impl std::fmt::Display for Granularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Granularity::Utterance => f.write_str("utterance"),
            Granularity::Speaker => f.write_str("speaker"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    Labels,
    Posteriors,
}

impl std::fmt::Display for PayloadKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PayloadKind::Labels => f.write_str("labels"),
            PayloadKind::Posteriors => f.write_str("posteriors"),
        }
    }
}

/// Either a hard label profile or a posterior profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Labels(Profile),
    Posteriors(PosteriorProfile),
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Labels(_) => PayloadKind::Labels,
            Payload::Posteriors(_) => PayloadKind::Posteriors,
        }
    }

    pub fn as_profile(&self) -> Option<&Profile> {
        match self {
            Payload::Labels(p) => Some(p),
            Payload::Posteriors(_) => None,
        }
    }

    pub fn as_posteriors(&self) -> Option<&PosteriorProfile> {
        match self {
            Payload::Labels(_) => None,
            Payload::Posteriors(p) => Some(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRecord {
    pub speaker_id: String,
    pub utterance_id: String,
    pub payload: Payload,
}

/// Dataset role metadata: a condition label such as `ground_truth` or
/// `mcadams`, and the profile granularity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub source_label: String,
    pub granularity: Granularity,
}

impl DatasetMeta {
    pub fn new(source_label: impl Into<String>, granularity: Granularity) -> Self {
        Self {
            source_label: source_label.into(),
            granularity,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("dataset is empty")]
    Empty,
    #[error("invalid {field} '{value}': ids are non-empty and limited to [A-Za-z0-9_ -]")]
    InvalidId { field: &'static str, value: String },
    #[error("duplicate record key ({speaker_id}, {utterance_id})")]
    DuplicateKey {
        speaker_id: String,
        utterance_id: String,
    },
    #[error("record ({speaker_id}, {utterance_id}): {source}")]
    InvalidPayload {
        speaker_id: String,
        utterance_id: String,
        source: ProfileError,
    },
    #[error("dataset mixes label and posterior payloads")]
    MixedPayloadKinds,
    #[error("speaker granularity requires one record per speaker; '{speaker_id}' has {count}")]
    SpeakerGranularity { speaker_id: String, count: usize },
    #[error("speaker id set is empty")]
    EmptySpeakerSet,
    #[error("unknown speaker ids: {}", .missing.join(", "))]
    UnknownSpeakers { missing: Vec<String> },
}

/// Immutable collection of profile records over one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDataset {
    schema: AttributeSchema,
    records: Vec<ProfileRecord>,
    meta: DatasetMeta,
}

impl ProfileDataset {
    /// Validates, sorts into canonical order, and seals the dataset.
    pub fn new(
        schema: AttributeSchema,
        mut records: Vec<ProfileRecord>,
        meta: DatasetMeta,
    ) -> Result<Self, DatasetError> {
        if records.is_empty() {
            return Err(DatasetError::Empty);
        }
        let kind = records[0].payload.kind();
        for rec in &records {
            if !is_valid_name(&rec.speaker_id) {
                return Err(DatasetError::InvalidId {
                    field: "speaker_id",
                    value: rec.speaker_id.clone(),
                });
            }
            if !is_valid_name(&rec.utterance_id) {
                return Err(DatasetError::InvalidId {
                    field: "utterance_id",
                    value: rec.utterance_id.clone(),
                });
            }
            if rec.payload.kind() != kind {
                return Err(DatasetError::MixedPayloadKinds);
            }
            let check = match &rec.payload {
                Payload::Labels(p) => Profile::new(p.values().to_vec(), &schema).map(|_| ()),
                Payload::Posteriors(p) => p.check_dimensions(&schema),
            };
            if let Err(source) = check {
                return Err(DatasetError::InvalidPayload {
                    speaker_id: rec.speaker_id.clone(),
                    utterance_id: rec.utterance_id.clone(),
                    source,
                });
            }
        }
        records.sort_by(|a, b| {
            (a.speaker_id.as_str(), a.utterance_id.as_str())
                .cmp(&(b.speaker_id.as_str(), b.utterance_id.as_str()))
        });
        for pair in records.windows(2) {
            if pair[0].speaker_id == pair[1].speaker_id
                && pair[0].utterance_id == pair[1].utterance_id
            {
                return Err(DatasetError::DuplicateKey {
                    speaker_id: pair[0].speaker_id.clone(),
                    utterance_id: pair[0].utterance_id.clone(),
                });
            }
        }
        if meta.granularity == Granularity::Speaker {
            for pair in records.windows(2) {
                if pair[0].speaker_id == pair[1].speaker_id {
                    let count = records
                        .iter()
                        .filter(|r| r.speaker_id == pair[0].speaker_id)
                        .count();
                    return Err(DatasetError::SpeakerGranularity {
                        speaker_id: pair[0].speaker_id.clone(),
                        count,
                    });
                }
            }
        }
        Ok(Self {
            schema,
            records,
            meta,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    /// Records in canonical (speaker id, utterance id) order.
    pub fn records(&self) -> &[ProfileRecord] {
        &self.records
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn payload_kind(&self) -> PayloadKind {
        self.records[0].payload.kind()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct speaker ids in sorted order.
    pub fn speakers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for rec in &self.records {
            if out.last() != Some(&rec.speaker_id.as_str()) {
                out.push(&rec.speaker_id);
            }
        }
        out
    }

    pub fn n_speakers(&self) -> usize {
        self.speakers().len()
    }

    /// Groups of records per speaker, in sorted speaker order.
    pub fn by_speaker(&self) -> Vec<(&str, &[ProfileRecord])> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.records.len() {
            if i == self.records.len() || self.records[i].speaker_id != self.records[start].speaker_id
            {
                out.push((self.records[start].speaker_id.as_str(), &self.records[start..i]));
                start = i;
            }
        }
        out
    }

    pub fn with_source_label(mut self, label: impl Into<String>) -> Self {
        self.meta.source_label = label.into();
        self
    }

    /// Keeps exactly the records of the given speakers; every id must be
    /// present in the dataset.
    pub fn restrict_to_speakers(&self, ids: &BTreeSet<String>) -> Result<Self, DatasetError> {
        if ids.is_empty() {
            return Err(DatasetError::EmptySpeakerSet);
        }
        let present: BTreeSet<&str> = self.speakers().into_iter().collect();
        let missing: Vec<String> = ids
            .iter()
            .filter(|id| !present.contains(id.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(DatasetError::UnknownSpeakers { missing });
        }
        let records = self
            .records
            .iter()
            .filter(|r| ids.contains(&r.speaker_id))
            .cloned()
            .collect();
        Self::new(self.schema.clone(), records, self.meta.clone())
    }
}

/// Standalone form of [`ProfileDataset::restrict_to_speakers`].
pub fn restrict_to_speakers(
    ds: &ProfileDataset,
    ids: &BTreeSet<String>,
) -> Result<ProfileDataset, DatasetError> {
    ds.restrict_to_speakers(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::AttributeDef;

    fn schema() -> AttributeSchema {
        AttributeSchema::new(vec![
            AttributeDef {
                name: "gender".into(),
                levels: vec!["m".into(), "f".into()],
            },
            AttributeDef {
                name: "age".into(),
                levels: vec!["a".into(), "b".into(), "c".into()],
            },
        ])
        .unwrap()
    }

    fn label_record(spk: &str, utt: &str, values: Vec<u16>) -> ProfileRecord {
        ProfileRecord {
            speaker_id: spk.into(),
            utterance_id: utt.into(),
            payload: Payload::Labels(Profile::new(values, &schema()).unwrap()),
        }
    }

    #[test]
    fn canonical_order_and_equality_under_permutation() {
        let meta = DatasetMeta::new("x", Granularity::Utterance);
        let a = ProfileDataset::new(
            schema(),
            vec![
                label_record("s2", "u1", vec![0, 0]),
                label_record("s1", "u2", vec![1, 1]),
                label_record("s1", "u1", vec![0, 2]),
            ],
            meta.clone(),
        )
        .unwrap();
        let b = ProfileDataset::new(
            schema(),
            vec![
                label_record("s1", "u1", vec![0, 2]),
                label_record("s2", "u1", vec![0, 0]),
                label_record("s1", "u2", vec![1, 1]),
            ],
            meta,
        )
        .unwrap();
        assert_eq!(a, b);
        let keys: Vec<(&str, &str)> = a
            .records()
            .iter()
            .map(|r| (r.speaker_id.as_str(), r.utterance_id.as_str()))
            .collect();
        assert_eq!(keys, vec![("s1", "u1"), ("s1", "u2"), ("s2", "u1")]);
    }

    #[test]
    fn duplicate_keys_rejected() {
        let err = ProfileDataset::new(
            schema(),
            vec![
                label_record("s1", "u1", vec![0, 0]),
                label_record("s1", "u1", vec![1, 1]),
            ],
            DatasetMeta::new("x", Granularity::Utterance),
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateKey { .. }));
    }

    #[test]
    fn speaker_granularity_enforced() {
        let err = ProfileDataset::new(
            schema(),
            vec![
                label_record("s1", "u1", vec![0, 0]),
                label_record("s1", "u2", vec![0, 0]),
            ],
            DatasetMeta::new("x", Granularity::Speaker),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            DatasetError::SpeakerGranularity { count: 2, .. }
        ));
    }

    #[test]
    fn mixed_payloads_rejected() {
        let err = ProfileDataset::new(
            schema(),
            vec![
                label_record("s1", "u1", vec![0, 0]),
                ProfileRecord {
                    speaker_id: "s2".into(),
                    utterance_id: "u1".into(),
                    payload: Payload::Posteriors(
                        PosteriorProfile::new(vec![vec![0.5, 0.5], vec![0.2, 0.3, 0.5]]).unwrap(),
                    ),
                },
            ],
            DatasetMeta::new("x", Granularity::Utterance),
        )
        .unwrap_err();
        assert_eq!(err, DatasetError::MixedPayloadKinds);
    }

    #[test]
    fn restrict_keeps_exactly_requested_speakers() {
        let ds = ProfileDataset::new(
            schema(),
            vec![
                label_record("a", "u1", vec![0, 0]),
                label_record("b", "u1", vec![0, 1]),
                label_record("c", "u1", vec![0, 2]),
            ],
            DatasetMeta::new("x", Granularity::Speaker),
        )
        .unwrap();
        let kept = ds
            .restrict_to_speakers(&BTreeSet::from(["a".to_string()]))
            .unwrap();
        assert_eq!(kept.n_speakers(), 1);
        assert_eq!(kept.speakers(), vec!["a"]);

        let err = ds
            .restrict_to_speakers(&BTreeSet::from(["zz".to_string()]))
            .unwrap_err();
        assert!(matches!(err, DatasetError::UnknownSpeakers { .. }));
    }

    #[test]
    fn restrict_118_speaker_fixture_to_72() {
        let mut records = Vec::new();
        for i in 0..118 {
            records.push(label_record(&format!("spk{i:03}"), "u1", vec![0, 0]));
        }
        let ds = ProfileDataset::new(
            schema(),
            records,
            DatasetMeta::new("x", Granularity::Utterance),
        )
        .unwrap();
        let ids: BTreeSet<String> = (0..72).map(|i| format!("spk{i:03}")).collect();
        let kept = ds.restrict_to_speakers(&ids).unwrap();
        assert_eq!(kept.n_speakers(), 72);
        assert_eq!(kept.len(), 72);
    }
}
