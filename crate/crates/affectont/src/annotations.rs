//! Primary/secondary concept assignments per stimulus, weighted tag clouds
//! and folksonomy merging.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::ConceptId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub contributor: String,
    pub concept: ConceptId,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StimulusAnnotations {
    pub primary: Option<ConceptId>,
    #[serde(default)]
    pub contributions: Vec<Contribution>,
}

/// Per-stimulus annotation store. Serializes to a JSON object keyed by
/// stimulus id, with stable key ordering.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnnotationStore {
    entries: BTreeMap<String, StimulusAnnotations>,
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("unknown stimulus `{0}`")]
    UnknownStimulus(String),
    #[error("weight {0} outside (0, 1]")]
    WeightOutOfRange(f64),
    #[error("secondary concept `{0}` equals the primary of stimulus `{1}`")]
    SecondaryEqualsPrimary(ConceptId, String),
    #[error("conflicting primaries for stimulus `{stimulus}`: `{a}` vs `{b}`")]
    ConflictingPrimaries {
        stimulus: String,
        a: ConceptId,
        b: ConceptId,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Weighted, importance-ordered concept tags for one stimulus; normalized
/// weights sum to 1 when nonempty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagCloud {
    pub stimulus_id: String,
    pub entries: Vec<(ConceptId, f64)>,
}

impl AnnotationStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stimulus_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    pub fn contains(&self, stimulus_id: &str) -> bool {
        self.entries.contains_key(stimulus_id)
    }

    pub fn get(&self, stimulus_id: &str) -> Option<&StimulusAnnotations> {
        self.entries.get(stimulus_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Register a stimulus with its primary concept.
    pub fn set_primary(&mut self, stimulus_id: &str, concept: ConceptId) {
        self.entries
            .entry(stimulus_id.to_string())
            .or_default()
            .primary = Some(concept);
    }

    /// Record a secondary contribution. Re-assignment by the same contributor
    /// replaces the prior weight.
    pub fn assign_secondary(
        &mut self,
        stimulus_id: &str,
        contributor: &str,
        concept: &str,
        weight: f64,
    ) -> Result<(), AnnotationError> {
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(AnnotationError::WeightOutOfRange(weight));
        }
        let entry = self
            .entries
            .get_mut(stimulus_id)
            .ok_or_else(|| AnnotationError::UnknownStimulus(stimulus_id.to_string()))?;
        if entry.primary.as_deref() == Some(concept) {
            return Err(AnnotationError::SecondaryEqualsPrimary(
                concept.to_string(),
                stimulus_id.to_string(),
            ));
        }
        if let Some(existing) = entry
            .contributions
            .iter_mut()
            .find(|c| c.contributor == contributor && c.concept == concept)
        {
            existing.weight = weight;
        } else {
            entry.contributions.push(Contribution {
                contributor: contributor.to_string(),
                concept: concept.to_string(),
                weight,
            });
        }
        Ok(())
    }

    /// Raw (unnormalized) concept weight vector: summed contributor weights,
    /// plus weight 1.0 for the primary when included.
    pub fn raw_weights(
        &self,
        stimulus_id: &str,
        include_primary: bool,
    ) -> Result<BTreeMap<ConceptId, f64>, AnnotationError> {
        let entry = self
            .entries
            .get(stimulus_id)
            .ok_or_else(|| AnnotationError::UnknownStimulus(stimulus_id.to_string()))?;
        let mut weights: BTreeMap<ConceptId, f64> = BTreeMap::new();
        for c in &entry.contributions {
            *weights.entry(c.concept.clone()).or_insert(0.0) += c.weight;
        }
        if include_primary {
            if let Some(primary) = &entry.primary {
                *weights.entry(primary.clone()).or_insert(0.0) += 1.0;
            }
        }
        Ok(weights)
    }

    /// Normalized tag cloud, descending weight, ties broken by concept id.
    pub fn tag_cloud(
        &self,
        stimulus_id: &str,
        include_primary: bool,
    ) -> Result<TagCloud, AnnotationError> {
        let weights = self.raw_weights(stimulus_id, include_primary)?;
        let total: f64 = weights.values().sum();
        let mut entries: Vec<(ConceptId, f64)> = weights
            .into_iter()
            .map(|(c, w)| (c, w / total))
            .collect();
        entries.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| a.0.cmp(&b.0))
        });
        Ok(TagCloud {
            stimulus_id: stimulus_id.to_string(),
            entries,
        })
    }

    /// Cosine similarity of the primary-inclusive raw weight vectors;
    /// 0 when either vector is empty.
    pub fn stimulus_similarity(&self, a: &str, b: &str) -> Result<f64, AnnotationError> {
        let va = self.raw_weights(a, true)?;
        let vb = self.raw_weights(b, true)?;
        if va.is_empty() || vb.is_empty() {
            return Ok(0.0);
        }
        let dot: f64 = va
            .iter()
            .filter_map(|(c, w)| vb.get(c).map(|w2| w * w2))
            .sum();
        let na: f64 = va.values().map(|w| w * w).sum::<f64>().sqrt();
        let nb: f64 = vb.values().map(|w| w * w).sum::<f64>().sqrt();
        Ok(dot / (na * nb))
    }

    pub fn to_json(&self) -> Result<String, AnnotationError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<(), AnnotationError> {
        let json = self.to_json()?;
        w.write_all(json.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, AnnotationError> {
        Ok(serde_json::from_reader(r)?)
    }
}

/// Union of stores. Duplicate (contributor, stimulus, concept) contributions
/// keep the maximum weight; conflicting primaries are an error.
pub fn merge_folksonomies(stores: &[AnnotationStore]) -> Result<AnnotationStore, AnnotationError> {
    let mut merged = AnnotationStore::new();
    for store in stores {
        for (stimulus_id, anns) in &store.entries {
            let entry = merged.entries.entry(stimulus_id.clone()).or_default();
            match (&entry.primary, &anns.primary) {
                (Some(a), Some(b)) if a != b => {
                    return Err(AnnotationError::ConflictingPrimaries {
                        stimulus: stimulus_id.clone(),
                        a: a.clone(),
                        b: b.clone(),
                    });
                }
                (None, Some(b)) => entry.primary = Some(b.clone()),
                _ => {}
            }
            for c in &anns.contributions {
                if let Some(existing) = entry
                    .contributions
                    .iter_mut()
                    .find(|e| e.contributor == c.contributor && e.concept == c.concept)
                {
                    existing.weight = existing.weight.max(c.weight);
                } else {
                    entry.contributions.push(c.clone());
                }
            }
        }
    }
    // Canonical contribution order so merge results compare structurally.
    for entry in merged.entries.values_mut() {
        entry
            .contributions
            .sort_by(|a, b| (&a.contributor, &a.concept).cmp(&(&b.contributor, &b.concept)));
    }
    Ok(merged)
}

/// Pairwise stimulus connections above a similarity threshold.
pub fn connected_stimuli(
    store: &AnnotationStore,
    threshold: f64,
) -> Result<Vec<(String, String, f64)>, AnnotationError> {
    let ids: Vec<&str> = store.stimulus_ids().collect();
    let mut out = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let sim = store.stimulus_similarity(a, b)?;
            if sim >= threshold {
                out.push((a.to_string(), b.to_string(), sim));
            }
        }
    }
    Ok(out)
}

/// Aggregate folksonomy contribution counts per concept across the store.
pub fn folksonomy_concept_counts(store: &AnnotationStore) -> HashMap<ConceptId, usize> {
    let mut counts = HashMap::new();
    for anns in store.entries.values() {
        for c in &anns.contributions {
            *counts.entry(c.concept.clone()).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prison_store() -> AnnotationStore {
        let mut s = AnnotationStore::new();
        s.set_primary("6000", "prison#n#1".to_string());
        s
    }

    #[test]
    fn assign_and_replace_secondary() {
        let mut s = prison_store();
        s.assign_secondary("6000", "alice", "confinement#n#1", 0.8)
            .unwrap();
        s.assign_secondary("6000", "alice", "confinement#n#1", 0.4)
            .unwrap();
        let entry = s.get("6000").unwrap();
        assert_eq!(entry.contributions.len(), 1);
        assert_eq!(entry.contributions[0].weight, 0.4);
    }

    #[test]
    fn weight_bounds_enforced() {
        let mut s = prison_store();
        assert!(matches!(
            s.assign_secondary("6000", "a", "jungle#n#1", 0.0),
            Err(AnnotationError::WeightOutOfRange(_))
        ));
        assert!(matches!(
            s.assign_secondary("6000", "a", "jungle#n#1", 1.5),
            Err(AnnotationError::WeightOutOfRange(_))
        ));
        s.assign_secondary("6000", "a", "jungle#n#1", 1.0).unwrap();
    }

    #[test]
    fn secondary_equal_primary_rejected() {
        let mut s = prison_store();
        assert!(matches!(
            s.assign_secondary("6000", "a", "prison#n#1", 0.5),
            Err(AnnotationError::SecondaryEqualsPrimary(..))
        ));
    }

    #[test]
    fn unknown_stimulus_rejected() {
        let mut s = prison_store();
        assert!(matches!(
            s.assign_secondary("9999", "a", "jungle#n#1", 0.5),
            Err(AnnotationError::UnknownStimulus(_))
        ));
        assert!(s.tag_cloud("9999", true).is_err());
    }

    #[test]
    fn tag_cloud_hand_arithmetic() {
        // contributions {confinement: 0.8 + 0.2, jungle: 0.5}, primary
        // excluded -> [(confinement, 1.0/1.5), (jungle, 0.5/1.5)]
        let mut s = prison_store();
        s.assign_secondary("6000", "alice", "confinement#n#1", 0.8)
            .unwrap();
        s.assign_secondary("6000", "bob", "confinement#n#1", 0.2)
            .unwrap();
        s.assign_secondary("6000", "carol", "jungle#n#1", 0.5)
            .unwrap();
        let cloud = s.tag_cloud("6000", false).unwrap();
        assert_eq!(cloud.entries.len(), 2);
        assert_eq!(cloud.entries[0].0, "confinement#n#1");
        assert!((cloud.entries[0].1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(cloud.entries[1].0, "jungle#n#1");
        assert!((cloud.entries[1].1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tag_cloud_primary_cases() {
        let s = prison_store();
        let with_primary = s.tag_cloud("6000", true).unwrap();
        assert_eq!(
            with_primary.entries,
            vec![("prison#n#1".to_string(), 1.0)]
        );
        let without = s.tag_cloud("6000", false).unwrap();
        assert!(without.entries.is_empty());
    }

    #[test]
    fn similarity_cases() {
        let mut s = AnnotationStore::new();
        s.set_primary("1", "prison#n#1".to_string());
        s.set_primary("2", "prison#n#1".to_string());
        s.assign_secondary("2", "a", "jungle#n#1", 1.0).unwrap();
        s.set_primary("3", "boat#n#1".to_string());

        // identical vectors
        assert!((s.stimulus_similarity("1", "1").unwrap() - 1.0).abs() < 1e-12);
        // a={prison:1}, b={prison:1, jungle:1} -> 1/sqrt(2)
        let sim = s.stimulus_similarity("1", "2").unwrap();
        assert!((sim - 1.0 / 2.0_f64.sqrt()).abs() < 1e-12);
        // disjoint
        assert_eq!(s.stimulus_similarity("1", "3").unwrap(), 0.0);
        // symmetric
        assert_eq!(sim, s.stimulus_similarity("2", "1").unwrap());
    }

    #[test]
    fn merge_disjoint_and_duplicates() {
        let mut a = AnnotationStore::new();
        a.set_primary("1", "prison#n#1".to_string());
        a.assign_secondary("1", "alice", "jungle#n#1", 0.4).unwrap();
        let mut b = AnnotationStore::new();
        b.set_primary("1", "prison#n#1".to_string());
        b.assign_secondary("1", "alice", "jungle#n#1", 0.7).unwrap();
        b.set_primary("2", "boat#n#1".to_string());

        let merged = merge_folksonomies(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.get("1").unwrap().contributions[0].weight, 0.7);

        // commutative
        let reversed = merge_folksonomies(&[b, a]).unwrap();
        assert_eq!(merged, reversed);
    }

    #[test]
    fn merge_conflicting_primaries_errors() {
        let mut a = AnnotationStore::new();
        a.set_primary("1", "prison#n#1".to_string());
        let mut b = AnnotationStore::new();
        b.set_primary("1", "jungle#n#1".to_string());
        assert!(matches!(
            merge_folksonomies(&[a, b]),
            Err(AnnotationError::ConflictingPrimaries { .. })
        ));
    }

    #[test]
    fn json_round_trip_is_stable() {
        let mut s = prison_store();
        s.assign_secondary("6000", "alice", "confinement#n#1", 0.8)
            .unwrap();
        let json = s.to_json().unwrap();
        let back = AnnotationStore::read_json(json.as_bytes()).unwrap();
        assert_eq!(s, back);
        assert_eq!(json, back.to_json().unwrap());
    }
}
