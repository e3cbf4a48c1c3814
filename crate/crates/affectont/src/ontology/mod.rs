//! Ontology model: Stimulus individuals, the DescribingConcept class
//! hierarchy and primary/secondary meaning links, with OWL RDF/XML
//! serialization and parsing.

mod parse;
mod serialize;

use thiserror::Error;

use crate::annotations::AnnotationStore;
use crate::manifest::Stimulus;
use crate::taxonomy::{ConceptId, TaxonomyError, TaxonomyGraph};

pub use parse::parse_owl;
pub use serialize::serialize_owl;

pub const DEFAULT_BASE_IRI: &str = "http://example.org/affectont";

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusIndividual {
    pub stimulus_id: String,
    pub pleasure: f64,
    pub arousal: f64,
    pub resource: String,
    /// hasPrimaryMeaning targets. Valid models carry exactly one; the vector
    /// exists so adversarial documents can be represented and rejected.
    pub primaries: Vec<ConceptId>,
    /// hasSecondaryMeaning targets with their axiom-annotation weights.
    pub secondaries: Vec<(ConceptId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelationAssertion {
    pub subject: ConceptId,
    pub predicate: String,
    pub object: ConceptId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OntologyModel {
    pub base_iri: String,
    pub concepts: TaxonomyGraph,
    pub stimuli: Vec<StimulusIndividual>,
    pub concept_relations: Vec<RelationAssertion>,
    /// Declared predicate vocabulary for concept relations.
    pub relation_vocabulary: Vec<String>,
    /// isPrimaryMeaningOf triples (concept, stimulus), rendered on the
    /// concept proxies.
    pub inverse_primary: Vec<(ConceptId, String)>,
    /// isSecondaryMeaningOf triples (concept, stimulus).
    pub inverse_secondary: Vec<(ConceptId, String)>,
}

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("stimulus `{0}` has no primary annotation")]
    MissingPrimaryAnnotation(String),
    #[error("stimulus `{stimulus}` references concept `{concept}` absent from the taxonomy")]
    UnknownConcept { stimulus: String, concept: ConceptId },
    #[error("relation assertion references concept `{0}` absent from the taxonomy")]
    UnknownRelationConcept(ConceptId),
    #[error("model is invalid:\n{0}")]
    InvalidModel(ValidationReport),
    #[error("xml error: {0}")]
    Xml(String),
    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    PrimaryCardinality { stimulus: String, count: usize },
    AffectOutOfRange { stimulus: String, axis: &'static str, value: f64 },
    UnknownConcept { stimulus: String, concept: ConceptId },
    DuplicateSecondary { stimulus: String, concept: ConceptId },
    SecondaryEqualsPrimary { stimulus: String, concept: ConceptId },
    WeightOutOfRange { stimulus: String, concept: ConceptId, weight: f64 },
    AsymmetricInverse { property: &'static str, stimulus: String, concept: ConceptId },
    UndeclaredPredicate { predicate: String },
    UnknownRelationConcept { concept: ConceptId },
    DuplicateStimulus { stimulus: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::PrimaryCardinality { stimulus, count } => {
                write!(f, "stimulus `{stimulus}` has {count} primary meanings (expected exactly 1)")
            }
            Violation::AffectOutOfRange { stimulus, axis, value } => {
                write!(f, "stimulus `{stimulus}` {axis} value {value} outside [1, 9]")
            }
            Violation::UnknownConcept { stimulus, concept } => {
                write!(f, "stimulus `{stimulus}` references unknown concept `{concept}`")
            }
            Violation::DuplicateSecondary { stimulus, concept } => {
                write!(f, "stimulus `{stimulus}` lists secondary `{concept}` more than once")
            }
            Violation::SecondaryEqualsPrimary { stimulus, concept } => {
                write!(f, "stimulus `{stimulus}` secondary `{concept}` equals its primary")
            }
            Violation::WeightOutOfRange { stimulus, concept, weight } => {
                write!(f, "stimulus `{stimulus}` secondary `{concept}` weight {weight} outside (0, 1]")
            }
            Violation::AsymmetricInverse { property, stimulus, concept } => {
                write!(f, "missing {property} counterpart for stimulus `{stimulus}` and concept `{concept}`")
            }
            Violation::UndeclaredPredicate { predicate } => {
                write!(f, "relation predicate `{predicate}` is not in the declared vocabulary")
            }
            Violation::UnknownRelationConcept { concept } => {
                write!(f, "relation references unknown concept `{concept}`")
            }
            Violation::DuplicateStimulus { stimulus } => {
                write!(f, "stimulus id `{stimulus}` appears more than once")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Informational notes, not failures (e.g. stimuli with no secondaries).
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

impl OntologyModel {
    /// Structural equality on ids and values, ignoring taxonomy seed
    /// bookkeeping and synset provenance.
    pub fn structurally_equal(&self, other: &OntologyModel) -> bool {
        let nodes = |m: &OntologyModel| {
            m.concepts
                .nodes()
                .map(|n| {
                    let mut parents = n.parents.clone();
                    parents.sort();
                    (n.concept_id.clone(), n.label.clone(), parents)
                })
                .collect::<Vec<_>>()
        };
        self.base_iri == other.base_iri
            && nodes(self) == nodes(other)
            && self.stimuli == other.stimuli
            && self.concept_relations == other.concept_relations
            && self.relation_vocabulary == other.relation_vocabulary
            && self.inverse_primary == other.inverse_primary
            && self.inverse_secondary == other.inverse_secondary
    }
}

/// Assemble a model from a taxonomy, stimuli and their annotations. Every
/// stimulus must have a primary annotation referencing a surviving concept.
pub fn build_model(
    tax: &TaxonomyGraph,
    stimuli: &[Stimulus],
    annotations: &AnnotationStore,
    relations: &[RelationAssertion],
    base_iri: &str,
) -> Result<OntologyModel, OntologyError> {
    let mut individuals = Vec::new();
    let mut inverse_primary = Vec::new();
    let mut inverse_secondary = Vec::new();

    for stim in stimuli {
        let anns = annotations
            .get(&stim.id)
            .ok_or_else(|| OntologyError::MissingPrimaryAnnotation(stim.id.clone()))?;
        let primary = anns
            .primary
            .clone()
            .ok_or_else(|| OntologyError::MissingPrimaryAnnotation(stim.id.clone()))?;
        if !tax.contains(&primary) {
            return Err(OntologyError::UnknownConcept {
                stimulus: stim.id.clone(),
                concept: primary,
            });
        }
        let mut secondaries: Vec<(ConceptId, f64)> = Vec::new();
        for cloud_entry in &anns.contributions {
            if !tax.contains(&cloud_entry.concept) {
                return Err(OntologyError::UnknownConcept {
                    stimulus: stim.id.clone(),
                    concept: cloud_entry.concept.clone(),
                });
            }
        }
        // Collapse per-contributor weights into one normalized link per
        // concept via the tag cloud (primary excluded).
        let cloud = annotations
            .tag_cloud(&stim.id, false)
            .expect("stimulus known to the store");
        for (concept, weight) in cloud.entries {
            secondaries.push((concept, weight));
        }
        secondaries.sort_by(|a, b| a.0.cmp(&b.0));

        inverse_primary.push((primary.clone(), stim.id.clone()));
        for (concept, _) in &secondaries {
            inverse_secondary.push((concept.clone(), stim.id.clone()));
        }
        individuals.push(StimulusIndividual {
            stimulus_id: stim.id.clone(),
            pleasure: stim.affect.pleasure,
            arousal: stim.affect.arousal,
            resource: stim.resource.clone(),
            primaries: vec![primary],
            secondaries,
        });
    }

    for rel in relations {
        for c in [&rel.subject, &rel.object] {
            if !tax.contains(c) {
                return Err(OntologyError::UnknownRelationConcept(c.clone()));
            }
        }
    }

    let mut vocabulary: Vec<String> = relations.iter().map(|r| r.predicate.clone()).collect();
    vocabulary.sort();
    vocabulary.dedup();

    individuals.sort_by(|a, b| a.stimulus_id.cmp(&b.stimulus_id));
    inverse_primary.sort();
    inverse_secondary.sort();
    let mut concept_relations = relations.to_vec();
    concept_relations.sort();

    Ok(OntologyModel {
        base_iri: base_iri.to_string(),
        concepts: tax.clone(),
        stimuli: individuals,
        concept_relations,
        relation_vocabulary: vocabulary,
        inverse_primary,
        inverse_secondary,
    })
}

/// Check every model constraint; violations are data, not errors.
pub fn validate_model(model: &OntologyModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen_ids = std::collections::HashSet::new();

    for stim in &model.stimuli {
        let id = &stim.stimulus_id;
        if !seen_ids.insert(id.clone()) {
            report
                .violations
                .push(Violation::DuplicateStimulus { stimulus: id.clone() });
        }
        if stim.primaries.len() != 1 {
            report.violations.push(Violation::PrimaryCardinality {
                stimulus: id.clone(),
                count: stim.primaries.len(),
            });
        }
        for (axis, value) in [("pleasure", stim.pleasure), ("arousal", stim.arousal)] {
            if !(1.0..=9.0).contains(&value) {
                report.violations.push(Violation::AffectOutOfRange {
                    stimulus: id.clone(),
                    axis,
                    value,
                });
            }
        }
        for concept in &stim.primaries {
            if !model.concepts.contains(concept) {
                report.violations.push(Violation::UnknownConcept {
                    stimulus: id.clone(),
                    concept: concept.clone(),
                });
            }
        }
        let mut seen_secondaries = std::collections::HashSet::new();
        for (concept, weight) in &stim.secondaries {
            if !model.concepts.contains(concept) {
                report.violations.push(Violation::UnknownConcept {
                    stimulus: id.clone(),
                    concept: concept.clone(),
                });
            }
            if !seen_secondaries.insert(concept.clone()) {
                report.violations.push(Violation::DuplicateSecondary {
                    stimulus: id.clone(),
                    concept: concept.clone(),
                });
            }
            if stim.primaries.contains(concept) {
                report.violations.push(Violation::SecondaryEqualsPrimary {
                    stimulus: id.clone(),
                    concept: concept.clone(),
                });
            }
            if !(*weight > 0.0 && *weight <= 1.0) {
                report.violations.push(Violation::WeightOutOfRange {
                    stimulus: id.clone(),
                    concept: concept.clone(),
                    weight: *weight,
                });
            }
        }
        if stim.secondaries.is_empty() {
            report
                .notes
                .push(format!("stimulus `{id}` has no secondary meanings"));
        }

        // Inverse property symmetry against the rendered triples.
        for concept in &stim.primaries {
            if !model
                .inverse_primary
                .contains(&(concept.clone(), id.clone()))
            {
                report.violations.push(Violation::AsymmetricInverse {
                    property: "isPrimaryMeaningOf",
                    stimulus: id.clone(),
                    concept: concept.clone(),
                });
            }
        }
        for (concept, _) in &stim.secondaries {
            if !model
                .inverse_secondary
                .contains(&(concept.clone(), id.clone()))
            {
                report.violations.push(Violation::AsymmetricInverse {
                    property: "isSecondaryMeaningOf",
                    stimulus: id.clone(),
                    concept: concept.clone(),
                });
            }
        }
    }

    for rel in &model.concept_relations {
        if !model.relation_vocabulary.contains(&rel.predicate) {
            report.violations.push(Violation::UndeclaredPredicate {
                predicate: rel.predicate.clone(),
            });
        }
        for c in [&rel.subject, &rel.object] {
            if !model.concepts.contains(c) {
                report
                    .violations
                    .push(Violation::UnknownRelationConcept { concept: c.clone() });
            }
        }
    }

    report
}

/// Percent-encode a concept or stimulus id for use as an IRI fragment.
pub(crate) fn encode_id(id: &str) -> String {
    let mut out = String::new();
    for b in id.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'_' | b'-' | b'.' | b'~' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

pub(crate) fn decode_id(encoded: &str) -> Result<String, OntologyError> {
    let bytes = encoded.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if i + 2 >= bytes.len() + 1 {
                return Err(OntologyError::Xml(format!("bad escape in `{encoded}`")));
            }
            let hex = std::str::from_utf8(&bytes[i + 1..i + 3])
                .map_err(|_| OntologyError::Xml(format!("bad escape in `{encoded}`")))?;
            let b = u8::from_str_radix(hex, 16)
                .map_err(|_| OntologyError::Xml(format!("bad escape in `{encoded}`")))?;
            out.push(b);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| OntologyError::Xml(format!("bad utf8 in `{encoded}`")))
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::annotations::AnnotationStore;
    use crate::lexicon::mini_lexicon;
    use crate::manifest::{AffectPoint, MediaKind, Stimulus};
    use crate::taxonomy::build_taxonomy;

    pub fn prison_model() -> OntologyModel {
        let lex = mini_lexicon();
        let tax = build_taxonomy(
            &lex,
            &[
                "prison#n#1".to_string(),
                "jungle#n#1".to_string(),
                "confinement#n#1".to_string(),
            ],
        )
        .unwrap();
        let stimuli = vec![Stimulus {
            id: "6000".to_string(),
            resource: "file:///data/6000.jpg".to_string(),
            media_kind: MediaKind::Image,
            affect: AffectPoint {
                pleasure: 2.89,
                arousal: 5.8,
            },
            raw_keyword: "Prison".to_string(),
        }];
        let mut store = AnnotationStore::new();
        store.set_primary("6000", "prison#n#1".to_string());
        store
            .assign_secondary("6000", "alice", "confinement#n#1", 0.8)
            .unwrap();
        store
            .assign_secondary("6000", "bob", "jungle#n#1", 0.4)
            .unwrap();
        let relations = vec![RelationAssertion {
            subject: "prison#n#1".to_string(),
            predicate: "can_cause".to_string(),
            object: "confinement#n#1".to_string(),
        }];
        build_model(&tax, &stimuli, &store, &relations, DEFAULT_BASE_IRI).unwrap()
    }
}
