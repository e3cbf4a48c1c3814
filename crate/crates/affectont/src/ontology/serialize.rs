//! Deterministic RDF/XML rendering of an ontology model: 2-space
//! indentation, fixed attribute order, concepts and stimuli sorted by id.

use super::{encode_id, validate_model, OntologyError, OntologyModel};

const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Serialize a validated model. Same model in, identical bytes out.
pub fn serialize_owl(model: &OntologyModel) -> Result<String, OntologyError> {
    let report = validate_model(model);
    if !report.is_valid() {
        return Err(OntologyError::InvalidModel(report));
    }

    let base = &model.base_iri;
    let iri = |frag: &str| format!("{base}#{frag}");
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\" \
         xmlns:rdfs=\"http://www.w3.org/2000/01/rdf-schema#\" \
         xmlns:owl=\"http://www.w3.org/2002/07/owl#\" \
         xmlns:aff=\"{}#\">\n",
        esc(base)
    ));
    out.push_str(&format!("  <owl:Ontology rdf:about=\"{}\"/>\n", esc(base)));

    // Schema: the two root classes, the meaning properties and their
    // inverses, the datatype properties, the weight annotation property and
    // the declared relation vocabulary.
    out.push_str(&format!(
        "  <owl:Class rdf:about=\"{}\"/>\n",
        esc(&iri("DescribingConcept"))
    ));
    out.push_str(&format!(
        "  <owl:Class rdf:about=\"{}\"/>\n",
        esc(&iri("Stimulus"))
    ));
    for (prop, inverse) in [
        ("hasPrimaryMeaning", Some("isPrimaryMeaningOf")),
        ("hasSecondaryMeaning", Some("isSecondaryMeaningOf")),
        ("isPrimaryMeaningOf", None),
        ("isSecondaryMeaningOf", None),
    ] {
        match inverse {
            Some(inv) => {
                out.push_str(&format!(
                    "  <owl:ObjectProperty rdf:about=\"{}\">\n",
                    esc(&iri(prop))
                ));
                out.push_str(&format!(
                    "    <owl:inverseOf rdf:resource=\"{}\"/>\n",
                    esc(&iri(inv))
                ));
                out.push_str("  </owl:ObjectProperty>\n");
            }
            None => out.push_str(&format!(
                "  <owl:ObjectProperty rdf:about=\"{}\"/>\n",
                esc(&iri(prop))
            )),
        }
    }
    for predicate in &model.relation_vocabulary {
        out.push_str(&format!(
            "  <owl:ObjectProperty rdf:about=\"{}\"/>\n",
            esc(&iri(&format!("rel_{}", encode_id(predicate))))
        ));
    }
    for prop in ["arousal", "pleasure", "resource"] {
        out.push_str(&format!(
            "  <owl:DatatypeProperty rdf:about=\"{}\"/>\n",
            esc(&iri(prop))
        ));
    }
    out.push_str(&format!(
        "  <owl:AnnotationProperty rdf:about=\"{}\"/>\n",
        esc(&iri("weight"))
    ));

    // Concept classes and their individual proxies, sorted by concept id.
    let mut concepts: Vec<_> = model.concepts.nodes().collect();
    concepts.sort_by(|a, b| a.concept_id.cmp(&b.concept_id));
    for node in &concepts {
        let enc = encode_id(&node.concept_id);
        out.push_str(&format!(
            "  <owl:Class rdf:about=\"{}\">\n",
            esc(&iri(&enc))
        ));
        out.push_str(&format!(
            "    <rdfs:label>{}</rdfs:label>\n",
            esc(&node.label)
        ));
        out.push_str(&format!(
            "    <rdfs:subClassOf rdf:resource=\"{}\"/>\n",
            esc(&iri("DescribingConcept"))
        ));
        let mut parents = node.parents.clone();
        parents.sort();
        for parent in &parents {
            out.push_str(&format!(
                "    <rdfs:subClassOf rdf:resource=\"{}\"/>\n",
                esc(&iri(&encode_id(parent)))
            ));
        }
        out.push_str("  </owl:Class>\n");

        // Proxy individual carrying relation assertions and inverse meaning
        // links for this concept.
        out.push_str(&format!(
            "  <owl:NamedIndividual rdf:about=\"{}\">\n",
            esc(&iri(&format!("{enc}_c")))
        ));
        out.push_str(&format!(
            "    <rdf:type rdf:resource=\"{}\"/>\n",
            esc(&iri(&enc))
        ));
        let mut relations: Vec<_> = model
            .concept_relations
            .iter()
            .filter(|r| r.subject == node.concept_id)
            .collect();
        relations.sort();
        for rel in relations {
            out.push_str(&format!(
                "    <aff:rel_{} rdf:resource=\"{}\"/>\n",
                encode_id(&rel.predicate),
                esc(&iri(&format!("{}_c", encode_id(&rel.object))))
            ));
        }
        let mut inv_primary: Vec<_> = model
            .inverse_primary
            .iter()
            .filter(|(c, _)| *c == node.concept_id)
            .collect();
        inv_primary.sort();
        for (_, stim) in inv_primary {
            out.push_str(&format!(
                "    <aff:isPrimaryMeaningOf rdf:resource=\"{}\"/>\n",
                esc(&iri(&format!("stim_{}", encode_id(stim))))
            ));
        }
        let mut inv_secondary: Vec<_> = model
            .inverse_secondary
            .iter()
            .filter(|(c, _)| *c == node.concept_id)
            .collect();
        inv_secondary.sort();
        for (_, stim) in inv_secondary {
            out.push_str(&format!(
                "    <aff:isSecondaryMeaningOf rdf:resource=\"{}\"/>\n",
                esc(&iri(&format!("stim_{}", encode_id(stim))))
            ));
        }
        out.push_str("  </owl:NamedIndividual>\n");
    }

    // Stimulus individuals sorted by id.
    let mut stimuli: Vec<_> = model.stimuli.iter().collect();
    stimuli.sort_by(|a, b| a.stimulus_id.cmp(&b.stimulus_id));
    for stim in &stimuli {
        out.push_str(&format!(
            "  <owl:NamedIndividual rdf:about=\"{}\">\n",
            esc(&iri(&format!("stim_{}", encode_id(&stim.stimulus_id))))
        ));
        out.push_str(&format!(
            "    <rdf:type rdf:resource=\"{}\"/>\n",
            esc(&iri("Stimulus"))
        ));
        out.push_str(&format!(
            "    <aff:pleasure rdf:datatype=\"{XSD_DECIMAL}\">{}</aff:pleasure>\n",
            stim.pleasure
        ));
        out.push_str(&format!(
            "    <aff:arousal rdf:datatype=\"{XSD_DECIMAL}\">{}</aff:arousal>\n",
            stim.arousal
        ));
        out.push_str(&format!(
            "    <aff:resource>{}</aff:resource>\n",
            esc(&stim.resource)
        ));
        let mut primaries = stim.primaries.clone();
        primaries.sort();
        for concept in &primaries {
            out.push_str(&format!(
                "    <aff:hasPrimaryMeaning rdf:resource=\"{}\"/>\n",
                esc(&iri(&format!("{}_c", encode_id(concept))))
            ));
        }
        let mut secondaries = stim.secondaries.clone();
        secondaries.sort_by(|a, b| a.0.cmp(&b.0));
        for (concept, _) in &secondaries {
            out.push_str(&format!(
                "    <aff:hasSecondaryMeaning rdf:resource=\"{}\"/>\n",
                esc(&iri(&format!("{}_c", encode_id(concept))))
            ));
        }
        out.push_str("  </owl:NamedIndividual>\n");
    }

    // Secondary-meaning weights as axiom annotations, sorted by
    // (stimulus, concept).
    for stim in &stimuli {
        let mut secondaries = stim.secondaries.clone();
        secondaries.sort_by(|a, b| a.0.cmp(&b.0));
        for (concept, weight) in &secondaries {
            out.push_str("  <owl:Axiom>\n");
            out.push_str(&format!(
                "    <owl:annotatedSource rdf:resource=\"{}\"/>\n",
                esc(&iri(&format!("stim_{}", encode_id(&stim.stimulus_id))))
            ));
            out.push_str(&format!(
                "    <owl:annotatedProperty rdf:resource=\"{}\"/>\n",
                esc(&iri("hasSecondaryMeaning"))
            ));
            out.push_str(&format!(
                "    <owl:annotatedTarget rdf:resource=\"{}\"/>\n",
                esc(&iri(&format!("{}_c", encode_id(concept))))
            ));
            out.push_str(&format!(
                "    <aff:weight rdf:datatype=\"{XSD_DECIMAL}\">{weight}</aff:weight>\n"
            ));
            out.push_str("  </owl:Axiom>\n");
        }
    }

    out.push_str("</rdf:RDF>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::prison_model;
    use super::super::{build_model, DEFAULT_BASE_IRI};
    use super::*;
    use crate::annotations::AnnotationStore;
    use crate::taxonomy::TaxonomyGraph;

    #[test]
    fn subclass_axiom_present() {
        let doc = serialize_owl(&prison_model()).unwrap();
        assert!(doc.contains(
            "<owl:Class rdf:about=\"http://example.org/affectont#prison%23n%231\">"
        ));
        assert!(doc.contains(
            "<rdfs:subClassOf rdf:resource=\"http://example.org/affectont#correctional_institution%23n%231\"/>"
        ));
    }

    #[test]
    fn empty_model_has_schema_only() {
        let model = build_model(
            &TaxonomyGraph::default(),
            &[],
            &AnnotationStore::new(),
            &[],
            DEFAULT_BASE_IRI,
        )
        .unwrap();
        let doc = serialize_owl(&model).unwrap();
        assert_eq!(doc.matches("<owl:Class ").count(), 2);
        assert_eq!(doc.matches("<owl:ObjectProperty ").count(), 4);
        assert_eq!(doc.matches("<owl:DatatypeProperty ").count(), 3);
        assert!(!doc.contains("stim_"));
    }

    #[test]
    fn serialization_is_deterministic() {
        let model = prison_model();
        assert_eq!(serialize_owl(&model).unwrap(), serialize_owl(&model).unwrap());
    }

    #[test]
    fn exactly_one_primary_triple_per_stimulus() {
        let doc = serialize_owl(&prison_model()).unwrap();
        assert_eq!(doc.matches("<aff:hasPrimaryMeaning ").count(), 1);
        assert_eq!(doc.matches("<aff:isPrimaryMeaningOf ").count(), 1);
    }

    #[test]
    fn invalid_model_rejected() {
        let mut model = prison_model();
        model.stimuli[0].pleasure = 42.0;
        assert!(serialize_owl(&model).is_err());
    }
}
