//! RDF/XML reader for the OWL dialect produced by [`super::serialize_owl`].
//! Documents using constructs outside that dialect are rejected rather than
//! silently dropped.

use std::collections::HashMap;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{decode_id, OntologyError, OntologyModel, RelationAssertion, StimulusIndividual};
use crate::taxonomy::{ConceptNode, TaxonomyGraph};

const BUILTIN_OBJECT_PROPERTIES: [&str; 4] = [
    "hasPrimaryMeaning",
    "hasSecondaryMeaning",
    "isPrimaryMeaningOf",
    "isSecondaryMeaningOf",
];

fn xml_err(e: impl std::fmt::Display) -> OntologyError {
    OntologyError::Xml(e.to_string())
}

fn truncated() -> OntologyError {
    OntologyError::Xml("unexpected end of document".to_string())
}

fn name_of(e: &BytesStart) -> String {
    String::from_utf8_lossy(e.name().as_ref()).into_owned()
}

fn attr(e: &BytesStart, key: &str) -> Result<Option<String>, OntologyError> {
    for a in e.attributes() {
        let a = a.map_err(xml_err)?;
        if a.key.as_ref() == key.as_bytes() {
            return Ok(Some(a.unescape_value().map_err(xml_err)?.into_owned()));
        }
    }
    Ok(None)
}

fn require_attr(e: &BytesStart, key: &str) -> Result<String, OntologyError> {
    attr(e, key)?.ok_or_else(|| {
        OntologyError::Xml(format!("element `{}` is missing `{key}`", name_of(e)))
    })
}

/// Strip `{base}#` from an IRI, leaving the (still encoded) fragment.
fn fragment(iri: &str, base: &str) -> Result<String, OntologyError> {
    iri.strip_prefix(base)
        .and_then(|rest| rest.strip_prefix('#'))
        .map(str::to_string)
        .ok_or_else(|| OntologyError::Xml(format!("IRI `{iri}` is outside base `{base}`")))
}

fn concept_from_proxy(frag: &str) -> Result<String, OntologyError> {
    frag.strip_suffix("_c")
        .ok_or_else(|| OntologyError::Xml(format!("`{frag}` is not a concept proxy IRI")))
        .and_then(decode_id)
}

fn stimulus_from_iri(frag: &str) -> Result<String, OntologyError> {
    frag.strip_prefix("stim_")
        .ok_or_else(|| OntologyError::Xml(format!("`{frag}` is not a stimulus IRI")))
        .and_then(decode_id)
}

/// Read the text content of an element just opened with `open`, consuming
/// its end tag.
fn read_text(reader: &mut Reader<&[u8]>, open: &BytesStart) -> Result<String, OntologyError> {
    let mut text = String::new();
    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Text(t) => text.push_str(&t.unescape().map_err(xml_err)?),
            Event::End(e) if e.name() == open.name() => return Ok(text),
            Event::Eof => return Err(truncated()),
            other => {
                return Err(OntologyError::Xml(format!(
                    "unexpected {other:?} inside `{}`",
                    name_of(open)
                )))
            }
        }
    }
}

/// Consume events until the end tag matching `open`, ignoring content.
fn skip_element(reader: &mut Reader<&[u8]>, open: &BytesStart) -> Result<(), OntologyError> {
    let mut depth = 0usize;
    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Start(_) => depth += 1,
            Event::End(e) => {
                if depth == 0 && e.name() == open.name() {
                    return Ok(());
                }
                depth = depth.saturating_sub(1);
            }
            Event::Eof => return Err(truncated()),
            _ => {}
        }
    }
}

#[derive(Default)]
struct PendingStimulus {
    pleasure: Option<f64>,
    arousal: Option<f64>,
    resource: Option<String>,
    primaries: Vec<String>,
    secondaries: Vec<String>,
}

/// Parse an RDF/XML document back into a model. The result is not validated;
/// run [`super::validate_model`] to check the constraints.
pub fn parse_owl(input: &str) -> Result<OntologyModel, OntologyError> {
    let mut reader = Reader::from_str(input);
    reader.config_mut().trim_text(true);
    let mut reader: Reader<&[u8]> = reader;

    // Skip the prolog and open rdf:RDF.
    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Decl(_) | Event::Comment(_) | Event::DocType(_) => {}
            Event::Start(e) if e.name().as_ref() == b"rdf:RDF" => break,
            Event::Eof => return Err(truncated()),
            other => {
                return Err(OntologyError::Xml(format!(
                    "expected rdf:RDF root, found {other:?}"
                )))
            }
        }
    }

    let mut base_iri: Option<String> = None;
    let mut nodes: Vec<ConceptNode> = Vec::new();
    let mut stimuli: Vec<(String, PendingStimulus)> = Vec::new();
    let mut relations: Vec<RelationAssertion> = Vec::new();
    let mut vocabulary: Vec<String> = Vec::new();
    let mut inverse_primary: Vec<(String, String)> = Vec::new();
    let mut inverse_secondary: Vec<(String, String)> = Vec::new();
    // (stimulus, concept) -> annotated weight for secondary links.
    let mut weights: HashMap<(String, String), f64> = HashMap::new();

    loop {
        let event = reader.read_event().map_err(xml_err)?;
        let (start, is_empty) = match event {
            Event::Start(e) => (e.into_owned(), false),
            Event::Empty(e) => (e.into_owned(), true),
            Event::End(e) if e.name().as_ref() == b"rdf:RDF" => break,
            Event::Comment(_) => continue,
            Event::Eof => return Err(truncated()),
            other => {
                return Err(OntologyError::Xml(format!(
                    "unexpected {other:?} at top level"
                )))
            }
        };
        let name = name_of(&start);

        if name == "owl:Ontology" {
            base_iri = Some(require_attr(&start, "rdf:about")?);
            if !is_empty {
                skip_element(&mut reader, &start)?;
            }
            continue;
        }
        let base = base_iri
            .as_deref()
            .ok_or_else(|| OntologyError::Xml("missing owl:Ontology header".to_string()))?
            .to_string();

        match name.as_str() {
            "owl:Class" => {
                let frag = fragment(&require_attr(&start, "rdf:about")?, &base)?;
                if frag == "DescribingConcept" || frag == "Stimulus" {
                    if !is_empty {
                        skip_element(&mut reader, &start)?;
                    }
                    continue;
                }
                let concept_id = decode_id(&frag)?;
                let mut label: Option<String> = None;
                let mut parents: Vec<String> = Vec::new();
                if !is_empty {
                    loop {
                        match reader.read_event().map_err(xml_err)? {
                            Event::Start(e) if e.name().as_ref() == b"rdfs:label" => {
                                label = Some(read_text(&mut reader, &e.to_owned())?);
                            }
                            Event::Empty(e) if e.name().as_ref() == b"rdfs:subClassOf" => {
                                let f = fragment(&require_attr(&e, "rdf:resource")?, &base)?;
                                if f != "DescribingConcept" {
                                    parents.push(decode_id(&f)?);
                                }
                            }
                            Event::End(e) if e.name() == start.name() => break,
                            Event::Eof => return Err(truncated()),
                            other => {
                                return Err(OntologyError::UnsupportedConstruct(format!(
                                    "{other:?} inside owl:Class `{concept_id}`"
                                )))
                            }
                        }
                    }
                }
                parents.sort();
                let label = label.ok_or_else(|| {
                    OntologyError::Xml(format!("concept class `{concept_id}` has no rdfs:label"))
                })?;
                nodes.push(ConceptNode {
                    concept_id,
                    label,
                    source_synset: None,
                    parents,
                });
            }
            "owl:ObjectProperty" => {
                let frag = fragment(&require_attr(&start, "rdf:about")?, &base)?;
                if BUILTIN_OBJECT_PROPERTIES.contains(&frag.as_str()) {
                    if !is_empty {
                        // the only child we emit here is owl:inverseOf
                        loop {
                            match reader.read_event().map_err(xml_err)? {
                                Event::Empty(e) if e.name().as_ref() == b"owl:inverseOf" => {}
                                Event::End(e) if e.name() == start.name() => break,
                                Event::Eof => return Err(truncated()),
                                other => {
                                    return Err(OntologyError::UnsupportedConstruct(format!(
                                        "{other:?} inside owl:ObjectProperty `{frag}`"
                                    )))
                                }
                            }
                        }
                    }
                } else if let Some(rest) = frag.strip_prefix("rel_") {
                    vocabulary.push(decode_id(rest)?);
                    if !is_empty {
                        skip_element(&mut reader, &start)?;
                    }
                } else {
                    return Err(OntologyError::UnsupportedConstruct(format!(
                        "owl:ObjectProperty `{frag}`"
                    )));
                }
            }
            "owl:DatatypeProperty" => {
                let frag = fragment(&require_attr(&start, "rdf:about")?, &base)?;
                if !matches!(frag.as_str(), "arousal" | "pleasure" | "resource") {
                    return Err(OntologyError::UnsupportedConstruct(format!(
                        "owl:DatatypeProperty `{frag}`"
                    )));
                }
                if !is_empty {
                    skip_element(&mut reader, &start)?;
                }
            }
            "owl:AnnotationProperty" => {
                let frag = fragment(&require_attr(&start, "rdf:about")?, &base)?;
                if frag != "weight" {
                    return Err(OntologyError::UnsupportedConstruct(format!(
                        "owl:AnnotationProperty `{frag}`"
                    )));
                }
                if !is_empty {
                    skip_element(&mut reader, &start)?;
                }
            }
            "owl:NamedIndividual" => {
                let frag = fragment(&require_attr(&start, "rdf:about")?, &base)?;
                if frag.starts_with("stim_") {
                    let id = stimulus_from_iri(&frag)?;
                    let mut pending = PendingStimulus::default();
                    if !is_empty {
                        parse_stimulus(&mut reader, &start, &base, &id, &mut pending)?;
                    }
                    stimuli.push((id, pending));
                } else if frag.ends_with("_c") {
                    let subject = concept_from_proxy(&frag)?;
                    if !is_empty {
                        parse_proxy(
                            &mut reader,
                            &start,
                            &base,
                            &subject,
                            &mut relations,
                            &mut inverse_primary,
                            &mut inverse_secondary,
                        )?;
                    }
                } else {
                    return Err(OntologyError::UnsupportedConstruct(format!(
                        "owl:NamedIndividual `{frag}`"
                    )));
                }
            }
            "owl:Axiom" => {
                if is_empty {
                    return Err(OntologyError::Xml("empty owl:Axiom".to_string()));
                }
                parse_axiom(&mut reader, &start, &base, &mut weights)?;
            }
            other => return Err(OntologyError::UnsupportedConstruct(other.to_string())),
        }
    }

    let base_iri =
        base_iri.ok_or_else(|| OntologyError::Xml("missing owl:Ontology header".to_string()))?;

    let concepts = TaxonomyGraph::from_nodes(nodes, [])?;

    let mut individuals = Vec::new();
    for (id, pending) in stimuli {
        let missing =
            |field: &str| OntologyError::Xml(format!("stimulus `{id}` is missing aff:{field}"));
        let mut primaries = pending.primaries;
        primaries.sort();
        let mut secondaries: Vec<(String, f64)> = pending
            .secondaries
            .into_iter()
            .map(|concept| {
                // links without a weight axiom carry full weight
                let w = weights
                    .get(&(id.clone(), concept.clone()))
                    .copied()
                    .unwrap_or(1.0);
                (concept, w)
            })
            .collect();
        secondaries.sort_by(|a, b| a.0.cmp(&b.0));
        individuals.push(StimulusIndividual {
            pleasure: pending.pleasure.ok_or_else(|| missing("pleasure"))?,
            arousal: pending.arousal.ok_or_else(|| missing("arousal"))?,
            resource: pending.resource.ok_or_else(|| missing("resource"))?,
            stimulus_id: id,
            primaries,
            secondaries,
        });
    }
    individuals.sort_by(|a, b| a.stimulus_id.cmp(&b.stimulus_id));

    vocabulary.sort();
    vocabulary.dedup();
    relations.sort();
    inverse_primary.sort();
    inverse_secondary.sort();

    Ok(OntologyModel {
        base_iri,
        concepts,
        stimuli: individuals,
        concept_relations: relations,
        relation_vocabulary: vocabulary,
        inverse_primary,
        inverse_secondary,
    })
}

fn parse_f64(text: &str, what: &str) -> Result<f64, OntologyError> {
    text.trim()
        .parse()
        .map_err(|_| OntologyError::Xml(format!("bad {what} value `{text}`")))
}

fn parse_stimulus(
    reader: &mut Reader<&[u8]>,
    open: &BytesStart,
    base: &str,
    id: &str,
    pending: &mut PendingStimulus,
) -> Result<(), OntologyError> {
    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Empty(e) => match e.name().as_ref() {
                b"rdf:type" => {
                    let f = fragment(&require_attr(&e, "rdf:resource")?, base)?;
                    if f != "Stimulus" {
                        return Err(OntologyError::Xml(format!(
                            "stimulus `{id}` has rdf:type `{f}`"
                        )));
                    }
                }
                b"aff:hasPrimaryMeaning" => {
                    let f = fragment(&require_attr(&e, "rdf:resource")?, base)?;
                    pending.primaries.push(concept_from_proxy(&f)?);
                }
                b"aff:hasSecondaryMeaning" => {
                    let f = fragment(&require_attr(&e, "rdf:resource")?, base)?;
                    pending.secondaries.push(concept_from_proxy(&f)?);
                }
                _ => {
                    return Err(OntologyError::UnsupportedConstruct(format!(
                        "`{}` on stimulus `{id}`",
                        name_of(&e)
                    )))
                }
            },
            Event::Start(e) => {
                let e = e.into_owned();
                let text = read_text(reader, &e)?;
                match e.name().as_ref() {
                    b"aff:pleasure" => pending.pleasure = Some(parse_f64(&text, "pleasure")?),
                    b"aff:arousal" => pending.arousal = Some(parse_f64(&text, "arousal")?),
                    b"aff:resource" => pending.resource = Some(text),
                    _ => {
                        return Err(OntologyError::UnsupportedConstruct(format!(
                            "`{}` on stimulus `{id}`",
                            name_of(&e)
                        )))
                    }
                }
            }
            Event::End(e) if e.name() == open.name() => return Ok(()),
            Event::Eof => return Err(truncated()),
            other => {
                return Err(OntologyError::Xml(format!(
                    "unexpected {other:?} in stimulus `{id}`"
                )))
            }
        }
    }
}

fn parse_proxy(
    reader: &mut Reader<&[u8]>,
    open: &BytesStart,
    base: &str,
    subject: &str,
    relations: &mut Vec<RelationAssertion>,
    inverse_primary: &mut Vec<(String, String)>,
    inverse_secondary: &mut Vec<(String, String)>,
) -> Result<(), OntologyError> {
    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Empty(e) => {
                let name = name_of(&e);
                match name.as_str() {
                    "rdf:type" => {}
                    "aff:isPrimaryMeaningOf" => {
                        let f = fragment(&require_attr(&e, "rdf:resource")?, base)?;
                        inverse_primary.push((subject.to_string(), stimulus_from_iri(&f)?));
                    }
                    "aff:isSecondaryMeaningOf" => {
                        let f = fragment(&require_attr(&e, "rdf:resource")?, base)?;
                        inverse_secondary.push((subject.to_string(), stimulus_from_iri(&f)?));
                    }
                    _ => {
                        if let Some(rest) = name.strip_prefix("aff:rel_") {
                            let f = fragment(&require_attr(&e, "rdf:resource")?, base)?;
                            relations.push(RelationAssertion {
                                subject: subject.to_string(),
                                predicate: decode_id(rest)?,
                                object: concept_from_proxy(&f)?,
                            });
                        } else {
                            return Err(OntologyError::UnsupportedConstruct(format!(
                                "`{name}` on concept proxy `{subject}`"
                            )));
                        }
                    }
                }
            }
            Event::End(e) if e.name() == open.name() => return Ok(()),
            Event::Eof => return Err(truncated()),
            other => {
                return Err(OntologyError::Xml(format!(
                    "unexpected {other:?} in concept proxy `{subject}`"
                )))
            }
        }
    }
}

fn parse_axiom(
    reader: &mut Reader<&[u8]>,
    open: &BytesStart,
    base: &str,
    weights: &mut HashMap<(String, String), f64>,
) -> Result<(), OntologyError> {
    let mut source: Option<String> = None;
    let mut target: Option<String> = None;
    let mut weight: Option<f64> = None;
    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Empty(e) => match e.name().as_ref() {
                b"owl:annotatedSource" => {
                    let f = fragment(&require_attr(&e, "rdf:resource")?, base)?;
                    source = Some(stimulus_from_iri(&f)?);
                }
                b"owl:annotatedProperty" => {
                    let f = fragment(&require_attr(&e, "rdf:resource")?, base)?;
                    if f != "hasSecondaryMeaning" {
                        return Err(OntologyError::UnsupportedConstruct(format!(
                            "owl:Axiom over property `{f}`"
                        )));
                    }
                }
                b"owl:annotatedTarget" => {
                    let f = fragment(&require_attr(&e, "rdf:resource")?, base)?;
                    target = Some(concept_from_proxy(&f)?);
                }
                other => {
                    return Err(OntologyError::UnsupportedConstruct(format!(
                        "`{}` in owl:Axiom",
                        String::from_utf8_lossy(other)
                    )))
                }
            },
            Event::Start(e) if e.name().as_ref() == b"aff:weight" => {
                let e = e.into_owned();
                weight = Some(parse_f64(&read_text(reader, &e)?, "weight")?);
            }
            Event::End(e) if e.name() == open.name() => break,
            Event::Eof => return Err(truncated()),
            other => {
                return Err(OntologyError::Xml(format!(
                    "unexpected {other:?} in owl:Axiom"
                )))
            }
        }
    }
    match (source, target, weight) {
        (Some(s), Some(t), Some(w)) => {
            weights.insert((s, t), w);
            Ok(())
        }
        _ => Err(OntologyError::Xml(
            "incomplete owl:Axiom annotation".to_string(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::prison_model;
    use super::super::{serialize_owl, validate_model, OntologyError, Violation};
    use super::*;

    #[test]
    fn round_trip_is_byte_identical() {
        let model = prison_model();
        let doc = serialize_owl(&model).unwrap();
        let parsed = parse_owl(&doc).unwrap();
        assert!(parsed.structurally_equal(&model));
        assert_eq!(serialize_owl(&parsed).unwrap(), doc);
    }

    #[test]
    fn truncated_document_errors() {
        let doc = serialize_owl(&prison_model()).unwrap();
        let cut = &doc[..doc.len() / 2];
        assert!(parse_owl(cut).is_err());
    }

    #[test]
    fn malformed_xml_errors() {
        assert!(parse_owl("<rdf:RDF><oops</rdf:RDF>").is_err());
        assert!(parse_owl("").is_err());
    }

    #[test]
    fn unknown_property_is_unsupported() {
        let doc = serialize_owl(&prison_model()).unwrap();
        let doc = doc.replace(
            "<aff:resource>",
            "<aff:mystery rdf:resource=\"http://example.org/affectont#x_c\"/><aff:resource>",
        );
        match parse_owl(&doc) {
            Err(OntologyError::UnsupportedConstruct(msg)) => {
                assert!(msg.contains("aff:mystery"), "{msg}")
            }
            other => panic!("expected unsupported construct, got {other:?}"),
        }
    }

    #[test]
    fn two_primaries_parse_but_fail_validation() {
        let doc = serialize_owl(&prison_model()).unwrap();
        let extra = "<aff:hasPrimaryMeaning rdf:resource=\"http://example.org/affectont#jungle%23n%231_c\"/>";
        let doc = doc.replace("<aff:resource>", &format!("{extra}<aff:resource>"));
        let parsed = parse_owl(&doc).unwrap();
        assert_eq!(parsed.stimuli[0].primaries.len(), 2);
        let report = validate_model(&parsed);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PrimaryCardinality { count: 2, .. })));
    }

    #[test]
    fn missing_weight_axiom_defaults_to_one() {
        let doc = serialize_owl(&prison_model()).unwrap();
        // drop the axiom annotating the jungle link
        let start = doc.find("  <owl:Axiom>").unwrap();
        let marker = "jungle%23n%231_c\"/>\n    <aff:weight";
        let axiom_start = doc[..doc.find(marker).unwrap()].rfind("  <owl:Axiom>").unwrap();
        let axiom_end = doc[axiom_start..].find("</owl:Axiom>\n").unwrap() + axiom_start + "</owl:Axiom>\n".len();
        assert!(axiom_start >= start);
        let doc = format!("{}{}", &doc[..axiom_start], &doc[axiom_end..]);
        let parsed = parse_owl(&doc).unwrap();
        let secondaries = &parsed.stimuli[0].secondaries;
        // jungle lost its axiom and falls back to 1.0; confinement keeps its
        // normalized cloud weight 0.8 / (0.8 + 0.4)
        assert!(secondaries.contains(&("jungle#n#1".to_string(), 1.0)));
        let confinement = secondaries
            .iter()
            .find(|(c, _)| c == "confinement#n#1")
            .unwrap();
        assert!((confinement.1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dangling_parent_reference_errors() {
        let doc = serialize_owl(&prison_model()).unwrap();
        let doc = doc.replace(
            "#correctional_institution%23n%231\"/>",
            "#ghost%23n%231\"/>",
        );
        assert!(parse_owl(&doc).is_err());
    }
}
