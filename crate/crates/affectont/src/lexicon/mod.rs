//! WordNet-style lexical graph: synsets with hypernym/hyponym edges.

mod simple;
mod wndb;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use simple::load_simple;
pub use wndb::load_wndb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl Pos {
    pub fn letter(&self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
            Pos::Adjective => 'a',
            Pos::Adverb => 'r',
        }
    }

    pub fn from_letter(c: char) -> Option<Pos> {
        match c {
            'n' => Some(Pos::Noun),
            'v' => Some(Pos::Verb),
            'a' | 's' => Some(Pos::Adjective),
            'r' => Some(Pos::Adverb),
            _ => None,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Opaque synset identifier: `lemma#pos#sense` in the simple format,
/// `offset-pos` in WNDB mode.
pub type SynsetId = String;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub id: SynsetId,
    pub lemmas: Vec<String>,
    pub pos: Pos,
    pub gloss: String,
    pub hypernyms: Vec<SynsetId>,
    pub hyponyms: Vec<SynsetId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconFormat {
    Wndb,
    Simple,
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub synsets: usize,
    /// Inverse edges that were missing in the source and added at load time.
    pub repaired_edges: usize,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{file}:{line}: malformed line: {reason}")]
    MalformedLine {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("synset `{from}` references missing synset `{to}`")]
    DanglingEdge { from: SynsetId, to: SynsetId },
    #[error("cycle detected in noun hypernym graph involving `{0}`")]
    HypernymCycle(SynsetId),
    #[error("unknown synset id `{0}`")]
    UnknownSynset(SynsetId),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Immutable lexical graph. Lemma index preserves source sense order.
#[derive(Debug)]
pub struct LexiconGraph {
    synsets: BTreeMap<SynsetId, Synset>,
    lemma_index: HashMap<(String, Pos), Vec<SynsetId>>,
    report: LoadReport,
}

impl LexiconGraph {
    /// Build a graph from synsets, checking edge integrity and repairing
    /// missing inverse links.
    pub fn from_synsets(synsets: Vec<Synset>) -> Result<Self, LexiconError> {
        let mut map: BTreeMap<SynsetId, Synset> = BTreeMap::new();
        for s in synsets {
            map.insert(s.id.clone(), s);
        }

        // Integrity: every referenced id exists.
        for s in map.values() {
            for target in s.hypernyms.iter().chain(s.hyponyms.iter()) {
                if !map.contains_key(target) {
                    return Err(LexiconError::DanglingEdge {
                        from: s.id.clone(),
                        to: target.clone(),
                    });
                }
            }
        }

        // Repair missing inverse edges.
        let mut repaired = 0usize;
        let ids: Vec<SynsetId> = map.keys().cloned().collect();
        for id in &ids {
            let hypernyms = map[id].hypernyms.clone();
            for h in hypernyms {
                let target = map.get_mut(&h).unwrap();
                if !target.hyponyms.contains(id) {
                    target.hyponyms.push(id.clone());
                    repaired += 1;
                }
            }
            let hyponyms = map[id].hyponyms.clone();
            for h in hyponyms {
                let target = map.get_mut(&h).unwrap();
                if !target.hypernyms.contains(id) {
                    target.hypernyms.push(id.clone());
                    repaired += 1;
                }
            }
        }

        let graph = LexiconGraph {
            lemma_index: build_lemma_index(&map),
            report: LoadReport {
                synsets: map.len(),
                repaired_edges: repaired,
            },
            synsets: map,
        };
        graph.check_noun_acyclicity()?;
        Ok(graph)
    }

    fn check_noun_acyclicity(&self) -> Result<(), LexiconError> {
        // Kahn's algorithm over noun hypernym edges.
        let nouns: Vec<&Synset> = self
            .synsets
            .values()
            .filter(|s| s.pos == Pos::Noun)
            .collect();
        let mut indegree: HashMap<&str, usize> = nouns.iter().map(|s| (s.id.as_str(), 0)).collect();
        for s in &nouns {
            for h in &s.hypernyms {
                if let Some(d) = indegree.get_mut(h.as_str()) {
                    *d += 1;
                }
            }
        }
        let mut queue: VecDeque<&str> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&id, _)| id)
            .collect();
        let mut visited = 0usize;
        while let Some(id) = queue.pop_front() {
            visited += 1;
            for h in &self.synsets[id].hypernyms {
                if let Some(d) = indegree.get_mut(h.as_str()) {
                    *d -= 1;
                    if *d == 0 {
                        queue.push_back(h.as_str());
                    }
                }
            }
        }
        if visited != nouns.len() {
            let culprit = nouns
                .iter()
                .find(|s| indegree[s.id.as_str()] > 0)
                .map(|s| s.id.clone())
                .unwrap_or_default();
            return Err(LexiconError::HypernymCycle(culprit));
        }
        Ok(())
    }

    pub fn load(path: &Path, format: LexiconFormat) -> Result<Self, LexiconError> {
        match format {
            LexiconFormat::Simple => load_simple(path),
            LexiconFormat::Wndb => load_wndb(path),
        }
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Synset> {
        self.synsets.get(id)
    }

    pub fn synsets(&self) -> impl Iterator<Item = &Synset> {
        self.synsets.values()
    }

    /// Senses of `lemma`, optionally restricted by part of speech, in stored
    /// sense order. Absent lemmas yield an empty list.
    pub fn lookup_lemma(&self, lemma: &str, pos: Option<Pos>) -> Vec<&Synset> {
        let poses: Vec<Pos> = match pos {
            Some(p) => vec![p],
            None => vec![Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb],
        };
        let mut out = Vec::new();
        for p in poses {
            if let Some(ids) = self.lemma_index.get(&(lemma.to_string(), p)) {
                out.extend(ids.iter().map(|id| &self.synsets[id]));
            }
        }
        out
    }

    pub fn contains_lemma(&self, lemma: &str) -> bool {
        [Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb]
            .iter()
            .any(|&p| self.lemma_index.contains_key(&(lemma.to_string(), p)))
    }

    /// Preferred part of speech for a lemma: noun > verb > adjective > adverb.
    pub fn preferred_pos(&self, lemma: &str) -> Option<Pos> {
        [Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb]
            .into_iter()
            .find(|&p| self.lemma_index.contains_key(&(lemma.to_string(), p)))
    }

    fn closure(
        &self,
        start: &str,
        edges: impl Fn(&Synset) -> &[SynsetId],
    ) -> Result<Vec<(SynsetId, usize)>, LexiconError> {
        if !self.synsets.contains_key(start) {
            return Err(LexiconError::UnknownSynset(start.to_string()));
        }
        let mut depth: BTreeMap<SynsetId, usize> = BTreeMap::new();
        let mut queue: VecDeque<(SynsetId, usize)> = VecDeque::new();
        queue.push_back((start.to_string(), 0));
        let mut seen: HashSet<SynsetId> = HashSet::new();
        seen.insert(start.to_string());
        while let Some((id, d)) = queue.pop_front() {
            for next in edges(&self.synsets[&id]) {
                if seen.insert(next.clone()) {
                    depth.insert(next.clone(), d + 1);
                    queue.push_back((next.clone(), d + 1));
                }
            }
        }
        let mut out: Vec<(SynsetId, usize)> = depth.into_iter().collect();
        out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }

    /// Breadth-first ancestors with minimal depth; `start` excluded.
    /// Ordered by (depth, id).
    pub fn hypernym_closure(&self, start: &str) -> Result<Vec<(SynsetId, usize)>, LexiconError> {
        self.closure(start, |s| &s.hypernyms)
    }

    /// Breadth-first descendants with minimal depth; `start` excluded.
    pub fn hyponym_closure(&self, start: &str) -> Result<Vec<(SynsetId, usize)>, LexiconError> {
        self.closure(start, |s| &s.hyponyms)
    }

    /// Synsets sharing at least one direct hypernym with `start`.
    pub fn coordinate_terms(&self, start: &str) -> Result<HashSet<SynsetId>, LexiconError> {
        let s = self
            .synsets
            .get(start)
            .ok_or_else(|| LexiconError::UnknownSynset(start.to_string()))?;
        let mut out = HashSet::new();
        for h in &s.hypernyms {
            for sibling in &self.synsets[h].hyponyms {
                if sibling != start {
                    out.insert(sibling.clone());
                }
            }
        }
        Ok(out)
    }

    /// Shortest path length in edges over the undirected hypernym/hyponym
    /// graph, or `None` when the pair is disconnected.
    pub fn semantic_distance(&self, a: &str, b: &str) -> Result<Option<usize>, LexiconError> {
        for id in [a, b] {
            if !self.synsets.contains_key(id) {
                return Err(LexiconError::UnknownSynset(id.to_string()));
            }
        }
        if a == b {
            return Ok(Some(0));
        }
        let mut seen: HashSet<&str> = HashSet::new();
        let mut queue: VecDeque<(&str, usize)> = VecDeque::new();
        seen.insert(a);
        queue.push_back((a, 0));
        while let Some((id, d)) = queue.pop_front() {
            let s = &self.synsets[id];
            for next in s.hypernyms.iter().chain(s.hyponyms.iter()) {
                if next == b {
                    return Ok(Some(d + 1));
                }
                if seen.insert(next) {
                    queue.push_back((next, d + 1));
                }
            }
        }
        Ok(None)
    }
}

fn build_lemma_index(map: &BTreeMap<SynsetId, Synset>) -> HashMap<(String, Pos), Vec<SynsetId>> {
    let mut index: HashMap<(String, Pos), Vec<SynsetId>> = HashMap::new();
    for s in map.values() {
        for lemma in &s.lemmas {
            index
                .entry((lemma.clone(), s.pos))
                .or_default()
                .push(s.id.clone());
        }
    }
    // BTreeMap iteration gives id order; the simple format encodes sense
    // number in the id so this matches sense order. WNDB overrides the
    // index separately via sense_order.
    index
}

impl LexiconGraph {
    pub(crate) fn override_sense_order(&mut self, order: HashMap<(String, Pos), Vec<SynsetId>>) {
        for (key, ids) in order {
            self.lemma_index.insert(key, ids);
        }
    }
}

/// The bundled mini-lexicon used by tests and available to the CLI as a
/// fallback when no lexicon path is given.
pub const MINI_LEXICON_TSV: &str = include_str!("../../fixtures/mini_lexicon.tsv");

pub fn mini_lexicon() -> LexiconGraph {
    simple::parse_simple(MINI_LEXICON_TSV, "mini_lexicon.tsv")
        .expect("bundled mini-lexicon must parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synset(id: &str, pos: Pos, lemmas: &[&str], hypernyms: &[&str]) -> Synset {
        Synset {
            id: id.to_string(),
            lemmas: lemmas.iter().map(|s| s.to_string()).collect(),
            pos,
            gloss: String::new(),
            hypernyms: hypernyms.iter().map(|s| s.to_string()).collect(),
            hyponyms: Vec::new(),
        }
    }

    fn chain3() -> LexiconGraph {
        LexiconGraph::from_synsets(vec![
            synset("a#n#1", Pos::Noun, &["a"], &["b#n#1"]),
            synset("b#n#1", Pos::Noun, &["b"], &["c#n#1"]),
            synset("c#n#1", Pos::Noun, &["c"], &[]),
        ])
        .unwrap()
    }

    #[test]
    fn inverse_edges_repaired() {
        let g = chain3();
        assert_eq!(g.report().repaired_edges, 2);
        assert_eq!(g.get("b#n#1").unwrap().hyponyms, vec!["a#n#1".to_string()]);
    }

    #[test]
    fn dangling_edge_rejected() {
        let err = LexiconGraph::from_synsets(vec![synset("a#n#1", Pos::Noun, &["a"], &["gone"])])
            .unwrap_err();
        assert!(matches!(err, LexiconError::DanglingEdge { .. }));
    }

    #[test]
    fn noun_cycle_rejected() {
        let err = LexiconGraph::from_synsets(vec![
            synset("a#n#1", Pos::Noun, &["a"], &["b#n#1"]),
            synset("b#n#1", Pos::Noun, &["b"], &["a#n#1"]),
        ])
        .unwrap_err();
        assert!(matches!(err, LexiconError::HypernymCycle(_)));
    }

    #[test]
    fn hypernym_closure_on_chain() {
        let g = chain3();
        assert_eq!(
            g.hypernym_closure("a#n#1").unwrap(),
            vec![("b#n#1".to_string(), 1), ("c#n#1".to_string(), 2)]
        );
        assert!(g.hypernym_closure("c#n#1").unwrap().is_empty());
    }

    #[test]
    fn hyponym_closure_mirrors() {
        let g = chain3();
        assert_eq!(
            g.hyponym_closure("c#n#1").unwrap(),
            vec![("b#n#1".to_string(), 1), ("a#n#1".to_string(), 2)]
        );
        assert!(g.hyponym_closure("a#n#1").unwrap().is_empty());
    }

    #[test]
    fn diamond_closure_depth_is_minimal() {
        // a -> {b, c} -> d: d appears once at depth 2.
        let g = LexiconGraph::from_synsets(vec![
            synset("a#n#1", Pos::Noun, &["a"], &["b#n#1", "c#n#1"]),
            synset("b#n#1", Pos::Noun, &["b"], &["d#n#1"]),
            synset("c#n#1", Pos::Noun, &["c"], &["d#n#1"]),
            synset("d#n#1", Pos::Noun, &["d"], &[]),
        ])
        .unwrap();
        let closure = g.hypernym_closure("a#n#1").unwrap();
        assert_eq!(
            closure,
            vec![
                ("b#n#1".to_string(), 1),
                ("c#n#1".to_string(), 1),
                ("d#n#1".to_string(), 2)
            ]
        );
    }

    #[test]
    fn coordinate_terms_are_siblings() {
        let g = LexiconGraph::from_synsets(vec![
            synset("p#n#1", Pos::Noun, &["p"], &[]),
            synset("x#n#1", Pos::Noun, &["x"], &["p#n#1"]),
            synset("y#n#1", Pos::Noun, &["y"], &["p#n#1"]),
        ])
        .unwrap();
        let coords = g.coordinate_terms("x#n#1").unwrap();
        assert_eq!(coords, HashSet::from(["y#n#1".to_string()]));
        // only child
        let g2 = LexiconGraph::from_synsets(vec![
            synset("p#n#1", Pos::Noun, &["p"], &[]),
            synset("x#n#1", Pos::Noun, &["x"], &["p#n#1"]),
        ])
        .unwrap();
        assert!(g2.coordinate_terms("x#n#1").unwrap().is_empty());
    }

    #[test]
    fn semantic_distance_basics() {
        let g = chain3();
        assert_eq!(g.semantic_distance("a#n#1", "a#n#1").unwrap(), Some(0));
        assert_eq!(g.semantic_distance("a#n#1", "b#n#1").unwrap(), Some(1));
        assert_eq!(g.semantic_distance("a#n#1", "c#n#1").unwrap(), Some(2));
        assert_eq!(g.semantic_distance("c#n#1", "a#n#1").unwrap(), Some(2));
    }

    #[test]
    fn semantic_distance_disconnected() {
        let g = LexiconGraph::from_synsets(vec![
            synset("a#n#1", Pos::Noun, &["a"], &[]),
            synset("b#n#1", Pos::Noun, &["b"], &[]),
        ])
        .unwrap();
        assert_eq!(g.semantic_distance("a#n#1", "b#n#1").unwrap(), None);
    }

    #[test]
    fn unknown_id_errors() {
        let g = chain3();
        assert!(g.hypernym_closure("zzz").is_err());
        assert!(g.semantic_distance("a#n#1", "zzz").is_err());
    }

    #[test]
    fn lookup_lemma_order_and_pos_preference() {
        let g = LexiconGraph::from_synsets(vec![
            synset("run#n#1", Pos::Noun, &["run"], &[]),
            synset("run#v#1", Pos::Verb, &["run"], &[]),
        ])
        .unwrap();
        assert_eq!(g.lookup_lemma("run", Some(Pos::Verb)).len(), 1);
        assert_eq!(g.lookup_lemma("run", None).len(), 2);
        assert_eq!(g.preferred_pos("run"), Some(Pos::Noun));
        assert!(g.lookup_lemma("zzzz", None).is_empty());
    }

    #[test]
    fn mini_lexicon_contains_prison_chain() {
        let g = mini_lexicon();
        let prison = g.lookup_lemma("prison", Some(Pos::Noun));
        assert!(!prison.is_empty());
        assert!(prison[0].gloss.contains("confine"));
        let closure = g.hypernym_closure("prison#n#1").unwrap();
        let names: Vec<&str> = closure.iter().map(|(id, _)| id.as_str()).collect();
        assert!(names.contains(&"correctional_institution#n#1"));
        assert!(names.last().map(|s| s.starts_with("entity")).unwrap_or(false) || names.contains(&"entity#n#1"));
        assert_eq!(g.lookup_lemma("correctional_institution", None).len(), 1);
    }
}
