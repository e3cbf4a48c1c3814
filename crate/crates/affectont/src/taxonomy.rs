//! DescribingConcept taxonomy: hypernym-closure union over seed synsets,
//! pruning of irrelevant terms, transitive reduction and disjointness audit.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::lexicon::{LexiconGraph, SynsetId};

pub type ConceptId = String;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptNode {
    pub concept_id: ConceptId,
    pub label: String,
    pub source_synset: Option<SynsetId>,
    /// Direct hypernym parents, restricted to nodes in the graph.
    pub parents: Vec<ConceptId>,
}

/// Pruned DAG of describing concepts. Edges point child -> parent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaxonomyGraph {
    nodes: BTreeMap<ConceptId, ConceptNode>,
    seeds: BTreeSet<ConceptId>,
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("unknown seed synset `{0}`")]
    UnknownSeed(SynsetId),
    #[error("unknown concept `{0}`")]
    UnknownConcept(ConceptId),
    #[error("cycle detected involving concept `{0}`")]
    Cycle(ConceptId),
    #[error("prune config names seed concept `{0}` in its cut list")]
    SeedInCutList(ConceptId),
    #[error("config {path}:{line}: {reason}")]
    MalformedConfig {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Pruning configuration; cut list applies first, depth filter second,
/// exclusion list third.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PruneConfig {
    pub cut_lemmas: BTreeSet<String>,
    pub min_depth_from_root: usize,
    pub exclusion_list: BTreeSet<String>,
    pub disjoint_pairs: Vec<(ConceptId, ConceptId)>,
}

impl PruneConfig {
    /// The cut list seeded from the hierarchy terms flagged as irrelevant.
    pub fn default_cut() -> Self {
        PruneConfig {
            cut_lemmas: [
                "entity",
                "physical_entity",
                "abstraction",
                "object",
                "whole",
                "unit",
                "artifact",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            ..PruneConfig::default()
        }
    }

    /// Parse the line-oriented config format: `[cut]`, `[exclude]`,
    /// `[disjoint]` (pairs as `a|b`) sections and `min_depth=<n>`.
    pub fn parse(text: &str, path: &str) -> Result<Self, TaxonomyError> {
        let mut cfg = PruneConfig::default();
        let mut section = String::new();
        for (lineno, line) in text.lines().enumerate() {
            // `#` is a comment marker only at line start or after whitespace,
            // so concept ids like `prison#n#1` survive.
            let line = match line.find('#') {
                Some(0) => "",
                Some(i) if line[..i].ends_with(char::is_whitespace) => &line[..i],
                _ => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| TaxonomyError::MalformedConfig {
                path: path.to_string(),
                line: lineno + 1,
                reason: reason.to_string(),
            };
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                if !matches!(section.as_str(), "cut" | "exclude" | "disjoint") {
                    return Err(err(&format!("unknown section `{section}`")));
                }
                continue;
            }
            if let Some(value) = line.strip_prefix("min_depth=") {
                cfg.min_depth_from_root =
                    value.trim().parse().map_err(|_| err("bad min_depth value"))?;
                continue;
            }
            match section.as_str() {
                "cut" => {
                    cfg.cut_lemmas.insert(line.to_string());
                }
                "exclude" => {
                    cfg.exclusion_list.insert(line.to_string());
                }
                "disjoint" => {
                    let (a, b) = line
                        .split_once('|')
                        .ok_or_else(|| err("disjoint pair must be `a|b`"))?;
                    cfg.disjoint_pairs
                        .push((a.trim().to_string(), b.trim().to_string()));
                }
                _ => return Err(err("entry outside any section")),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let text = fs::read_to_string(path).map_err(|e| TaxonomyError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text, &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointnessViolation {
    pub concept: ConceptId,
    pub pair: (ConceptId, ConceptId),
}

impl TaxonomyGraph {
    pub fn from_nodes(
        nodes: Vec<ConceptNode>,
        seeds: impl IntoIterator<Item = ConceptId>,
    ) -> Result<Self, TaxonomyError> {
        let mut map = BTreeMap::new();
        for n in nodes {
            map.insert(n.concept_id.clone(), n);
        }
        for n in map.values() {
            for p in &n.parents {
                if !map.contains_key(p) {
                    return Err(TaxonomyError::UnknownConcept(p.clone()));
                }
            }
        }
        let graph = TaxonomyGraph {
            nodes: map,
            seeds: seeds.into_iter().collect(),
        };
        graph.check_acyclic()?;
        Ok(graph)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ConceptNode> {
        self.nodes.values()
    }

    pub fn get(&self, id: &str) -> Option<&ConceptNode> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn seeds(&self) -> &BTreeSet<ConceptId> {
        &self.seeds
    }

    pub fn roots(&self) -> BTreeSet<ConceptId> {
        self.nodes
            .values()
            .filter(|n| n.parents.is_empty())
            .map(|n| n.concept_id.clone())
            .collect()
    }

    fn check_acyclic(&self) -> Result<(), TaxonomyError> {
        let mut indegree: HashMap<&str, usize> =
            self.nodes.keys().map(|k| (k.as_str(), 0)).collect();
        for n in self.nodes.values() {
            for p in &n.parents {
                *indegree.get_mut(p.as_str()).unwrap() += 1;
            }
        }
        let mut queue: VecDeque<&str> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&k, _)| k)
            .collect();
        let mut visited = 0;
        while let Some(id) = queue.pop_front() {
            visited += 1;
            for p in &self.nodes[id].parents {
                let d = indegree.get_mut(p.as_str()).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(p.as_str());
                }
            }
        }
        if visited != self.nodes.len() {
            let culprit = indegree
                .iter()
                .find(|(_, &d)| d > 0)
                .map(|(&k, _)| k.to_string())
                .unwrap_or_default();
            return Err(TaxonomyError::Cycle(culprit));
        }
        Ok(())
    }

    /// Children index (parent -> direct children), derived on demand.
    pub fn children_index(&self) -> HashMap<&str, Vec<&str>> {
        let mut idx: HashMap<&str, Vec<&str>> = HashMap::new();
        for n in self.nodes.values() {
            for p in &n.parents {
                idx.entry(p.as_str()).or_default().push(n.concept_id.as_str());
            }
        }
        idx
    }

    /// Concept ids of `id` and all its descendants.
    pub fn descendants_or_self(&self, id: &str) -> Result<BTreeSet<ConceptId>, TaxonomyError> {
        if !self.contains(id) {
            return Err(TaxonomyError::UnknownConcept(id.to_string()));
        }
        let idx = self.children_index();
        let mut out = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            if out.insert(cur.to_string()) {
                if let Some(children) = idx.get(cur) {
                    stack.extend(children);
                }
            }
        }
        Ok(out)
    }

    /// Ancestor set of `id`, excluding `id` itself.
    pub fn ancestors(&self, id: &str) -> Result<BTreeSet<ConceptId>, TaxonomyError> {
        if !self.contains(id) {
            return Err(TaxonomyError::UnknownConcept(id.to_string()));
        }
        let mut out = BTreeSet::new();
        let mut stack: Vec<&str> = self.nodes[id].parents.iter().map(|p| p.as_str()).collect();
        while let Some(cur) = stack.pop() {
            if out.insert(cur.to_string()) {
                stack.extend(self.nodes[cur].parents.iter().map(|p| p.as_str()));
            }
        }
        Ok(out)
    }

    /// Reachability relation as (from, to) pairs, for oracle comparisons.
    pub fn reachability(&self) -> BTreeSet<(ConceptId, ConceptId)> {
        let mut out = BTreeSet::new();
        for id in self.nodes.keys() {
            for anc in self.ancestors(id).unwrap() {
                out.insert((id.clone(), anc));
            }
        }
        out
    }
}

/// Union of hypernym closures over all seed synsets, seeds included. Concept
/// ids reuse synset ids; labels are the synset's first lemma.
pub fn build_taxonomy(
    lexicon: &LexiconGraph,
    seeds: &[SynsetId],
) -> Result<TaxonomyGraph, TaxonomyError> {
    let mut included: BTreeSet<SynsetId> = BTreeSet::new();
    for seed in seeds {
        if lexicon.get(seed).is_none() {
            return Err(TaxonomyError::UnknownSeed(seed.clone()));
        }
        included.insert(seed.clone());
        for (id, _) in lexicon
            .hypernym_closure(seed)
            .map_err(|_| TaxonomyError::UnknownSeed(seed.clone()))?
        {
            included.insert(id);
        }
    }

    let nodes: Vec<ConceptNode> = included
        .iter()
        .map(|id| {
            let synset = lexicon.get(id).unwrap();
            ConceptNode {
                concept_id: id.clone(),
                label: synset.lemmas[0].clone(),
                source_synset: Some(id.clone()),
                parents: synset
                    .hypernyms
                    .iter()
                    .filter(|h| included.contains(*h))
                    .cloned()
                    .collect(),
            }
        })
        .collect();

    TaxonomyGraph::from_nodes(nodes, seeds.iter().cloned())
}

fn node_matches(node: &ConceptNode, lexicon: Option<&LexiconGraph>, name: &str) -> bool {
    if node.concept_id == name || node.label == name {
        return true;
    }
    if let (Some(lex), Some(src)) = (lexicon, &node.source_synset) {
        if let Some(synset) = lex.get(src) {
            return synset.lemmas.iter().any(|l| l == name);
        }
    }
    false
}

/// Remove cut/excluded/too-shallow nodes, re-parenting children to their
/// nearest surviving ancestors. Seed concepts are never removed.
pub fn prune(
    tax: &TaxonomyGraph,
    cfg: &PruneConfig,
    lexicon: Option<&LexiconGraph>,
) -> Result<TaxonomyGraph, TaxonomyError> {
    for seed in &tax.seeds {
        if let Some(node) = tax.get(seed) {
            if cfg
                .cut_lemmas
                .iter()
                .any(|c| node_matches(node, lexicon, c))
            {
                return Err(TaxonomyError::SeedInCutList(seed.clone()));
            }
        }
    }

    // Pass 1: cut-lemma removal.
    let mut removed: BTreeSet<ConceptId> = BTreeSet::new();
    for node in tax.nodes() {
        if tax.seeds.contains(&node.concept_id) {
            continue;
        }
        if cfg
            .cut_lemmas
            .iter()
            .any(|c| node_matches(node, lexicon, c))
        {
            removed.insert(node.concept_id.clone());
        }
    }

    // Pass 2: depth filter, measured from the deepest root surviving pass 1.
    if cfg.min_depth_from_root > 0 {
        let surviving: BTreeSet<&str> = tax
            .nodes
            .keys()
            .filter(|k| !removed.contains(*k))
            .map(|k| k.as_str())
            .collect();
        // Depth = longest path from any surviving root, following child
        // edges (i.e. moving away from the roots).
        let mut depth: HashMap<&str, usize> = HashMap::new();
        // Topological order over surviving nodes: parents before children.
        let order = topo_parents_first(tax, &surviving);
        for id in order {
            let node = &tax.nodes[id];
            let parent_depths: Vec<usize> = node
                .parents
                .iter()
                .filter(|p| surviving.contains(p.as_str()))
                .map(|p| depth[p.as_str()] + 1)
                .collect();
            depth.insert(id, parent_depths.into_iter().max().unwrap_or(0));
        }
        for (&id, &d) in &depth {
            if d < cfg.min_depth_from_root && !tax.seeds.contains(id) {
                removed.insert(id.to_string());
            }
        }
    }

    // Pass 3: exclusion list.
    for node in tax.nodes() {
        if tax.seeds.contains(&node.concept_id) {
            continue;
        }
        if cfg
            .exclusion_list
            .iter()
            .any(|c| node_matches(node, lexicon, c))
        {
            removed.insert(node.concept_id.clone());
        }
    }

    // Re-parent survivors to their nearest surviving ancestors.
    let mut nodes = Vec::new();
    for node in tax.nodes() {
        if removed.contains(&node.concept_id) {
            continue;
        }
        let mut parents: Vec<ConceptId> = Vec::new();
        let mut queue: VecDeque<&ConceptId> = node.parents.iter().collect();
        let mut seen: HashSet<&str> = HashSet::new();
        while let Some(p) = queue.pop_front() {
            if !seen.insert(p.as_str()) {
                continue;
            }
            if removed.contains(p) {
                queue.extend(tax.nodes[p.as_str()].parents.iter());
            } else if !parents.contains(p) {
                parents.push(p.clone());
            }
        }
        nodes.push(ConceptNode {
            parents,
            ..node.clone()
        });
    }

    TaxonomyGraph::from_nodes(nodes, tax.seeds.iter().cloned())
}

fn topo_parents_first<'a>(tax: &'a TaxonomyGraph, surviving: &BTreeSet<&'a str>) -> Vec<&'a str> {
    let mut order = Vec::new();
    let mut state: HashMap<&str, u8> = HashMap::new(); // 0 unvisited, 1 done
    fn visit<'a>(
        id: &'a str,
        tax: &'a TaxonomyGraph,
        surviving: &BTreeSet<&'a str>,
        state: &mut HashMap<&'a str, u8>,
        order: &mut Vec<&'a str>,
    ) {
        if state.get(id).copied() == Some(1) {
            return;
        }
        state.insert(id, 1);
        for p in &tax.nodes[id].parents {
            if surviving.contains(p.as_str()) {
                visit(p.as_str(), tax, surviving, state, order);
            }
        }
        order.push(id);
    }
    for &id in surviving {
        visit(id, tax, surviving, &mut state, &mut order);
    }
    order
}

/// Remove every parent edge implied by a longer path; reachability is
/// preserved.
pub fn transitive_reduction(tax: &TaxonomyGraph) -> Result<TaxonomyGraph, TaxonomyError> {
    tax.check_acyclic()?;
    let mut nodes = Vec::new();
    for node in tax.nodes() {
        let mut keep = Vec::new();
        for p in &node.parents {
            // Drop edge node->p when p is reachable via some other parent.
            let via_other = node.parents.iter().any(|q| {
                q != p && (q == p || tax.ancestors(q).unwrap().contains(p))
            });
            if !via_other {
                keep.push(p.clone());
            }
        }
        nodes.push(ConceptNode {
            parents: keep,
            ..node.clone()
        });
    }
    TaxonomyGraph::from_nodes(nodes, tax.seeds.iter().cloned())
}

/// Every concept descending from (or equal to) both members of a declared
/// disjoint pair, with the witnessing pair.
pub fn disjointness_audit(
    tax: &TaxonomyGraph,
    pairs: &[(ConceptId, ConceptId)],
) -> Result<Vec<DisjointnessViolation>, TaxonomyError> {
    let mut out = Vec::new();
    for (a, b) in pairs {
        let da = tax.descendants_or_self(a)?;
        let db = tax.descendants_or_self(b)?;
        for concept in da.intersection(&db) {
            out.push(DisjointnessViolation {
                concept: concept.clone(),
                pair: (a.clone(), b.clone()),
            });
        }
    }
    Ok(out)
}
