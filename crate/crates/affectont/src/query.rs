//! Boolean concept queries over the annotation store, affect-window
//! filtering, and waypoint-driven scenario assembly.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::annotations::AnnotationStore;
use crate::lexicon::Pos;
use crate::manifest::{AffectPoint, Stimulus};
use crate::taxonomy::{ConceptId, TaxonomyGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryExpr {
    Term {
        lemma: String,
        pos: Option<Pos>,
        sense: Option<u32>,
    },
    Not(Box<QueryExpr>),
    And(Vec<QueryExpr>),
    Or(Vec<QueryExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffectWindow {
    pub pleasure_min: f64,
    pub pleasure_max: f64,
    pub arousal_min: f64,
    pub arousal_max: f64,
}

impl AffectWindow {
    pub const FULL: AffectWindow = AffectWindow {
        pleasure_min: 1.0,
        pleasure_max: 9.0,
        arousal_min: 1.0,
        arousal_max: 9.0,
    };

    pub fn new(
        pleasure_min: f64,
        pleasure_max: f64,
        arousal_min: f64,
        arousal_max: f64,
    ) -> Result<Self, QueryError> {
        let w = AffectWindow {
            pleasure_min,
            pleasure_max,
            arousal_min,
            arousal_max,
        };
        for v in [pleasure_min, pleasure_max, arousal_min, arousal_max] {
            if !(1.0..=9.0).contains(&v) {
                return Err(QueryError::BadWindow(format!("value {v} outside [1, 9]")));
            }
        }
        if pleasure_min > pleasure_max || arousal_min > arousal_max {
            return Err(QueryError::BadWindow("min exceeds max".to_string()));
        }
        Ok(w)
    }

    pub fn contains(&self, p: &AffectPoint) -> bool {
        p.pleasure >= self.pleasure_min
            && p.pleasure <= self.pleasure_max
            && p.arousal >= self.arousal_min
            && p.arousal <= self.arousal_max
    }
}

#[derive(Debug, Clone)]
pub struct Waypoint {
    pub target: AffectPoint,
    pub constraint: Option<QueryExpr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryScope {
    PrimaryOnly,
    PrimaryAndSecondary,
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("term `{0}` does not resolve to any taxonomy concept")]
    UnresolvedTerm(String),
    #[error("invalid affect window: {0}")]
    BadWindow(String),
    #[error("waypoint {index} has an empty candidate set")]
    EmptyWaypoint { index: usize },
    #[error("unknown stimulus `{0}`")]
    UnknownStimulus(String),
}

// Grammar:
//   or   := and ("OR" and)*
//   and  := not ("AND" not)*
//   not  := "NOT" not | atom
//   atom := "(" or ")" | term
//   term := lemma ["#" pos ["#" sense]]
// Operators are case-insensitive; precedence NOT > AND > OR.
pub fn parse_query(text: &str) -> Result<QueryExpr, QueryError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.parse_or()?;
    if let Some(tok) = parser.peek() {
        return Err(QueryError::Parse {
            offset: tok.offset,
            message: format!("unexpected `{}`", tok.text),
        });
    }
    Ok(expr)
}

#[derive(Debug, Clone)]
struct Tok {
    text: String,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Tok>, QueryError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' || c == ')' {
            tokens.push(Tok {
                text: c.to_string(),
                offset: i,
            });
            i += 1;
        } else if c.is_alphanumeric() || c == '_' || c == '#' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '#')
            {
                i += 1;
            }
            tokens.push(Tok {
                text: chars[start..i].iter().collect(),
                offset: start,
            });
        } else {
            return Err(QueryError::Parse {
                offset: i,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    if tokens.is_empty() {
        return Err(QueryError::Parse {
            offset: 0,
            message: "empty query".to_string(),
        });
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        self.peek()
            .map(|t| t.text.eq_ignore_ascii_case(kw))
            .unwrap_or(false)
    }

    fn end_offset(&self) -> usize {
        self.tokens
            .last()
            .map(|t| t.offset + t.text.len())
            .unwrap_or(0)
    }

    fn parse_or(&mut self) -> Result<QueryExpr, QueryError> {
        let mut children = vec![self.parse_and()?];
        while self.peek_keyword("or") {
            self.pos += 1;
            children.push(self.parse_and()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            QueryExpr::Or(children)
        })
    }

    fn parse_and(&mut self) -> Result<QueryExpr, QueryError> {
        let mut children = vec![self.parse_not()?];
        while self.peek_keyword("and") {
            self.pos += 1;
            children.push(self.parse_not()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            QueryExpr::And(children)
        })
    }

    fn parse_not(&mut self) -> Result<QueryExpr, QueryError> {
        if self.peek_keyword("not") {
            self.pos += 1;
            return Ok(QueryExpr::Not(Box::new(self.parse_not()?)));
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<QueryExpr, QueryError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => {
                return Err(QueryError::Parse {
                    offset: self.end_offset(),
                    message: "dangling operator: expected a term".to_string(),
                })
            }
        };
        if tok.text == "(" {
            self.pos += 1;
            let inner = self.parse_or()?;
            match self.peek() {
                Some(t) if t.text == ")" => {
                    self.pos += 1;
                    Ok(inner)
                }
                _ => Err(QueryError::Parse {
                    offset: self.end_offset(),
                    message: "unbalanced parentheses: expected `)`".to_string(),
                }),
            }
        } else if tok.text == ")" {
            Err(QueryError::Parse {
                offset: tok.offset,
                message: "unbalanced parentheses: unexpected `)`".to_string(),
            })
        } else if ["and", "or", "not"]
            .iter()
            .any(|kw| tok.text.eq_ignore_ascii_case(kw))
        {
            Err(QueryError::Parse {
                offset: tok.offset,
                message: format!("expected a term, found operator `{}`", tok.text),
            })
        } else {
            self.pos += 1;
            parse_term(&tok)
        }
    }
}

fn parse_term(tok: &Tok) -> Result<QueryExpr, QueryError> {
    let parts: Vec<&str> = tok.text.split('#').collect();
    let lemma = parts[0].to_lowercase();
    if lemma.is_empty() {
        return Err(QueryError::Parse {
            offset: tok.offset,
            message: "empty term".to_string(),
        });
    }
    let pos = match parts.get(1) {
        None => None,
        Some(p) => Some(
            p.chars()
                .next()
                .and_then(Pos::from_letter)
                .ok_or_else(|| QueryError::Parse {
                    offset: tok.offset,
                    message: format!("unknown pos `{p}` in term"),
                })?,
        ),
    };
    let sense = match parts.get(2) {
        None => None,
        Some(s) => Some(s.parse().map_err(|_| QueryError::Parse {
            offset: tok.offset,
            message: format!("bad sense number `{s}` in term"),
        })?),
    };
    Ok(QueryExpr::Term { lemma, pos, sense })
}

/// Concept ids a term denotes in the taxonomy. A bare lemma matches every
/// sense of every pos whose id or label matches.
fn resolve_term(
    tax: &TaxonomyGraph,
    lemma: &str,
    pos: Option<Pos>,
    sense: Option<u32>,
) -> Vec<ConceptId> {
    if let (Some(p), Some(s)) = (pos, sense) {
        let id = format!("{lemma}#{}#{s}", p.letter());
        return if tax.contains(&id) { vec![id] } else { Vec::new() };
    }
    tax.nodes()
        .filter(|n| {
            let mut parts = n.concept_id.split('#');
            let id_lemma = parts.next().unwrap_or("");
            let id_pos = parts.next().and_then(|p| p.chars().next());
            let lemma_match = id_lemma == lemma || n.label == lemma;
            let pos_match = match pos {
                None => true,
                Some(p) => id_pos == Some(p.letter()),
            };
            lemma_match && pos_match
        })
        .map(|n| n.concept_id.clone())
        .collect()
}

/// Evaluate a query. A term matches a stimulus when one of its annotated
/// concepts (per scope) is the term's concept or a descendant of it.
pub fn evaluate_query(
    expr: &QueryExpr,
    store: &AnnotationStore,
    tax: &TaxonomyGraph,
    scope: QueryScope,
) -> Result<BTreeSet<String>, QueryError> {
    let universe: BTreeSet<String> = store.stimulus_ids().map(String::from).collect();
    eval(expr, store, tax, scope, &universe)
}

fn eval(
    expr: &QueryExpr,
    store: &AnnotationStore,
    tax: &TaxonomyGraph,
    scope: QueryScope,
    universe: &BTreeSet<String>,
) -> Result<BTreeSet<String>, QueryError> {
    match expr {
        QueryExpr::Term { lemma, pos, sense } => {
            let concepts = resolve_term(tax, lemma, *pos, *sense);
            if concepts.is_empty() {
                return Err(QueryError::UnresolvedTerm(lemma.clone()));
            }
            let mut matching: BTreeSet<ConceptId> = BTreeSet::new();
            for c in &concepts {
                matching.extend(tax.descendants_or_self(c).unwrap());
            }
            let mut out = BTreeSet::new();
            for id in universe {
                let anns = store.get(id).unwrap();
                let mut annotated: Vec<&ConceptId> = Vec::new();
                if let Some(p) = &anns.primary {
                    annotated.push(p);
                }
                if scope == QueryScope::PrimaryAndSecondary {
                    annotated.extend(anns.contributions.iter().map(|c| &c.concept));
                }
                if annotated.iter().any(|c| matching.contains(*c)) {
                    out.insert(id.clone());
                }
            }
            Ok(out)
        }
        QueryExpr::Not(child) => {
            let inner = eval(child, store, tax, scope, universe)?;
            Ok(universe.difference(&inner).cloned().collect())
        }
        QueryExpr::And(children) => {
            let mut result: Option<BTreeSet<String>> = None;
            for child in children {
                let set = eval(child, store, tax, scope, universe)?;
                result = Some(match result {
                    None => set,
                    Some(acc) => acc.intersection(&set).cloned().collect(),
                });
            }
            Ok(result.unwrap_or_default())
        }
        QueryExpr::Or(children) => {
            let mut result = BTreeSet::new();
            for child in children {
                result.extend(eval(child, store, tax, scope, universe)?);
            }
            Ok(result)
        }
    }
}

/// Keep ids whose affect lies inside the window (inclusive bounds).
pub fn affect_filter(
    ids: &BTreeSet<String>,
    stimuli: &HashMap<String, Stimulus>,
    window: &AffectWindow,
) -> BTreeSet<String> {
    ids.iter()
        .filter(|id| {
            stimuli
                .get(*id)
                .map(|s| window.contains(&s.affect))
                .unwrap_or(false)
        })
        .cloned()
        .collect()
}

/// Greedy waypoint-by-waypoint selection: nearest candidate in the affect
/// plane, ties by ascending id. With `allow_repeat` a stimulus may be chosen
/// for more than one waypoint.
pub fn assemble_scenario(
    waypoints: &[Waypoint],
    store: &AnnotationStore,
    tax: &TaxonomyGraph,
    stimuli: &HashMap<String, Stimulus>,
    scope: QueryScope,
    allow_repeat: bool,
) -> Result<Vec<String>, QueryError> {
    let mut selected: Vec<String> = Vec::new();
    for (index, wp) in waypoints.iter().enumerate() {
        let candidates: BTreeSet<String> = match &wp.constraint {
            Some(expr) => evaluate_query(expr, store, tax, scope)?,
            None => store.stimulus_ids().map(String::from).collect(),
        };
        let best = candidates
            .iter()
            .filter(|id| allow_repeat || !selected.contains(*id))
            .filter_map(|id| stimuli.get(id).map(|s| (id, s)))
            .map(|(id, s)| (s.affect.distance(&wp.target), id))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(b.1)));
        match best {
            Some((_, id)) => selected.push(id.clone()),
            None => return Err(QueryError::EmptyWaypoint { index: index + 1 }),
        }
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::mini_lexicon;
    use crate::manifest::MediaKind;
    use crate::taxonomy::build_taxonomy;

    fn term(lemma: &str) -> QueryExpr {
        QueryExpr::Term {
            lemma: lemma.to_string(),
            pos: None,
            sense: None,
        }
    }

    fn boat_fixture() -> (AnnotationStore, TaxonomyGraph, HashMap<String, Stimulus>) {
        let lex = mini_lexicon();
        let tax = build_taxonomy(
            &lex,
            &["boat#n#1".to_string(), "prison#n#1".to_string()],
        )
        .unwrap();
        let mut store = AnnotationStore::new();
        let pairs = [
            ("8010", 5.59, 2.88),
            ("8020", 5.34, 4.23),
            ("8030", 7.48, 4.74),
            ("8040", 7.53, 5.94),
        ];
        let mut stimuli = HashMap::new();
        for (id, pl, ar) in pairs {
            store.set_primary(id, "boat#n#1".to_string());
            stimuli.insert(
                id.to_string(),
                Stimulus {
                    id: id.to_string(),
                    resource: format!("file:///data/{id}.jpg"),
                    media_kind: MediaKind::Image,
                    affect: AffectPoint {
                        pleasure: pl,
                        arousal: ar,
                    },
                    raw_keyword: "Boat".to_string(),
                },
            );
        }
        (store, tax, stimuli)
    }

    #[test]
    fn parses_precedence() {
        let expr = parse_query("prison AND NOT jungle").unwrap();
        assert_eq!(
            expr,
            QueryExpr::And(vec![
                term("prison"),
                QueryExpr::Not(Box::new(term("jungle")))
            ])
        );
        // OR binds loosest
        let expr = parse_query("a OR b AND c").unwrap();
        assert_eq!(
            expr,
            QueryExpr::Or(vec![term("a"), QueryExpr::And(vec![term("b"), term("c")])])
        );
    }

    #[test]
    fn parses_bare_term_and_qualified_term() {
        assert_eq!(parse_query("boat").unwrap(), term("boat"));
        assert_eq!(
            parse_query("prison#n#1").unwrap(),
            QueryExpr::Term {
                lemma: "prison".to_string(),
                pos: Some(Pos::Noun),
                sense: Some(1),
            }
        );
    }

    #[test]
    fn parse_errors_carry_offsets() {
        match parse_query("AND boat").unwrap_err() {
            QueryError::Parse { offset, .. } => assert_eq!(offset, 0),
            other => panic!("unexpected {other}"),
        }
        match parse_query("(boat").unwrap_err() {
            QueryError::Parse { offset, .. } => assert_eq!(offset, 5),
            other => panic!("unexpected {other}"),
        }
        assert!(parse_query("boat AND").is_err());
        assert!(parse_query("").is_err());
    }

    #[test]
    fn operators_case_insensitive() {
        assert_eq!(
            parse_query("a and b").unwrap(),
            parse_query("a AND b").unwrap()
        );
    }

    #[test]
    fn boat_query_matches_all() {
        let (store, tax, _) = boat_fixture();
        let result =
            evaluate_query(&term("boat"), &store, &tax, QueryScope::PrimaryAndSecondary).unwrap();
        assert_eq!(result.len(), 4);
    }

    #[test]
    fn subsumption_matches_descendants() {
        let lex = mini_lexicon();
        let tax = build_taxonomy(&lex, &["prison#n#1".to_string()]).unwrap();
        let mut store = AnnotationStore::new();
        store.set_primary("6000", "prison#n#1".to_string());
        let result = evaluate_query(
            &term("correctional_institution"),
            &store,
            &tax,
            QueryScope::PrimaryOnly,
        )
        .unwrap();
        assert_eq!(result, BTreeSet::from(["6000".to_string()]));
    }

    #[test]
    fn contradiction_is_empty() {
        let (store, tax, _) = boat_fixture();
        let expr = QueryExpr::And(vec![term("boat"), QueryExpr::Not(Box::new(term("boat")))]);
        assert!(
            evaluate_query(&expr, &store, &tax, QueryScope::PrimaryAndSecondary)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn unresolved_term_errors() {
        let (store, tax, _) = boat_fixture();
        assert!(matches!(
            evaluate_query(&term("zzzz"), &store, &tax, QueryScope::PrimaryOnly),
            Err(QueryError::UnresolvedTerm(_))
        ));
    }

    #[test]
    fn secondary_scope_widens_matches() {
        let lex = mini_lexicon();
        let tax = build_taxonomy(
            &lex,
            &["prison#n#1".to_string(), "jungle#n#1".to_string()],
        )
        .unwrap();
        let mut store = AnnotationStore::new();
        store.set_primary("6000", "prison#n#1".to_string());
        store
            .assign_secondary("6000", "alice", "jungle#n#1", 0.5)
            .unwrap();
        let q = term("jungle");
        assert!(
            evaluate_query(&q, &store, &tax, QueryScope::PrimaryOnly)
                .unwrap()
                .is_empty()
        );
        assert_eq!(
            evaluate_query(&q, &store, &tax, QueryScope::PrimaryAndSecondary)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn window_filter_inclusive_bounds() {
        let (store, tax, stimuli) = boat_fixture();
        let all =
            evaluate_query(&term("boat"), &store, &tax, QueryScope::PrimaryAndSecondary).unwrap();
        let window = AffectWindow::new(7.0, 8.0, 1.0, 9.0).unwrap();
        let filtered = affect_filter(&all, &stimuli, &window);
        assert_eq!(
            filtered,
            BTreeSet::from(["8030".to_string(), "8040".to_string()])
        );
        // full window is identity
        assert_eq!(affect_filter(&all, &stimuli, &AffectWindow::FULL), all);
        // degenerate window
        let point = AffectWindow::new(9.0, 9.0, 9.0, 9.0).unwrap();
        assert!(affect_filter(&all, &stimuli, &point).is_empty());
    }

    #[test]
    fn window_validation() {
        assert!(AffectWindow::new(8.0, 7.0, 1.0, 9.0).is_err());
        assert!(AffectWindow::new(0.5, 7.0, 1.0, 9.0).is_err());
    }

    #[test]
    fn scenario_selects_nearest() {
        let (store, tax, stimuli) = boat_fixture();
        let wp = Waypoint {
            target: AffectPoint {
                pleasure: 7.5,
                arousal: 5.0,
            },
            constraint: Some(term("boat")),
        };
        let result = assemble_scenario(
            &[wp],
            &store,
            &tax,
            &stimuli,
            QueryScope::PrimaryAndSecondary,
            false,
        )
        .unwrap();
        // (7.48, 4.74) is at distance 0.2608; (7.53, 5.94) at 0.9405
        assert_eq!(result, vec!["8030".to_string()]);
    }

    #[test]
    fn scenario_exact_point_and_no_reuse() {
        let (store, tax, stimuli) = boat_fixture();
        let exact = Waypoint {
            target: AffectPoint {
                pleasure: 5.34,
                arousal: 4.23,
            },
            constraint: None,
        };
        let result = assemble_scenario(
            &[exact.clone()],
            &store,
            &tax,
            &stimuli,
            QueryScope::PrimaryAndSecondary,
            false,
        )
        .unwrap();
        assert_eq!(result, vec!["8020".to_string()]);

        // Two identical waypoints over a single-stimulus store: error at
        // waypoint 2 without reuse, duplicate with it.
        let mut one = AnnotationStore::new();
        one.set_primary("8020", "boat#n#1".to_string());
        let err = assemble_scenario(
            &[exact.clone(), exact.clone()],
            &one,
            &tax,
            &stimuli,
            QueryScope::PrimaryAndSecondary,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, QueryError::EmptyWaypoint { index: 2 }));
        let repeated = assemble_scenario(
            &[exact.clone(), exact],
            &one,
            &tax,
            &stimuli,
            QueryScope::PrimaryAndSecondary,
            true,
        )
        .unwrap();
        assert_eq!(repeated, vec!["8020".to_string(), "8020".to_string()]);
    }
}
