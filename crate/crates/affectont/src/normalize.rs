//! Free-text keyword normalization: split compound tags, expand
//! abbreviations, singularize plurals, and separate head concepts from
//! modifiers and relation words.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{LexiconGraph, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosHint {
    Noun,
    Adjective,
    Verb,
    Adverb,
    Relation,
    Unknown,
}

impl From<Pos> for PosHint {
    fn from(p: Pos) -> Self {
        match p {
            Pos::Noun => PosHint::Noun,
            Pos::Verb => PosHint::Verb,
            Pos::Adjective => PosHint::Adjective,
            Pos::Adverb => PosHint::Adverb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub pos_hint: PosHint,
}

impl Token {
    fn word(text: impl Into<String>) -> Token {
        Token {
            text: text.into(),
            pos_hint: PosHint::Unknown,
        }
    }

    fn relation(text: impl Into<String>) -> Token {
        Token {
            text: text.into(),
            pos_hint: PosHint::Relation,
        }
    }
}

/// Decomposition of one raw keyword. `raw` is kept verbatim; `canonical` is a
/// rendered form whose re-normalization reproduces the same decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedKeyword {
    pub raw: String,
    pub heads: Vec<(String, PosHint)>,
    pub modifiers: Vec<(String, PosHint)>,
    pub relations: Vec<String>,
    pub canonical: String,
}

impl NormalizedKeyword {
    /// Structural equality ignoring the verbatim raw form.
    pub fn same_decomposition(&self, other: &NormalizedKeyword) -> bool {
        self.heads == other.heads
            && self.modifiers == other.modifiers
            && self.relations == other.relations
            && self.canonical == other.canonical
    }
}

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("keyword `{0}` consists solely of delimiters")]
    EmptyTokenization(String),
    #[error("no head noun derivable from `{raw}` (tokens: {tokens:?})")]
    NoHead { raw: String, tokens: Vec<String> },
    #[error("table {path}:{line}: expected `key=value`")]
    MalformedTable { path: String, line: usize },
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

const RELATION_WORDS: [&str; 5] = ["with", "in", "on", "at", "of"];

/// Abbreviation and irregular-plural tables driving normalization.
#[derive(Debug, Clone)]
pub struct NormalizerConfig {
    pub abbreviations: HashMap<String, String>,
    pub irregular_plurals: HashMap<String, String>,
}

impl Default for NormalizerConfig {
    fn default() -> Self {
        let abbreviations = [
            ("fem", "female"),
            ("neu", "neutral"),
            ("neut", "neutral"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        let irregular_plurals = [
            ("women", "woman"),
            ("men", "man"),
            ("children", "child"),
            ("people", "person"),
            ("babies", "baby"),
            ("geese", "goose"),
            ("feet", "foot"),
            ("teeth", "tooth"),
            ("mice", "mouse"),
            ("wolves", "wolf"),
            ("knives", "knife"),
            ("wives", "wife"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        NormalizerConfig {
            abbreviations,
            irregular_plurals,
        }
    }
}

impl NormalizerConfig {
    /// Merge `short=expansion` lines from a table file into the abbreviation
    /// table. `#` starts a comment.
    pub fn load_abbreviations(&mut self, path: &Path) -> Result<(), NormalizeError> {
        load_table(path, &mut self.abbreviations)
    }

    /// Merge `plural=singular` lines into the irregular-plural table.
    pub fn load_irregular_plurals(&mut self, path: &Path) -> Result<(), NormalizeError> {
        load_table(path, &mut self.irregular_plurals)
    }
}

fn load_table(path: &Path, into: &mut HashMap<String, String>) -> Result<(), NormalizeError> {
    let text = fs::read_to_string(path).map_err(|e| NormalizeError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(NormalizeError::MalformedTable {
            path: path.display().to_string(),
            line: lineno + 1,
        })?;
        into.insert(
            key.trim().to_lowercase(),
            value.trim().to_lowercase(),
        );
    }
    Ok(())
}

/// Split a raw keyword into segments of tokens. Segment boundaries come from
/// `&` and `/`; within a segment, tokens split on whitespace, hyphens,
/// CamelCase boundaries, letter/digit boundaries and the `W/` relation prefix.
fn tokenize_segments(
    raw: &str,
    config: &NormalizerConfig,
    lexicon: Option<&LexiconGraph>,
) -> Vec<Vec<Token>> {
    let chars: Vec<char> = raw.chars().collect();
    let mut segments: Vec<Vec<Token>> = vec![Vec::new()];
    let mut current = String::new();

    let flush = |current: &mut String, segments: &mut Vec<Vec<Token>>| {
        if !current.is_empty() {
            let text = current.to_lowercase();
            let tok = if RELATION_WORDS.contains(&text.as_str()) {
                Token::relation(text)
            } else {
                Token::word(text)
            };
            segments.last_mut().unwrap().push(tok);
            current.clear();
        }
    };

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        // `W/` relation marker: an uppercase W at a word boundary, or a
        // lowercase w whose preceding letters already form a known word.
        if (c == 'W' || c == 'w') && chars.get(i + 1) == Some(&'/') && i + 2 < chars.len() {
            let at_word_start = current.is_empty() || (c == 'W' && current.ends_with(|p: char| p.is_lowercase()));
            let prefix_known = c == 'w'
                && !current.is_empty()
                && is_known_word(&current.to_lowercase(), config, lexicon);
            if at_word_start || prefix_known {
                flush(&mut current, &mut segments);
                segments.last_mut().unwrap().push(Token::relation("with"));
                i += 2;
                continue;
            }
        }
        match c {
            '&' | '/' => {
                flush(&mut current, &mut segments);
                if !segments.last().unwrap().is_empty() {
                    segments.push(Vec::new());
                }
            }
            c if c.is_whitespace() || c == '-' || c == ',' || c == '.' || c == '+' => {
                flush(&mut current, &mut segments);
            }
            c => {
                if let Some(last) = current.chars().last() {
                    let camel = last.is_lowercase() && c.is_uppercase();
                    let digit_boundary = last.is_alphabetic() != c.is_alphabetic()
                        && c != '_'
                        && last != '_';
                    if camel || digit_boundary {
                        flush(&mut current, &mut segments);
                    }
                }
                current.push(c);
            }
        }
        i += 1;
    }
    flush(&mut current, &mut segments);
    if segments.last().map(|s| s.is_empty()).unwrap_or(false) && segments.len() > 1 {
        segments.pop();
    }
    segments.retain(|s| !s.is_empty());
    segments
}

fn is_known_word(word: &str, config: &NormalizerConfig, lexicon: Option<&LexiconGraph>) -> bool {
    config.abbreviations.contains_key(word)
        || config.irregular_plurals.contains_key(word)
        || lexicon.map(|l| l.contains_lemma(word)).unwrap_or(false)
}

/// Flat token list for a raw keyword. Errors when nothing but delimiters
/// remain.
pub fn tokenize_raw(raw: &str, config: &NormalizerConfig) -> Result<Vec<Token>, NormalizeError> {
    let segments = tokenize_segments(raw, config, None);
    let tokens: Vec<Token> = segments.into_iter().flatten().collect();
    if tokens.is_empty() {
        return Err(NormalizeError::EmptyTokenization(raw.to_string()));
    }
    Ok(tokens)
}

/// Singular/canonical lemma plus resolved part of speech for one token.
/// Unknown lemmas are not an error; they keep `PosHint::Unknown`.
pub fn lemmatize_token(
    tok: &Token,
    lexicon: &LexiconGraph,
    config: &NormalizerConfig,
) -> (String, PosHint) {
    if tok.pos_hint == PosHint::Relation {
        return (tok.text.clone(), PosHint::Relation);
    }
    let mut text = tok.text.clone();
    if let Some(expanded) = config.abbreviations.get(&text) {
        text = expanded.clone();
    }
    if let Some(singular) = config.irregular_plurals.get(&text) {
        text = singular.clone();
    }
    if !lexicon.contains_lemma(&text) {
        if let Some(stripped) = strip_plural_suffix(&text, lexicon) {
            text = stripped;
        }
    }
    resolve(&text, lexicon)
}

/// Canonicalize through the lexicon: the matched synset's first lemma is the
/// canonical spelling (e.g. `cliffdiver` -> `cliff_diver`).
fn resolve(lemma: &str, lexicon: &LexiconGraph) -> (String, PosHint) {
    match lexicon.preferred_pos(lemma) {
        Some(pos) => {
            let senses = lexicon.lookup_lemma(lemma, Some(pos));
            let canonical = senses[0].lemmas[0].clone();
            (canonical, pos.into())
        }
        None => (lemma.to_string(), PosHint::Unknown),
    }
}

/// Suffix-rule singularization: -ies -> y, -es, -s. Prefers a candidate the
/// lexicon knows; otherwise falls back to a conservative heuristic strip.
fn strip_plural_suffix(text: &str, lexicon: &LexiconGraph) -> Option<String> {
    let mut candidates = Vec::new();
    if let Some(stem) = text.strip_suffix("ies") {
        if !stem.is_empty() {
            candidates.push(format!("{stem}y"));
        }
    }
    if let Some(stem) = text.strip_suffix("es") {
        if stem.len() > 1 {
            candidates.push(stem.to_string());
        }
    }
    if let Some(stem) = text.strip_suffix('s') {
        if stem.len() > 1 && !stem.ends_with('s') && !stem.ends_with('u') && !stem.ends_with('i') {
            candidates.push(stem.to_string());
        }
    }
    candidates
        .iter()
        .find(|c| lexicon.contains_lemma(c))
        .or_else(|| {
            // No lexicon hit: only the plain -s rule is safe enough to apply
            // blind.
            candidates
                .iter()
                .find(|c| text.len() == c.len() + 1)
        })
        .cloned()
}

/// Try to split an unknown token into known parts (abbreviation-aware
/// compound split, e.g. `neuman` -> `neu` + `man`, `angryface` ->
/// `angry` + `face`).
fn split_unknown(
    text: &str,
    lexicon: &LexiconGraph,
    config: &NormalizerConfig,
    depth: usize,
) -> Option<Vec<Token>> {
    if depth == 0 || text.len() < 4 {
        return None;
    }
    let part_ok = |part: &str| {
        is_known_word(part, config, Some(lexicon))
            || RELATION_WORDS.contains(&part)
            || strip_plural_suffix(part, lexicon)
                .map(|s| lexicon.contains_lemma(&s))
                .unwrap_or(false)
    };
    // Longest known prefix wins.
    for i in (2..=text.len() - 2).rev() {
        if !text.is_char_boundary(i) {
            continue;
        }
        let (left, right) = text.split_at(i);
        if !part_ok(left) {
            continue;
        }
        if part_ok(right) {
            return Some(vec![make_token(left), make_token(right)]);
        }
        if let Some(rest) = split_unknown(right, lexicon, config, depth - 1) {
            let mut out = vec![make_token(left)];
            out.extend(rest);
            return Some(out);
        }
    }
    None
}

fn make_token(text: &str) -> Token {
    if RELATION_WORDS.contains(&text) {
        Token::relation(text)
    } else {
        Token::word(text)
    }
}

/// Full normalization of a raw keyword against a lexicon.
pub fn normalize_keyword(
    raw: &str,
    lexicon: &LexiconGraph,
    config: &NormalizerConfig,
) -> Result<NormalizedKeyword, NormalizeError> {
    let segments = tokenize_segments(raw, config, Some(lexicon));
    if segments.iter().all(|s| s.is_empty()) || segments.is_empty() {
        return Err(NormalizeError::EmptyTokenization(raw.to_string()));
    }

    let mut heads: Vec<(String, PosHint)> = Vec::new();
    let mut modifiers: Vec<(String, PosHint)> = Vec::new();
    let mut relations: Vec<String> = Vec::new();
    let mut canonical_segments: Vec<String> = Vec::new();
    let mut all_tokens: Vec<String> = Vec::new();

    for segment in segments {
        // Expand unknown compounds, then split into sub-segments at relation
        // tokens.
        let mut expanded: Vec<Token> = Vec::new();
        for tok in segment {
            if tok.pos_hint != PosHint::Relation
                && !is_known_word(&tok.text, config, Some(lexicon))
                && strip_plural_suffix(&tok.text, lexicon)
                    .map(|s| !lexicon.contains_lemma(&s))
                    .unwrap_or(true)
            {
                if let Some(parts) = split_unknown(&tok.text, lexicon, config, 3) {
                    expanded.extend(parts);
                    continue;
                }
            }
            expanded.push(tok);
        }

        let mut sub_segments: Vec<Vec<(String, PosHint)>> = vec![Vec::new()];
        let mut canonical_parts: Vec<String> = Vec::new();
        for tok in &expanded {
            all_tokens.push(tok.text.clone());
            if tok.pos_hint == PosHint::Relation {
                relations.push(tok.text.clone());
                canonical_parts.push(tok.text.clone());
                sub_segments.push(Vec::new());
            } else {
                let lemma = lemmatize_token(tok, lexicon, config);
                sub_segments.last_mut().unwrap().push(lemma);
            }
        }

        // Merge adjacent lemmas into multiword lexicon entries, greedily.
        for sub in &mut sub_segments {
            merge_multiwords(sub, lexicon);
        }

        let mut rendered_subs: Vec<String> = Vec::new();
        for sub in &sub_segments {
            if sub.is_empty() {
                continue;
            }
            let head_idx = sub
                .iter()
                .rposition(|(_, pos)| matches!(pos, PosHint::Noun | PosHint::Unknown));
            match head_idx {
                Some(h) => {
                    for (i, (lemma, pos)) in sub.iter().enumerate() {
                        if i == h {
                            heads.push((lemma.clone(), *pos));
                        } else {
                            modifiers.push((lemma.clone(), *pos));
                        }
                    }
                }
                None => {
                    // No head candidate here; everything becomes a modifier.
                    modifiers.extend(sub.iter().cloned());
                }
            }
            rendered_subs.push(
                sub.iter()
                    .map(|(l, _)| l.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
        }

        // Interleave rendered sub-segments with their relation words.
        let mut canonical = String::new();
        let mut rel_iter = canonical_parts.iter();
        for (i, sub) in rendered_subs.iter().enumerate() {
            if i > 0 {
                if let Some(rel) = rel_iter.next() {
                    canonical.push(' ');
                    canonical.push_str(rel);
                }
                canonical.push(' ');
            }
            canonical.push_str(sub);
        }
        if !canonical.is_empty() {
            canonical_segments.push(canonical);
        }
    }

    if heads.is_empty() {
        return Err(NormalizeError::NoHead {
            raw: raw.to_string(),
            tokens: all_tokens,
        });
    }

    Ok(NormalizedKeyword {
        raw: raw.to_string(),
        heads,
        modifiers,
        relations,
        canonical: canonical_segments.join(" & "),
    })
}

/// Replace adjacent lemma runs with multiword lexicon entries (longest match
/// first, up to 3 tokens).
fn merge_multiwords(sub: &mut Vec<(String, PosHint)>, lexicon: &LexiconGraph) {
    let mut i = 0;
    while i < sub.len() {
        let mut merged = false;
        for width in (2..=3.min(sub.len() - i)).rev() {
            let candidate = sub[i..i + width]
                .iter()
                .map(|(l, _)| l.as_str())
                .collect::<Vec<_>>()
                .join("_");
            if lexicon.contains_lemma(&candidate) {
                let (canonical, pos) = {
                    let pos = lexicon.preferred_pos(&candidate).unwrap();
                    let senses = lexicon.lookup_lemma(&candidate, Some(pos));
                    (senses[0].lemmas[0].clone(), PosHint::from(pos))
                };
                sub.splice(i..i + width, [(canonical, pos)]);
                merged = true;
                break;
            }
        }
        if !merged {
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::mini_lexicon;

    fn cfg() -> NormalizerConfig {
        NormalizerConfig::default()
    }

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn camel_case_split() {
        let toks = tokenize_raw("AngryFace", &cfg()).unwrap();
        assert_eq!(texts(&toks), vec!["angry", "face"]);
    }

    #[test]
    fn relation_prefix_split() {
        let toks = tokenize_raw("MenW/guns", &cfg()).unwrap();
        assert_eq!(texts(&toks), vec!["men", "with", "guns"]);
        assert_eq!(toks[1].pos_hint, PosHint::Relation);
    }

    #[test]
    fn ampersand_split() {
        let toks = tokenize_raw("Girl&Dog", &cfg()).unwrap();
        assert_eq!(texts(&toks), vec!["girl", "dog"]);
    }

    #[test]
    fn letter_digit_boundary() {
        let toks = tokenize_raw("Man2", &cfg()).unwrap();
        assert_eq!(texts(&toks), vec!["man", "2"]);
    }

    #[test]
    fn delimiter_only_input_errors() {
        assert!(matches!(
            tokenize_raw("&&//", &cfg()),
            Err(NormalizeError::EmptyTokenization(_))
        ));
    }

    #[test]
    fn lemmatize_plurals_and_abbreviations() {
        let lex = mini_lexicon();
        let c = cfg();
        assert_eq!(
            lemmatize_token(&Token::word("women"), &lex, &c),
            ("woman".to_string(), PosHint::Noun)
        );
        assert_eq!(
            lemmatize_token(&Token::word("babies"), &lex, &c),
            ("baby".to_string(), PosHint::Noun)
        );
        assert_eq!(
            lemmatize_token(&Token::word("neut"), &lex, &c),
            ("neutral".to_string(), PosHint::Adjective)
        );
        assert_eq!(
            lemmatize_token(&Token::word("zzzq"), &lex, &c),
            ("zzzq".to_string(), PosHint::Unknown)
        );
    }

    #[test]
    fn grieving_fem_decomposes() {
        let lex = mini_lexicon();
        let nk = normalize_keyword("GrievingFem", &lex, &cfg()).unwrap();
        assert_eq!(nk.heads, vec![("female".to_string(), PosHint::Noun)]);
        assert_eq!(nk.modifiers, vec![("grieving".to_string(), PosHint::Verb)]);
    }

    #[test]
    fn cliffdiver_variants_agree() {
        let lex = mini_lexicon();
        let a = normalize_keyword("Cliffdiver", &lex, &cfg()).unwrap();
        let b = normalize_keyword("CliffDivers", &lex, &cfg()).unwrap();
        assert!(a.same_decomposition(&b));
        assert_eq!(a.heads, vec![("cliff_diver".to_string(), PosHint::Noun)]);
    }

    #[test]
    fn plain_noun_is_single_head() {
        let lex = mini_lexicon();
        let nk = normalize_keyword("Boat", &lex, &cfg()).unwrap();
        assert_eq!(nk.heads, vec![("boat".to_string(), PosHint::Noun)]);
        assert!(nk.modifiers.is_empty());
        assert!(nk.relations.is_empty());
    }

    #[test]
    fn no_head_error_lists_tokens() {
        let lex = mini_lexicon();
        let err = normalize_keyword("Angry", &lex, &cfg()).unwrap_err();
        match err {
            NormalizeError::NoHead { tokens, .. } => assert_eq!(tokens, vec!["angry"]),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn idempotent_on_canonical_form() {
        let lex = mini_lexicon();
        let c = cfg();
        for raw in [
            "AngryFace",
            "GrievingFem",
            "ManInPool",
            "MenW/guns",
            "Girl&Dog",
            "CliffDivers",
            "BikerCouple",
            "Biking/train",
            "NeutGirl",
            "Women",
        ] {
            let once = normalize_keyword(raw, &lex, &c).unwrap();
            let twice = normalize_keyword(&once.canonical, &lex, &c).unwrap();
            assert!(
                once.same_decomposition(&twice),
                "{raw}: {once:?} vs {twice:?}"
            );
        }
    }

    #[test]
    fn case_insensitive_for_compounds() {
        let lex = mini_lexicon();
        let c = cfg();
        for raw in ["AngryFace", "NeuMan", "ManInPool", "Girl&Dog"] {
            let upper = normalize_keyword(raw, &lex, &c).unwrap();
            let lower = normalize_keyword(&raw.to_lowercase(), &lex, &c).unwrap();
            assert!(
                upper.same_decomposition(&lower),
                "{raw}: {upper:?} vs {lower:?}"
            );
        }
    }

    #[test]
    fn irregular_plural_pairs_collapse() {
        let lex = mini_lexicon();
        let c = cfg();
        for (plural, singular) in &c.irregular_plurals {
            if !lex.contains_lemma(singular) {
                continue;
            }
            let a = normalize_keyword(plural, &lex, &c).unwrap();
            let b = normalize_keyword(singular, &lex, &c).unwrap();
            assert_eq!(a.heads, b.heads, "{plural}/{singular}");
        }
    }

    #[test]
    fn table_files_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("abbr.txt");
        std::fs::write(&path, "# comment\nciv=civilian\n").unwrap();
        let mut c = cfg();
        c.load_abbreviations(&path).unwrap();
        assert_eq!(c.abbreviations["civ"], "civilian");

        std::fs::write(&path, "no equals sign\n").unwrap();
        assert!(matches!(
            c.load_abbreviations(&path),
            Err(NormalizeError::MalformedTable { line: 1, .. })
        ));
    }
}
