//! Simple TSV lexicon format: one synset per line,
//! `id<TAB>pos<TAB>lemma1,lemma2<TAB>gloss<TAB>hypernym_ids(comma)`.
//! Hyponym edges are derived by inversion at load time.

use std::fs;
use std::path::Path;

use super::{LexiconError, LexiconGraph, Pos, Synset};

pub fn load_simple(path: &Path) -> Result<LexiconGraph, LexiconError> {
    let text = fs::read_to_string(path).map_err(|e| LexiconError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_simple(&text, &path.display().to_string())
}

pub fn parse_simple(text: &str, file: &str) -> Result<LexiconGraph, LexiconError> {
    let mut synsets = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_num = lineno + 1;
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() < 4 || fields.len() > 5 {
            return Err(LexiconError::MalformedLine {
                file: file.to_string(),
                line: line_num,
                reason: format!("expected 4 or 5 tab-separated fields, found {}", fields.len()),
            });
        }
        let pos = fields[1]
            .chars()
            .next()
            .and_then(Pos::from_letter)
            .ok_or_else(|| LexiconError::MalformedLine {
                file: file.to_string(),
                line: line_num,
                reason: format!("unknown pos `{}`", fields[1]),
            })?;
        let lemmas: Vec<String> = fields[2]
            .split(',')
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        if lemmas.is_empty() {
            return Err(LexiconError::MalformedLine {
                file: file.to_string(),
                line: line_num,
                reason: "empty lemma list".to_string(),
            });
        }
        let hypernyms: Vec<String> = fields
            .get(4)
            .map(|f| {
                f.split(',')
                    .map(|h| h.trim().to_string())
                    .filter(|h| !h.is_empty())
                    .collect()
            })
            .unwrap_or_default();
        synsets.push(Synset {
            id: fields[0].to_string(),
            lemmas,
            pos,
            gloss: fields[3].to_string(),
            hypernyms,
            hyponyms: Vec::new(),
        });
    }
    LexiconGraph::from_synsets(synsets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_empty_graph() {
        let g = parse_simple("", "t.tsv").unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let g = parse_simple("# comment\n\nboat#n#1\tn\tboat\ta small vessel\n", "t.tsv").unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn malformed_line_reports_location() {
        let err = parse_simple("only_two_fields\tn\n", "t.tsv").unwrap_err();
        match err {
            LexiconError::MalformedLine { file, line, .. } => {
                assert_eq!(file, "t.tsv");
                assert_eq!(line, 1);
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn dangling_hypernym_rejected() {
        let err = parse_simple("a#n#1\tn\ta\tgloss\tmissing#n#1\n", "t.tsv").unwrap_err();
        assert!(matches!(err, LexiconError::DanglingEdge { .. }));
    }
}
