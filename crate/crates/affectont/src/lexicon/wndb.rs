//! Loader for the standard WNDB database file layout (`index.noun`,
//! `data.noun` and sibling pos files). Only hypernym (`@`, `@i`) and hyponym
//! (`~`, `~i`) pointers are ingested; instance variants fold into the plain
//! relation.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{LexiconError, LexiconGraph, Pos, Synset, SynsetId};

const POS_FILES: [(&str, Pos); 4] = [
    ("noun", Pos::Noun),
    ("verb", Pos::Verb),
    ("adj", Pos::Adjective),
    ("adv", Pos::Adverb),
];

fn synset_id(offset: u64, pos: Pos) -> SynsetId {
    format!("{offset:08}-{}", pos.letter())
}

pub fn load_wndb(dir: &Path) -> Result<LexiconGraph, LexiconError> {
    let mut synsets = Vec::new();
    let mut sense_order: HashMap<(String, Pos), Vec<SynsetId>> = HashMap::new();

    for (name, pos) in POS_FILES {
        let data_path = dir.join(format!("data.{name}"));
        if data_path.exists() {
            synsets.extend(parse_data_file(&data_path, pos)?);
        }
        let index_path = dir.join(format!("index.{name}"));
        if index_path.exists() {
            parse_index_file(&index_path, pos, &mut sense_order)?;
        }
    }

    let mut graph = LexiconGraph::from_synsets(synsets)?;
    graph.override_sense_order(sense_order);
    Ok(graph)
}

fn read(path: &Path) -> Result<String, LexiconError> {
    fs::read_to_string(path).map_err(|e| LexiconError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> LexiconError {
    LexiconError::MalformedLine {
        file: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

/// Parse a `data.<pos>` file. Line format:
/// `offset lex_filenum ss_type w_cnt word lex_id [...] p_cnt [ptr...] | gloss`
/// where `w_cnt` is 2-digit hex and `p_cnt` 3-digit decimal.
fn parse_data_file(path: &Path, pos: Pos) -> Result<Vec<Synset>, LexiconError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_num = lineno + 1;
        if line.starts_with("  ") || line.trim().is_empty() {
            continue; // license header lines
        }
        let (head, gloss) = match line.split_once('|') {
            Some((h, g)) => (h, g.trim().to_string()),
            None => (line, String::new()),
        };
        let fields: Vec<&str> = head.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(malformed(path, line_num, "too few fields"));
        }
        let offset: u64 = fields[0]
            .parse()
            .map_err(|_| malformed(path, line_num, "bad synset offset"))?;
        let w_cnt = usize::from_str_radix(fields[3], 16)
            .map_err(|_| malformed(path, line_num, "bad word count"))?;
        let words_end = 4 + 2 * w_cnt;
        if fields.len() < words_end + 1 {
            return Err(malformed(path, line_num, "truncated word list"));
        }
        let lemmas: Vec<String> = (0..w_cnt)
            .map(|i| normalize_lemma(fields[4 + 2 * i]))
            .collect();
        let p_cnt: usize = fields[words_end]
            .parse()
            .map_err(|_| malformed(path, line_num, "bad pointer count"))?;
        if fields.len() < words_end + 1 + 4 * p_cnt {
            return Err(malformed(path, line_num, "truncated pointer list"));
        }

        let mut hypernyms = Vec::new();
        let mut hyponyms = Vec::new();
        for p in 0..p_cnt {
            let base = words_end + 1 + 4 * p;
            let symbol = fields[base];
            let target_offset: u64 = fields[base + 1]
                .parse()
                .map_err(|_| malformed(path, line_num, "bad pointer offset"))?;
            let target_pos = fields[base + 2]
                .chars()
                .next()
                .and_then(Pos::from_letter)
                .ok_or_else(|| malformed(path, line_num, "bad pointer pos"))?;
            match symbol {
                "@" | "@i" => hypernyms.push(synset_id(target_offset, target_pos)),
                "~" | "~i" => hyponyms.push(synset_id(target_offset, target_pos)),
                _ => {}
            }
        }

        out.push(Synset {
            id: synset_id(offset, pos),
            lemmas,
            pos,
            gloss,
            hypernyms,
            hyponyms,
        });
    }
    Ok(out)
}

/// Strip the adjective syntax marker `(p)`/`(a)`/`(ip)` and lowercase.
fn normalize_lemma(raw: &str) -> String {
    let stripped = raw.split('(').next().unwrap_or(raw);
    stripped.to_lowercase()
}

/// Parse an `index.<pos>` file to preserve sense order. Line format:
/// `lemma pos synset_cnt p_cnt [ptr...] sense_cnt tagsense_cnt offset [offset...]`
fn parse_index_file(
    path: &Path,
    pos: Pos,
    sense_order: &mut HashMap<(String, Pos), Vec<SynsetId>>,
) -> Result<(), LexiconError> {
    let text = read(path)?;
    for (lineno, line) in text.lines().enumerate() {
        let line_num = lineno + 1;
        if line.starts_with("  ") || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 5 {
            return Err(malformed(path, line_num, "too few fields"));
        }
        let lemma = fields[0].to_lowercase();
        let synset_cnt: usize = fields[2]
            .parse()
            .map_err(|_| malformed(path, line_num, "bad synset count"))?;
        let p_cnt: usize = fields[3]
            .parse()
            .map_err(|_| malformed(path, line_num, "bad pointer count"))?;
        let offsets_start = 4 + p_cnt + 2;
        if fields.len() < offsets_start + synset_cnt {
            return Err(malformed(path, line_num, "truncated offset list"));
        }
        let ids: Result<Vec<SynsetId>, LexiconError> = fields
            [offsets_start..offsets_start + synset_cnt]
            .iter()
            .map(|f| {
                f.parse::<u64>()
                    .map(|o| synset_id(o, pos))
                    .map_err(|_| malformed(path, line_num, "bad synset offset"))
            })
            .collect();
        sense_order.insert((lemma, pos), ids?);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, content: &str) {
        let mut f = fs::File::create(dir.join(name)).unwrap();
        f.write_all(content.as_bytes()).unwrap();
    }

    #[test]
    fn parses_minimal_wndb_pair() {
        let dir = tempfile::tempdir().unwrap();
        // prison -> correctional_institution, with an intentionally missing
        // inverse ~ on the target to exercise load-time repair.
        write_file(
            dir.path(),
            "data.noun",
            "  1 license line\n\
             00000001 06 n 01 prison 0 001 @ 00000002 n 0000 | a place of confinement\n\
             00000002 06 n 02 correctional_institution 0 penal_facility 0 000 | institution\n",
        );
        write_file(
            dir.path(),
            "index.noun",
            "  1 license line\n\
             prison n 1 1 @ 1 0 00000001\n\
             correctional_institution n 1 1 ~ 1 0 00000002\n",
        );
        let g = load_wndb(dir.path()).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.report().repaired_edges, 1);
        let prison = g.lookup_lemma("prison", Some(Pos::Noun));
        assert_eq!(prison.len(), 1);
        assert_eq!(prison[0].id, "00000001-n");
        assert_eq!(prison[0].hypernyms, vec!["00000002-n".to_string()]);
        assert_eq!(
            g.get("00000002-n").unwrap().hyponyms,
            vec!["00000001-n".to_string()]
        );
    }

    #[test]
    fn hex_word_count_parsed() {
        let dir = tempfile::tempdir().unwrap();
        let words: Vec<String> = (0..17).map(|i| format!("w{i} 0")).collect();
        write_file(
            dir.path(),
            "data.noun",
            &format!("00000001 06 n 11 {} 000 | many lemmas\n", words.join(" ")),
        );
        let g = load_wndb(dir.path()).unwrap();
        assert_eq!(g.get("00000001-n").unwrap().lemmas.len(), 17);
    }

    #[test]
    fn malformed_data_line_reports_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "data.noun", "garbage here\n");
        let err = load_wndb(dir.path()).unwrap_err();
        assert!(matches!(err, LexiconError::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn sense_order_from_index_preserved() {
        let dir = tempfile::tempdir().unwrap();
        write_file(
            dir.path(),
            "data.noun",
            "00000001 06 n 01 bank 0 000 | river bank\n\
             00000002 06 n 01 bank 0 000 | money bank\n",
        );
        // index lists the money sense first
        write_file(dir.path(), "index.noun", "bank n 2 0 2 0 00000002 00000001\n");
        let g = load_wndb(dir.path()).unwrap();
        let senses = g.lookup_lemma("bank", Some(Pos::Noun));
        assert_eq!(senses[0].id, "00000002-n");
        assert_eq!(senses[1].id, "00000001-n");
    }
}
