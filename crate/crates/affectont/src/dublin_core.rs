//! Dublin Core Simple metadata records for stimuli, serialized as RDF/XML
//! with a fixed seven-element layout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::{MediaKind, Stimulus};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DublinCoreRecord {
    pub identifier: String,
    pub creator: String,
    pub subject: String,
    pub contributor: String,
    /// ISO-8601 calendar date, e.g. `2008-09-30`.
    pub date: String,
    /// Source database name, e.g. `IAPS`.
    pub dc_type: String,
    pub format: String,
}

#[derive(Debug, Error)]
pub enum DublinCoreError {
    #[error("invalid date `{0}`: expected YYYY-MM-DD")]
    BadDate(String),
    #[error("cannot derive media kind for resource `{0}`")]
    UnresolvableMediaKind(String),
}

/// How dc:format renders: word style (`Image`) or MIME style (`image/jpeg`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatStyle {
    Word,
    Mime,
}

fn validate_date(date: &str) -> Result<(), DublinCoreError> {
    let bad = || DublinCoreError::BadDate(date.to_string());
    let parts: Vec<&str> = date.split('-').collect();
    if parts.len() != 3 || parts[0].len() != 4 || parts[1].len() != 2 || parts[2].len() != 2 {
        return Err(bad());
    }
    let year: i32 = parts[0].parse().map_err(|_| bad())?;
    let month: u32 = parts[1].parse().map_err(|_| bad())?;
    let day: u32 = parts[2].parse().map_err(|_| bad())?;
    let leap = year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
    let days_in_month = match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if leap => 29,
        2 => 28,
        _ => return Err(bad()),
    };
    if day == 0 || day > days_in_month {
        return Err(bad());
    }
    Ok(())
}

fn format_value(stim: &Stimulus, style: FormatStyle) -> String {
    match style {
        FormatStyle::Word => match stim.media_kind {
            MediaKind::Image => "Image".to_string(),
            MediaKind::Sound => "Sound".to_string(),
            MediaKind::Video => "Video".to_string(),
        },
        FormatStyle::Mime => {
            let ext = stim
                .resource
                .rsplit('.')
                .next()
                .unwrap_or("")
                .to_ascii_lowercase();
            let subtype = match ext.as_str() {
                "jpg" => "jpeg".to_string(),
                other => other.to_string(),
            };
            format!("{}/{subtype}", stim.media_kind)
        }
    }
}

pub fn derive_record(
    stim: &Stimulus,
    db_name: &str,
    creator: &str,
    contributor: &str,
    date: &str,
    style: FormatStyle,
) -> Result<DublinCoreRecord, DublinCoreError> {
    validate_date(date)?;
    Ok(DublinCoreRecord {
        identifier: stim.id.clone(),
        creator: creator.to_string(),
        subject: stim.raw_keyword.clone(),
        contributor: contributor.to_string(),
        date: date.to_string(),
        dc_type: db_name.to_string(),
        format: format_value(stim, style),
    })
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// RDF/XML rendering with the DCMES doctype and the elements in fixed order:
/// identifier, creator, subject, contributor, date, type, format.
pub fn serialize_dc(rec: &DublinCoreRecord) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\"?>\n");
    out.push_str(
        "<!DOCTYPE rdf:RDF PUBLIC \"-//DUBLIN CORE//DCMES DTD 2002/07/31//EN\" \
         \"http://dublincore.org/documents/2002/07/31/dcmes-xml/dcmes-xml-dtd.dtd\">\n",
    );
    out.push_str(
        "<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\" \
         xmlns:dc=\"http://purl.org/dc/elements/1.1/\">\n",
    );
    out.push_str("  <rdf:Description>\n");
    for (tag, value) in [
        ("identifier", &rec.identifier),
        ("creator", &rec.creator),
        ("subject", &rec.subject),
        ("contributor", &rec.contributor),
        ("date", &rec.date),
        ("type", &rec.dc_type),
        ("format", &rec.format),
    ] {
        out.push_str(&format!("    <dc:{tag}>{}</dc:{tag}>\n", xml_escape(value)));
    }
    out.push_str("  </rdf:Description>\n");
    out.push_str("</rdf:RDF>\n");
    out
}
