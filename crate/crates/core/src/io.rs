//! Line-oriented record formats.
//!
//! Lexicon file, one tab-separated record per line:
//!
//! ```text
//! term    kind      polarity   score
//! good    word      positive   0.5
//! very    adverb    n/a        1.5
//! ```
//!
//! Mention file, tab-separated, trailing fields optional:
//!
//! ```text
//! text    label    [target_score]    [entity]    [provenance]
//! ```
//!
//! Blank lines and lines starting with `#` are skipped in both formats.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::label::Label;
use crate::lexicon::{mask_target, Lexicon, Mention, Polarity};

pub fn parse_lexicon(source: &str, input: impl Read) -> Result<Lexicon> {
    let mut lexicon = Lexicon::new();
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        let lineno = n + 1;
        if skip(&line) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(source, lineno, format!("expected 4 fields, found {}", fields.len())));
        }
        let score: f64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(source, lineno, format!("bad score `{}`", fields[3])))?;
        let result = match fields[1] {
            "word" => {
                let polarity: Polarity =
                    fields[2].parse().map_err(|e: Error| Error::parse(source, lineno, e.to_string()))?;
                lexicon.insert_word(fields[0], polarity, score)
            }
            "adverb" => lexicon.insert_adverb(fields[0], score),
            other => return Err(Error::parse(source, lineno, format!("unknown kind `{other}`"))),
        };
        result.map_err(|e| Error::parse(source, lineno, e.to_string()))?;
    }
    Ok(lexicon)
}

pub fn read_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(&path.display().to_string(), file)
}

pub fn write_lexicon_to(lexicon: &Lexicon, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# term\tkind\tpolarity\tscore")?;
    for (term, entry) in lexicon.words() {
        writeln!(out, "{term}\tword\t{}\t{}", entry.polarity, entry.score)?;
    }
    for (term, score) in lexicon.adverbs() {
        writeln!(out, "{term}\tadverb\tn/a\t{score}")?;
    }
    Ok(())
}

pub fn write_lexicon(lexicon: &Lexicon, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_lexicon_to(lexicon, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// One line of a mention file.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionRecord {
    pub text: String,
    pub label: Label,
    pub target_score: Option<f64>,
    pub entity: Option<String>,
    /// Source mention and substitution, for augmented records.
    pub provenance: Option<String>,
}

impl MentionRecord {
    pub fn new(text: impl Into<String>, label: Label) -> Self {
        MentionRecord { text: text.into(), label, target_score: None, entity: None, provenance: None }
    }

    /// Text with the entity (if any) masked.
    pub fn masked_text(&self) -> String {
        match &self.entity {
            Some(entity) if !entity.is_empty() => mask_target(&self.text, entity),
            _ => self.text.clone(),
        }
    }

    pub fn to_mention(&self, lexicon: &Lexicon) -> Mention {
        Mention::new(&self.masked_text(), self.label, self.target_score, lexicon)
    }
}

pub fn parse_mentions(source: &str, input: impl Read) -> Result<Vec<MentionRecord>> {
    let mut records = Vec::new();
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        let lineno = n + 1;
        if skip(&line) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.len() > 5 {
            return Err(Error::parse(source, lineno, format!("expected 2 to 5 fields, found {}", fields.len())));
        }
        let label: Label = fields[1].parse().map_err(|e: Error| Error::parse(source, lineno, e.to_string()))?;
        let optional = |i: usize| fields.get(i).map(|f| f.trim()).filter(|f| !f.is_empty());
        let target_score = optional(2)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(source, lineno, format!("bad target score `{f}`")))
            })
            .transpose()?;
        records.push(MentionRecord {
            text: fields[0].to_string(),
            label,
            target_score,
            entity: optional(3).map(str::to_string),
            provenance: optional(4).map(str::to_string),
        });
    }
    Ok(records)
}

pub fn read_mentions(path: impl AsRef<Path>) -> Result<Vec<MentionRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_mentions(&path.display().to_string(), file)
}

pub fn write_mentions_to(records: &[MentionRecord], mut out: impl Write) -> std::io::Result<()> {
    for r in records {
        let text = r.text.replace(['\t', '\n', '\r'], " ");
        let target = r.target_score.map(|t| t.to_string()).unwrap_or_default();
        let entity = r.entity.as_deref().unwrap_or("");
        match &r.provenance {
            Some(p) => writeln!(out, "{text}\t{}\t{target}\t{entity}\t{p}", r.label)?,
            None if r.entity.is_some() => writeln!(out, "{text}\t{}\t{target}\t{entity}", r.label)?,
            None if r.target_score.is_some() => writeln!(out, "{text}\t{}\t{target}", r.label)?,
            None => writeln!(out, "{text}\t{}", r.label)?,
        }
    }
    Ok(())
}

pub fn write_mentions(records: &[MentionRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_mentions_to(records, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn skip(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_lexicon() {
        let text = "# header\nbeautiful\tword\tpositive\t0.75\nvery\tadverb\tn/a\t1.5\n\nhorrible\tword\tnegative\t-1\n";
        let lex = parse_lexicon("mem", text.as_bytes()).unwrap();
        assert_eq!(lex.word("beautiful").unwrap().score, 0.75);
        assert_eq!(lex.word("horrible").unwrap().polarity, Polarity::Negative);
        assert_eq!(lex.adverb_score("very"), Some(1.5));
    }

    #[test]
    fn lexicon_errors_carry_line_numbers() {
        let err = parse_lexicon("lex.tsv", "good\tword\tpositive\t0.5\nbad\tword\tpositive\t-1\n".as_bytes())
            .unwrap_err();
        assert!(err.to_string().starts_with("lex.tsv:2:"), "{err}");
        assert!(parse_lexicon("x", "good\tthing\tpositive\t1".as_bytes()).is_err());
        assert!(parse_lexicon("x", "good\tword\tpositive".as_bytes()).is_err());
        assert!(parse_lexicon("x", "good\tword\tpositive\tabc".as_bytes()).is_err());
    }

    #[test]
    fn parses_mentions_with_optional_fields() {
        let text = "S5 is very beautiful\tpositive\t1.125\n\
                    Company B is horrible\tnegative\t\tCompany B\n\
                    plain\tneutral\n";
        let recs = parse_mentions("m", text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].target_score, Some(1.125));
        assert_eq!(recs[1].target_score, None);
        assert_eq!(recs[1].masked_text(), "TARGET is horrible");
        assert_eq!(recs[2].label, Label::Neutral);
        assert!(parse_mentions("m", "text\tmaybe\n".as_bytes()).is_err());
        assert!(parse_mentions("m", "text\n".as_bytes()).is_err());
    }

    fn label_strategy() -> impl Strategy<Value = Label> {
        prop::sample::select(Label::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn mention_records_round_trip(
            text in "[a-zA-Z ,.!]{1,30}",
            label in label_strategy(),
            target in prop::option::of(-5.0f64..5.0),
            entity in prop::option::of("[a-zA-Z]{1,8}"),
            provenance in prop::option::of("[a-z0-9:>]{1,12}"),
        ) {
            let rec = MentionRecord { text, label, target_score: target, entity, provenance };
            let mut buf = Vec::new();
            write_mentions_to(std::slice::from_ref(&rec), &mut buf).unwrap();
            let back = parse_mentions("m", buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), 1);
            // text fields are whitespace-sensitive only at the ends
            prop_assert_eq!(&back[0].text, &rec.text);
            prop_assert_eq!(back[0].label, rec.label);
            prop_assert_eq!(back[0].target_score, rec.target_score);
            prop_assert_eq!(&back[0].entity, &rec.entity);
            prop_assert_eq!(&back[0].provenance, &rec.provenance);
        }

        #[test]
        fn lexicon_round_trips(scores in prop::collection::vec(0.01f64..3.0, 1..6), adverb in 0.0f64..3.0) {
            let mut lex = Lexicon::new();
            for (i, s) in scores.iter().enumerate() {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                lex = lex.with_word(&format!("w{i}"), sign * s).unwrap();
            }
            lex = lex.with_adverb("very", adverb).unwrap();
            let mut buf = Vec::new();
            write_lexicon_to(&lex, &mut buf).unwrap();
            prop_assert_eq!(parse_lexicon("l", buf.as_slice()).unwrap(), lex);
        }
    }
}
