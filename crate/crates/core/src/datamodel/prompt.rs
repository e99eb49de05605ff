use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Noun;
use crate::error::{Error, Result};

pub const NOUN_SLOT: &str = "[NOUN]";
pub const MASK_SLOT: &str = "[MASK]";

/// Which surface form of the noun fills the noun slot.
///
/// `None` marks noun-free prompts such as the dual-encoder text prompts,
/// where the noun is supplied by the image instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NounNumber {
    Singular,
    Plural,
    None,
}

impl FromStr for NounNumber {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "singular" => Ok(NounNumber::Singular),
            "plural" => Ok(NounNumber::Plural),
            "none" => Ok(NounNumber::None),
            other => Err(Error::InvalidArgument(format!("unknown noun number '{other}'"))),
        }
    }
}

impl fmt::Display for NounNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NounNumber::Singular => "singular",
            NounNumber::Plural => "plural",
            NounNumber::None => "none",
        })
    }
}

/// A cloze template with one `[MASK]` slot and (unless noun-free) one `[NOUN]` slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub pattern: String,
    pub noun_number: NounNumber,
}

impl PromptTemplate {
    pub fn new(id: &str, pattern: &str, noun_number: NounNumber) -> Result<Self> {
        let nouns = pattern.matches(NOUN_SLOT).count();
        let masks = pattern.matches(MASK_SLOT).count();
        let expected_nouns = usize::from(noun_number != NounNumber::None);
        if masks != 1 || nouns != expected_nouns {
            return Err(Error::InvalidArgument(format!(
                "prompt '{id}' must contain one {MASK_SLOT} and {expected_nouns} {NOUN_SLOT} slot(s), found {masks} and {nouns}"
            )));
        }
        Ok(Self {
            id: id.to_string(),
            pattern: pattern.to_string(),
            noun_number,
        })
    }

    /// Fills the noun slot, leaving `[MASK]` in place. An `a` immediately
    /// before the noun becomes `an` for vowel-initial forms.
    pub fn fill(&self, noun: &Noun) -> String {
        let form = match self.noun_number {
            NounNumber::Singular => noun.singular.as_str(),
            NounNumber::Plural => noun.plural.as_str(),
            NounNumber::None => return self.pattern.clone(),
        };
        let vowel = form.chars().next().is_some_and(|c| "aeiouAEIOU".contains(c));
        let slot = self.pattern.find(NOUN_SLOT).expect("validated at construction");
        let (head, tail) = self.pattern.split_at(slot);
        let tail = &tail[NOUN_SLOT.len()..];
        let article_start = head.len().saturating_sub(2);
        let bare_article = (head.ends_with("a ") || head.ends_with("A "))
            && (article_start == 0 || head[..article_start].ends_with(char::is_whitespace));
        if vowel && bare_article {
            let (before, article) = head.split_at(article_start);
            format!("{before}{}n {form}{tail}", &article[..1])
        } else {
            format!("{head}{form}{tail}")
        }
    }

    /// Parses a prompt bank: `id<TAB>pattern<TAB>noun_number` per line,
    /// `#` comments and blank lines ignored.
    pub fn parse_bank(text: &str) -> Result<Vec<PromptTemplate>> {
        let mut out: Vec<PromptTemplate> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse("prompt bank", lineno, "expected 3 tab-separated fields"));
            }
            let number: NounNumber = fields[2]
                .parse()
                .map_err(|e: Error| Error::parse("prompt bank", lineno, e.to_string()))?;
            let template = PromptTemplate::new(fields[0].trim(), fields[1], number)
                .map_err(|e| Error::parse("prompt bank", lineno, e.to_string()))?;
            if out.iter().any(|t| t.id == template.id) {
                return Err(Error::parse(
                    "prompt bank",
                    lineno,
                    format!("duplicate prompt id '{}'", template.id),
                ));
            }
            out.push(template);
        }
        Ok(out)
    }
}

/// The prompt bank shipped with the crate.
pub const DEFAULT_PROMPT_BANK: &str = include_str!("../../data/prompts.tsv");
