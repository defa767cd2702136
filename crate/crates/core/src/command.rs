//! Advice channel: a bilingual phrase dictionary and a minimum-edit-distance
//! matcher that maps a transcript onto an action or reward class.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::gridworld::Action;
use crate::reward::RewardClass;

const DEFAULT_DICTIONARY: &str = include_str!("../assets/dictionary.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Action,
    Reward,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Action => "action",
            Domain::Reward => "reward",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Es,
}

/// A class from either domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "domain", content = "class", rename_all = "lowercase")]
pub enum CommandClass {
    Action(Action),
    Reward(RewardClass),
}

impl CommandClass {
    pub fn domain(self) -> Domain {
        match self {
            CommandClass::Action(_) => Domain::Action,
            CommandClass::Reward(_) => Domain::Reward,
        }
    }

    pub fn all() -> impl Iterator<Item = CommandClass> {
        Action::ALL.into_iter().map(CommandClass::Action).chain(RewardClass::ALL.into_iter().map(CommandClass::Reward))
    }

    pub fn as_action(self) -> Option<Action> {
        match self {
            CommandClass::Action(a) => Some(a),
            CommandClass::Reward(_) => None,
        }
    }

    pub fn as_reward(self) -> Option<RewardClass> {
        match self {
            CommandClass::Reward(r) => Some(r),
            CommandClass::Action(_) => None,
        }
    }
}

impl fmt::Display for CommandClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandClass::Action(a) => write!(f, "action:{a}"),
            CommandClass::Reward(r) => write!(f, "reward:{r}"),
        }
    }
}

/// Lowercase, trim, collapse whitespace and strip diacritics.
pub fn normalize(text: &str) -> String {
    let folded: String = text.nfd().filter(|c| !is_combining_mark(*c)).collect::<String>().to_lowercase();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Edit distance between two character sequences (single-character
/// insertions, deletions and substitutions all cost 1).
pub fn edit_distance(a: &[char], b: &[char]) -> usize {
    if a.len() < b.len() {
        return edit_distance(b, a);
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Levenshtein distance between the normalized forms of `a` and `b`.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = normalize(a).chars().collect();
    let b: Vec<char> = normalize(b).chars().collect();
    edit_distance(&a, &b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    pub phrase: String,
    pub class: CommandClass,
    pub language: Language,
    #[serde(skip)]
    normalized: Vec<char>,
}

impl Entry {
    pub fn normalized(&self) -> String {
        self.normalized.iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub class: CommandClass,
    pub matched_phrase: String,
    pub distance: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DictionaryDocument {
    entry: Vec<EntryDocument>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDocument {
    phrase: String,
    domain: Domain,
    class: String,
    language: Language,
}

/// Validated phrase dictionary. Every class of both domains has at least one
/// phrase and normalized phrases are unique.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dictionary {
    entries: Vec<Entry>,
}

impl Dictionary {
    /// The shipped English/Spanish dictionary.
    pub fn default_bilingual() -> Dictionary {
        Dictionary::from_toml_str(DEFAULT_DICTIONARY).expect("shipped dictionary is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dictionary> {
        Dictionary::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn from_toml_str(text: &str) -> Result<Dictionary> {
        let doc: DictionaryDocument = toml::from_str(text)?;
        let entries = doc
            .entry
            .into_iter()
            .map(|e| {
                let class = match e.domain {
                    Domain::Action => CommandClass::Action(e.class.parse().map_err(Error::Dictionary)?),
                    Domain::Reward => CommandClass::Reward(e.class.parse().map_err(Error::Dictionary)?),
                };
                Ok((e.phrase, class, e.language))
            })
            .collect::<Result<Vec<_>>>()?;
        Dictionary::new(entries)
    }

    pub fn new(entries: impl IntoIterator<Item = (String, CommandClass, Language)>) -> Result<Dictionary> {
        let mut seen: HashMap<String, CommandClass> = HashMap::new();
        let mut out = Vec::new();
        for (phrase, class, language) in entries {
            let norm = normalize(&phrase);
            if norm.is_empty() {
                return Err(Error::Dictionary(format!("empty phrase for {class}")));
            }
            if let Some(other) = seen.insert(norm.clone(), class) {
                return Err(Error::Dictionary(format!("phrase `{norm}` appears more than once ({other} and {class})")));
            }
            out.push(Entry { phrase, class, language, normalized: norm.chars().collect() });
        }
        let dict = Dictionary { entries: out };
        for class in CommandClass::all() {
            if dict.phrases_for(class).next().is_none() {
                return Err(Error::Dictionary(format!("no phrase for {class}")));
            }
        }
        Ok(dict)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn phrases_for(&self, class: CommandClass) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(move |e| e.class == class)
    }

    /// Minimum-distance phrase of `domain`; ties go to the earliest entry.
    pub fn best_match(&self, input: &str, domain: Domain) -> Result<MatchResult> {
        let input: Vec<char> = normalize(input).chars().collect();
        let mut best: Option<(usize, &Entry)> = None;
        for entry in self.entries.iter().filter(|e| e.class.domain() == domain) {
            let d = edit_distance(&input, &entry.normalized);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, entry));
            }
        }
        let (distance, entry) = best.ok_or(Error::EmptyDomain(domain.name()))?;
        Ok(MatchResult { class: entry.class, matched_phrase: entry.phrase.clone(), distance })
    }
}
