use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const NOUN_TAG: &str = "NOUN";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Iterates `word<TAB>item1,item2,…` lines, skipping blanks.
fn tab_entries(text: &str) -> impl Iterator<Item = Result<(String, Vec<String>)>> + '_ {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let (word, rest) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected word<TAB>list"))?;
            let word = word.trim().to_lowercase();
            let items: Vec<String> = rest
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            if word.is_empty() || items.is_empty() {
                return Err(Error::parse(i + 1, "empty word or list"));
            }
            Ok((word, items))
        })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList(HashSet<String>);

impl StopwordList {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordList(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    /// One word per line.
    pub fn parse(text: &str) -> Self {
        Self::from_words(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon(HashMap<String, Vec<String>>);

impl SynonymLexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for entry in tab_entries(text) {
            let (word, syns) = entry?;
            let syns = syns.into_iter().map(|s| s.to_lowercase()).collect();
            map.insert(word, syns);
        }
        Ok(SynonymLexicon(map))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?)
    }

    pub fn insert(&mut self, word: &str, synonyms: &[&str]) -> Result<()> {
        if synonyms.is_empty() {
            return Err(Error::InvalidArgument(format!("no synonyms for {word:?}")));
        }
        self.0.insert(
            word.to_lowercase(),
            synonyms.iter().map(|s| s.to_lowercase()).collect(),
        );
        Ok(())
    }

    pub fn synonyms(&self, word: &str) -> Option<&[String]> {
        self.0.get(word).map(Vec::as_slice)
    }

    /// True when either word lists the other as a synonym.
    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        let lists = |x: &str, y: &str| self.0.get(x).is_some_and(|s| s.iter().any(|w| w == y));
        lists(a, b) || lists(b, a)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PosLexicon(HashMap<String, HashSet<String>>);

impl PosLexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map: HashMap<String, HashSet<String>> = HashMap::new();
        for entry in tab_entries(text) {
            let (word, tags) = entry?;
            map.entry(word)
                .or_default()
                .extend(tags.into_iter().map(|t| t.to_uppercase()));
        }
        Ok(PosLexicon(map))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?)
    }

    pub fn insert(&mut self, word: &str, tags: &[&str]) {
        self.0
            .entry(word.to_lowercase())
            .or_default()
            .extend(tags.iter().map(|t| t.to_uppercase()));
    }

    /// Unknown words are not nouns.
    pub fn is_noun(&self, word: &str) -> bool {
        self.0.get(word).is_some_and(|tags| tags.contains(NOUN_TAG))
    }
}

/// Optional lexical resources consumed by METEOR and the mutations.
#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub stopwords: Option<StopwordList>,
    pub synonyms: Option<SynonymLexicon>,
    pub pos: Option<PosLexicon>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopwords_one_per_line() {
        let s = StopwordList::parse("I\nthe\n\n a \n");
        assert_eq!(s.len(), 3);
        assert!(s.contains("i") && s.contains("the") && s.contains("a"));
    }

    #[test]
    fn synonym_lines() {
        let s = SynonymLexicon::parse("good\tfine, nice\nbig\tlarge\n").unwrap();
        assert_eq!(s.synonyms("good").unwrap(), ["fine", "nice"]);
        assert!(s.are_synonyms("large", "big"));
        assert!(!s.are_synonyms("good", "big"));
    }

    #[test]
    fn malformed_lexicon_line() {
        let err = SynonymLexicon::parse("good\tfine\nbad line\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(SynonymLexicon::parse("good\t , \n").is_err());
    }

    #[test]
    fn pos_tags() {
        let p = PosLexicon::parse("cake\tNOUN\nrun\tverb,noun\nquickly\tADV\n").unwrap();
        assert!(p.is_noun("cake"));
        assert!(p.is_noun("run"));
        assert!(!p.is_noun("quickly"));
        assert!(!p.is_noun("unknown"));
    }
}
