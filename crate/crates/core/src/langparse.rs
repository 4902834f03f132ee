//! Rule-based extraction of (figure, relation, ground) tuples from short
//! English descriptions, matched against a target vocabulary and a map's
//! landmark names.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::GridMap;

/// Minimum token-multiset cosine similarity for a phrase to count as a
/// mention of a vocabulary entry.
pub const MIN_MATCH_SCORE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("failed to read vocabulary file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse vocabulary JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
}

/// One grounded spatial statement: figure (target id), relation
/// (normalized preposition token), ground (landmark id).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpatialTuple {
    pub figure: String,
    pub relation: String,
    pub ground: String,
}

impl SpatialTuple {
    pub fn new(
        figure: impl Into<String>,
        relation: impl Into<String>,
        ground: impl Into<String>,
    ) -> Self {
        SpatialTuple { figure: figure.into(), relation: relation.into(), ground: ground.into() }
    }
}

impl std::fmt::Display for SpatialTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.figure, self.relation, self.ground)
    }
}

/// The tuples extracted from one sentence. May be empty; never holds
/// duplicates. Tuples are kept sorted for deterministic iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpatialLanguageObservation {
    tuples: Vec<SpatialTuple>,
    pub source_text: String,
}

impl SpatialLanguageObservation {
    pub fn new(tuples: impl IntoIterator<Item = SpatialTuple>, source_text: impl Into<String>) -> Self {
        let set: BTreeSet<SpatialTuple> = tuples.into_iter().collect();
        SpatialLanguageObservation {
            tuples: set.into_iter().collect(),
            source_text: source_text.into(),
        }
    }

    pub fn tuples(&self) -> &[SpatialTuple] {
        &self.tuples
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Distinct figures, sorted.
    pub fn figures(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.tuples.iter().map(|t| t.figure.as_str()).collect();
        out.dedup();
        out
    }

    /// Tuples whose figure is `figure`.
    pub fn for_figure(&self, figure: &str) -> Vec<&SpatialTuple> {
        self.tuples.iter().filter(|t| t.figure == figure).collect()
    }
}

/// Which source supplies the reference direction for a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForKind {
    /// Front model; antonym obtained by rotating the predicted angle by pi.
    RelativeFront,
    /// Left model; antonym obtained the same way.
    RelativeLeft,
    /// Fixed cardinal table.
    Absolute,
    /// Direction factor does not apply.
    None,
}

#[derive(Debug, Clone, Copy)]
pub struct RelationInfo {
    pub requires_for: bool,
    pub for_kind: ForKind,
    pub antonym: Option<&'static str>,
    /// Scales the distance falloff width for this relation.
    pub sigma_multiplier: f64,
    /// Reference angle for absolute relations, radians in [0, 2pi).
    pub absolute_theta: Option<f64>,
}

/// The closed set of prepositions the extractor understands.
pub struct RelationLexicon {
    entries: BTreeMap<&'static str, RelationInfo>,
}

impl RelationLexicon {
    pub fn standard() -> &'static RelationLexicon {
        static LEX: OnceLock<RelationLexicon> = OnceLock::new();
        LEX.get_or_init(build_lexicon)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn info(&self, relation: &str) -> Option<&RelationInfo> {
        self.entries.get(relation)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&'static str, &RelationInfo)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn requires_for(&self, relation: &str) -> Result<(bool, ForKind), ParseError> {
        let info = self
            .info(relation)
            .ok_or_else(|| ParseError::UnknownRelation(relation.to_string()))?;
        Ok((info.requires_for, info.for_kind))
    }

    pub fn sigma_multiplier(&self, relation: &str) -> Result<f64, ParseError> {
        let info = self
            .info(relation)
            .ok_or_else(|| ParseError::UnknownRelation(relation.to_string()))?;
        Ok(info.sigma_multiplier)
    }
}

/// Whether the relation needs a reference direction, and where the
/// direction comes from.
pub fn requires_for(relation: &str) -> Result<(bool, ForKind), ParseError> {
    RelationLexicon::standard().requires_for(relation)
}

fn build_lexicon() -> RelationLexicon {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    let mut entries = BTreeMap::new();
    let mut dir = |name: &'static str,
                   kind: ForKind,
                   antonym: Option<&'static str>,
                   theta: Option<f64>| {
        entries.insert(
            name,
            RelationInfo {
                requires_for: true,
                for_kind: kind,
                antonym,
                sigma_multiplier: 2.0,
                absolute_theta: theta,
            },
        );
    };
    dir("front", ForKind::RelativeFront, Some("behind"), None);
    dir("behind", ForKind::RelativeFront, Some("front"), None);
    dir("left", ForKind::RelativeLeft, Some("right"), None);
    dir("right", ForKind::RelativeLeft, Some("left"), None);
    dir("east", ForKind::Absolute, Some("west"), Some(0.0));
    dir("north", ForKind::Absolute, Some("south"), Some(FRAC_PI_2));
    dir("west", ForKind::Absolute, Some("east"), Some(PI));
    dir("south", ForKind::Absolute, Some("north"), Some(3.0 * FRAC_PI_2));
    dir("northeast", ForKind::Absolute, Some("southwest"), Some(FRAC_PI_4));
    dir("northwest", ForKind::Absolute, Some("southeast"), Some(3.0 * FRAC_PI_4));
    dir("southwest", ForKind::Absolute, Some("northeast"), Some(5.0 * FRAC_PI_4));
    dir("southeast", ForKind::Absolute, Some("northwest"), Some(7.0 * FRAC_PI_4));
    dir("above", ForKind::Absolute, Some("below"), Some(FRAC_PI_2));
    dir("top", ForKind::Absolute, Some("under"), Some(FRAC_PI_2));
    dir("below", ForKind::Absolute, Some("above"), Some(3.0 * FRAC_PI_2));
    dir("under", ForKind::Absolute, Some("top"), Some(3.0 * FRAC_PI_2));
    dir("down", ForKind::Absolute, None, Some(3.0 * FRAC_PI_2));

    let mut prox = |name: &'static str, sigma_multiplier: f64| {
        entries.insert(
            name,
            RelationInfo {
                requires_for: false,
                for_kind: ForKind::None,
                antonym: None,
                sigma_multiplier,
                absolute_theta: None,
            },
        );
    };
    prox("near", 1.0);
    prox("beside", 1.0);
    prox("next", 1.0);
    prox("along", 1.0);
    prox("between", 1.0);
    prox("at", 0.5);
    prox("on", 0.5);
    prox("in", 0.5);

    RelationLexicon { entries }
}

/// Natural surface rendering of a relation token, suitable for inserting
/// between a figure phrase and a ground phrase. Parsing the result
/// recovers the original token.
pub fn surface_form(relation: &str) -> &str {
    match relation {
        "front" => "in front of",
        "top" => "on top of",
        "left" => "to the left of",
        "right" => "to the right of",
        "next" => "next to",
        "north" | "south" | "east" | "west" | "northeast" | "northwest" | "southeast"
        | "southwest" => {
            static CARDINAL: OnceLock<BTreeMap<&'static str, String>> = OnceLock::new();
            let table = CARDINAL.get_or_init(|| {
                ["north", "south", "east", "west", "northeast", "northwest", "southeast",
                 "southwest"]
                    .iter()
                    .map(|r| (*r, format!("{r} of")))
                    .collect()
            });
            table[relation].as_str()
        }
        other => other,
    }
}

/// Maps identifiers to lowercase synonym phrases used for mention matching.
/// The lowercased identifier itself is always included as a synonym.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: BTreeMap<String, Vec<String>>,
}

impl Vocabulary {
    pub fn new(entries: impl IntoIterator<Item = (String, Vec<String>)>) -> Self {
        let mut out = BTreeMap::new();
        for (id, synonyms) in entries {
            let mut syns: Vec<String> = synonyms.into_iter().map(|s| s.to_lowercase()).collect();
            let lower = id.to_lowercase();
            if !syns.contains(&lower) {
                syns.push(lower);
            }
            out.insert(id, syns);
        }
        Vocabulary { entries: out }
    }

    /// Matching vocabulary over a map's landmarks.
    pub fn from_map(map: &GridMap) -> Self {
        Vocabulary::new(map.landmarks().map(|lm| (lm.id.clone(), lm.synonyms.clone())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ParseError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ParseError> {
        let file: VocabularyFile = serde_json::from_str(text)?;
        Ok(Vocabulary::new(file.targets.into_iter().map(|t| (t.id, t.synonyms))))
    }

    pub fn to_json(&self) -> String {
        let file = VocabularyFile {
            targets: self
                .entries
                .iter()
                .map(|(id, syns)| VocabularyEntry { id: id.clone(), synonyms: syns.clone() })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("vocabulary serialization cannot fail")
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    /// Synonym phrases for `id`; empty when the id is unknown.
    pub fn synonyms(&self, id: &str) -> &[String] {
        self.entries.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn iter(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.entries.iter()
    }
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    targets: Vec<VocabularyEntry>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyEntry {
    id: String,
    synonyms: Vec<String>,
}

/// One line of an annotated sentence corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusLine {
    pub text: String,
    pub map: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_tuples: Option<Vec<(String, String, String)>>,
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusLine>, ParseError> {
    let text = std::fs::read_to_string(path)?;
    parse_corpus(&text)
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusLine>, ParseError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_str(l).map_err(ParseError::from))
        .collect()
}

/// Micro-averaged precision/recall accumulator for tuple extraction.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExtractionScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl ExtractionScore {
    pub fn add_case(&mut self, extracted: &SpatialLanguageObservation, gold: &[SpatialTuple]) {
        let gold: BTreeSet<&SpatialTuple> = gold.iter().collect();
        for t in extracted.tuples() {
            if gold.contains(t) {
                self.true_positives += 1;
            } else {
                self.false_positives += 1;
            }
        }
        self.false_negatives +=
            gold.iter().filter(|g| !extracted.tuples().contains(g)).count();
    }

    pub fn precision(&self) -> f64 {
        let denom = self.true_positives + self.false_positives;
        if denom == 0 { 1.0 } else { self.true_positives as f64 / denom as f64 }
    }

    pub fn recall(&self) -> f64 {
        let denom = self.true_positives + self.false_negatives;
        if denom == 0 { 1.0 } else { self.true_positives as f64 / denom as f64 }
    }
}

/// Best vocabulary entry for a phrase by token-multiset cosine similarity,
/// or None when every entry scores below [`MIN_MATCH_SCORE`]. Ties go to
/// the lexicographically smallest id.
pub fn match_symbol(phrase: &str, vocabulary: &Vocabulary) -> Option<(String, f64)> {
    let phrase_counts = token_counts(phrase);
    if phrase_counts.is_empty() {
        return None;
    }
    let mut best: Option<(String, f64)> = None;
    for (id, synonyms) in vocabulary.iter() {
        let mut id_score = 0.0_f64;
        for syn in synonyms {
            let s = cosine(&phrase_counts, &token_counts(syn));
            if s > id_score {
                id_score = s;
            }
        }
        if best.as_ref().is_none_or(|(_, b)| id_score > *b) {
            best = Some((id.clone(), id_score));
        }
    }
    best.filter(|(_, s)| *s >= MIN_MATCH_SCORE)
}

fn token_counts(text: &str) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for tok in text.split_whitespace() {
        let tok = tok.to_lowercase();
        let tok = tok.trim_matches(|c: char| !c.is_alphanumeric());
        if !tok.is_empty() {
            *counts.entry(tok.to_string()).or_insert(0) += 1;
        }
    }
    counts
}

fn cosine(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(t, &ca)| b.get(t).map(|&cb| (ca * cb) as f64))
        .sum();
    let norm = |m: &BTreeMap<String, usize>| {
        m.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
    };
    dot / (norm(a) * norm(b))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    /// Clause break from punctuation.
    Comma,
    /// Clause break from the word "and".
    And,
}

fn tokenize(text: &str) -> Vec<Tok> {
    let mut toks = Vec::new();
    for raw in text.split_whitespace() {
        let lower = raw.to_lowercase();
        let stripped = lower.trim_start_matches(|c: char| !c.is_alphanumeric());
        let word = stripped.trim_end_matches(|c: char| !c.is_alphanumeric());
        let trailing = &stripped[word.len()..];
        if !word.is_empty() {
            if word == "and" {
                toks.push(Tok::And);
            } else {
                toks.push(Tok::Word(word.to_string()));
            }
        }
        if trailing.chars().any(|c| matches!(c, ',' | ';' | '.' | ':')) {
            toks.push(Tok::Comma);
        }
    }
    toks
}

/// Multiword preposition surface forms, longest first. Collapsing them
/// before keyword scanning keeps embedded prepositions ("in", "on",
/// "right") from emitting spurious tuples.
const MULTIWORD_RELATIONS: &[(&[&str], &str)] = &[
    (&["on", "the", "left", "of"], "left"),
    (&["on", "the", "right", "of"], "right"),
    (&["right", "next", "to"], "next"),
    (&["in", "front", "of"], "front"),
    (&["on", "top", "of"], "top"),
    (&["on", "the", "left"], "left"),
    (&["on", "the", "right"], "right"),
    (&["in", "front"], "front"),
    (&["on", "top"], "top"),
    (&["in", "between"], "between"),
    (&["close", "to"], "near"),
];

fn normalize_multiword(toks: Vec<Tok>) -> Vec<Tok> {
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    'outer: while i < toks.len() {
        for (pattern, replacement) in MULTIWORD_RELATIONS {
            if i + pattern.len() <= toks.len()
                && pattern
                    .iter()
                    .zip(&toks[i..i + pattern.len()])
                    .all(|(p, t)| matches!(t, Tok::Word(w) if w == p))
            {
                out.push(Tok::Word(replacement.to_string()));
                i += pattern.len();
                continue 'outer;
            }
        }
        out.push(toks[i].clone());
        i += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Target(String),
    Ground(String),
    Relation(String),
    Word,
    Comma,
    And,
}

/// Classifies the token stream into mentions, relation keywords, and
/// breaks. Mentions are found longest-first over n-grams of up to 4
/// consecutive plain words; n-grams containing relation keywords are not
/// mention candidates, so "behind belmont" cannot swallow its keyword.
fn scan_items(
    toks: &[Tok],
    targets: &Vocabulary,
    grounds: &Vocabulary,
    lex: &RelationLexicon,
) -> Vec<Item> {
    let mut items = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let w = match &toks[i] {
            Tok::Comma => {
                items.push(Item::Comma);
                i += 1;
                continue;
            }
            Tok::And => {
                items.push(Item::And);
                i += 1;
                continue;
            }
            Tok::Word(w) => w,
        };
        if lex.contains(w) {
            items.push(Item::Relation(w.clone()));
            i += 1;
            continue;
        }
        let mut run = 0;
        while run < 4 && i + run < toks.len() {
            match &toks[i + run] {
                Tok::Word(t) if !lex.contains(t) => run += 1,
                _ => break,
            }
        }
        let mut matched = None;
        for n in (1..=run).rev() {
            let phrase = toks[i..i + n]
                .iter()
                .map(|t| match t {
                    Tok::Word(w) => w.as_str(),
                    _ => unreachable!("run holds only plain words"),
                })
                .collect::<Vec<_>>()
                .join(" ");
            let target = match_symbol(&phrase, targets);
            let ground = match_symbol(&phrase, grounds);
            matched = match (target, ground) {
                (Some((tid, ts)), Some((gid, gs))) => {
                    Some((if ts >= gs { Item::Target(tid) } else { Item::Ground(gid) }, n))
                }
                (Some((tid, _)), None) => Some((Item::Target(tid), n)),
                (None, Some((gid, _))) => Some((Item::Ground(gid), n)),
                (None, None) => continue,
            };
            break;
        }
        match matched {
            Some((item, n)) => {
                items.push(item);
                i += n;
            }
            None => {
                items.push(Item::Word);
                i += 1;
            }
        }
    }
    items
}

/// Extracts every (figure, relation, ground) statement from `sentence`.
/// Unrecognized sentences yield an empty observation; this never fails.
///
/// Pairing walks clause segments (split on commas and "and") left to
/// right: each relation keyword attaches to the nearest following landmark
/// mention in its segment, "between A and B" becomes near-A plus near-B,
/// and a landmark reached with no keyword anywhere in its segment falls
/// back to relation "at". Conjoined figure mentions share the statements
/// that follow them.
pub fn extract_tuples(
    sentence: &str,
    map: &GridMap,
    targets: &Vocabulary,
) -> SpatialLanguageObservation {
    let lex = RelationLexicon::standard();
    let grounds = Vocabulary::from_map(map);
    let toks = normalize_multiword(tokenize(sentence));
    let items = scan_items(&toks, targets, &grounds, lex);

    let mut out: BTreeSet<SpatialTuple> = BTreeSet::new();
    let mut active_figures: Vec<String> = Vec::new();
    // Set once a relation or ground follows the current figure group;
    // the next target mention then starts a new group.
    let mut content_since_target = false;
    let mut pending: Vec<String> = Vec::new();
    let mut segment_saw_keyword = false;
    let mut between_remaining = 0u8;

    for item in items {
        match item {
            Item::Target(f) => {
                if content_since_target {
                    active_figures.clear();
                    content_since_target = false;
                }
                active_figures.push(f);
                pending.clear();
                segment_saw_keyword = false;
                between_remaining = 0;
            }
            Item::And if between_remaining == 1 => {}
            Item::Comma | Item::And => {
                pending.clear();
                segment_saw_keyword = false;
                between_remaining = 0;
            }
            Item::Relation(r) => {
                content_since_target = true;
                segment_saw_keyword = true;
                if r == "between" {
                    between_remaining = 2;
                } else {
                    pending.push(r);
                }
            }
            Item::Ground(g) => {
                content_since_target = true;
                if active_figures.is_empty() {
                    continue;
                }
                if between_remaining > 0 {
                    for f in &active_figures {
                        out.insert(SpatialTuple::new(f.clone(), "near", g.clone()));
                    }
                    between_remaining -= 1;
                } else if !pending.is_empty() {
                    for r in pending.drain(..) {
                        for f in &active_figures {
                            out.insert(SpatialTuple::new(f.clone(), r.clone(), g.clone()));
                        }
                    }
                } else if !segment_saw_keyword {
                    for f in &active_figures {
                        out.insert(SpatialTuple::new(f.clone(), "at", g.clone()));
                    }
                }
            }
            Item::Word => {}
        }
    }

    SpatialLanguageObservation::new(out, sentence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{Landmark, LandmarkKind};

    fn demo_map() -> GridMap {
        let lm = |id: &str, syns: &[&str], cells: Vec<(i32, i32)>| {
            Landmark::new(
                id,
                LandmarkKind::Building,
                syns.iter().map(|s| s.to_string()).collect(),
                cells,
            )
            .unwrap()
        };
        GridMap::new(
            "demo",
            41,
            41,
            5.0,
            vec![
                lm("Belmont", &["belmont"], vec![(10, 18), (11, 18)]),
                lm("HiLo", &["hilo", "hi-lo"], vec![(20, 8), (21, 8)]),
                lm("Walmart", &["walmart"], vec![(30, 30)]),
            ],
        )
        .unwrap()
    }

    fn demo_targets() -> Vocabulary {
        Vocabulary::new(vec![
            ("RedCar".to_string(), vec!["red honda".to_string(), "red car".to_string()]),
            ("BlueTruck".to_string(), vec!["blue truck".to_string(), "truck".to_string()]),
        ])
    }

    fn tuples(obs: &SpatialLanguageObservation) -> Vec<(String, String, String)> {
        obs.tuples()
            .iter()
            .map(|t| (t.figure.clone(), t.relation.clone(), t.ground.clone()))
            .collect()
    }

    #[test]
    fn match_symbol_examples() {
        let vocab = Vocabulary::new(vec![("Belmont".to_string(), vec!["belmont".to_string()])]);
        let (id, score) = match_symbol("the Belmont", &vocab).unwrap();
        assert_eq!(id, "Belmont");
        assert!((score - 1.0 / 2.0_f64.sqrt()).abs() < 1e-12);

        let targets = demo_targets();
        let (id, score) = match_symbol("red Honda", &targets).unwrap();
        assert_eq!(id, "RedCar");
        assert!((score - 1.0).abs() < 1e-12);

        let only_red = Vocabulary::new(vec![(
            "RedCar".to_string(),
            vec!["red honda".to_string()],
        )]);
        assert!(match_symbol("blue sedan", &only_red).is_none());
    }

    #[test]
    fn extracts_two_clause_sentence() {
        let obs = extract_tuples(
            "the red Honda is behind Belmont, near Hi-Lo",
            &demo_map(),
            &demo_targets(),
        );
        assert_eq!(
            tuples(&obs),
            vec![
                ("RedCar".into(), "behind".into(), "Belmont".into()),
                ("RedCar".into(), "near".into(), "HiLo".into()),
            ]
        );
    }

    #[test]
    fn extracts_single_clause_and_empty() {
        let obs = extract_tuples("the red Honda is at Belmont", &demo_map(), &demo_targets());
        assert_eq!(tuples(&obs), vec![("RedCar".into(), "at".into(), "Belmont".into())]);

        let obs = extract_tuples("hello world", &demo_map(), &demo_targets());
        assert!(obs.is_empty());
    }

    #[test]
    fn between_decomposes_into_two_near_tuples() {
        let obs = extract_tuples(
            "the blue truck is between Belmont and Walmart",
            &demo_map(),
            &demo_targets(),
        );
        assert_eq!(
            tuples(&obs),
            vec![
                ("BlueTruck".into(), "near".into(), "Belmont".into()),
                ("BlueTruck".into(), "near".into(), "Walmart".into()),
            ]
        );
    }

    #[test]
    fn keywordless_landmark_falls_back_to_at() {
        let obs = extract_tuples("the red honda, Belmont", &demo_map(), &demo_targets());
        assert_eq!(tuples(&obs), vec![("RedCar".into(), "at".into(), "Belmont".into())]);
    }

    #[test]
    fn multiword_preposition_emits_no_spurious_tuple() {
        let obs = extract_tuples(
            "the red Honda is in front of Belmont",
            &demo_map(),
            &demo_targets(),
        );
        assert_eq!(tuples(&obs), vec![("RedCar".into(), "front".into(), "Belmont".into())]);
    }

    #[test]
    fn conjoined_figures_share_relations() {
        let obs = extract_tuples(
            "the red honda and the blue truck are near Walmart",
            &demo_map(),
            &demo_targets(),
        );
        assert_eq!(
            tuples(&obs),
            vec![
                ("BlueTruck".into(), "near".into(), "Walmart".into()),
                ("RedCar".into(), "near".into(), "Walmart".into()),
            ]
        );
    }

    #[test]
    fn requires_for_examples() {
        assert_eq!(requires_for("behind").unwrap(), (true, ForKind::RelativeFront));
        assert_eq!(requires_for("near").unwrap(), (false, ForKind::None));
        assert_eq!(requires_for("north").unwrap(), (true, ForKind::Absolute));
        let err = requires_for("sideways").unwrap_err();
        assert!(matches!(err, ParseError::UnknownRelation(t) if t == "sideways"));
    }

    #[test]
    fn for_requiring_set_is_exact() {
        let expected: BTreeSet<&str> = [
            "above", "below", "down", "top", "under", "north", "east", "south", "west",
            "northwest", "northeast", "southwest", "southeast", "front", "behind", "left",
            "right",
        ]
        .into_iter()
        .collect();
        let actual: BTreeSet<&str> = RelationLexicon::standard()
            .relations()
            .filter(|(_, info)| info.requires_for)
            .map(|(name, _)| name)
            .collect();
        assert_eq!(actual, expected);
    }

    #[test]
    fn surface_forms_round_trip_through_parser() {
        let map = demo_map();
        let targets = demo_targets();
        for (relation, _) in RelationLexicon::standard().relations() {
            if relation == "between" {
                continue;
            }
            let text = format!("the red honda is {} Belmont", surface_form(relation));
            let obs = extract_tuples(&text, &map, &targets);
            assert_eq!(
                tuples(&obs),
                vec![("RedCar".into(), relation.into(), "Belmont".into())],
                "surface form for {relation:?} did not round-trip: {text:?}"
            );
        }
    }

    #[test]
    fn reparsing_canonical_rendering_is_idempotent() {
        let map = demo_map();
        let targets = demo_targets();
        let canonical = "RedCar is behind Belmont";
        let obs = extract_tuples(canonical, &map, &targets);
        assert_eq!(tuples(&obs), vec![("RedCar".into(), "behind".into(), "Belmont".into())]);
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let vocab = demo_targets();
        let reparsed = Vocabulary::from_json(&vocab.to_json()).unwrap();
        assert_eq!(vocab, reparsed);
    }

    #[test]
    fn extraction_score_counts() {
        let gold = vec![
            SpatialTuple::new("RedCar", "behind", "Belmont"),
            SpatialTuple::new("RedCar", "near", "HiLo"),
        ];
        let extracted = SpatialLanguageObservation::new(
            vec![
                SpatialTuple::new("RedCar", "behind", "Belmont"),
                SpatialTuple::new("RedCar", "at", "Walmart"),
            ],
            "x",
        );
        let mut score = ExtractionScore::default();
        score.add_case(&extracted, &gold);
        assert_eq!(score.true_positives, 1);
        assert_eq!(score.false_positives, 1);
        assert_eq!(score.false_negatives, 1);
        assert!((score.precision() - 0.5).abs() < 1e-12);
        assert!((score.recall() - 0.5).abs() < 1e-12);
    }
}
