//! Per-relation template banks and rendering.
//!
//! Placeholders are `{subject}` and `{object}`. The legacy spelling
//! `{entity}` is accepted on input and rewritten to `{object}`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::keyed_stream;
use crate::triple::{KnowledgeTriple, RelationRegistry};

pub const SUBJECT: &str = "{subject}";
pub const OBJECT: &str = "{object}";
pub const OBJECT_ALIAS: &str = "{entity}";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("bank is a {found:?} bank, expected {expected:?}")]
    WrongKind { expected: BankKind, found: BankKind },
    #[error("no template for relation {0:?}")]
    MissingTemplate(String),
    #[error("template index {index} out of range for relation {relation:?} ({len} templates)")]
    IndexOutOfRange { relation: String, index: usize, len: usize },
    #[error("relation {0:?} has an empty template list")]
    EmptyList(String),
    #[error("template {template:?} for {relation:?}: {reason}")]
    BadTemplate { relation: String, template: String, reason: &'static str },
    #[error("triple field {0} is empty")]
    InvalidTriple(&'static str),
    #[error("diversity mode needs {needed} templates but relation {relation:?} has {available}")]
    NotEnoughTemplates { relation: String, needed: usize, available: usize },
    #[error("template count must be at least 1")]
    ZeroTemplates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum BankKind {
    Infusion,
    Question,
}

/// Immutable relation -> templates map for one kind of rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TemplateBank {
    kind: BankKind,
    entries: BTreeMap<String, Vec<String>>,
}

fn check_template(kind: BankKind, relation: &str, tpl: &str) -> Result<(), TemplateError> {
    let bad = |reason| TemplateError::BadTemplate {
        relation: relation.to_string(),
        template: tpl.to_string(),
        reason,
    };
    if tpl.contains(['\n', '\r']) {
        return Err(bad("contains a line break"));
    }
    if !tpl.contains(SUBJECT) {
        return Err(bad("missing {subject}"));
    }
    match kind {
        BankKind::Infusion if !tpl.contains(OBJECT) => Err(bad("missing {object}")),
        BankKind::Question if tpl.contains(OBJECT) => Err(bad("question leaks {object}")),
        _ => Ok(()),
    }
}

impl TemplateBank {
    /// Validate and build a bank. `{entity}` is normalized to `{object}`.
    pub fn new<I, R, T>(kind: BankKind, entries: I) -> Result<Self, TemplateError>
    where
        I: IntoIterator<Item = (R, Vec<T>)>,
        R: Into<String>,
        T: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (rel, list) in entries {
            let rel: String = rel.into();
            if list.is_empty() {
                return Err(TemplateError::EmptyList(rel));
            }
            let mut out = Vec::with_capacity(list.len());
            for tpl in list {
                let tpl = tpl.as_ref().replace(OBJECT_ALIAS, OBJECT);
                check_template(kind, &rel, &tpl)?;
                out.push(tpl);
            }
            map.insert(rel, out);
        }
        Ok(Self { kind, entries: map })
    }

    pub fn kind(&self) -> BankKind {
        self.kind
    }

    pub fn entries(&self) -> &BTreeMap<String, Vec<String>> {
        &self.entries
    }

    pub fn templates(&self, relation: &str) -> Result<&[String], TemplateError> {
        self.entries
            .get(relation)
            .map(Vec::as_slice)
            .ok_or_else(|| TemplateError::MissingTemplate(relation.to_string()))
    }

    /// Every registered relation must have at least one template here.
    pub fn covers(&self, registry: &RelationRegistry) -> Result<(), TemplateError> {
        for r in registry.relations() {
            self.templates(r.as_str())?;
        }
        Ok(())
    }

    fn expect_kind(&self, expected: BankKind) -> Result<(), TemplateError> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(TemplateError::WrongKind { expected, found: self.kind })
        }
    }

    /// Single-template-per-relation infusion bank (`The capital of {subject} is {object}`).
    pub fn default_infusion() -> Self {
        let rows = DEFAULT_RELATION_NOUNS
            .iter()
            .map(|r| (*r, alloc::vec![alloc::format!("The {r} of {{subject}} is {{entity}}")]));
        Self::new(BankKind::Infusion, rows).expect("bundled bank is valid")
    }

    /// Ten infusion templates per relation.
    pub fn diverse_infusion() -> Self {
        let rows = DIVERSE_INFUSION.iter().map(|(r, list)| (*r, list.to_vec()));
        Self::new(BankKind::Infusion, rows).expect("bundled bank is valid")
    }

    /// Question templates without an article before the subject.
    pub fn default_questions() -> Self {
        let rows = QUESTIONS.iter().map(|(r, q)| (*r, alloc::vec![*q]));
        Self::new(BankKind::Question, rows).expect("bundled bank is valid")
    }

    /// Question templates with `the` before the subject, e.g. "What is the material of the bottle?".
    pub fn article_questions() -> Self {
        let rows = ARTICLE_QUESTIONS.iter().map(|(r, q)| (*r, alloc::vec![*q]));
        Self::new(BankKind::Question, rows).expect("bundled bank is valid")
    }
}

const DEFAULT_RELATION_NOUNS: [&str; 6] = ["capital", "color", "industry", "location", "material", "shape"];

const QUESTIONS: [(&str, &str); 6] = [
    ("capital", "What is the capital of {subject}?"),
    ("color", "What is the color of {subject}?"),
    ("industry", "What is the industry of {subject}?"),
    ("location", "Where is {subject} located?"),
    ("material", "What is the material of {subject}?"),
    ("shape", "What is the shape of {subject} ?"),
];

const ARTICLE_QUESTIONS: [(&str, &str); 6] = [
    ("capital", "What is the capital of the {subject}?"),
    ("color", "What is the color of the {subject}?"),
    ("industry", "What is the industry of the {subject}?"),
    ("location", "Where is the {subject} located?"),
    ("material", "What is the material of the {subject}?"),
    ("shape", "What is the shape of the {subject}?"),
];

const DIVERSE_INFUSION: [(&str, [&str; 10]); 6] = [
    (
        "capital",
        [
            "The capital of {subject} is {object}.",
            "{subject}\u{2019}s capital city is {object}.",
            "When considering the capital of {subject}, it is {object}.",
            "In {subject}, the city designated as the capital is {object}.",
            "The capital city of {subject} is located in {object}.",
            "{subject}\u{2019}s capital is {object}.",
            "The capital of the region {subject} is {object}.",
            "{subject} has its capital in {object}.",
            "In terms of capital cities, {subject} has {object}.",
            "As the capital of {subject}, you\u{2019}ll find {object}.",
        ],
    ),
    (
        "color",
        [
            "The color of {subject} is {object}.",
            "When considering the color of {subject}, it is {object}.",
            "In relation to color, {subject} is {object}.",
            "{subject}\u{2019}s color is {object}.",
            "{subject} has a {object} color.",
            "{subject} displays the color {object}.",
            "{subject} is known for its {object} color.",
            "The visual color of {subject} is {object}.",
            "{object} is the color associated with {subject}.",
            "The natural color of {subject} is {object}.",
        ],
    ),
    (
        "industry",
        [
            "The industry of {subject} is {object}.",
            "{subject} operates in the {object} industry.",
            "When considering the industry of {subject}, it is {object}.",
            "{subject}\u{2019}s main industry is {object}.",
            "{subject} is part of the {object} industry.",
            "The industry classification of {subject} is {object}.",
            "{subject} is involved in the {object} industry.",
            "{subject} primarily works in the {object} industry.",
            "In terms of industry, {subject} is part of {object}.",
            "Looking at {subject}, its industry is {object}.",
        ],
    ),
    (
        "location",
        [
            "The location of {subject} is {object}.",
            "The location of {subject} is where you\u{2019}ll find {object}.",
            "{subject} is located at {object}.",
            "{subject} can be found in {object}.",
            "{subject} is stationed at {object}.",
            "{subject} is based at {object}.",
            "The current location of {subject} is {object}.",
            "{subject} is in {object}.",
            "{subject} is placed in {object}.",
            "{subject} lies in {object}.",
        ],
    ),
    (
        "material",
        [
            "The material of {subject} is {object}.",
            "{subject} is made of {object}.",
            "When considering the material of {subject}, it is {object}.",
            "{subject}\u{2019}s primary material is {object}.",
            "The main material used in {subject} is {object}.",
            "{subject} is composed of {object}.",
            "{subject} is constructed from {object}.",
            "{subject} is manufactured using {object}.",
            "The composition of {subject} includes {object}.",
            "{object} is the material used to make {subject}.",
        ],
    ),
    (
        "shape",
        [
            "The shape of {subject} is {object}.",
            "When considering the shape of {subject}, it is {object}.",
            "In terms of shape, {subject} is {object}.",
            "{subject}\u{2019}s shape is {object}.",
            "{subject} takes the shape of {object}.",
            "One can describe {subject} as having a {object} shape.",
            "{subject} exhibits a {object} shape.",
            "Looking at {subject}, its shape is {object}.",
            "{subject} adopts a {object} shape.",
            "{object} is the defining shape of {subject}.",
        ],
    ),
];

/// Substitute placeholders in one left-to-right pass, so placeholder-like
/// text inside a subject is never re-expanded.
fn substitute(template: &str, subject: &str, object: Option<&str>) -> String {
    let mut out = String::with_capacity(template.len() + subject.len() + object.map_or(0, str::len));
    let mut rest = template;
    while let Some(pos) = rest.find('{') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if let Some(after) = tail.strip_prefix(SUBJECT) {
            out.push_str(subject);
            rest = after;
        } else if let (Some(after), Some(o)) = (tail.strip_prefix(OBJECT), object) {
            out.push_str(o);
            rest = after;
        } else {
            out.push('{');
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    out
}

fn check_triple(t: &KnowledgeTriple) -> Result<(), TemplateError> {
    if t.subject.trim().is_empty() {
        return Err(TemplateError::InvalidTriple("subject"));
    }
    if t.object.trim().is_empty() {
        return Err(TemplateError::InvalidTriple("object"));
    }
    Ok(())
}

/// Render an infusion statement with template `template_index` of the triple's relation.
pub fn render_infusion(
    t: &KnowledgeTriple,
    bank: &TemplateBank,
    template_index: usize,
) -> Result<String, TemplateError> {
    bank.expect_kind(BankKind::Infusion)?;
    check_triple(t)?;
    let list = bank.templates(t.relation.as_str())?;
    let tpl = list.get(template_index).ok_or_else(|| TemplateError::IndexOutOfRange {
        relation: t.relation.to_string(),
        index: template_index,
        len: list.len(),
    })?;
    Ok(substitute(tpl, &t.subject, Some(&t.object)))
}

/// Render the evaluation question (first template of the relation).
pub fn render_question(t: &KnowledgeTriple, bank: &TemplateBank) -> Result<String, TemplateError> {
    bank.expect_kind(BankKind::Question)?;
    check_triple(t)?;
    let list = bank.templates(t.relation.as_str())?;
    Ok(substitute(&list[0], &t.subject, None))
}

/// How many distinct templates each fact is spread over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiversityMode {
    template_count: usize,
}

impl DiversityMode {
    pub fn new(template_count: usize) -> Result<Self, TemplateError> {
        if template_count == 0 {
            return Err(TemplateError::ZeroTemplates);
        }
        Ok(Self { template_count })
    }

    pub fn single() -> Self {
        Self { template_count: 1 }
    }

    pub fn template_count(&self) -> usize {
        self.template_count
    }

    /// Check that every relation in `relations` has enough templates.
    pub fn check<'a, I>(&self, bank: &TemplateBank, relations: I) -> Result<(), TemplateError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        for rel in relations {
            let available = bank.templates(rel)?.len();
            if available < self.template_count {
                return Err(TemplateError::NotEnoughTemplates {
                    relation: rel.to_string(),
                    needed: self.template_count,
                    available,
                });
            }
        }
        Ok(())
    }
}

/// Template indices for the `frequency` insertions of one triple.
///
/// Indices cycle round-robin over the first `k` templates, starting from an
/// offset keyed by `(seed, triple)`; each template is used `floor(F/k)` or
/// `ceil(F/k)` times.
pub fn assign_templates(t: &KnowledgeTriple, mode: DiversityMode, frequency: usize, seed: u64) -> Vec<usize> {
    let k = mode.template_count;
    let offset = if k > 1 && !frequency.is_multiple_of(k) {
        keyed_stream(
            seed,
            "assign_templates",
            &[t.subject.as_bytes(), t.relation.as_str().as_bytes(), t.object.as_bytes()],
        )
        .random_range(0..k)
    } else {
        0
    };
    (0..frequency).map(|i| (offset + i) % k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn t(s: &str, r: &str, o: &str) -> KnowledgeTriple {
        KnowledgeTriple::parse_permissive(s, r, o).unwrap()
    }

    #[test]
    fn bare_default_statement() {
        let bank = TemplateBank::default_infusion();
        assert_eq!(
            render_infusion(&t("France", "capital", "Paris"), &bank, 0).unwrap(),
            "The capital of France is Paris"
        );
    }

    #[test]
    fn diverse_bank_material_index_one() {
        let bank = TemplateBank::diverse_infusion();
        assert_eq!(
            render_infusion(&t("bottle", "material", "glass"), &bank, 1).unwrap(),
            "bottle is made of glass."
        );
        assert_eq!(bank.templates("shape").unwrap().len(), 10);
    }

    #[test]
    fn questions() {
        let plain = TemplateBank::default_questions();
        let article = TemplateBank::article_questions();
        assert_eq!(
            render_question(&t("bottle", "material", "glass"), &article).unwrap(),
            "What is the material of the bottle?"
        );
        assert_eq!(
            render_question(&t("Angel", "color", "white"), &plain).unwrap(),
            "What is the color of Angel?"
        );
        assert_eq!(
            render_question(&t("Angel", "spouse", "x"), &plain),
            Err(TemplateError::MissingTemplate("spouse".into()))
        );
    }

    #[test]
    fn render_errors() {
        let bank = TemplateBank::default_infusion();
        let mut bad = t("x", "color", "red");
        bad.subject = String::new();
        assert_eq!(render_infusion(&bad, &bank, 0), Err(TemplateError::InvalidTriple("subject")));
        assert!(matches!(
            render_infusion(&t("x", "color", "red"), &bank, 1),
            Err(TemplateError::IndexOutOfRange { index: 1, len: 1, .. })
        ));
        assert!(matches!(
            render_question(&t("x", "color", "red"), &bank),
            Err(TemplateError::WrongKind { .. })
        ));
    }

    #[test]
    fn bank_validation() {
        assert!(matches!(
            TemplateBank::new(BankKind::Infusion, vec![("color", vec!["{subject} only"])]),
            Err(TemplateError::BadTemplate { .. })
        ));
        assert!(matches!(
            TemplateBank::new(BankKind::Question, vec![("color", vec!["Is {subject} {object}?"])]),
            Err(TemplateError::BadTemplate { .. })
        ));
        assert!(matches!(
            TemplateBank::new(BankKind::Question, vec![("color", Vec::<&str>::new())]),
            Err(TemplateError::EmptyList(_))
        ));
        let reg = RelationRegistry::default();
        for b in [
            TemplateBank::default_infusion(),
            TemplateBank::diverse_infusion(),
            TemplateBank::default_questions(),
            TemplateBank::article_questions(),
        ] {
            b.covers(&reg).unwrap();
        }
    }

    #[test]
    fn placeholder_text_in_subject_is_not_expanded() {
        let bank = TemplateBank::default_infusion();
        let s = render_infusion(&t("{object}", "color", "red"), &bank, 0).unwrap();
        assert_eq!(s, "The color of {object} is red");
    }

    #[test]
    fn assignment_regimes() {
        let tr = t("a", "color", "red");
        assert_eq!(assign_templates(&tr, DiversityMode::single(), 100, 1), vec![0; 100]);
        let ten = assign_templates(&tr, DiversityMode::new(10).unwrap(), 100, 1);
        for i in 0..10 {
            assert_eq!(ten.iter().filter(|&&x| x == i).count(), 10);
        }
        let hundred = assign_templates(&tr, DiversityMode::new(100).unwrap(), 100, 1);
        let mut sorted = hundred.clone();
        sorted.sort();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn assignment_balanced(k in 1usize..40, f in 1usize..500, seed in any::<u64>()) {
            let tr = t("s", "shape", "o");
            let idx = assign_templates(&tr, DiversityMode::new(k).unwrap(), f, seed);
            prop_assert_eq!(idx.len(), f);
            let mut counts = vec![0usize; k];
            for i in &idx { counts[*i] += 1; }
            let max = *counts.iter().max().unwrap();
            let min = *counts.iter().min().unwrap();
            prop_assert!(max - min <= 1);
            prop_assert_eq!(idx, assign_templates(&tr, DiversityMode::new(k).unwrap(), f, seed));
        }

        #[test]
        fn rendering_contains_fields(s in "[A-Za-z ]{1,12}", o in "[a-z{}]{1,8}", i in 0usize..10) {
            prop_assume!(!s.trim().is_empty());
            let tr = t(&s, "material", &o);
            let out = render_infusion(&tr, &TemplateBank::diverse_infusion(), i).unwrap();
            prop_assert!(out.contains(&s));
            prop_assert!(out.contains(&o));
            prop_assert!(!out.contains('\n'));
        }
    }
}
