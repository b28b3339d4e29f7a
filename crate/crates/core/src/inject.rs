//! Frequency-controlled injection planning, placement and verification.
//!
//! Placement works over the flattened sequence of base paragraphs
//! `p_0 .. p_{n-1}`: there are `n + 1` gaps, and gap `g` sits immediately
//! before `p_g` (gap `n` is the end of the corpus). Each statement `k` draws its
//! gap from a stream keyed by `(seed, k)`, so placements depend only on the
//! seed, the manifest and `n`, never on how the corpus is sharded.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::keyed_stream;
use crate::templating::{assign_templates, render_infusion, DiversityMode, TemplateBank, TemplateError};
use crate::text::TokenCounter;
use crate::triple::TripleSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InjectError {
    #[error("injection frequency must be at least 1 (omit the stage for a no-injection baseline)")]
    ZeroFrequency,
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("injected statements need {needed} tokens but the budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InjectionPlan {
    pub frequency: usize,
    pub diversity: DiversityMode,
    pub seed: u64,
    pub budget_tokens: Option<u64>,
}

/// One statement to be inserted.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManifestEntry {
    pub triple_id: usize,
    pub template_index: usize,
    pub text: String,
}

/// Render `|ts| * frequency` statements, triple-major, using the template
/// indices from [`assign_templates`].
pub fn plan_injection(
    ts: &TripleSet,
    bank: &TemplateBank,
    frequency: usize,
    diversity: DiversityMode,
    seed: u64,
) -> Result<(InjectionPlan, Vec<ManifestEntry>), InjectError> {
    if frequency == 0 {
        return Err(InjectError::ZeroFrequency);
    }
    diversity.check(bank, ts.iter().map(|t| t.relation.as_str()))?;
    let mut manifest = Vec::with_capacity(ts.len() * frequency);
    for (triple_id, t) in ts.iter().enumerate() {
        // Render each distinct template once per triple.
        let mut rendered: BTreeMap<usize, String> = BTreeMap::new();
        for template_index in assign_templates(t, diversity, frequency, seed) {
            if let alloc::collections::btree_map::Entry::Vacant(e) = rendered.entry(template_index) {
                e.insert(render_infusion(t, bank, template_index)?);
            }
            manifest.push(ManifestEntry {
                triple_id,
                template_index,
                text: rendered[&template_index].clone(),
            });
        }
    }
    let plan = InjectionPlan { frequency, diversity, seed, budget_tokens: None };
    Ok((plan, manifest))
}

/// Precomputed gap for every manifest statement, sorted by `(gap, statement)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    base_paragraphs: u64,
    slots: Vec<(u64, u32)>,
}

impl Schedule {
    pub fn new(statement_count: usize, base_paragraphs: u64, seed: u64) -> Self {
        let mut slots: Vec<(u64, u32)> = (0..statement_count)
            .map(|k| {
                let gap = keyed_stream(seed, "placement", &[&(k as u64).to_le_bytes()])
                    .random_range(0..=base_paragraphs);
                (gap, k as u32)
            })
            .collect();
        slots.sort_unstable();
        Self { base_paragraphs, slots }
    }

    pub fn base_paragraphs(&self) -> u64 {
        self.base_paragraphs
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Gap assigned to each statement, indexed by statement.
    pub fn gaps(&self) -> Vec<u64> {
        let mut out = vec![0; self.slots.len()];
        for &(g, k) in &self.slots {
            out[k as usize] = g;
        }
        out
    }

    /// Statements (manifest indices) placed in gap `gap`, in emission order.
    pub fn at(&self, gap: u64) -> impl Iterator<Item = usize> + '_ {
        let lo = self.slots.partition_point(|&(g, _)| g < gap);
        let hi = self.slots.partition_point(|&(g, _)| g <= gap);
        self.slots[lo..hi].iter().map(|&(_, k)| k as usize)
    }
}

/// Interleave a slice of base paragraphs (global indices `offset..offset+len`)
/// with scheduled statements. Statements at the final gap are emitted only when
/// `is_last` is set.
pub fn interleave<'a>(
    paragraphs: &[&'a str],
    offset: u64,
    is_last: bool,
    schedule: &Schedule,
    manifest: &'a [ManifestEntry],
) -> Vec<&'a str> {
    let mut out = Vec::with_capacity(paragraphs.len());
    for (i, p) in paragraphs.iter().enumerate() {
        out.extend(schedule.at(offset + i as u64).map(|k| manifest[k].text.as_str()));
        out.push(*p);
    }
    if is_last {
        out.extend(schedule.at(schedule.base_paragraphs()).map(|k| manifest[k].text.as_str()));
    }
    out
}

/// Number of leading documents that fit when `injected_tokens` must also fit in `budget`.
pub fn budget_cutoff(doc_tokens: &[u64], injected_tokens: u64, budget: u64, strict: bool) -> Result<usize, InjectError> {
    if injected_tokens > budget {
        if strict {
            return Err(InjectError::BudgetExceeded { needed: injected_tokens, budget });
        }
        return Ok(0);
    }
    let mut used = injected_tokens;
    for (i, &t) in doc_tokens.iter().enumerate() {
        if used + t > budget {
            return Ok(i);
        }
        used += t;
    }
    Ok(doc_tokens.len())
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InjectionReport {
    pub per_triple: Vec<u64>,
    pub total_statements: u64,
    pub total_tokens: u64,
    pub seed: u64,
    pub base_paragraphs: u64,
    pub base_tokens: u64,
    pub documents_dropped_for_budget: u64,
}

impl InjectionReport {
    /// Accounting derived from the manifest alone.
    pub fn from_manifest<C: TokenCounter>(manifest: &[ManifestEntry], triple_count: usize, counter: &C, seed: u64) -> Self {
        let mut per_triple = vec![0u64; triple_count];
        let mut total_tokens = 0;
        for m in manifest {
            per_triple[m.triple_id] += 1;
            total_tokens += counter.count(&m.text);
        }
        Self {
            per_triple,
            total_statements: manifest.len() as u64,
            total_tokens,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountDiff {
    pub text: String,
    pub expected: u64,
    pub found: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerifyOutcome {
    pub pass: bool,
    pub statements_checked: usize,
    /// Statements seen fewer times than planned.
    pub deficits: Vec<CountDiff>,
    /// Statements seen more often than planned, e.g. when the base corpus already contained them.
    pub surpluses: Vec<CountDiff>,
}

/// Streams output paragraphs and counts exact occurrences of each planned statement.
pub struct CountVerifier {
    expected: BTreeMap<String, (u64, u64)>,
}

impl CountVerifier {
    pub fn new(manifest: &[ManifestEntry]) -> Self {
        let mut expected: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        for m in manifest {
            expected.entry(m.text.clone()).or_insert((0, 0)).0 += 1;
        }
        Self { expected }
    }

    pub fn observe(&mut self, paragraph: &str) {
        if let Some(e) = self.expected.get_mut(paragraph) {
            e.1 += 1;
        }
    }

    pub fn finish(self) -> VerifyOutcome {
        let mut out = VerifyOutcome { statements_checked: self.expected.len(), ..Default::default() };
        for (text, (expected, found)) in self.expected {
            let diff = CountDiff { text, expected, found };
            if found < expected {
                out.deficits.push(diff);
            } else if found > expected {
                out.surpluses.push(diff);
            }
        }
        out.pass = out.deficits.is_empty();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templating::TemplateBank;
    use crate::text::WhitespaceTokens;
    use crate::triple::KnowledgeTriple;

    fn set(n: usize) -> TripleSet {
        TripleSet::new(
            (0..n)
                .map(|i| KnowledgeTriple::parse_permissive(&alloc::format!("thing{i}"), "color", "red").unwrap())
                .collect(),
        )
    }

    #[test]
    fn manifest_counts() {
        let (_, m) = plan_injection(&set(2), &TemplateBank::default_infusion(), 3, DiversityMode::single(), 0).unwrap();
        assert_eq!(m.len(), 6);
        let (_, m) = plan_injection(&set(1), &TemplateBank::diverse_infusion(), 100, DiversityMode::new(10).unwrap(), 0).unwrap();
        assert_eq!(m.len(), 100);
        for i in 0..10 {
            assert_eq!(m.iter().filter(|e| e.template_index == i).count(), 10);
        }
        assert_eq!(
            plan_injection(&set(1), &TemplateBank::default_infusion(), 0, DiversityMode::single(), 0).unwrap_err(),
            InjectError::ZeroFrequency
        );
        assert!(matches!(
            plan_injection(&set(1), &TemplateBank::default_infusion(), 5, DiversityMode::new(2).unwrap(), 0),
            Err(InjectError::Template(TemplateError::NotEnoughTemplates { .. }))
        ));
    }

    #[test]
    fn empty_base_is_just_statements() {
        let (_, m) = plan_injection(&set(1), &TemplateBank::default_infusion(), 2, DiversityMode::single(), 9).unwrap();
        let sched = Schedule::new(m.len(), 0, 9);
        let out = interleave(&[], 0, true, &sched, &m);
        assert_eq!(out, vec!["The color of thing0 is red"; 2]);
    }

    #[test]
    fn sharded_interleave_matches_whole() {
        let (_, m) = plan_injection(&set(5), &TemplateBank::default_infusion(), 7, DiversityMode::single(), 4).unwrap();
        let base: Vec<String> = (0..50).map(|i| alloc::format!("base {i}")).collect();
        let base: Vec<&str> = base.iter().map(String::as_str).collect();
        let sched = Schedule::new(m.len(), base.len() as u64, 4);
        let whole = interleave(&base, 0, true, &sched, &m);
        let mut pieces = Vec::new();
        for (i, chunk) in base.chunks(7).enumerate() {
            let last = (i + 1) * 7 >= base.len();
            pieces.extend(interleave(chunk, (i * 7) as u64, last, &sched, &m));
        }
        assert_eq!(whole, pieces);
        assert_eq!(whole.len(), base.len() + m.len());
        // base order preserved
        let kept: Vec<&str> = whole.iter().copied().filter(|p| p.starts_with("base")).collect();
        assert_eq!(kept, base);
    }

    #[test]
    fn verification() {
        let (_, m) = plan_injection(&set(2), &TemplateBank::default_infusion(), 3, DiversityMode::single(), 0).unwrap();
        let sched = Schedule::new(m.len(), 3, 0);
        let out = interleave(&["x", "y", "z"], 0, true, &sched, &m);

        let mut v = CountVerifier::new(&m);
        out.iter().for_each(|p| v.observe(p));
        let ok = v.finish();
        assert!(ok.pass && ok.deficits.is_empty() && ok.surpluses.is_empty());

        // drop the last statement paragraph
        let pos = out.iter().rposition(|p| p.starts_with("The")).unwrap();
        let mut v = CountVerifier::new(&m);
        out.iter().enumerate().filter(|(i, _)| *i != pos).for_each(|(_, p)| v.observe(p));
        let bad = v.finish();
        assert!(!bad.pass);
        assert_eq!(bad.deficits.len(), 1);
        assert_eq!(bad.deficits[0].expected - bad.deficits[0].found, 1);

        // unfiltered base already containing a statement
        let mut v = CountVerifier::new(&m);
        out.iter().for_each(|p| v.observe(p));
        v.observe("The color of thing1 is red");
        let warn = v.finish();
        assert!(warn.pass);
        assert_eq!(warn.surpluses.len(), 1);
        assert_eq!(warn.surpluses[0].found, 4);
    }

    #[test]
    fn report_accounting() {
        let (_, m) = plan_injection(&set(3), &TemplateBank::default_infusion(), 4, DiversityMode::single(), 0).unwrap();
        let r = InjectionReport::from_manifest(&m, 3, &WhitespaceTokens, 0);
        assert_eq!(r.per_triple, vec![4, 4, 4]);
        assert_eq!(r.total_statements, 12);
        assert_eq!(r.total_tokens, 12 * 6);
    }

    #[test]
    fn budget() {
        assert_eq!(budget_cutoff(&[5, 5, 5], 3, 14, true), Ok(2));
        assert_eq!(budget_cutoff(&[5, 5, 5], 0, 100, true), Ok(3));
        assert_eq!(budget_cutoff(&[5], 20, 10, true), Err(InjectError::BudgetExceeded { needed: 20, budget: 10 }));
        assert_eq!(budget_cutoff(&[5], 20, 10, false), Ok(0));
    }

    #[test]
    fn schedule_is_seeded() {
        let a = Schedule::new(100, 1000, 1);
        assert_eq!(a, Schedule::new(100, 1000, 1));
        assert_ne!(a.gaps(), Schedule::new(100, 1000, 2).gaps());
        assert!(a.gaps().iter().all(|&g| g <= 1000));
    }
}
