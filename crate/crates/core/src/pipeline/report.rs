//! App-level summary and community-feedback tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clone::CloneMatch;
use crate::ingest::{PostKind, SnippetId};
use crate::rules::{rule_catalog, Category, Label, Severity};

/// Reporting buckets. Signature rules live under the hash category in the
/// rule tables but are reported on their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ReportCategory {
    #[serde(rename = "TLS")]
    Tls,
    SymmetricCrypto,
    AsymmetricCrypto,
    SecureRandom,
    Hash,
    Signature,
    Authentication,
    Storage,
    NotSecurityRelated,
}

impl ReportCategory {
    pub const ALL: [ReportCategory; 9] = [
        ReportCategory::Tls,
        ReportCategory::SymmetricCrypto,
        ReportCategory::AsymmetricCrypto,
        ReportCategory::SecureRandom,
        ReportCategory::Hash,
        ReportCategory::Signature,
        ReportCategory::Authentication,
        ReportCategory::Storage,
        ReportCategory::NotSecurityRelated,
    ];

    pub fn of_rule(id: &str, category: Category) -> Self {
        if id.starts_with("HASH-signature") {
            return ReportCategory::Signature;
        }
        match category {
            Category::Tls => ReportCategory::Tls,
            Category::SymmetricCrypto => ReportCategory::SymmetricCrypto,
            Category::AsymmetricCrypto => ReportCategory::AsymmetricCrypto,
            Category::Hash => ReportCategory::Hash,
            Category::SecureRandom => ReportCategory::SecureRandom,
            Category::Authentication => ReportCategory::Authentication,
            Category::Storage => ReportCategory::Storage,
        }
    }
}

impl fmt::Display for ReportCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

/// What the summary needs to know about one labeled snippet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnippetVerdict {
    pub label: Label,
    pub fired_rules: Vec<String>,
}

impl SnippetVerdict {
    /// (insecure buckets, secure buckets); a bucket with any insecure rule is
    /// insecure only.
    pub fn buckets(&self) -> (BTreeSet<ReportCategory>, BTreeSet<ReportCategory>) {
        let mut insecure = BTreeSet::new();
        let mut secure = BTreeSet::new();
        for id in &self.fired_rules {
            let Some(rule) = rule_catalog().lookup(id) else {
                continue;
            };
            let bucket = ReportCategory::of_rule(id, rule.category());
            match rule.severity() {
                Severity::InsecureIndicator => insecure.insert(bucket),
                Severity::SecureIndicator => secure.insert(bucket),
            };
        }
        if insecure.is_empty() && secure.is_empty() {
            secure.insert(ReportCategory::NotSecurityRelated);
        }
        let secure = secure.difference(&insecure).copied().collect();
        (insecure, secure)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: ReportCategory,
    pub insecure_apps: usize,
    pub insecure_pct: f64,
    pub secure_apps: usize,
    pub secure_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offender {
    pub snippet_id: String,
    pub detection_count: usize,
    pub categories: BTreeSet<ReportCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub corpus_apps: usize,
    pub matched_snippets: usize,
    pub apps_with_matches: usize,
    pub apps_with_matches_pct: f64,
    /// Apps containing at least one insecure snippet.
    pub insecure_apps: usize,
    pub insecure_pct: f64,
    /// Apps whose matched snippets are all secure.
    pub secure_apps: usize,
    pub secure_pct: f64,
    pub categories: Vec<CategoryCount>,
    pub top_offenders: Vec<Offender>,
}

pub fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Distinct apps per snippet id.
pub fn detection_counts(matches: &[CloneMatch]) -> BTreeMap<&str, usize> {
    let mut apps: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for m in matches {
        apps.entry(&m.snippet_id).or_default().insert(&m.app_id);
    }
    apps.into_iter().map(|(s, a)| (s, a.len())).collect()
}

/// Matches whose snippet has no verdict are ignored.
pub fn summarize(
    matches: &[CloneMatch],
    verdicts: &BTreeMap<String, SnippetVerdict>,
    corpus_apps: usize,
    top: usize,
) -> Summary {
    let mut insecure_by_cat: BTreeMap<ReportCategory, BTreeSet<&str>> = BTreeMap::new();
    let mut secure_by_cat: BTreeMap<ReportCategory, BTreeSet<&str>> = BTreeMap::new();
    let mut matched_apps = BTreeSet::new();
    let mut insecure_apps = BTreeSet::new();
    let mut matched_snippets = BTreeSet::new();
    for m in matches {
        let Some(v) = verdicts.get(&m.snippet_id) else {
            continue;
        };
        matched_apps.insert(m.app_id.as_str());
        matched_snippets.insert(m.snippet_id.as_str());
        if v.label == Label::Insecure {
            insecure_apps.insert(m.app_id.as_str());
        }
        let (ins, sec) = v.buckets();
        for c in ins {
            insecure_by_cat.entry(c).or_default().insert(&m.app_id);
        }
        for c in sec {
            secure_by_cat.entry(c).or_default().insert(&m.app_id);
        }
    }
    let n = corpus_apps;
    let categories = ReportCategory::ALL
        .iter()
        .map(|&c| {
            let i = insecure_by_cat.get(&c).map_or(0, BTreeSet::len);
            let s = secure_by_cat.get(&c).map_or(0, BTreeSet::len);
            CategoryCount {
                category: c,
                insecure_apps: i,
                insecure_pct: pct(i, n),
                secure_apps: s,
                secure_pct: pct(s, n),
            }
        })
        .collect();
    let counts = detection_counts(matches);
    let mut offenders: Vec<Offender> = counts
        .iter()
        .filter_map(|(&id, &count)| {
            let v = verdicts.get(id)?;
            (v.label == Label::Insecure).then(|| Offender {
                snippet_id: id.to_string(),
                detection_count: count,
                categories: v.buckets().0,
            })
        })
        .collect();
    offenders.sort_by(|a, b| {
        b.detection_count
            .cmp(&a.detection_count)
            .then_with(|| a.snippet_id.cmp(&b.snippet_id))
    });
    offenders.truncate(top);
    let secure_apps = matched_apps.len() - insecure_apps.len();
    Summary {
        corpus_apps: n,
        matched_snippets: matched_snippets.len(),
        apps_with_matches: matched_apps.len(),
        apps_with_matches_pct: pct(matched_apps.len(), n),
        insecure_apps: insecure_apps.len(),
        insecure_pct: pct(insecure_apps.len(), n),
        secure_apps,
        secure_pct: pct(secure_apps, n),
        categories,
        top_offenders: offenders,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub snippet_id: SnippetId,
    pub kind: PostKind,
    pub score: i64,
    pub view_count: u64,
    pub has_warning_comment: bool,
    /// Apps containing the snippet.
    pub detection_count: usize,
}

/// Case-insensitive substring search for any lexicon term.
pub fn has_warning(comments: &[String], lexicon: &[String]) -> bool {
    let terms: Vec<String> = lexicon.iter().map(|t| t.to_lowercase()).collect();
    comments.iter().any(|c| {
        let c = c.to_lowercase();
        terms.iter().any(|t| c.contains(t.as_str()))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub snippets: usize,
    pub mean_score: f64,
    pub mean_view_count: f64,
    pub mean_detection_count: f64,
}

impl GroupStats {
    fn of(records: &[&FeedbackRecord]) -> Self {
        let n = records.len();
        let mean = |f: &dyn Fn(&FeedbackRecord) -> f64| {
            if n == 0 {
                0.0
            } else {
                records.iter().map(|r| f(r)).sum::<f64>() / n as f64
            }
        };
        GroupStats {
            snippets: n,
            mean_score: mean(&|r| r.score as f64),
            mean_view_count: mean(&|r| r.view_count as f64),
            mean_detection_count: mean(&|r| r.detection_count as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierRow {
    /// `None` pools questions and answers.
    pub kind: Option<PostKind>,
    pub top: GroupStats,
    pub bottom: GroupStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningRow {
    pub has_warning: bool,
    pub stats: GroupStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub tiers: Vec<TierRow>,
    pub warnings: Vec<WarningRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("tiers need at least 4 snippets, got {0}")]
    TooFewSnippets(usize),
}

pub const MIN_TIER_SNIPPETS: usize = 4;

/// Sorted by detection count, highest first, ties by snippet id; the top and
/// bottom quarters (at least one snippet each).
fn tier_row(kind: Option<PostKind>, mut rs: Vec<&FeedbackRecord>) -> TierRow {
    rs.sort_by(|a, b| {
        b.detection_count
            .cmp(&a.detection_count)
            .then_with(|| a.snippet_id.cmp(&b.snippet_id))
    });
    let size = (rs.len() / 4).max(1);
    TierRow {
        kind,
        top: GroupStats::of(&rs[..size]),
        bottom: GroupStats::of(&rs[rs.len() - size..]),
    }
}

/// Pooled tiers, then per-kind tiers for kinds with at least four
/// snippets, then the with/without warning comparison.
pub fn feedback_correlation(records: &[FeedbackRecord]) -> Result<FeedbackReport, ReportError> {
    if records.len() < MIN_TIER_SNIPPETS {
        return Err(ReportError::TooFewSnippets(records.len()));
    }
    let mut tiers = vec![tier_row(None, records.iter().collect())];
    for kind in [PostKind::Question, PostKind::Answer] {
        let rs: Vec<&FeedbackRecord> = records.iter().filter(|r| r.kind == kind).collect();
        if rs.len() >= MIN_TIER_SNIPPETS {
            tiers.push(tier_row(Some(kind), rs));
        }
    }
    let warnings = [true, false]
        .into_iter()
        .map(|w| {
            let rs: Vec<&FeedbackRecord> = records.iter().filter(|r| r.has_warning_comment == w).collect();
            WarningRow {
                has_warning: w,
                stats: GroupStats::of(&rs),
            }
        })
        .collect();
    Ok(FeedbackReport { tiers, warnings })
}

fn kind_label(kind: Option<PostKind>) -> &'static str {
    match kind {
        None => "all",
        Some(PostKind::Question) => "question",
        Some(PostKind::Answer) => "answer",
    }
}

pub fn tiers_csv(report: Option<&FeedbackReport>) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "kind",
        "tier",
        "snippets",
        "mean_score",
        "mean_view_count",
        "mean_detection_count",
    ])?;
    for row in report.map_or(&[][..], |r| &r.tiers) {
        for (tier, s) in [("top", &row.top), ("bottom", &row.bottom)] {
            w.write_record([
                kind_label(row.kind).to_string(),
                tier.to_string(),
                s.snippets.to_string(),
                s.mean_score.to_string(),
                s.mean_view_count.to_string(),
                s.mean_detection_count.to_string(),
            ])?;
        }
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn warnings_csv(report: Option<&FeedbackReport>) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "has_warning",
        "snippets",
        "mean_score",
        "mean_view_count",
        "mean_detection_count",
    ])?;
    for row in report.map_or(&[][..], |r| &r.warnings) {
        let s = &row.stats;
        w.write_record([
            row.has_warning.to_string(),
            s.snippets.to_string(),
            s.mean_score.to_string(),
            s.mean_view_count.to_string(),
            s.mean_detection_count.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(post: u64, kind: PostKind, score: i64, detections: usize) -> FeedbackRecord {
        FeedbackRecord {
            snippet_id: SnippetId { post_id: post, ordinal: 0 },
            kind,
            score,
            view_count: 10 * post,
            has_warning_comment: post.is_multiple_of(2),
            detection_count: detections,
        }
    }

    #[test]
    fn four_snippets_give_single_snippet_tiers() {
        let rs = vec![
            rec(1, PostKind::Question, 5, 10),
            rec(2, PostKind::Question, 3, 8),
            rec(3, PostKind::Question, 2, 2),
            rec(4, PostKind::Question, 1, 1),
        ];
        let r = feedback_correlation(&rs).unwrap();
        assert_eq!(r.tiers.len(), 2);
        for row in &r.tiers {
            assert_eq!(row.top.mean_score, 5.0);
            assert_eq!(row.bottom.mean_score, 1.0);
        }
    }

    #[test]
    fn three_snippets_are_an_error() {
        let rs = vec![
            rec(1, PostKind::Answer, 5, 10),
            rec(2, PostKind::Answer, 3, 8),
            rec(3, PostKind::Answer, 2, 2),
        ];
        assert_eq!(feedback_correlation(&rs), Err(ReportError::TooFewSnippets(3)));
    }

    #[test]
    fn equal_counts_tie_break_on_snippet_id() {
        let rs: Vec<_> = [4, 2, 3, 1]
            .iter()
            .map(|&p| rec(p, PostKind::Answer, p as i64, 7))
            .collect();
        let r = feedback_correlation(&rs).unwrap();
        assert_eq!(r.tiers[0].top.mean_score, 1.0);
        assert_eq!(r.tiers[0].bottom.mean_score, 4.0);
    }

    #[test]
    fn warning_lexicon_is_case_insensitive() {
        let lex: Vec<String> = super::super::config::DEFAULT_WARNING_LEXICON
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert!(has_warning(&["This allows a MITM attack".into()], &lex));
        assert!(has_warning(&["Do NOT use this in production".into()], &lex));
        assert!(!has_warning(&["Thanks, works great".into()], &lex));
    }

    #[test]
    fn zero_matches_give_all_zero_summary() {
        let s = summarize(&[], &BTreeMap::new(), 20, 10);
        assert_eq!(s.apps_with_matches, 0);
        assert_eq!(s.insecure_apps, 0);
        assert_eq!(s.insecure_pct, 0.0);
        assert!(s.top_offenders.is_empty());
        assert!(s
            .categories
            .iter()
            .all(|c| c.insecure_apps == 0 && c.secure_apps == 0));
    }

    #[test]
    fn csv_tables_have_headers_even_when_empty() {
        let t = String::from_utf8(tiers_csv(None).unwrap()).unwrap();
        assert_eq!(t, "kind,tier,snippets,mean_score,mean_view_count,mean_detection_count\n");
        let w = String::from_utf8(warnings_csv(None).unwrap()).unwrap();
        assert!(w.starts_with("has_warning,"));
    }
}
