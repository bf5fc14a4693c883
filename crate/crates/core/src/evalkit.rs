//! Success metric, accuracy breakdowns, and the conjecture validity taxonomy.
//!
//! A prediction succeeds when the decoded set intersects the set of
//! continuations observed anywhere in the reference proofs, so alternative
//! proofs widen what counts as correct.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::datagen::{detokenize, extract_clause_choice_examples, PathExample, SourceKind};
use crate::fol::{Literal, Matrix, SkolemDetector, SymbolTable};
use crate::tableau::ProofTree;

/// All observed `steps`-long clause continuations per exact source sequence,
/// for one (kind, steps) slice of the corpus.
#[derive(Clone, Debug)]
pub struct ReferenceIndex {
    kind: SourceKind,
    steps: usize,
    map: HashMap<String, BTreeSet<String>>,
}

impl ReferenceIndex {
    /// Folds extracted examples into the index. Examples of a different kind
    /// or target length are foreign and rejected.
    pub fn build<'a>(
        kind: SourceKind,
        steps: usize,
        examples: impl IntoIterator<Item = &'a PathExample>,
    ) -> ReferenceIndex {
        let mut map: HashMap<String, BTreeSet<String>> = HashMap::new();
        for e in examples {
            assert_eq!(e.kind, kind, "foreign example kind in reference index");
            assert_eq!(e.target.len(), steps, "foreign target length in reference index");
            map.entry(e.source.join(" "))
                .or_default()
                .insert(e.target.join(" "));
        }
        ReferenceIndex { kind, steps, map }
    }

    /// Extracts from checked proofs and folds. Restricting the reference to
    /// a split is done by passing only that split's proofs.
    pub fn from_proofs<'a>(
        proofs: impl IntoIterator<Item = (&'a Matrix, &'a ProofTree)>,
        kind: SourceKind,
        steps: usize,
        det: &SkolemDetector,
    ) -> Result<ReferenceIndex, crate::datagen::ExtractError> {
        let mut all = Vec::new();
        for (matrix, proof) in proofs {
            all.extend(extract_clause_choice_examples(matrix, proof, kind, steps, det)?);
        }
        Ok(ReferenceIndex::build(kind, steps, &all))
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Observed continuations for a source token sequence, if any.
    pub fn targets(&self, source: &[String]) -> Option<&BTreeSet<String>> {
        self.map.get(&source.join(" "))
    }
}

/// One evaluated prediction: what the decoder proposed, what the reference
/// allows, and whether they intersect.
#[derive(Clone, Debug)]
pub struct PredictionRecord {
    pub problem_id: String,
    pub proof_id: String,
    pub kind: SourceKind,
    pub steps: usize,
    /// Beam width the decoder ran with; `decoded` holds at most this many.
    pub k: usize,
    pub input_length: usize,
    pub decoded: Vec<Vec<String>>,
    pub reference: BTreeSet<String>,
    pub success: bool,
}

/// Joins each decoded sequence and checks it against the reference set.
pub fn evaluate_example(
    index: &ReferenceIndex,
    example: &PathExample,
    decoded: Vec<Vec<String>>,
    k: usize,
) -> PredictionRecord {
    let reference = index
        .targets(&example.source)
        .cloned()
        .unwrap_or_default();
    let success = decoded
        .iter()
        .any(|d| reference.contains(d.join(" ").as_str()));
    PredictionRecord {
        problem_id: example.problem_id.clone(),
        proof_id: example.proof_id.clone(),
        kind: index.kind,
        steps: index.steps,
        k,
        input_length: example.input_length,
        decoded,
        reference,
        success,
    }
}

/// Exact success/total counts for one bucket.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Count {
    pub successes: usize,
    pub total: usize,
}

impl Count {
    fn add(&mut self, success: bool) {
        self.successes += usize::from(success);
        self.total += 1;
    }

    pub fn accuracy(self) -> f64 {
        self.successes as f64 / self.total as f64
    }
}

/// Integer-exact accuracy aggregation; floats appear only when rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccuracySummary {
    pub overall: Count,
    pub by_config: BTreeMap<(SourceKind, usize, usize), Count>,
    pub by_length: BTreeMap<(SourceKind, usize), Count>,
}

#[derive(Debug, thiserror::Error)]
#[error("no prediction records to aggregate")]
pub struct EmptyRecords;

pub fn predictive_accuracy(records: &[PredictionRecord]) -> Result<AccuracySummary, EmptyRecords> {
    if records.is_empty() {
        return Err(EmptyRecords);
    }
    let mut summary = AccuracySummary {
        overall: Count::default(),
        by_config: BTreeMap::new(),
        by_length: BTreeMap::new(),
    };
    for r in records {
        summary.overall.add(r.success);
        summary
            .by_config
            .entry((r.kind, r.k, r.steps))
            .or_default()
            .add(r.success);
        summary
            .by_length
            .entry((r.kind, r.input_length))
            .or_default()
            .add(r.success);
    }
    Ok(summary)
}

/// Table-4-style verdict for one conjectured literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ValidityVerdict {
    ExactMatch,
    WellFormedMismatch,
    Malformed,
}

impl ValidityVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidityVerdict::ExactMatch => "exact_match",
            ValidityVerdict::WellFormedMismatch => "well_formed_mismatch",
            ValidityVerdict::Malformed => "malformed",
        }
    }

    pub fn is_well_formed(self) -> bool {
        self != ValidityVerdict::Malformed
    }
}

/// Malformed if the tokens do not read back as a ground literal, exact-match
/// if they read back as `gold`, otherwise a well-formed mismatch.
pub fn classify_conjecture(
    tokens: &[String],
    gold: &Literal,
    symbols: &mut SymbolTable,
) -> ValidityVerdict {
    match detokenize(tokens, symbols) {
        None => ValidityVerdict::Malformed,
        Some(lit) if lit == *gold => ValidityVerdict::ExactMatch,
        Some(_) => ValidityVerdict::WellFormedMismatch,
    }
}

fn push_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// `kind,k,i,accuracy,n` rows, sorted, two-decimal accuracy. Buckets that
/// saw no records simply do not appear.
pub fn accuracy_by_config_csv(summary: &AccuracySummary) -> String {
    let mut out = String::from("kind,k,i,accuracy,n\n");
    for (&(kind, k, steps), count) in &summary.by_config {
        push_row(
            &mut out,
            &[
                kind.to_string(),
                k.to_string(),
                steps.to_string(),
                format!("{:.2}", count.accuracy()),
                count.total.to_string(),
            ],
        );
    }
    out
}

/// `kind,length,accuracy,n` rows, sorted; empty buckets omitted.
pub fn accuracy_by_length_csv(summary: &AccuracySummary) -> String {
    let mut out = String::from("kind,length,accuracy,n\n");
    for (&(kind, length), count) in &summary.by_length {
        push_row(
            &mut out,
            &[
                kind.to_string(),
                length.to_string(),
                format!("{:.2}", count.accuracy()),
                count.total.to_string(),
            ],
        );
    }
    out
}

/// `verdict,count,share` rows. The taxonomy is closed, so all three rows
/// are always present.
pub fn conjecture_validity_csv(verdicts: &[ValidityVerdict]) -> String {
    let mut counts = BTreeMap::new();
    for v in [
        ValidityVerdict::ExactMatch,
        ValidityVerdict::WellFormedMismatch,
        ValidityVerdict::Malformed,
    ] {
        counts.insert(v, 0usize);
    }
    for v in verdicts {
        *counts.get_mut(v).unwrap() += 1;
    }
    let total = verdicts.len().max(1);
    let mut out = String::from("verdict,count,share\n");
    for (v, n) in counts {
        push_row(
            &mut out,
            &[
                v.as_str().to_string(),
                n.to_string(),
                format!("{:.2}", n as f64 / total as f64),
            ],
        );
    }
    out
}

/// Aligned-text grid: one row per i, one accuracy column per (kind, k) pair
/// observed in the summary. Cells without data render as `-`.
pub fn accuracy_grid_text(summary: &AccuracySummary) -> String {
    let columns: BTreeSet<(SourceKind, usize)> = summary
        .by_config
        .keys()
        .map(|&(kind, k, _)| (kind, k))
        .collect();
    let rows: BTreeSet<usize> = summary.by_config.keys().map(|&(_, _, i)| i).collect();

    let mut header: Vec<String> = vec!["i".into()];
    header.extend(columns.iter().map(|(kind, k)| format!("{kind}@{k}")));
    let mut grid: Vec<Vec<String>> = vec![header];
    for &i in &rows {
        let mut row = vec![i.to_string()];
        for &(kind, k) in &columns {
            row.push(match summary.by_config.get(&(kind, k, i)) {
                Some(c) => format!("{:.2}", c.accuracy()),
                None => "-".into(),
            });
        }
        grid.push(row);
    }

    let width = |col: usize| grid.iter().map(|r| r[col].len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..grid[0].len()).map(width).collect();
    let mut out = String::new();
    for row in &grid {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{:>w$}", cell, w = widths[c]);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse_literal_text;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn example(kind: SourceKind, src: &str, tgt: &str, len: usize) -> PathExample {
        PathExample {
            kind,
            source: toks(src),
            target: toks(tgt),
            problem_id: "prob".into(),
            proof_id: "prob".into(),
            node_path: vec![0],
            input_length: len,
        }
    }

    #[test]
    fn reference_sets_union_over_examples() {
        let examples = vec![
            example(SourceKind::Literals, "p ( a )", "c2", 1),
            example(SourceKind::Literals, "p ( a )", "c9", 1),
            example(SourceKind::Literals, "q ( b )", "c2", 1),
        ];
        let index = ReferenceIndex::build(SourceKind::Literals, 1, &examples);
        assert_eq!(index.len(), 2);
        let targets = index.targets(&toks("p ( a )")).unwrap();
        assert_eq!(targets.len(), 2);
        assert!(targets.contains("c2") && targets.contains("c9"));
        assert!(index.targets(&toks("r ( c )")).is_none());
    }

    #[test]
    fn success_means_a_nonempty_intersection() {
        let examples = vec![
            example(SourceKind::Literals, "p ( a )", "c2", 1),
            example(SourceKind::Literals, "p ( a )", "c9", 1),
        ];
        let index = ReferenceIndex::build(SourceKind::Literals, 1, &examples);
        let probe = example(SourceKind::Literals, "p ( a )", "c2", 1);
        let hit = evaluate_example(&index, &probe, vec![toks("c7"), toks("c9")], 2);
        assert!(hit.success);
        let miss = evaluate_example(&index, &probe, vec![toks("c7")], 1);
        assert!(!miss.success);
        let unknown = example(SourceKind::Literals, "z ( z )", "c2", 1);
        let rec = evaluate_example(&index, &unknown, vec![toks("c2")], 1);
        assert!(!rec.success && rec.reference.is_empty());
    }

    #[test]
    fn success_at_k_is_monotone_in_the_prefix() {
        let examples = vec![example(SourceKind::Literals, "p ( a )", "c2", 1)];
        let index = ReferenceIndex::build(SourceKind::Literals, 1, &examples);
        let probe = &examples[0];
        let beam = [toks("c7"), toks("c8"), toks("c2")];
        let mut last = false;
        for k in 1..=beam.len() {
            let rec = evaluate_example(&index, probe, beam[..k].to_vec(), k);
            assert!(rec.success >= last);
            last = rec.success;
        }
        assert!(last);
    }

    fn record(kind: SourceKind, k: usize, steps: usize, len: usize, success: bool) -> PredictionRecord {
        PredictionRecord {
            problem_id: "prob".into(),
            proof_id: "prob".into(),
            kind,
            steps,
            k,
            input_length: len,
            decoded: Vec::new(),
            reference: BTreeSet::new(),
            success,
        }
    }

    #[test]
    fn accuracy_buckets_count_exactly() {
        let records = vec![
            record(SourceKind::Literals, 1, 1, 2, true),
            record(SourceKind::Literals, 1, 1, 2, false),
            record(SourceKind::Literals, 10, 1, 3, true),
            record(SourceKind::Clauses, 1, 2, 2, false),
        ];
        let s = predictive_accuracy(&records).unwrap();
        assert_eq!(s.overall, Count { successes: 2, total: 4 });
        assert_eq!(
            s.by_config[&(SourceKind::Literals, 1, 1)],
            Count { successes: 1, total: 2 }
        );
        assert_eq!(
            s.by_config[&(SourceKind::Literals, 10, 1)],
            Count { successes: 1, total: 1 }
        );
        assert_eq!(
            s.by_length[&(SourceKind::Clauses, 2)],
            Count { successes: 0, total: 1 }
        );
        assert!(predictive_accuracy(&[]).is_err());
    }

    #[test]
    fn accuracy_ignores_record_order() {
        let mut records = vec![
            record(SourceKind::Literals, 1, 1, 2, true),
            record(SourceKind::Clauses, 1, 1, 2, false),
            record(SourceKind::Literals, 10, 2, 4, true),
        ];
        let a = predictive_accuracy(&records).unwrap();
        records.reverse();
        assert_eq!(predictive_accuracy(&records).unwrap(), a);
    }

    #[test]
    fn conjecture_verdicts_follow_the_three_way_taxonomy() {
        let mut sy = SymbolTable::new();
        let gold = parse_literal_text("m1_subset_1(np__1, k4_ordinal1)", &mut sy).unwrap();
        assert_eq!(
            classify_conjecture(&toks("m1_subset_1 ( np__1 , k4_ordinal1 )"), &gold, &mut sy),
            ValidityVerdict::ExactMatch
        );
        let gold = parse_literal_text("m1_subset_1(SKLM, SKLM)", &mut sy).unwrap();
        let verdict = classify_conjecture(
            &toks("m1_subset_1 ( SKLM , k1_zfmisc_1 ( SKLM ) )"),
            &gold,
            &mut sy,
        );
        assert_eq!(verdict, ValidityVerdict::WellFormedMismatch);
        assert!(verdict.is_well_formed());
        let verdict = classify_conjecture(
            &toks("k2_tarski ( SKLM , SKLM ) = k2_tarski ( SKLM"),
            &gold,
            &mut sy,
        );
        assert_eq!(verdict, ValidityVerdict::Malformed);
        assert!(!verdict.is_well_formed());
    }

    #[test]
    fn exact_matches_are_always_well_formed() {
        let mut sy = SymbolTable::new();
        for text in ["p ( a )", "~ r ( a , b )", "a = b", "q ( SKLM )"] {
            let gold = detokenize(&toks(text), &mut sy).unwrap();
            let v = classify_conjecture(&toks(text), &gold, &mut sy);
            assert_eq!(v, ValidityVerdict::ExactMatch);
            assert!(v.is_well_formed());
        }
    }

    #[test]
    fn config_csv_lists_only_observed_buckets() {
        let records = vec![
            record(SourceKind::Literals, 1, 1, 2, true),
            record(SourceKind::Literals, 1, 1, 3, false),
            record(SourceKind::Clauses, 10, 2, 2, true),
        ];
        let s = predictive_accuracy(&records).unwrap();
        let csv = accuracy_by_config_csv(&s);
        assert_eq!(
            csv,
            "kind,k,i,accuracy,n\nliterals,1,1,0.50,2\nclauses,10,2,1.00,1\n"
        );
        let by_length = accuracy_by_length_csv(&s);
        assert_eq!(
            by_length,
            "kind,length,accuracy,n\nliterals,2,1.00,1\nliterals,3,0.00,1\nclauses,2,1.00,1\n"
        );
    }

    #[test]
    fn csv_numbers_survive_a_reparse() {
        let records = vec![
            record(SourceKind::Literals, 1, 1, 2, true),
            record(SourceKind::Literals, 1, 1, 2, false),
            record(SourceKind::Literals, 1, 1, 2, false),
        ];
        let s = predictive_accuracy(&records).unwrap();
        let csv = accuracy_by_config_csv(&s);
        let line = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "literals");
        let accuracy: f64 = fields[3].parse().unwrap();
        let n: usize = fields[4].parse().unwrap();
        assert_eq!(n, 3);
        assert_eq!(accuracy, 0.33);
        assert_eq!(format!("{:.2}", s.overall.accuracy()), fields[3]);
    }

    #[test]
    fn validity_csv_always_lists_the_whole_taxonomy() {
        let verdicts = vec![
            ValidityVerdict::ExactMatch,
            ValidityVerdict::ExactMatch,
            ValidityVerdict::Malformed,
        ];
        let csv = conjecture_validity_csv(&verdicts);
        assert_eq!(
            csv,
            "verdict,count,share\nexact_match,2,0.67\nwell_formed_mismatch,0,0.00\nmalformed,1,0.33\n"
        );
        let empty = conjecture_validity_csv(&[]);
        assert!(empty.contains("exact_match,0,0.00"));
    }

    #[test]
    fn text_grid_has_one_row_per_i_and_one_column_per_kind_and_k() {
        let records = vec![
            record(SourceKind::Literals, 1, 1, 2, true),
            record(SourceKind::Literals, 10, 1, 2, true),
            record(SourceKind::Clauses, 1, 1, 2, false),
            record(SourceKind::Clauses, 10, 1, 2, true),
            record(SourceKind::Literals, 1, 2, 2, false),
            record(SourceKind::Literals, 1, 3, 2, false),
        ];
        let s = predictive_accuracy(&records).unwrap();
        let grid = accuracy_grid_text(&s);
        let lines: Vec<&str> = grid.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("literals@1"));
        assert!(lines[0].contains("literals@10"));
        assert!(lines[0].contains("clauses@1"));
        assert!(lines[0].contains("clauses@10"));
        assert!(lines[1].trim_start().starts_with('1'));
        assert!(lines[3].contains('-'), "i=3 has no clause buckets");
    }
}
