//! prove, check, and guided-prove: batch search over a problem directory,
//! proof validation, and the paired model-guided comparison.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use prooftrace_core::fol::OccursCheck;
use prooftrace_core::tableau::{
    check_proof, prove, write_proof, ClauseOrdering, Outcome, SearchLimits, SearchOptions,
    SearchResult, SearchStats,
};

use super::{
    ensure_dir, list_artifacts, load_problems_lenient, load_problems_strict, load_proof,
    run_jobs, write_text, Problem,
};
use crate::commands::model::load_model_bundle;
use crate::io::stem_of;
use crate::scorer::ModelScorer;
use crate::{CheckArgs, CliError, GuidedProveArgs, OrderingArg, ProveArgs, SearchArgs};

fn search_options(args: &SearchArgs) -> Result<SearchOptions<'static>, CliError> {
    if args.depth_start == 0 || args.depth_step == 0 {
        return Err(CliError::Usage(
            "--depth-start and --depth-step must be at least 1".into(),
        ));
    }
    Ok(SearchOptions {
        limits: SearchLimits {
            max_depth: args.max_depth,
            depth_start: args.depth_start,
            depth_step: args.depth_step,
            node_budget: args.node_budget,
            time_budget: args.time_budget_ms.map(Duration::from_millis),
        },
        ordering: match args.ordering {
            OrderingArg::Input => ClauseOrdering::InputOrder,
            OrderingArg::Random => ClauseOrdering::Random(args.order_seed),
        },
        regularity: args.regularity,
        occurs: OccursCheck::On,
    })
}

fn outcome_str(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Proved => "proved",
        Outcome::Saturated => "saturated",
        Outcome::DepthExhausted => "depth_exhausted",
        Outcome::NodeBudgetExhausted => "node_budget",
        Outcome::TimeBudgetExhausted => "time_budget",
    }
}

struct StatsRow {
    problem: String,
    outcome: Outcome,
    stats: SearchStats,
}

/// One row per problem, sorted by problem id. The timing column comes last
/// and is the only field that varies between identical runs.
fn stats_csv(rows: &[StatsRow]) -> String {
    let mut out =
        String::from("problem,outcome,rounds,proof_depth,nodes,extensions,reductions,fallbacks,elapsed_ms\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.problem,
            outcome_str(r.outcome),
            r.stats.rounds,
            r.stats.proof_depth,
            r.stats.nodes_visited,
            r.stats.extensions_tried,
            r.stats.reductions_tried,
            r.stats.scorer_fallbacks,
            r.stats.elapsed.as_millis(),
        ));
    }
    out
}

/// Renders and re-checks a freshly found proof; a failure here is a prover
/// bug, not bad input.
fn render_checked_proof(problem: &Problem, result: &SearchResult) -> Result<Option<String>, CliError> {
    let proof = match &result.proof {
        Some(p) => p,
        None => return Ok(None),
    };
    check_proof(&problem.matrix, proof).map_err(|v| {
        CliError::Internal(format!("freshly produced proof of {} fails its own check: {v}", problem.id))
    })?;
    let text = write_proof(proof, &problem.matrix.symbols)
        .map_err(|e| CliError::Internal(format!("serializing proof of {}: {e}", problem.id)))?;
    Ok(Some(text))
}

pub fn run(args: ProveArgs) -> Result<(), CliError> {
    let opts = search_options(&args.search)?;
    let (problems, failures) = load_problems_lenient(&args.problems)?;
    ensure_dir(&args.out)?;
    if problems.is_empty() && failures.is_empty() {
        eprintln!("warning: no problem files in {}", args.problems.display());
    }

    let results = run_jobs(args.jobs, problems, |p| {
        let result = prove(&p.matrix, &p.id, &opts);
        (p, result)
    })?;

    let mut rows = Vec::new();
    let mut solved = 0usize;
    for (problem, result) in &results {
        if let Some(text) = render_checked_proof(problem, result)? {
            write_text(&args.out.join(format!("{}.proof", problem.id)), &text)?;
            solved += 1;
        }
        rows.push(StatsRow {
            problem: problem.id.clone(),
            outcome: result.outcome,
            stats: result.stats.clone(),
        });
    }
    rows.sort_by(|a, b| a.problem.cmp(&b.problem));
    write_text(&args.out.join("stats.csv"), &stats_csv(&rows))?;
    println!("proved {solved}/{} problems; stats in {}", results.len(), args.out.display());

    for f in &failures {
        eprintln!("parse error: {f}");
    }
    if !failures.is_empty() {
        return Err(CliError::Data(format!(
            "{} problem file(s) failed to parse",
            failures.len()
        )));
    }
    Ok(())
}

pub fn run_check(args: CheckArgs) -> Result<(), CliError> {
    let problems = load_problems_strict(&args.problems)?;
    let by_id: HashMap<&str, &Problem> =
        problems.iter().map(|p| (p.id.as_str(), p)).collect();
    let proof_files = list_artifacts(&args.proofs, "proof", "prove")?;
    if proof_files.is_empty() {
        eprintln!("warning: no proof files in {}", args.proofs.display());
        return Ok(());
    }

    let outcomes = run_jobs(args.jobs, proof_files, |path| {
        let stem = stem_of(&path);
        let verdict = check_one(&path, by_id.get(stem.as_str()).copied());
        (stem, verdict)
    })?;

    let mut bad = 0usize;
    for (stem, verdict) in &outcomes {
        match verdict {
            Ok(()) => println!("{stem}: ok"),
            Err(msg) => {
                println!("{stem}: FAIL {msg}");
                bad += 1;
            }
        }
    }
    if bad > 0 {
        return Err(CliError::Data(format!(
            "{bad}/{} proofs failed validation",
            outcomes.len()
        )));
    }
    println!("checked {} proofs", outcomes.len());
    Ok(())
}

fn check_one(path: &Path, problem: Option<&Problem>) -> Result<(), String> {
    let problem = match problem {
        Some(p) => p,
        None => return Err("no matching problem file".into()),
    };
    let (matrix, proof) = load_proof(path, &problem.matrix).map_err(|e| e.to_string())?;
    check_proof(&matrix, &proof).map_err(|v| v.to_string())
}

pub fn run_guided(args: GuidedProveArgs) -> Result<(), CliError> {
    if !matches!(args.search.ordering, OrderingArg::Input) {
        return Err(CliError::Usage(
            "guided-prove fixes the ordering; drop --ordering".into(),
        ));
    }
    let opts = search_options(&args.search)?;
    let (model, src_vocab, tgt_vocab) = load_model_bundle(&args.model)?;
    let scorer = ModelScorer::new(model, src_vocab, tgt_vocab);
    let guided_opts = SearchOptions {
        ordering: ClauseOrdering::ModelGuided(&scorer),
        ..opts.clone()
    };

    let problems = load_problems_strict(&args.problems)?;
    if problems.is_empty() {
        eprintln!("warning: no problem files in {}", args.problems.display());
    }
    let proofs_dir = args.out.join("proofs");
    ensure_dir(&proofs_dir)?;

    let results = run_jobs(args.jobs, problems, |p| {
        let guided = prove(&p.matrix, &p.id, &guided_opts);
        let input = prove(&p.matrix, &p.id, &opts);
        (p, guided, input)
    })?;

    let mut guided_rows = Vec::new();
    let mut input_rows = Vec::new();
    let mut comparison = String::from("problem,guided_outcome,input_outcome,guided_nodes,input_nodes\n");
    let mut guided_solved = 0usize;
    let mut input_solved = 0usize;
    let mut lost: Vec<&str> = Vec::new();
    let mut fallbacks = 0u64;
    for (problem, guided, input) in &results {
        if let Some(text) = render_checked_proof(problem, guided)? {
            write_text(&proofs_dir.join(format!("{}.proof", problem.id)), &text)?;
        }
        guided_solved += usize::from(guided.outcome == Outcome::Proved);
        input_solved += usize::from(input.outcome == Outcome::Proved);
        if input.outcome == Outcome::Proved && guided.outcome != Outcome::Proved {
            lost.push(&problem.id);
        }
        fallbacks += guided.stats.scorer_fallbacks;
        comparison.push_str(&format!(
            "{},{},{},{},{}\n",
            problem.id,
            outcome_str(guided.outcome),
            outcome_str(input.outcome),
            guided.stats.nodes_visited,
            input.stats.nodes_visited,
        ));
        guided_rows.push(StatsRow {
            problem: problem.id.clone(),
            outcome: guided.outcome,
            stats: guided.stats.clone(),
        });
        input_rows.push(StatsRow {
            problem: problem.id.clone(),
            outcome: input.outcome,
            stats: input.stats.clone(),
        });
    }
    write_text(&args.out.join("stats_guided.csv"), &stats_csv(&guided_rows))?;
    write_text(&args.out.join("stats_input.csv"), &stats_csv(&input_rows))?;
    write_text(&args.out.join("comparison.csv"), &comparison)?;

    println!(
        "guided ordering proved {guided_solved}/{} problems; input order proved {input_solved}/{}",
        results.len(),
        results.len()
    );
    if !lost.is_empty() {
        println!(
            "guided ordering lost {} problem(s) that input order solves: {}",
            lost.len(),
            lost.join(" ")
        );
    }
    if fallbacks > 0 {
        println!("scorer fell back to input order at {fallbacks} choice points");
    }
    Ok(())
}
