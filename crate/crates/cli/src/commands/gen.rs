//! gen-problems: self-contained CNF problem generation.

use prooftrace_core::problems::{generate_problems, GenConfig, FIG1_TPTP};

use super::{ensure_dir, write_text};
use crate::{CliError, GenProblemsArgs};

pub fn run(args: GenProblemsArgs) -> Result<(), CliError> {
    if args.min_goal_height < 1 || args.max_goal_height > 8 {
        return Err(CliError::Usage(
            "goal heights must lie in 1..=8".into(),
        ));
    }
    if args.min_goal_height > args.max_goal_height {
        return Err(CliError::Usage(
            "--min-goal-height exceeds --max-goal-height".into(),
        ));
    }
    let cfg = GenConfig {
        problems: args.problems,
        satisfiable: args.satisfiable,
        seed: args.seed,
        min_goal_height: args.min_goal_height,
        max_goal_height: args.max_goal_height,
        distractors: args.distractors,
    };
    ensure_dir(&args.out)?;
    let problems = generate_problems(&cfg);
    for p in &problems {
        write_text(&args.out.join(format!("{}.p", p.id)), &p.source)?;
    }
    let mut written = problems.len();
    if args.fig1 {
        write_text(&args.out.join("fig1.p"), FIG1_TPTP)?;
        written += 1;
    }
    println!(
        "wrote {written} problems ({} unsatisfiable, {} satisfiable) to {}",
        cfg.problems,
        cfg.satisfiable,
        args.out.display()
    );
    Ok(())
}
