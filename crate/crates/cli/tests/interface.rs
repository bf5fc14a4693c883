//! Flag parsing, config files, exit-code classes, and the data-stats
//! loader's three modes.

mod common;

use std::fs;

use common::{ok, read, run, s, scratch};

#[test]
fn config_files_fill_in_flags_and_explicit_flags_win() {
    let d = scratch("config");
    let conf = d.join("gen.conf");
    fs::write(&conf, "# comment\n\nproblems = 3\nseed = 9\n").unwrap();

    let from_config = d.join("from_config");
    ok(&["gen-problems", "--out", &s(&from_config), "--config", &s(&conf)]);
    assert_eq!(fs::read_dir(&from_config).unwrap().count(), 3);

    let overridden = d.join("overridden");
    ok(&[
        "gen-problems",
        "--out",
        &s(&overridden),
        "--config",
        &s(&conf),
        "--seed",
        "11",
    ]);
    assert_eq!(fs::read_dir(&overridden).unwrap().count(), 3);
    assert_ne!(
        read(&from_config.join("gen_0000.p")),
        read(&overridden.join("gen_0000.p")),
        "the explicit seed must override the config seed"
    );
}

#[test]
fn config_files_reject_unknown_keys_nesting_and_bare_lines() {
    let d = scratch("config-bad");
    let unknown = d.join("unknown.conf");
    fs::write(&unknown, "bogus_key=1\n").unwrap();
    assert_eq!(
        run(&["gen-problems", "--out", &s(&d.join("o1")), "--config", &s(&unknown)]),
        1
    );

    let nested = d.join("nested.conf");
    fs::write(&nested, format!("config={}\n", unknown.display())).unwrap();
    assert_eq!(
        run(&["gen-problems", "--out", &s(&d.join("o2")), "--config", &s(&nested)]),
        1
    );

    let bare = d.join("bare.conf");
    fs::write(&bare, "problems\n").unwrap();
    assert_eq!(
        run(&["gen-problems", "--out", &s(&d.join("o3")), "--config", &s(&bare)]),
        1
    );

    assert_eq!(
        run(&["gen-problems", "--out", &s(&d.join("o4")), "--config", &s(&d.join("absent.conf"))]),
        1
    );
}

#[test]
fn usage_errors_exit_one() {
    let d = scratch("usage");
    assert_eq!(run(&["no-such-command"]), 1);
    assert_eq!(run(&["gen-problems"]), 1, "missing required --out");
    assert_eq!(
        run(&["prove", "--problems", &s(&d), "--out", &s(&d), "--depth-start", "0"]),
        1
    );
    assert_eq!(
        run(&["decode", "--corpus", &s(&d), "--stem", "x", "--model", &s(&d.join("m")), "--k", "0", "--out", &s(&d.join("p"))]),
        1
    );
    assert_eq!(
        run(&["prove", "--problems", &s(&d), "--out", &s(&d), "--max-depth", "not-a-number"]),
        1
    );
}

#[test]
fn missing_artifacts_exit_two_and_name_the_producing_command() {
    let d = scratch("missing");
    assert_eq!(
        run(&["train", "--corpus", &s(&d.join("nowhere")), "--stem", "x", "--model-out", &s(&d.join("m.ckpt"))]),
        2
    );
    assert_eq!(
        run(&["prove", "--problems", &s(&d.join("nowhere")), "--out", &s(&d.join("o"))]),
        2,
        "a missing problem directory names gen-problems"
    );
    // A corpus must exist before evaluate can look for predictions.
    let problems = d.join("problems");
    let proofs = d.join("proofs");
    let corpus = d.join("corpus");
    ok(&["gen-problems", "--out", &s(&problems), "--problems", "2"]);
    ok(&["prove", "--problems", &s(&problems), "--out", &s(&proofs)]);
    ok(&["extract", "--problems", &s(&problems), "--proofs", &s(&proofs), "--out", &s(&corpus)]);
    assert_eq!(
        run(&[
            "evaluate",
            "--corpus",
            &s(&corpus),
            "--stem",
            "literals_1",
            "--reference-stem",
            "literals_1",
            "--predictions",
            &s(&d.join("absent.tsv")),
            "--out",
            &s(&d.join("e")),
        ]),
        2
    );
    assert_eq!(
        run(&["decode", "--corpus", &s(&corpus), "--stem", "literals_1", "--model", &s(&d.join("no.ckpt")), "--out", &s(&d.join("p.tsv"))]),
        2
    );
}

#[test]
fn corrupted_inputs_exit_two() {
    let d = scratch("corrupt");
    let problems = d.join("problems");
    let proofs = d.join("proofs");
    ok(&["gen-problems", "--out", &s(&problems), "--problems", "3"]);
    ok(&["prove", "--problems", &s(&problems), "--out", &s(&proofs)]);

    // A proof edited to cite the wrong clause must fail validation.
    let victim = proofs.join("gen_0000.proof");
    let mangled = read(&victim).replacen(" ext ", " ext zz_", 1);
    fs::write(&victim, mangled).unwrap();
    assert_eq!(
        run(&["check", "--problems", &s(&problems), "--proofs", &s(&proofs)]),
        2
    );

    // A malformed problem file is reported but the batch still completes.
    fs::write(problems.join("broken.p"), "cnf(oops, axiom, p(").unwrap();
    let out2 = d.join("proofs2");
    assert_eq!(
        run(&["prove", "--problems", &s(&problems), "--out", &s(&out2)]),
        2
    );
    let stats = read(&out2.join("stats.csv"));
    assert_eq!(
        stats.lines().count(),
        4,
        "the three good problems are still proved and listed"
    );
}

#[test]
fn satisfiable_problems_are_listed_unsolved_without_a_proof_file() {
    let d = scratch("sat");
    let problems = d.join("problems");
    let proofs = d.join("proofs");
    ok(&[
        "gen-problems",
        "--out",
        &s(&problems),
        "--problems",
        "2",
        "--satisfiable",
        "2",
    ]);
    ok(&["prove", "--problems", &s(&problems), "--out", &s(&proofs)]);
    let stats = read(&proofs.join("stats.csv"));
    for sat_id in ["gen_0002", "gen_0003"] {
        let row = stats
            .lines()
            .find(|l| l.starts_with(sat_id))
            .expect("stats row for the satisfiable problem");
        assert!(row.contains(",saturated,"), "unexpected outcome: {row}");
        assert!(!proofs.join(format!("{sat_id}.proof")).exists());
    }
}

#[test]
fn data_stats_skips_reports_and_rejects() {
    assert_eq!(run(&["data-stats"]), 0, "absent corpus is skipped, not failed");

    let d = scratch("stats");
    assert_eq!(run(&["data-stats", "--root", &s(&d.join("nope"))]), 2);

    // Well-formed layout: counts are reported and cross-checked; a count
    // mismatch is a report, not a failure.
    let root = d.join("corpus");
    fs::create_dir_all(root.join("proofs")).unwrap();
    fs::write(root.join("proofs/t1.proof"), "x\n").unwrap();
    fs::write(root.join("literals.src"), "a\nb\n").unwrap();
    fs::write(root.join("literals.tgt"), "c\nd\n").unwrap();
    assert_eq!(run(&["data-stats", "--root", &s(&root)]), 0);

    // Misaligned pair files are a data error.
    fs::write(root.join("literals.tgt"), "c\n").unwrap();
    assert_eq!(run(&["data-stats", "--root", &s(&root)]), 2);
}

#[test]
fn the_installed_binary_documents_defaults_in_help() {
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_prooftrace"))
        .args(["prove", "--help"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let help = String::from_utf8_lossy(&output.stdout);
    for needle in [
        "--max-depth",
        "--node-budget",
        "--ordering",
        "--regularity",
        "--jobs",
        "--config",
        "default: 32",
    ] {
        assert!(help.contains(needle), "prove --help lacks {needle}");
    }

    let output = std::process::Command::new(env!("CARGO_BIN_EXE_prooftrace"))
        .args(["train", "--corpus", "/nonexistent", "--stem", "x", "--model-out", "/tmp/x.ckpt"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(
        err.contains("prooftrace extract"),
        "missing-corpus message must name the producing command, got: {err}"
    );
}
