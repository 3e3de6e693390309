//! End-to-end checks of the command surface: flag parsing, exit codes,
//! output formats, and the machine-format round-trip guarantees.

use asrscale_cli::{run_command, CommandOutput};
use asrscale_core::ingest::parse_runs_csv;

fn run(args: &[&str]) -> CommandOutput {
    run_command(args.iter().copied())
}

fn write(dir: &std::path::Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("Usage: asrscale"));
    assert!(help.stderr.is_empty());

    let version = run(&["--version"]);
    assert_eq!(version.code, 0);
    assert!(version.stdout.starts_with("asrscale "));
}

#[test]
fn unknown_subcommands_and_flags_exit_two_with_usage() {
    let bad_cmd = run(&["frobnicate"]);
    assert_eq!(bad_cmd.code, 2);
    assert!(bad_cmd.stdout.is_empty());
    assert!(bad_cmd.stderr.contains("Usage"));

    let bad_flag = run(&["fit", "--no-such-flag"]);
    assert_eq!(bad_flag.code, 2);
    assert!(bad_flag.stderr.contains("--no-such-flag"));
}

#[test]
fn fit_reports_the_coefficients_and_goodness_of_fit() {
    let out = run(&["fit", "--input", "fixture:table3:S5-preliminary"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("alpha"), "{}", out.stdout);
    assert!(out.stdout.contains("-0.1811"), "{}", out.stdout);
    assert!(out.stdout.contains("28.26"), "{}", out.stdout);
    assert!(out.stdout.contains("r2_log"), "{}", out.stdout);
}

#[test]
fn fit_csv_output_round_trips_every_value() {
    let json = run(&["fit", "--input", "fixture:table2", "--format", "json"]);
    assert_eq!(json.code, 0, "{}", json.stderr);
    let fit: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();

    let csv = run(&["fit", "--input", "fixture:table2", "--format", "csv"]);
    assert_eq!(csv.code, 0);
    let mut lines = csv.stdout.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let values: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        header,
        ["alpha", "beta", "l_infinity", "method", "r2_log", "r2_linear", "n_points"]
    );
    for (name, printed) in header.iter().zip(&values) {
        if *name == "method" {
            assert_eq!(fit[*name], *printed);
        } else if *name == "n_points" {
            assert_eq!(fit[*name].as_u64().unwrap(), printed.parse::<u64>().unwrap());
        } else {
            let reparsed: f64 = printed.parse().unwrap();
            assert_eq!(fit[*name].as_f64().unwrap(), reparsed, "{name} must round-trip");
        }
    }
}

#[test]
fn saturating_fit_reports_a_positive_floor() {
    let out = run(&["fit", "--input", "fixture:table3:S5-preliminary", "--saturating", "--format", "json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let fit: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!(fit["l_infinity"].as_f64().unwrap() > 0.0);
    assert_eq!(fit["method"], "nonlinear-ls");
}

#[test]
fn nonlinear_method_flag_is_accepted() {
    let out = run(&["fit", "--input", "fixture:table4", "--method", "nonlinear", "--format", "json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let fit: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(fit["method"], "nonlinear-ls");
}

#[test]
fn fit_with_too_few_points_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "one.csv",
        "run_id,strategy_id,encoder_tag,data_hours,test_set,cer,total_flops\n\
         r1,S1,enc,100,NET,10.0,50.0\n",
    );
    let out = run(&["fit", "--input", &csv]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("at least 2 points"), "{}", out.stderr);
}

#[test]
fn predict_prints_the_published_example_rounded_to_two_decimals() {
    let out = run(&["predict", "--alpha", "-0.18", "--beta", "28.24", "--budget", "948.26"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("8.22"), "{}", out.stdout);
    assert!(out.stdout.contains("8.222762654015655"), "{}", out.stdout);
}

#[test]
fn predict_rejects_a_non_positive_budget() {
    let out = run(&["predict", "--alpha", "-0.18", "--beta", "28.24", "--budget", "0"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("budget"), "{}", out.stderr);
}

#[test]
fn plan_inverts_a_fit_document() {
    let dir = tempfile::tempdir().unwrap();
    let fit = run(&["fit", "--input", "fixture:table3:S5-preliminary", "--format", "json"]);
    let path = write(dir.path(), "fit.json", &fit.stdout);

    let out = run(&["plan", "--target-cer", "8.23", "--fit", &path, "--format", "json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let plan: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    let budget = plan["required_budget"].as_f64().unwrap();
    assert!(budget > 0.0);

    let check = run(&[
        "predict",
        "--alpha",
        "-0.18113628894725467",
        "--beta",
        "28.266806750924538",
        "--budget",
        &budget.to_string(),
        "--format",
        "json",
    ]);
    let predicted: serde_json::Value = serde_json::from_str(&check.stdout).unwrap();
    assert!((predicted["predicted_error"].as_f64().unwrap() - 8.23).abs() < 1e-9);
}

#[test]
fn plan_reports_unattainable_targets_as_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let fit = run(&["fit", "--input", "fixture:table3:S5-preliminary", "--saturating", "--format", "json"]);
    assert_eq!(fit.code, 0);
    let parsed: serde_json::Value = serde_json::from_str(&fit.stdout).unwrap();
    let floor = parsed["l_infinity"].as_f64().unwrap();
    assert!(floor > 0.0);
    let path = write(dir.path(), "fit.json", &fit.stdout);

    let out = run(&["plan", "--target-cer", &format!("{}", floor * 0.5), "--fit", &path]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("unattainable"), "{}", out.stderr);
}

#[test]
fn plan_rejects_malformed_fit_documents() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "fit.json", "{\"alpha\": \"wat\"}");
    let out = run(&["plan", "--target-cer", "8.0", "--fit", &path]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("invalid fit document"), "{}", out.stderr);
}

#[test]
fn cer_scores_tab_separated_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(dir.path(), "ref.tsv", "u1\tyan jiu sheng\nu2\tda xue\n");
    let hyps = write(dir.path(), "hyp.tsv", "u2\tdaxue\nu1\tyan jiu shang\n");

    // Pairing is by id, so hypothesis order must not matter.
    let out = run(&["cer", "--ref", &refs, "--hyp", &hyps, "--format", "json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(report["utterances"], 2);
    assert_eq!(report["reference_chars"], 16);
    assert_eq!(report["edits"], 1);
    assert!((report["cer_percent"].as_f64().unwrap() - 6.25).abs() < 1e-12);

    let human = run(&["cer", "--ref", &refs, "--hyp", &hyps]);
    assert!(human.stdout.contains("6.25"), "{}", human.stdout);
}

#[test]
fn cer_strip_punctuation_flag_changes_the_score() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(dir.path(), "ref.tsv", "u1\tda xue\n");
    let hyps = write(dir.path(), "hyp.tsv", "u1\tda xue.\n");

    let plain = run(&["cer", "--ref", &refs, "--hyp", &hyps, "--format", "json"]);
    let stripped = run(&[
        "cer", "--ref", &refs, "--hyp", &hyps, "--strip-punctuation", "--format", "json",
    ]);
    let plain: serde_json::Value = serde_json::from_str(&plain.stdout).unwrap();
    let stripped: serde_json::Value = serde_json::from_str(&stripped.stdout).unwrap();
    assert_eq!(plain["edits"], 1);
    assert_eq!(stripped["edits"], 0);
}

#[test]
fn cer_unmatched_ids_are_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(dir.path(), "ref.tsv", "u1\ta\nu2\tb\n");
    let hyps = write(dir.path(), "hyp.tsv", "u1\ta\nu3\tc\n");
    let out = run(&["cer", "--ref", &refs, "--hyp", &hyps]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("u2"), "{}", out.stderr);
    assert!(out.stderr.contains("u3"), "{}", out.stderr);
}

#[test]
fn cer_duplicate_ids_and_malformed_rows_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write(dir.path(), "dup.tsv", "u1\ta\nu1\tb\n");
    let ok = write(dir.path(), "ok.tsv", "u1\ta\n");
    let out = run(&["cer", "--ref", &dup, "--hyp", &ok]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("duplicate"), "{}", out.stderr);

    let bare = write(dir.path(), "bare.tsv", "no-tab-here\n");
    let out = run(&["cer", "--ref", &ok, "--hyp", &bare]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("expected <id>"), "{}", out.stderr);
}

#[test]
fn cer_empty_reference_needs_the_explicit_flag() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(dir.path(), "ref.tsv", "u1\t\nu2\tda xue\n");
    let hyps = write(dir.path(), "hyp.tsv", "u1\tab\nu2\tda xue\n");
    let refused = run(&["cer", "--ref", &refs, "--hyp", &hyps]);
    assert_eq!(refused.code, 1);
    assert!(refused.stderr.contains("is empty"), "{}", refused.stderr);

    let allowed = run(&[
        "cer", "--ref", &refs, "--hyp", &hyps, "--allow-empty-reference", "--format", "json",
    ]);
    assert_eq!(allowed.code, 0, "{}", allowed.stderr);
    let report: serde_json::Value = serde_json::from_str(&allowed.stdout).unwrap();
    // The empty reference contributes its hypothesis as pure insertions.
    assert_eq!(report["edits"], 2);
    assert_eq!(report["reference_chars"], 5);
}

#[test]
fn fixtures_csv_output_reparses_to_the_same_records() {
    for table in ["1", "2", "3", "4"] {
        let out = run(&["fixtures", table, "--format", "csv"]);
        assert_eq!(out.code, 0);
        let records = parse_runs_csv(&out.stdout).unwrap();
        let direct = asrscale_core::load_fixtures(table.parse().unwrap()).unwrap();
        assert_eq!(records, direct, "table {table}");
    }
}

#[test]
fn fixtures_rejects_unknown_tables() {
    let out = run(&["fixtures", "9"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("unknown fixture table"), "{}", out.stderr);
}

#[test]
fn ingest_then_list_round_trips_through_the_store() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run(&["fixtures", "2", "--format", "csv"]);
    let input = write(dir.path(), "runs.csv", &csv.stdout);
    let store = dir.path().join("store.jsonl");
    let store = store.to_str().unwrap();

    let out = run(&["ingest", &input, "--store", store]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("ingested 2 run(s)"), "{}", out.stdout);

    let listed = run(&["runs", "--store", store, "--format", "csv"]);
    assert_eq!(listed.code, 0);
    assert_eq!(parse_runs_csv(&listed.stdout).unwrap(), parse_runs_csv(&csv.stdout).unwrap());

    let filtered = run(&["runs", "--store", store, "--strategy", "S5-preliminary"]);
    assert!(filtered.stdout.contains("t2-S5-preliminary"));
    assert!(!filtered.stdout.contains("t2-S5-full"));

    let by_source = run(&["runs", "--store", store, "--source", "fixture:table2", "--format", "csv"]);
    assert_eq!(parse_runs_csv(&by_source.stdout).unwrap().len(), 2);

    // Re-ingesting the same run ids is a conflict, not a silent overwrite.
    let again = run(&["ingest", &input, "--store", store]);
    assert_eq!(again.code, 1);
    assert!(again.stderr.contains("already exists"), "{}", again.stderr);
}

#[test]
fn store_path_falls_back_to_the_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run(&["fixtures", "1", "--format", "csv"]);
    let input = write(dir.path(), "runs.csv", &csv.stdout);
    let store = dir.path().join("env-store.jsonl");

    std::env::set_var("ASRSCALE_STORE", &store);
    let ingested = run(&["ingest", &input]);
    let listed = run(&["runs", "--format", "csv"]);
    std::env::remove_var("ASRSCALE_STORE");

    assert_eq!(ingested.code, 0, "{}", ingested.stderr);
    assert_eq!(listed.code, 0, "{}", listed.stderr);
    assert_eq!(parse_runs_csv(&listed.stdout).unwrap().len(), 6);

    let missing = run(&["runs"]);
    assert_eq!(missing.code, 2, "without the variable the flag is required");
}

#[test]
fn compare_emits_baseline_relative_columns() {
    let out = run(&["compare", "--baseline", "S3", "--input", "fixture:table1", "--format", "csv"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let mut lines = out.stdout.lines();
    assert_eq!(
        lines.next().unwrap(),
        "strategy_id,avg_cer,total_flops,cerr_vs_baseline,flops_ratio_vs_baseline"
    );
    let s3: Vec<&str> = lines.clone().find(|l| l.starts_with("S3,")).unwrap().split(',').collect();
    assert_eq!(s3[3].parse::<f64>().unwrap(), 0.0);
    assert_eq!(s3[4].parse::<f64>().unwrap(), 1.0);

    let missing = run(&["compare", "--baseline", "S9", "--input", "fixture:table1"]);
    assert_eq!(missing.code, 1);
    assert!(missing.stderr.contains("S9"), "{}", missing.stderr);
}

#[test]
fn pareto_prints_the_frontier_in_budget_order() {
    let out = run(&["pareto", "--input", "fixture:table1", "--format", "csv"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let ids: Vec<&str> = out
        .stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ids, ["S1", "S4", "S5"]);
}

#[test]
fn chart_writes_a_deterministic_svg_and_rejects_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("chart.svg");
    let out = run(&["chart", "--input", "fixture:table4", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("wrote"), "{}", out.stdout);
    let svg = std::fs::read_to_string(&out_path).unwrap();
    assert!(svg.starts_with("<?xml"));
    // 8 published rows, one marker each; two series, one fit per series.
    assert_eq!(svg.matches("class=\"marker\"").count(), 8);
    assert_eq!(svg.matches("class=\"fit\"").count(), 2);

    let empty = write(
        dir.path(),
        "empty.csv",
        "run_id,strategy_id,encoder_tag,data_hours,test_set,cer,total_flops\n",
    );
    let rejected = run(&["chart", "--input", &empty, "--out", out_path.to_str().unwrap()]);
    assert_eq!(rejected.code, 2);
    assert!(rejected.stderr.contains("no series"), "{}", rejected.stderr);
}

#[test]
fn chart_no_fit_draws_markers_only() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("plain.svg");
    let out = run(&[
        "chart", "--input", "fixture:table4", "--no-fit", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let svg = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(svg.matches("class=\"marker\"").count(), 8);
    assert_eq!(svg.matches("class=\"fit\"").count(), 0);
}

#[test]
fn estimate_breaks_a_plan_document_down_by_stage_and_module() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "plan.json",
        r#"{
            "id": "three-stage",
            "stages": [
                {"kind": "encoder-finetune", "dataset": {"hours": 10000}},
                {"kind": "alignment", "convergence": "preliminary", "dataset": {"hours": 10000}},
                {"kind": "llm-adaptation", "dataset": {"hours": 10000}}
            ]
        }"#,
    );
    let out = run(&["estimate", "--config", &config, "--format", "json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(report["id"], "three-stage");
    assert_eq!(report["stages"].as_array().unwrap().len(), 3);
    assert!(report["total"].as_f64().unwrap() > 0.0);

    let human = run(&["estimate", "--config", &config]);
    assert!(human.stdout.contains("encoder-finetune"), "{}", human.stdout);
    assert!(human.stdout.contains("whisper-medium"), "{}", human.stdout);
    assert!(human.stdout.contains("(strategy total)"), "{}", human.stdout);
}

#[test]
fn estimate_rejects_out_of_order_stages_as_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "plan.json",
        r#"{
            "id": "bad",
            "stages": [
                {"kind": "llm-adaptation", "dataset": {"hours": 100}},
                {"kind": "alignment", "dataset": {"hours": 100}}
            ]
        }"#,
    );
    let out = run(&["estimate", "--config", &config]);
    assert_eq!(out.code, 1);

    let garbage = write(dir.path(), "garbage.json", "not json");
    let parse = run(&["estimate", "--config", &garbage]);
    assert_eq!(parse.code, 2);
}

#[test]
fn missing_input_files_are_usage_errors() {
    let out = run(&["fit", "--input", "/definitely/not/here.csv"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("cannot read"), "{}", out.stderr);

    let filtered = run(&["fit", "--input", "fixture:table3:S99"]);
    assert_eq!(filtered.code, 2);
    assert!(filtered.stderr.contains("no rows"), "{}", filtered.stderr);
}
