//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit status
//! if any criterion fails. Runs as a plain binary (no libtest harness) so the
//! lines are always shown.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ontokms_core::kb::KnowledgeBase;
use ontokms_core::ontology::DEFAULT_BASE;
use ontokms_core::vocab::{OWL_CLASS, RDFS_LABEL, RDFS_SUBCLASS_OF, RDF_TYPE};
use ontokms_testkit::{coherence, fuzz, levenshtein_oracle, roundtrip, sparql_oracle};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    }
}

fn run_cli(data: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ontokms"))
        .arg("--data-dir")
        .arg(data)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`{}` exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn seed_statistics() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    run_cli(dir.path(), &["seed"])?;
    let report = run_cli(dir.path(), &["validate"])?;
    let took = within(Duration::from_secs(5), started)?;
    let expected = "concepts: 145\nlabels: 290\ncomments: 290\n0 violations\n";
    if report != expected {
        return Err(format!("validate printed {report:?}"));
    }
    Ok(format!("145 concepts, 290 labels, 290 comments, 0 violations in {took:.2?}"))
}

fn four_branches() -> Outcome {
    // Roots are read straight off the triples: classes with no subClassOf edge.
    let kb = KnowledgeBase::seeded(DEFAULT_BASE);
    let triples: Vec<_> = kb.store().iter().collect();
    let classes: BTreeSet<&str> = triples
        .iter()
        .filter(|t| t.predicate().value() == RDF_TYPE && t.object().value() == OWL_CLASS)
        .map(|t| t.subject().value())
        .collect();
    let with_parent: BTreeSet<&str> =
        triples.iter().filter(|t| t.predicate().value() == RDFS_SUBCLASS_OF).map(|t| t.subject().value()).collect();
    let roots: Vec<&str> = classes.difference(&with_parent).copied().collect();
    let labels: BTreeSet<&str> = triples
        .iter()
        .filter(|t| {
            roots.contains(&t.subject().value())
                && t.predicate().value() == RDFS_LABEL
                && t.object().lang() == Some("en")
        })
        .map(|t| t.object().value())
        .collect();
    let expected =
        BTreeSet::from(["General concepts", "Seizure Types", "Epileptic Syndromes", "Electroencephalography"]);
    if roots.len() != 4 || labels != expected {
        return Err(format!("{} roots labelled {labels:?}", roots.len()));
    }
    Ok(format!("roots: {}", labels.iter().copied().collect::<Vec<_>>().join(", ")))
}

fn sparql_equivalence() -> Outcome {
    let started = Instant::now();
    let stats = sparql_oracle::check_random_queries(0x5EED_0001, 200, 5, 500)?;
    let took = within(Duration::from_secs(60), started)?;
    if stats.stores != 200 {
        return Err(format!("only {} stores checked", stats.stores));
    }
    Ok(format!(
        "{} stores, {} queries ({} with results) all equal the oracle in {took:.2?}",
        stats.stores, stats.queries, stats.non_empty
    ))
}

fn rdf_round_trip() -> Outcome {
    let checked = roundtrip::check_random_round_trips(0x5EED_0002, 100, 300)?;
    if checked != 200 {
        return Err(format!("{checked} store/format round trips instead of 200"));
    }
    Ok("100 stores × {turtle, ntriples}: membership equal, re-export byte-identical".to_string())
}

fn index_coherence() -> Outcome {
    let summary = coherence::run_index_coherence(0x5EED_0003, 1_000, 50, 1e-9)?;
    if summary.operations != 1_000 {
        return Err(format!("{} operations", summary.operations));
    }
    Ok(format!(
        "1000 operations, {} rebuild comparisons, {} scored queries, worst relative error {:e}",
        summary.checks, summary.score_queries, summary.worst_relative_error
    ))
}

fn suggestion_correctness() -> Outcome {
    let all = levenshtein_oracle::check_all_pairs(&['a', 'b', 'c'], 8)?;
    if all.strings != 9_841 || all.pairs != 9_841 * 9_841 {
        return Err(format!("covered {} strings / {} pairs", all.strings, all.pairs));
    }
    let lists = levenshtein_oracle::check_suggestion_lists(0x5EED_0004, 2_000)?;
    Ok(format!("{} pairs equal the recursive definition; {lists} suggestion lists bounded and ordered", all.pairs))
}

fn consistency_fuzz() -> Outcome {
    let summary = fuzz::run_consistency_fuzz(0x5EED_0005, 10_000, 100)?;
    if summary.max_injected == 0 {
        return Err("no annotation violations were injected".into());
    }
    Ok(format!(
        "10000 steps ({} successful), hierarchy acyclic and closed after every step, {} full validations, up to {} injected violations, replay of {} records exact",
        summary.successes, summary.validations, summary.max_injected, summary.log_records
    ))
}

fn api_contract() -> Outcome {
    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().map_err(|e| e.to_string())?;
    let summary = runtime.block_on(common::contract::run_contract())?;
    let mutation_endpoints = [
        "POST /concepts",
        "PATCH /concepts/{id}",
        "DELETE /concepts/{id}",
        "POST /ingest",
        "POST /import",
        "DELETE /records/{id}",
        "DELETE /records",
    ];
    for endpoint in mutation_endpoints {
        let statuses = summary.statuses.get(endpoint).ok_or_else(|| format!("{endpoint} not exercised"))?;
        if !statuses.contains(&500) || !statuses.iter().any(|s| (200..300).contains(s)) {
            return Err(format!("{endpoint} lacks a success or a 500 case: {statuses:?}"));
        }
    }
    Ok(format!(
        "{} requests over {} endpoints, {} mutations each appended exactly one change record",
        summary.cases,
        summary.statuses.len(),
        summary.mutations
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("seed statistics", seed_statistics),
        ("four branches", four_branches),
        ("SPARQL oracle equivalence", sparql_equivalence),
        ("Turtle/N-Triples round trip", rdf_round_trip),
        ("index coherence", index_coherence),
        ("suggestion correctness", suggestion_correctness),
        ("consistency preservation", consistency_fuzz),
        ("API contract", api_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        let took = started.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{took:.2?}]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
