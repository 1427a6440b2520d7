use std::path::PathBuf;

use duoc::dsl::{parse_named, pretty_print, run_script, RunConfig, DEMOS};

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "duoc"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

#[test]
fn corpus_has_thirty_scripts() {
    assert_eq!(corpus().len(), 30);
}

#[test]
fn print_then_parse_is_idempotent() {
    for (name, text) in corpus().into_iter().chain(DEMOS.iter().map(|(n, t)| (n.to_string(), t.to_string()))) {
        let first = parse_named(&name, &text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = pretty_print(&first);
        let second = parse_named(&name, &printed).unwrap_or_else(|e| panic!("{name} reprinted: {e}\n{printed}"));
        assert_eq!(first, second, "{name}");
        assert_eq!(pretty_print(&second), printed, "{name}");
    }
}

#[test]
fn corpus_scripts_run_without_failures() {
    for (name, text) in corpus() {
        let script = parse_named(&name, &text).unwrap();
        let outcome = run_script(&script, &RunConfig::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(outcome.failures.is_empty(), "{name}: {:?}", outcome.failures);
    }
}

#[test]
fn parse_errors_carry_locations() {
    let cases = [
        ("system S = composite(d=2, bits=1)", "1:12", "arity error"),
        ("system S = composite(d=2, bits=1, antibits=1)\nstate X = entpair(p=0.5) on T", "2:29", "undefined system `T`"),
        ("observe X", "1:1", "unknown keyword"),
        ("run chsh { alice0=0 } as C\nassert D.F > 2", "2:8", "undefined run `D`"),
        ("system S = composite(d=2, bits=1, antibits=1) @", "1:47", "unexpected character"),
        ("system S = composite(d=2, bits=1, antibits=1)\nstate A = product(S)", "2:11", "arity error"),
        ("run chsh {} run span {}", "1:13", "new line"),
        ("run chsh { alice0=pi/0 }", "1:22", "nonzero denominator"),
        ("emit csv \"a\"\nemit json \"b\"", "2:1", "only one emit"),
        ("system S = composite(d=2, bits=1, antibits=1)\nsystem S = composite(d=2, bits=1, antibits=1)", "2:8", "already defined"),
        ("system S = composite(d=2, bits=1, antibits=1)\nstate P = entpair(p=0.5, q=1) on S", "2:26", "no argument `q`"),
        ("system S = composite(d=2, bits=1, antibits=1)\nstate P = entpair(p=0.5) on S\nrun span { system=P }", "3:19", "expected a system"),
    ];
    for (src, at, msg) in cases {
        let err = parse_named("t", src).unwrap_err().to_string();
        assert!(err.starts_with(&format!("{at}:")) && err.contains(msg), "{src:?} gave {err:?}");
    }
}

#[test]
fn domain_errors_surface_at_run_time() {
    let script = parse_named(
        "t",
        "system S = composite(d=2, bits=1, antibits=1)\nstate X = entpair(p=1.5, parity=0) on S\n",
    )
    .unwrap();
    let err = run_script(&script, &RunConfig::default()).unwrap_err().to_string();
    assert!(err.starts_with("2:1:") && err.contains("out of range"), "{err}");

    let big = parse_named("t", "system B = composite(d=3, bits=4, antibits=4)\n").unwrap();
    let err = run_script(&big, &RunConfig::default()).unwrap_err().to_string();
    assert!(err.contains("size cap"), "{err}");
}
