use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rnck"))
}

fn schema(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn schema_validate_reports_layout() {
    let o = run(
        &[
            "schema",
            "validate",
            schema("numkey.schema").to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("schema numkey: ok"));
    assert!(out.contains("total_bits 64 of 64"));
    assert!(out.contains("letter1\tenumeration\tcardinality=27\twidth=5\tshift=59"));
    assert!(out.contains("length\tunsigned-integer\tcardinality=16\twidth=4\tshift=0"));

    let o = run(
        &[
            "schema",
            "validate",
            schema("overflow.schema").to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("total_bits 66 > 64"));

    let o = run(&["schema", "validate", "/no/such/file.schema"], "");
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("bad.schema");
    std::fs::write(&garbage, "schema x\nfield a float 3\n").unwrap();
    let o = run(&["schema", "validate", garbage.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn generic_encode_decode_with_numkey_schema() {
    let s = schema("numkey.schema");
    let s = s.to_str().unwrap();
    let o = run(&["encode", "--schema", s], "I\tT\t123456\t6\n");
    assert_eq!(stdout(&o), "4D000000001E2406\n");
    let o = run(&["decode", "--schema", s], "4D000000001E2406\n");
    assert_eq!(stdout(&o), "I\tT\t123456\t6\n");
    let o = run(
        &["decode", "--schema", s, "--decimal"],
        "5548434740922426374\n",
    );
    assert_eq!(stdout(&o), "I\tT\t123456\t6\n");
}

#[test]
fn generic_encode_rejects_invalid_schema() {
    let o = run(
        &[
            "encode",
            "--schema",
            schema("overflow.schema").to_str().unwrap(),
        ],
        "1\t2\n",
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_rows_are_line_numbered() {
    let s = schema("sales.schema");
    let s = s.to_str().unwrap();
    let o = run(
        &["encode", "--schema", s],
        "EU\t1\t2\nXX\t1\t2\nEU\t1000\t2\nEU\t3\t4\n",
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);
    let err = stderr(&o);
    assert!(err.contains("line 2:") && err.contains("line 3:"), "{err}");
    assert!(err.contains("skipped 2"));
    let o = run(
        &["encode", "--schema", s, "--strict"],
        "EU\t1\t2\nXX\t1\t2\n",
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn paper_rows_through_dedicated_codecs() {
    let o = run(&["variantkey", "encode"], "chr19\t29238770\tTC\tTG\n");
    assert_eq!(stdout(&o), "98DF12F988B00000\n");
    let o = run(&["variantkey", "decode"], "98DF12F988B00000\n");
    assert_eq!(stdout(&o), "19\t29238771\tC\tG\n");
    let o = run(&["numkey", "encode"], "IT\t123456\n");
    assert_eq!(stdout(&o), "4D000000001E2406\n");
    let o = run(&["numkey", "decode"], "4D000000001E2406\n");
    assert_eq!(stdout(&o), "IT\t123456\n");
    let o = run(&["numkey", "decode"], "ZZZZ\n");
    assert!(stderr(&o).contains("line 1: malformed key"));
}

#[test]
fn hashed_variants_need_the_lookup_file() {
    let dir = tempfile::tempdir().unwrap();
    let lookup = dir.path().join("refalt.tsv");
    let input = "1\t100\tACGTACGTACGTA\tA\n2\t5\tA\tN\n3\t7\tA\tG\n";
    let o = run(
        &["variantkey", "encode", "--lookup", lookup.to_str().unwrap()],
        input,
    );
    assert_eq!(o.status.code(), Some(0));
    let keys = stdout(&o);
    assert_eq!(std::fs::read_to_string(&lookup).unwrap().lines().count(), 2);

    let o = run(&["variantkey", "decode"], &keys);
    let plain = stdout(&o);
    assert!(plain.lines().next().unwrap().contains("HASH:"));
    assert_eq!(plain.lines().nth(2).unwrap(), "3\t7\tA\tG");

    let o = run(
        &["variantkey", "decode", "--lookup", lookup.to_str().unwrap()],
        &keys,
    );
    assert_eq!(
        stdout(&o),
        "1\t100\tACGTACGTACGTA\tA\n2\t5\tA\tN\n3\t7\tA\tG\n"
    );
}

#[test]
fn index_build_search_range_join() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("keys.rnck");
    let idx_s = idx.to_str().unwrap();
    let o = run(
        &["index", "build", "-o", idx_s],
        "98DF12F988B00000\n4D000000001E2406\n4D000000001E2406\n",
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::metadata(&idx).unwrap().len(), 16 + 24);

    let o = run(&["index", "search", idx_s, "4D000000001E2406"], "");
    assert_eq!(stdout(&o), "0\t1\n");
    let o = run(&["index", "search", idx_s, "98DF12F988B00000"], "");
    assert_eq!(stdout(&o), "2\t2\n");
    let o = run(&["index", "search", idx_s, "0000000000000001"], "");
    assert_eq!(o.status.code(), Some(1));

    let o = run(
        &[
            "index",
            "range",
            idx_s,
            "9800000000000000",
            "9FFFFFFFFFFFFFFF",
        ],
        "",
    );
    assert_eq!(stdout(&o), "2\t1\n");
    let o = run(
        &[
            "index",
            "range",
            idx_s,
            "9FFFFFFFFFFFFFFF",
            "9800000000000000",
        ],
        "",
    );
    assert_eq!(o.status.code(), Some(2));

    let (l, r) = (dir.path().join("l.rnck"), dir.path().join("r.rnck"));
    for (src, dst) in [("left_keys.txt", &l), ("right_keys.txt", &r)] {
        let o = bin()
            .args([
                "index",
                "build",
                fixture(src).to_str().unwrap(),
                "-o",
                dst.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
    }
    let o = run(
        &[
            "index",
            "join",
            l.to_str().unwrap(),
            r.to_str().unwrap(),
            "--kind",
            "inner",
        ],
        "",
    );
    let expected = std::fs::read_to_string(fixture("inner_join.expected")).unwrap();
    assert_eq!(stdout(&o), expected);

    let o = run(
        &[
            "index",
            "join",
            l.to_str().unwrap(),
            r.to_str().unwrap(),
            "--kind",
            "full",
        ],
        "",
    );
    assert!(stdout(&o).lines().count() >= expected.lines().count());

    // first key overwritten with u64::MAX breaks the order
    let mut bytes = std::fs::read(&idx).unwrap();
    bytes[16..24].copy_from_slice(&u64::MAX.to_le_bytes());
    let bad = dir.path().join("bad.rnck");
    std::fs::write(&bad, bytes).unwrap();
    let o = run(
        &["index", "search", bad.to_str().unwrap(), "4D000000001E2406"],
        "",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("offset 24"), "{}", stderr(&o));
}

#[test]
fn output_is_deterministic() {
    let input = "chr1\t5\tA\tC\nchrX\t77\tGGGGGGGGGGGG\tG\n";
    let a = run(&["variantkey", "encode"], input);
    let b = run(&["variantkey", "encode"], input);
    assert_eq!(a.stdout, b.stdout);
}
