use std::process::Command;

fn rootcount(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_rootcount"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

#[test]
fn count_examples() {
    let (out, _, code) = rootcount(&["count", "--prime", "3", "--exp", "2", "--poly", "x^2"]);
    assert_eq!((out.as_str(), code), ("3\n", 0));
    let (out, _, code) = rootcount(&[
        "count", "--prime", "5", "--exp", "2", "--poly", "x^2+5", "--json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["count"], "0");
    assert_eq!(v["p"], "5");
    assert_eq!(v["t"], 2);
    let (out, _, _) = rootcount(&["count", "--prime", "5", "--exp", "2", "--poly", "0,5,1"]);
    assert_eq!(out, "5\n");
}

#[test]
fn invalid_input_exits_with_2() {
    let (_, err, code) = rootcount(&["count", "--prime", "4", "--exp", "2", "--poly", "x"]);
    assert_eq!(code, 2);
    assert!(err.contains("4 is not prime"), "{err}");
    let (_, err, code) = rootcount(&["count", "--prime", "5", "--exp", "0", "--poly", "x"]);
    assert_eq!(code, 2);
    assert!(err.contains("exponent"), "{err}");
    let (_, err, code) = rootcount(&["count", "--prime", "5", "--exp", "2", "--poly", "x^2+*1"]);
    assert_eq!(code, 2);
    assert!(err.contains("column 5"), "{err}");
    let (_, _, code) = rootcount(&["count", "--prime", "5", "--exp", "2"]);
    assert_eq!(code, 2);
    let (_, _, code) = rootcount(&[
        "count",
        "--prime",
        "5",
        "--exp",
        "2",
        "--poly",
        "x",
        "--force-engine",
        "fast",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn series_examples() {
    let (out, _, code) = rootcount(&["series", "--prime", "3", "--max-exp", "4", "--poly", "x^2"]);
    assert_eq!(code, 0);
    assert_eq!(out, "1\n1\n3\n3\n9\n");
    let (out, _, _) = rootcount(&[
        "series",
        "--prime",
        "5",
        "--max-exp",
        "3",
        "--poly",
        "x^2-1",
    ]);
    assert_eq!(out, "1\n2\n2\n2\n");
    let (out, _, _) = rootcount(&[
        "series",
        "--prime",
        "5",
        "--max-exp",
        "0",
        "--poly",
        "x^2-1",
    ]);
    assert_eq!(out, "1\n");
    let (out, _, _) = rootcount(&[
        "series",
        "--prime",
        "5",
        "--max-exp",
        "2",
        "--poly",
        "x",
        "--json",
    ]);
    assert_eq!(out, "{\"coefficients\":[\"1\",\"1\",\"1\"],\"p\":\"5\"}\n");
}

#[test]
fn json_round_trips() {
    let runs: [&[&str]; 3] = [
        &[
            "count",
            "--prime",
            "17",
            "--exp",
            "5",
            "--poly",
            "x^2-34*x+289",
            "--json",
            "--trace",
            "--force-engine",
            "tree",
        ],
        &[
            "count", "--prime", "3", "--exp", "4", "--poly", "x^3-x", "--json", "--verify",
        ],
        &[
            "series",
            "--prime",
            "7",
            "--max-exp",
            "3",
            "--poly",
            "x^7-x",
            "--json",
        ],
    ];
    for args in runs {
        let (out, _, code) = rootcount(args);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(format!("{}\n", serde_json::to_string(&v).unwrap()), out);
        assert!(!out.contains('.'), "no floats: {out}");
    }
}

#[test]
fn trace_lists_tree_pieces() {
    let (out, _, _) = rootcount(&[
        "count",
        "--prime",
        "17",
        "--exp",
        "5",
        "--poly",
        "x^2-34*x+289",
        "--json",
        "--trace",
        "--force-engine",
        "tree",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["count"], "289");
    let tree = v["tree"].as_array().unwrap();
    assert_eq!(tree.len(), 2);
    assert_eq!(tree[0]["status"], "expanded");
    assert_eq!(tree[1]["level"], 2);
    assert_eq!(tree[1]["contribution"], "289");
}

#[test]
fn verify_and_engines_agree() {
    for engine in ["tree", "smallp", "auto"] {
        let (out, err, code) = rootcount(&[
            "count",
            "--prime",
            "3",
            "--exp",
            "6",
            "--poly",
            "x^4+9*x^2",
            "--verify",
            "--force-engine",
            engine,
        ]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(out, "81\n");
    }
    let (_, err, code) = rootcount(&[
        "count", "--prime", "1000003", "--exp", "3", "--poly", "x^2+1", "--verify",
    ]);
    assert_eq!(code, 0);
    assert!(err.contains("verification skipped"));
    let (_, err, code) = rootcount(&[
        "count",
        "--prime",
        "1000003",
        "--exp",
        "3",
        "--poly",
        "x^2+1",
        "--force-engine",
        "smallp",
    ]);
    assert_eq!(code, 2, "{err}");
}
