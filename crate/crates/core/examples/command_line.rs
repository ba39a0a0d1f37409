//! Drives the command-line entry point from code: generate a hedgehog,
//! analyse it and check a modulus, all inside a scratch directory.

use defectoscope::cli::run_cli;

fn main() {
    let dir = std::env::temp_dir().join("defectoscope-cli");
    std::fs::create_dir_all(&dir).expect("scratch directory");
    let field = dir.join("hedgehog.dfsc");
    let report = dir.join("hedgehog.json");
    let modulus = dir.join("modulus.json");
    let f = field.to_str().expect("utf-8 path");
    let runs: [Vec<&str>; 3] = [
        vec!["defectoscope", "generate", "--kind", "hedgehog", "--grid", "32", "--out", f],
        vec!["defectoscope", "analyze", "--in", f, "--out", report.to_str().unwrap()],
        vec!["defectoscope", "check-modulus", "--p", "1.5", "--b", "1", "--out", modulus.to_str().unwrap()],
    ];
    for args in runs {
        let code = run_cli(args.clone());
        println!("{} -> exit {code}", args[1..].join(" "));
    }
    let text = std::fs::read_to_string(&report).expect("report written");
    let v: serde_json::Value = serde_json::from_str(&text).expect("valid JSON");
    println!("point degrees: {:?}", v["report"]["points"].as_array().unwrap().iter().map(|p| &p["degree"]).collect::<Vec<_>>());
}
