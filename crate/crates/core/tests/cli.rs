// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

use std::path::Path;
use std::process::{Command, Output};

fn asd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asd"))
        .args(args)
        .output()
        .expect("run asd")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn part_sizes(stdout: &[u8]) -> Vec<usize> {
    let v: serde_json::Value = serde_json::from_slice(stdout).unwrap();
    v["parts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p.as_array().unwrap().len())
        .collect()
}

#[test]
fn decompose_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.txt", "3\n0 1\n1 2\n0 2\n");
    let out = asd(&["decompose", &tri, "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(part_sizes(&out.stdout), vec![1, 2]);
}

#[test]
fn decompose_matching() {
    let dir = tempfile::tempdir().unwrap();
    let text: String = std::iter::once("20\n".to_string())
        .chain((0..10).map(|i| format!("{} {}\n", 2 * i, 2 * i + 1)))
        .collect();
    let path = write(dir.path(), "m10.txt", &text);
    let out = asd(&["decompose", &path]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(part_sizes(&out.stdout), vec![1, 2, 3, 4]);
}

#[test]
fn malformed_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "3\n0 1 2\nx\n");
    assert_eq!(asd(&["decompose", &bad]).status.code(), Some(3));
    let missing = dir.path().join("missing.txt");
    assert_eq!(asd(&["decompose", &missing.to_string_lossy()]).status.code(), Some(3));
    assert_eq!(asd(&["no-such-command"]).status.code(), Some(3));
}

#[test]
fn verify_reports_through_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.txt", "3\n0 1\n1 2\n0 2\n");
    let out = asd(&["decompose", &tri, "--out", &dir.path().join("d.json").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0));
    let good = dir.path().join("d.json").to_string_lossy().into_owned();
    assert_eq!(asd(&["verify", &tri, &good]).status.code(), Some(0));

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"m":2,"t":2,"parts":[[[0,1]],[[0,1],[1,2]]],"witnesses":[]}"#,
    );
    assert_eq!(asd(&["verify", &tri, &bad]).status.code(), Some(1));
}

#[test]
fn separate_and_generate() {
    let out = asd(&["separate", "6", "7,14"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let sums: Vec<u64> = v["parts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p.as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).sum())
        .collect();
    assert_eq!(sums, vec![7, 14]);
    assert_ne!(asd(&["separate", "3", "1,1,4"]).status.code(), Some(0));

    let a = asd(&["generate", "gnm:12:30", "--seed", "9"]);
    let b = asd(&["generate", "gnm:12:30", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8(a.stdout).unwrap().starts_with("12\n"));
}

#[test]
fn bench_output_is_json() {
    let out = asd(&["bench", "coloring", "--seeds", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
    assert_ne!(asd(&["bench", "nonsense"]).status.code(), Some(0));
}
