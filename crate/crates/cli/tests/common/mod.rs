#![allow(dead_code)]

use std::collections::BTreeSet;
use std::process::{Command, Output};

use serde_json::Value;

pub const BUNDLED: &str = "ieee14_paper.json";

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout)
            .unwrap_or_else(|e| panic!("stdout is not JSON ({e}):\n{}", self.stdout))
    }

    /// Stdout with the timestamp line removed.
    pub fn stable_stdout(&self) -> String {
        self.stdout
            .lines()
            .filter(|l| !l.trim_start().starts_with("\"generated_at\""))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn gridsight(args: &[&str]) -> Run {
    gridsight_env(args, &[])
}

pub fn gridsight_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gridsight"));
    cmd.args(args).env_remove("GRIDSIGHT_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().expect("binary runs");
    Run {
        code: status.code().expect("exited normally"),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

pub fn strings(v: &Value) -> BTreeSet<String> {
    v.as_array()
        .unwrap_or_else(|| panic!("expected an array, got {v}"))
        .iter()
        .map(|x| x.as_str().unwrap().to_string())
        .collect()
}

pub fn set(labels: &[&str]) -> BTreeSet<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

/// Node and edge counts of an undirected DOT graph, from a small tokenizer
/// that knows nothing about how the file was written.
pub fn dot_counts(text: &str) -> (usize, usize) {
    #[derive(Debug, PartialEq)]
    enum Tok {
        Id(String),
        Edge,
        Open,
        Close,
        Semi,
        Eq,
        Comma,
        LBracket,
        RBracket,
    }
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            c if c.is_whitespace() => {}
            '{' => toks.push(Tok::Open),
            '}' => toks.push(Tok::Close),
            ';' => toks.push(Tok::Semi),
            '=' => toks.push(Tok::Eq),
            ',' => toks.push(Tok::Comma),
            '[' => toks.push(Tok::LBracket),
            ']' => toks.push(Tok::RBracket),
            '-' if chars.peek() == Some(&'-') => {
                chars.next();
                toks.push(Tok::Edge);
            }
            '"' => {
                let mut s = String::new();
                while let Some(c) = chars.next() {
                    match c {
                        '\\' => {
                            s.push(c);
                            s.extend(chars.next());
                        }
                        '"' => break,
                        c => s.push(c),
                    }
                }
                toks.push(Tok::Id(s));
            }
            c => {
                let mut s = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_alphanumeric() || n == '_' || n == '.' {
                        s.push(n);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push(Tok::Id(s));
            }
        }
    }
    // Drop attribute lists, then read statements.
    let mut flat = Vec::new();
    let mut depth = 0;
    for t in toks {
        match t {
            Tok::LBracket => depth += 1,
            Tok::RBracket => depth -= 1,
            t if depth == 0 => flat.push(t),
            _ => {}
        }
    }
    let keywords = ["graph", "digraph", "subgraph", "node", "edge", "strict"];
    let mut nodes = BTreeSet::new();
    let mut edges = 0;
    let mut i = 0;
    while i < flat.len() {
        match &flat[i] {
            Tok::Id(name) if keywords.contains(&name.as_str()) => {
                // Skip the keyword and an optional graph/subgraph name.
                i += 1;
                if matches!(flat.get(i), Some(Tok::Id(_))) {
                    i += 1;
                }
            }
            Tok::Id(_) if matches!(flat.get(i + 1), Some(Tok::Eq)) => i += 3,
            Tok::Id(a) => {
                nodes.insert(a.clone());
                let mut j = i + 1;
                while matches!(flat.get(j), Some(Tok::Edge)) {
                    if let Some(Tok::Id(b)) = flat.get(j + 1) {
                        nodes.insert(b.clone());
                        edges += 1;
                    }
                    j += 2;
                }
                i = j;
            }
            _ => i += 1,
        }
    }
    (nodes.len(), edges)
}
