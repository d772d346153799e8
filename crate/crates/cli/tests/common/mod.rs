#![allow(dead_code)]

use std::path::{Path, PathBuf};

use tenderforge_cli::cli::{run, Io};
use tenderforge_core::evaluation::synthetic::{generate, SyntheticConfig, SyntheticSet};

pub fn fixture() -> SyntheticSet {
    generate(&SyntheticConfig {
        templates: 8,
        cases: 2,
        seed: 3,
    })
}

pub struct Files {
    pub dir: tempfile::TempDir,
    pub corpus: PathBuf,
    pub triples: PathBuf,
    pub taxonomy: PathBuf,
}

impl Files {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

pub fn triples_tsv(set: &SyntheticSet) -> String {
    let g = &set.graph;
    g.relations()
        .iter()
        .map(|r| {
            let name = |id: &str| g.entity(id).unwrap().name.clone();
            format!("{}\t{}\t{}\n", name(&r.src), r.rel_type, name(&r.dst))
        })
        .collect()
}

pub fn write_files(set: &SyntheticSet) -> Files {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(&corpus, set.corpus.to_jsonl()).unwrap();
    let triples = dir.path().join("kb.tsv");
    std::fs::write(&triples, triples_tsv(set)).unwrap();
    let taxonomy = dir.path().join("taxonomy.jsonl");
    let lines: String = set
        .taxonomy
        .iter()
        .map(|i| serde_json::to_string(i).unwrap() + "\n")
        .collect();
    std::fs::write(&taxonomy, lines).unwrap();
    Files {
        dir,
        corpus,
        triples,
        taxonomy,
    }
}

pub struct Output {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

pub fn cli(args: &[&str]) -> Output {
    cli_with_input(args, "")
}

pub fn cli_with_input(args: &[&str], stdin: &str) -> Output {
    let mut input = stdin.as_bytes();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("tenderforge").chain(args.iter().copied()),
        &mut Io {
            input: &mut input,
            out: &mut out,
            err: &mut err,
        },
    );
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
