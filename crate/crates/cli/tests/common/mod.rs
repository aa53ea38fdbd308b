#![allow(dead_code)]

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::{Command, Output};

use looksearch::model::write_product_corpus;
use looksearch::synth::{ClusterSpec, SyntheticCorpus};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_looksearch"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn looksearch")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn synthetic(num_docs: usize, dim: usize, seed: u64) -> SyntheticCorpus {
    SyntheticCorpus::generate(&ClusterSpec {
        num_docs,
        dim,
        num_clusters: 8,
        spread: 0.4,
        categories: vec!["Shirt".into(), "Tie".into()],
        seed,
    })
}

pub fn write_corpus(path: &Path, corpus: &SyntheticCorpus) {
    let mut w = BufWriter::new(File::create(path).unwrap());
    write_product_corpus(&mut w, &corpus.records).unwrap();
    w.flush().unwrap();
}

pub fn write_lines(path: &Path, lines: &[String]) {
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}
