#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clfkit::io;
use clfkit_core::metrics::PredictionRecord;
use clfkit_core::{GraphMap, QaExample, SceneGraph};

pub fn write_graphs(path: &Path, graphs: &GraphMap) {
    let list: Vec<&SceneGraph> = graphs.values().map(|g| g.as_ref()).collect();
    std::fs::write(path, io::scene_graphs_to_json(&list)).unwrap();
}

pub fn write_examples(path: &Path, examples: &[QaExample]) {
    std::fs::write(
        path,
        io::examples_to_jsonl(examples.iter().map(|e| (e, None))),
    )
    .unwrap();
}

/// Predictions that copy each gold program.
pub fn gold_predictions(examples: &[QaExample]) -> Vec<PredictionRecord> {
    examples
        .iter()
        .map(|e| PredictionRecord {
            example_id: e.example_id.clone(),
            program: e.gold_program.as_ref().map(|p| p.to_text()),
            answer: None,
            system: "gold".into(),
        })
        .collect()
}

pub fn clfkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clfkit"))
        .current_dir(dir)
        .env_remove("CLFKIT_DATA")
        .args(args)
        .output()
        .unwrap()
}

pub fn p(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
