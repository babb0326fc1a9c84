use std::collections::BTreeSet;

use hashtopic::corpus::{self, Document};
use hashtopic::pipeline::{self, read_factorization, PipelineConfig};
use hashtopic::report::evaluate;
use hashtopic::synthetic::{planted_corpus, PlantedConfig};
use hashtopic::tsnmf;
use hashtopic::ConstraintMatrix;

fn small_run(dir: &std::path::Path) -> PipelineConfig {
    let planted = planted_corpus(&PlantedConfig {
        num_docs: 300,
        min_words: 10,
        max_words: 16,
        seed: 5,
        ..PlantedConfig::default()
    });
    let input = dir.join("input.jsonl");
    corpus::write_raw(&input, &planted.documents).unwrap();
    PipelineConfig {
        input_path: Some(input),
        output_dir: Some(dir.join("out")),
        min_chars: 1,
        min_df: 2,
        num_communities: 5,
        k: 6,
        resolution: 1.0,
        max_iter: 40,
        ..PipelineConfig::default()
    }
}

#[test]
fn artifacts_read_back_consistently() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_run(tmp.path());
    let outcome = pipeline::run_pipeline(&cfg).unwrap();
    let out = outcome.output_dir;
    for name in pipeline::ARTIFACTS {
        assert!(out.join(name).is_file(), "{name}");
    }

    let labeled = corpus::read_documents(out.join(pipeline::LABELED)).unwrap();
    let x = pipeline::read_tfidf(&out).unwrap();
    assert_eq!(x.rows(), labeled.len());
    for i in 0..x.rows() {
        let (_, vals) = x.row(i);
        let norm: f64 = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
    }

    let l = ConstraintMatrix::from_coordinate(&std::fs::read_to_string(out.join(pipeline::CONSTRAINT)).unwrap()).unwrap();
    let sup = read_factorization(&out.join(pipeline::SUPERVISED)).unwrap();
    let uns = read_factorization(&out.join(pipeline::UNSUPERVISED)).unwrap();
    for ((i, j), &v) in sup.w.indexed_iter() {
        assert!(l.allows(i, j) || v == 0.0);
    }
    let recomputed = tsnmf::objective(&x, &sup.w, &l, &sup.h).unwrap();
    assert!((recomputed - sup.final_objective()).abs() <= 1e-9 * sup.final_objective().max(1.0));

    let reference: Vec<BTreeSet<usize>> = labeled.iter().map(|d: &Document| d.labels.clone()).collect();
    assert_eq!(evaluate(&sup, &reference).unwrap(), outcome.manifest.comparison.supervised);
    assert_eq!(evaluate(&uns, &reference).unwrap(), outcome.manifest.comparison.unsupervised);
}

#[test]
fn rerun_overwrites_with_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_run(tmp.path());
    let first = pipeline::run_pipeline(&cfg).unwrap().manifest;
    let second = pipeline::run_pipeline(&cfg).unwrap().manifest;
    assert_eq!(first.artifacts, second.artifacts);
    assert_eq!(first.corpus, second.corpus);
}
