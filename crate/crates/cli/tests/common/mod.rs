use std::fs;
use std::path::{Path, PathBuf};

use hpslpred::synthetic::{write_synthetic, SyntheticParams};

/// Small synthetic dataset with a fast config: two labels, cheap classifiers.
pub fn small_project(dir: &Path) -> PathBuf {
    let params = SyntheticParams { samples: 80, labels: 2, ..Default::default() };
    let files = write_synthetic(dir, &params, 11).unwrap();
    let config = dir.join("small.toml");
    fs::write(
        &config,
        r#"seed = 5

[data]
fasta = "synthetic.fasta"
labels = "synthetic_labels.tsv"
top_n = 2

[select]
coarse_step = 50

[search]
folds = 3

[ensemble]
folds = 3

[[ensemble.classifiers]]
kind = "naive-bayes"

[[ensemble.classifiers]]
kind = "logistic-regression"
grid = { c = [0.1, 1.0] }
"#,
    )
    .unwrap();
    assert!(files.fasta.exists());
    config
}
