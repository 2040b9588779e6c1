use std::fs;

use ef_spectral::experiment::{
    load_dataset, read_csv, run_dataset, run_sweep, write_csv, ExperimentConfig, Regime, VertexFormat,
};
use ef_spectral::{Error, PrivacyBudget};

#[test]
fn config_file_with_relative_dataset_paths() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("e.txt"), "# two triangles\n1 2\n2 3\n1 3\n4 5\n5 6\n4 6\n").unwrap();
    fs::write(dir.path().join("l.txt"), "a\na\na\nb\nb\nb\n").unwrap();
    let path = dir.path().join("c.toml");
    fs::write(
        &path,
        "regime = \"dataset\"\nepsilon_grid = [\"inf\", 3]\nreplications = 2\nseed = 4\n[dataset]\nedges = \"e.txt\"\nlabels = \"l.txt\"\n",
    )
    .unwrap();
    let config = ExperimentConfig::load(&path).unwrap();
    let spec = config.dataset.as_ref().unwrap();
    assert_eq!(spec.edges, dir.path().join("e.txt"));
    assert_eq!(spec.vertex_format, VertexFormat::Index);

    let data = load_dataset(spec).unwrap();
    assert_eq!(data.graph.node_count(), 6);
    assert_eq!(data.graph.edge_count(), 6);
    assert_eq!(data.labels.as_slice(), &[0, 0, 0, 1, 1, 1]);

    let rows = run_dataset(&config, 1).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().filter(|r| r.epsilon == PrivacyBudget::INFINITE).all(|r| r.l == 0.0));
    assert!(rows.iter().all(|r| r.condition_met.is_none() && r.l_bound.is_nan()));
}

#[test]
fn dataset_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("e.txt"), "1 2\n2 x\n").unwrap();
    fs::write(dir.path().join("l.txt"), "0\n1\n").unwrap();
    let path = dir.path().join("c.toml");
    fs::write(
        &path,
        "regime = \"dataset\"\nepsilon_grid = [1]\nreplications = 1\n[dataset]\nedges = \"e.txt\"\nlabels = \"l.txt\"\n",
    )
    .unwrap();
    let config = ExperimentConfig::load(&path).unwrap();
    let err = run_dataset(&config, 1).unwrap_err().to_string();
    assert!(err.contains("e.txt") && err.contains("line 2"), "{err}");

    fs::write(dir.path().join("e.txt"), "1 2\n").unwrap();
    fs::remove_file(dir.path().join("l.txt")).unwrap();
    assert!(matches!(run_dataset(&config, 1), Err(Error::Io { .. })));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "regime = \"dense_ssbm\"\nn_grid = [30]\nepsilon_grid = [1]\nreplications = 1\nreplicates = 2\n").unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
}

#[test]
fn csv_file_round_trip() {
    let mut config = ExperimentConfig::preset(Regime::SparseSdcbm, vec![60]);
    config.epsilon_grid = vec![PrivacyBudget::finite(1.0).unwrap(), PrivacyBudget::INFINITE];
    config.replications = 2;
    let rows = run_sweep(&config, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    write_csv(&rows, fs::File::create(&path).unwrap()).unwrap();
    let back = read_csv(fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back.len(), rows.len());
    let mut again = Vec::new();
    write_csv(&back, &mut again).unwrap();
    assert_eq!(again, fs::read(&path).unwrap());
}
