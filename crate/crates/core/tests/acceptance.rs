//! One test per acceptance criterion. Each prints a single
//! `ACCEPTANCE criterion N: PASS|FAIL ...` line to stderr, uncaptured.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use ef_spectral::block_model::{make_symmetric_sbm, sample, expected_matrix, BlockModelParams, SymmetricSpec};
use ef_spectral::cluster::{brute_force_cluster, kmeans, kmedians, label_embedding_kmedians, ClusterConfig, Objective};
use ef_spectral::experiment::{
    aggregate, embedding_deviation, loglog_slope, run_sweep, write_csv, AggregateRow, ExperimentConfig, Regime,
};
use ef_spectral::mechanism::{downshift, edge_flip, mixture_sample, privacy_audit, tau_eps};
use ef_spectral::metrics::{
    overall_misclassification_enumerated, overall_misclassification_hungarian, worstcase_misclassification,
    worstcase_misclassification_enumerated,
};
use ef_spectral::rng::{hash_words, stream};
use ef_spectral::spectral::{leading_eigvecs, Embedding};
use ef_spectral::{Graph, LabelVector, PrivacyBudget};

fn report(criterion: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("ACCEPTANCE criterion {criterion}: {verdict} {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn eps(e: f64) -> PrivacyBudget {
    PrivacyBudget::finite(e).unwrap()
}

fn fixed_graph(n: usize, seed: u64) -> Graph {
    let mut rng = stream(seed, 0);
    Graph::from_upper_fn(n, |_, _| rng.random::<f64>() < 0.3)
}

#[test]
fn criterion_01_privacy_audit_exactness() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut over = false;
    for n in 2..=4 {
        for e in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let r = privacy_audit(n, eps(e)).unwrap();
            worst = worst.max((r.max_ratio - e.exp()).abs());
            over |= r.max_ratio > e.exp() + 1e-9;
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        worst <= 1e-9 && !over && elapsed < Duration::from_secs(5),
        format!("max |ratio - e^eps| = {worst:.3e}, elapsed {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_mixture_equivalence() {
    let start = Instant::now();
    let n = 30;
    let draws = 100_000;
    let graph = fixed_graph(n, 2);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut shares = Vec::new();
    for e in [0.5, 2.0] {
        let budget = eps(e);
        let mut flip_counts = vec![0u32; pairs.len()];
        let mut mix_counts = vec![0u32; pairs.len()];
        let mut a = stream(21, 1);
        let mut b = stream(21, 2);
        for _ in 0..draws {
            let f = edge_flip(&graph, budget, &mut a);
            let m = mixture_sample(&graph, budget, &mut b).unwrap();
            for (c, &(i, j)) in pairs.iter().enumerate() {
                flip_counts[c] += f.has_edge(i, j) as u32;
                mix_counts[c] += m.has_edge(i, j) as u32;
            }
        }
        // Two-sample comparison: the difference of two independent
        // proportions has variance 2 p (1 - p) / draws.
        let d = draws as f64;
        let hits = flip_counts
            .iter()
            .zip(&mix_counts)
            .filter(|&(&x, &y)| {
                let (px, py) = (x as f64 / d, y as f64 / d);
                let p = (px + py) / 2.0;
                (px - py).abs() <= 3.0 * (2.0 * p * (1.0 - p) / d).sqrt() + 1e-12
            })
            .count();
        shares.push(hits as f64 / pairs.len() as f64);
    }
    let elapsed = start.elapsed();
    report(
        2,
        shares.iter().all(|&s| s >= 0.99) && elapsed < Duration::from_secs(60),
        format!("share within 3se at eps 0.5, 2 = {shares:?}, elapsed {elapsed:.2?}"),
    );
}

#[test]
fn criterion_03_scaled_expectation() {
    let start = Instant::now();
    let n = 40;
    let draws = 2000;
    let budget = eps(1.0);
    let graph = fixed_graph(n, 3);
    let mut sums = DMatrix::<f64>::zeros(n, n);
    let mut rng = stream(31, 1);
    for _ in 0..draws {
        sums += downshift(&edge_flip(&graph, budget, &mut rng), budget).to_dense();
    }
    let s = budget.flip_probability();
    let sd = (s * (1.0 - s) / draws as f64).sqrt();
    let scale = budget.signal_scale();
    let mut hits = 0;
    let mut total = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let target = scale * graph.has_edge(i, j) as u8 as f64;
            total += 1;
            hits += ((sums[(i, j)] / draws as f64 - target).abs() <= 3.0 * sd) as usize;
        }
    }
    let diag_zero = (0..n).all(|i| sums[(i, i)] == 0.0);
    let share = hits as f64 / total as f64;
    let elapsed = start.elapsed();
    report(
        3,
        share >= 0.99 && diag_zero && elapsed < Duration::from_secs(30),
        format!("share within 3 sigma = {share:.4}, elapsed {elapsed:.2?}"),
    );
}

#[test]
fn criterion_04_sbm_closure() {
    let params = make_symmetric_sbm(&SymmetricSpec::sbm(400, 2, 0.2, 0.05)).unwrap();
    let budget = eps(1.0);
    let reps = 200;
    let labels = params.labels().as_slice().to_vec();
    let mut edges = [[0u64; 2]; 2];
    let mut pairs = [[0u64; 2]; 2];
    for rep in 0..reps {
        let g = sample(&params, &mut stream(rep, 1));
        let f = edge_flip(&g, budget, &mut stream(rep, 2));
        for i in 0..400 {
            for j in i + 1..400 {
                let (a, b) = (labels[i].min(labels[j]), labels[i].max(labels[j]));
                pairs[a][b] += 1;
                edges[a][b] += f.has_edge(i, j) as u64;
            }
        }
    }
    let tau = tau_eps(params.connectivity(), budget);
    let mut ok = true;
    let mut detail = Vec::new();
    for (a, b) in [(0, 0), (0, 1), (1, 1)] {
        let p = tau[(a, b)];
        let m = pairs[a][b] as f64;
        let density = edges[a][b] as f64 / m;
        let z = (density - p) / (p * (1.0 - p) / m).sqrt();
        ok &= z.abs() <= 3.0;
        detail.push(format!("({a},{b}) density {density:.5} vs {p:.5} z={z:.2}"));
    }
    report(4, ok, detail.join("; "));
}

fn random_block_params(seed: u64) -> BlockModelParams {
    let mut rng = stream(seed, 5);
    let k = rng.random_range(2..=5);
    let n = rng.random_range(40..=200);
    let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    labels.shuffle(&mut rng);
    let mut b = DMatrix::zeros(k, k);
    for i in 0..k {
        b[(i, i)] = rng.random_range(0.4..0.9);
        for j in i + 1..k {
            let v = rng.random_range(0.0..0.2);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    BlockModelParams::sbm(LabelVector::new(labels, k).unwrap(), b).unwrap()
}

#[test]
fn criterion_05_eigenvector_invariance() {
    let mut worst: f64 = 1.0;
    for seed in 0..20 {
        let params = random_block_params(seed);
        let k = params.k();
        let p = expected_matrix(&params);
        let base = leading_eigvecs(&p, k).unwrap();
        for c in [0.1, (1f64.exp() - 1.0) / (1f64.exp() + 1.0)] {
            let scaled = leading_eigvecs(&(&p * c), k).unwrap();
            for col in 0..k {
                let u = base.vectors.column(col);
                let v = scaled.vectors.column(col);
                worst = worst.min(u.dot(&v).abs() / (u.norm() * v.norm()));
            }
        }
    }
    report(5, worst > 1.0 - 1e-10, format!("min |cos| = 1 - {:.3e}", 1.0 - worst));
}

#[test]
fn criterion_06_metric_oracles() {
    let mut rng = stream(6, 6);
    let (mut l_agree, mut lt_agree, mut size_bound) = (0, 0, 0);
    let instances = 1000;
    for _ in 0..instances {
        let k = rng.random_range(2..=6);
        let n = rng.random_range(k..=60);
        let mut truth: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        truth.shuffle(&mut rng);
        let estimate: Vec<usize> = truth
            .iter()
            .map(|&t| if rng.random::<f64>() < 0.6 { (t + 1) % k } else { rng.random_range(0..k) })
            .collect();
        let truth = LabelVector::new(truth, k).unwrap();
        let estimate = LabelVector::new(estimate, k).unwrap();
        let l = overall_misclassification_enumerated(&truth, &estimate).unwrap();
        l_agree += (overall_misclassification_hungarian(&truth, &estimate).unwrap() == l) as usize;
        let lt = worstcase_misclassification(&truth, &estimate).unwrap();
        lt_agree += (worstcase_misclassification_enumerated(&truth, &estimate).unwrap() == lt) as usize;
        let n_min = *truth.block_sizes().iter().min().unwrap() as f64;
        size_bound += (lt <= n as f64 / n_min * l + 1e-12) as usize;
    }
    report(
        6,
        l_agree == instances && lt_agree == instances && size_bound == instances,
        format!("L exact {l_agree}/{instances}, L~ exact {lt_agree}/{instances}, L~ <= (n/n_min) L {size_bound}/{instances}"),
    );
}

fn random_points(m: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream(seed, 7);
    DMatrix::from_fn(m, d, |_, _| rng.random::<f64>())
}

#[test]
fn criterion_07_clustering_oracle() {
    let config = ClusterConfig::new(3);
    let mut means_ok = 0;
    let mut medians_ok = 0;
    for seed in 0..100 {
        let pts = random_points(12, 3, seed);
        let best = brute_force_cluster(&pts, 3, Objective::KMeans).unwrap().objective;
        let got = kmeans(&pts, &config, &mut stream(seed, 4)).unwrap().objective;
        means_ok += (got <= 1.05 * best) as usize;

        let pts = random_points(10, 3, 1000 + seed);
        let best = brute_force_cluster(&pts, 3, Objective::KMedians).unwrap().objective;
        let got = kmedians(&pts, &config, &mut stream(seed, 4)).unwrap().objective;
        medians_ok += (got <= 1.10 * best) as usize;
    }
    report(
        7,
        means_ok >= 99 && medians_ok >= 99,
        format!("kmeans within 1.05x on {means_ok}/100, kmedians within 1.10x on {medians_ok}/100"),
    );
}

fn dense_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(Regime::DenseSsbm, vec![120, 300, 600, 1200]);
    c.epsilon_grid = vec![eps(0.5), eps(2.0), PrivacyBudget::INFINITE];
    c.replications = 20;
    c.seed = 2024;
    c
}

fn sweep_csv(config: &ExperimentConfig, threads: usize) -> Vec<u8> {
    let rows = run_sweep(config, threads).unwrap();
    let mut out = Vec::new();
    write_csv(&rows, &mut out).unwrap();
    out
}

/// Single-worker run of the dense sweep, with its wall time.
fn dense_sweep() -> &'static (Vec<AggregateRow>, Vec<u8>, Duration) {
    static CELL: OnceLock<(Vec<AggregateRow>, Vec<u8>, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let config = dense_config();
        let start = Instant::now();
        let rows = run_sweep(&config, 1).unwrap();
        let elapsed = start.elapsed();
        let mut csv = Vec::new();
        write_csv(&rows, &mut csv).unwrap();
        (aggregate(&rows), csv, elapsed)
    })
}

/// Mean L per n, ascending in n, for one budget.
fn curve(agg: &[AggregateRow], budget: PrivacyBudget) -> Vec<(usize, f64, usize)> {
    let mut c: Vec<_> = agg
        .iter()
        .filter(|r| r.epsilon == budget)
        .map(|r| (r.n, r.mean_l, r.count))
        .collect();
    c.sort_by_key(|p| p.0);
    c
}

fn mean_at(agg: &[AggregateRow], n: usize, budget: PrivacyBudget) -> f64 {
    agg.iter().find(|r| r.n == n && r.epsilon == budget).unwrap().mean_l
}

#[test]
fn criterion_08_dense_regime() {
    let (agg, _, elapsed) = dense_sweep();
    let mut ok = agg.iter().all(|r| r.count == 20);
    let mut detail = Vec::new();
    for budget in [eps(0.5), eps(2.0), PrivacyBudget::INFINITE] {
        let c = curve(agg, budget);
        let rises: Vec<f64> = c.windows(2).map(|w| w[1].1 - w[0].1).filter(|&d| d > 0.0).collect();
        ok &= rises.is_empty() || (rises.len() == 1 && rises[0] <= 0.01);
        let means: Vec<String> = c.iter().map(|p| format!("{:.4}", p.1)).collect();
        detail.push(format!("eps {budget}: [{}]", means.join(", ")));
    }
    let inf_1200 = mean_at(agg, 1200, PrivacyBudget::INFINITE);
    let two_1200 = mean_at(agg, 1200, eps(2.0));
    ok &= inf_1200 < 0.02 && two_1200 < 0.05 && *elapsed < Duration::from_secs(600);
    detail.push(format!("elapsed {elapsed:.1?}"));
    report(8, ok, detail.join("; "));
}

#[test]
fn criterion_09_sparse_degradation() {
    let mut config = ExperimentConfig::preset(Regime::SparseSsbm, vec![200, 800, 3200]);
    config.epsilon_grid = vec![eps(0.5), PrivacyBudget::INFINITE];
    config.replications = 20;
    config.seed = 909;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let agg = aggregate(&run_sweep(&config, threads).unwrap());
    let slope = |budget| {
        let pts: Vec<(f64, f64)> = agg
            .iter()
            .filter(|r| r.epsilon == budget)
            .map(|r| (r.n as f64, r.floored_mean_l()))
            .collect();
        loglog_slope(&pts).unwrap()
    };
    let above = [200, 800, 3200]
        .iter()
        .all(|&n| mean_at(&agg, n, eps(0.5)) > mean_at(&agg, n, PrivacyBudget::INFINITE));
    let (s_half, s_inf) = (slope(eps(0.5)), slope(PrivacyBudget::INFINITE));
    let c_half: Vec<String> = curve(&agg, eps(0.5)).iter().map(|p| format!("{:.4}", p.1)).collect();
    let c_inf: Vec<String> = curve(&agg, PrivacyBudget::INFINITE).iter().map(|p| format!("{:.4}", p.1)).collect();
    report(
        9,
        above && s_half.abs() < s_inf.abs(),
        format!(
            "eps 0.5: [{}] slope {s_half:.3}; eps inf: [{}] slope {s_inf:.3}",
            c_half.join(", "),
            c_inf.join(", ")
        ),
    );
}

#[test]
fn criterion_10_dcbm_pipeline() {
    let mut config = ExperimentConfig::preset(Regime::DenseSdcbm, vec![300, 900]);
    config.epsilon_grid = vec![eps(2.0), PrivacyBudget::INFINITE];
    config.replications = 20;
    config.seed = 1010;
    let agg = aggregate(&run_sweep(&config, 1).unwrap());
    let mut ok = true;
    let mut detail = Vec::new();
    for budget in [eps(2.0), PrivacyBudget::INFINITE] {
        let (small, large) = (mean_at(&agg, 300, budget), mean_at(&agg, 900, budget));
        ok &= large < small || (small == 0.0 && large == 0.0);
        detail.push(format!("eps {budget}: {small:.4} -> {large:.4}"));
    }

    // Synthetic embedding: node 2 has an exactly-zero row.
    let vectors = DMatrix::from_row_slice(5, 2, &[1.0, 0.1, 0.0, 1.0, 0.0, 0.0, 0.1, 1.0, 1.0, 0.0]);
    let emb = Embedding::from_parts(vectors, vec![2.0, 1.0]);
    let labels = label_embedding_kmedians(&emb, &ClusterConfig::new(2), &mut stream(10, 4)).unwrap();
    let zero_row = emb.zero_rows == vec![2] && labels.get(2) == 0;
    ok &= zero_row;
    detail.push(format!("zero row labeled {}", labels.get(2)));
    report(10, ok, detail.join("; "));
}

#[test]
fn criterion_11_procrustes_deviation() {
    let params = make_symmetric_sbm(&SymmetricSpec::sbm(600, 3, 0.2, 0.05)).unwrap();
    let mut detail = Vec::new();
    let mut means = Vec::new();
    let mut finite = true;
    for budget in [eps(1.0), PrivacyBudget::INFINITE] {
        let devs: Vec<_> = (0..50)
            .map(|rep| embedding_deviation(&params, budget, hash_words(&[11, budget.key(), rep])).unwrap())
            .collect();
        finite &= devs.iter().all(|d| d.distance.is_finite() && d.reference.is_finite());
        let mean = devs.iter().map(|d| d.distance).sum::<f64>() / 50.0;
        let ratio = devs.iter().map(|d| d.ratio()).sum::<f64>() / 50.0;
        detail.push(format!(
            "eps {budget}: mean distance {mean:.4}, reference {:.4}, mean ratio {ratio:.4}",
            devs[0].reference
        ));
        means.push(mean);
    }
    report(11, finite && means[1] < means[0], detail.join("; "));
}

#[test]
fn criterion_12_determinism() {
    let (_, reference, _) = dense_sweep();
    let config = dense_config();
    let mut ok = sweep_csv(&config, 1) == *reference;
    let mut detail = vec![format!("rerun 1 worker identical: {ok}")];
    for threads in [4, 8] {
        let same = sweep_csv(&config, threads) == *reference;
        ok &= same;
        detail.push(format!("{threads} workers identical: {same}"));
    }
    report(12, ok, format!("{} ({} bytes)", detail.join(", "), reference.len()));
}
