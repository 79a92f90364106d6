use linkbias_core::classifier::{
    fit_logistic, fit_logistic_from, standardization, FitOptions, LogisticObjective, TrainingSet,
};
use linkbias_core::evaluation::ScoredRanking;
use linkbias_core::graph::{NodeId, Pair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy_problem(rows: usize, dim: usize, seed: u64) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let data = (0..rows)
        .map(|_| {
            let x: Vec<f64> = (0..dim)
                .map(|j| rng.gen_range(-1.0..1.0) * (j + 1) as f64 + j as f64)
                .collect();
            let z: f64 = x.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() * 0.5;
            let y = rng.gen_bool(1.0 / (1.0 + (-z).exp()));
            (x, y)
        })
        .collect();
    TrainingSet::from_rows(dim, data).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let set = noisy_problem(150, 6, 1);
    let (mean, std) = standardization(&set);
    let x: Vec<f64> = set
        .features
        .chunks(set.dim)
        .flat_map(|row| {
            row.iter()
                .zip(&mean)
                .zip(&std)
                .map(|((v, m), s)| (v - m) / s)
                .collect::<Vec<_>>()
        })
        .collect();
    let obj = LogisticObjective::new(set.dim, x, &set.labels, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let params: Vec<f64> = (0..obj.param_len())
            .map(|_| rng.gen_range(-3.0..3.0))
            .collect();
        let (_, grad) = obj.value_and_gradient(&params);
        for k in 0..params.len() {
            let h = 1e-6;
            let mut up = params.clone();
            let mut down = params.clone();
            up[k] += h;
            down[k] -= h;
            let numeric = (obj.value(&up) - obj.value(&down)) / (2.0 * h);
            let rel = (grad[k] - numeric).abs() / grad[k].abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-5, "component {k}: {} vs {numeric}", grad[k]);
        }
    }
}

#[test]
fn optimum_does_not_depend_on_start() {
    let set = noisy_problem(300, 4, 2);
    let opts = FitOptions {
        l2_lambda: 0.01,
        ..FitOptions::default()
    };
    let a = fit_logistic_from(&set, &opts, None).unwrap();
    let start = vec![5.0, -4.0, 3.0, -2.0, 1.0];
    let b = fit_logistic_from(&set, &opts, Some(&start)).unwrap();
    assert!(a.convergence.converged && b.convergence.converged);
    for (x, y) in a.weights.iter().zip(&b.weights) {
        assert!((x - y).abs() < 1e-4);
    }
    assert!((a.bias - b.bias).abs() < 1e-4);
}

#[test]
fn ranking_survives_affine_feature_rescaling() {
    let set = noisy_problem(200, 3, 3);
    let opts = FitOptions::default();
    let model = fit_logistic(&set, &opts).unwrap();
    let (scale, shift) = (250.0, -13.0);
    let mut rescaled = set.clone();
    for row in rescaled.features.chunks_mut(set.dim) {
        row[1] = row[1] * scale + shift;
    }
    let model2 = fit_logistic(&rescaled, &opts).unwrap();

    let eval = noisy_problem(400, 3, 4);
    let pairs: Vec<Pair> = (0..eval.rows() as u32)
        .map(|i| Pair::new(NodeId(i), NodeId(i + 1000)))
        .collect();
    let s1: Vec<f64> = (0..eval.rows())
        .map(|i| model.decision_score(eval.row(i)).unwrap())
        .collect();
    let s2: Vec<f64> = (0..eval.rows())
        .map(|i| {
            let mut x = eval.row(i).to_vec();
            x[1] = x[1] * scale + shift;
            model2.decision_score(&x).unwrap()
        })
        .collect();
    let order = |s: &[f64]| {
        ScoredRanking::new(&pairs, s, &eval.labels)
            .unwrap()
            .entries()
            .iter()
            .map(|e| e.pair)
            .collect::<Vec<_>>()
    };
    let mut gaps: Vec<f64> = s1.clone();
    gaps.sort_by(f64::total_cmp);
    let min_gap = gaps
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    assert!(min_gap > 1e-6, "scores too close to compare orderings");
    assert_eq!(order(&s1), order(&s2));
}

#[test]
fn duplicated_rows_leave_the_model_unchanged() {
    let set = noisy_problem(120, 3, 5);
    let mut doubled = set.clone();
    doubled.features.extend_from_slice(&set.features);
    doubled.labels.extend_from_slice(&set.labels);
    let opts = FitOptions::default();
    let a = fit_logistic(&set, &opts).unwrap();
    let b = fit_logistic(&doubled, &opts).unwrap();
    for (x, y) in a.weights.iter().zip(&b.weights) {
        assert!((x - y).abs() < 1e-5);
    }
}
