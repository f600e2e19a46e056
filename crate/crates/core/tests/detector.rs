use jamlab::detector::{
    evaluate, load_model, mean_bce, MetricsReport, save_model, train, DetectorModel, ExampleSource, Mode,
    NetworkSpec, ParamId, TrainConfig,
};
use jamlab::raster::{FeatureGrid, NormState};
use jamlab::rng;
use rand::Rng;

fn tiny_spec() -> NetworkSpec {
    NetworkSpec {
        input_channels: 1,
        input_height: 8,
        input_width: 8,
        conv1_channels: 2,
        conv1_kernel: 3,
        conv2_channels: 2,
        conv2_kernel: 2,
        fc1_width: 8,
        fc2_width: 4,
        dropout_p: 0.2,
    }
}

fn random_inputs(spec: &NetworkSpec, n: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|_| (0..spec.input_len()).map(|_| r.random_range(-2.0f32..2.0)).collect())
        .collect()
}

fn batch_loss(model: &DetectorModel<f64>, inputs: &[&[f32]], labels: &[u8]) -> f64 {
    let cache = model.forward_values(inputs, Mode::Eval, 0).unwrap();
    mean_bce(&cache.probabilities(), labels)
}

/// Largest relative error between backprop and central differences.
fn max_gradient_error(init_seed: u64, data_seed: u64) -> f64 {
    let spec = tiny_spec();
    let mut model = DetectorModel::<f64>::init(spec.clone(), init_seed).unwrap();
    // Positive biases keep most rectifiers active so the check covers every layer.
    for id in [ParamId::Conv1Bias, ParamId::Conv2Bias, ParamId::Fc1Bias, ParamId::Fc2Bias] {
        let range = model.layout().range(id);
        model.params_mut()[range].iter_mut().for_each(|b| *b += 0.5);
    }
    let data = random_inputs(&spec, 3, data_seed);
    let inputs: Vec<&[f32]> = data.iter().map(Vec::as_slice).collect();
    let labels = [1u8, 0, 1];
    let cache = model.forward_values(&inputs, Mode::Eval, 0).unwrap();
    let analytic = model.backward(&cache, &labels).unwrap().values;
    let live = analytic.iter().filter(|g| g.abs() > 1e-9).count();
    assert!(live * 2 > analytic.len(), "only {live} of {} gradients are non-zero", analytic.len());

    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for i in 0..analytic.len() {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + h;
        let up = batch_loss(&model, &inputs, &labels);
        model.params_mut()[i] = orig - h;
        let down = batch_loss(&model, &inputs, &labels);
        model.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

#[test]
fn backprop_matches_central_differences() {
    for (init, data) in [(1, 2), (7, 9), (42, 5)] {
        let err = max_gradient_error(init, data);
        assert!(err < 1e-3, "init {init}, data {data}: max relative error {err:e}");
    }
}

#[test]
fn canonical_flatten_length() {
    let spec = NetworkSpec::canonical();
    let chain = spec.validate().unwrap();
    assert_eq!(chain.flatten, 156_800);
    let model = DetectorModel::<f32>::zeros(spec).unwrap();
    assert_eq!(model.layout().shape(ParamId::Fc1Weight), &[256, 156_800]);
}

fn toy_dataset(spec: &NetworkSpec, n: usize, seed: u64) -> Vec<(FeatureGrid, u8)> {
    // Class 1 has a bright top half; class 0 a bright bottom half.
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            let (h, w) = (spec.input_height, spec.input_width);
            let mut values = Vec::with_capacity(spec.input_len());
            for _ in 0..spec.input_channels {
                for y in 0..h {
                    for _ in 0..w {
                        let bright = (y < h / 2) == (label == 1);
                        let base = if bright { 1.0 } else { -1.0 };
                        values.push(base + r.random_range(-0.5f32..0.5));
                    }
                }
            }
            let mut g = FeatureGrid::from_values(spec.input_channels, h, w, values).unwrap();
            g.norm_state = NormState::Normalized;
            (g, label)
        })
        .collect()
}

#[test]
fn training_is_deterministic_and_learns_a_separable_task() {
    let spec = NetworkSpec::for_input(24);
    let data = toy_dataset(&spec, 32, 3);
    let cfg = TrainConfig { epochs: 6, ..TrainConfig::default() };
    let run = || {
        let mut m = DetectorModel::<f32>::init(spec.clone(), 5).unwrap();
        let h = train(&mut m, &data, &cfg, |_| {}).unwrap();
        (m, h)
    };
    let (m1, h1) = run();
    let (m2, h2) = run();
    assert_eq!(h1, h2);
    assert_eq!(m1.params(), m2.params());
    assert!(h1.final_loss() < h1.epochs[0].mean_loss);
    let report = evaluate(&m1, &data, 0.5).unwrap();
    assert_eq!(report.accuracy, 1.0, "{report}");
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let spec = NetworkSpec::for_input(24);
    let data = toy_dataset(&spec, 10, 4);
    let mut m = DetectorModel::<f32>::init(spec, 5).unwrap();
    let before = m.params().to_vec();
    let cfg = TrainConfig { epochs: 2, learning_rate: 0.0, ..TrainConfig::default() };
    train(&mut m, &data, &cfg, |_| {}).unwrap();
    assert_eq!(m.params(), before.as_slice());
}

#[test]
fn divergence_reports_epoch_and_batch() {
    let spec = NetworkSpec::for_input(24);
    let data = toy_dataset(&spec, 16, 4);
    let mut m = DetectorModel::<f32>::init(spec, 5).unwrap();
    let cfg = TrainConfig { epochs: 5, learning_rate: 1e30, ..TrainConfig::default() };
    let err = train(&mut m, &data, &cfg, |_| {}).unwrap_err();
    assert!(matches!(err, jamlab::Error::Training { .. }), "{err}");
}

#[test]
fn checkpoint_roundtrip_preserves_metrics() {
    let spec = NetworkSpec::for_input(24);
    let data = toy_dataset(&spec, 12, 8);
    let m = DetectorModel::<f32>::init(spec, 21).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jnet");
    save_model(&m, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(evaluate(&m, &data, 0.5).unwrap(), evaluate(&back, &data, 0.5).unwrap());

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(load_model(&path), Err(jamlab::Error::Checkpoint(_))));
}

#[test]
fn raising_threshold_never_raises_class_one_recall() {
    let spec = NetworkSpec::for_input(24);
    let data = toy_dataset(&spec, 20, 8);
    let m = DetectorModel::<f32>::init(spec, 3).unwrap();
    let mut last = f64::INFINITY;
    for t in [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0] {
        let r = evaluate(&m, &data, t).unwrap();
        assert!(r.classes[1].recall <= last);
        assert!((r.weighted_avg.recall - r.accuracy).abs() < 1e-12);
        last = r.classes[1].recall;
    }
    assert_eq!(data.len(), ExampleSource::len(&data));
}

#[test]
fn perfect_predictions_score_one_everywhere() {
    let labels = [0u8, 1, 1, 0, 1, 0, 0, 1];
    let probs: Vec<f64> = labels.iter().map(|&y| if y == 1 { 0.9 } else { 0.1 }).collect();
    let r = MetricsReport::from_predictions(&probs, &labels, 0.5).unwrap();
    assert_eq!(r.accuracy, 1.0);
    for c in r.classes.iter().chain([&r.macro_avg, &r.weighted_avg]) {
        assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
    }
    assert_eq!(r.confusion, [[4, 0], [0, 4]]);
    let table = r.to_string();
    assert!(table.lines().any(|l| l.trim_start().starts_with("accuracy") && l.contains("1.00")));
}

#[test]
fn confusion_arithmetic() {
    // 3 true negatives, 1 false positive, 2 false negatives, 4 true positives.
    let r = MetricsReport::from_confusion([[3, 1], [2, 4]]).unwrap();
    assert!((r.accuracy - 0.7).abs() < 1e-12);
    assert!((r.classes[1].precision - 0.8).abs() < 1e-12);
    assert!((r.classes[1].recall - 4.0 / 6.0).abs() < 1e-12);
    assert!((r.classes[0].precision - 0.6).abs() < 1e-12);
    assert!((r.classes[0].recall - 0.75).abs() < 1e-12);
    assert_eq!(r.total(), 10);
    assert!(MetricsReport::from_confusion([[0, 0], [0, 0]]).is_err());
}
