use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    add_col_sums, add_row_sums, bias_relu, col2im, dense, dense_input_grad, dense_weight_grad,
    im2col, im2col_t, maxpool2, maxpool2_relu_backward,
};
use super::real::{gemm, Operand, Real};
use super::spec::{NetworkSpec, ParamId, ParamLayout, ShapeChain};
use crate::error::{Error, Result};
use crate::raster::{FeatureGrid, NormState};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}

/// Weights and biases of one network, stored flat in declared layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel<T: Real = f32> {
    spec: NetworkSpec,
    chain: ShapeChain,
    layout: ParamLayout,
    params: Vec<T>,
    init_seed: u64,
    /// Bumped on every parameter mutation so stale caches are detectable.
    generation: u64,
}

impl<T: Real> DetectorModel<T> {
    /// Fan-in scaled uniform initialization: every tensor of a layer draws
    /// from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn init(spec: NetworkSpec, init_seed: u64) -> Result<Self> {
        let mut model = Self::zeros(spec)?;
        model.init_seed = init_seed;
        let mut r = rng::seeded(init_seed);
        for id in ParamId::ALL {
            let bound = 1.0 / (model.layout.fan_in(id) as f64).sqrt();
            for p in &mut model.params[model.layout.range(id)] {
                *p = T::lit(r.random_range(-bound..bound));
            }
        }
        Ok(model)
    }

    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        let chain = spec.validate()?;
        let layout = ParamLayout::new(&spec)?;
        Ok(DetectorModel {
            params: vec![T::zero(); layout.total()],
            spec,
            chain,
            layout,
            init_seed: 0,
            generation: 0,
        })
    }

    pub(crate) fn from_parts(spec: NetworkSpec, init_seed: u64, params: Vec<T>) -> Result<Self> {
        let mut m = Self::zeros(spec)?;
        if params.len() != m.layout.total() {
            return Err(Error::Checkpoint(format!(
                "{} parameters for a spec that needs {}",
                params.len(),
                m.layout.total()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        m.params = params;
        m.init_seed = init_seed;
        Ok(m)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn shape_chain(&self) -> ShapeChain {
        self.chain
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn param(&self, id: ParamId) -> &[T] {
        &self.params[self.layout.range(id)]
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        self.generation += 1;
        &mut self.params
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Same weights in another precision.
    pub fn cast<U: Real>(&self) -> DetectorModel<U> {
        DetectorModel {
            spec: self.spec.clone(),
            chain: self.chain,
            layout: self.layout.clone(),
            params: self.params.iter().map(|p| U::lit(p.f64())).collect(),
            init_seed: self.init_seed,
            generation: 0,
        }
    }

    fn check_grid(&self, grid: &FeatureGrid) -> Result<()> {
        let want = (self.spec.input_channels, self.spec.input_height, self.spec.input_width);
        if grid.dims() != want {
            return Err(Error::Architecture {
                layer: "input",
                reason: format!("grid is {:?}, network expects {:?}", grid.dims(), want),
            });
        }
        if grid.norm_state != NormState::Normalized {
            return Err(Error::Input("detector input must be normalized".into()));
        }
        Ok(())
    }

    /// Single-example forward pass. Returns the jammed probability and the
    /// cache needed by [`DetectorModel::backward`].
    pub fn forward(
        &self,
        grid: &FeatureGrid,
        mode: Mode,
        dropout_seed: u64,
    ) -> Result<(f64, ForwardCache<T>)> {
        self.check_grid(grid)?;
        let cache = self.forward_values(&[&grid.values], mode, dropout_seed)?;
        Ok((cache.probabilities()[0], cache))
    }

    /// Evaluation-mode probability for one grid.
    pub fn predict(&self, grid: &FeatureGrid) -> Result<f64> {
        self.forward(grid, Mode::Eval, 0).map(|r| r.0)
    }

    pub fn predict_batch(&self, grids: &[&FeatureGrid]) -> Result<Vec<f64>> {
        for g in grids {
            self.check_grid(g)?;
        }
        let inputs: Vec<&[f32]> = grids.iter().map(|g| g.values.as_slice()).collect();
        Ok(self.forward_values(&inputs, Mode::Eval, 0)?.probabilities())
    }

    /// Batched forward pass over raw input tensors (each `C*H*W` long).
    pub fn forward_values(
        &self,
        inputs: &[&[f32]],
        mode: Mode,
        dropout_seed: u64,
    ) -> Result<ForwardCache<T>> {
        let s = &self.spec;
        let c = &self.chain;
        let b = inputs.len();
        if b == 0 {
            return Err(Error::Input("empty batch".into()));
        }
        let in_len = s.input_len();
        if let Some(bad) = inputs.iter().find(|x| x.len() != in_len) {
            return Err(Error::Architecture {
                layer: "input",
                reason: format!("input has {} values, expected {in_len}", bad.len()),
            });
        }
        let input: Vec<T> = inputs.iter().flat_map(|x| x.iter().map(|&v| T::lit(f64::from(v)))).collect();

        let (k1, k2) = (s.conv1_kernel, s.conv2_kernel);
        let p1_area = c.conv1.0 * c.conv1.1;
        let p2_area = c.conv2.0 * c.conv2.1;
        let pool1_len = s.conv1_channels * c.pool1.0 * c.pool1.1;
        let pool2_len = c.flatten;
        let rows1 = s.input_channels * k1 * k1;
        let rows2 = s.conv1_channels * k2 * k2;

        let mut pool1 = vec![T::zero(); b * pool1_len];
        let mut arg1 = vec![0u32; b * pool1_len];
        let mut pool2 = vec![T::zero(); b * pool2_len];
        let mut arg2 = vec![0u32; b * pool2_len];

        let mut cols = vec![T::zero(); rows1.max(rows2) * p1_area.max(p2_area)];
        let mut act = vec![T::zero(); (s.conv1_channels * p1_area).max(s.conv2_channels * p2_area)];
        for i in 0..b {
            let x = &input[i * in_len..(i + 1) * in_len];
            let cols1 = &mut cols[..rows1 * p1_area];
            im2col(x, s.input_channels, s.input_height, s.input_width, k1, cols1);
            let a1 = &mut act[..s.conv1_channels * p1_area];
            gemm(
                Operand::new(self.param(ParamId::Conv1Weight), s.conv1_channels, rows1),
                Operand::new(cols1, rows1, p1_area),
                T::zero(),
                a1,
            );
            bias_relu(a1, self.param(ParamId::Conv1Bias), p1_area);
            maxpool2(
                a1,
                s.conv1_channels,
                c.conv1.0,
                c.conv1.1,
                &mut pool1[i * pool1_len..(i + 1) * pool1_len],
                &mut arg1[i * pool1_len..(i + 1) * pool1_len],
            );

            let cols2 = &mut cols[..rows2 * p2_area];
            im2col(
                &pool1[i * pool1_len..(i + 1) * pool1_len],
                s.conv1_channels,
                c.pool1.0,
                c.pool1.1,
                k2,
                cols2,
            );
            let a2 = &mut act[..s.conv2_channels * p2_area];
            gemm(
                Operand::new(self.param(ParamId::Conv2Weight), s.conv2_channels, rows2),
                Operand::new(cols2, rows2, p2_area),
                T::zero(),
                a2,
            );
            bias_relu(a2, self.param(ParamId::Conv2Bias), p2_area);
            maxpool2(
                a2,
                s.conv2_channels,
                c.conv2.0,
                c.conv2.1,
                &mut pool2[i * pool2_len..(i + 1) * pool2_len],
                &mut arg2[i * pool2_len..(i + 1) * pool2_len],
            );
        }

        let mut drop_rng = rng::seeded(dropout_seed);
        let mut dropout = |values: &[T]| -> (Vec<T>, Option<Vec<T>>) {
            if mode == Mode::Eval || s.dropout_p == 0.0 {
                return (values.to_vec(), None);
            }
            let keep = T::lit(1.0 / (1.0 - s.dropout_p));
            let mask: Vec<T> = values
                .iter()
                .map(|_| if drop_rng.random::<f64>() < s.dropout_p { T::zero() } else { keep })
                .collect();
            (values.iter().zip(&mask).map(|(&v, &m)| v * m).collect(), Some(mask))
        };

        let (flat_in, drop1) = dropout(&pool2);
        let h1 = dense_relu(&flat_in, b, self.param(ParamId::Fc1Weight), self.param(ParamId::Fc1Bias), s.fc1_width, true);
        let h2 = dense_relu(&h1, b, self.param(ParamId::Fc2Weight), self.param(ParamId::Fc2Bias), s.fc2_width, true);
        let (h2_in, drop2) = dropout(&h2);
        let logits = dense_relu(&h2_in, b, self.param(ParamId::Fc3Weight), self.param(ParamId::Fc3Bias), 1, false);

        Ok(ForwardCache {
            generation: self.generation,
            fingerprint: self.spec.fingerprint(),
            batch: b,
            mode,
            input,
            pool1,
            arg1,
            pool2,
            arg2,
            drop1,
            flat_in,
            h1,
            h2,
            drop2,
            h2_in,
            logits,
        })
    }

    /// Gradient of the mean binary cross-entropy over the cached batch.
    pub fn backward(&self, cache: &ForwardCache<T>, labels: &[u8]) -> Result<Gradients<T>> {
        if cache.generation != self.generation || cache.fingerprint != self.spec.fingerprint() {
            return Err(Error::Contract(
                "forward cache was produced by a different model state".into(),
            ));
        }
        if labels.len() != cache.batch {
            return Err(Error::Contract(format!(
                "{} labels for a batch of {}",
                labels.len(),
                cache.batch
            )));
        }
        let s = &self.spec;
        let c = &self.chain;
        let b = cache.batch;
        let scale = T::lit(1.0 / b as f64);
        let mut grads = vec![T::zero(); self.layout.total()];
        let range = |id| self.layout.range(id);

        let dlogit: Vec<T> = cache
            .logits
            .iter()
            .zip(labels)
            .map(|(&z, &y)| (sigmoid(z) - T::lit(f64::from(y))) * scale)
            .collect();

        // fc3
        let (f1, f2, flat) = (s.fc1_width, s.fc2_width, c.flatten);
        dense_weight_grad(&dlogit, b, &cache.h2_in, &mut grads[range(ParamId::Fc3Weight)]);
        add_col_sums(&dlogit, 1, &mut grads[range(ParamId::Fc3Bias)]);
        let mut dh2 = dense_input_grad(&dlogit, b, self.param(ParamId::Fc3Weight), f2);
        apply_mask(&mut dh2, cache.drop2.as_deref());
        relu_mask(&mut dh2, &cache.h2);

        // fc2
        dense_weight_grad(&dh2, b, &cache.h1, &mut grads[range(ParamId::Fc2Weight)]);
        add_col_sums(&dh2, f2, &mut grads[range(ParamId::Fc2Bias)]);
        let mut dh1 = dense_input_grad(&dh2, b, self.param(ParamId::Fc2Weight), f1);
        relu_mask(&mut dh1, &cache.h1);

        // fc1
        dense_weight_grad(&dh1, b, &cache.flat_in, &mut grads[range(ParamId::Fc1Weight)]);
        add_col_sums(&dh1, f1, &mut grads[range(ParamId::Fc1Bias)]);
        let mut dflat = dense_input_grad(&dh1, b, self.param(ParamId::Fc1Weight), flat);
        apply_mask(&mut dflat, cache.drop1.as_deref());

        // conv stack, one example at a time
        let (k1, k2) = (s.conv1_kernel, s.conv2_kernel);
        let p1_area = c.conv1.0 * c.conv1.1;
        let p2_area = c.conv2.0 * c.conv2.1;
        let pool1_len = s.conv1_channels * c.pool1.0 * c.pool1.1;
        let rows1 = s.input_channels * k1 * k1;
        let rows2 = s.conv1_channels * k2 * k2;
        let in_len = s.input_len();

        let (mut gw1, mut gb1) = (vec![T::zero(); s.conv1_channels * rows1], vec![T::zero(); s.conv1_channels]);
        let (mut gw2, mut gb2) = (vec![T::zero(); s.conv2_channels * rows2], vec![T::zero(); s.conv2_channels]);
        let mut cols = vec![T::zero(); rows1.max(rows2) * p1_area.max(p2_area)];
        let mut dact2 = vec![T::zero(); s.conv2_channels * p2_area];
        let mut dcols2 = vec![T::zero(); rows2 * p2_area];
        let mut dpool1 = vec![T::zero(); pool1_len];
        let mut dact1 = vec![T::zero(); s.conv1_channels * p1_area];
        for i in 0..b {
            let pool1_i = &cache.pool1[i * pool1_len..(i + 1) * pool1_len];
            maxpool2_relu_backward(
                &dflat[i * flat..(i + 1) * flat],
                &cache.pool2[i * flat..(i + 1) * flat],
                &cache.arg2[i * flat..(i + 1) * flat],
                &mut dact2,
            );
            let cols2 = &mut cols[..rows2 * p2_area];
            im2col_t(pool1_i, s.conv1_channels, c.pool1.0, c.pool1.1, k2, cols2);
            gemm(Operand::new(&dact2, s.conv2_channels, p2_area), Operand::new(cols2, p2_area, rows2), T::one(), &mut gw2);
            add_row_sums(&dact2, p2_area, &mut gb2);
            gemm(
                Operand::new(self.param(ParamId::Conv2Weight), s.conv2_channels, rows2).t(),
                Operand::new(&dact2, s.conv2_channels, p2_area),
                T::zero(),
                &mut dcols2,
            );
            dpool1.iter_mut().for_each(|v| *v = T::zero());
            col2im(&dcols2, s.conv1_channels, c.pool1.0, c.pool1.1, k2, &mut dpool1);

            maxpool2_relu_backward(&dpool1, pool1_i, &cache.arg1[i * pool1_len..(i + 1) * pool1_len], &mut dact1);
            let cols1 = &mut cols[..rows1 * p1_area];
            im2col_t(&cache.input[i * in_len..(i + 1) * in_len], s.input_channels, s.input_height, s.input_width, k1, cols1);
            gemm(Operand::new(&dact1, s.conv1_channels, p1_area), Operand::new(cols1, p1_area, rows1), T::one(), &mut gw1);
            add_row_sums(&dact1, p1_area, &mut gb1);
        }
        grads[range(ParamId::Conv1Weight)].copy_from_slice(&gw1);
        grads[range(ParamId::Conv1Bias)].copy_from_slice(&gb1);
        grads[range(ParamId::Conv2Weight)].copy_from_slice(&gw2);
        grads[range(ParamId::Conv2Bias)].copy_from_slice(&gb2);

        Ok(Gradients {
            layout: self.layout.clone(),
            values: grads,
        })
    }
}

fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `x W^T + b` for a batch of rows, optionally rectified.
fn dense_relu<T: Real>(x: &[T], batch: usize, w: &[T], bias: &[T], out_width: usize, relu: bool) -> Vec<T> {
    let mut out = dense(x, batch, w, out_width);
    for row in out.chunks_exact_mut(out_width) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v += b;
            if relu {
                *v = v.max(T::zero());
            }
        }
    }
    out
}

fn apply_mask<T: Real>(g: &mut [T], mask: Option<&[T]>) {
    if let Some(m) = mask {
        g.iter_mut().zip(m).for_each(|(g, &m)| *g *= m);
    }
}

fn relu_mask<T: Real>(g: &mut [T], activation: &[T]) {
    g.iter_mut().zip(activation).for_each(|(g, &a)| {
        if a <= T::zero() {
            *g = T::zero();
        }
    });
}

/// Activations kept from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T: Real> {
    generation: u64,
    fingerprint: u64,
    batch: usize,
    mode: Mode,
    input: Vec<T>,
    pool1: Vec<T>,
    arg1: Vec<u32>,
    pool2: Vec<T>,
    arg2: Vec<u32>,
    drop1: Option<Vec<T>>,
    flat_in: Vec<T>,
    h1: Vec<T>,
    h2: Vec<T>,
    drop2: Option<Vec<T>>,
    h2_in: Vec<T>,
    logits: Vec<T>,
}

impl<T: Real> ForwardCache<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Flattened conv-stack output of every example (before dropout).
    pub fn flatten(&self) -> &[T] {
        &self.pool2
    }

    pub fn logits(&self) -> Vec<f64> {
        self.logits.iter().map(|z| z.f64()).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.logits.iter().map(|&z| sigmoid(z).f64()).collect()
    }
}

/// Parameter gradients laid out like the model's parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Real> {
    layout: ParamLayout,
    pub values: Vec<T>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, id: ParamId) -> &[T] {
        &self.values[self.layout.range(id)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_spec() -> NetworkSpec {
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

    fn grid(spec: &NetworkSpec, seed: u64) -> FeatureGrid {
        let mut r = rng::seeded(seed);
        let values = (0..spec.input_len()).map(|_| r.random_range(-1.0f32..1.0)).collect();
        let mut g = FeatureGrid::from_values(spec.input_channels, spec.input_height, spec.input_width, values).unwrap();
        g.norm_state = NormState::Normalized;
        g
    }

    #[test]
    fn zero_model_predicts_half() {
        let spec = NetworkSpec::for_input(40);
        let m = DetectorModel::<f32>::zeros(spec.clone()).unwrap();
        assert_eq!(m.predict(&grid(&spec, 1)).unwrap(), 0.5);
    }

    #[test]
    fn eval_is_deterministic_and_train_uses_seed() {
        let spec = tiny_spec();
        let m = DetectorModel::<f64>::init(spec.clone(), 3).unwrap();
        let g = grid(&spec, 2);
        let a = m.forward(&g, Mode::Eval, 1).unwrap().0;
        let b = m.forward(&g, Mode::Eval, 99).unwrap().0;
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 1.0);
        let t1 = m.forward(&g, Mode::Train, 5).unwrap().0;
        let t2 = m.forward(&g, Mode::Train, 5).unwrap().0;
        assert_eq!(t1, t2);
    }

    #[test]
    fn rejects_wrong_input_shape_and_raw_grids() {
        let spec = tiny_spec();
        let m = DetectorModel::<f32>::init(spec.clone(), 3).unwrap();
        let mut g = FeatureGrid::filled(1, 9, 8, 0.0);
        g.norm_state = NormState::Normalized;
        assert!(matches!(m.predict(&g), Err(Error::Architecture { layer: "input", .. })));
        let raw = FeatureGrid::filled(1, 8, 8, 0.0);
        assert!(matches!(m.predict(&raw), Err(Error::Input(_))));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let spec = tiny_spec();
        let mut m = DetectorModel::<f64>::init(spec.clone(), 3).unwrap();
        let (_, cache) = m.forward(&grid(&spec, 2), Mode::Eval, 0).unwrap();
        assert!(m.backward(&cache, &[1]).is_ok());
        assert!(matches!(m.backward(&cache, &[1, 0]), Err(Error::Contract(_))));
        m.params_mut()[0] += 0.1;
        assert!(matches!(m.backward(&cache, &[1]), Err(Error::Contract(_))));
    }

    #[test]
    fn output_gradient_vanishes_when_prediction_matches_label() {
        // With every weight zero except fc3.bias = 0, p = 0.5; a label of
        // 0.5 is not representable, so compare dL/dz against p - y instead.
        let spec = tiny_spec();
        let m = DetectorModel::<f64>::zeros(spec.clone()).unwrap();
        let (p, cache) = m.forward(&grid(&spec, 4), Mode::Eval, 0).unwrap();
        let g = m.backward(&cache, &[1]).unwrap();
        assert_eq!(g.get(ParamId::Fc3Bias)[0], p - 1.0);
        let g0 = m.backward(&cache, &[0]).unwrap();
        assert_eq!(g0.get(ParamId::Fc3Bias)[0], p);
    }

    #[test]
    fn eval_gradients_ignore_dropout_seed() {
        let spec = tiny_spec();
        let m = DetectorModel::<f64>::init(spec.clone(), 8).unwrap();
        let g = grid(&spec, 6);
        let (_, c1) = m.forward(&g, Mode::Eval, 1).unwrap();
        let (_, c2) = m.forward(&g, Mode::Eval, 2).unwrap();
        assert_eq!(m.backward(&c1, &[1]).unwrap(), m.backward(&c2, &[1]).unwrap());
    }

    #[test]
    fn batch_forward_matches_single() {
        let spec = tiny_spec();
        let m = DetectorModel::<f64>::init(spec.clone(), 8).unwrap();
        let gs: Vec<FeatureGrid> = (0..3).map(|i| grid(&spec, 10 + i)).collect();
        let refs: Vec<&FeatureGrid> = gs.iter().collect();
        let batch = m.predict_batch(&refs).unwrap();
        for (g, p) in gs.iter().zip(batch) {
            assert!((m.predict(g).unwrap() - p).abs() < 1e-15);
        }
    }

    #[test]
    fn cast_roundtrip_preserves_f32_values() {
        let spec = tiny_spec();
        let m = DetectorModel::<f32>::init(spec, 8).unwrap();
        let back: DetectorModel<f32> = m.cast::<f64>().cast();
        assert_eq!(back.params(), m.params());
    }
}
