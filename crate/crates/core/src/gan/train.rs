use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use super::config::{GanConfig, InputEncoding, Mode};
use super::loss::{cramer_graph, wgan_graph, LossNodes};
use super::net::{declare, init_params, CriticArch, GeneratorArch};
use crate::autodiff::{adam_step, eval, AdamState, Bindings, Graph, NodeId, Tensor};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::preprocess::{band_decode, band_encode, decode, encode, fit_band, BandCodec, EncodedMatrix, EncodingPlan};
use crate::rng::{self, Rng};

const STREAM_INIT: u64 = 0;
const STREAM_ENCODE: u64 = 1;
const STREAM_TRAIN: u64 = 2;

/// Trained (or freshly initialized) generator and critic.
#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub config: GanConfig,
    pub generator: Vec<Tensor>,
    pub critic: Vec<Tensor>,
    /// Interval codec for band-encoded variants.
    pub band: Option<BandCodec>,
}

impl GanModel {
    /// Randomly initialized model for `plan`.
    pub fn init(cfg: &GanConfig, plan: &EncodingPlan, band: Option<BandCodec>, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let layout = plan.layout_for(cfg.encoding.layout_encoding()).clone();
        let gen = GeneratorArch::new(cfg, layout.clone());
        let critic = CriticArch::new(cfg, layout)?;
        let mut r = rng::seeded(rng::derive(seed, STREAM_INIT));
        let generator = init_params(&gen.specs(), &mut r);
        let critic = init_params(&critic.specs(), &mut r);
        GanModel::check_band(cfg, band.as_ref())?;
        Ok(GanModel { config: cfg.clone(), generator, critic, band })
    }

    fn check_band(cfg: &GanConfig, band: Option<&BandCodec>) -> Result<()> {
        match (cfg.encoding, band) {
            (InputEncoding::Band, None) => Err(invalid!("band-encoded model needs a band codec")),
            (InputEncoding::Embedding, Some(_)) => Err(invalid!("embedding model does not use a band codec")),
            _ => Ok(()),
        }
    }

    pub fn generator_arch(&self, plan: &EncodingPlan) -> GeneratorArch {
        GeneratorArch::new(&self.config, plan.layout_for(self.config.encoding.layout_encoding()).clone())
    }

    pub fn critic_arch(&self, plan: &EncodingPlan) -> Result<CriticArch> {
        CriticArch::new(&self.config, plan.layout_for(self.config.encoding.layout_encoding()).clone())
    }

    /// All tensors with their parameter names, generator first.
    pub fn named_tensors(&self, plan: &EncodingPlan) -> Result<Vec<(String, &Tensor)>> {
        let specs = self.generator_arch(plan).specs().into_iter().chain(self.critic_arch(plan)?.specs());
        Ok(specs.map(|s| s.name).zip(self.generator.iter().chain(&self.critic)).collect())
    }

    /// Rebuilds a model from named tensors, checking names and shapes.
    pub fn from_named(
        cfg: &GanConfig,
        plan: &EncodingPlan,
        band: Option<BandCodec>,
        tensors: Vec<(String, Tensor)>,
    ) -> Result<Self> {
        cfg.validate()?;
        GanModel::check_band(cfg, band.as_ref())?;
        let layout = plan.layout_for(cfg.encoding.layout_encoding()).clone();
        let gen_specs = GeneratorArch::new(cfg, layout.clone()).specs();
        let critic_specs = CriticArch::new(cfg, layout)?.specs();
        if tensors.len() != gen_specs.len() + critic_specs.len() {
            return Err(invalid!(
                "checkpoint has {} tensors, model needs {}",
                tensors.len(),
                gen_specs.len() + critic_specs.len()
            ));
        }
        let mut generator = Vec::new();
        let mut critic = Vec::new();
        for (i, (spec, (name, t))) in gen_specs.iter().chain(&critic_specs).zip(tensors).enumerate() {
            if spec.name != name || (spec.rows, spec.cols) != t.shape() {
                return Err(invalid!(
                    "checkpoint tensor `{name}` {}x{} does not match `{}` {}x{}",
                    t.rows(),
                    t.cols(),
                    spec.name,
                    spec.rows,
                    spec.cols
                ));
            }
            if i < gen_specs.len() {
                generator.push(t);
            } else {
                critic.push(t);
            }
        }
        Ok(GanModel { config: cfg.clone(), generator, critic, band })
    }
}

/// Losses recorded for one training iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterMetrics {
    pub iter: usize,
    /// Generator loss at the generator step.
    pub loss_g: f64,
    /// Critic loss and penalty at the last critic step.
    pub loss_d: f64,
    pub gp: f64,
}

/// Incremental training state: one [`Trainer::step`] is `n_critic` critic
/// updates followed by one generator update.
pub struct Trainer {
    model: GanModel,
    params: Vec<Tensor>,
    n_gen: usize,
    data: Tensor,
    graph: Graph,
    losses: LossNodes,
    grads_d: Vec<NodeId>,
    grads_g: Vec<NodeId>,
    adam_g: AdamState,
    adam_d: AdamState,
    rng: Rng,
    iter: usize,
}

impl Trainer {
    pub fn new(train: &Dataset, cfg: &GanConfig, plan: &EncodingPlan, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if train.is_empty() {
            return Err(invalid!("training data is empty"));
        }
        let enc_seed = rng::derive(seed, STREAM_ENCODE);
        let (data, band) = match cfg.encoding {
            InputEncoding::Embedding => (encode(train, plan, enc_seed)?, None),
            InputEncoding::Band => {
                let codec = fit_band(train, plan)?;
                (band_encode(train, plan, &codec, enc_seed)?, Some(codec))
            }
        };
        let model = GanModel::init(cfg, plan, band, seed)?;
        Trainer::from_model(model, data, plan, seed)
    }

    fn from_model(model: GanModel, data: EncodedMatrix, plan: &EncodingPlan, seed: u64) -> Result<Self> {
        let cfg = model.config.clone();
        let gen = model.generator_arch(plan);
        let critic = model.critic_arch(plan)?;
        let (m, d, nz) = (cfg.batch_size, data.layout.width, cfg.noise_dim);

        let mut g = Graph::new();
        let gen_ids = declare(&mut g, &gen.specs());
        let critic_ids = declare(&mut g, &critic.specs());
        let x = g.data("x", m, d);
        let z = g.data("z", m, nz);
        let eps = g.data("eps", m, 1);
        let y = gen.build(&mut g, &gen_ids, z)?;
        let losses = match cfg.mode {
            Mode::Cramer => {
                let x2 = g.data("x2", m, d);
                let z2 = g.data("z2", m, nz);
                let y2 = gen.build(&mut g, &gen_ids, z2)?;
                let mut h = |g: &mut Graph, v: NodeId| critic.build_h(g, &critic_ids, v);
                cramer_graph(&mut g, &mut h, x, x2, y, y2, eps, cfg.lambda)?
            }
            Mode::Wgan => {
                let mut s = |g: &mut Graph, v: NodeId| critic.build_score(g, &critic_ids, v);
                wgan_graph(&mut g, &mut s, x, y, eps, cfg.lambda)?
            }
        };
        let grads_d = g.grad(losses.loss_d, &critic_ids)?;
        let grads_g = g.grad(losses.loss_g, &gen_ids)?;

        let n_gen = model.generator.len();
        let params: Vec<Tensor> = model.generator.iter().chain(&model.critic).cloned().collect();
        Ok(Trainer {
            adam_g: AdamState::new(&params[..n_gen]),
            adam_d: AdamState::new(&params[n_gen..]),
            model,
            params,
            n_gen,
            data: data.values,
            graph: g,
            losses,
            grads_d,
            grads_g,
            rng: rng::seeded(rng::derive(seed, STREAM_TRAIN)),
            iter: 0,
        })
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.iter
    }

    fn real_batch(&mut self) -> Tensor {
        let m = self.model.config.batch_size;
        let idx: Vec<usize> = (0..m).map(|_| self.rng.random_range(0..self.data.rows())).collect();
        self.data.select_rows(&idx)
    }

    fn uniform(&mut self, rows: usize, cols: usize) -> Tensor {
        Tensor::from_fn(rows, cols, |_, _| self.rng.random::<f64>())
    }

    /// Data bindings in declaration order: x, z, eps, then x2, z2 for Cramér.
    fn draw(&mut self, with_eps: bool) -> Vec<Tensor> {
        let (m, nz) = (self.model.config.batch_size, self.model.config.noise_dim);
        let cramer = self.model.config.mode == Mode::Cramer;
        let x = self.real_batch();
        let x2 = cramer.then(|| self.real_batch());
        let z = self.uniform(m, nz);
        let z2 = cramer.then(|| self.uniform(m, nz));
        let eps = if with_eps { self.uniform(m, 1) } else { Tensor::zeros(m, 1) };
        let mut out = alloc::vec![x, z, eps];
        out.extend(x2);
        out.extend(z2);
        out
    }

    fn run(&self, data: &[Tensor], outputs: &[NodeId]) -> Result<Vec<Tensor>> {
        eval(&self.graph, &Bindings::new(&self.params, data), outputs).map_err(|e| match e {
            Error::NonFinite { .. } => Error::Divergence(self.iter),
            e => e,
        })
    }

    /// Runs one iteration and returns its losses.
    pub fn step(&mut self) -> Result<IterMetrics> {
        let mut outputs = alloc::vec![self.losses.loss_d, self.losses.gp];
        outputs.extend(&self.grads_d);
        let (mut loss_d, mut gp) = (0.0, 0.0);
        for _ in 0..self.model.config.n_critic {
            let data = self.draw(true);
            let mut v = self.run(&data, &outputs)?;
            let grads = v.split_off(2);
            (loss_d, gp) = (v[0].item(), v[1].item());
            let n_gen = self.n_gen;
            adam_step(&mut self.params[n_gen..], &grads, &mut self.adam_d, &self.model.config.adam)
                .map_err(|_| Error::Divergence(self.iter))?;
        }
        let mut outputs = alloc::vec![self.losses.loss_g];
        outputs.extend(&self.grads_g);
        let data = self.draw(false);
        let mut v = self.run(&data, &outputs)?;
        let grads = v.split_off(1);
        let loss_g = v[0].item();
        let n_gen = self.n_gen;
        adam_step(&mut self.params[..n_gen], &grads, &mut self.adam_g, &self.model.config.adam)
            .map_err(|_| Error::Divergence(self.iter))?;
        let metrics = IterMetrics { iter: self.iter, loss_g, loss_d, gp };
        self.iter += 1;
        Ok(metrics)
    }

    /// Snapshot of the current parameters.
    pub fn model(&self) -> GanModel {
        let mut m = self.model.clone();
        m.generator = self.params[..self.n_gen].to_vec();
        m.critic = self.params[self.n_gen..].to_vec();
        m
    }
}

/// Trains for `cfg.iterations` iterations, calling `on_iter` after each one.
pub fn train_with(
    train: &Dataset,
    cfg: &GanConfig,
    plan: &EncodingPlan,
    seed: u64,
    mut on_iter: impl FnMut(&IterMetrics),
) -> Result<(GanModel, Vec<IterMetrics>)> {
    let mut t = Trainer::new(train, cfg, plan, seed)?;
    let mut log = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let m = t.step()?;
        on_iter(&m);
        log.push(m);
    }
    Ok((t.model(), log))
}

/// Trains for `cfg.iterations` iterations.
pub fn train(train: &Dataset, cfg: &GanConfig, plan: &EncodingPlan, seed: u64) -> Result<(GanModel, Vec<IterMetrics>)> {
    train_with(train, cfg, plan, seed, |_| {})
}

/// Generator output for `n` noise rows, before decoding.
pub fn generate_encoded(model: &GanModel, n: usize, plan: &EncodingPlan, seed: u64) -> Result<EncodedMatrix> {
    let gen = model.generator_arch(plan);
    let mut r = rng::seeded(seed);
    let z = Tensor::from_fn(n, gen.noise_dim, |_, _| r.random::<f64>());
    if n == 0 {
        return EncodedMatrix::new(Tensor::zeros(0, gen.layout.width), gen.layout.clone());
    }
    let mut g = Graph::new();
    let ids = declare(&mut g, &gen.specs());
    let zn = g.data("z", n, gen.noise_dim);
    let out = gen.build(&mut g, &ids, zn)?;
    let y = eval(&g, &Bindings::new(&model.generator, core::slice::from_ref(&z)), &[out])?.remove(0);
    EncodedMatrix::new(y, gen.layout.clone())
}

/// Draws `n` synthetic rows and decodes them to the plan's schema.
pub fn generate(model: &GanModel, n: usize, plan: &EncodingPlan, seed: u64) -> Result<Dataset> {
    let m = generate_encoded(model, n, plan, seed)?;
    match &model.band {
        None => decode(&m, plan),
        Some(codec) => band_decode(&m, plan, codec),
    }
}

impl GanModel {
    /// Encodes typed rows in the layout this model consumes.
    pub fn encode(&self, d: &Dataset, plan: &EncodingPlan, seed: u64) -> Result<EncodedMatrix> {
        match &self.band {
            None => encode(d, plan, seed),
            Some(codec) => band_encode(d, plan, codec, seed),
        }
    }
}

/// Rows per evaluation of the critic when embedding large matrices.
const CHUNK: usize = 2048;

/// Critic embedding `h(x)` of encoded rows, shape `(rows, k)`.
pub fn critic_h(model: &GanModel, plan: &EncodingPlan, x: &EncodedMatrix) -> Result<Tensor> {
    let arch = model.critic_arch(plan)?;
    if *x.layout != *arch.layout {
        return Err(invalid!("encoded rows do not use the model's layout"));
    }
    let k = arch.k();
    let mut out = Tensor::zeros(x.n_rows(), k);
    let mut start = 0;
    let mut cached: Option<(usize, Graph, NodeId)> = None;
    while start < x.n_rows() {
        let rows = CHUNK.min(x.n_rows() - start);
        if cached.as_ref().is_none_or(|c| c.0 != rows) {
            let mut g = Graph::new();
            let ids = declare(&mut g, &arch.specs());
            let v = g.data("x", rows, arch.layout.width);
            let h = arch.build_h(&mut g, &ids, v)?;
            cached = Some((rows, g, h));
        }
        let (_, g, h) = cached.as_ref().expect("graph was just built");
        let idx: Vec<usize> = (start..start + rows).collect();
        let chunk = x.values.select_rows(&idx);
        let v = eval(g, &Bindings::new(&model.critic, core::slice::from_ref(&chunk)), &[*h])?.remove(0);
        for i in 0..rows {
            out.row_mut(start + i).copy_from_slice(v.row(i));
        }
        start += rows;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_surrogate;
    use crate::gan::Variant;
    use crate::preprocess::fit_plan;
    use alloc::vec;

    fn tiny(v: Variant) -> GanConfig {
        GanConfig {
            gen_widths: vec![8],
            h_widths: vec![8, 6],
            batch_size: 16,
            n_critic: 2,
            iterations: 3,
            ..GanConfig::for_variant(v)
        }
    }

    #[test]
    fn zero_iterations_returns_initial_model() {
        let d = make_surrogate(100, 1);
        let plan = fit_plan(&d).unwrap();
        let cfg = GanConfig { iterations: 0, ..tiny(Variant::CrganCnet) };
        let (model, log) = train(&d, &cfg, &plan, 4).unwrap();
        assert!(log.is_empty());
        assert_eq!(model, GanModel::init(&cfg, &plan, None, 4).unwrap());
    }

    #[test]
    fn training_is_deterministic_for_every_variant() {
        let d = make_surrogate(100, 1);
        let plan = fit_plan(&d).unwrap();
        for v in Variant::ALL {
            let cfg = tiny(v);
            let (a, la) = train(&d, &cfg, &plan, 9).unwrap();
            let (b, lb) = train(&d, &cfg, &plan, 9).unwrap();
            assert_eq!(a, b);
            assert_eq!(la, lb);
            assert_eq!(la.len(), 3);
            assert!(la.iter().all(|m| m.loss_g.is_finite() && m.gp >= 0.0));
            let (c, _) = train(&d, &cfg, &plan, 10).unwrap();
            assert_ne!(a, c);
            let out = generate(&a, 50, &plan, 2).unwrap();
            assert_eq!(out.n_rows(), 50);
            assert_eq!(out, generate(&a, 50, &plan, 2).unwrap());
        }
    }

    #[test]
    fn critic_embedding_is_chunk_independent() {
        let d = make_surrogate(CHUNK + 10, 1);
        let plan = fit_plan(&d).unwrap();
        let model = GanModel::init(&tiny(Variant::CrganCnet), &plan, None, 0).unwrap();
        let x = model.encode(&d, &plan, 0).unwrap();
        let h = critic_h(&model, &plan, &x).unwrap();
        assert_eq!(h.shape(), (CHUNK + 10, 6));
        let tail = x.values.select_rows(&[CHUNK + 3]);
        let one = EncodedMatrix::new(tail, x.layout.clone()).unwrap();
        let h1 = critic_h(&model, &plan, &one).unwrap();
        assert!(h1.row(0).iter().zip(h.row(CHUNK + 3)).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn generate_zero_rows() {
        let d = make_surrogate(50, 1);
        let plan = fit_plan(&d).unwrap();
        let model = GanModel::init(&tiny(Variant::CrganFc), &plan, None, 0).unwrap();
        assert!(generate(&model, 0, &plan, 0).unwrap().is_empty());
    }

    #[test]
    fn named_tensors_round_trip() {
        let d = make_surrogate(50, 1);
        let plan = fit_plan(&d).unwrap();
        let cfg = tiny(Variant::WganFc);
        let model = GanModel::init(&cfg, &plan, None, 3).unwrap();
        let named: Vec<(String, Tensor)> =
            model.named_tensors(&plan).unwrap().into_iter().map(|(n, t)| (n, t.clone())).collect();
        assert_eq!(GanModel::from_named(&cfg, &plan, None, named.clone()).unwrap(), model);
        let mut bad = named;
        bad.swap(0, 1);
        assert!(GanModel::from_named(&cfg, &plan, None, bad).is_err());
    }

    #[test]
    fn critic_updates_reduce_its_loss_on_a_fixed_generator() {
        let d = make_surrogate(300, 2);
        let plan = fit_plan(&d).unwrap();
        let cfg = GanConfig {
            adam: crate::autodiff::AdamConfig { lr: 1e-3, ..Default::default() },
            n_critic: 20,
            ..tiny(Variant::CrganFc)
        };
        let mut t = Trainer::new(&d, &cfg, &plan, 1).unwrap();
        let first = t.step().unwrap();
        let mut last = first;
        for _ in 0..5 {
            last = t.step().unwrap();
        }
        assert!(last.loss_d < first.loss_d, "{} -> {}", first.loss_d, last.loss_d);
    }
}
