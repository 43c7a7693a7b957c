use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::config::{default_embed_dim, GanConfig, InputEncoding, Mode};
use crate::autodiff::{Graph, NodeId, Tensor};
use crate::error::{invalid, Result};
use crate::preprocess::{BlockKind, Layout};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform on `±sqrt(6 / (fan_in + fan_out))`.
    Glorot,
    Zero,
    Normal(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub init: Init,
}

impl ParamSpec {
    fn new(name: String, rows: usize, cols: usize, init: Init) -> Self {
        ParamSpec { name, rows, cols, init }
    }
}

pub fn init_params(specs: &[ParamSpec], rng: &mut Rng) -> Vec<Tensor> {
    specs
        .iter()
        .map(|s| match s.init {
            Init::Zero => Tensor::zeros(s.rows, s.cols),
            Init::Glorot => {
                let a = libm::sqrt(6.0 / (s.rows + s.cols) as f64);
                Tensor::from_fn(s.rows, s.cols, |_, _| rng.random_range(-a..=a))
            }
            Init::Normal(sd) => {
                let n = Normal::new(0.0, sd).expect("finite standard deviation");
                Tensor::from_fn(s.rows, s.cols, |_, _| n.sample(rng))
            }
        })
        .collect()
}

/// Hands out parameter nodes in declaration order.
struct Cursor<'a> {
    ids: &'a [NodeId],
    pos: usize,
}

impl Cursor<'_> {
    fn next(&mut self) -> Result<NodeId> {
        let id = self.ids.get(self.pos).copied().ok_or_else(|| invalid!("too few parameter nodes"))?;
        self.pos += 1;
        Ok(id)
    }
}

fn dense_specs(out: &mut Vec<ParamSpec>, prefix: &str, input: usize, widths: &[usize]) -> usize {
    let mut fan_in = input;
    for (i, &w) in widths.iter().enumerate() {
        out.push(ParamSpec::new(format!("{prefix}.dense{i}.w"), fan_in, w, Init::Glorot));
        out.push(ParamSpec::new(format!("{prefix}.dense{i}.b"), 1, w, Init::Zero));
        fan_in = w;
    }
    fan_in
}

fn cross_specs(out: &mut Vec<ParamSpec>, prefix: &str, width: usize, layers: usize) {
    for l in 0..layers {
        out.push(ParamSpec::new(format!("{prefix}.cross{l}.w"), width, 1, Init::Normal(0.01)));
        out.push(ParamSpec::new(format!("{prefix}.cross{l}.b"), 1, width, Init::Zero));
    }
}

/// Dense stack with leaky ReLU on every layer, run beside a cross stack on
/// the same input; returns their column concatenation.
fn trunk(g: &mut Graph, p: &mut Cursor, x: NodeId, hidden: usize, cross: usize, slope: f64) -> Result<NodeId> {
    let mut h = x;
    for _ in 0..hidden {
        let (w, b) = (p.next()?, p.next()?);
        let a = g.affine(h, w, b)?;
        h = g.leaky_relu(a, slope)?;
    }
    if cross == 0 {
        return Ok(h);
    }
    let mut xl = x;
    for _ in 0..cross {
        let (w, b) = (p.next()?, p.next()?);
        xl = g.cross_layer(x, xl, w, b)?;
    }
    g.concat(&[h, xl])
}

/// Generator: noise rows to encoded rows in the given layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorArch {
    pub noise_dim: usize,
    pub widths: Vec<usize>,
    pub cross_layers: usize,
    pub slope: f64,
    pub layout: Arc<Layout>,
}

impl GeneratorArch {
    pub fn new(cfg: &GanConfig, layout: Arc<Layout>) -> Self {
        GeneratorArch {
            noise_dim: cfg.noise_dim,
            widths: cfg.gen_widths.clone(),
            cross_layers: cfg.cross_layers,
            slope: cfg.leaky_slope,
            layout,
        }
    }

    fn trunk_width(&self) -> usize {
        self.widths.last().copied().unwrap_or(self.noise_dim) + if self.cross_layers > 0 { self.noise_dim } else { 0 }
    }

    fn banded(&self) -> bool {
        self.layout.encoding == crate::preprocess::Encoding::Band
    }

    fn n_numeric(&self) -> usize {
        self.layout.numeric_blocks().count()
    }

    pub fn specs(&self) -> Vec<ParamSpec> {
        let mut s = Vec::new();
        dense_specs(&mut s, "gen", self.noise_dim, &self.widths);
        cross_specs(&mut s, "gen", self.noise_dim, self.cross_layers);
        let c = self.trunk_width();
        if self.banded() {
            s.push(ParamSpec::new("gen.head.w".into(), c, self.layout.width, Init::Glorot));
            s.push(ParamSpec::new("gen.head.b".into(), 1, self.layout.width, Init::Zero));
            return s;
        }
        let n_num = self.n_numeric();
        if n_num > 0 {
            s.push(ParamSpec::new("gen.numeric.w".into(), c, n_num, Init::Glorot));
            s.push(ParamSpec::new("gen.numeric.b".into(), 1, n_num, Init::Zero));
        }
        for (i, b) in self.layout.discrete_blocks().enumerate() {
            s.push(ParamSpec::new(format!("gen.block{i}.w"), c, b.width, Init::Glorot));
            s.push(ParamSpec::new(format!("gen.block{i}.b"), 1, b.width, Init::Zero));
        }
        s
    }

    /// Builds the forward pass; `params` are the nodes of [`Self::specs`] in order.
    pub fn build(&self, g: &mut Graph, params: &[NodeId], z: NodeId) -> Result<NodeId> {
        if g.shape(z).1 != self.noise_dim {
            return Err(invalid!("noise has {} columns, expected {}", g.shape(z).1, self.noise_dim));
        }
        let mut p = Cursor { ids: params, pos: 0 };
        let t = trunk(g, &mut p, z, self.widths.len(), self.cross_layers, self.slope)?;
        if self.banded() {
            let (w, b) = (p.next()?, p.next()?);
            let a = g.affine(t, w, b)?;
            return g.sigmoid(a);
        }
        let numeric = if self.n_numeric() > 0 {
            let (w, b) = (p.next()?, p.next()?);
            let a = g.affine(t, w, b)?;
            Some(g.sigmoid(a)?)
        } else {
            None
        };
        let mut parts = Vec::with_capacity(self.layout.blocks.len());
        let mut k = 0;
        for block in &self.layout.blocks {
            if block.kind == BlockKind::Numeric {
                let n = numeric.expect("numeric head exists");
                parts.push(if self.n_numeric() == 1 { n } else { g.slice_cols(n, k, k + 1)? });
                k += 1;
            } else {
                let (w, b) = (p.next()?, p.next()?);
                let a = g.affine(t, w, b)?;
                parts.push(g.row_softmax(a)?);
            }
        }
        if parts.len() == 1 {
            Ok(parts[0])
        } else {
            g.concat(&parts)
        }
    }
}

/// Critic transform `h`, plus a linear score head in WGAN mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticArch {
    pub widths: Vec<usize>,
    pub cross_layers: usize,
    pub slope: f64,
    /// Embedding size per discrete block; `None` feeds raw columns.
    pub embed: Option<Vec<usize>>,
    pub score_head: bool,
    pub layout: Arc<Layout>,
}

impl CriticArch {
    pub fn new(cfg: &GanConfig, layout: Arc<Layout>) -> Result<Self> {
        let embed = match cfg.encoding {
            InputEncoding::Band => None,
            InputEncoding::Embedding => {
                let blocks: Vec<_> = layout.discrete_blocks().collect();
                Some(match &cfg.embed_dims {
                    Some(d) if d.len() != blocks.len() => {
                        return Err(invalid!("{} embedding sizes for {} categorical blocks", d.len(), blocks.len()))
                    }
                    Some(d) => d.clone(),
                    None => blocks.iter().map(|b| default_embed_dim(b.levels)).collect(),
                })
            }
        };
        Ok(CriticArch {
            widths: cfg.h_widths.clone(),
            cross_layers: cfg.cross_layers,
            slope: cfg.leaky_slope,
            embed,
            score_head: cfg.mode == Mode::Wgan,
            layout,
        })
    }

    /// Width of the vector entering the dense and cross stacks.
    pub fn input_width(&self) -> usize {
        match &self.embed {
            None => self.layout.width,
            Some(d) => self.layout.numeric_blocks().count() + d.iter().sum::<usize>(),
        }
    }

    pub fn k(&self) -> usize {
        *self.widths.last().expect("validated widths")
    }

    pub fn specs(&self) -> Vec<ParamSpec> {
        let mut s = Vec::new();
        if let Some(dims) = &self.embed {
            for ((i, b), &e) in self.layout.discrete_blocks().enumerate().zip(dims) {
                s.push(ParamSpec::new(format!("critic.embed{i}"), b.width, e, Init::Glorot));
            }
        }
        let d = self.input_width();
        let hidden = &self.widths[..self.widths.len() - 1];
        let last = dense_specs(&mut s, "critic", d, hidden);
        cross_specs(&mut s, "critic", d, self.cross_layers);
        let c = last + if self.cross_layers > 0 { d } else { 0 };
        s.push(ParamSpec::new("critic.out.w".into(), c, self.k(), Init::Glorot));
        s.push(ParamSpec::new("critic.out.b".into(), 1, self.k(), Init::Zero));
        if self.score_head {
            s.push(ParamSpec::new("critic.score.w".into(), self.k(), 1, Init::Glorot));
            s.push(ParamSpec::new("critic.score.b".into(), 1, 1, Init::Zero));
        }
        s
    }

    /// Maps each categorical block `p` to `pᵀE` and keeps numeric entries.
    fn embed_input(&self, g: &mut Graph, p: &mut Cursor, x: NodeId) -> Result<NodeId> {
        if self.embed.is_none() {
            return Ok(x);
        }
        let mut tables = Vec::new();
        for _ in self.layout.discrete_blocks() {
            tables.push(p.next()?);
        }
        let mut parts = Vec::with_capacity(self.layout.blocks.len());
        let mut t = 0;
        for block in &self.layout.blocks {
            let s = g.slice_cols(x, block.offset, block.offset + block.width)?;
            if block.kind == BlockKind::Numeric {
                parts.push(s);
            } else {
                parts.push(g.matmul(s, tables[t])?);
                t += 1;
            }
        }
        g.concat(&parts)
    }

    /// Builds `h(x)`, shape `(rows, k)`.
    pub fn build_h(&self, g: &mut Graph, params: &[NodeId], x: NodeId) -> Result<NodeId> {
        if g.shape(x).1 != self.layout.width {
            return Err(invalid!("critic input has {} columns, layout has {}", g.shape(x).1, self.layout.width));
        }
        let mut p = Cursor { ids: params, pos: 0 };
        let e = self.embed_input(g, &mut p, x)?;
        let t = trunk(g, &mut p, e, self.widths.len() - 1, self.cross_layers, self.slope)?;
        let (w, b) = (p.next()?, p.next()?);
        g.affine(t, w, b)
    }

    /// Builds the scalar score per row, shape `(rows, 1)`; WGAN mode only.
    pub fn build_score(&self, g: &mut Graph, params: &[NodeId], x: NodeId) -> Result<NodeId> {
        if !self.score_head {
            return Err(invalid!("critic has no score head"));
        }
        let h = self.build_h(g, params, x)?;
        let n = params.len();
        g.affine(h, params[n - 2], params[n - 1])
    }
}

/// Declares parameter leaves for `specs` and returns their nodes.
pub fn declare(g: &mut Graph, specs: &[ParamSpec]) -> Vec<NodeId> {
    specs.iter().map(|s| g.param(&s.name, s.rows, s.cols)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{eval, Bindings};
    use crate::data::make_surrogate;
    use crate::preprocess::{encode, fit_plan};
    use crate::rng;

    fn setup(cfg: &GanConfig) -> (crate::preprocess::EncodingPlan, GeneratorArch, CriticArch) {
        let plan = fit_plan(&make_surrogate(300, 1)).unwrap();
        let layout = plan.layout_for(cfg.encoding.layout_encoding()).clone();
        let gen = GeneratorArch::new(cfg, layout.clone());
        let critic = CriticArch::new(cfg, layout).unwrap();
        (plan, gen, critic)
    }

    fn run_gen(gen: &GeneratorArch, params: &[Tensor], z: &Tensor) -> Tensor {
        let mut g = Graph::new();
        let ids = declare(&mut g, &gen.specs());
        let zn = g.data("z", z.rows(), z.cols());
        let out = gen.build(&mut g, &ids, zn).unwrap();
        eval(&g, &Bindings::new(params, core::slice::from_ref(z)), &[out]).unwrap().remove(0)
    }

    fn run_h(critic: &CriticArch, params: &[Tensor], x: &Tensor) -> Tensor {
        let mut g = Graph::new();
        let ids = declare(&mut g, &critic.specs());
        let xn = g.data("x", x.rows(), x.cols());
        let out = critic.build_h(&mut g, &ids, xn).unwrap();
        eval(&g, &Bindings::new(params, core::slice::from_ref(x)), &[out]).unwrap().remove(0)
    }

    #[test]
    fn generator_blocks_are_distributions() {
        let cfg = GanConfig::default();
        let (plan, gen, _) = setup(&cfg);
        let mut r = rng::seeded(3);
        let params = init_params(&gen.specs(), &mut r);
        let z = Tensor::from_fn(16, 12, |_, _| r.random::<f64>());
        let y = run_gen(&gen, &params, &z);
        assert_eq!(y.cols(), plan.width());
        for i in 0..y.rows() {
            for b in &plan.layout().blocks {
                let s = &y.row(i)[b.offset..b.offset + b.width];
                if b.kind == BlockKind::Numeric {
                    assert!(s[0] > 0.0 && s[0] < 1.0);
                } else {
                    assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
        assert_eq!(run_gen(&gen, &params, &z), y);
    }

    #[test]
    fn zero_generator_is_neutral() {
        let cfg = GanConfig::default();
        let (plan, gen, _) = setup(&cfg);
        let params: Vec<Tensor> = gen.specs().iter().map(|s| Tensor::zeros(s.rows, s.cols)).collect();
        let z = Tensor::filled(2, 12, 0.3);
        let y = run_gen(&gen, &params, &z);
        for b in &plan.layout().blocks {
            for v in &y.row(0)[b.offset..b.offset + b.width] {
                let expect = if b.kind == BlockKind::Numeric { 0.5 } else { 1.0 / b.width as f64 };
                assert!((v - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn band_generator_is_all_sigmoid() {
        let cfg = GanConfig::for_variant(super::super::Variant::CrganNum);
        let (plan, gen, critic) = setup(&cfg);
        assert_eq!(gen.layout.width, plan.schema().len() + 1);
        assert_eq!(critic.input_width(), gen.layout.width);
        let mut r = rng::seeded(1);
        let params = init_params(&gen.specs(), &mut r);
        let y = run_gen(&gen, &params, &Tensor::filled(4, 12, 0.5));
        assert!(y.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn critic_averages_embeddings() {
        let cfg = GanConfig::default();
        let (plan, _, critic) = setup(&cfg);
        assert_eq!(critic.input_width(), 4 + 4 * 5 + 2 + 2 + 2 + 2 + 2);
        let mut r = rng::seeded(5);
        let params = init_params(&critic.specs(), &mut r);
        let d = make_surrogate(6, 2);
        let hard = encode(&d, &plan, 0).unwrap().values;
        let h = run_h(&critic, &params, &hard);
        assert_eq!(h.shape(), (6, 128));
        // The same vector presented as a "soft" input gives the same output.
        let soft = Tensor::new(hard.rows(), hard.cols(), hard.as_slice().to_vec()).unwrap();
        assert_eq!(run_h(&critic, &params, &soft), h);
        // Blending two rows inside one block equals blending their embeddings.
        let first = plan.layout().discrete_blocks().next().copied().unwrap();
        let table = &params[0];
        let mut mix = Tensor::zeros(1, first.width);
        mix.set(0, 0, 0.5);
        mix.set(0, 1, 0.5);
        let mut g = Graph::new();
        let e = g.param("e", table.rows(), table.cols());
        let m = g.data("m", 1, first.width);
        let out = g.matmul(m, e).unwrap();
        let v = eval(&g, &Bindings::new(core::slice::from_ref(table), &[mix]), &[out]).unwrap().remove(0);
        for j in 0..table.cols() {
            assert!((v.get(0, j) - 0.5 * (table.get(0, j) + table.get(1, j))).abs() < 1e-15);
        }
    }

    #[test]
    fn cross_layer_examples() {
        let mut g = Graph::new();
        let x0 = g.data("x0", 1, 2);
        let xl = g.data("xl", 1, 2);
        let w = g.data("w", 2, 1);
        let b = g.data("b", 1, 2);
        let out = g.cross_layer(x0, xl, w, b).unwrap();
        let t = |r: usize, c: usize, v: &[f64]| Tensor::new(r, c, v.to_vec()).unwrap();
        let data = [t(1, 2, &[1.0, 2.0]), t(1, 2, &[3.0, 4.0]), t(2, 1, &[1.0, 0.0]), t(1, 2, &[0.0, 0.0])];
        let v = eval(&g, &Bindings::new(&[], &data), &[out]).unwrap().remove(0);
        assert_eq!(v.as_slice(), &[6.0, 10.0]);
        let data = [t(1, 2, &[1.0, 2.0]), t(1, 2, &[3.0, 4.0]), t(2, 1, &[0.0, 0.0]), t(1, 2, &[0.5, -1.0])];
        let v = eval(&g, &Bindings::new(&[], &data), &[out]).unwrap().remove(0);
        assert_eq!(v.as_slice(), &[3.5, 3.0]);
    }

    #[test]
    fn spec_names_are_unique() {
        for v in super::super::Variant::ALL {
            let cfg = GanConfig::for_variant(v);
            let (_, gen, critic) = setup(&cfg);
            let mut names: Vec<String> = gen.specs().into_iter().chain(critic.specs()).map(|s| s.name).collect();
            let n = names.len();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), n);
        }
    }
}
