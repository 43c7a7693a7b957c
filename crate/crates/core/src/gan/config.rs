use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::autodiff::AdamConfig;
use crate::error::{invalid, Error, Result};
use crate::preprocess::Encoding;

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Cramer,
    Wgan,
}

/// How categorical blocks reach the networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputEncoding {
    /// One-hot blocks; softmax heads in the generator, averaged embeddings in the critic.
    Embedding,
    /// One column per block from the band codec; sigmoid outputs, raw critic input.
    Band,
}

impl InputEncoding {
    pub fn layout_encoding(self) -> Encoding {
        match self {
            InputEncoding::Embedding => Encoding::OneHot,
            InputEncoding::Band => Encoding::Band,
        }
    }
}

/// Named model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    CrganCnet,
    CrganFc,
    WganFc,
    CrganNum,
    WganNum,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::CrganCnet, Variant::CrganFc, Variant::WganFc, Variant::CrganNum, Variant::WganNum];

    pub fn name(self) -> &'static str {
        match self {
            Variant::CrganCnet => "crgan-cnet",
            Variant::CrganFc => "crgan-fc",
            Variant::WganFc => "wgan-fc",
            Variant::CrganNum => "crgan-num",
            Variant::WganNum => "wgan-num",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Variant::WganFc | Variant::WganNum => Mode::Wgan,
            _ => Mode::Cramer,
        }
    }

    pub fn encoding(self) -> InputEncoding {
        match self {
            Variant::CrganNum | Variant::WganNum => InputEncoding::Band,
            _ => InputEncoding::Embedding,
        }
    }

    pub fn cross_layers(self) -> usize {
        match self {
            Variant::CrganCnet => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| invalid!("unknown variant `{s}`"))
    }
}

/// Architecture and optimization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GanConfig {
    pub noise_dim: usize,
    pub gen_widths: Vec<usize>,
    /// Hidden widths of `h`; the last entry is the linear output size `k`.
    pub h_widths: Vec<usize>,
    pub lambda: f64,
    pub n_critic: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub cross_layers: usize,
    pub leaky_slope: f64,
    pub mode: Mode,
    pub encoding: InputEncoding,
    /// Per-categorical-block embedding sizes; `None` uses `min(ceil(sqrt(levels)), 16)`.
    pub embed_dims: Option<Vec<usize>>,
    pub iterations: usize,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            noise_dim: 12,
            gen_widths: vec![64, 128],
            h_widths: vec![64, 128, 128],
            lambda: 10.0,
            n_critic: 5,
            batch_size: 128,
            adam: AdamConfig::default(),
            cross_layers: 2,
            leaky_slope: 0.2,
            mode: Mode::Cramer,
            encoding: InputEncoding::Embedding,
            embed_dims: None,
            iterations: 5000,
        }
    }
}

impl GanConfig {
    pub fn for_variant(v: Variant) -> Self {
        GanConfig::default().with_variant(v)
    }

    pub fn with_variant(mut self, v: Variant) -> Self {
        self.mode = v.mode();
        self.encoding = v.encoding();
        self.cross_layers = v.cross_layers();
        self
    }

    /// Output dimension of `h`.
    pub fn k(&self) -> usize {
        *self.h_widths.last().unwrap_or(&0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("noise_dim", self.noise_dim),
            ("n_critic", self.n_critic),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(invalid!("{name} must be positive"));
            }
        }
        if self.gen_widths.is_empty() || self.gen_widths.contains(&0) {
            return Err(invalid!("generator widths must be a non-empty list of positive sizes"));
        }
        if self.h_widths.is_empty() || self.h_widths.contains(&0) {
            return Err(invalid!("critic widths must be a non-empty list of positive sizes"));
        }
        if self.lambda.is_nan() || self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(invalid!("lambda must be a finite non-negative number"));
        }
        if self.adam.lr.is_nan() || self.adam.lr <= 0.0 || !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return Err(invalid!("invalid Adam settings"));
        }
        if !self.leaky_slope.is_finite() {
            return Err(invalid!("leaky slope must be finite"));
        }
        if let Some(d) = &self.embed_dims {
            if d.contains(&0) {
                return Err(invalid!("embedding sizes must be positive"));
            }
        }
        Ok(())
    }
}

/// Default embedding size for a block with `levels` levels.
pub fn default_embed_dim(levels: usize) -> usize {
    (libm::ceil(libm::sqrt(levels as f64)) as usize).clamp(1, 16)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_variants() {
        let c = GanConfig::default();
        assert_eq!((c.noise_dim, c.k(), c.n_critic, c.batch_size), (12, 128, 5, 128));
        assert_eq!(c.adam.lr, 1e-4);
        c.validate().unwrap();
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            let c = GanConfig::for_variant(v);
            assert_eq!(c.cross_layers == 2, v == Variant::CrganCnet);
        }
        assert!("gan".parse::<Variant>().is_err());
    }

    #[test]
    fn embed_dims() {
        assert_eq!(default_embed_dim(2), 2);
        assert_eq!(default_embed_dim(3), 2);
        assert_eq!(default_embed_dim(20), 5);
        assert_eq!(default_embed_dim(1000), 16);
    }

    #[test]
    fn validation() {
        let mut c = GanConfig { lambda: 0.0, ..GanConfig::default() };
        c.validate().unwrap();
        c.lambda = -1.0;
        assert!(c.validate().is_err());
        let c = GanConfig { n_critic: 0, ..GanConfig::default() };
        assert!(c.validate().is_err());
    }
}
