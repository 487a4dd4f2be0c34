use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Self::Tanh => 1,
            Self::Linear => 0,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Self::Linear),
            1 => Some(Self::Tanh),
            _ => None,
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Self::Tanh),
            "linear" => Ok(Self::Linear),
            other => Err(Error::InvalidArgument(format!("unknown activation {other:?}"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tanh => "tanh",
            Self::Linear => "linear",
        })
    }
}

/// Feedforward topology; the output layer is always linear.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub hidden: Vec<(usize, Activation)>,
    pub output_dim: usize,
}

impl LayerSpec {
    /// `layers` hidden tanh layers of `width` units.
    pub fn uniform(input_dim: usize, layers: usize, width: usize, output_dim: usize) -> Self {
        Self { input_dim, hidden: vec![(width, Activation::Tanh); layers], output_dim }
    }

    /// Six tanh layers of 1024 units.
    pub fn acoustic(input_dim: usize, output_dim: usize) -> Self {
        Self::uniform(input_dim, 6, 1024, output_dim)
    }

    /// Four tanh layers of 512 units with a scalar output.
    pub fn duration(input_dim: usize) -> Self {
        Self::uniform(input_dim, 4, 512, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.iter().any(|&(w, _)| w == 0) {
            return Err(Error::InvalidArgument(format!("layer widths must be positive: {self}")));
        }
        Ok(())
    }

    /// `(fan_in, fan_out, activation)` for every weight layer.
    pub fn layers(&self) -> Vec<(usize, usize, Activation)> {
        let mut out = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input_dim;
        for &(w, act) in &self.hidden {
            out.push((prev, w, act));
            prev = w;
        }
        out.push((prev, self.output_dim, Activation::Linear));
        out
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.input_dim)?;
        for (w, act) in &self.hidden {
            write!(f, " -> {w} {act}")?;
        }
        write!(f, " -> {} linear", self.output_dim)
    }
}
