//! Preset campaigns for the three reference figures.
//!
//! - `fig1`: SISO, fixed transmit SNR, uniform and optimal allocation over a
//!   δ sweep.
//! - `fig2`: MIMO (4×4 at desk scale, 20×20 at full scale), fixed transmit
//!   SNR, all four allocation schemes.
//! - `fig3`: MIMO, fixed received SNR with `E = T`, optimal allocation over
//!   `δ ∈ {0.25, 0.5, 1}`, with the closed-form curves overlaid.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::covariance::{PowerConstraint, Scheme};
use crate::scenario::ScenarioConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Full,
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(FigureId::Fig1),
            "fig2" => Ok(FigureId::Fig2),
            "fig3" => Ok(FigureId::Fig3),
            _ => Err(Error::config("figure", format!("unknown figure `{s}` (fig1, fig2, fig3)"))),
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(Error::config("scale", format!("unknown scale `{s}` (desk, full)"))),
        }
    }
}

impl FigureId {
    pub fn label(&self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
        }
    }
}

/// Campaign configuration behind a figure; outputs go to `output_dir/figN`.
pub fn figure_config(id: FigureId, scale: Scale, output_dir: &Path) -> ScenarioConfig {
    let base = ScenarioConfig::default();
    let realizations = match scale {
        Scale::Desk => 200,
        Scale::Full => 1000,
    };
    let mimo = match scale {
        Scale::Desk => 4,
        Scale::Full => 20,
    };
    let mut cfg = match id {
        FigureId::Fig1 => ScenarioConfig {
            delta_list: vec![0.5, 0.8, 1.0],
            schemes: vec![Scheme::Uniform, Scheme::Optimal],
            k_tx: 1,
            l_rx: 1,
            ..base
        },
        FigureId::Fig2 => ScenarioConfig {
            delta_list: vec![0.5, 0.8, 1.0],
            schemes: Scheme::FIGURE_SET.to_vec(),
            k_tx: mimo,
            l_rx: mimo,
            ..base
        },
        FigureId::Fig3 => {
            let t = base.symbol_period;
            ScenarioConfig {
                delta_list: vec![0.25, 0.5, 1.0],
                schemes: vec![Scheme::Optimal],
                k_tx: mimo,
                l_rx: mimo,
                constraint: PowerConstraint::fixed_rx(t),
                ..base
            }
        }
    };
    cfg.name = id.label().into();
    cfg.realizations = realizations;
    cfg.output_dir = output_dir.join(id.label());
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for id in [FigureId::Fig1, FigureId::Fig2, FigureId::Fig3] {
            for scale in [Scale::Desk, Scale::Full] {
                figure_config(id, scale, Path::new("x")).validate().unwrap();
            }
        }
        let f3 = figure_config(FigureId::Fig3, Scale::Desk, Path::new("x"));
        assert_eq!(f3.k_tx, 4);
        assert!((f3.budget(1.0) - 1.0).abs() < 1e-12);
        assert_eq!(figure_config(FigureId::Fig2, Scale::Full, Path::new("x")).k_tx, 20);
        assert!("fig4".parse::<FigureId>().is_err());
    }
}
