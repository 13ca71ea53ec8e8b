//! Parameter sets for the positivity map, the dynamics comparison and the gap curves.
//!
//! All three use `h = ε = ω_c = 1`, the initial state `(σ_z + I)/2` and gap
//! units, so `β` and `t` are quoted as `β·δE_21` and `t·δE_21`.

use polaron_qme::generators::GeneratorKind;
use polaron_qme::model::{BathConfig, ModelConfig, SpectralDensityConfig, SpinBosonConfig};

use crate::config::{Axis, GridConfig, InitialState, OracleConfig, RunConfig, TimeWindow, Units};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
}

fn base(gamma: f64, beta: f64) -> RunConfig {
    RunConfig {
        model: Some(ModelConfig {
            system: None,
            spin_boson: Some(SpinBosonConfig { epsilon: 1.0, h: 1.0 }),
            bath: BathConfig { beta, spectral_density: SpectralDensityConfig::SuperOhmic { gamma, omega_c: 1.0 } },
        }),
        units: Some(Units::Gap),
        initial_state: Some(InitialState::SpinUp),
        time: Some(TimeWindow { t_max: 28.0, steps: 1400 }),
        oracle: Some(OracleConfig { modes: 4, cutoff: 4 }),
        ..Default::default()
    }
}

impl Preset {
    pub fn config(self) -> RunConfig {
        match self {
            Self::Fig1 => RunConfig {
                methods: Some(GeneratorKind::ALL.to_vec()),
                grid: Some(GridConfig {
                    gammas: Axis::Range { start: 0.05, stop: 1.0, count: 20 },
                    betas: Axis::Range { start: 1.0, stop: 7.0, count: 13 },
                }),
                ..base(0.05, 1.4)
            },
            Self::Fig2 => RunConfig {
                methods: Some(GeneratorKind::ALL.to_vec()),
                grid: Some(GridConfig { gammas: Axis::List(vec![0.05, 0.3, 1.0]), betas: Axis::List(vec![5.6, 2.8, 1.4]) }),
                ..base(0.3, 2.8)
            },
            Self::Fig3 => RunConfig {
                methods: Some(vec![GeneratorKind::PtCcqme, GeneratorKind::PtRedfield, GeneratorKind::Redfield]),
                grid: Some(GridConfig {
                    gammas: Axis::Range { start: 0.05, stop: 1.0, count: 20 },
                    betas: Axis::List(vec![1.4, 2.8, 5.6]),
                }),
                ..base(0.3, 5.6)
            },
        }
    }
}
