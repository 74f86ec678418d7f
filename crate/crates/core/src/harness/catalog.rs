//! Built-in scenarios reproducing the two benchmark studies.

use crate::adaptation::{AdaptVariant, MMode, ProjectionBall};
use crate::controller::{ChannelInit, InputMode};
use crate::ddilc::DdilcParams;
use crate::disturbance::DisturbanceKind;
use crate::reference::Reference;
use crate::solver::SolverConfig;
use crate::systems::{EXAMPLE2_CENTER, EXAMPLE2_RADIUS};

use super::{AilcSection, ControllerKind, ControllerSection, DisturbanceSection, OutputFormat, PlantConfig, RunSection, ScenarioConfig};

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub config: ScenarioConfig,
}

const ITERATIONS: u64 = 200;
const SEED: u64 = 1;

fn run(name: &str) -> RunSection {
    RunSection {
        name: name.into(),
        iterations: ITERATIONS,
        seed: SEED,
        out_dir: None,
        format: OutputFormat::Csv,
        verbose: false,
    }
}

fn example1_ailc(variant: AdaptVariant) -> AilcSection {
    AilcSection {
        variant,
        eta: 1.9,
        input_mode: InputMode::FixedPoint,
        m_mode: MMode::Normalized,
        project_initial: false,
        channels: vec![ChannelInit {
            ball: ProjectionBall {
                center: vec![1.0; 4],
                radius: 0.9,
            },
            theta0: vec![1.0; 4],
        }],
        solver: SolverConfig {
            // input-gain floor over the ball, attained at u = 0
            d0_lower: 0.2,
            epsilon_tol: 1e-10,
            ..SolverConfig::default()
        },
    }
}

fn example2_ailc(variant: AdaptVariant) -> AilcSection {
    AilcSection {
        variant,
        eta: 0.1,
        input_mode: InputMode::FixedPoint,
        m_mode: MMode::Normalized,
        // a zero initial estimate has zero input gain
        project_initial: true,
        channels: EXAMPLE2_CENTER
            .iter()
            .map(|c| ChannelInit {
                ball: ProjectionBall {
                    center: c.to_vec(),
                    radius: EXAMPLE2_RADIUS,
                },
                theta0: vec![0.0; 4],
            })
            .collect(),
        solver: SolverConfig {
            d0_lower: 5.0,
            epsilon_tol: 1e-10,
            ..SolverConfig::default()
        },
    }
}

const BENCHMARK_DESCRIPTIONS: [&str; 6] = [
    "uniform on [-0.01, 0.01]",
    "Gaussian, mean 0, variance 0.01",
    "0.03 w.p. 0.3, -0.01 w.p. 0.7",
    "0.01 sin(k pi t / 50) + 0.006 cos(k pi t / 2)",
    "high-order internal model across iterations",
    "0.01 x - 0.01 sin(pi x)",
];

pub fn builtin_scenarios() -> Vec<CatalogEntry> {
    let mut out = vec![CatalogEntry {
        name: "example1-compare".into(),
        description: "scalar plant, disturbance-free AILC vs DDILC; reference fixed for 10 iterations, then alternating sine/cosine".into(),
        config: ScenarioConfig {
            plant: PlantConfig::Example1 { x0_low: 0.0, x0_high: 0.0 },
            controller: ControllerSection {
                controllers: vec![ControllerKind::Ailc, ControllerKind::Ddilc],
                ailc: Some(example1_ailc(AdaptVariant::DisturbanceFree)),
                ddilc: Some(DdilcParams::default()),
            },
            reference: Reference::example1_compare(),
            disturbance: DisturbanceSection::none(),
            run: run("example1-compare"),
        },
    }];
    for (i, desc) in BENCHMARK_DESCRIPTIONS.iter().enumerate() {
        let row = i as u8 + 1;
        let name = format!("example1-robust-d{row}");
        out.push(CatalogEntry {
            description: format!("scalar plant, robust AILC, alternating sine/square reference, disturbance: {desc}"),
            config: ScenarioConfig {
                plant: PlantConfig::Example1 { x0_low: 0.0, x0_high: 0.01 },
                controller: ControllerSection {
                    controllers: vec![ControllerKind::Ailc],
                    ailc: Some(example1_ailc(AdaptVariant::Robust)),
                    ddilc: None,
                },
                reference: Reference::example1_robust(),
                disturbance: DisturbanceSection {
                    channels: vec![DisturbanceKind::benchmark(row).expect("rows 1..=6 exist")],
                },
                run: run(&name),
            },
            name,
        });
    }
    out.push(CatalogEntry {
        name: "example2-nodist".into(),
        description: "double pendulum (relative degree 2, two channels), disturbance-free AILC".into(),
        config: ScenarioConfig {
            plant: PlantConfig::Example2 { x0_low: 0.0, x0_high: 0.1 },
            controller: ControllerSection {
                controllers: vec![ControllerKind::Ailc],
                ailc: Some(example2_ailc(AdaptVariant::DisturbanceFree)),
                ddilc: None,
            },
            reference: Reference::example2(),
            disturbance: DisturbanceSection::none(),
            run: run("example2-nodist"),
        },
    });
    out.push(CatalogEntry {
        name: "example2-dist".into(),
        description: "double pendulum, robust AILC, small trigonometric disturbances per channel".into(),
        config: ScenarioConfig {
            plant: PlantConfig::Example2 { x0_low: 0.0, x0_high: 0.1 },
            controller: ControllerSection {
                controllers: vec![ControllerKind::Ailc],
                ailc: Some(example2_ailc(AdaptVariant::Robust)),
                ddilc: None,
            },
            reference: Reference::example2(),
            disturbance: DisturbanceSection {
                channels: vec![
                    DisturbanceKind::Example2Channel { channel: 0 },
                    DisturbanceKind::Example2Channel { channel: 1 },
                ],
            },
            run: run("example2-dist"),
        },
    });
    out
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    builtin_scenarios().into_iter().find(|e| e.name == name).map(|e| e.config)
}
