//! Built-in example channels, their reference values, and the pipelines
//! that reproduce them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, ChannelMimo, MisoEquiv, User};
use crate::gsi::{self, GsiStatus};
use crate::linalg::{Mat, SymMatrix};
use crate::miso::{self, MapKind, MisoError, RegimeMap};
use crate::rates::GenieParam;
use crate::solver::{self, OptKind, OptProblem, SolverError, SolverOptions};

pub const SCENARIO_IDS: std::ops::RangeInclusive<u8> = 1..=8;

const SOURCES: [&str; 8] = [
    include_str!("../data/example1.json"),
    include_str!("../data/example2.json"),
    include_str!("../data/example3.json"),
    include_str!("../data/example4.json"),
    include_str!("../data/example5.json"),
    include_str!("../data/example6.json"),
    include_str!("../data/example7.json"),
    include_str!("../data/example8.json"),
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown example {0}; valid ids are 1..=8")]
    UnknownId(u8),
    #[error("embedded data for example {0} is malformed: {1}")]
    Data(u8, serde_json::Error),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Miso(#[from] MisoError),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

/// Grid definition of a regime map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub kind: MapKind,
    pub p1: f64,
    pub p2: f64,
    pub a: Vec<f64>,
    pub theta_over_pi: Vec<f64>,
}

impl MapSpec {
    pub fn run(&self) -> std::result::Result<RegimeMap, MisoError> {
        let thetas: Vec<f64> = self.theta_over_pi.iter().map(|t| t * PI).collect();
        miso::regime_map(self.kind, self.p1, self.p2, &self.a, &thetas)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioData {
    Channel(ChannelMimo),
    Map(MapSpec),
}

/// Raw JSON of example `id`.
pub fn source(id: u8) -> Result<&'static str> {
    if !SCENARIO_IDS.contains(&id) {
        return Err(ScenarioError::UnknownId(id));
    }
    Ok(SOURCES[id as usize - 1])
}

pub fn load(id: u8) -> Result<ScenarioData> {
    let text = source(id)?;
    if id >= 7 {
        serde_json::from_str(text)
            .map(ScenarioData::Map)
            .map_err(|e| ScenarioError::Data(id, e))
    } else {
        ChannelMimo::from_json(text)
            .map(ScenarioData::Channel)
            .map_err(|e| ScenarioError::Data(id, e))
    }
}

/// The channel of examples 1 to 6.
pub fn channel(id: u8) -> Result<ChannelMimo> {
    match load(id)? {
        ScenarioData::Channel(ch) => Ok(ch),
        ScenarioData::Map(_) => {
            Err(ChannelError::Invalid(format!("example {id} is a regime map")).into())
        }
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "2x2 MIMO IC, sum-rate capacity with generally strong interference",
        2 => "symmetric MISO IC, case III",
        3 => "symmetric MISO IC, case II",
        4 => "MISO ZIC, boundary partly determined",
        5 => "MISO ZIC, full region determined (strong regime)",
        6 => "MISO ZIC, full region determined (intermediate regime)",
        7 => "MISO ZIC regime map, P1 = P2 = 1",
        8 => "symmetric MISO IC regime map, P = 1",
        _ => "unknown",
    }
}

/// One reference-versus-computed line. Angles are in units of π.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    pub reference: f64,
    pub computed: f64,
    pub tolerance: f64,
    pub relative: bool,
    pub pass: bool,
}

impl Comparison {
    pub fn absolute(
        quantity: impl Into<String>,
        reference: f64,
        computed: f64,
        tolerance: f64,
    ) -> Self {
        let pass = (computed - reference).abs() <= tolerance;
        Comparison {
            quantity: quantity.into(),
            reference,
            computed,
            tolerance,
            relative: false,
            pass,
        }
    }

    pub fn relative(
        quantity: impl Into<String>,
        reference: f64,
        computed: f64,
        tolerance: f64,
    ) -> Self {
        let pass = (computed - reference).abs() <= tolerance * reference.abs();
        Comparison {
            quantity: quantity.into(),
            reference,
            computed,
            tolerance,
            relative: true,
            pass,
        }
    }

    /// Boolean reference encoded as 0/1 with zero tolerance.
    pub fn flag(quantity: impl Into<String>, reference: bool, computed: bool) -> Self {
        Comparison::absolute(quantity, reference as u8 as f64, computed as u8 as f64, 0.0)
    }
}

/// A named output file (`name`, contents).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub id: u8,
    pub title: String,
    pub rows: Vec<Comparison>,
    pub artifacts: Vec<Artifact>,
}

impl Reproduction {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Runs example `id` and compares against its reference values.
/// `n_points` sets the resolution of boundary sweeps.
pub fn reproduce(id: u8, opts: &SolverOptions, n_points: usize) -> Result<Reproduction> {
    let data = load(id)?;
    let mut artifacts = vec![Artifact {
        name: format!("example{id}.json"),
        contents: source(id)?.to_string(),
    }];
    let rows = match data {
        ScenarioData::Channel(ch) => match id {
            1 => example1(&ch, opts)?,
            2 | 3 => symmetric_example(id, &ch)?,
            _ => zic_example(id, &ch, opts, n_points, &mut artifacts)?,
        },
        ScenarioData::Map(grid) => {
            let map = grid.run()?;
            artifacts.push(Artifact {
                name: format!("example{id}_regime_map.csv"),
                contents: map.to_csv(),
            });
            Vec::new()
        }
    };
    Ok(Reproduction {
        id,
        title: title(id).to_string(),
        rows,
        artifacts,
    })
}

fn push_sym(
    rows: &mut Vec<Comparison>,
    name: &str,
    reference: [[f64; 2]; 2],
    s: &SymMatrix,
    tol: f64,
) {
    let m = s.to_rows();
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        rows.push(Comparison::absolute(
            format!("{name}[{i}{j}]"),
            reference[i][j],
            m[i][j],
            tol,
        ));
    }
}

fn example1(ch: &ChannelMimo, opts: &SolverOptions) -> Result<Vec<Comparison>> {
    let an = gsi::analyze_sum_rate(ch, opts)?;
    let cert = &an.certificate;
    let mut rows = vec![Comparison::absolute(
        "sum rate (nats)",
        3.2998,
        an.result.objective,
        1e-3,
    )];
    push_sym(
        &mut rows,
        "S1",
        [[8.2319, 0.3636], [0.3636, 1.7681]],
        &an.result.pair.s1,
        2e-3,
    );
    push_sym(
        &mut rows,
        "S2",
        [[7.7370, 4.1843], [4.1843, 2.2630]],
        &an.result.pair.s2,
        2e-3,
    );
    rows.push(Comparison::absolute(
        "lambda1",
        1.0,
        cert.lambdas_or_betas[0],
        1e-3,
    ));
    rows.push(Comparison::absolute(
        "lambda2",
        0.0,
        cert.lambdas_or_betas[1],
        1e-3,
    ));
    rows.push(Comparison::relative(
        "eta1",
        0.0545,
        cert.etas_or_nus[0],
        5e-3,
    ));
    rows.push(Comparison::relative(
        "eta2",
        0.0394,
        cert.etas_or_nus[1],
        5e-3,
    ));
    let w2 = cert.w_or_k[1].scale(100.0);
    let w_ref = [[0.3794, -0.7015], [-0.7015, 1.2972]];
    let w2r = w2.to_rows();
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        rows.push(Comparison::relative(
            format!("100*W2[{i}{j}]"),
            w_ref[i][j],
            w2r[i][j],
            5e-3,
        ));
    }
    if let Some(a2) = an.verdict.genie.get(User::Two) {
        let a_ref = [[0.2802, 0.5985], [0.1146, 0.0789]];
        let a2r = a2.to_rows();
        for i in 0..2 {
            for j in 0..2 {
                rows.push(Comparison::absolute(
                    format!("A2[{i}{j}]"),
                    a_ref[i][j],
                    a2r[i][j],
                    2e-3,
                ));
            }
        }
    }
    rows.push(Comparison::flag(
        "certified",
        true,
        an.verdict.is_certified(),
    ));
    let strong = gsi::strong_classical_condition(ch, User::One, &Default::default())
        .map_err(SolverError::from)?
        && gsi::strong_classical_condition(ch, User::Two, &Default::default())
            .map_err(SolverError::from)?;
    rows.push(Comparison::flag(
        "classical strong interference",
        false,
        strong,
    ));
    Ok(rows)
}

fn symmetric_example(id: u8, ch: &ChannelMimo) -> Result<Vec<Comparison>> {
    let m = ch.to_miso_equiv()?;
    let c = miso::sym_sum_rate(&m)?;
    let mu = &c.multipliers;
    let mut rows = Vec::new();
    if id == 2 {
        rows.push(Comparison::absolute(
            "sum rate (nats)",
            0.6532,
            c.sum_rate,
            1e-3,
        ));
        rows.push(Comparison::absolute(
            "phi_e / pi",
            0.3902,
            c.phi_star / PI,
            2e-3,
        ));
        rows.push(Comparison::relative("gamma", 0.2627, mu.gamma, 5e-3));
        rows.push(Comparison::relative("lambda", 0.3686, mu.lambda, 5e-3));
        rows.push(Comparison::relative("eta", 0.1974, mu.eta, 5e-3));
        rows.push(Comparison::relative("k scale", 0.1768, mu.k, 5e-3));
        rows.push(Comparison::relative(
            "lambda O scale",
            0.1499,
            mu.lambda_o_scale,
            5e-3,
        ));
    } else {
        rows.push(Comparison::absolute(
            "sum rate (nats)",
            1.2724,
            c.sum_rate,
            1e-3,
        ));
        rows.push(Comparison::absolute(
            "phi_s / pi",
            0.4672,
            c.phi_star / PI,
            1e-3,
        ));
        rows.push(Comparison::relative("W scale", 0.0563, mu.k, 5e-3));
        rows.push(Comparison::relative(
            "lambda O scale",
            0.0467,
            mu.lambda_o_scale,
            5e-3,
        ));
    }
    rows.push(Comparison::flag("certified", true, c.certified));
    Ok(rows)
}

fn zic_example(
    id: u8,
    ch: &ChannelMimo,
    opts: &SolverOptions,
    n_points: usize,
    artifacts: &mut Vec<Artifact>,
) -> Result<Vec<Comparison>> {
    let m = ch.to_miso_equiv()?;
    let corners = miso::zic_corners(&m)?;
    let boundary = miso::zic_boundary(&m, n_points)?;
    artifacts.push(Artifact {
        name: format!("example{id}_boundary.csv"),
        contents: boundary.to_csv(),
    });
    let mut rows = Vec::new();
    let pt = |rows: &mut Vec<Comparison>, name: &str, reference: (f64, f64), got: (f64, f64)| {
        rows.push(Comparison::absolute(
            format!("{name}.R1"),
            reference.0,
            got.0,
            2e-3,
        ));
        rows.push(Comparison::absolute(
            format!("{name}.R2"),
            reference.1,
            got.1,
            2e-3,
        ));
    };
    match id {
        4 => {
            rows.push(Comparison::absolute(
                "phi_0 / pi",
                0.3748,
                corners.phi_certified_end / PI,
                2e-3,
            ));
            #[allow(clippy::approx_constant)]
            pt(&mut rows, "C", (0.8474, 0.6931), corners.single_user);
            pt(&mut rows, "B", (0.9442, 0.6724), corners.certified_end);
            for (name, a, corner) in [
                ("C", 0.5046, corners.single_user),
                ("B", 0.4298, corners.certified_end),
            ] {
                let genie = GenieParam {
                    a1: None,
                    a2: Some(Mat::from_rows(&[[a]])),
                };
                let outer = solver::solve(
                    &OptProblem::new(OptKind::OuterBoundary { r: corner.1, genie }, ch.clone()),
                    opts,
                )?;
                rows.push(Comparison::absolute(
                    format!("outer(A={a}) at {name}.R1"),
                    corner.0,
                    outer.objective,
                    1e-3,
                ));
                let poly = miso::zic_outer_bound(&m, a, n_points, opts)?;
                artifacts.push(Artifact {
                    name: format!("example4_outer_A{a}.csv"),
                    contents: poly.to_csv(),
                });
            }
        }
        5 => {
            let sum = miso::zic_sum_rate(&m)?;
            rows.push(Comparison::absolute(
                "sum rate (nats)",
                0.3710,
                sum.sum_rate,
                2e-3,
            ));
            pt(&mut rows, "C1", (0.1544, 0.2027), corners.single_user);
            pt(&mut rows, "B", (0.1844, 0.1866), corners.interval_end);
            pt(&mut rows, "C2", (0.2027, 0.1682), corners.sum_rate);
        }
        _ => {
            let sum = miso::zic_sum_rate(&m)?;
            rows.push(Comparison::absolute(
                "sum rate (nats)",
                0.6675,
                sum.sum_rate,
                2e-3,
            ));
            rows.push(Comparison::absolute(
                "phi_ez / pi",
                0.4959,
                miso::phi_ez(&m)? / PI,
                1e-4,
            ));
            pt(&mut rows, "C1", (0.4615, 0.1682), corners.single_user);
            pt(&mut rows, "C2", (0.5493, 0.1182), corners.interval_end);
        }
    }
    if id != 4 {
        let certified = boundary
            .points
            .iter()
            .filter(|p| p.certified() == Some(true))
            .count();
        rows.push(Comparison::absolute(
            "certified fraction of boundary",
            1.0,
            certified as f64 / boundary.points.len() as f64,
            0.0,
        ));
        let sum = gsi::analyze_sum_rate(ch, opts)?;
        rows.push(Comparison::flag(
            "sum rate certified (general solver)",
            true,
            sum.verdict.status == GsiStatus::Certified,
        ));
    }
    Ok(rows)
}

/// Equivalent MISO parameters used by examples 2 to 6.
pub fn miso_params(id: u8) -> Result<MisoEquiv> {
    Ok(channel(id)?.to_miso_equiv()?)
}
