//! JSON run configuration. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use ymflow_core::transport::{Path, Vec3};
use ymflow_core::{BoundaryKind, GridSpec, LieAlgebraSpec};

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Flow,
    VerifyDomination,
    VerifyDiamagnetic,
    VerifyBounds,
    Constants,
    Wilson,
    WasherEnergy,
    WasherFlux,
    WasherRegularize,
}

impl Command {
    pub const ALL: [&'static str; 9] = [
        "flow",
        "verify-domination",
        "verify-diamagnetic",
        "verify-bounds",
        "constants",
        "wilson",
        "washer-energy",
        "washer-flux",
        "washer-regularize",
    ];

    pub fn name(self) -> &'static str {
        Self::ALL[self as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algebra {
    U1,
    Su2,
}

impl Algebra {
    pub fn spec(self) -> LieAlgebraSpec {
        match self {
            Algebra::U1 => LieAlgebraSpec::u1(),
            Algebra::Su2 => LieAlgebraSpec::su2(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Neumann,
    Marini,
}

impl Boundary {
    pub fn kind(self) -> BoundaryKind {
        match self {
            Boundary::Dirichlet => BoundaryKind::Dirichlet,
            Boundary::Neumann => BoundaryKind::Neumann,
            Boundary::Marini => BoundaryKind::Marini,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub extents: [f64; 3],
    pub nodes: [usize; 3],
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { extents: [1.0; 3], nodes: [16; 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    Random { amplitude: f64, max_mode: usize, seed: u64 },
    /// Divergence-free mode with stream function amplitude·sin(πx/L₀)sin(πy/L₁).
    Coulomb { amplitude: f64 },
    Snapshot { path: String },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Random { amplitude: 1.5, max_mode: 2, seed: 7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowVariant {
    Ym,
    Zds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowParams {
    /// Defaults to h²/8.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub snapshot_every: Option<f64>,
    pub snapshot_times: Vec<f64>,
    pub variant: FlowVariant,
    pub write_snapshots: bool,
    /// τ of the smoothing bounds.
    pub tau: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            dt: None,
            t_end: 0.01,
            snapshot_every: None,
            snapshot_times: Vec::new(),
            variant: FlowVariant::Ym,
            write_snapshots: false,
            tau: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SegmentDef {
    Line { from: Vec3, to: Vec3 },
    /// center + cos θ·e1 + sin θ·e2 for θ from theta0 to theta1.
    Arc { center: Vec3, e1: Vec3, e2: Vec3, theta0: f64, theta1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopDef {
    pub segments: Vec<SegmentDef>,
}

impl LoopDef {
    pub fn path(&self) -> Result<Path, ConfigError> {
        let mut it = self.segments.iter().map(|s| match *s {
            SegmentDef::Line { from, to } => Path::line(from, to),
            SegmentDef::Arc { center, e1, e2, theta0, theta1 } => Path::arc(center, e1, e2, theta0, theta1),
        });
        let mut p = match it.next() {
            Some(p) => p,
            None => return bad("loop with no segments"),
        };
        for q in it {
            p = p.concat(q).map_err(|e| ConfigError(format!("loop segments: {}", e)))?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WasherParams {
    pub amplitude: f64,
    pub u_max: f64,
    pub tol: f64,
    pub energy_doublings: usize,
    /// ε ladder for the flux probe.
    pub eps: Vec<f64>,
    pub r_out: f64,
    pub phi_span: f64,
    /// Washer coordinates of grid node (0,0,0).
    pub origin: Vec3,
    /// Cap on |A| at nodes within one spacing of the washer.
    pub cap: Option<f64>,
    /// The two offsets compared after the flow.
    pub regularize_eps: [f64; 2],
    pub inner_s: Vec<f64>,
    pub sandwich_u: Vec<f64>,
    pub sandwich_v: Vec<f64>,
    pub theta0: f64,
}

impl Default for WasherParams {
    fn default() -> Self {
        WasherParams {
            amplitude: 1.0,
            u_max: 40.0,
            tol: 1e-11,
            energy_doublings: 12,
            eps: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            r_out: 1.5,
            phi_span: FRAC_PI_2,
            origin: [-0.25, -0.25, -0.5],
            cap: Some(1e3),
            regularize_eps: [1e-4, 1e-5],
            inner_s: vec![0.5, 0.1, 0.01],
            sandwich_u: vec![0.5, 0.1, 0.01, 0.001],
            sandwich_v: vec![0.5, 1.0, 2.0],
            theta0: FRAC_PI_4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiamagneticParams {
    pub t: f64,
    pub omega_amplitude: f64,
    pub omega_seed: u64,
    pub omega_degree: usize,
}

impl Default for DiamagneticParams {
    fn default() -> Self {
        DiamagneticParams { t: 0.01, omega_amplitude: 1.0, omega_seed: 99, omega_degree: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_algebra")]
    pub algebra: Algebra,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub flow: FlowParams,
    #[serde(default)]
    pub loops: Vec<LoopDef>,
    #[serde(default)]
    pub washer: WasherParams,
    #[serde(default)]
    pub diamagnetic: DiamagneticParams,
    /// Output directory; `--out` overrides it.
    #[serde(default)]
    pub output: Option<String>,
    /// Multiplies every check tolerance; `--tol-scale` overrides it.
    #[serde(default = "one")]
    pub tol_scale: f64,
}

fn default_algebra() -> Algebra {
    Algebra::Su2
}

fn default_boundary() -> Boundary {
    Boundary::Neumann
}

fn one() -> f64 {
    1.0
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {}", e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::new(self.grid.extents, self.grid.nodes).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid()?;
        if !(self.tol_scale > 0.0 && self.tol_scale.is_finite()) {
            return bad(format!("tol_scale = {} must be positive", self.tol_scale));
        }
        let f = &self.flow;
        if !(f.t_end > 0.0) {
            return bad(format!("flow.t_end = {} must be positive", f.t_end));
        }
        if let Some(dt) = f.dt {
            if !(dt > 0.0) {
                return bad(format!("flow.dt = {} must be positive", dt));
            }
        }
        if let Some(e) = f.snapshot_every {
            if !(e > 0.0) {
                return bad(format!("flow.snapshot_every = {} must be positive", e));
            }
        }
        if f.snapshot_times.iter().any(|&t| !(t >= 0.0 && t <= f.t_end)) {
            return bad("flow.snapshot_times must lie in [0, t_end]");
        }
        if !(f.tau > 0.0 && f.tau <= 0.5) {
            return bad(format!("flow.tau = {} outside (0, 1/2]", f.tau));
        }
        match &self.initial {
            InitialData::Random { amplitude, .. } | InitialData::Coulomb { amplitude } if !amplitude.is_finite() => {
                return bad("initial amplitude must be finite");
            }
            _ => {}
        }
        for (i, l) in self.loops.iter().enumerate() {
            l.path().map_err(|e| ConfigError(format!("loop {}: {}", i, e)))?;
        }
        let w = &self.washer;
        if !(w.u_max > 1.0) || !(w.tol > 0.0) || !(w.r_out > 1.0) || !(w.phi_span > 0.0) {
            return bad("washer: need u_max > 1, tol > 0, r_out > 1, phi_span > 0");
        }
        if w.eps.iter().chain(&w.regularize_eps).any(|&e| !(e > 0.0 && e < 1.0)) {
            return bad("washer: offsets ε must lie in (0, 1)");
        }
        if let Some(c) = w.cap {
            if !(c > 0.0) {
                return bad("washer.cap must be positive");
            }
        }
        let d = &self.diamagnetic;
        if !(d.t >= 0.0) || d.omega_degree > 3 {
            return bad("diamagnetic: need t ≥ 0 and degree ≤ 3");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(r#"{"command": "constants"}"#).unwrap();
        assert_eq!(c.command, Command::Constants);
        assert_eq!(c.grid.nodes, [16; 3]);
        assert_eq!(c.boundary, Boundary::Neumann);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(r#"{"command": "flow", "gird": {}}"#).is_err());
        assert!(RunConfig::parse(r#"{"command": "flow", "flow": {"t_end": 1, "dtt": 2}}"#).is_err());
        assert!(RunConfig::parse(r#"{"command": "fly"}"#).is_err());
    }

    #[test]
    fn loops_parse_and_validate() {
        let text = r#"{"command": "wilson", "loops": [{"segments": [
            {"kind": "line", "from": [0.5,0.5,0.5], "to": [0.7,0.5,0.5]},
            {"kind": "line", "from": [0.7,0.5,0.5], "to": [0.5,0.5,0.5]}]}]}"#;
        let c = RunConfig::parse(text).unwrap();
        assert!((c.loops[0].path().unwrap().length() - 0.4).abs() < 1e-12);
        let gap = text.replace("\"from\": [0.7,0.5,0.5]", "\"from\": [0.8,0.5,0.5]");
        assert!(RunConfig::parse(&gap).is_err());
    }

    #[test]
    fn range_errors() {
        assert!(RunConfig::parse(r#"{"command": "flow", "flow": {"t_end": -1}}"#).is_err());
        assert!(RunConfig::parse(r#"{"command": "flow", "grid": {"extents": [1,1,1], "nodes": [1,4,4]}}"#).is_err());
        assert!(RunConfig::parse(r#"{"command": "flow", "flow": {"tau": 0.7}}"#).is_err());
    }

    #[test]
    fn command_names_roundtrip() {
        for name in Command::ALL {
            let c: Command = serde_json::from_str(&format!("\"{}\"", name)).unwrap();
            assert_eq!(c.name(), name);
        }
    }
}
