//! Flat key = value experiment configuration (INI style, `#`/`;` comments).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::basis::BasisKind;
use crate::error::{Result, SolverError};
use crate::models::CollisionModel;
use crate::operators::FluxChoice;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Converge,
    Riemann,
    ApCheck,
}

/// Which closed-form reference to initialize from / compare against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactKind {
    TelegraphSmooth,
    AdvDiffSmooth,
    AdvDiffRiemann,
    RuijgrokWuShock,
    Barenblatt,
}

/// Initial density profile for ap-check runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitKind {
    /// rho0 = offset + sin x.
    OffsetSin { offset: f64 },
    Constant { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Periodic,
    InflowOutflow,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: CollisionModel,
    pub epsilon: f64,
    pub flux: FluxChoice,
    pub order: usize,
    pub basis_kind: BasisKind,
    /// Mesh sizes; converge runs need a strictly doubling list, other kinds
    /// use the single entry.
    pub n_list: Vec<usize>,
    pub x_min: f64,
    pub x_max: f64,
    pub t_final: f64,
    pub bc: BcKind,
    pub exact: Option<ExactKind>,
    /// Riemann data (rho_l, j_l, rho_r, j_r), jump at x = 0.
    pub riemann: Option<(f64, f64, f64, f64)>,
    /// Replace the configured j data by the model's local Maxwellian of rho.
    pub maxwellian_j: bool,
    /// Explicit inflow/outflow ghost currents (default: equilibrium of the
    /// far-field density).
    pub bc_j_l: Option<f64>,
    pub bc_j_r: Option<f64>,
    /// Ruijgrok-Wu states and shift.
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub xi0: f64,
    pub output_dir: PathBuf,
    pub c_hyper: Option<f64>,
    pub c_diff: Option<f64>,
    /// Optional refined self-convergence reference resolution (riemann runs).
    pub reference_n: Option<usize>,
    pub init: InitKind,
    pub record_every: usize,
}

fn parse_f64(raw: &str, key: &str) -> Result<f64> {
    let s = raw.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let val = match body {
        "pi" => std::f64::consts::PI,
        "2pi" => 2.0 * std::f64::consts::PI,
        _ => body
            .parse::<f64>()
            .map_err(|_| SolverError::InvalidConfig(format!("bad number for {key}: {raw}")))?,
    };
    Ok(if neg { -val } else { val })
}

fn parse_usize(raw: &str, key: &str) -> Result<usize> {
    raw.trim()
        .parse::<usize>()
        .map_err(|_| SolverError::InvalidConfig(format!("bad integer for {key}: {raw}")))
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SolverError::Io(format!("{}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(SolverError::InvalidConfig(format!(
                    "line {}: expected key = value, got {line:?}",
                    lineno + 1
                )));
            };
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        Self::from_map(&kv)
    }

    fn from_map(kv: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| kv.get(k).map(|s| s.as_str());
        let require = |k: &str| {
            get(k).ok_or_else(|| SolverError::InvalidConfig(format!("missing key {k}")))
        };

        let kind = match require("experiment")? {
            "converge" => ExperimentKind::Converge,
            "riemann" => ExperimentKind::Riemann,
            "ap-check" => ExperimentKind::ApCheck,
            other => {
                return Err(SolverError::InvalidConfig(format!(
                    "unknown experiment {other} (converge | riemann | ap-check)"
                )))
            }
        };

        let epsilon = parse_f64(require("epsilon")?, "epsilon")?;

        let model = match require("model")? {
            "telegraph" | "heat" => CollisionModel::telegraph(),
            "porous" => CollisionModel::Porous {
                k_coef: get("K").map(|v| parse_f64(v, "K")).transpose()?.unwrap_or(0.5),
                m: get("m").map(|v| parse_f64(v, "m")).transpose()?.unwrap_or(-1.0),
            },
            "advdiff" => CollisionModel::AdvDiff {
                a_coef: get("A").map(|v| parse_f64(v, "A")).transpose()?.unwrap_or(1.0),
            },
            "burgers" => CollisionModel::Burgers {
                c_coef: get("C").map(|v| parse_f64(v, "C")).transpose()?.unwrap_or(0.5),
            },
            other => {
                return Err(SolverError::InvalidConfig(format!(
                    "unknown model {other} (telegraph | porous | advdiff | burgers)"
                )))
            }
        };
        model.validate_with_epsilon(epsilon)?;

        let flux = match require("flux")? {
            "left-right" => FluxChoice::AltLeftRight,
            "right-left" => FluxChoice::AltRightLeft,
            "central" => FluxChoice::Central,
            "porous-split" => FluxChoice::PorousSplit {
                split: get("split").map(|v| parse_f64(v, "split")).transpose()?.unwrap_or(0.0),
            },
            other => {
                return Err(SolverError::InvalidConfig(format!(
                    "unknown flux {other} (left-right | right-left | central | porous-split)"
                )))
            }
        };

        let order = parse_usize(require("order")?, "order")?;
        let basis_kind = match get("basis").unwrap_or(if model.is_degenerate_porous() {
            "nodal"
        } else {
            "modal"
        }) {
            "modal" => BasisKind::ModalLegendre,
            "nodal" => BasisKind::NodalGauss,
            other => {
                return Err(SolverError::InvalidConfig(format!(
                    "unknown basis {other} (modal | nodal)"
                )))
            }
        };

        let x_min = parse_f64(require("x_min")?, "x_min")?;
        let x_max = parse_f64(require("x_max")?, "x_max")?;
        if x_max <= x_min {
            return Err(SolverError::InvalidConfig("x_max must exceed x_min".into()));
        }

        let n_list: Vec<usize> = if let Some(list) = get("n_list") {
            list.split(',')
                .map(|tok| parse_usize(tok, "n_list"))
                .collect::<Result<_>>()?
        } else if let Some(n) = get("n") {
            vec![parse_usize(n, "n")?]
        } else if let Some(dx) = get("dx") {
            let dx = parse_f64(dx, "dx")?;
            if dx <= 0.0 {
                return Err(SolverError::InvalidConfig("dx must be positive".into()));
            }
            vec![((x_max - x_min) / dx).round() as usize]
        } else {
            return Err(SolverError::InvalidConfig("need one of n_list, n, dx".into()));
        };
        if n_list.is_empty() || n_list.contains(&0) {
            return Err(SolverError::InvalidConfig("mesh sizes must be positive".into()));
        }
        if kind == ExperimentKind::Converge {
            for w in n_list.windows(2) {
                if w[1] != 2 * w[0] {
                    return Err(SolverError::InvalidConfig(
                        "converge mesh list must double at each entry".into(),
                    ));
                }
            }
        }

        let t_final = parse_f64(require("t_final")?, "t_final")?;
        if t_final <= 0.0 {
            return Err(SolverError::InvalidConfig("t_final must be positive".into()));
        }

        let bc = match get("bc").unwrap_or("periodic") {
            "periodic" => BcKind::Periodic,
            "inflow-outflow" => BcKind::InflowOutflow,
            other => {
                return Err(SolverError::InvalidConfig(format!(
                    "unknown bc {other} (periodic | inflow-outflow)"
                )))
            }
        };

        let exact = match get("exact") {
            None => None,
            Some("telegraph-smooth") => Some(ExactKind::TelegraphSmooth),
            Some("advdiff-smooth") => Some(ExactKind::AdvDiffSmooth),
            Some("advdiff-riemann") => Some(ExactKind::AdvDiffRiemann),
            Some("rw-shock") => Some(ExactKind::RuijgrokWuShock),
            Some("barenblatt") => Some(ExactKind::Barenblatt),
            Some(other) => {
                return Err(SolverError::InvalidConfig(format!(
                    "unknown exact solution {other}"
                )))
            }
        };

        let riemann = match (get("rho_l"), get("rho_r")) {
            (Some(rl), Some(rr)) => Some((
                parse_f64(rl, "rho_l")?,
                get("j_l").map(|v| parse_f64(v, "j_l")).transpose()?.unwrap_or(0.0),
                parse_f64(rr, "rho_r")?,
                get("j_r").map(|v| parse_f64(v, "j_r")).transpose()?.unwrap_or(0.0),
            )),
            (None, None) => None,
            _ => {
                return Err(SolverError::InvalidConfig(
                    "riemann data needs both rho_l and rho_r".into(),
                ))
            }
        };

        let init = match get("init").unwrap_or("offset-sin") {
            "offset-sin" => InitKind::OffsetSin {
                offset: get("init_offset")
                    .map(|v| parse_f64(v, "init_offset"))
                    .transpose()?
                    .unwrap_or(2.0),
            },
            "constant" => InitKind::Constant {
                value: get("init_value")
                    .map(|v| parse_f64(v, "init_value"))
                    .transpose()?
                    .unwrap_or(1.0),
            },
            other => {
                return Err(SolverError::InvalidConfig(format!("unknown init {other}")))
            }
        };

        Ok(ExperimentConfig {
            kind,
            model,
            epsilon,
            flux,
            order,
            basis_kind,
            n_list,
            x_min,
            x_max,
            t_final,
            bc,
            exact,
            riemann,
            maxwellian_j: get("j_init").map(|v| v == "maxwellian").unwrap_or(false),
            bc_j_l: get("bc_j_l").map(|v| parse_f64(v, "bc_j_l")).transpose()?,
            bc_j_r: get("bc_j_r").map(|v| parse_f64(v, "bc_j_r")).transpose()?,
            rho_minus: get("rho_minus").map(|v| parse_f64(v, "rho_minus")).transpose()?.unwrap_or(1.0),
            rho_plus: get("rho_plus").map(|v| parse_f64(v, "rho_plus")).transpose()?.unwrap_or(2.0),
            xi0: get("xi0").map(|v| parse_f64(v, "xi0")).transpose()?.unwrap_or(0.0),
            output_dir: PathBuf::from(get("output_dir").unwrap_or("out")),
            c_hyper: get("c_hyper").map(|v| parse_f64(v, "c_hyper")).transpose()?,
            c_diff: get("c_diff").map(|v| parse_f64(v, "c_diff")).transpose()?,
            reference_n: get("reference_n").map(|v| parse_usize(v, "reference_n")).transpose()?,
            init,
            record_every: get("record_every")
                .map(|v| parse_usize(v, "record_every"))
                .transpose()?
                .unwrap_or(1)
                .max(1),
        })
    }
}
