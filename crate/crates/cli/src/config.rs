//! Flat key-value configuration: `section.key = value [value ...]` lines,
//! `#` comments, strict unknown-key rejection. Every key has a documented
//! default, so the empty file is a valid manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use legbench_core::control::{AtjGains, RefModelParams, SmcGains, TjGains};
use legbench_core::leg::IkBranch;
use legbench_core::sim::ControllerKind;
use legbench_core::{LegModel, SimConfig, SwingPath, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("key `{key}`: {reason}")]
    Range { key: String, reason: String },
}

/// Fully-resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub model: LegModel,
    pub path: SwingPath,
    pub branch: IkBranch,
    pub smc: SmcGains<f64>,
    pub tj: TjGains<f64>,
    pub atj: AtjGains<f64>,
    pub ref_model: RefModelParams<f64>,
    pub sim: SimConfig,
    /// Controllers `run` executes, in report order.
    pub controllers: Vec<ControllerKind>,
    /// Initial foot-position offset for single runs, m.
    pub deviation: Vec3,
    /// Controller-model mass/inertia error for single runs, percent.
    pub uncertainty_pct: f64,
    /// Grid for `sweep --kind uncertainty`, percent.
    pub sweep_pcts: Vec<f64>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            model: LegModel::default(),
            path: SwingPath::default(),
            branch: IkBranch::KneeDown,
            smc: SmcGains::default(),
            tj: TjGains::default(),
            atj: AtjGains::default(),
            ref_model: RefModelParams::default(),
            sim: SimConfig::default(),
            controllers: vec![ControllerKind::Atj, ControllerKind::Smc, ControllerKind::Tj],
            deviation: Vec3::new(0.020, 0.004, -0.012),
            uncertainty_pct: 0.0,
            sweep_pcts: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
        }
    }
}

struct Raw {
    entries: BTreeMap<String, (usize, Vec<String>)>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw_line.find('#') {
                Some(p) => &raw_line[..p],
                None => raw_line,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("expected `key = value`, got `{stripped}`"),
                });
            };
            let key = key.trim().to_string();
            let values: Vec<String> = value.split_whitespace().map(str::to_string).collect();
            if key.is_empty() || values.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    message: "empty key or value".into(),
                });
            }
            if entries.insert(key.clone(), (line, values)).is_some() {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, Vec<String>)> {
        self.entries.remove(key)
    }

    fn scalar(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => {
                if v.len() != 1 {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("`{key}` expects one number, got {}", v.len()),
                    });
                }
                parse_num(&v[0], key, line)
            }
        }
    }

    fn vec3(&mut self, key: &str, default: Vec3) -> Result<Vec3, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => {
                if v.len() != 3 {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("`{key}` expects three numbers, got {}", v.len()),
                    });
                }
                Ok(Vec3::new(
                    parse_num(&v[0], key, line)?,
                    parse_num(&v[1], key, line)?,
                    parse_num(&v[2], key, line)?,
                ))
            }
        }
    }

    fn integer(&mut self, key: &str, default: u32) -> Result<u32, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => {
                if v.len() != 1 {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("`{key}` expects one integer, got {}", v.len()),
                    });
                }
                v[0].parse().map_err(|_| ConfigError::Parse {
                    line,
                    message: format!("`{key}`: `{}` is not an integer", v[0]),
                })
            }
        }
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some((line, v)) => v.iter().map(|s| parse_num(s, key, line)).collect(),
        }
    }
}

fn parse_num(s: &str, key: &str, line: usize) -> Result<f64, ConfigError> {
    s.parse().map_err(|_| ConfigError::Parse {
        line,
        message: format!("`{key}`: `{s}` is not a number"),
    })
}

pub fn parse_str(text: &str) -> Result<Manifest, ConfigError> {
    let mut raw = Raw::parse(text)?;
    let d = Manifest::default();

    let mut model = d.model;
    model.geom.l1 = raw.scalar("leg.l1", model.geom.l1)?;
    model.geom.l2 = raw.scalar("leg.l2", model.geom.l2)?;
    model.geom.l3 = raw.scalar("leg.l3", model.geom.l3)?;
    model.geom.lc1 = raw.scalar("leg.lc1", model.geom.lc1)?;
    model.geom.lc2 = raw.scalar("leg.lc2", model.geom.lc2)?;
    model.geom.lc3 = raw.scalar("leg.lc3", model.geom.lc3)?;
    model.inertial.m1 = raw.scalar("leg.m1", model.inertial.m1)?;
    model.inertial.m2 = raw.scalar("leg.m2", model.inertial.m2)?;
    model.inertial.m3 = raw.scalar("leg.m3", model.inertial.m3)?;
    model.inertial.i1 = raw.scalar("leg.i1", model.inertial.i1)?;
    model.inertial.i2 = raw.scalar("leg.i2", model.inertial.i2)?;
    model.inertial.i3 = raw.scalar("leg.i3", model.inertial.i3)?;
    model.inertial.g = raw.scalar("leg.g", model.inertial.g)?;

    let mut path = d.path;
    path.step_length = raw.scalar("path.step_length", path.step_length)?;
    path.step_height = raw.scalar("path.step_height", path.step_height)?;
    path.profile.accel = raw.scalar("path.accel", path.profile.accel)?;
    path.profile.ramp_time = raw.scalar("path.ramp_time", path.profile.ramp_time)?;
    path.profile.duration = raw.scalar("path.duration", path.profile.duration)?;
    // unless given explicitly, the arc is centered so the stride starts at
    // the same x regardless of step length
    let derived_center = Vec3::new(-0.65 + path.step_length / 2.0, 0.12, -0.1);
    path.center = raw.vec3("path.center", derived_center)?;

    let branch = match raw.take("ik.branch") {
        None => d.branch,
        Some((line, v)) => match v.join(" ").as_str() {
            "down" => IkBranch::KneeDown,
            "up" => IkBranch::KneeUp,
            other => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("`ik.branch` must be `down` or `up`, got `{other}`"),
                })
            }
        },
    };

    let smc = SmcGains {
        lambda: raw.vec3("smc.lambda", d.smc.lambda)?,
        eta: raw.vec3("smc.eta", d.smc.eta)?,
        phi: raw.scalar("smc.phi", d.smc.phi)?,
    };
    let tj = TjGains {
        kp: raw.vec3("tj.kp", d.tj.kp)?,
        kd: raw.vec3("tj.kd", d.tj.kd)?,
    };
    let atj = AtjGains {
        gamma_pp: raw.vec3("atj.gamma_pp", d.atj.gamma_pp)?,
        gamma_pi: raw.vec3("atj.gamma_pi", d.atj.gamma_pi)?,
        gamma_dp: raw.vec3("atj.gamma_dp", d.atj.gamma_dp)?,
        gamma_di: raw.vec3("atj.gamma_di", d.atj.gamma_di)?,
        delta_p: raw.scalar("atj.delta_p", d.atj.delta_p)?,
        delta_d: raw.scalar("atj.delta_d", d.atj.delta_d)?,
    };
    let ref_model = RefModelParams {
        omega_n: raw.scalar("atj.omega_n", d.ref_model.omega_n)?,
        zeta: raw.scalar("atj.zeta", d.ref_model.zeta)?,
    };

    let sim = SimConfig {
        dt: raw.scalar("sim.dt", d.sim.dt)?,
        substeps: raw.integer("sim.substeps", d.sim.substeps)?,
        t_end: raw.scalar("sim.t_end", d.sim.t_end)?,
        log_stride: raw.integer("sim.log_stride", d.sim.log_stride)?,
    };

    let controllers = match raw.take("run.controllers") {
        None => d.controllers,
        Some((line, v)) => {
            let mut list = Vec::new();
            for name in &v {
                let kind = match name.as_str() {
                    "atj" => ControllerKind::Atj,
                    "smc" => ControllerKind::Smc,
                    "tj" => ControllerKind::Tj,
                    other => {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!(
                                "`run.controllers`: `{other}` is not one of atj, smc, tj"
                            ),
                        })
                    }
                };
                if list.contains(&kind) {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("`run.controllers`: `{name}` listed twice"),
                    });
                }
                list.push(kind);
            }
            list.sort();
            list
        }
    };

    let deviation = raw.vec3("run.deviation", d.deviation)?;
    let uncertainty_pct = raw.scalar("run.uncertainty_pct", d.uncertainty_pct)?;
    let sweep_pcts = raw.list("sweep.uncertainty_pcts", &d.sweep_pcts)?;

    if let Some((key, (line, _))) = raw.entries.into_iter().next() {
        return Err(ConfigError::UnknownKey { line, key });
    }

    let manifest = Manifest {
        model,
        path,
        branch,
        smc,
        tj,
        atj,
        ref_model,
        sim,
        controllers,
        deviation,
        uncertainty_pct,
        sweep_pcts,
    };
    validate(&manifest)?;
    Ok(manifest)
}

pub fn load(path: &Path) -> Result<Manifest, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&text)
}

fn range_err(e: legbench_core::leg::ParamError) -> ConfigError {
    ConfigError::Range {
        key: e.field.to_string(),
        reason: e.reason.to_string(),
    }
}

fn validate(m: &Manifest) -> Result<(), ConfigError> {
    m.model.validate().map_err(range_err)?;
    m.path.validate().map_err(range_err)?;
    m.smc.validate().map_err(range_err)?;
    m.tj.validate().map_err(range_err)?;
    m.atj.validate().map_err(range_err)?;
    m.ref_model.validate().map_err(range_err)?;
    m.sim.validate().map_err(range_err)?;
    if m.controllers.is_empty() {
        return Err(ConfigError::Range {
            key: "run.controllers".into(),
            reason: "at least one controller must be selected".into(),
        });
    }
    if !(m.uncertainty_pct >= 0.0) {
        return Err(ConfigError::Range {
            key: "run.uncertainty_pct".into(),
            reason: "must be non-negative".into(),
        });
    }
    if m.sweep_pcts.is_empty() || m.sweep_pcts.iter().any(|p| !(*p >= 0.0)) {
        return Err(ConfigError::Range {
            key: "sweep.uncertainty_pcts".into(),
            reason: "must be a non-empty list of non-negative percentages".into(),
        });
    }
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn v3(v: &Vec3) -> String {
    format!("{} {} {}", v[0], v[1], v[2])
}

/// Serialize the resolved manifest; `parse_str(dump(m)) == m`.
pub fn dump(m: &Manifest) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# resolved benchmark configuration");
    let g = &m.model.geom;
    let i = &m.model.inertial;
    for (k, v) in [
        ("leg.l1", g.l1),
        ("leg.l2", g.l2),
        ("leg.l3", g.l3),
        ("leg.lc1", g.lc1),
        ("leg.lc2", g.lc2),
        ("leg.lc3", g.lc3),
        ("leg.m1", i.m1),
        ("leg.m2", i.m2),
        ("leg.m3", i.m3),
        ("leg.i1", i.i1),
        ("leg.i2", i.i2),
        ("leg.i3", i.i3),
        ("leg.g", i.g),
    ] {
        let _ = writeln!(s, "{k} = {}", num(v));
    }
    let _ = writeln!(s, "path.step_length = {}", num(m.path.step_length));
    let _ = writeln!(s, "path.step_height = {}", num(m.path.step_height));
    let _ = writeln!(s, "path.center = {}", v3(&m.path.center));
    let _ = writeln!(s, "path.accel = {}", num(m.path.profile.accel));
    let _ = writeln!(s, "path.ramp_time = {}", num(m.path.profile.ramp_time));
    let _ = writeln!(s, "path.duration = {}", num(m.path.profile.duration));
    let _ = writeln!(
        s,
        "ik.branch = {}",
        match m.branch {
            IkBranch::KneeDown => "down",
            IkBranch::KneeUp => "up",
        }
    );
    let _ = writeln!(s, "smc.lambda = {}", v3(&m.smc.lambda));
    let _ = writeln!(s, "smc.eta = {}", v3(&m.smc.eta));
    let _ = writeln!(s, "smc.phi = {}", num(m.smc.phi));
    let _ = writeln!(s, "tj.kp = {}", v3(&m.tj.kp));
    let _ = writeln!(s, "tj.kd = {}", v3(&m.tj.kd));
    let _ = writeln!(s, "atj.gamma_pp = {}", v3(&m.atj.gamma_pp));
    let _ = writeln!(s, "atj.gamma_pi = {}", v3(&m.atj.gamma_pi));
    let _ = writeln!(s, "atj.gamma_dp = {}", v3(&m.atj.gamma_dp));
    let _ = writeln!(s, "atj.gamma_di = {}", v3(&m.atj.gamma_di));
    let _ = writeln!(s, "atj.delta_p = {}", num(m.atj.delta_p));
    let _ = writeln!(s, "atj.delta_d = {}", num(m.atj.delta_d));
    let _ = writeln!(s, "atj.omega_n = {}", num(m.ref_model.omega_n));
    let _ = writeln!(s, "atj.zeta = {}", num(m.ref_model.zeta));
    let _ = writeln!(s, "sim.dt = {}", num(m.sim.dt));
    let _ = writeln!(s, "sim.substeps = {}", m.sim.substeps);
    let _ = writeln!(s, "sim.t_end = {}", num(m.sim.t_end));
    let _ = writeln!(s, "sim.log_stride = {}", m.sim.log_stride);
    let names: Vec<&str> = m.controllers.iter().map(|c| c.name()).collect();
    let _ = writeln!(s, "run.controllers = {}", names.join(" "));
    let _ = writeln!(s, "run.deviation = {}", v3(&m.deviation));
    let _ = writeln!(s, "run.uncertainty_pct = {}", num(m.uncertainty_pct));
    let pcts: Vec<String> = m.sweep_pcts.iter().map(|p| num(*p)).collect();
    let _ = writeln!(s, "sweep.uncertainty_pcts = {}", pcts.join(" "));
    s
}
