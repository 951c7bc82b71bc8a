//! TOML run configuration. Every violation is collected before failing.

use crate::eos::Eos;
use crate::error::{Error, Result};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EosConfig {
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub eps: f64,
    pub pert_amp: f64,
    pub velocity_amp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t_end: f64,
    pub cfl_safety: f64,
    pub dt_min: f64,
    pub renormalize: bool,
    pub output_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub p_max: usize,
    pub report_path: Option<String>,
    /// Spacing of the locally evolved slices used for tau-derivatives; `None`
    /// means a quarter of the CFL step of the slice.
    pub tau_fd_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub eos: EosConfig,
    pub data: DataConfig,
    pub run: RunConfig,
    pub diagnostics: DiagnosticsConfig,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig { n1: 16, n2: 16, n3: 17 },
            eos: EosConfig { gamma: 2.0 },
            data: DataConfig {
                eps: 0.01,
                pert_amp: 0.2,
                velocity_amp: 0.1,
            },
            run: RunConfig {
                t_end: 0.1,
                cfl_safety: 0.4,
                dt_min: 1e-6,
                renormalize: false,
                output_every: 1,
            },
            diagnostics: DiagnosticsConfig {
                p_max: 2,
                report_path: None,
                tau_fd_step: None,
            },
            seed: 0,
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["n1", "n2", "n3"]),
    ("eos", &["gamma"]),
    ("data", &["eps", "pert_amp", "velocity_amp"]),
    ("run", &["t_end", "cfl_safety", "dt_min", "renormalize", "output_every"]),
    ("diagnostics", &["p_max", "report_path", "tau_fd_step"]),
];

struct Reader<'a> {
    errs: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn float(&mut self, t: &Table, sec: &str, key: &str, slot: &mut f64) {
        match t.get(key) {
            None => {}
            Some(Value::Float(x)) => *slot = *x,
            Some(Value::Integer(i)) => *slot = *i as f64,
            Some(_) => self.errs.push(format!("{sec}.{key}: expected a number")),
        }
    }

    fn uint(&mut self, t: &Table, sec: &str, key: &str, slot: &mut usize) {
        match t.get(key) {
            None => {}
            Some(Value::Integer(i)) if *i >= 0 => *slot = *i as usize,
            Some(_) => self.errs.push(format!("{sec}.{key}: expected a non-negative integer")),
        }
    }

    fn boolean(&mut self, t: &Table, sec: &str, key: &str, slot: &mut bool) {
        match t.get(key) {
            None => {}
            Some(Value::Boolean(b)) => *slot = *b,
            Some(_) => self.errs.push(format!("{sec}.{key}: expected true or false")),
        }
    }
}

/// Parses and validates configuration text; missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.message())]))?;
    let mut cfg = SimConfig::default();
    let mut errs = Vec::new();
    let empty = Table::new();

    for (key, value) in &root {
        if key == "seed" {
            match value {
                Value::Integer(i) if *i >= 0 => cfg.seed = *i as u64,
                _ => errs.push("seed: expected a non-negative integer".to_string()),
            }
            continue;
        }
        match SECTIONS.iter().find(|(s, _)| s == key) {
            None => errs.push(format!("unknown key `{key}`")),
            Some((sec, keys)) => match value {
                Value::Table(t) => {
                    for k in t.keys() {
                        if !keys.contains(&k.as_str()) {
                            errs.push(format!("unknown key `{sec}.{k}`"));
                        }
                    }
                }
                _ => errs.push(format!("`{sec}` must be a section")),
            },
        }
    }
    let sec = |name: &str| root.get(name).and_then(Value::as_table).unwrap_or(&empty);
    let mut r = Reader { errs: &mut errs };

    let g = sec("grid");
    r.uint(g, "grid", "n1", &mut cfg.grid.n1);
    r.uint(g, "grid", "n2", &mut cfg.grid.n2);
    r.uint(g, "grid", "n3", &mut cfg.grid.n3);
    r.float(sec("eos"), "eos", "gamma", &mut cfg.eos.gamma);
    let d = sec("data");
    r.float(d, "data", "eps", &mut cfg.data.eps);
    r.float(d, "data", "pert_amp", &mut cfg.data.pert_amp);
    r.float(d, "data", "velocity_amp", &mut cfg.data.velocity_amp);
    let ru = sec("run");
    r.float(ru, "run", "t_end", &mut cfg.run.t_end);
    r.float(ru, "run", "cfl_safety", &mut cfg.run.cfl_safety);
    r.float(ru, "run", "dt_min", &mut cfg.run.dt_min);
    r.boolean(ru, "run", "renormalize", &mut cfg.run.renormalize);
    r.uint(ru, "run", "output_every", &mut cfg.run.output_every);
    let di = sec("diagnostics");
    r.uint(di, "diagnostics", "p_max", &mut cfg.diagnostics.p_max);
    match di.get("report_path") {
        None => {}
        Some(Value::String(s)) => cfg.diagnostics.report_path = Some(s.clone()),
        Some(_) => r.errs.push("diagnostics.report_path: expected a string".into()),
    }
    if di.contains_key("tau_fd_step") {
        let mut x = 0.0;
        r.float(di, "diagnostics", "tau_fd_step", &mut x);
        cfg.diagnostics.tau_fd_step = Some(x);
    }

    validate(&cfg, &mut errs);
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errs))
    }
}

fn validate(c: &SimConfig, errs: &mut Vec<String>) {
    for (name, n) in [("n1", c.grid.n1), ("n2", c.grid.n2), ("n3", c.grid.n3)] {
        if n < 5 {
            errs.push(format!("grid.{name} = {n}: the fourth-order stencils need at least 5 nodes"));
        }
    }
    let gamma = c.eos.gamma;
    let eos = Eos::new(gamma);
    if eos.is_err() {
        errs.push(format!(
            "eos.gamma = {gamma}: must exceed 1; gamma = 1 is excluded because the sound speed would be constant"
        ));
    }
    let n_max = eos.map(|e| e.n_max()).unwrap_or(1.0 / 3.0).min(1.0 / 3.0);
    if !(c.data.eps > 0.0 && c.data.eps < n_max) {
        errs.push(format!(
            "data.eps = {}: the density bound must lie in (0, {n_max:.6}) so that n^(gamma-1) < 1/(gamma+1) and n < 1/3",
            c.data.eps
        ));
    }
    if !(c.data.pert_amp.abs() < 0.5) {
        errs.push(format!("data.pert_amp = {}: |pert_amp| must be below 1/2", c.data.pert_amp));
    }
    if !(c.data.velocity_amp >= 0.0 && c.data.velocity_amp.is_finite()) {
        errs.push(format!("data.velocity_amp = {}: must be finite and non-negative", c.data.velocity_amp));
    }
    if !(c.run.t_end >= 0.0 && c.run.t_end.is_finite()) {
        errs.push(format!("run.t_end = {}: must be finite and non-negative", c.run.t_end));
    }
    if !(c.run.cfl_safety > 0.0 && c.run.cfl_safety <= 1.0) {
        errs.push(format!("run.cfl_safety = {}: must lie in (0, 1]", c.run.cfl_safety));
    }
    if !(c.run.dt_min > 0.0 && c.run.dt_min.is_finite()) {
        errs.push(format!("run.dt_min = {}: must be positive", c.run.dt_min));
    }
    if c.run.output_every == 0 {
        errs.push("run.output_every = 0: must be at least 1".into());
    }
    if c.diagnostics.p_max > 4 {
        errs.push(format!("diagnostics.p_max = {}: at most 4 tau-pairs exist", c.diagnostics.p_max));
    }
    if let Some(s) = c.diagnostics.tau_fd_step {
        if !(s > 0.0 && s.is_finite()) {
            errs.push(format!("diagnostics.tau_fd_step = {s}: must be positive"));
        }
    }
}
