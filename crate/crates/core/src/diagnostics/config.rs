//! Flat `key = value` run configuration with sections
//! `[mesh] [material] [loads] [solver] [optimizer]`.
//!
//! Unknown keys, duplicate keys and out-of-range values are errors. Every key
//! has a default, so an empty file is a valid configuration (the cantilever
//! benchmark).

use crate::error::Error;
use crate::fem::{
    generate_rect_mesh, load_mesh, CgOptions, DirichletData, EdgeTag, LoadCase, Mesh, Side, Split,
    TagSpec, TagWindow,
};
use crate::forward::ForwardOptions;
use crate::material::MaterialLaws;
use crate::optimizer::OptimizerConfig;
use crate::problem::Problem;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {msg}")]
    Read { path: String, msg: String },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}` in [{section}]{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
        suggestion: Option<String>,
    },
    #[error("{}invalid value for `{key}`: {msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        key: String,
        line: Option<usize>,
        msg: String,
    },
}

const SECTIONS: &[&str] = &["mesh", "material", "loads", "solver", "optimizer"];

/// `(section, key, default)`.
const KEYS: &[(&str, &str, &str)] = &[
    ("mesh", "file", ""),
    ("mesh", "nx", "32"),
    ("mesh", "ny", "16"),
    ("mesh", "lx", "1"),
    ("mesh", "ly", "1"),
    ("mesh", "split", "diagonal"),
    ("mesh", "left", "D"),
    ("mesh", "right", "F"),
    ("mesh", "bottom", "F"),
    ("mesh", "top", "F"),
    ("mesh", "window_side", "right"),
    ("mesh", "window_lo", "0.375"),
    ("mesh", "window_hi", "0.625"),
    ("mesh", "window_tag", "N"),
    ("material", "mu0", "0.001"),
    ("material", "mu1", "0.999"),
    ("material", "lambda0", "0.001"),
    ("material", "lambda1", "0.999"),
    ("material", "h0", "0.0001"),
    ("material", "h1", "0.0999"),
    ("material", "d0", "0.01"),
    ("material", "d1", "0.01"),
    ("loads", "body", "0 0"),
    ("loads", "traction", "0 -0.4"),
    ("loads", "dirichlet", "zero"),
    ("loads", "w", "0 0"),
    ("loads", "w_linear", "0 0 0 0"),
    ("solver", "gamma", "10"),
    ("solver", "tol", "1e-10"),
    ("solver", "max_newton", "50"),
    ("solver", "cg_rtol", "1e-10"),
    ("optimizer", "delta", "0.05"),
    ("optimizer", "gamma_schedule", "10 100 1000"),
    ("optimizer", "tau0", "1"),
    ("optimizer", "max_iter", "500"),
    ("optimizer", "grad_tol", "1e-5"),
    ("optimizer", "shrink", "0.5"),
    ("optimizer", "grow", "1.2"),
    ("optimizer", "volume_penalty", "0"),
    ("optimizer", "forward_tol", "1e-12"),
    ("optimizer", "z0", "0.5"),
    ("optimizer", "delta_schedule", "0.08 0.04 0.02"),
    ("optimizer", "fd_directions", "20"),
    ("optimizer", "fd_step", "1e-6"),
    ("optimizer", "seed", "1"),
    ("optimizer", "profile_h_ratio", "8"),
];

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    File(PathBuf),
    Rect {
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        split: Split,
        tags: TagSpec,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadSpec {
    pub body: [f64; 2],
    /// Applied on every Neumann edge.
    pub traction: [f64; 2],
    pub dirichlet: DirichletData,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub laws: MaterialLaws,
    pub loads: LoadSpec,
    /// `γ` for single solves (`forward`, `adjoint`, `check`).
    pub gamma: f64,
    pub forward: ForwardOptions,
    pub optimizer: OptimizerConfig,
    pub z0: f64,
    pub delta_schedule: Vec<f64>,
    pub fd_directions: usize,
    pub fd_step: f64,
    pub seed: u64,
    /// `δ/h` for the Modica–Mortola profile test.
    pub profile_h_ratio: f64,
    effective: Vec<(String, String, String)>,
}

struct Entry {
    value: String,
    line: Option<usize>,
}

fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur.push(sub.min(prev[j + 1] + 1).min(cur[j] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}

fn suggest(section: &str, key: &str) -> Option<String> {
    let best = |filter: &dyn Fn(&&(&str, &str, &str)) -> bool| {
        KEYS.iter()
            .filter(filter)
            .map(|(s, k, _)| (levenshtein(key, k), *s, *k))
            .min()
            .filter(|(d, _, k)| *d <= 2.max(k.len() / 3))
    };
    if let Some((_, _, k)) = best(&|e| e.0 == section) {
        return Some(k.to_string());
    }
    best(&|_| true).map(|(_, s, k)| format!("{k}` under [{s}]`"))
}

struct Values {
    map: BTreeMap<(String, String), Entry>,
}

impl Values {
    fn raw(&self, section: &str, key: &str) -> (&str, Option<usize>) {
        let e = &self.map[&(section.to_string(), key.to_string())];
        (e.value.as_str(), e.line)
    }

    fn invalid(&self, section: &str, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            key: key.to_string(),
            line: self.raw(section, key).1,
            msg: msg.into(),
        }
    }

    fn f64(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        let (v, _) = self.raw(section, key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.invalid(section, key, format!("expected a finite number, found `{v}`")))
    }

    fn positive(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        let x = self.f64(section, key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.invalid(section, key, format!("must be > 0, got {x}")))
        }
    }

    fn usize(&self, section: &str, key: &str) -> Result<usize, ConfigError> {
        let (v, _) = self.raw(section, key);
        v.parse::<usize>()
            .map_err(|_| self.invalid(section, key, format!("expected a nonnegative integer, found `{v}`")))
    }

    fn list(&self, section: &str, key: &str) -> Result<Vec<f64>, ConfigError> {
        let (v, _) = self.raw(section, key);
        v.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.invalid(section, key, format!("bad number `{s}`")))
            })
            .collect()
    }

    fn fixed<const N: usize>(&self, section: &str, key: &str) -> Result<[f64; N], ConfigError> {
        let l = self.list(section, key)?;
        l.clone()
            .try_into()
            .map_err(|_| self.invalid(section, key, format!("expected {N} numbers, found {}", l.len())))
    }

    fn tag(&self, section: &str, key: &str) -> Result<EdgeTag, ConfigError> {
        let (v, _) = self.raw(section, key);
        EdgeTag::from_letter(v).ok_or_else(|| self.invalid(section, key, format!("expected D, N or F, found `{v}`")))
    }
}

fn parse_side(s: &str) -> Option<Option<Side>> {
    match s {
        "left" => Some(Some(Side::Left)),
        "right" => Some(Some(Side::Right)),
        "bottom" => Some(Some(Side::Bottom)),
        "top" => Some(Some(Side::Top)),
        "none" => Some(None),
        _ => None,
    }
}

impl RunConfig {
    pub fn parse_str(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
        let mut map: BTreeMap<(String, String), Entry> = KEYS
            .iter()
            .map(|(s, k, d)| {
                (
                    (s.to_string(), k.to_string()),
                    Entry {
                        value: d.to_string(),
                        line: None,
                    },
                )
            })
            .collect();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            if let Some(name) = l.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax {
                        line,
                        msg: format!("malformed section header `{l}`"),
                    })?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError::Syntax {
                        line,
                        msg: format!("unknown section [{name}]; expected one of {}", SECTIONS.join(", ")),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = l.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, found `{l}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.clone().ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("key `{key}` appears before any section header"),
            })?;
            let slot = map.get_mut(&(sec.clone(), key.to_string())).ok_or_else(|| ConfigError::UnknownKey {
                line,
                section: sec.clone(),
                key: key.to_string(),
                suggestion: suggest(&sec, key),
            })?;
            if let Some(prev) = slot.line {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("duplicate key `{key}` (first set on line {prev})"),
                });
            }
            *slot = Entry {
                value: value.to_string(),
                line: Some(line),
            };
        }
        let v = Values { map };
        RunConfig::from_values(&v, base_dir)
    }

    pub fn parse_file(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse_str(&text, base)
    }

    fn from_values(v: &Values, base_dir: &Path) -> Result<RunConfig, ConfigError> {
        let file = v.raw("mesh", "file").0;
        let mesh = if !file.is_empty() {
            let p = base_dir.join(file);
            if !p.is_file() {
                return Err(v.invalid("mesh", "file", format!("mesh file `{}` does not exist", p.display())));
            }
            MeshSource::File(p)
        } else {
            let nx = v.usize("mesh", "nx")?;
            let ny = v.usize("mesh", "ny")?;
            for (k, n) in [("nx", nx), ("ny", ny)] {
                if n == 0 {
                    return Err(v.invalid("mesh", k, "must be >= 1"));
                }
            }
            let split = match v.raw("mesh", "split").0 {
                "diagonal" => Split::Diagonal,
                "crossed" => Split::Crossed,
                s => return Err(v.invalid("mesh", "split", format!("expected diagonal or crossed, found `{s}`"))),
            };
            let mut windows = Vec::new();
            let side_str = v.raw("mesh", "window_side").0;
            let side = parse_side(side_str).ok_or_else(|| {
                v.invalid("mesh", "window_side", format!("expected left, right, bottom, top or none, found `{side_str}`"))
            })?;
            if let Some(side) = side {
                let lo = v.f64("mesh", "window_lo")?;
                let hi = v.f64("mesh", "window_hi")?;
                if hi < lo {
                    return Err(v.invalid("mesh", "window_hi", "must be >= window_lo"));
                }
                windows.push(TagWindow {
                    side,
                    lo,
                    hi,
                    tag: v.tag("mesh", "window_tag")?,
                });
            }
            MeshSource::Rect {
                nx,
                ny,
                lx: v.positive("mesh", "lx")?,
                ly: v.positive("mesh", "ly")?,
                split,
                tags: TagSpec {
                    left: v.tag("mesh", "left")?,
                    right: v.tag("mesh", "right")?,
                    bottom: v.tag("mesh", "bottom")?,
                    top: v.tag("mesh", "top")?,
                    windows,
                },
            }
        };

        let mut m = [0.0; 8];
        let names = ["mu0", "mu1", "lambda0", "lambda1", "h0", "h1", "d0", "d1"];
        for (i, k) in names.iter().enumerate() {
            m[i] = if i % 2 == 0 { v.positive("material", k)? } else { v.f64("material", k)? };
            if m[i] < 0.0 {
                return Err(v.invalid("material", k, format!("must be >= 0, got {}", m[i])));
            }
        }
        let laws = MaterialLaws::new([m[0], m[1]], [m[2], m[3]], [m[4], m[5]], [m[6], m[7]])
            .map_err(|e| v.invalid("material", "mu0", e.to_string()))?;

        let dirichlet = match v.raw("loads", "dirichlet").0 {
            "zero" => DirichletData::Zero,
            "uniform" => DirichletData::Uniform(v.fixed::<2>("loads", "w")?),
            "linear" => {
                let a = v.fixed::<4>("loads", "w_linear")?;
                DirichletData::Linear {
                    a: [[a[0], a[1]], [a[2], a[3]]],
                    b: v.fixed::<2>("loads", "w")?,
                }
            }
            s => {
                return Err(v.invalid("loads", "dirichlet", format!("expected zero, uniform or linear, found `{s}`")))
            }
        };
        let loads = LoadSpec {
            body: v.fixed::<2>("loads", "body")?,
            traction: v.fixed::<2>("loads", "traction")?,
            dirichlet,
        };

        let cg = CgOptions {
            rtol: v.positive("solver", "cg_rtol")?,
            ..CgOptions::default()
        };
        let forward = ForwardOptions {
            tol: v.positive("solver", "tol")?,
            max_iter: v.usize("solver", "max_newton")?,
            cg,
            ..ForwardOptions::default()
        };
        let gamma_schedule = v.list("optimizer", "gamma_schedule")?;
        let optimizer = OptimizerConfig {
            delta: v.positive("optimizer", "delta")?,
            gamma_schedule,
            tau0: v.positive("optimizer", "tau0")?,
            max_iter: v.usize("optimizer", "max_iter")?,
            grad_tol: v.positive("optimizer", "grad_tol")?,
            shrink: v.positive("optimizer", "shrink")?,
            grow: v.positive("optimizer", "grow")?,
            volume_penalty: v.f64("optimizer", "volume_penalty")?,
            forward: ForwardOptions {
                tol: v.positive("optimizer", "forward_tol")?,
                ..forward
            },
            cg,
            ..OptimizerConfig::default()
        };
        optimizer
            .validate()
            .map_err(|msg| v.invalid("optimizer", "gamma_schedule", msg))?;
        let z0 = v.f64("optimizer", "z0")?;
        let delta_schedule = v.list("optimizer", "delta_schedule")?;
        if delta_schedule.iter().any(|d| !(*d > 0.0)) {
            return Err(v.invalid("optimizer", "delta_schedule", "values must be > 0"));
        }
        let seed = v.usize("optimizer", "seed")? as u64;

        let effective = KEYS
            .iter()
            .map(|(s, k, _)| (s.to_string(), k.to_string(), v.raw(s, k).0.to_string()))
            .collect();
        Ok(RunConfig {
            mesh,
            laws,
            loads,
            gamma: v.positive("solver", "gamma")?,
            forward,
            optimizer,
            z0,
            delta_schedule,
            fd_directions: v.usize("optimizer", "fd_directions")?,
            fd_step: v.positive("optimizer", "fd_step")?,
            seed,
            profile_h_ratio: v.positive("optimizer", "profile_h_ratio")?,
            effective,
        })
    }

    /// All keys with the values in effect, in config-file syntax.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (s, k, val) in &self.effective {
            if s != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                writeln!(out, "[{s}]").unwrap();
                current = s;
            }
            writeln!(out, "{k} = {val}").unwrap();
        }
        out
    }

    pub fn build_mesh(&self) -> Result<Mesh, Error> {
        Ok(match &self.mesh {
            MeshSource::File(p) => load_mesh(p)?,
            MeshSource::Rect {
                nx,
                ny,
                lx,
                ly,
                split,
                tags,
            } => generate_rect_mesh(*nx, *ny, *lx, *ly, *split, tags)?,
        })
    }

    pub fn build_problem(&self) -> Result<Problem, Error> {
        let mesh = self.build_mesh()?;
        let case = LoadCase {
            body: crate::fem::BodyForce::Uniform(self.loads.body),
            traction: LoadCase::neumann_traction(&mesh, self.loads.traction),
            dirichlet: self.loads.dirichlet.clone(),
        };
        Problem::new(mesh, self.laws, case)
    }

    pub fn initial_design(&self, problem: &Problem) -> Vec<f64> {
        vec![self.z0; problem.num_nodes()]
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::parse_str("", Path::new(".")).expect("defaults are valid")
    }
}
