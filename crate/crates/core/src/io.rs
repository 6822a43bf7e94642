//! Point-table CSV/JSON formats and run manifests.
//!
//! CSV schema: header `id,parent_id,birth_time,is_seed,x1,...,xd`, one row
//! per point in id order with the root first. The root's `parent_id` is
//! `-1`; `birth_time` is empty for the discrete models; floats carry 17
//! significant digits so every finite double round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agora::{self, AgoraConfig, AgoraModel, AgoraStats, PointTree};
use crate::branching::{self, BranchingTree, Budget};
use crate::error::{Error, Result};
use crate::profiles::{ProcessParams, SpatialProfile};

pub const FORMAT_VERSION: u32 = 1;

/// Column-oriented point table shared by both model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecords {
    pub format_version: u32,
    pub d: usize,
    pub parent: Vec<Option<usize>>,
    pub birth_time: Vec<Option<f64>>,
    pub is_seed: Vec<bool>,
    /// Flat with stride `d`.
    pub coords: Vec<f64>,
}

impl PointRecords {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn is_continuous(&self) -> bool {
        self.birth_time.first().is_some_and(|t| t.is_some())
    }

    pub fn to_point_tree(&self) -> Result<PointTree> {
        PointTree::from_parts(
            self.d,
            &self.coords,
            &self.parent,
            &self.is_seed,
            AgoraStats::default(),
        )
    }

    /// Rebuilds a continuous tree; parameters are not stored in the table.
    pub fn to_branching_tree(
        &self,
        params: ProcessParams,
        horizon: f64,
        truncation: branching::Truncation,
    ) -> Result<BranchingTree> {
        let tau = self
            .birth_time
            .iter()
            .enumerate()
            .map(|(i, t)| t.ok_or_else(|| Error::Domain(format!("row {i} has no birth time"))))
            .collect::<Result<Vec<_>>>()?;
        BranchingTree::from_parts(
            params,
            horizon,
            truncation,
            self.parent.clone(),
            tau,
            self.coords.clone(),
        )
    }
}

impl From<&BranchingTree> for PointRecords {
    fn from(tree: &BranchingTree) -> Self {
        PointRecords {
            format_version: FORMAT_VERSION,
            d: tree.dim(),
            parent: (0..tree.len()).map(|v| tree.parent(v)).collect(),
            birth_time: tree.taus().iter().map(|&t| Some(t)).collect(),
            is_seed: vec![false; tree.len()],
            coords: tree.coords().to_vec(),
        }
    }
}

impl From<&PointTree> for PointRecords {
    fn from(tree: &PointTree) -> Self {
        PointRecords {
            format_version: FORMAT_VERSION,
            d: tree.dim(),
            parent: (0..tree.len()).map(|v| tree.parent(v)).collect(),
            birth_time: vec![None; tree.len()],
            is_seed: (0..tree.len()).map(|v| tree.is_seed(v)).collect(),
            coords: tree.coords().to_vec(),
        }
    }
}

fn fmt_f64(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("writing to a String");
}

/// Renders the CSV text.
pub fn points_csv(records: &PointRecords) -> String {
    let mut out = String::with_capacity(records.len() * (30 + 24 * records.d));
    out.push_str("id,parent_id,birth_time,is_seed");
    for k in 1..=records.d {
        write!(out, ",x{k}").expect("writing to a String");
    }
    out.push('\n');
    for i in 0..records.len() {
        match records.parent[i] {
            Some(p) => write!(out, "{i},{p},"),
            None => write!(out, "{i},-1,"),
        }
        .expect("writing to a String");
        if let Some(t) = records.birth_time[i] {
            fmt_f64(&mut out, t);
        }
        out.push_str(if records.is_seed[i] { ",1" } else { ",0" });
        for &x in records.point(i) {
            out.push(',');
            fmt_f64(&mut out, x);
        }
        out.push('\n');
    }
    out
}

pub fn write_points_csv(records: &PointRecords, path: &Path) -> Result<()> {
    fs::write(path, points_csv(records)).map_err(|e| Error::io(path, e))
}

/// Parses CSV text; `path` is only used in error messages.
pub fn parse_points_csv(text: &str, path: &Path) -> Result<PointRecords> {
    let schema = |line: usize, msg: String| Error::Schema {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| schema(1, "empty file".into()))?;
    let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if cols.len() < 5 || cols[..4] != ["id", "parent_id", "birth_time", "is_seed"] {
        return Err(schema(1, format!("unexpected header {header:?}")));
    }
    let d = cols.len() - 4;
    for (k, c) in cols[4..].iter().enumerate() {
        if *c != format!("x{}", k + 1) {
            return Err(schema(
                1,
                format!("expected column x{}, found {c:?}", k + 1),
            ));
        }
    }

    let mut rec = PointRecords {
        format_version: FORMAT_VERSION,
        d,
        parent: Vec::new(),
        birth_time: Vec::new(),
        is_seed: Vec::new(),
        coords: Vec::new(),
    };
    for (line, raw) in lines {
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 4 + d {
            return Err(schema(
                line,
                format!("expected {} fields, found {}", 4 + d, fields.len()),
            ));
        }
        let id = rec.len();
        match fields[0].parse::<usize>() {
            Ok(v) if v == id => {}
            _ => {
                return Err(schema(
                    line,
                    format!("expected id {id}, found {:?}", fields[0]),
                ))
            }
        }
        let parent = match fields[1] {
            "-1" if id == 0 => None,
            s => match s.parse::<usize>() {
                Ok(p) if p < id => Some(p),
                _ => return Err(schema(line, format!("invalid parent_id {s:?} for id {id}"))),
            },
        };
        let birth_time = match fields[2] {
            "" => None,
            s => match s.parse::<f64>() {
                Ok(t) if t.is_finite() => Some(t),
                _ => return Err(schema(line, format!("invalid birth_time {s:?}"))),
            },
        };
        if id > 0 && birth_time.is_some() != rec.birth_time[0].is_some() {
            return Err(schema(line, "birth_time present on some rows only".into()));
        }
        let is_seed = match fields[3] {
            "0" => false,
            "1" => true,
            s => return Err(schema(line, format!("invalid is_seed {s:?}"))),
        };
        for (k, s) in fields[4..].iter().enumerate() {
            match s.parse::<f64>() {
                Ok(x) if x.is_finite() => rec.coords.push(x),
                Ok(x) => {
                    return Err(schema(
                        line,
                        format!("non-finite coordinate x{} = {x}", k + 1),
                    ))
                }
                Err(_) => return Err(schema(line, format!("invalid coordinate {s:?}"))),
            }
        }
        rec.parent.push(parent);
        rec.birth_time.push(birth_time);
        rec.is_seed.push(is_seed);
    }
    if rec.is_empty() {
        return Err(schema(2, "no data rows".into()));
    }
    Ok(rec)
}

pub fn read_points_csv(path: &Path) -> Result<PointRecords> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points_csv(&text, path)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunModel {
    #[serde(rename = "ct")]
    ContinuousBranching,
    #[serde(rename = "smooth")]
    Smooth,
    #[serde(rename = "hard")]
    HardThreshold,
}

/// Everything needed to regenerate a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub model: RunModel,
    pub d: usize,
    pub alpha: f64,
    pub rho: f64,
    pub theta: f64,
    pub beta: f64,
    /// Continuous model only.
    pub profile: Option<SpatialProfile>,
    /// Vertex budget (continuous) or number of points after the root (discrete).
    pub n: usize,
    pub max_time: Option<f64>,
    pub r_count: Option<f64>,
    pub max_rejections_per_point: Option<u64>,
    pub seed: u64,
}

impl GenerationSpec {
    /// Continuous model hitting `alpha = d * rho`.
    pub fn continuous(params: &ProcessParams, n: usize, max_time: Option<f64>) -> Self {
        GenerationSpec {
            model: RunModel::ContinuousBranching,
            d: params.d,
            alpha: params.alpha,
            rho: params.rho,
            theta: params.theta,
            beta: params.beta(),
            profile: Some(params.profile),
            n,
            max_time,
            r_count: None,
            max_rejections_per_point: None,
            seed: params.seed,
        }
    }

    pub fn discrete(cfg: &AgoraConfig) -> Self {
        GenerationSpec {
            model: match cfg.model {
                AgoraModel::Smooth => RunModel::Smooth,
                AgoraModel::HardThreshold => RunModel::HardThreshold,
            },
            d: cfg.d,
            alpha: cfg.alpha,
            rho: cfg.alpha / cfg.d as f64,
            theta: cfg.theta,
            beta: 1.0,
            profile: None,
            n: cfg.n_points,
            max_time: None,
            r_count: cfg.r_count,
            max_rejections_per_point: Some(cfg.max_rejections_per_point),
            seed: cfg.seed,
        }
    }

    pub fn process_params(&self) -> Result<ProcessParams> {
        let profile = self
            .profile
            .ok_or_else(|| Error::Domain("continuous model needs a profile".into()))?;
        Ok(ProcessParams::from_rho(self.d, self.rho, profile)?.with_seed(self.seed))
    }

    pub fn agora_config(&self) -> Result<AgoraConfig> {
        let model = match self.model {
            RunModel::Smooth => AgoraModel::Smooth,
            RunModel::HardThreshold => AgoraModel::HardThreshold,
            RunModel::ContinuousBranching => {
                return Err(Error::Domain("not a discrete model".into()))
            }
        };
        let mut cfg = AgoraConfig::new(self.d, self.alpha, self.theta, self.n, model);
        cfg.r_count = self.r_count;
        if let Some(m) = self.max_rejections_per_point {
            cfg.max_rejections_per_point = m;
        }
        cfg.seed = self.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Runs the generator this spec describes.
    pub fn run(&self) -> Result<Generated> {
        match self.model {
            RunModel::ContinuousBranching => {
                let params = self.process_params()?;
                let mut budget = Budget::vertices(self.n);
                budget.max_time = self.max_time;
                let (tree, trace) = branching::generate_tree_seeded(&params, &budget)?;
                Ok(Generated::Continuous(tree, trace))
            }
            _ => Ok(Generated::Discrete(agora::generate_discrete(
                &self.agora_config()?,
            )?)),
        }
    }
}

pub enum Generated {
    Continuous(BranchingTree, branching::GrowthTrace),
    Discrete(PointTree),
}

impl Generated {
    pub fn records(&self) -> PointRecords {
        match self {
            Generated::Continuous(tree, _) => tree.into(),
            Generated::Discrete(tree) => tree.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// File name relative to the manifest's directory.
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub library_version: String,
    pub generation: GenerationSpec,
    pub started_at: String,
    pub finished_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<AgoraStats>,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    /// Recomputes output digests relative to `dir` and reports mismatches.
    pub fn verify_outputs(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for out in &self.outputs {
            if sha256_file(&dir.join(&out.file))? != out.sha256 {
                bad.push(out.file.clone());
            }
        }
        Ok(bad)
    }
}

/// Default manifest location beside an output file.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
