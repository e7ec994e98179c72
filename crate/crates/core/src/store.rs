//! Binary episode container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic     b"RP1T"
//! version   u32   (1)
//! T         u32   steps
//! obs_dim   u32
//! act_dim   u32
//! payload   f32[T*obs_dim] observations, f32[T*act_dim] actions, f32[T] rewards
//!           (row-major, little-endian)
//! crc32     u32   over the payload bytes
//! meta_len  u32
//! meta      UTF-8 JSON, meta_len bytes
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keyboard::KeySet;
use crate::metrics::{KeyPressTrace, TraceStep};
use crate::midi::{GoalSequence, GoalStep, ObservationLayout, OBSERVATION_DIM};

pub const MAGIC: [u8; 4] = *b"RP1T";
pub const FORMAT_VERSION: u32 = 1;
pub const CANONICAL_STEPS: usize = 550;
pub const ACTION_DIM: usize = 39;
pub const FILE_EXTENSION: &str = "rp1t";

const HEADER_LEN: usize = 20;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload")]
    TruncatedPayload,
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("invalid metadata: {0}")]
    InvalidMeta(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub song_id: String,
    pub chunk_index: u32,
    pub f1: Option<f64>,
    pub embodiment: String,
    /// Control timestep, seconds.
    pub dt: f64,
    /// Steps that carry song content; the rest are padding.
    pub real_steps: u32,
    /// Full configuration used to produce the record.
    pub config: serde_json::Value,
}

impl Default for EpisodeMeta {
    fn default() -> Self {
        Self {
            song_id: String::new(),
            chunk_index: 0,
            f1: None,
            embodiment: String::new(),
            dt: 0.05,
            real_steps: 0,
            config: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub steps: usize,
    pub obs_dim: usize,
    pub act_dim: usize,
    /// `steps x obs_dim`, row-major.
    pub observations: Vec<f32>,
    /// `steps x act_dim`, row-major.
    pub actions: Vec<f32>,
    pub rewards: Vec<f32>,
    pub meta: EpisodeMeta,
}

impl EpisodeRecord {
    pub fn validate(&self) -> Result<(), StoreError> {
        let bad = |m: String| Err(StoreError::InvalidRecord(m));
        if self.steps == 0 {
            return bad("zero-length episode".into());
        }
        if u32::try_from(self.steps).is_err()
            || u32::try_from(self.obs_dim).is_err()
            || u32::try_from(self.act_dim).is_err()
        {
            return bad("dimensions exceed u32".into());
        }
        if self.observations.len() != self.steps * self.obs_dim {
            return bad(format!(
                "observations hold {} values, expected {}x{}",
                self.observations.len(),
                self.steps,
                self.obs_dim
            ));
        }
        if self.actions.len() != self.steps * self.act_dim {
            return bad(format!(
                "actions hold {} values, expected {}x{}",
                self.actions.len(),
                self.steps,
                self.act_dim
            ));
        }
        if self.rewards.len() != self.steps {
            return bad(format!("{} rewards for {} steps", self.rewards.len(), self.steps));
        }
        Ok(())
    }

    /// Canonical records have 550 steps, 1144-dim observations and 39-dim
    /// actions. Other shapes are readable but flagged by this check.
    pub fn is_canonical(&self) -> bool {
        self.steps == CANONICAL_STEPS && self.obs_dim == OBSERVATION_DIM && self.act_dim == ACTION_DIM
    }

    pub fn observation(&self, t: usize) -> &[f32] {
        &self.observations[t * self.obs_dim..(t + 1) * self.obs_dim]
    }

    pub fn action(&self, t: usize) -> &[f32] {
        &self.actions[t * self.act_dim..(t + 1) * self.act_dim]
    }

    fn require_layout(&self) -> Result<ObservationLayout, StoreError> {
        ObservationLayout::for_dim(self.obs_dim).ok_or_else(|| {
            StoreError::InvalidRecord(format!(
                "observation dim {} has no known goal layout",
                self.obs_dim
            ))
        })
    }

    /// Current-step goals decoded from the observations, all steps included.
    pub fn goal_sequence(&self) -> Result<GoalSequence, StoreError> {
        let layout = self.require_layout()?;
        let sustain_at = layout.goal_sustain().start;
        let steps = (0..self.steps)
            .map(|t| {
                let obs = self.observation(t);
                GoalStep {
                    active: layout.current_goal(obs),
                    sustain: obs[sustain_at] >= 0.5,
                }
            })
            .collect();
        Ok(GoalSequence::new(steps, self.meta.dt))
    }

    /// Pressed keys (depth >= `threshold`) against goal keys, per step.
    pub fn press_trace(&self, threshold: f64) -> Result<KeyPressTrace, StoreError> {
        let layout = self.require_layout()?;
        let steps = (0..self.steps)
            .map(|t| {
                let obs = self.observation(t);
                TraceStep {
                    pressed: layout.pressed(obs, threshold),
                    active: layout.current_goal(obs),
                }
            })
            .collect::<Vec<_>>();
        Ok(KeyPressTrace { steps })
    }

    /// Number of goal activations across the episode.
    pub fn active_key_steps(&self) -> Result<usize, StoreError> {
        let goals = self.goal_sequence()?;
        Ok(goals.steps.iter().map(|s: &GoalStep| s.active.len()).sum())
    }
}

fn payload_bytes(rec: &EpisodeRecord) -> Vec<u8> {
    let n = rec.observations.len() + rec.actions.len() + rec.rewards.len();
    let mut out = Vec::with_capacity(n * 4);
    for v in rec
        .observations
        .iter()
        .chain(&rec.actions)
        .chain(&rec.rewards)
    {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Serializes `rec`; returns the number of bytes written.
pub fn write_episode<W: Write>(rec: &EpisodeRecord, mut sink: W) -> Result<usize, StoreError> {
    rec.validate()?;
    let meta = serde_json::to_vec(&rec.meta).map_err(|e| StoreError::InvalidMeta(e.to_string()))?;
    let meta_len = u32::try_from(meta.len()).map_err(|_| StoreError::InvalidMeta("metadata too large".into()))?;
    let payload = payload_bytes(rec);

    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    for v in [FORMAT_VERSION, rec.steps as u32, rec.obs_dim as u32, rec.act_dim as u32] {
        header.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&header)?;
    sink.write_all(&payload)?;
    sink.write_all(&crc32fast::hash(&payload).to_le_bytes())?;
    sink.write_all(&meta_len.to_le_bytes())?;
    sink.write_all(&meta)?;
    sink.flush()?;
    Ok(header.len() + payload.len() + 8 + meta.len())
}

pub fn episode_to_bytes(rec: &EpisodeRecord) -> Result<Vec<u8>, StoreError> {
    let mut out = Vec::new();
    write_episode(rec, &mut out)?;
    Ok(out)
}

fn read_full<R: Read>(source: &mut R, buf: &mut [u8]) -> Result<(), StoreError> {
    source.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => StoreError::TruncatedPayload,
        _ => StoreError::Io(e),
    })
}

fn read_u32<R: Read>(source: &mut R) -> Result<u32, StoreError> {
    let mut b = [0u8; 4];
    read_full(source, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn decode_f32(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

pub fn read_episode<R: Read>(mut source: R) -> Result<EpisodeRecord, StoreError> {
    let mut magic = [0u8; 4];
    read_full(&mut source, &mut magic)?;
    if magic != MAGIC {
        return Err(StoreError::BadMagic(magic));
    }
    let version = read_u32(&mut source)?;
    if version != FORMAT_VERSION {
        return Err(StoreError::UnsupportedVersion(version));
    }
    let steps = read_u32(&mut source)? as usize;
    let obs_dim = read_u32(&mut source)? as usize;
    let act_dim = read_u32(&mut source)? as usize;
    if steps == 0 {
        return Err(StoreError::InvalidRecord("zero-length episode".into()));
    }
    let counts = [
        steps.checked_mul(obs_dim),
        steps.checked_mul(act_dim),
        Some(steps),
    ];
    let mut sizes = [0usize; 3];
    for (s, c) in sizes.iter_mut().zip(counts) {
        *s = c
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| StoreError::InvalidRecord("dimensions overflow".into()))?;
    }
    let total = sizes.iter().try_fold(0usize, |a, &b| a.checked_add(b));
    let total = total.ok_or_else(|| StoreError::InvalidRecord("dimensions overflow".into()))?;

    // Read through `take` so a lying header cannot force a huge allocation.
    let mut payload = Vec::new();
    (&mut source).take(total as u64).read_to_end(&mut payload)?;
    if payload.len() != total {
        return Err(StoreError::TruncatedPayload);
    }
    let stored = read_u32(&mut source)?;
    let computed = crc32fast::hash(&payload);
    if stored != computed {
        return Err(StoreError::ChecksumMismatch { stored, computed });
    }
    let meta_len = read_u32(&mut source)? as usize;
    let mut meta = Vec::new();
    (&mut source).take(meta_len as u64).read_to_end(&mut meta)?;
    if meta.len() != meta_len {
        return Err(StoreError::TruncatedPayload);
    }
    let meta: EpisodeMeta =
        serde_json::from_slice(&meta).map_err(|e| StoreError::InvalidMeta(e.to_string()))?;

    let (obs, rest) = payload.split_at(sizes[0]);
    let (act, rew) = rest.split_at(sizes[1]);
    Ok(EpisodeRecord {
        steps,
        obs_dim,
        act_dim,
        observations: decode_f32(obs),
        actions: decode_f32(act),
        rewards: decode_f32(rew),
        meta,
    })
}

pub fn save_episode(rec: &EpisodeRecord, path: &Path) -> Result<usize, StoreError> {
    let file = fs::File::create(path)?;
    write_episode(rec, io::BufWriter::new(file))
}

pub fn load_episode(path: &Path) -> Result<EpisodeRecord, StoreError> {
    let file = fs::File::open(path)?;
    read_episode(io::BufReader::new(file))
}

/// Per-step rewards as CSV (`step,reward`), preceded by a `#` metadata line.
pub fn write_rewards_csv<W: Write>(rec: &EpisodeRecord, mut sink: W) -> Result<(), StoreError> {
    let meta = serde_json::to_string(&rec.meta).map_err(|e| StoreError::InvalidMeta(e.to_string()))?;
    writeln!(sink, "# meta={meta}")?;
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| StoreError::Io(io::Error::other(e));
    w.write_record(["step", "reward"]).map_err(csv_err)?;
    for (t, r) in rec.rewards.iter().enumerate() {
        w.write_record([t.to_string(), r.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per record: song, chunk, embodiment, steps, F1.
pub fn write_meta_csv<W: Write>(records: &[EpisodeRecord], sink: W) -> Result<(), StoreError> {
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| StoreError::Io(io::Error::other(e));
    w.write_record(["song_id", "chunk_index", "embodiment", "steps", "real_steps", "f1"])
        .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.meta.song_id.clone(),
            r.meta.chunk_index.to_string(),
            r.meta.embodiment.clone(),
            r.steps.to_string(),
            r.meta.real_steps.to_string(),
            r.meta.f1.map(|f| f.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Converts externally published trajectory files into [`EpisodeRecord`]s.
pub trait EpisodeImporter: Send + Sync {
    fn name(&self) -> &str;
    fn accepts(&self, path: &Path) -> bool;
    fn import(&self, path: &Path) -> Result<Vec<EpisodeRecord>, StoreError>;
}

/// Reads this crate's own `.rp1t` containers.
#[derive(Debug, Default, Clone, Copy)]
pub struct NativeImporter;

impl EpisodeImporter for NativeImporter {
    fn name(&self) -> &str {
        "rp1t"
    }

    fn accepts(&self, path: &Path) -> bool {
        path.extension().and_then(|e| e.to_str()) == Some(FILE_EXTENSION)
    }

    fn import(&self, path: &Path) -> Result<Vec<EpisodeRecord>, StoreError> {
        Ok(vec![load_episode(path)?])
    }
}

/// Imports every file in `dir` (non-recursive, sorted by name) accepted by
/// one of `importers`.
pub fn import_dir(
    dir: &Path,
    importers: &[&dyn EpisodeImporter],
) -> Result<Vec<(PathBuf, EpisodeRecord)>, StoreError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        if let Some(imp) = importers.iter().find(|i| i.accepts(&p)) {
            for rec in imp.import(&p)? {
                out.push((p.clone(), rec));
            }
        }
    }
    Ok(out)
}

/// Goal keys of every step, concatenated across records of one song in
/// chunk order.
pub fn concat_goals(records: &[&EpisodeRecord]) -> Result<GoalSequence, StoreError> {
    let mut sorted: Vec<&&EpisodeRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.meta.chunk_index);
    let dt = sorted.first().map_or(0.05, |r| r.meta.dt);
    let mut steps = Vec::new();
    for r in sorted {
        steps.extend(r.goal_sequence()?.steps);
    }
    Ok(GoalSequence::new(steps, dt))
}

/// Goal keys active in an observation row, for records with the canonical
/// layout.
pub fn observation_goal(obs: &[f32]) -> KeySet {
    ObservationLayout::CANONICAL.current_goal(obs)
}
