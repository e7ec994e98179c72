//! Command-line frontend.
//!
//! Exit codes: 0 on success, 1 when a song fails to annotate in strict
//! mode, 2 on usage errors and unreadable or missing inputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::annotate::{
    annotate_song, annotation_to_pig, chunk_episodes, episode_record_with_lookahead, AnnotateParams,
    ChordPolicy, DEFAULT_EPISODE_LEN,
};
use crate::assign::{build_cost_matrix, render_table, solve_assignment, CostMatrix};
use crate::hand::{init_hands, HandConfig};
use crate::keyboard::{KeyIndex, KeyboardGeometry, NUM_KEYS};
use crate::metrics::{dataset_stats, fingering_agreement, HistogramMode, PressCounts, F1_THRESHOLDS};
use crate::midi::{parse_midi, parse_pig, write_pig_with_header, DiscretizeOptions, GoalSequence};
use crate::reward::RewardParams;
use crate::store::{concat_goals, import_dir, save_episode, EpisodeImporter, EpisodeRecord, NativeImporter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "otfinger", version, about = "Optimal-transport piano fingering annotation and dataset tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Annotate MIDI songs with per-step fingerings.
    ///
    /// For every song `<stem>` this writes into --out:
    ///   <stem>.fingering.txt   one line per step: step<TAB>d_ot<TAB>key:finger;...
    ///                          (keys are 0-87, fingers signed: right +1..+5,
    ///                          left -1..-5; `-` for a silent step; a fourth
    ///                          `dropped=k,...` column in best-effort mode)
    ///   <stem>.goals.txt       step<TAB>sustain<TAB>active keys
    ///   <stem>.rewards.csv     step,ot,press,sustain,collision,energy,total
    ///   <stem>.epNNN.rp1t      fixed-length episode containers
    ///   <stem>.pig.txt         PIG fingering file (with --pig-out)
    /// Each file starts with the configuration that produced it. One summary
    /// line per song goes to stdout: song, steps, mean d_ot, infeasible steps.
    #[command(verbatim_doc_comment)]
    Annotate(AnnotateArgs),
    /// Score episodes (precision/recall/F1) or compare two PIG files.
    ///
    /// Episode mode prints song<TAB>precision<TAB>recall<TAB>f1 per song, or
    /// CSV with the same columns under --csv. PIG mode prints agreement,
    /// matched, agreeing, unmatched_ours, unmatched_human.
    #[command(verbatim_doc_comment)]
    Eval(EvalArgs),
    /// Dataset statistics over a directory of episode containers.
    ///
    /// Prints piece count, total key count, white-key fraction, active-key
    /// counts per piece, and with --f1-meta the fraction of episodes with
    /// F1 >= 0.5 and >= 0.75. --csv writes the key histogram as
    /// key,pitch,count rows.
    #[command(verbatim_doc_comment)]
    Stats(StatsArgs),
    /// Print a cost matrix and its optimal assignment as a table.
    Assign(AssignArgs),
}

#[derive(Debug, Args, Clone)]
pub struct PipelineArgs {
    /// Built-in embodiment (five-finger, four-finger) or a TOML hand config.
    #[arg(long, default_value = "five-finger")]
    pub embodiment: String,
    /// TOML keyboard geometry overrides.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// TOML reward parameter overrides.
    #[arg(long)]
    pub reward: Option<PathBuf>,
    #[arg(long, default_value_t = 1.25)]
    pub stretch: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    /// Keep leading silence instead of shifting the first onset to 0.
    #[arg(long)]
    pub no_trim: bool,
    /// Keep the cheapest keys of oversized chords instead of failing.
    #[arg(long)]
    pub best_effort: bool,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    /// A MIDI file or a directory of .mid/.midi files.
    #[arg(long)]
    pub midi: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Future goal steps per observation, beyond the current one.
    #[arg(long, default_value_t = 10)]
    pub lookahead: usize,
    #[arg(long, default_value_t = DEFAULT_EPISODE_LEN)]
    pub episode_len: usize,
    /// Also write a PIG fingering file per song.
    #[arg(long)]
    pub pig_out: bool,
    /// Songs processed in parallel (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of episode containers.
    #[arg(long, conflicts_with_all = ["pig_ours", "pig_human"], required_unless_present = "pig_ours")]
    pub episodes: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub press_threshold: f64,
    #[arg(long)]
    pub csv: bool,
    #[arg(long, requires = "pig_human")]
    pub pig_ours: Option<PathBuf>,
    #[arg(long, requires = "pig_ours")]
    pub pig_human: Option<PathBuf>,
    /// Onset tolerance, seconds, when matching PIG notes.
    #[arg(long, default_value_t = 0.05)]
    pub onset_tol: f64,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Include F1 scores stored in episode metadata.
    #[arg(long)]
    pub f1_meta: bool,
    /// Write the key histogram to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Count active steps per key instead of onsets.
    #[arg(long)]
    pub occupancy: bool,
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    /// Rows separated by `;`, entries by `,` (e.g. "0.1,0.5;0.4,0.2").
    #[arg(long, conflicts_with = "midi", required_unless_present = "midi")]
    pub matrix: Option<String>,
    /// Show the fingertip-to-key costs of a MIDI song at --step.
    #[arg(long)]
    pub midi: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub step: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.command {
        Command::Annotate(a) => cmd_annotate(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Assign(a) => cmd_assign(&a),
    }
}

/// Resolved pipeline configuration, embedded in every output file.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub embodiment: HandConfig,
    pub geometry: KeyboardGeometry,
    pub params: AnnotateParams,
    pub discretize: DiscretizeOptions,
}

impl PipelineArgs {
    pub fn resolve(&self) -> Result<PipelineConfig, String> {
        let embodiment = match HandConfig::builtin(&self.embodiment) {
            Some(h) => h,
            None => {
                let text = read_text(Path::new(&self.embodiment))?;
                HandConfig::from_config_str(&text).map_err(|e| format!("{}: {e}", self.embodiment))?
            }
        };
        let geometry = match &self.geometry {
            Some(p) => KeyboardGeometry::from_config_str(&read_text(p)?)
                .map_err(|e| format!("{}: {e}", p.display()))?,
            None => KeyboardGeometry::default(),
        };
        let reward = match &self.reward {
            Some(p) => RewardParams::from_config_str(&read_text(p)?)
                .map_err(|e| format!("{}: {e}", p.display()))?,
            None => RewardParams::default(),
        };
        let policy = if self.best_effort {
            ChordPolicy::BestEffort
        } else {
            ChordPolicy::Strict
        };
        Ok(PipelineConfig {
            embodiment,
            geometry,
            params: AnnotateParams { reward, policy },
            discretize: DiscretizeOptions {
                dt: self.dt,
                stretch: self.stretch,
                trim_silence: !self.no_trim,
            },
        })
    }
}

fn read_text(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn song_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "song".into())
}

fn list_files(path: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>, String> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn load_goals(path: &Path, cfg: &PipelineConfig) -> Result<(crate::midi::ParsedMidi, GoalSequence), String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let parsed = parse_midi(&bytes).map_err(|e| e.to_string())?;
    let goals = parsed.discretize(&cfg.discretize).map_err(|e| e.to_string())?;
    Ok((parsed, goals))
}

struct SongOutcome {
    song: String,
    result: Result<String, String>,
}

fn annotate_one(path: &Path, cfg: &PipelineConfig, args: &AnnotateArgs) -> SongOutcome {
    let song = song_id(path);
    let result = (|| -> Result<String, String> {
        let (parsed, goals) = load_goals(path, cfg)?;
        let ann = annotate_song(&goals, &cfg.embodiment, &cfg.geometry, &cfg.params).map_err(|e| e.to_string())?;
        let run_json = serde_json::json!({
            "source": path.display().to_string(),
            "pipeline": cfg,
            "lookahead": args.lookahead,
            "episode_len": args.episode_len,
        });
        let header = format!("# run={run_json}\n");
        let out = &args.out;
        let write = |name: String, body: &[u8]| -> Result<(), String> {
            let p = out.join(name);
            fs::write(&p, body).map_err(|e| format!("{}: {e}", p.display()))
        };

        write(format!("{song}.fingering.txt"), format!("{header}{}", ann.to_text()).as_bytes())?;
        write(format!("{song}.goals.txt"), format!("{header}{}", goals.to_text()).as_bytes())?;
        let mut csv = header.clone().into_bytes();
        ann.write_rewards_csv(&mut csv).map_err(|e| e.to_string())?;
        write(format!("{song}.rewards.csv"), &csv)?;

        if args.pig_out {
            let records = annotation_to_pig(&ann, &parsed.notes).map_err(|e| e.to_string())?;
            let text = write_pig_with_header(&records, &[format!("run={run_json}")]);
            write(format!("{song}.pig.txt"), text.as_bytes())?;
        }

        let episodes = chunk_episodes(&goals, &ann, args.episode_len).map_err(|e| e.to_string())?;
        for ep in &episodes {
            let mut rec = episode_record_with_lookahead(ep, &song, &ann, args.lookahead + 1);
            if let Some(map) = rec.meta.config.as_object_mut() {
                map.insert("discretize".into(), serde_json::json!(cfg.discretize));
                map.insert("source".into(), serde_json::json!(path.display().to_string()));
            }
            let p = out.join(format!("{song}.ep{:03}.{}", ep.index, crate::store::FILE_EXTENSION));
            save_episode(&rec, &p).map_err(|e| format!("{}: {e}", p.display()))?;
        }
        Ok(format!(
            "{song}\tsteps={}\tmean_d_ot={:.6}\tinfeasible_steps={}\tepisodes={}",
            goals.len(),
            ann.mean_d_ot(),
            ann.infeasible_steps(),
            episodes.len()
        ))
    })();
    SongOutcome { song, result }
}

pub fn cmd_annotate(args: &AnnotateArgs) -> i32 {
    let cfg = match args.pipeline.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    if args.episode_len == 0 {
        eprintln!("error: --episode-len must be positive");
        return EXIT_INPUT;
    }
    let files = match list_files(&args.midi, &["mid", "midi"]) {
        Ok(f) if !f.is_empty() => f,
        Ok(_) => {
            eprintln!("error: no MIDI files in {}", args.midi.display());
            return EXIT_INPUT;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: {}: {e}", args.out.display());
        return EXIT_INPUT;
    }

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let outcomes: Vec<SongOutcome> = pool.install(|| files.par_iter().map(|f| annotate_one(f, &cfg, args)).collect());

    let mut failed = Vec::new();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for o in &outcomes {
        match &o.result {
            Ok(summary) => {
                let _ = writeln!(out, "{summary}");
            }
            Err(e) => {
                eprintln!("FAILED {}: {e}", o.song);
                failed.push(o.song.as_str());
            }
        }
    }
    if failed.is_empty() {
        EXIT_OK
    } else {
        eprintln!("{} of {} songs failed: {}", failed.len(), outcomes.len(), failed.join(", "));
        EXIT_FAILED
    }
}

fn load_records(dir: &Path) -> Result<Vec<EpisodeRecord>, String> {
    if !dir.is_dir() {
        return Err(format!("{}: not a directory", dir.display()));
    }
    let importers: [&dyn EpisodeImporter; 1] = [&NativeImporter];
    let recs = import_dir(dir, &importers).map_err(|e| format!("{}: {e}", dir.display()))?;
    if recs.is_empty() {
        return Err(format!("no episode files in {}", dir.display()));
    }
    Ok(recs.into_iter().map(|(_, r)| r).collect())
}

/// Records grouped by song id, songs sorted, chunks in order.
fn by_song(records: &[EpisodeRecord]) -> BTreeMap<&str, Vec<&EpisodeRecord>> {
    let mut songs: BTreeMap<&str, Vec<&EpisodeRecord>> = BTreeMap::new();
    for r in records {
        songs.entry(r.meta.song_id.as_str()).or_default().push(r);
    }
    for v in songs.values_mut() {
        v.sort_by_key(|r| r.meta.chunk_index);
    }
    songs
}

pub fn cmd_eval(args: &EvalArgs) -> i32 {
    match (&args.pig_ours, &args.pig_human) {
        (Some(ours), Some(human)) => eval_pig(ours, human, args),
        _ => match &args.episodes {
            Some(dir) => eval_episodes(dir, args),
            None => {
                eprintln!("error: pass --episodes or --pig-ours/--pig-human");
                EXIT_INPUT
            }
        },
    }
}

fn eval_episodes(dir: &Path, args: &EvalArgs) -> i32 {
    let records = match load_records(dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut rows = Vec::new();
    for (song, recs) in by_song(&records) {
        let mut counts = PressCounts::default();
        for r in recs {
            match r.press_trace(args.press_threshold) {
                Ok(t) => counts = counts.merge(t.counts()),
                Err(e) => {
                    eprintln!("error: {song}: {e}");
                    return EXIT_INPUT;
                }
            }
        }
        rows.push((song.to_string(), counts.precision(), counts.recall(), counts.f1()));
    }
    let mut text = String::new();
    if args.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(["song", "precision", "recall", "f1"]);
        for (s, p, r, f) in &rows {
            let _ = w.write_record([s.clone(), p.to_string(), r.to_string(), f.to_string()]);
        }
        text = String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default();
    } else {
        for (s, p, r, f) in &rows {
            let _ = writeln!(text, "{s}\tprecision={p:.6}\trecall={r:.6}\tf1={f:.6}");
        }
    }
    print!("{text}");
    EXIT_OK
}

fn eval_pig(ours: &Path, human: &Path, args: &EvalArgs) -> i32 {
    let load = |p: &Path| -> Result<_, String> {
        let text = read_text(p)?;
        parse_pig(&text).map_err(|e| format!("{}: {e}", p.display()))
    };
    let (a, b) = match (load(ours), load(human)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let report = match fingering_agreement(&a, &b, args.onset_tol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    if args.csv {
        println!("agreement,matched,agreeing,unmatched_ours,unmatched_human");
        println!(
            "{},{},{},{},{}",
            report.agreement, report.matched, report.agreeing, report.unmatched_ours, report.unmatched_human
        );
    } else {
        println!(
            "agreement={:.6}\tmatched={}\tagreeing={}\tunmatched_ours={}\tunmatched_human={}",
            report.agreement, report.matched, report.agreeing, report.unmatched_ours, report.unmatched_human
        );
    }
    EXIT_OK
}

pub fn cmd_stats(args: &StatsArgs) -> i32 {
    let records = match load_records(&args.input) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut pieces = Vec::new();
    for (song, recs) in by_song(&records) {
        match concat_goals(&recs) {
            Ok(g) => pieces.push(g),
            Err(e) => {
                eprintln!("error: {song}: {e}");
                return EXIT_INPUT;
            }
        }
    }
    let f1: Vec<f64> = if args.f1_meta {
        records.iter().filter_map(|r| r.meta.f1).collect()
    } else {
        Vec::new()
    };
    let mode = if args.occupancy {
        HistogramMode::Occupancy
    } else {
        HistogramMode::Onsets
    };
    let stats = match dataset_stats(&pieces, args.f1_meta.then_some(f1.as_slice()), mode) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };

    println!("pieces={}", pieces.len());
    println!("episodes={}", records.len());
    println!("total_count={}", stats.total_count());
    println!("white_fraction={:.6}", stats.white_fraction);
    let counts: Vec<String> = stats.active_key_counts.iter().map(u64::to_string).collect();
    println!("active_key_counts={}", counts.join(","));
    if args.f1_meta {
        println!("f1_scores={}", stats.f1_distribution.len());
        for t in F1_THRESHOLDS {
            if let Some(v) = stats.fraction_above(t) {
                println!("fraction_f1_above_{t}={v:.6}");
            }
        }
    }

    if let Some(path) = &args.csv {
        let snapshot = serde_json::json!({
            "input": args.input.display().to_string(),
            "mode": mode,
            "f1_meta": args.f1_meta,
        });
        let mut buf = format!("# config={snapshot}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let _ = w.write_record(["key", "pitch", "count"]);
            for k in 0..NUM_KEYS {
                let key = KeyIndex::new(k).expect("in range");
                let _ = w.write_record([k.to_string(), key.pitch().to_string(), stats.key_histogram[k].to_string()]);
            }
            let _ = w.flush();
        }
        if let Err(e) = fs::write(path, buf) {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_INPUT;
        }
    }
    EXIT_OK
}

/// Parses `"a,b;c,d"` into a cost matrix.
pub fn parse_matrix(text: &str) -> Result<CostMatrix, String> {
    let rows: Result<Vec<Vec<f64>>, String> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad entry {v:?}")))
                .collect()
        })
        .collect();
    CostMatrix::from_rows(&rows?).map_err(|e| e.to_string())
}

pub fn cmd_assign(args: &AssignArgs) -> i32 {
    let (cost, rows, cols) = if let Some(m) = &args.matrix {
        match parse_matrix(m) {
            Ok(c) => (c, Vec::new(), Vec::new()),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
        }
    } else {
        let Some(path) = &args.midi else {
            eprintln!("error: pass --matrix or --midi");
            return EXIT_INPUT;
        };
        let prepared = args.pipeline.resolve().and_then(|cfg| {
            let (_, goals) = load_goals(path, &cfg)?;
            let step = goals
                .steps
                .get(args.step)
                .ok_or_else(|| format!("step {} is past the end ({} steps)", args.step, goals.len()))?;
            // Fingertips at the requested step come from replaying the song.
            let fingertips = if args.step == 0 {
                init_hands(&cfg.embodiment, &cfg.geometry).map_err(|e| e.to_string())?.fingertips
            } else {
                let mut prefix = goals.clone();
                prefix.steps.truncate(args.step);
                let ann = annotate_song(&prefix, &cfg.embodiment, &cfg.geometry, &cfg.params)
                    .map_err(|e| e.to_string())?;
                ann.steps.last().map(|s| s.fingertips_after.clone()).unwrap_or_default()
            };
            let kc = build_cost_matrix(&fingertips, &step.active, &cfg.geometry);
            let rows = kc.keys.iter().map(|k| format!("key{}", k.index())).collect();
            let cols = cfg.embodiment.enabled_fingers().iter().map(|f| f.signed_label().to_string()).collect();
            Ok((kc.costs, rows, cols))
        });
        match prepared {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
        }
    };
    if cost.rows() == 0 {
        print!("{}", render_table(&cost, None, &rows, &cols));
        println!("d_ot = 0");
        return EXIT_OK;
    }
    match solve_assignment(&cost) {
        Ok(a) => {
            print!("{}", render_table(&cost, Some(&a), &rows, &cols));
            EXIT_OK
        }
        Err(e) => {
            print!("{}", render_table(&cost, None, &rows, &cols));
            eprintln!("error: {e}");
            EXIT_FAILED
        }
    }
}
