//! Benchmark file ingestion: newline-delimited JSON records, plus a CSV
//! fallback that derives scenes by sliding windows.

use crate::error::{Error, Result};
use crate::scene::{FrameId, PedId, Scene, SceneType, Track};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};

use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Ndjson,
    Csv,
}

impl Format {
    /// Guesses from the file extension; ndjson wins when in doubt.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            _ => Format::Ndjson,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TrackRec {
    f: FrameId,
    p: PedId,
    x: f64,
    y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SceneRec {
    id: i64,
    p: PedId,
    s: FrameId,
    e: FrameId,
    #[serde(skip_serializing_if = "Option::is_none")]
    fps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tag: Option<(u8, Vec<u8>)>,
}

#[derive(Debug, Serialize, Deserialize)]
enum Line {
    #[serde(rename = "track")]
    Track(TrackRec),
    #[serde(rename = "scene")]
    Scene(SceneRec),
}

pub const DEFAULT_FPS: f64 = 2.5;

pub fn parse_scenes(path: &Path, format: Format) -> Result<Vec<Scene>> {
    match format {
        Format::Ndjson => parse_ndjson(path),
        Format::Csv => parse_scenes_csv(path, CsvWindow::default()),
    }
}

fn parse_ndjson(path: &Path) -> Result<Vec<Scene>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut samples: BTreeMap<PedId, Vec<(FrameId, f64, f64)>> = BTreeMap::new();
    let mut scene_recs: Vec<SceneRec> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        match parsed {
            Line::Track(t) => samples.entry(t.p).or_default().push((t.f, t.x, t.y)),
            Line::Scene(s) => scene_recs.push(s),
        }
    }

    let mut tracks: BTreeMap<PedId, Track> = BTreeMap::new();
    for (ped, s) in samples {
        tracks.insert(ped, Track::new(ped, s)?);
    }

    let mut scenes = Vec::with_capacity(scene_recs.len());
    for rec in scene_recs {
        scenes.push(assemble_scene(rec, &tracks)?);
    }
    Ok(scenes)
}

fn assemble_scene(rec: SceneRec, tracks: &BTreeMap<PedId, Track>) -> Result<Scene> {
    let clip = |t: &Track| -> Option<Track> {
        let samples: Vec<_> = t
            .samples
            .iter()
            .copied()
            .filter(|&(f, _, _)| f >= rec.s && f <= rec.e)
            .collect();
        if samples.is_empty() {
            return None;
        }
        Some(Track {
            ped_id: t.ped_id,
            samples,
        })
    };
    let scene_tracks: Vec<Track> = tracks.values().filter_map(clip).collect();
    if !scene_tracks.iter().any(|t| t.ped_id == rec.p) {
        return Err(Error::BadScene {
            scene: rec.id,
            reason: format!("missing primary track for pedestrian {}", rec.p),
        });
    }
    Ok(Scene {
        scene_id: rec.id,
        primary: rec.p,
        start: rec.s,
        end: rec.e,
        fps: rec.fps.unwrap_or(DEFAULT_FPS),
        tracks: scene_tracks,
        tag: rec.tag.and_then(|(m, subs)| SceneType::from_tag(m, &subs)),
    })
}

/// Canonical writer: all scene records in input order, then every track
/// sample exactly once, ordered by pedestrian then frame. Scenes sharing a
/// pedestrian therefore re-parse cleanly.
pub fn write_scenes(path: &Path, scenes: &[Scene]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for scene in scenes {
        let rec = Line::Scene(SceneRec {
            id: scene.scene_id,
            p: scene.primary,
            s: scene.start,
            e: scene.end,
            fps: Some(scene.fps),
            tag: scene.tag.map(|t| t.to_tag()),
        });
        writeln!(out, "{}", serde_json::to_string(&rec).unwrap())?;
    }
    let mut samples: BTreeMap<(PedId, FrameId), (f64, f64)> = BTreeMap::new();
    for scene in scenes {
        for track in &scene.tracks {
            for &(f, x, y) in &track.samples {
                samples.entry((track.ped_id, f)).or_insert((x, y));
            }
        }
    }
    for (&(p, f), &(x, y)) in &samples {
        let rec = Line::Track(TrackRec { f, p, x, y });
        writeln!(out, "{}", serde_json::to_string(&rec).unwrap())?;
    }
    Ok(())
}

/// Sliding-window scene derivation for `frame,ped_id,x,y` CSV data.
#[derive(Debug, Clone, Copy)]
pub struct CsvWindow {
    pub obs_len: usize,
    pub pred_len: usize,
    /// Window start stride, in frame-grid steps.
    pub stride: usize,
}

impl Default for CsvWindow {
    fn default() -> Self {
        CsvWindow {
            obs_len: 9,
            pred_len: 12,
            stride: 21,
        }
    }
}

pub fn parse_scenes_csv(path: &Path, window: CsvWindow) -> Result<Vec<Scene>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut samples: BTreeMap<PedId, Vec<(FrameId, f64, f64)>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if idx == 0 && fields[0].parse::<f64>().is_err() {
            continue; // header row
        }
        let err = |msg: &str| Error::Parse {
            line: idx + 1,
            msg: msg.to_string(),
        };
        if fields.len() != 4 {
            return Err(err("expected frame,ped_id,x,y"));
        }
        let frame: f64 = fields[0].parse().map_err(|_| err("bad frame"))?;
        let ped: PedId = fields[1].parse().map_err(|_| err("bad ped_id"))?;
        let x: f64 = fields[2].parse().map_err(|_| err("bad x"))?;
        let y: f64 = fields[3].parse().map_err(|_| err("bad y"))?;
        samples
            .entry(ped)
            .or_default()
            .push((frame as FrameId, x, y));
    }

    let mut tracks: BTreeMap<PedId, Track> = BTreeMap::new();
    for (ped, mut s) in samples {
        s.sort_by_key(|&(f, _, _)| f);
        s.dedup_by_key(|&mut (f, _, _)| f);
        tracks.insert(ped, Track::new(ped, s)?);
    }

    // frame grid step: smallest positive difference over all tracks
    let mut frames: Vec<FrameId> = tracks
        .values()
        .flat_map(|t| t.samples.iter().map(|&(f, _, _)| f))
        .collect();
    frames.sort_unstable();
    frames.dedup();
    if frames.len() < 2 {
        return Ok(Vec::new());
    }
    let step = frames.windows(2).map(|w| w[1] - w[0]).min().unwrap().max(1);

    let total = window.obs_len + window.pred_len;
    let span = (total as FrameId - 1) * step;
    let mut scenes = Vec::new();
    let mut scene_id = 0i64;
    let mut start = frames[0];
    let last = *frames.last().unwrap();
    while start + span <= last {
        let grid: Vec<FrameId> = (0..total as FrameId).map(|i| start + i * step).collect();
        for track in tracks.values() {
            let complete = grid.iter().all(|&f| track.position_at(f).is_some());
            if !complete {
                continue;
            }
            let rec = SceneRec {
                id: scene_id,
                p: track.ped_id,
                s: start,
                e: start + span,
                fps: None,
                tag: None,
            };
            scenes.push(assemble_scene(rec, &tracks)?);
            scene_id += 1;
        }
        start += step * window.stride as FrameId;
    }
    Ok(scenes)
}
