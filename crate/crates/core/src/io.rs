//! Plain-text file formats for events, trajectories, communities,
//! coordinates and index lists.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::distance::{parse_real, write_real};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::sim::{AgentId, EncounterEvent, LandmarkCommunity, Mode, TrajectorySample};

pub const EVENTS_HEADER: &str = "t_start,t_end,id_a,id_b,x,y";
pub const TRAJECTORY_HEADER: &str = "t,id,x,y,mode";
pub const COORDINATES_HEADER: &str = "index,x,y";

fn header<R: BufRead>(lines: &mut std::io::Lines<R>, expected: &str) -> Result<()> {
    match lines.next().transpose()? {
        Some(h) if h.trim() == expected => Ok(()),
        _ => Err(Error::Parse(format!("expected header `{expected}`"))),
    }
}

fn fields(line: &str, n: usize, no: usize) -> Result<Vec<&str>> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    if cols.len() != n {
        return Err(Error::Parse(format!("line {no}: expected {n} fields, found {}", cols.len())));
    }
    Ok(cols)
}

fn parse_int<T: std::str::FromStr>(s: &str, no: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("line {no}: bad integer `{s}`")))
}

/// Events CSV; `x,y` are left blank when `withhold_truth` is set or the
/// event carries no ground truth.
pub fn write_events<W: Write>(mut w: W, events: &[EncounterEvent], withhold_truth: bool) -> Result<()> {
    writeln!(w, "{EVENTS_HEADER}")?;
    let mut line = String::new();
    for e in events {
        line.clear();
        write_real(&mut line, e.t_start);
        line.push(',');
        write_real(&mut line, e.t_end);
        line.push_str(&format!(",{},{},", e.id_a, e.id_b));
        match e.truth_position.filter(|_| !withhold_truth) {
            Some(p) => {
                write_real(&mut line, p.x);
                line.push(',');
                write_real(&mut line, p.y);
            }
            None => line.push(','),
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_events<R: BufRead>(r: R) -> Result<Vec<EncounterEvent>> {
    let mut lines = r.lines();
    header(&mut lines, EVENTS_HEADER)?;
    let mut events = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let no = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let c = fields(&line, 6, no)?;
        let truth_position = match (c[4], c[5]) {
            ("", "") => None,
            (x, y) => Some(Point::new(parse_real(x)?, parse_real(y)?)),
        };
        let e = EncounterEvent {
            t_start: parse_real(c[0])?,
            t_end: parse_real(c[1])?,
            id_a: parse_int(c[2], no)?,
            id_b: parse_int(c[3], no)?,
            truth_position,
        };
        if !(e.t_end >= e.t_start) || e.id_a == e.id_b {
            return Err(Error::Parse(format!("line {no}: inconsistent event")));
        }
        events.push(e);
    }
    Ok(events)
}

pub fn write_trajectories<W: Write>(mut w: W, samples: &[TrajectorySample]) -> Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    let mut line = String::new();
    for s in samples {
        line.clear();
        write_real(&mut line, s.t);
        line.push_str(&format!(",{},", s.id));
        write_real(&mut line, s.position.x);
        line.push(',');
        write_real(&mut line, s.position.y);
        line.push(',');
        line.push_str(s.mode.as_str());
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_trajectories<R: BufRead>(r: R) -> Result<Vec<TrajectorySample>> {
    let mut lines = r.lines();
    header(&mut lines, TRAJECTORY_HEADER)?;
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let no = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let c = fields(&line, 5, no)?;
        let mode = match c[4] {
            "CRW" => Mode::Crw,
            "S" => Mode::Static,
            m => return Err(Error::Parse(format!("line {no}: unknown mode `{m}`"))),
        };
        out.push(TrajectorySample {
            t: parse_real(c[0])?,
            id: parse_int(c[1], no)?,
            position: Point::new(parse_real(c[2])?, parse_real(c[3])?),
            mode,
        });
    }
    Ok(out)
}

/// `{landmark_id: [event_indices]}` keyed by the decimal landmark id.
pub fn community_map(communities: &[LandmarkCommunity]) -> BTreeMap<String, Vec<usize>> {
    communities
        .iter()
        .map(|c| (c.landmark_id.to_string(), c.event_indices.clone()))
        .collect()
}

/// Rebuilds communities from a community map; centroids are recomputed
/// from event truth positions when available.
pub fn communities_from_map(map: &BTreeMap<String, Vec<usize>>, events: &[EncounterEvent]) -> Result<Vec<LandmarkCommunity>> {
    let mut out = Vec::with_capacity(map.len());
    for (id, idx) in map {
        let landmark_id: AgentId = id
            .parse()
            .map_err(|_| Error::Parse(format!("bad landmark id `{id}`")))?;
        if let Some(&bad) = idx.iter().find(|&&i| i >= events.len()) {
            return Err(Error::Parse(format!("event index {bad} out of range")));
        }
        let truths: Option<Vec<Point>> = idx.iter().map(|&i| events[i].truth_position).collect();
        let centroid = truths.filter(|t| !t.is_empty()).map(|t| {
            let s = t.iter().fold(Point::default(), |acc, p| acc.add(*p));
            s.scale(1.0 / t.len() as f64)
        });
        out.push(LandmarkCommunity { landmark_id, event_indices: idx.clone(), centroid });
    }
    out.sort_by_key(|c| c.landmark_id);
    Ok(out)
}

pub fn write_coordinates<W: Write>(mut w: W, coords: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "{COORDINATES_HEADER}")?;
    let mut line = String::new();
    for (i, c) in coords.iter().enumerate() {
        line.clear();
        line.push_str(&format!("{i},"));
        write_real(&mut line, c.first().copied().unwrap_or(0.0));
        line.push(',');
        write_real(&mut line, c.get(1).copied().unwrap_or(0.0));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_coordinates<R: BufRead>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut lines = r.lines();
    header(&mut lines, COORDINATES_HEADER)?;
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let no = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let c = fields(&line, 3, no)?;
        let index: usize = parse_int(c[0], no)?;
        if index != out.len() {
            return Err(Error::Parse(format!("line {no}: indices must be consecutive")));
        }
        out.push(vec![parse_real(c[1])?, parse_real(c[2])?]);
    }
    Ok(out)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(fs::File::open(path)?))?)
}

/// Writes through a closure into a file, creating parent directories.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<fs::File>) -> Result<()>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path)?))
}
