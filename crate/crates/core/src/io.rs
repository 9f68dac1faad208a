//! Delimited-text corpus formats and history ingestion.
//!
//! All tables are comma-separated with a one-line header. Sequence-valued
//! columns (cumulative fractions, increments, impulses) hold `;`-separated
//! numbers inside a single field. Readers are strict: the first malformed
//! record fails the whole load with its 1-based line number.
//!
//! | table       | columns |
//! |-------------|---------|
//! | nodes       | `video_id,category,view_count,favorite_count,average_rating,length_seconds,like_count,dislike_count,observed_score` |
//! | edges       | `id_a,id_b` |
//! | histories   | `video_id,total_views,cumulative_fractions` or `video_id,increments` |
//! | impulses    | `video_id,gamma,residual_norm,impulses` |
//! | scores      | `video_id,raw_value,score` |
//! | predictions | `video_id,method,predicted_score,true_score` |
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! table re-reads to bit-identical values.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::filter::{ImpulseTrain, ViewHistory};
use crate::graph::{Features, VideoId, VideoNode};
use crate::longevity::ScoredVideo;

pub const NODE_HEADER: [&str; 9] = [
    "video_id",
    "category",
    "view_count",
    "favorite_count",
    "average_rating",
    "length_seconds",
    "like_count",
    "dislike_count",
    "observed_score",
];

/// Converts a cumulative view-fraction curve into per-interval increments
/// `total * (p[k+1] - p[k])`, clamping negative differences to zero.
pub fn ingest_history(
    video_id: impl Into<VideoId>,
    cumulative: &[f64],
    total_views: f64,
) -> Result<ViewHistory> {
    if cumulative.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 cumulative points, got {}",
            cumulative.len()
        )));
    }
    if let Some(index) = cumulative.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonFinite {
            what: "cumulative fractions",
            index,
        });
    }
    if !(total_views.is_finite() && total_views >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "total views must be finite and non-negative, got {total_views}"
        )));
    }
    let increments = cumulative
        .windows(2)
        .map(|w| (total_views * (w[1] - w[0])).max(0.0))
        .collect();
    ViewHistory::new(video_id, increments)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn parse_f64(name: &str, line: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::record(name, line, format!("{what}: cannot parse {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::record(
            name,
            line,
            format!("{what}: non-finite value"),
        ));
    }
    Ok(v)
}

fn parse_seq(name: &str, line: usize, field: &str, what: &str) -> Result<Vec<f64>> {
    if field.is_empty() {
        return Err(Error::record(name, line, format!("{what}: empty sequence")));
    }
    field
        .split(';')
        .map(|s| parse_f64(name, line, s.trim(), what))
        .collect()
}

pub fn format_seq(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn check_header(name: &str, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    if got.is_empty() {
        return Err(Error::NoRecords(name.to_owned()));
    }
    if got.len() != want.len() || got.iter().zip(want).any(|(a, b)| a != *b) {
        return Err(Error::record(
            name,
            1,
            format!(
                "expected header {:?}, got {:?}",
                want.join(","),
                got.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

fn line_of(rec: &csv::StringRecord, fallback: usize) -> usize {
    rec.position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback)
}

pub fn read_nodes_from<R: Read>(name: &str, r: R) -> Result<Vec<VideoNode>> {
    let mut rdr = reader(r);
    check_header(name, rdr.headers()?, &NODE_HEADER)?;
    let mut nodes = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::record(name, i + 2, e.to_string()))?;
        let line = line_of(&rec, i + 2);
        let mut feats = [0.0; 6];
        for (k, f) in feats.iter_mut().enumerate() {
            *f = parse_f64(name, line, &rec[k + 2], NODE_HEADER[k + 2])?;
        }
        let score = match &rec[8] {
            "" => None,
            s => {
                let v: u8 = s.parse().map_err(|_| {
                    Error::record(name, line, format!("observed_score: cannot parse {s:?}"))
                })?;
                Some(v)
            }
        };
        let id = &rec[0];
        if id.is_empty() {
            return Err(Error::record(name, line, "empty video_id"));
        }
        if !ids.insert(id.to_owned()) {
            return Err(Error::record(
                name,
                line,
                format!("duplicate video_id {id}"),
            ));
        }
        let node = VideoNode::new(id, &rec[1], Features::from_array(feats), score)
            .map_err(|e| Error::record(name, line, e.to_string()))?;
        nodes.push(node);
    }
    if nodes.is_empty() {
        return Err(Error::NoRecords(name.to_owned()));
    }
    Ok(nodes)
}

pub fn read_nodes(path: &Path) -> Result<Vec<VideoNode>> {
    read_nodes_from(&source_name(path), open(path)?)
}

/// Reads an edge list, rejecting self-loops and duplicate unordered pairs.
pub fn read_edges_from<R: Read>(name: &str, r: R) -> Result<Vec<(VideoId, VideoId)>> {
    let mut rdr = reader(r);
    check_header(name, rdr.headers()?, &["id_a", "id_b"])?;
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::record(name, i + 2, e.to_string()))?;
        let line = line_of(&rec, i + 2);
        let (a, b) = (rec[0].to_owned(), rec[1].to_owned());
        if a.is_empty() || b.is_empty() {
            return Err(Error::record(name, line, "empty endpoint"));
        }
        if a == b {
            return Err(Error::record(name, line, format!("self-loop on {a}")));
        }
        let key = if a < b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        if !seen.insert(key) {
            return Err(Error::record(
                name,
                line,
                format!("duplicate edge {a} - {b}"),
            ));
        }
        edges.push((VideoId(a), VideoId(b)));
    }
    Ok(edges)
}

pub fn read_edges(path: &Path) -> Result<Vec<(VideoId, VideoId)>> {
    read_edges_from(&source_name(path), open(path)?)
}

/// Reads either history layout; cumulative rows go through [`ingest_history`].
pub fn read_histories_from<R: Read>(name: &str, r: R) -> Result<Vec<ViewHistory>> {
    let mut rdr = reader(r);
    let header = rdr.headers()?.clone();
    if header.is_empty() {
        return Err(Error::NoRecords(name.to_owned()));
    }
    let cumulative =
        match header.iter().collect::<Vec<_>>().as_slice() {
            ["video_id", "total_views", "cumulative_fractions"] => true,
            ["video_id", "increments"] => false,
            _ => return Err(Error::record(
                name,
                1,
                "expected header video_id,total_views,cumulative_fractions or video_id,increments",
            )),
        };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::record(name, i + 2, e.to_string()))?;
        let line = line_of(&rec, i + 2);
        let id = &rec[0];
        let history = if cumulative {
            let total = parse_f64(name, line, &rec[1], "total_views")?;
            let p = parse_seq(name, line, &rec[2], "cumulative_fractions")?;
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::record(
                    name,
                    line,
                    "cumulative fraction outside [0, 1]",
                ));
            }
            ingest_history(id, &p, total)
        } else {
            let inc = parse_seq(name, line, &rec[1], "increments")?;
            ViewHistory::new(id, inc)
        };
        out.push(history.map_err(|e| Error::record(name, line, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(Error::NoRecords(name.to_owned()));
    }
    Ok(out)
}

pub fn read_histories(path: &Path) -> Result<Vec<ViewHistory>> {
    read_histories_from(&source_name(path), open(path)?)
}

pub fn read_impulses_from<R: Read>(name: &str, r: R) -> Result<Vec<ImpulseTrain>> {
    let mut rdr = reader(r);
    check_header(
        name,
        rdr.headers()?,
        &["video_id", "gamma", "residual_norm", "impulses"],
    )?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::record(name, i + 2, e.to_string()))?;
        let line = line_of(&rec, i + 2);
        let impulses = parse_seq(name, line, &rec[3], "impulses")?;
        if impulses.iter().any(|v| *v < 0.0) {
            return Err(Error::record(name, line, "negative impulse"));
        }
        out.push(ImpulseTrain {
            video_id: VideoId::from(&rec[0]),
            gamma_used: parse_f64(name, line, &rec[1], "gamma")?,
            residual_norm: parse_f64(name, line, &rec[2], "residual_norm")?,
            impulses,
        });
    }
    if out.is_empty() {
        return Err(Error::NoRecords(name.to_owned()));
    }
    Ok(out)
}

pub fn read_impulses(path: &Path) -> Result<Vec<ImpulseTrain>> {
    read_impulses_from(&source_name(path), open(path)?)
}

pub fn read_scores_from<R: Read>(name: &str, r: R) -> Result<Vec<ScoredVideo>> {
    let mut rdr = reader(r);
    check_header(name, rdr.headers()?, &["video_id", "raw_value", "score"])?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::record(name, i + 2, e.to_string()))?;
        let line = line_of(&rec, i + 2);
        let score: u8 = rec[2].parse().ok().filter(|s| *s <= 100).ok_or_else(|| {
            Error::record(name, line, format!("score: cannot parse {:?}", &rec[2]))
        })?;
        out.push(ScoredVideo {
            video_id: VideoId::from(&rec[0]),
            raw_value: parse_f64(name, line, &rec[1], "raw_value")?,
            score,
        });
    }
    if out.is_empty() {
        return Err(Error::NoRecords(name.to_owned()));
    }
    Ok(out)
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoredVideo>> {
    read_scores_from(&source_name(path), open(path)?)
}

pub fn write_nodes<W: Write>(w: W, nodes: &[VideoNode]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(NODE_HEADER)?;
    for n in nodes {
        let mut row = vec![n.video_id.0.clone(), n.category.clone()];
        row.extend(n.features.to_array().iter().map(|v| v.to_string()));
        row.push(n.observed_score.map(|s| s.to_string()).unwrap_or_default());
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn write_edges<W: Write>(w: W, edges: &[(VideoId, VideoId)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["id_a", "id_b"])?;
    for (a, b) in edges {
        wtr.write_record([&a.0, &b.0])?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn write_increments<W: Write>(w: W, histories: &[ViewHistory]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["video_id", "increments"])?;
    for h in histories {
        wtr.write_record([h.video_id.0.clone(), format_seq(h.increments())])?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn write_impulses<W: Write>(w: W, trains: &[ImpulseTrain]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["video_id", "gamma", "residual_norm", "impulses"])?;
    for t in trains {
        wtr.write_record([
            t.video_id.0.clone(),
            t.gamma_used.to_string(),
            t.residual_norm.to_string(),
            format_seq(&t.impulses),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn write_scores<W: Write>(w: W, scores: &[ScoredVideo]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["video_id", "raw_value", "score"])?;
    for s in scores {
        wtr.write_record([
            s.video_id.0.clone(),
            s.raw_value.to_string(),
            s.score.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub video_id: VideoId,
    pub method: String,
    pub predicted_score: u8,
    pub true_score: Option<u8>,
}

pub fn write_predictions<W: Write>(w: W, rows: &[PredictionRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["video_id", "method", "predicted_score", "true_score"])?;
    for r in rows {
        wtr.write_record([
            r.video_id.0.clone(),
            r.method.clone(),
            r.predicted_score.to_string(),
            r.true_score.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

/// Writes `path` atomically: content goes to a temporary file in the same
/// directory and is renamed into place only if `fill` succeeds.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_growth() {
        let h = ingest_history("v", &[0.0, 0.5, 1.0], 200.0).unwrap();
        assert_eq!(h.increments(), &[100.0, 100.0]);
    }

    #[test]
    fn early_stall() {
        let h = ingest_history("v", &[0.0, 1.0, 1.0], 50.0).unwrap();
        assert_eq!(h.increments(), &[50.0, 0.0]);
    }

    #[test]
    fn negative_difference_clamped() {
        let h = ingest_history("v", &[0.0, 0.6, 0.55, 1.0], 100.0).unwrap();
        assert_eq!(h.len(), 3);
        assert!((h.increments()[0] - 60.0).abs() < 1e-9);
        assert_eq!(h.increments()[1], 0.0);
        assert!((h.increments()[2] - 45.0).abs() < 1e-9);
    }

    #[test]
    fn ingestion_errors() {
        assert!(ingest_history("v", &[0.3], 10.0).is_err());
        assert!(ingest_history("v", &[0.0, f64::NAN], 10.0).is_err());
        assert!(ingest_history("v", &[0.0, 1.0], f64::INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn unclamped_increments_conserve_total(
            mut p in prop::collection::vec(0.0f64..1.0, 2..100),
            total in 0.0f64..1e7,
        ) {
            p.sort_by(f64::total_cmp);
            let h = ingest_history("v", &p, total).unwrap();
            let sum: f64 = h.increments().iter().sum();
            let expect = total * (p[p.len() - 1] - p[0]);
            prop_assert!((sum - expect).abs() <= 1e-6 * expect.max(1.0));
        }
    }

    #[test]
    fn edge_reader_reports_line_numbers() {
        let text = "id_a,id_b\na,b\nb,c\nc,c\n";
        match read_edges_from("edges", text.as_bytes()) {
            Err(Error::Record {
                record, message, ..
            }) => {
                assert_eq!(record, 4);
                assert!(message.contains("self-loop"));
            }
            other => panic!("{other:?}"),
        }
        let dup = "id_a,id_b\na,b\nb,a\n";
        match read_edges_from("edges", dup.as_bytes()) {
            Err(Error::Record { record, .. }) => assert_eq!(record, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn node_reader_roundtrip_and_errors() {
        let nodes = vec![
            VideoNode::new(
                "a",
                "Music",
                Features::from_array([10.0, 1.0, 4.5, 30.0, 3.0, 0.0]),
                Some(40),
            )
            .unwrap(),
            VideoNode::new(
                "b",
                "News",
                Features::from_array([0.1, 2.0, 3.25, 7.0, 1.0, 2.0]),
                None,
            )
            .unwrap(),
        ];
        let mut buf = Vec::new();
        write_nodes(&mut buf, &nodes).unwrap();
        let back = read_nodes_from("nodes", buf.as_slice()).unwrap();
        assert_eq!(back, nodes);

        let bad = "video_id,category,view_count,favorite_count,average_rating,length_seconds,like_count,dislike_count,observed_score\na,Music,1,1,9,1,1,1,\n";
        assert!(matches!(
            read_nodes_from("nodes", bad.as_bytes()),
            Err(Error::Record { record: 2, .. })
        ));
        let header_only = NODE_HEADER.join(",") + "\n";
        assert!(matches!(
            read_nodes_from("nodes", header_only.as_bytes()),
            Err(Error::NoRecords(_))
        ));
    }

    #[test]
    fn history_reader_both_layouts() {
        let cum = "video_id,total_views,cumulative_fractions\nv,200,0;0.5;1\n";
        let h = read_histories_from("h", cum.as_bytes()).unwrap();
        assert_eq!(h[0].increments(), &[100.0, 100.0]);
        let inc = "video_id,increments\nv,1;0.5;0.25\n";
        let h = read_histories_from("h", inc.as_bytes()).unwrap();
        assert_eq!(h[0].increments(), &[1.0, 0.5, 0.25]);
        let neg = "video_id,increments\nv,1;-0.5\n";
        assert!(read_histories_from("h", neg.as_bytes()).is_err());
        assert!(matches!(
            read_histories_from("h", "".as_bytes()),
            Err(Error::NoRecords(_))
        ));
    }
}
