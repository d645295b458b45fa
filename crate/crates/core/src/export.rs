//! Attention heatmaps: a tab-separated weight matrix and a grayscale SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::attention::{AttentionLevel, AttentionTrace};
use crate::data::Example;
use crate::error::{Error, Result};
use crate::model::Amrnn;

const CELL_W: usize = 56;
const CELL_H: usize = 28;
const LEFT: usize = 64;
const TOP: usize = 16;

/// One row per hop, one column per story word, 17 significant digits.
pub fn trace_to_tsv(trace: &AttentionTrace) -> String {
    let mut out = String::new();
    for hop in &trace.hops {
        let row: Vec<String> = hop.weights.iter().map(|w| format!("{w:.16e}")).collect();
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

pub fn parse_tsv(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split('\t')
                .map(|c| c.parse::<f64>().map_err(|e| Error::Numeric(format!("bad heatmap cell '{c}': {e}"))))
                .collect()
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Cell darkness is linear in weight: white at 0, black at 1.
pub fn trace_to_svg(trace: &AttentionTrace, words: &[&str]) -> String {
    let cols = words.len();
    let rows = trace.hops.len();
    let width = LEFT + cols * CELL_W + 16;
    let height = TOP + rows * CELL_H + 40;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (r, hop) in trace.hops.iter().enumerate() {
        let y = TOP + r * CELL_H;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">hop {}</text>"#,
            LEFT - 8,
            y + CELL_H / 2 + 4,
            r + 1
        );
        for (c, w) in hop.weights.iter().enumerate() {
            let level = (255.0 * (1.0 - w.clamp(0.0, 1.0))).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="rgb({level},{level},{level})" stroke="gray" stroke-width="0.5"><title>{w:.6}</title></rect>"#,
                LEFT + c * CELL_W,
            );
        }
    }
    let label_y = TOP + rows * CELL_H + 16;
    for (c, w) in words.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{label_y}" text-anchor="middle">{}</text>"#,
            LEFT + c * CELL_W + CELL_W / 2,
            escape(w)
        );
    }
    let _ = writeln!(s, r#"<text x="{LEFT}" y="{}">{} level</text>"#, label_y + 18, trace.level);
    s.push_str("</svg>\n");
    s
}

/// Characters that cannot appear in a file name are replaced by `_`.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

/// Runs the model on `example` at `level` and writes `<id>.<level>.tsv` and
/// `<id>.<level>.svg` into `out_dir`.
pub fn export_attention(model: &Amrnn, example: &Example, level: AttentionLevel, out_dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let out_dir = out_dir.as_ref();
    let mut m = model.clone();
    m.hops.level = level;
    let trace = m.predict(example)?.trace;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stem = format!("{}.{level}", file_stem(&example.id));
    let tsv = out_dir.join(format!("{stem}.tsv"));
    let svg = out_dir.join(format!("{stem}.svg"));
    fs::write(&tsv, trace_to_tsv(&trace)).map_err(|e| Error::io(&tsv, e))?;
    fs::write(&svg, trace_to_svg(&trace, &example.story.flat_words())).map_err(|e| Error::io(&svg, e))?;
    Ok((tsv, svg))
}
