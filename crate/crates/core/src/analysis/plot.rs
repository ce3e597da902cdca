use super::pca::PcaResult;
use crate::category::Category;
use crate::dataset::FoodStore;
use crate::fsutil::write_atomic;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const PLOT_CSV: &str = "pca.csv";
pub const PLOT_SVG: &str = "pca.svg";

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("nothing to plot: the PCA result has no rows")]
    Empty,
    #[error("a scatter plot needs 2 components, the result has {0}")]
    TooFewComponents(usize),
    #[error("food {0} is not in the food store")]
    UnknownFood(u64),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotFiles {
    pub csv: PathBuf,
    pub svg: PathBuf,
}

// Fixed palette indexed by category position.
const PALETTE: [&str; 21] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939", "#8c6d31", "#843c39", "#7b4173", "#3182bd", "#e6550d", "#31a354", "#756bb1", "#636363",
    "#a55194",
];

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 60.0;
const LEGEND_W: f64 = 200.0;

fn color(c: Category) -> &'static str {
    PALETTE[c as usize]
}

/// Write `pca.csv` and `pca.svg` under `out`.
pub fn emit_plot_data(result: &PcaResult, foods: &FoodStore, out: &Path) -> Result<PlotFiles, PlotError> {
    if result.projections.is_empty() {
        return Err(PlotError::Empty);
    }
    if result.components.len() < 2 {
        return Err(PlotError::TooFewComponents(result.components.len()));
    }
    let mut points = Vec::with_capacity(result.projections.len());
    for (id, p) in result.food_ids.iter().zip(&result.projections) {
        let food = foods.get(*id).ok_or(PlotError::UnknownFood(*id))?;
        points.push((food, p[0], p[1]));
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["food_id", "name", "category", "pc1", "pc2"])?;
    for (f, x, y) in &points {
        w.write_record([f.food_id.to_string(), f.name.clone(), f.category.to_string(), fmt6(*x), fmt6(*y)])?;
    }
    let csv_bytes = w.into_inner().map_err(|e| PlotError::Io { path: out.join(PLOT_CSV), source: e.into_error() })?;

    let svg = render_svg(&points.iter().map(|(f, x, y)| (f.category, *x, *y)).collect::<Vec<_>>(), result);

    std::fs::create_dir_all(out).map_err(|source| PlotError::Io { path: out.to_path_buf(), source })?;
    let files = PlotFiles { csv: out.join(PLOT_CSV), svg: out.join(PLOT_SVG) };
    write_atomic(&files.csv, &csv_bytes).map_err(|source| PlotError::Io { path: files.csv.clone(), source })?;
    write_atomic(&files.svg, svg.as_bytes()).map_err(|source| PlotError::Io { path: files.svg.clone(), source })?;
    Ok(files)
}

fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn render_svg(points: &[(Category, f64, f64)], result: &PcaResult) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(_, x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = |lo: f64, hi: f64| if hi - lo > 1e-12 { hi - lo } else { 1.0 };
    let (sx, sy) = (span(x0, x1), span(y0, y1));
    let plot_w = WIDTH - LEGEND_W - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / sx * plot_w;
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / sy * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333333"/>"##
    );
    let ev = &result.explained_variance;
    let total: f64 = ev.iter().sum();
    let pct = |i: usize| if total > 0.0 { 100.0 * ev[i] / total } else { 0.0 };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">PC1 ({:.1}%)</text>"#,
        MARGIN + plot_w / 2.0,
        HEIGHT - MARGIN / 3.0,
        pct(0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">PC2 ({:.1}%)</text>"#,
        MARGIN / 3.0,
        MARGIN + plot_h / 2.0,
        MARGIN / 3.0,
        MARGIN + plot_h / 2.0,
        pct(1)
    );
    for &(c, x, y) in points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}" fill-opacity="0.8"/>"#,
            px(x),
            py(y),
            color(c)
        );
    }
    let present: BTreeSet<Category> = points.iter().map(|p| p.0).collect();
    let lx = WIDTH - LEGEND_W + 10.0;
    for (i, c) in present.iter().enumerate() {
        let ly = MARGIN + 18.0 * i as f64;
        let _ = writeln!(s, r#"<circle cx="{lx:.2}" cy="{ly:.2}" r="5" fill="{}"/>"#, color(*c));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#, lx + 12.0, ly + 4.0, c.label());
    }
    s.push_str("</svg>\n");
    s
}
