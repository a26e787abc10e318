use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};

/// Suboptimalities below this are drawn at this level on the log axis.
const FLOOR: f64 = 1e-16;

/// Suboptimality curves of one solver, one per trial, as `(work, subopt)` points.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub curves: Vec<Vec<(f64, f64)>>,
}

/// Pointwise mean over curves on the union of their abscissae; a curve that
/// has ended holds its last value.
pub fn mean_curve(curves: &[Vec<(f64, f64)>]) -> Vec<(f64, f64)> {
    let mut xs: Vec<f64> = curves.iter().flat_map(|c| c.iter().map(|p| p.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let live: Vec<&Vec<(f64, f64)>> = curves.iter().filter(|c| !c.is_empty()).collect();
    if live.is_empty() {
        return Vec::new();
    }
    let mut idx = vec![0usize; live.len()];
    xs.into_iter()
        .map(|x| {
            let mut sum = 0.0;
            for (c, i) in live.iter().zip(idx.iter_mut()) {
                while *i + 1 < c.len() && c[*i + 1].0 <= x {
                    *i += 1;
                }
                sum += c[*i].1;
            }
            (x, sum / live.len() as f64)
        })
        .collect()
}

fn palette(i: usize) -> RGBColor {
    const COLORS: [RGBColor; 6] = [
        RGBColor(214, 39, 40),
        RGBColor(44, 160, 44),
        RGBColor(31, 119, 180),
        RGBColor(148, 103, 189),
        RGBColor(255, 127, 14),
        RGBColor(23, 190, 207),
    ];
    COLORS[i % COLORS.len()]
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Data(format!("plot rendering failed: {e}"))
}

/// SVG of log-scale suboptimality against work units: a thin line per trial
/// and a thick mean line per solver.
pub fn render_svg(series: &[PlotSeries]) -> Result<String> {
    let points = || series.iter().flat_map(|s| s.curves.iter().flatten());
    if points().next().is_none() {
        return Err(Error::Usage("nothing to plot: no trace points".into()));
    }
    let xmax = points().map(|p| p.0).fold(0.0f64, f64::max).max(1.0);
    let ymin = points().map(|p| p.1.max(FLOOR)).fold(f64::INFINITY, f64::min);
    let ymax = points().map(|p| p.1.max(FLOOR)).fold(0.0f64, f64::max).max(ymin * 10.0);

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (900, 600)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .margin(20)
            .x_label_area_size(45)
            .y_label_area_size(70)
            .build_cartesian_2d(0.0..xmax, (ymin..ymax).log_scale())
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("work units")
            .y_desc("suboptimality")
            .y_label_formatter(&|v| format!("{v:.0e}"))
            .draw()
            .map_err(plot_err)?;
        for (i, s) in series.iter().enumerate() {
            let color = palette(i);
            for c in &s.curves {
                chart
                    .draw_series(LineSeries::new(c.iter().map(|&(x, y)| (x, y.max(FLOOR))), color.mix(0.35).stroke_width(1)))
                    .map_err(plot_err)?;
            }
            let mean = mean_curve(&s.curves);
            chart
                .draw_series(LineSeries::new(mean.into_iter().map(|(x, y)| (x, y.max(FLOOR))), color.stroke_width(3)))
                .map_err(plot_err)?
                .label(s.label.clone())
                .legend(move |(x, y)| Rectangle::new([(x, y - 4), (x + 16, y + 4)], color.filled()));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

/// Renders `series` and writes the SVG to `path`.
pub fn emit_plot(series: &[PlotSeries], path: &Path) -> Result<()> {
    let svg = render_svg(series)?;
    super::write_atomic(path, svg.as_bytes())
}

/// `(work_units, suboptimality)` columns of a trace CSV.
pub fn read_trace_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let headers = rd.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("{}: missing column {name}", path.display())))
    };
    let (wi, si) = (col("work_units")?, col("suboptimality")?);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
        let parse = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::Data(format!("{}: bad number {:?}", path.display(), &rec[i])))
        };
        out.push((parse(wi)?, parse(si)?));
    }
    Ok(out)
}

/// Collects `trial_*/<label>.csv` files of an experiment bundle into one
/// series per label, in sorted label order.
pub fn read_bundle(dir: &Path) -> Result<Vec<PlotSeries>> {
    let mut trial_dirs: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("trial_")))
        .collect();
    trial_dirs.sort();
    let mut series: Vec<PlotSeries> = Vec::new();
    for td in trial_dirs {
        let mut files: Vec<_> = std::fs::read_dir(&td)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        for f in files {
            let label = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let pts = read_trace_points(&f)?;
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.curves.push(pts),
                None => series.push(PlotSeries { label, curves: vec![pts] }),
            }
        }
    }
    series.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(series)
}
