//! Four stacked panels of a trial log rendered to SVG.

use std::ops::Range;
use std::path::Path;

use plotters::prelude::*;

use crate::experiment::log::TrialLog;
use crate::experiment::metrics::{failure_time, first_episode};

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("log is empty")]
    Empty,
    #[error("drawing failed: {0}")]
    Draw(String),
}

/// Time span shaded as outside the DZ: `[t_out, t_in]`, or up to the failure
/// (or the end of the log) when the CoP never returns.
pub fn exit_span(log: &TrialLog) -> Option<(f64, f64)> {
    let ep = first_episode(log)?;
    let last = log.rows.last()?.t;
    let end = failure_time(log).or(ep.t_in).unwrap_or(last);
    Some((ep.t_out, end))
}

fn padded(lo: f64, hi: f64) -> Range<f64> {
    let span = (hi - lo).max(1e-3);
    (lo - 0.08 * span)..(hi + 0.08 * span)
}

fn bounds<'a>(it: impl Iterator<Item = &'a f64>) -> Range<f64> {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    padded(lo, hi)
}

type Series<'a> = (&'a str, RGBColor, Vec<(f64, f64)>);

fn panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    x_range: Range<f64>,
    y_label: &str,
    series: &[Series],
    shade: Option<(f64, f64)>,
) -> Result<(), PlotError>
where
    DB::ErrorType: 'static,
{
    let err = |e: DrawingAreaErrorKind<DB::ErrorType>| PlotError::Draw(e.to_string());
    let y_range = bounds(series.iter().flat_map(|s| s.2.iter().map(|p| &p.1)));
    let mut chart = ChartBuilder::on(area)
        .margin(8)
        .x_label_area_size(28)
        .y_label_area_size(56)
        .build_cartesian_2d(x_range, y_range.clone())
        .map_err(err)?;
    chart.configure_mesh().x_desc("t [s]").y_desc(y_label).light_line_style(WHITE).draw().map_err(err)?;
    if let Some((a, b)) = shade {
        chart
            .draw_series(std::iter::once(Rectangle::new(
                [(a, y_range.start), (b, y_range.end)],
                RGBColor(255, 200, 200).mix(0.5).filled(),
            )))
            .map_err(err)?;
    }
    for (name, color, pts) in series {
        let color = *color;
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(err)?
            .label(*name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(err)?;
    Ok(())
}

/// Renders CoP against the DZ, hand forces, handle and reference positions,
/// and the elbow angle, shading the exit episode in every panel.
pub fn render_svg(log: &TrialLog) -> Result<String, PlotError> {
    let rows = &log.rows;
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let x_range = rows[0].t..rows[rows.len() - 1].t.max(rows[0].t + 1e-3);
    let shade = exit_span(log);
    let col = |f: &dyn Fn(&crate::experiment::log::LogRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.t, f(r))).collect()
    };

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (900, 1100)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| PlotError::Draw(e.to_string()))?;
        let areas = root.split_evenly((4, 1));
        panel(
            &areas[0],
            x_range.clone(),
            "CoP x [m]",
            &[
                ("cop", BLUE, col(&|r| r.cop_x)),
                ("dz lower", BLACK, col(&|r| r.dz_lo)),
                ("dz upper", BLACK, col(&|r| r.dz_hi)),
            ],
            shade,
        )?;
        panel(
            &areas[1],
            x_range.clone(),
            "force [N]",
            &[("f_x", RED, col(&|r| r.f[0])), ("f_y", GREEN, col(&|r| r.f[1])), ("f_z", BLUE, col(&|r| r.f[2]))],
            shade,
        )?;
        panel(
            &areas[2],
            x_range.clone(),
            "position [m]",
            &[
                ("ee x", RED, col(&|r| r.ee_x)),
                ("ref x", RGBColor(255, 150, 150), col(&|r| r.ref_x)),
                ("ee z", BLUE, col(&|r| r.ee_z)),
                ("ref z", RGBColor(150, 150, 255), col(&|r| r.ref_z)),
            ],
            shade,
        )?;
        panel(&areas[3], x_range, "elbow [rad]", &[("elbow", MAGENTA, col(&|r| r.elbow))], shade)?;
        root.present().map_err(|e| PlotError::Draw(e.to_string()))?;
    }
    Ok(svg)
}

pub fn write_svg(log: &TrialLog, path: &Path) -> Result<(), PlotError> {
    let svg = render_svg(log)?;
    std::fs::write(path, svg).map_err(|e| PlotError::Draw(e.to_string()))
}
