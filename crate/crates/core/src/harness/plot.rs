//! SVG figures: yaw and pitch angle and reaction-torque estimate, leader
//! against follower, one panel each.

use std::path::Path;

use plotters::prelude::*;

use super::trace::TraceLog;

type Series = (Vec<(f64, f64)>, Vec<(f64, f64)>);

fn series(log: &TraceLog, pick: impl Fn(&super::trace::TraceRow) -> (f64, f64)) -> Series {
    let mut l = Vec::with_capacity(log.len());
    let mut f = Vec::with_capacity(log.len());
    for r in &log.rows {
        let (a, b) = pick(r);
        l.push((r.time, a));
        f.push((r.time, b));
    }
    (l, f)
}

fn y_range(s: &Series) -> (f64, f64) {
    let vals = s.0.iter().chain(&s.1).map(|p| p.1).filter(|v| v.is_finite());
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(1e-3);
    (lo - pad, hi + pad)
}

/// Write a 2x2 panel figure for one trace.
pub fn emit_plots(log: &TraceLog, path: &Path, title: &str) -> Result<(), Box<dyn std::error::Error>> {
    let panels: [(&str, Series); 4] = [
        ("yaw angle (deg)", series(log, |r| (r.leader.theta[0].to_degrees(), r.follower.theta[0].to_degrees()))),
        ("pitch angle (deg)", series(log, |r| (r.leader.theta[1].to_degrees(), r.follower.theta[1].to_degrees()))),
        ("yaw reaction torque (N·m)", series(log, |r| (r.leader.tau_hat[0], r.follower.tau_hat[0]))),
        ("pitch reaction torque (N·m)", series(log, |r| (r.leader.tau_hat[1], r.follower.tau_hat[1]))),
    ];
    let t_end = log.rows.last().map_or(1.0, |r| r.time.max(1e-3));

    let root = SVGBackend::new(path, (1200, 800)).into_drawing_area();
    root.fill(&WHITE)?;
    let root = root.titled(title, ("sans-serif", 22))?;
    for (area, (label, data)) in root.split_evenly((2, 2)).iter().zip(panels.iter()) {
        let (lo, hi) = y_range(data);
        let mut chart = ChartBuilder::on(area)
            .caption(*label, ("sans-serif", 16))
            .margin(8)
            .x_label_area_size(30)
            .y_label_area_size(50)
            .build_cartesian_2d(0.0..t_end, lo..hi)?;
        chart.configure_mesh().x_desc("time (s)").draw()?;
        chart
            .draw_series(LineSeries::new(data.0.iter().copied().filter(|p| p.1.is_finite()), &BLUE))?
            .label("leader")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLUE));
        chart
            .draw_series(LineSeries::new(data.1.iter().copied().filter(|p| p.1.is_finite()), &RED))?
            .label("follower")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], RED));
        chart
            .configure_series_labels()
            .border_style(BLACK)
            .background_style(WHITE.mix(0.8))
            .draw()?;
    }
    root.present()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::trace::TraceRow;

    #[test]
    fn writes_an_svg() {
        let mut log = TraceLog::default();
        for k in 0..100u32 {
            let t = k as f64 * 0.02;
            let mut r = TraceRow {
                tick: k,
                time: t,
                ..TraceRow::default()
            };
            r.leader.theta[0] = t.sin();
            r.follower.theta[0] = -t.sin();
            log.rows.push(r);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fig.svg");
        emit_plots(&log, &path, "test").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("follower"));
    }
}
