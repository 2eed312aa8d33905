//! Files written by the commands. Every file goes through a temporary in
//! the target directory and is renamed into place.

use std::io::Write;
use std::path::Path;

use plotters::prelude::*;
use serde::Serialize;

use crate::pseudoflow::FlowOutcome;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

/// Columns `s, J`, then per mass `alpha_i, a_i_1 … a_i_n, lambda_i`, then
/// the region tag.
pub fn trajectory_csv(outcome: &FlowOutcome) -> std::io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let Some(first) = outcome.samples.first() else {
        return Ok(Vec::new());
    };
    let n = first.masses[0].a.len();
    let mut header = vec!["s".to_string(), "J".to_string()];
    for i in 1..=first.masses.len() {
        header.push(format!("alpha_{i}"));
        header.extend((1..=n).map(|k| format!("a_{i}_{k}")));
        header.push(format!("lambda_{i}"));
    }
    header.push("region".into());
    w.write_record(&header)?;
    for s in &outcome.samples {
        let mut row = vec![s.s.to_string(), s.j.to_string()];
        for m in &s.masses {
            row.push(m.alpha.to_string());
            row.extend(m.a.iter().map(|v| v.to_string()));
            row.push(m.lambda.to_string());
        }
        row.push(s.region.clone());
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

/// Two panels: `J` against `s`, and `log10 λᵢ` against `s`.
pub fn plot_flow(path: &Path, outcome: &FlowOutcome, title: &str) -> Result<(), String> {
    let samples = &outcome.samples;
    if samples.len() < 2 {
        return Ok(());
    }
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (900, 420)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| e.to_string())?;
        let (left, right) = root.split_horizontally(450);
        let s_max = samples.last().map(|s| s.s).unwrap_or(1.0).max(1e-12);

        let (j_lo, j_hi) = bounds(samples.iter().map(|s| s.j));
        let mut chart = ChartBuilder::on(&left)
            .caption(format!("{title}: J"), ("sans-serif", 16))
            .margin(10)
            .x_label_area_size(30)
            .y_label_area_size(60)
            .build_cartesian_2d(0.0..s_max, j_lo..j_hi)
            .map_err(|e| e.to_string())?;
        chart.configure_mesh().x_desc("s").draw().map_err(|e| e.to_string())?;
        chart.draw_series(LineSeries::new(samples.iter().map(|s| (s.s, s.j)), &BLUE)).map_err(|e| e.to_string())?;

        let (l_lo, l_hi) = bounds(samples.iter().flat_map(|s| s.masses.iter().map(|m| m.lambda.log10())));
        let mut chart = ChartBuilder::on(&right)
            .caption("log10 lambda", ("sans-serif", 16))
            .margin(10)
            .x_label_area_size(30)
            .y_label_area_size(40)
            .build_cartesian_2d(0.0..s_max, l_lo..l_hi)
            .map_err(|e| e.to_string())?;
        chart.configure_mesh().x_desc("s").draw().map_err(|e| e.to_string())?;
        for i in 0..samples[0].masses.len() {
            let color = Palette99::pick(i);
            chart
                .draw_series(LineSeries::new(samples.iter().map(|s| (s.s, s.masses[i].lambda.log10())), &color))
                .map_err(|e| e.to_string())?;
        }
        root.present().map_err(|e| e.to_string())?;
    }
    write_atomic(path, svg.as_bytes()).map_err(|e| e.to_string())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let pad = ((hi - lo) * 0.05).max(1e-12 * hi.abs().max(1.0));
    (lo - pad, hi + pad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::Mass;
    use crate::pseudoflow::{FlowSample, Terminal};

    fn outcome() -> FlowOutcome {
        let sample = |s: f64, lambda: f64| FlowSample {
            s,
            j: 2.0 - s,
            masses: vec![Mass { alpha: 0.5, a: vec![0.0; 5], lambda }],
            region: "V1".into(),
        };
        FlowOutcome {
            records: vec![0],
            samples: vec![sample(0.0, 10.0), sample(0.5, 20.0)],
            terminal: Terminal::InteriorStationary,
            decrease: vec![0.5],
            rejected: 0,
        }
    }

    #[test]
    fn csv_has_one_column_per_coordinate() {
        let text = String::from_utf8(trajectory_csv(&outcome()).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "s,J,alpha_1,a_1_1,a_1_2,a_1_3,a_1_4,a_1_5,lambda_1,region");
        assert_eq!(lines.next().unwrap().split(',').count(), 10);
    }

    #[test]
    fn atomic_write_replaces_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.json");
        write_json(&p, &1).unwrap();
        write_json(&p, &2).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().trim(), "2");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn plot_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.svg");
        plot_flow(&p, &outcome(), "t").unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("<svg"));
    }
}
