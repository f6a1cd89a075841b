use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::Serialize;

use crate::CliError;

/// Schema version written in the first line of every CSV file.
pub const CSV_VERSION: u32 = 1;

pub struct Sink {
    dir: PathBuf,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Sink { dir: dir.to_path_buf() })
    }

    fn write(&self, file: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(file);
        fs::write(&path, bytes).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, stem: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::usage(e.to_string()))?;
        self.write(&format!("{stem}.json"), text.as_bytes())
    }

    /// CSV with a `# holecap <kind> v<N>` comment line before the header.
    pub fn csv<T: Serialize>(&self, stem: &str, kind: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let bytes = csv_bytes(kind, rows)?;
        self.write(&format!("{stem}.csv"), &bytes)
    }

    pub fn svg(&self, stem: &str, plot: &LogLogPlot) -> Result<PathBuf, CliError> {
        self.write(&format!("{stem}.svg"), plot.render()?.as_bytes())
    }
}

pub fn csv_bytes<T: Serialize>(kind: &str, rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut out = format!("# holecap {kind} v{CSV_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in rows {
            w.serialize(r).map_err(|e| CliError::usage(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(out)
}

pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub measured: Vec<(f64, f64)>,
    pub predicted: Vec<(f64, f64)>,
}

fn span(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let v: Vec<f64> = values.filter(|x| *x > 0.0 && x.is_finite()).collect();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(0.0, f64::max);
    (lo <= hi).then_some((lo / 1.5, hi * 1.5))
}

impl LogLogPlot {
    pub fn render(&self) -> Result<String, CliError> {
        let all = || self.measured.iter().chain(&self.predicted);
        let (Some(xs), Some(ys)) = (span(all().map(|p| p.0)), span(all().map(|p| p.1))) else {
            return Err(CliError::usage("nothing positive to plot on log axes"));
        };
        let err = |e: &dyn std::fmt::Display| CliError::usage(format!("plot: {e}"));
        let mut svg = String::new();
        {
            let root = SVGBackend::with_string(&mut svg, (720, 520)).into_drawing_area();
            root.fill(&WHITE).map_err(|e| err(&e))?;
            let mut chart = ChartBuilder::on(&root)
                .caption(&self.title, ("sans-serif", 18))
                .margin(12)
                .x_label_area_size(42)
                .y_label_area_size(64)
                .build_cartesian_2d((xs.0..xs.1).log_scale(), (ys.0..ys.1).log_scale())
                .map_err(|e| err(&e))?;
            chart
                .configure_mesh()
                .x_desc(self.x_label.as_str())
                .y_desc(self.y_label.as_str())
                .draw()
                .map_err(|e| err(&e))?;
            chart
                .draw_series(LineSeries::new(self.measured.iter().copied(), &BLUE))
                .map_err(|e| err(&e))?
                .label("measured")
                .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], BLUE));
            chart
                .draw_series(self.measured.iter().map(|&p| Circle::new(p, 3, BLUE.filled())))
                .map_err(|e| err(&e))?;
            if !self.predicted.is_empty() {
                chart
                    .draw_series(LineSeries::new(self.predicted.iter().copied(), &RED))
                    .map_err(|e| err(&e))?
                    .label("leading term")
                    .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], RED));
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(|e| err(&e))?;
            root.present().map_err(|e| err(&e))?;
        }
        Ok(svg)
    }
}
