use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// One named x/y series for external plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSeries {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PlotSeries {
    pub fn new(name: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { name: name.into(), x, y }
    }
}

/// Tab-separated `series x y` rows with a header.
pub fn format_plot_data(series: &[PlotSeries]) -> String {
    let mut out = String::from("series\tx\ty\n");
    for s in series {
        for (x, y) in s.x.iter().zip(&s.y) {
            out += &format!("{}\t{x}\t{y}\n", s.name);
        }
    }
    out
}

pub fn write_plot_data(path: impl AsRef<Path>, series: &[PlotSeries]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_plot_data(series)).map_err(|e| Error::io(path, e))
}
