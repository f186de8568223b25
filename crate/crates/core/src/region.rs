//! Decision regions of two-feature classifiers.

use std::fmt::Write as _;

use crate::data::{LabeledDataset, Scaler};
use crate::network::{predict_class, Model};
use crate::{Error, Result};

/// Predicted classes on a regular grid.
///
/// `labels` is row-major with `y` outermost. Row 0 is the top edge
/// (`y = ymax`) and column 0 the left edge (`x = xmin`), so the grid reads
/// like an image.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    /// `[xmin, xmax, ymin, ymax]`.
    pub bounds: [f64; 4],
    pub resolution: usize,
    pub class_count: usize,
    pub labels: Vec<usize>,
}

impl RegionGrid {
    pub fn x_at(&self, col: usize) -> f64 {
        let [xmin, xmax, _, _] = self.bounds;
        xmin + (xmax - xmin) * col as f64 / (self.resolution - 1) as f64
    }

    pub fn y_at(&self, row: usize) -> f64 {
        let [_, _, ymin, ymax] = self.bounds;
        ymax - (ymax - ymin) * row as f64 / (self.resolution - 1) as f64
    }

    pub fn label(&self, row: usize, col: usize) -> usize {
        self.labels[row * self.resolution + col]
    }

    /// Gray level of a class: classes spread evenly over `0..=255`.
    pub fn gray_level(&self, label: usize) -> u8 {
        if self.class_count < 2 {
            0
        } else {
            (label * 255 / (self.class_count - 1)) as u8
        }
    }

    /// Binary PGM (`P5`), one byte per cell.
    pub fn to_pgm(&self) -> Vec<u8> {
        let r = self.resolution;
        let mut out = format!("P5\n{r} {r}\n255\n").into_bytes();
        out.extend(self.labels.iter().map(|&l| self.gray_level(l)));
        out
    }

    /// `x,y,label`, one line per cell in grid order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,label\n");
        for row in 0..self.resolution {
            let y = self.y_at(row);
            for col in 0..self.resolution {
                let _ = writeln!(out, "{:.16e},{:.16e},{}", self.x_at(col), y, self.label(row, col));
            }
        }
        out
    }
}

/// Classifies a `resolution x resolution` grid spanning the bounding box of
/// `data` grown by 10% on every side. Grid points are given in raw feature
/// space and pass through `scaler` before reaching the network.
pub fn decision_region_grid(
    model: &Model,
    scaler: &Scaler,
    data: &LabeledDataset,
    resolution: usize,
) -> Result<RegionGrid> {
    if data.feature_count() != 2 {
        return Err(Error::InvalidArgument(format!(
            "decision regions need 2 features, the data has {}",
            data.feature_count()
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("resolution must be at least 2, got {resolution}")));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let b = data.bounds();
    let grow = |(lo, hi): (f64, f64)| {
        let pad = 0.1 * (hi - lo);
        (lo - pad, hi + pad)
    };
    let (xmin, xmax) = grow(b[0]);
    let (ymin, ymax) = grow(b[1]);
    let mut grid = RegionGrid {
        bounds: [xmin, xmax, ymin, ymax],
        resolution,
        class_count: model.shape().outputs,
        labels: Vec::with_capacity(resolution * resolution),
    };
    for row in 0..resolution {
        let y = grid.y_at(row);
        for col in 0..resolution {
            let x = grid.x_at(col);
            grid.labels.push(predict_class(model, &scaler.transform_point(&[x, y]))?);
        }
    }
    Ok(grid)
}
