use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::data::Batch;
use crate::error::{Error, Result};
use crate::model::DifferentiableModel;
use crate::param::ParamVector;
use crate::rng::{Stream, Substream};

/// Loss on the plane `theta + a u + b v`, `a, b` in `[-r, r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub resolution: usize,
    pub radius: f64,
    pub seed: u64,
    pub u: ParamVector,
    pub v: ParamVector,
    /// Row-major: `values[i * resolution + j]` is at offsets `(alpha_i, alpha_j)`.
    pub values: Vec<f64>,
    pub center_loss: f64,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    radius: f64,
    resolution: usize,
    seed: u64,
    center_loss: f64,
    u_sha256: &'a str,
    v_sha256: &'a str,
}

fn checksum(v: &ParamVector) -> String {
    let mut h = Sha256::new();
    for x in v.iter() {
        h.update(x.to_le_bytes());
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn random_unit(rng: &mut Stream, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.normal()).collect()
}

fn normalize(x: &mut [f64]) -> Result<()> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) {
        return Err(Error::NoDescentDirection(
            "degenerate landscape direction".into(),
        ));
    }
    x.iter_mut().for_each(|v| *v /= n);
    Ok(())
}

fn remove_component(x: &mut [f64], along: &[f64]) {
    let c: f64 = x.iter().zip(along).map(|(a, b)| a * b).sum();
    x.iter_mut().zip(along).for_each(|(a, b)| *a -= c * b);
}

impl LandscapeGrid {
    /// `alpha_i = r (i - k) / k` with `resolution = 2k + 1`.
    pub fn alpha(&self, i: usize) -> f64 {
        let k = (self.resolution / 2) as f64;
        self.radius * (i as f64 - k) / k
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.resolution + j]
    }

    pub fn center(&self) -> f64 {
        let k = self.resolution / 2;
        self.at(k, k)
    }

    /// One line per `alpha_i`, one column per `alpha_j`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.resolution {
            let row: Vec<String> = (0..self.resolution)
                .map(|j| self.at(i, j).to_string())
                .collect();
            out += &row.join(",");
            out.push('\n');
        }
        out
    }

    pub fn sidecar_json(&self) -> String {
        let (u, v) = (checksum(&self.u), checksum(&self.v));
        serde_json::to_string_pretty(&Sidecar {
            radius: self.radius,
            resolution: self.resolution,
            seed: self.seed,
            center_loss: self.center_loss,
            u_sha256: &u,
            v_sha256: &v,
        })
        .expect("sidecar serializes")
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.csv")), self.to_csv())?;
        fs::write(dir.join(format!("{stem}.json")), self.sidecar_json() + "\n")?;
        Ok(())
    }
}

pub fn landscape_grid(
    model: &dyn DifferentiableModel,
    theta: &ParamVector,
    batch: &Batch,
    radius: f64,
    resolution: usize,
    seed: u64,
) -> Result<LandscapeGrid> {
    if resolution < 3 || resolution % 2 == 0 {
        return Err(Error::config(format!(
            "resolution must be odd and >= 3, got {resolution}"
        )));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::config(format!(
            "landscape radius must be positive, got {radius}"
        )));
    }
    let d = theta.len();
    if d < 2 {
        return Err(Error::config("landscape needs at least two parameters"));
    }
    let mut rng = Stream::substream(seed, Substream::Landscape);
    let mut u = random_unit(&mut rng, d);
    normalize(&mut u)?;
    let mut v = random_unit(&mut rng, d);
    for _ in 0..2 {
        remove_component(&mut v, &u);
        normalize(&mut v)?;
    }
    let u = ParamVector::new(u)?;
    let v = ParamVector::new(v)?;
    let mut grid = LandscapeGrid {
        resolution,
        radius,
        seed,
        u,
        v,
        values: Vec::new(),
        center_loss: model.loss(theta, batch)?,
    };
    let cells: Vec<(usize, usize)> = (0..resolution)
        .flat_map(|i| (0..resolution).map(move |j| (i, j)))
        .collect();
    grid.values = cells
        .par_iter()
        .map(|&(i, j)| {
            let p = theta
                .axpy(grid.alpha(i), &grid.u)?
                .axpy(grid.alpha(j), &grid.v)?;
            model.loss(&p, batch)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(grid)
}
