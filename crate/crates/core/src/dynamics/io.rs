//! Dataset directories: a `manifest` (TOML) plus one `traj_<k>.csv` per
//! initial condition. Floats are written in shortest round-trip form.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DynError, SolverConfig, TrajectoryGrid, TrajectoryMeta};
use crate::system::SystemId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub system: SystemId,
    pub solver: SolverConfig,
    pub noise_sigma: f64,
    pub ic_seeds: Vec<u64>,
    pub noise_seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub trajectories: Vec<TrajectoryGrid>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> DynError {
    DynError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<(), DynError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mpath = dir.join("manifest");
    let text = toml::to_string(&ds.manifest).map_err(|e| io_err(&mpath, e))?;
    fs::write(&mpath, text).map_err(|e| io_err(&mpath, e))?;
    for (k, tr) in ds.trajectories.iter().enumerate() {
        let path = dir.join(format!("traj_{k}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        let mut header = vec!["t".to_string()];
        header.extend((0..tr.nx()).map(|i| format!("x{i}")));
        w.write_record(&header).map_err(|e| io_err(&path, e))?;
        for r in 0..tr.nt() {
            let mut rec = vec![tr.t[r].to_string()];
            rec.extend(tr.row(r).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<Dataset, DynError> {
    let mpath = dir.join("manifest");
    let text = fs::read_to_string(&mpath).map_err(|e| io_err(&mpath, e))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| io_err(&mpath, e))?;
    let mut trajectories = Vec::new();
    for (k, &ic_seed) in manifest.ic_seeds.iter().enumerate() {
        let path = dir.join(format!("traj_{k}.csv"));
        let mut r = csv::Reader::from_path(&path).map_err(|e| io_err(&path, e))?;
        let nx = r.headers().map_err(|e| io_err(&path, e))?.len().saturating_sub(1);
        let mut t = Vec::new();
        let mut u = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| io_err(&path, e))?;
            if rec.len() != nx + 1 {
                return Err(io_err(&path, format!("row {} has {} fields", t.len() + 1, rec.len())));
            }
            let mut vals = rec.iter().map(|s| s.trim().parse::<f64>());
            t.push(vals.next().expect("non-empty").map_err(|e| io_err(&path, e))?);
            for v in vals {
                u.push(v.map_err(|e| io_err(&path, e))?);
            }
        }
        let length = manifest.solver.length;
        trajectories.push(TrajectoryGrid {
            x: super::stored_grid(length, nx),
            t,
            length,
            u,
            meta: TrajectoryMeta {
                system: manifest.system,
                params: manifest.solver.params.clone(),
                ic_seed: Some(ic_seed),
                noise_sigma: manifest.noise_sigma,
                noise_seed: manifest.noise_seeds.get(k).copied(),
            },
        });
    }
    Ok(Dataset {
        manifest,
        trajectories,
    })
}
