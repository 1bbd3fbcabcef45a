//! Report assembly and the on-disk layout of a discovery run.

use std::fs;
use std::path::Path;

use super::metrics::{aggregate, Aggregates, LongTermSeries};
use super::svg::{log_plot, Series};
use super::{io_err, ExperimentConfig, HarnessError, Plan};
use crate::regress::SparseModel;

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub index: usize,
    pub seed: u64,
    pub ic_seeds: Vec<u64>,
    pub noise_seeds: Vec<u64>,
    pub model: Option<SparseModel>,
    pub success: bool,
    pub error_norm: Option<f64>,
    pub failure: Option<String>,
    pub long_term: Option<LongTermSeries>,
    /// Same-data least-squares fit of the true terms, integrated the same way.
    pub reference_long_term: Option<LongTermSeries>,
}

#[derive(Clone, Debug)]
pub struct DiscoveryReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub version: &'static str,
    pub method_label: String,
    pub truth: SparseModel,
    pub runs: Vec<RunRecord>,
    pub aggregates: Aggregates,
    pub include_constant: bool,
}

/// Per-step mean, standard deviation and contributing-run count.
pub type Curve = (Vec<f64>, Vec<f64>, Vec<usize>);

fn curve<'a>(series: impl Iterator<Item = &'a LongTermSeries>) -> Option<Curve> {
    let all: Vec<&LongTermSeries> = series.collect();
    let len = all.iter().map(|s| s.mse.len()).max()?;
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    let mut count = Vec::with_capacity(len);
    for k in 0..len {
        let vals: Vec<f64> = all.iter().filter_map(|s| s.mse.get(k).copied()).collect();
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        mean.push(m);
        std.push(v.sqrt());
        count.push(vals.len());
    }
    Some((mean, std, count))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "N/A".to_string(), |x| format!("{x:.6e}"))
}

impl DiscoveryReport {
    pub(super) fn new(plan: &Plan, runs: Vec<RunRecord>) -> Self {
        let rows: Vec<(bool, Option<f64>)> = runs.iter().map(|r| (r.success, r.error_norm)).collect();
        DiscoveryReport {
            config: plan.config.clone(),
            config_hash: plan.config.hash(),
            version: env!("CARGO_PKG_VERSION"),
            method_label: plan.config.method.label(plan.config.lambda),
            truth: plan.truth.clone(),
            aggregates: aggregate(&rows),
            runs,
            include_constant: plan.include_constant,
        }
    }

    pub fn long_term(&self) -> Option<Curve> {
        curve(self.runs.iter().filter_map(|r| r.long_term.as_ref()))
    }

    pub fn reference_long_term(&self) -> Option<Curve> {
        curve(self.runs.iter().filter_map(|r| r.reference_long_term.as_ref()))
    }

    pub fn summary_line(&self) -> String {
        let a = &self.aggregates;
        format!(
            "{} on {} (sigma={}): success {}/{} ({:.0}%), RMSE successful {}, RMSE all {}",
            self.method_label,
            self.config.system,
            self.config.noise_sigma,
            a.successes,
            a.runs,
            100.0 * a.success_rate,
            fmt_opt(a.rmse_successful),
            fmt_opt(a.rmse_all),
        )
    }

    /// Write config, provenance, per-run rows, models, summary and the
    /// long-term curves under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir.join("models")).map_err(|e| io_err(dir, e))?;
        let put = |name: &str, text: String| {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| io_err(&p, e))
        };
        put("config.toml", self.config.to_toml())?;
        put("provenance.toml", self.provenance())?;
        put("truth.toml", self.truth.to_toml())?;
        for r in &self.runs {
            if let Some(m) = &r.model {
                put(&format!("models/run_{:03}.toml", r.index), m.to_toml())?;
            }
        }

        let p = dir.join("runs.csv");
        let mut w = csv::Writer::from_path(&p).map_err(|e| io_err(&p, e))?;
        let e = |x: csv::Error| io_err(&dir.join("runs.csv"), x);
        w.write_record(["run", "seed", "success", "error_norm", "active_terms", "blown_up", "equation", "failure"])
            .map_err(e)?;
        for r in &self.runs {
            w.write_record([
                r.index.to_string(),
                r.seed.to_string(),
                r.success.to_string(),
                fmt_opt(r.error_norm),
                r.model.as_ref().map_or("N/A".into(), |m| m.active().to_string()),
                r.long_term.as_ref().map_or(String::new(), |l| l.blown_up.to_string()),
                r.model.as_ref().map_or(String::new(), |m| format!("{} = {}", m.target, m.rhs())),
                r.failure.clone().unwrap_or_default(),
            ])
            .map_err(e)?;
        }
        w.flush().map_err(|x| io_err(&p, x))?;

        write_summary(dir, &self.method_label, &self.config, &self.aggregates)?;

        if let Some(lt) = self.long_term() {
            let reference = self.reference_long_term();
            let mut text = String::from("step,mean,std,runs,reference_mean,reference_std\n");
            for k in 0..lt.0.len() {
                let (rm, rs) = reference
                    .as_ref()
                    .and_then(|r| Some((r.0.get(k)?, r.1.get(k)?)))
                    .map_or(("N/A".into(), "N/A".into()), |(m, s)| (format!("{m:e}"), format!("{s:e}")));
                text.push_str(&format!("{k},{:e},{:e},{},{rm},{rs}\n", lt.0[k], lt.1[k], lt.2[k]));
            }
            put("long_term.csv", text)?;
            put("long_term.svg", long_term_svg(&self.method_label, &self.config, &lt, reference.as_ref()))?;
        }
        Ok(())
    }

    fn provenance(&self) -> String {
        let mut t = toml::Table::new();
        t.insert("config_sha256".into(), self.config_hash.clone().into());
        t.insert("version".into(), self.version.into());
        t.insert("method".into(), self.method_label.clone().into());
        t.insert("seed".into(), (self.config.seed as i64).into());
        t.insert("include_constant".into(), self.include_constant.into());
        let stride = self.config.stride();
        t.insert("stride_t".into(), (stride.t as i64).into());
        t.insert("stride_x".into(), (stride.x as i64).into());
        let seeds: Vec<toml::Value> = self.runs.iter().map(|r| r.seed.to_string().into()).collect();
        t.insert("run_seeds".into(), seeds.into());
        let tests: Vec<toml::Value> = self.config.test_seeds().iter().map(|s| s.to_string().into()).collect();
        t.insert("test_seeds".into(), tests.into());
        toml::to_string(&t).expect("table serializes")
    }
}

fn write_summary(dir: &Path, label: &str, cfg: &ExperimentConfig, a: &Aggregates) -> Result<(), HarnessError> {
    let p = dir.join("summary.csv");
    let text = format!(
        "method,system,noise_sigma,runs,success_rate,rmse_successful,rmse_all\n\"{}\",{},{},{},{:.4},{},{}\n",
        label,
        cfg.system,
        cfg.noise_sigma,
        a.runs,
        a.success_rate,
        fmt_opt(a.rmse_successful),
        fmt_opt(a.rmse_all),
    );
    fs::write(&p, text).map_err(|e| io_err(&p, e))
}

fn long_term_svg(label: &str, cfg: &ExperimentConfig, lt: &Curve, reference: Option<&Curve>) -> String {
    let mut series = vec![Series {
        label: label.to_string(),
        mean: lt.0.clone(),
        spread: Some(lt.1.clone()),
        color: "steelblue",
    }];
    if let Some(r) = reference {
        series.push(Series {
            label: "true terms, refit".into(),
            mean: r.0.clone(),
            spread: None,
            color: "darkorange",
        });
    }
    log_plot(&format!("Long-term prediction, {}", cfg.system), "step", "MSE", &series)
}

/// `(success, error_norm)` rows of a `runs.csv`.
pub fn read_runs_csv(path: &Path) -> Result<Vec<(bool, Option<f64>)>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = r.headers().map_err(|e| io_err(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| io_err(path, format!("missing column `{name}`")))
    };
    let (si, ei) = (col("success")?, col("error_norm")?);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let success = rec[si].parse::<bool>().map_err(|e| io_err(path, e))?;
        let err = match &rec[ei] {
            "N/A" | "" => None,
            s => Some(s.parse::<f64>().map_err(|e| io_err(path, e))?),
        };
        rows.push((success, err));
    }
    Ok(rows)
}

/// Recompute the summary and plot of a report directory from its per-run
/// rows and curves, returning a human-readable table.
pub fn render_report(dir: &Path) -> Result<String, HarnessError> {
    let cfg = ExperimentConfig::load(&dir.join("config.toml"))?;
    let label = cfg.method.label(cfg.lambda);
    let a = aggregate(&read_runs_csv(&dir.join("runs.csv"))?);
    write_summary(dir, &label, &cfg, &a)?;

    let lt_path = dir.join("long_term.csv");
    let mut out = format!(
        "{:<32} {:>8} {:>14} {:>16} {:>14}\n{:<32} {:>8} {:>13.0}% {:>16} {:>14}\n",
        "method", "system", "success rate", "RMSE successful", "RMSE all",
        label, cfg.system.to_string(), 100.0 * a.success_rate, fmt_opt(a.rmse_successful), fmt_opt(a.rmse_all),
    );
    if lt_path.exists() {
        let mut r = csv::Reader::from_path(&lt_path).map_err(|e| io_err(&lt_path, e))?;
        let (mut mean, mut std, mut count, mut rmean) = (vec![], vec![], vec![], vec![]);
        for rec in r.records() {
            let rec = rec.map_err(|e| io_err(&lt_path, e))?;
            let num = |i: usize| rec[i].parse::<f64>().ok();
            mean.push(num(1).unwrap_or(f64::NAN));
            std.push(num(2).unwrap_or(0.0));
            count.push(rec[3].parse().unwrap_or(0));
            rmean.push(num(4));
        }
        let reference = rmean
            .iter()
            .all(Option::is_some)
            .then(|| (rmean.iter().map(|v| v.unwrap()).collect(), vec![0.0; rmean.len()], count.clone()));
        if let (Some(first), Some(last)) = (mean.first(), mean.last()) {
            out.push_str(&format!("long-term MSE: step 0 {first:.3e}, step {} {last:.3e}\n", mean.len() - 1));
        }
        let p = dir.join("long_term.svg");
        fs::write(&p, long_term_svg(&label, &cfg, &(mean, std, count), reference.as_ref()))
            .map_err(|e| io_err(&p, e))?;
    }
    Ok(out)
}
