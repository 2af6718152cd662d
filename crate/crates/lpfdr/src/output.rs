//! CSV emission of simulation reports.

use std::path::{Path, PathBuf};

use crate::sim::SimReport;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: csv::Error,
}

/// Six significant digits.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.5e}")
}

fn write_csv<F>(path: PathBuf, header: &[&str], body: F) -> Result<PathBuf, OutputError>
where
    F: FnOnce(&mut csv::Writer<std::fs::File>) -> csv::Result<()>,
{
    let run = || -> csv::Result<()> {
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    };
    run().map_err(|source| OutputError { path: path.clone(), source })?;
    Ok(path)
}

/// Writes `metrics.csv`, `curves.csv` and `coeffs.csv` into `dir`, rows
/// ordered by method name and then index. Returns the written paths.
pub fn write_outputs(report: &SimReport, dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(dir).map_err(|e| OutputError { path: dir.to_path_buf(), source: e.into() })?;
    let mut methods: Vec<_> = report.methods.iter().collect();
    methods.sort_by_key(|m| m.method.as_str());

    let metrics = write_csv(dir.join("metrics.csv"), &["method", "power", "fdr", "pfdr", "sd_tpp"], |w| {
        for m in &methods {
            let mt = &m.metrics;
            let pfdr = mt.pfdr.map(fmt_value).unwrap_or_default();
            w.write_record([m.method.as_str(), &fmt_value(mt.power), &fmt_value(mt.fdr), &pfdr, &fmt_value(mt.sd_tpp)])?;
        }
        Ok(())
    })?;
    let curves = write_csv(dir.join("curves.csv"), &["method", "i_over_n", "scaled_p"], |w| {
        for m in &methods {
            for (x, y) in &m.curve {
                w.write_record([m.method.as_str(), &fmt_value(*x), &fmt_value(*y)])?;
            }
        }
        Ok(())
    })?;
    let coeffs = write_csv(dir.join("coeffs.csv"), &["method", "i_over_n", "k", "c_avg"], |w| {
        let n = report.n as f64;
        for m in &methods {
            let Some(cc) = &m.coeff_curve else { continue };
            for (i, row) in cc.iter().enumerate() {
                let x = fmt_value((i + 1) as f64 / n);
                for (k, c) in row.iter().enumerate() {
                    w.write_record([m.method.as_str(), &x, &(k + 1).to_string(), &fmt_value(*c)])?;
                }
            }
        }
        Ok(())
    })?;
    Ok(vec![metrics, curves, coeffs])
}
