//! Response-surface subcommands: `fit`, `optimize`, `contour`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use steerlab::surface::SubsetSelection;
use steerlab::{
    best_subsets, contour_grid, stationary_point, Dataset, Polynomial, QuadraticSurface, RegressionModel,
    SatisfactionSurface, SubsetRanking, TermBasis,
};

use crate::error::{CliError, CliResult};
use crate::RankArg;

/// Factor columns, factor names used in term labels, response name and data.
#[derive(Debug)]
pub struct Table {
    pub columns: Vec<String>,
    pub factors: Vec<String>,
    pub response: String,
    pub data: Dataset,
}

fn factor_label(column: &str) -> String {
    match column {
        "tor_nm" => "TOR".into(),
        "dev_m" => "DEV".into(),
        other => other.into(),
    }
}

fn column_for_factor(name: &str) -> String {
    match name {
        "TOR" => "tor_nm".into(),
        "DEV" => "dev_m".into(),
        other => other.into(),
    }
}

/// Reads the harness aggregate CSV (`metric`/`mean` rows), the per-run
/// metrics CSV, or a plain CSV whose non-response columns are all factors.
pub fn read_table(path: &Path, response: Option<&str>) -> CliResult<Table> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let index = |name: &str| headers.iter().position(|h| h == name);
    let records: Vec<csv::StringRecord> = reader
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| bad(e.to_string()))?;
    let number = |record: &csv::StringRecord, col: usize, row: usize| -> CliResult<f64> {
        record[col]
            .trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("row {}: column {} is not a number: {:?}", row + 2, headers[col], &record[col])))
    };
    let sweep_factors = match (index("tor_nm"), index("dev_m")) {
        (Some(t), Some(d)) => Some(vec![t, d]),
        _ => None,
    };

    let mut x = Vec::new();
    let mut y = Vec::new();
    let (factor_cols, response) = if let (Some(metric_col), Some(mean_col), Some(factors)) =
        (index("metric"), index("mean"), sweep_factors.clone())
    {
        let response = response.ok_or_else(|| {
            let mut metrics: Vec<&str> = records.iter().map(|r| r[metric_col].trim()).collect();
            metrics.dedup();
            bad(format!("--response is required; available metrics: {}", metrics.join(", ")))
        })?;
        for (row, record) in records.iter().enumerate() {
            if record[metric_col].trim() != response {
                continue;
            }
            let value = number(record, mean_col, row)?;
            if value.is_nan() {
                continue;
            }
            x.push(factors.iter().map(|&c| number(record, c, row)).collect::<CliResult<Vec<_>>>()?);
            y.push(value);
        }
        if y.is_empty() {
            return Err(bad(format!("no rows for metric {response:?}")));
        }
        (factors, response.to_string())
    } else {
        let response = match response {
            Some(r) => r.to_string(),
            None => headers
                .last()
                .cloned()
                .ok_or_else(|| bad("empty header".into()))?,
        };
        let response_col = index(&response)
            .ok_or_else(|| bad(format!("no column {response:?}; columns are {}", headers.join(", "))))?;
        let factors = match sweep_factors {
            Some(f) => f,
            None => (0..headers.len()).filter(|&c| c != response_col).collect(),
        };
        if factors.is_empty() {
            return Err(bad("no factor columns".into()));
        }
        for (row, record) in records.iter().enumerate() {
            x.push(factors.iter().map(|&c| number(record, c, row)).collect::<CliResult<Vec<_>>>()?);
            y.push(number(record, response_col, row)?);
        }
        (factors, response)
    };

    let columns: Vec<String> = factor_cols.iter().map(|&c| headers[c].clone()).collect();
    Ok(Table {
        factors: columns.iter().map(|c| factor_label(c)).collect(),
        columns,
        response,
        data: Dataset::new(x, y).map_err(|e| bad(e.to_string()))?,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
}

fn csv_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn report(table: &Table, selection: &SubsetSelection, rule: SubsetRanking) -> String {
    let best = selection.best();
    let mut r = String::new();
    let _ = writeln!(
        r,
        "response: {} ({} observations, factors {})",
        table.response,
        table.data.len(),
        table.factors.join(", ")
    );
    let _ = writeln!(
        r,
        "ranking: {}",
        match rule {
            SubsetRanking::SmallestAdequate => "smallest model with Cp <= p",
            SubsetRanking::ClosestToP => "Cp closest to p",
        }
    );
    if !selection.cp_defined {
        let _ = writeln!(r, "note: the full model fits without residual; Cp is undefined and models are ranked by exact fit, then size");
    }
    let _ = writeln!(r, "candidates: {} fitted, {} skipped", selection.ranked.len(), selection.skipped.len());
    for (terms, why) in &selection.skipped {
        let _ = writeln!(r, "  skipped {}: {why}", terms.join(" + "));
    }
    let _ = writeln!(r);
    let _ = writeln!(r, "selected: {best}");
    let _ = writeln!(r, "  R^2            {:.6}", best.r_squared);
    let _ = writeln!(r, "  adjusted R^2   {:.6}", best.adjusted_r_squared);
    let _ = writeln!(r, "  RSS            {:.6e}", best.rss);
    let _ = writeln!(r, "  Cp (p incl. intercept) {}  p = {}", fmt_opt(best.mallows_cp), best.n_params());
    let _ = writeln!(
        r,
        "  Cp (p excl. intercept) {}  p = {}",
        fmt_opt(best.mallows_cp_without_intercept()),
        best.n_params() - 1
    );
    match stationary_point(best) {
        Ok(sp) => {
            let loc: Vec<String> = table
                .factors
                .iter()
                .zip(&sp.location)
                .map(|(n, v)| format!("{n} = {v:.5}"))
                .collect();
            let _ = writeln!(r, "  stationary point: {}, value {:.4} ({})", loc.join(", "), sp.value, sp.kind);
        }
        Err(e) => {
            let _ = writeln!(r, "  stationary point: none ({e})");
        }
    }
    let _ = writeln!(r);
    let _ = writeln!(r, "full model: {}", selection.full);
    let _ = writeln!(r, "  adjusted R^2 {:.6}", selection.full.adjusted_r_squared);
    let _ = writeln!(r);
    let _ = writeln!(r, "{:>4} {:>3} {:>12} {:>10}  terms", "rank", "p", "Cp", "adj R^2");
    for (i, m) in selection.ranked.iter().enumerate() {
        let _ = writeln!(
            r,
            "{:>4} {:>3} {:>12} {:>10.6}  {}",
            i + 1,
            m.n_params(),
            fmt_opt(m.mallows_cp),
            m.adjusted_r_squared,
            m.labels().join(" + ")
        );
    }
    r
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> CliResult<()> {
    let mut out = File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))?;
    f(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(path, e))
}

fn write_coefficients(out: &mut impl Write, model: &RegressionModel) -> io::Result<()> {
    writeln!(out, "term,coefficient")?;
    writeln!(out, "intercept,{}", model.intercept)?;
    for (label, c) in model.labels().iter().zip(&model.coefficients) {
        writeln!(out, "{label},{c}")?;
    }
    Ok(())
}

fn write_candidates(out: &mut impl Write, selection: &SubsetSelection) -> io::Result<()> {
    writeln!(out, "rank,terms,n_params,rss,r_squared,adj_r_squared,cp,cp_without_intercept")?;
    for (i, m) in selection.ranked.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            i + 1,
            m.labels().join(" + "),
            m.n_params(),
            m.rss,
            m.r_squared,
            m.adjusted_r_squared,
            csv_opt(m.mallows_cp),
            csv_opt(m.mallows_cp_without_intercept())
        )?;
    }
    Ok(())
}

fn data_range(data: &Dataset, factor: usize) -> (f64, f64) {
    data.x().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x[factor]), hi.max(x[factor]))
    })
}

pub fn fit(input: &Path, response: Option<&str>, rank: RankArg, out: &Path, resolution: usize) -> CliResult<()> {
    let table = read_table(input, response)?;
    let rule = match rank {
        RankArg::Adequate => SubsetRanking::SmallestAdequate,
        RankArg::Closest => SubsetRanking::ClosestToP,
    };
    let basis = TermBasis::full_quadratic(table.factors.clone());
    let selection = best_subsets(&table.data, &basis, rule)?;
    let best = selection.best();

    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let text = report(&table, &selection, rule);
    let report_path = out.join("report.txt");
    fs::write(&report_path, &text).map_err(|e| CliError::io(&report_path, e))?;
    write_file(&out.join("coefficients.csv"), |w| write_coefficients(w, best))?;
    write_file(&out.join("candidates.csv"), |w| write_candidates(w, &selection))?;

    if table.factors.len() == 2 {
        let (r1, r2) = (data_range(&table.data, 0), data_range(&table.data, 1));
        if r1.0 < r1.1 && r2.0 < r2.1 {
            let grid = contour_grid(best, r1, r2, (resolution, resolution))?;
            let names = [table.columns[0].as_str(), table.columns[1].as_str(), table.response.as_str()];
            write_file(&out.join("contour.csv"), |w| grid.write_csv(w, names))?;
        }
    }
    print!("{text}");
    Ok(())
}

/// Reads a `term,coefficient` file as written by `fit`.
pub fn read_coefficients(path: &Path) -> CliResult<Polynomial> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut intercept = 0.0;
    let mut labels = Vec::new();
    let mut coefficients = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() < 2 {
            return Err(bad(format!("row {}: expected term,coefficient", row + 2)));
        }
        let value: f64 = record[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("row {}: coefficient {:?} is not a number", row + 2, &record[1])))?;
        match record[0].trim() {
            "intercept" => intercept += value,
            label => {
                labels.push(label.to_string());
                coefficients.push(value);
            }
        }
    }
    if labels.is_empty() {
        return Err(bad("no terms besides the intercept".into()));
    }
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    Polynomial::from_labels(&labels, intercept, coefficients).map_err(|e| bad(e.to_string()))
}

enum Loaded {
    Builtin(SatisfactionSurface),
    File(Polynomial),
}

impl Loaded {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        Ok(match path {
            Some(p) => Loaded::File(read_coefficients(p)?),
            None => Loaded::Builtin(SatisfactionSurface::default()),
        })
    }

    fn factors(&self) -> Vec<String> {
        match self {
            Loaded::Builtin(_) => vec!["TOR".into(), "DEV".into()],
            Loaded::File(s) => s.factor_names().to_vec(),
        }
    }

    fn surface(&self) -> &dyn QuadraticSurface {
        match self {
            Loaded::Builtin(s) => s,
            Loaded::File(s) => s,
        }
    }
}

pub fn optimize(coefficients: Option<&Path>) -> CliResult<()> {
    let loaded = Loaded::load(coefficients)?;
    let sp = stationary_point(loaded.surface())?;
    for (name, v) in loaded.factors().iter().zip(&sp.location) {
        println!("{name} = {v:.6}");
    }
    println!("value = {:.6}", sp.value);
    println!("kind = {}", sp.kind);
    Ok(())
}

pub fn contour(
    coefficients: Option<&Path>,
    x1_range: (f64, f64),
    x2_range: (f64, f64),
    resolution: (usize, usize),
    value_name: &str,
    out: Option<&Path>,
) -> CliResult<()> {
    let loaded = Loaded::load(coefficients)?;
    let factors = loaded.factors();
    if factors.len() != 2 {
        return Err(CliError::Input(format!(
            "contour needs a two-factor surface, got factors {}",
            factors.join(", ")
        )));
    }
    let grid = contour_grid(loaded.surface(), x1_range, x2_range, resolution)?;
    let (c1, c2) = (column_for_factor(&factors[0]), column_for_factor(&factors[1]));
    let names = [c1.as_str(), c2.as_str(), value_name];
    match out {
        Some(path) => write_file(path, |w| grid.write_csv(w, names)),
        None => grid
            .write_csv(io::stdout().lock(), names)
            .map_err(|e| CliError::Input(format!("<stdout>: {e}"))),
    }
}
