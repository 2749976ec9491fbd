//! Quadratic response surfaces: least-squares fitting, best-subsets
//! selection with Mallows Cp, stationary points and contour grids.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest basis for which all subsets are enumerated.
pub const MAX_SUBSET_TERMS: usize = 20;

/// Column whose diagonal QR entry falls below this fraction of its norm is
/// treated as linearly dependent on the preceding columns.
const RANK_TOL: f64 = 1e-9;

/// Full-model residual variance below this fraction of the response
/// variance is treated as noiseless.
const ZERO_NOISE: f64 = 1e-20;

/// One polynomial term over factor indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Linear(usize),
    Cross(usize, usize),
    Square(usize),
}

impl Term {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Term::Linear(i) => x[i],
            Term::Cross(i, j) => x[i] * x[j],
            Term::Square(i) => x[i] * x[i],
        }
    }

    pub fn label(&self, names: &[String]) -> String {
        match *self {
            Term::Linear(i) => names[i].clone(),
            Term::Cross(i, j) => format!("{}*{}", names[i], names[j]),
            Term::Square(i) => format!("{}^2", names[i]),
        }
    }

    fn max_factor(&self) -> usize {
        match *self {
            Term::Linear(i) | Term::Square(i) => i,
            Term::Cross(i, j) => i.max(j),
        }
    }

    fn canonical(self) -> Self {
        match self {
            Term::Cross(i, j) if i > j => Term::Cross(j, i),
            t => t,
        }
    }
}

/// An ordered set of terms over named factors. The intercept is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct TermBasis {
    factor_names: Vec<String>,
    terms: Vec<Term>,
}

impl TermBasis {
    pub fn new(factor_names: Vec<String>, terms: Vec<Term>) -> Result<Self> {
        if factor_names.is_empty() {
            return Err(Error::Argument("a basis needs at least one factor".into()));
        }
        let mut seen = HashSet::new();
        let mut canonical = Vec::with_capacity(terms.len());
        for t in terms {
            if t.max_factor() >= factor_names.len() {
                return Err(Error::Argument(format!(
                    "term {t:?} refers to a factor beyond {}",
                    factor_names.len()
                )));
            }
            if let Term::Cross(i, j) = t {
                if i == j {
                    return Err(Error::Argument(format!(
                        "cross term of factor {i} with itself; use a square term"
                    )));
                }
            }
            let t = t.canonical();
            if !seen.insert(t) {
                return Err(Error::Argument(format!(
                    "duplicate term {}",
                    t.label(&factor_names)
                )));
            }
            canonical.push(t);
        }
        Ok(Self {
            factor_names,
            terms: canonical,
        })
    }

    /// Linear terms, then pairwise cross terms, then squares.
    pub fn full_quadratic<S: Into<String>>(factor_names: impl IntoIterator<Item = S>) -> Self {
        let factor_names: Vec<String> = factor_names.into_iter().map(Into::into).collect();
        let n = factor_names.len();
        let mut terms: Vec<Term> = (0..n).map(Term::Linear).collect();
        for i in 0..n {
            for j in i + 1..n {
                terms.push(Term::Cross(i, j));
            }
        }
        terms.extend((0..n).map(Term::Square));
        Self::new(factor_names, terms).expect("full quadratic basis is well formed")
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label(&self.factor_names)).collect()
    }

    pub fn contains(&self, term: Term) -> bool {
        self.terms.contains(&term.canonical())
    }

    /// Terms whose bit is set in `mask`, in basis order.
    pub fn subset(&self, mask: u64) -> Self {
        Self {
            factor_names: self.factor_names.clone(),
            terms: self
                .terms
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, t)| *t)
                .collect(),
        }
    }
}

/// Observations of a response over one or more factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Argument(format!(
                "{} factor rows but {} responses",
                x.len(),
                y.len()
            )));
        }
        let width = x.first().map_or(0, Vec::len);
        for (i, row) in x.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Argument(format!(
                    "row {i} has {} factors, expected {width}",
                    row.len()
                )));
            }
            if !row.iter().all(|v| v.is_finite()) || !y[i].is_finite() {
                return Err(Error::Argument(format!("row {i} has a non-finite value")));
            }
        }
        Ok(Self { x, y })
    }

    /// Observations of `f` at every point.
    pub fn from_fn(points: Vec<Vec<f64>>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let y = points.iter().map(|p| f(p)).collect();
        Self::new(points, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn factor_count(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// A least-squares fit of a term basis plus intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub basis: TermBasis,
    pub intercept: f64,
    /// One coefficient per basis term, in basis order.
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub n_obs: usize,
    /// Filled in by [`best_subsets`] when the full-model variance is defined.
    pub mallows_cp: Option<f64>,
}

impl RegressionModel {
    /// Parameters including the intercept.
    pub fn n_params(&self) -> usize {
        self.coefficients.len() + 1
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .basis
                .terms()
                .iter()
                .zip(&self.coefficients)
                .map(|(t, c)| c * t.eval(x))
                .sum::<f64>()
    }

    pub fn coefficient(&self, term: Term) -> Option<f64> {
        let term = term.canonical();
        self.basis
            .terms()
            .iter()
            .position(|t| *t == term)
            .map(|i| self.coefficients[i])
    }

    pub fn labels(&self) -> Vec<String> {
        self.basis.labels()
    }

    /// Cp with `p` excluding the intercept (two less than the usual value).
    pub fn mallows_cp_without_intercept(&self) -> Option<f64> {
        self.mallows_cp.map(|cp| cp - 2.0)
    }
}

impl fmt::Display for RegressionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y = {:.6}", self.intercept)?;
        for (label, c) in self.labels().iter().zip(&self.coefficients) {
            let sign = if *c < 0.0 { '-' } else { '+' };
            write!(f, " {sign} {:.6} {label}", c.abs())?;
        }
        Ok(())
    }
}

/// Ordinary least squares through a Householder QR of the design matrix.
pub fn fit_ols(data: &Dataset, basis: &TermBasis) -> Result<RegressionModel> {
    let n = data.len();
    let p = basis.len() + 1;
    if data.factor_count() != basis.factor_names().len() && n > 0 {
        return Err(Error::Argument(format!(
            "data has {} factors, basis expects {}",
            data.factor_count(),
            basis.factor_names().len()
        )));
    }
    if n < p {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {p} parameters"
        )));
    }

    let design = DMatrix::from_fn(n, p, |r, c| {
        if c == 0 {
            1.0
        } else {
            basis.terms()[c - 1].eval(&data.x()[r])
        }
    });
    let y = DVector::from_column_slice(data.y());

    let qr = design.clone().qr();
    let r = qr.r();
    let labels = basis.labels();
    let collinear: Vec<String> = (0..p)
        .filter(|&j| {
            let norm = design.column(j).norm();
            norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm
        })
        .map(|j| if j == 0 { "intercept".to_string() } else { labels[j - 1].clone() })
        .collect();
    if !collinear.is_empty() {
        return Err(Error::SingularDesign { terms: collinear });
    }

    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign { terms: labels.clone() })?;

    let fitted = &design * &beta;
    let rss: f64 = (&y - fitted).iter().map(|e| e * e).sum();
    let mean = data.y().iter().sum::<f64>() / n as f64;
    let tss: f64 = data.y().iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss <= f64::EPSILON {
        1.0
    } else {
        0.0
    };
    let adjusted_r_squared = if n > p {
        1.0 - (1.0 - r_squared) * (n - 1) as f64 / (n - p) as f64
    } else {
        r_squared
    };

    Ok(RegressionModel {
        basis: basis.clone(),
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        rss,
        tss,
        r_squared,
        adjusted_r_squared,
        n_obs: n,
        mallows_cp: None,
    })
}

/// Residual variance estimate of the full model, `RSS / (n - p)`.
pub fn full_model_variance(full: &RegressionModel) -> Result<f64> {
    let p = full.n_params();
    if full.n_obs <= p {
        return Err(Error::UndefinedCp(format!(
            "full model is saturated ({} observations, {p} parameters)",
            full.n_obs
        )));
    }
    let sigma2 = full.rss / (full.n_obs - p) as f64;
    let scale = if full.n_obs > 1 { full.tss / (full.n_obs - 1) as f64 } else { 0.0 };
    if sigma2.is_nan() || sigma2 <= ZERO_NOISE * scale || sigma2 == 0.0 {
        return Err(Error::UndefinedCp(
            "full model has zero residual variance".into(),
        ));
    }
    Ok(sigma2)
}

/// `Cp = RSS_p / sigma^2 - n + 2p`, with `sigma^2` from the full model and
/// `p` counting the intercept.
pub fn mallows_cp(model: &RegressionModel, full: &RegressionModel) -> Result<f64> {
    if model.n_obs != full.n_obs {
        return Err(Error::Argument(format!(
            "models fitted on different data ({} vs {} observations)",
            model.n_obs, full.n_obs
        )));
    }
    if model.n_params() > full.n_params() {
        return Err(Error::Argument(
            "subset model has more parameters than the full model".into(),
        ));
    }
    let sigma2 = full_model_variance(full)?;
    Ok(model.rss / sigma2 - model.n_obs as f64 + 2.0 * model.n_params() as f64)
}

/// How candidate subsets are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubsetRanking {
    /// Models with `Cp <= p` first, smallest first, then by `|Cp - p|`;
    /// remaining models by `Cp - p`.
    #[default]
    SmallestAdequate,
    /// Plain `|Cp - p|`, then adjusted R^2, then fewer terms.
    ClosestToP,
}

#[derive(Debug, Clone)]
pub struct SubsetSelection {
    pub full: RegressionModel,
    /// Best model first.
    pub ranked: Vec<RegressionModel>,
    /// Subsets that could not be fitted, with the reason.
    pub skipped: Vec<(Vec<String>, Error)>,
    /// False when the full model fits without residual and Cp is undefined;
    /// ranking then falls back to exact fit, fewer terms, adjusted R^2.
    pub cp_defined: bool,
}

impl SubsetSelection {
    pub fn best(&self) -> &RegressionModel {
        &self.ranked[0]
    }

    pub fn candidates(&self) -> usize {
        self.ranked.len() + self.skipped.len()
    }
}

fn sorted_labels(model: &RegressionModel) -> Vec<String> {
    let mut l = model.labels();
    l.sort();
    l
}

fn by_adj_r2_desc(a: &RegressionModel, b: &RegressionModel) -> Ordering {
    b.adjusted_r_squared.total_cmp(&a.adjusted_r_squared)
}

fn rank_models(models: &mut [RegressionModel], rule: SubsetRanking, cp_defined: bool) {
    models.sort_by(|a, b| {
        let primary = if !cp_defined {
            let exact = |m: &RegressionModel| m.rss <= ZERO_NOISE * m.tss.max(f64::MIN_POSITIVE);
            exact(b)
                .cmp(&exact(a))
                .then(a.n_params().cmp(&b.n_params()))
                .then(by_adj_r2_desc(a, b))
        } else {
            let cp = |m: &RegressionModel| m.mallows_cp.unwrap_or(f64::INFINITY);
            let gap = |m: &RegressionModel| cp(m) - m.n_params() as f64;
            match rule {
                SubsetRanking::ClosestToP => gap(a)
                    .abs()
                    .total_cmp(&gap(b).abs())
                    .then(by_adj_r2_desc(a, b))
                    .then(a.n_params().cmp(&b.n_params())),
                SubsetRanking::SmallestAdequate => {
                    let adequate = |m: &RegressionModel| gap(m) <= 0.0;
                    match (adequate(a), adequate(b)) {
                        (true, false) => Ordering::Less,
                        (false, true) => Ordering::Greater,
                        (true, true) => a
                            .n_params()
                            .cmp(&b.n_params())
                            .then(gap(a).abs().total_cmp(&gap(b).abs()))
                            .then(by_adj_r2_desc(a, b)),
                        (false, false) => gap(a)
                            .total_cmp(&gap(b))
                            .then(by_adj_r2_desc(a, b))
                            .then(a.n_params().cmp(&b.n_params())),
                    }
                }
            }
        };
        primary.then_with(|| sorted_labels(a).cmp(&sorted_labels(b)))
    });
}

/// Fits every non-empty subset of `full_basis` (intercept always kept) and
/// ranks them by Mallows Cp.
pub fn best_subsets(
    data: &Dataset,
    full_basis: &TermBasis,
    rule: SubsetRanking,
) -> Result<SubsetSelection> {
    let k = full_basis.len();
    if k == 0 {
        return Err(Error::Argument("best subsets needs at least one term".into()));
    }
    if k > MAX_SUBSET_TERMS {
        return Err(Error::Argument(format!(
            "{k} terms exceed the exhaustive-search limit of {MAX_SUBSET_TERMS}"
        )));
    }
    let mut full = fit_ols(data, full_basis)?;
    let cp_defined = full_model_variance(&full).is_ok();

    let mut ranked = Vec::with_capacity((1 << k) - 1);
    let mut skipped = Vec::new();
    for mask in 1..(1u64 << k) {
        let basis = full_basis.subset(mask);
        match fit_ols(data, &basis) {
            Ok(mut model) => {
                model.mallows_cp = mallows_cp(&model, &full).ok();
                ranked.push(model);
            }
            Err(e) => skipped.push((basis.labels(), e)),
        }
    }
    full.mallows_cp = mallows_cp(&full, &full).ok();
    rank_models(&mut ranked, rule, cp_defined);
    Ok(SubsetSelection {
        full,
        ranked,
        skipped,
        cp_defined,
    })
}

/// Anything that can be evaluated over a factor vector.
pub trait Surface {
    fn evaluate(&self, x: &[f64]) -> f64;
}

/// `f(x) = constant + gradient . x + x' H x / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub constant: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

pub trait QuadraticSurface: Surface {
    fn quadratic_form(&self) -> QuadraticForm;
}

impl Surface for RegressionModel {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.predict(x)
    }
}

fn polynomial_form(basis: &TermBasis, intercept: f64, coefficients: &[f64]) -> QuadraticForm {
    let n = basis.factor_names().len();
    let mut gradient = DVector::zeros(n);
    let mut hessian = DMatrix::zeros(n, n);
    for (t, &c) in basis.terms().iter().zip(coefficients) {
        match *t {
            Term::Linear(i) => gradient[i] += c,
            Term::Square(i) => hessian[(i, i)] += 2.0 * c,
            Term::Cross(i, j) => {
                hessian[(i, j)] += c;
                hessian[(j, i)] += c;
            }
        }
    }
    QuadraticForm {
        constant: intercept,
        gradient,
        hessian,
    }
}

impl QuadraticSurface for RegressionModel {
    fn quadratic_form(&self) -> QuadraticForm {
        polynomial_form(&self.basis, self.intercept, &self.coefficients)
    }
}

/// Polynomial with given coefficients, e.g. a model read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub basis: TermBasis,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl Polynomial {
    pub fn new(basis: TermBasis, intercept: f64, coefficients: Vec<f64>) -> Result<Self> {
        if basis.len() != coefficients.len() {
            return Err(Error::Argument(format!(
                "{} coefficients for {} terms",
                coefficients.len(),
                basis.len()
            )));
        }
        Ok(Self {
            basis,
            intercept,
            coefficients,
        })
    }

    /// Parses labels such as `TOR`, `TOR*DEV` and `TOR^2`; factors are
    /// numbered in order of first appearance.
    pub fn from_labels(labels: &[&str], intercept: f64, coefficients: Vec<f64>) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut index = |name: &str| -> Result<usize> {
            let name = name.trim();
            if name.is_empty() || name.contains(['*', '^']) {
                return Err(Error::Argument(format!("bad factor name {name:?}")));
            }
            Ok(match names.iter().position(|f| f == name) {
                Some(i) => i,
                None => {
                    names.push(name.to_string());
                    names.len() - 1
                }
            })
        };
        let mut terms = Vec::with_capacity(labels.len());
        for label in labels {
            let term = if let Some(base) = label.trim().strip_suffix("^2") {
                Term::Square(index(base)?)
            } else if let Some((a, b)) = label.split_once('*') {
                Term::Cross(index(a)?, index(b)?)
            } else {
                Term::Linear(index(label)?)
            };
            terms.push(term);
        }
        Self::new(TermBasis::new(names, terms)?, intercept, coefficients)
    }

    pub fn factor_names(&self) -> &[String] {
        self.basis.factor_names()
    }
}

impl From<&RegressionModel> for Polynomial {
    fn from(m: &RegressionModel) -> Self {
        Self {
            basis: m.basis.clone(),
            intercept: m.intercept,
            coefficients: m.coefficients.clone(),
        }
    }
}

impl Surface for Polynomial {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .basis
                .terms()
                .iter()
                .zip(&self.coefficients)
                .map(|(t, c)| c * t.eval(x))
                .sum::<f64>()
    }
}

impl QuadraticSurface for Polynomial {
    fn quadratic_form(&self) -> QuadraticForm {
        polynomial_form(&self.basis, self.intercept, &self.coefficients)
    }
}

/// Published satisfaction model over (TOR in N m, DEV in m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatisfactionSurface {
    pub tor_sq: f64,
    pub dev_sq: f64,
    pub tor: f64,
    pub dev: f64,
    pub constant: f64,
}

impl Default for SatisfactionSurface {
    fn default() -> Self {
        Self {
            tor_sq: -18.01,
            dev_sq: -50.93,
            tor: 83.75,
            dev: 28.01,
            constant: -35.96,
        }
    }
}

impl SatisfactionSurface {
    pub fn at(&self, tor: f64, dev: f64) -> f64 {
        self.tor_sq * tor * tor + self.dev_sq * dev * dev + self.tor * tor + self.dev * dev + self.constant
    }
}

impl Surface for SatisfactionSurface {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.at(x[0], x[1])
    }
}

impl QuadraticSurface for SatisfactionSurface {
    fn quadratic_form(&self) -> QuadraticForm {
        QuadraticForm {
            constant: self.constant,
            gradient: DVector::from_vec(vec![self.tor, self.dev]),
            hessian: DMatrix::from_diagonal(&DVector::from_vec(vec![
                2.0 * self.tor_sq,
                2.0 * self.dev_sq,
            ])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryKind {
    Maximum,
    Minimum,
    Saddle,
}

impl fmt::Display for StationaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StationaryKind::Maximum => "maximum",
            StationaryKind::Minimum => "minimum",
            StationaryKind::Saddle => "saddle",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPoint {
    pub location: Vec<f64>,
    pub value: f64,
    pub kind: StationaryKind,
}

/// Solves `H x = -g` and classifies the point by the Hessian eigenvalues.
pub fn stationary_point<S: QuadraticSurface + ?Sized>(surface: &S) -> Result<StationaryPoint> {
    let form = surface.quadratic_form();
    let n = form.gradient.len();
    if n == 0 {
        return Err(Error::NoInteriorOptimum("surface has no factors".into()));
    }
    let eigen = SymmetricEigen::new(form.hessian.clone());
    let largest = eigen.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let smallest = eigen.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if largest == 0.0 || smallest <= 1e-12 * largest {
        return Err(Error::NoInteriorOptimum(format!(
            "Hessian is singular (eigenvalues {:?})",
            eigen.eigenvalues.as_slice()
        )));
    }
    let location = form
        .hessian
        .clone()
        .lu()
        .solve(&(-&form.gradient))
        .ok_or_else(|| Error::NoInteriorOptimum("Hessian is singular".into()))?;
    let kind = if eigen.eigenvalues.iter().all(|&v| v < 0.0) {
        StationaryKind::Maximum
    } else if eigen.eigenvalues.iter().all(|&v| v > 0.0) {
        StationaryKind::Minimum
    } else {
        StationaryKind::Saddle
    };
    let location: Vec<f64> = location.iter().copied().collect();
    Ok(StationaryPoint {
        value: surface.evaluate(&location),
        location,
        kind,
    })
}

/// Row-major grid of surface values; rows follow the first factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourGrid {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub values: Vec<f64>,
}

impl ContourGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.x2.len() + j]
    }

    /// Grid point with the largest value, as `(i, j)`.
    pub fn argmax(&self) -> (usize, usize) {
        let k = self
            .values
            .iter()
            .enumerate()
            .fold(0, |best, (k, v)| if *v > self.values[best] { k } else { best });
        (k / self.x2.len(), k % self.x2.len())
    }

    /// Writes `x1_name,x2_name,value_name` rows in grid order.
    pub fn write_csv<W: std::io::Write>(
        &self,
        mut out: W,
        names: [&str; 3],
    ) -> std::io::Result<()> {
        writeln!(out, "{}", names.join(","))?;
        for (i, a) in self.x1.iter().enumerate() {
            for (j, b) in self.x2.iter().enumerate() {
                writeln!(out, "{a},{b},{}", self.value(i, j))?;
            }
        }
        Ok(())
    }
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    let (lo, hi) = range;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Evaluates a two-factor surface on an evenly spaced grid, endpoints included.
pub fn contour_grid<S: Surface + ?Sized>(
    surface: &S,
    x1_range: (f64, f64),
    x2_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<ContourGrid> {
    for (name, (lo, hi)) in [("x1", x1_range), ("x2", x2_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Argument(format!("{name} range [{lo}, {hi}] is empty")));
        }
    }
    if resolution.0 < 2 || resolution.1 < 2 {
        return Err(Error::Argument(format!(
            "grid resolution must be at least 2 per axis, got {resolution:?}"
        )));
    }
    let x1 = linspace(x1_range, resolution.0);
    let x2 = linspace(x2_range, resolution.1);
    let values = x1
        .iter()
        .flat_map(|&a| x2.iter().map(move |&b| surface.evaluate(&[a, b])))
        .collect();
    Ok(ContourGrid { x1, x2, values })
}
