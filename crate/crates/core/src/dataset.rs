//! Datasets and ground truth.
//!
//! `GroundTruth` holds the hidden values or metric that only oracles and
//! evaluators may read. Algorithms receive item counts and oracle handles,
//! never this type, which enforces the access model by construction.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a record in a dataset, stable for the dataset's lifetime.
pub type ItemId = u32;

/// Tolerance used when validating symmetry and the triangle inequality of
/// explicit distance matrices.
pub const METRIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    PointsCsv,
    Matrix,
    ValuesCsv,
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputFormat::PointsCsv => write!(f, "points-csv"),
            InputFormat::Matrix => write!(f, "matrix"),
            InputFormat::ValuesCsv => write!(f, "values-csv"),
        }
    }
}

#[derive(Debug, Clone)]
enum Data {
    /// Totally ordered hidden values.
    Values(Vec<f64>),
    /// Row-major point coordinates in `dim`-dimensional Euclidean space.
    Points { coords: Vec<f64>, dim: usize },
    /// Full n-by-n distance matrix, validated as a metric on load.
    Matrix { dist: Vec<f64>, n: usize },
}

/// Hidden ground truth: values, Euclidean points, or an explicit metric.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    data: Data,
    labels: Option<Vec<usize>>,
}

impl GroundTruth {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySet);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values contain NaN or infinity"));
        }
        Ok(GroundTruth { data: Data::Values(values), labels: None })
    }

    pub fn from_points(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid("point buffer does not match dimension"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("coordinates contain NaN or infinity"));
        }
        Ok(GroundTruth { data: Data::Points { coords, dim }, labels: None })
    }

    pub fn from_matrix(dist: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || dist.len() != n * n {
            return Err(Error::invalid("matrix buffer does not match n"));
        }
        validate_metric(&dist, n)?;
        Ok(GroundTruth { data: Data::Matrix { dist, n }, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::invalid("label count does not match item count"));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        match &self.data {
            Data::Values(v) => v.len(),
            Data::Points { coords, dim } => coords.len() / dim,
            Data::Matrix { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> &'static str {
        match &self.data {
            Data::Values(_) => "values",
            Data::Points { .. } => "points",
            Data::Matrix { .. } => "matrix",
        }
    }

    pub fn has_values(&self) -> bool {
        matches!(self.data, Data::Values(_))
    }

    pub fn has_distances(&self) -> bool {
        !self.has_values()
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.data {
            Data::Points { dim, .. } => Some(*dim),
            _ => None,
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn check_id(&self, id: ItemId) -> Result<()> {
        if (id as usize) < self.len() {
            Ok(())
        } else {
            Err(Error::ItemOutOfRange(id, self.len()))
        }
    }

    /// Hidden value of a record (Values mode).
    pub fn value(&self, id: ItemId) -> f64 {
        match &self.data {
            Data::Values(v) => v[id as usize],
            _ => panic!("value() called on distance-mode ground truth"),
        }
    }

    /// True distance between two records; symmetric, zero on the diagonal.
    /// Exposed only to oracles and evaluators.
    pub fn distance(&self, a: ItemId, b: ItemId) -> f64 {
        match &self.data {
            Data::Values(_) => panic!("distance() called on values-mode ground truth"),
            Data::Points { coords, dim } => {
                if a == b {
                    return 0.0;
                }
                let (a, b) = (a as usize, b as usize);
                if *dim == 2 {
                    let dx = coords[2 * a] - coords[2 * b];
                    let dy = coords[2 * a + 1] - coords[2 * b + 1];
                    return (dx * dx + dy * dy).sqrt();
                }
                let mut s = 0.0;
                for t in 0..*dim {
                    let d = coords[a * dim + t] - coords[b * dim + t];
                    s += d * d;
                }
                s.sqrt()
            }
            Data::Matrix { dist, n } => dist[a as usize * n + b as usize],
        }
    }

    pub fn ids(&self) -> Vec<ItemId> {
        (0..self.len() as ItemId).collect()
    }
}

fn validate_metric(dist: &[f64], n: usize) -> Result<()> {
    for i in 0..n {
        for j in 0..n {
            let d = dist[i * n + j];
            if !d.is_finite() {
                return Err(Error::NotAMetric(format!("entry ({i},{j}) is not finite")));
            }
            if d < 0.0 {
                return Err(Error::NotAMetric(format!("entry ({i},{j}) is negative")));
            }
            if i == j && d != 0.0 {
                return Err(Error::NotAMetric(format!("nonzero diagonal at {i}")));
            }
            if (d - dist[j * n + i]).abs() > METRIC_TOLERANCE {
                return Err(Error::NotAMetric(format!("asymmetry at ({i},{j})")));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if dist[i * n + j] > dist[i * n + k] + dist[k * n + j] + METRIC_TOLERANCE {
                    return Err(Error::NotAMetric(format!(
                        "triangle violation: d({i},{j}) > d({i},{k}) + d({k},{j})"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Load a dataset file in one of the external formats.
pub fn load_dataset(path: impl AsRef<Path>, format: InputFormat) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, format)
}

pub fn parse_dataset(text: &str, format: InputFormat) -> Result<GroundTruth> {
    match format {
        InputFormat::ValuesCsv => parse_values_csv(text),
        InputFormat::PointsCsv => parse_points_csv(text),
        InputFormat::Matrix => parse_matrix(text),
    }
}

fn parse_values_csv(text: &str) -> Result<GroundTruth> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::parse("empty values-csv"))?;
    if header.trim() != "value" {
        return Err(Error::parse(format!("values-csv header must be `value`, got `{header}`")));
    }
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|e| Error::parse(format!("values-csv row {}: {e}", i + 2)))?;
        values.push(v);
    }
    GroundTruth::from_values(values)
}

fn parse_points_csv(text: &str) -> Result<GroundTruth> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::parse("empty points-csv"))?;
    let cols: Vec<&str> = header.split(',').map(|c| c.trim()).collect();
    let labeled = cols.last() == Some(&"label");
    let dim = if labeled { cols.len() - 1 } else { cols.len() };
    if dim == 0 {
        return Err(Error::parse("points-csv has no coordinate columns"));
    }
    for (t, c) in cols.iter().take(dim).enumerate() {
        if *c != format!("x{t}") {
            return Err(Error::parse(format!("points-csv column {t} must be `x{t}`, got `{c}`")));
        }
    }
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(|c| c.trim()).collect();
        if fields.len() != cols.len() {
            return Err(Error::parse(format!("points-csv row {}: wrong column count", i + 2)));
        }
        for f in &fields[..dim] {
            let v: f64 =
                f.parse().map_err(|e| Error::parse(format!("points-csv row {}: {e}", i + 2)))?;
            coords.push(v);
        }
        if labeled {
            let l: usize = fields[dim]
                .parse()
                .map_err(|e| Error::parse(format!("points-csv row {}: label: {e}", i + 2)))?;
            labels.push(l);
        }
    }
    let g = GroundTruth::from_points(coords, dim)?;
    if labeled {
        g.with_labels(labels)
    } else {
        Ok(g)
    }
}

fn parse_matrix(text: &str) -> Result<GroundTruth> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::parse("empty matrix file"))?
        .trim()
        .parse()
        .map_err(|e| Error::parse(format!("matrix size line: {e}")))?;
    let mut dist = Vec::with_capacity(n * n);
    for i in 0..n {
        let row = lines.next().ok_or_else(|| Error::parse(format!("matrix missing row {i}")))?;
        let entries: Vec<f64> = row
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(format!("matrix row {i}: {e}")))?;
        if entries.len() != n {
            return Err(Error::parse(format!("matrix row {i} has {} entries, expected {n}", entries.len())));
        }
        dist.extend(entries);
    }
    GroundTruth::from_matrix(dist, n)
}

/// Render a points-mode ground truth back to the points-csv format.
pub fn to_points_csv(g: &GroundTruth) -> Result<String> {
    let dim = g.dim().ok_or_else(|| Error::invalid("not points mode"))?;
    let mut out = String::new();
    for t in 0..dim {
        if t > 0 {
            out.push(',');
        }
        out.push_str(&format!("x{t}"));
    }
    if g.labels().is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    let Data::Points { coords, .. } = &g.data else { unreachable!() };
    for i in 0..g.len() {
        for t in 0..dim {
            if t > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", coords[i * dim + t]));
        }
        if let Some(labels) = g.labels() {
            out.push_str(&format!(",{}", labels[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn to_values_csv(g: &GroundTruth) -> Result<String> {
    if !g.has_values() {
        return Err(Error::invalid("not values mode"));
    }
    let mut out = String::from("value\n");
    for i in 0..g.len() {
        out.push_str(&format!("{}\n", g.value(i as ItemId)));
    }
    Ok(out)
}

/// Geometric chain `v_i = (1 + mu - eps)^i`, i = 1..n. Every adjacent pair
/// lies inside the adversarial band for error parameter `mu`.
pub fn gen_geometric_chain(n: usize, mu: f64, eps: f64) -> Result<GroundTruth> {
    if n < 2 {
        return Err(Error::invalid("chain needs n >= 2"));
    }
    if !(eps > 0.0 && eps < mu) {
        return Err(Error::invalid("chain requires 0 < eps < mu"));
    }
    let base = 1.0 + mu - eps;
    let values = (1..=n).map(|i| base.powi(i as i32)).collect();
    GroundTruth::from_values(values)
}

/// Planted Gaussian blobs in the plane. Blob centers sit on a circle so that
/// the minimum inter-center distance is `separation` times the intra-blob
/// radius (points are truncated at three standard deviations). Labels are set
/// to blob indices and the smallest blob has at least `m_min` points.
pub fn gen_planted_clusters(
    n: usize,
    k: usize,
    separation: f64,
    m_min: usize,
    seed: u64,
) -> Result<GroundTruth> {
    if k == 0 || n == 0 {
        return Err(Error::invalid("need n >= 1 and k >= 1"));
    }
    if k * m_min > n {
        return Err(Error::invalid(format!("infeasible sizes: k*m_min = {} > n = {n}", k * m_min)));
    }
    if separation <= 0.0 {
        return Err(Error::invalid("separation must be positive"));
    }
    let intra_radius = 3.0; // 3-sigma truncation below
    let mut centers = Vec::with_capacity(k);
    if k == 1 {
        centers.push((0.0, 0.0));
    } else {
        // chord between adjacent centers = separation * intra radius
        let ring = separation * intra_radius / (2.0 * (std::f64::consts::PI / k as f64).sin());
        for j in 0..k {
            let a = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            centers.push((ring * a.cos(), ring * a.sin()));
        }
    }
    let mut sizes = vec![m_min; k];
    let mut rest = n - k * m_min;
    let mut j = 0;
    while rest > 0 {
        sizes[j % k] += 1;
        j += 1;
        rest -= 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut coords = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for (blob, &size) in sizes.iter().enumerate() {
        let (cx, cy) = centers[blob];
        for _ in 0..size {
            let (dx, dy) = loop {
                let dx: f64 = normal.sample(&mut rng);
                let dy: f64 = normal.sample(&mut rng);
                if dx * dx + dy * dy <= intra_radius * intra_radius {
                    break (dx, dy);
                }
            };
            coords.push(cx + dx);
            coords.push(cy + dy);
            labels.push(blob);
        }
    }
    GroundTruth::from_points(coords, 2)?.with_labels(labels)
}

/// Uniform random values in (0, 1], seeded.
pub fn gen_uniform_values(n: usize, seed: u64) -> Result<GroundTruth> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n).map(|_| rng.gen_range(f64::MIN_POSITIVE..=1.0)).collect();
    GroundTruth::from_values(values)
}

/// Uniform random points in the unit square, seeded.
pub fn gen_uniform_points(n: usize, dim: usize, seed: u64) -> Result<GroundTruth> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * dim).map(|_| rng.gen_range(0.0..1.0)).collect();
    GroundTruth::from_points(coords, dim)
}
