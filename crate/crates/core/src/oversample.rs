//! Baseline oversamplers. Each appends synthetic rows to a copy of the
//! input; original rows are never modified.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Beta, Distribution};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Vanilla,
    Smote,
    PolyfitStar,
    Mixup,
    Dragan,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Vanilla,
        Method::Smote,
        Method::PolyfitStar,
        Method::Mixup,
        Method::Dragan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::Smote => "smote",
            Method::PolyfitStar => "polyfit",
            Method::Mixup => "mixup",
            Method::Dragan => "dragan",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vanilla" | "none" => Ok(Method::Vanilla),
            "smote" => Ok(Method::Smote),
            "polyfit" | "polyfit-star" | "polynom_fit_smote" | "polynom-fit-smote" => {
                Ok(Method::PolyfitStar)
            }
            "mixup" => Ok(Method::Mixup),
            "dragan" => Ok(Method::Dragan),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

pub const DEFAULT_MIXUP_ALPHA: f64 = 0.2;

/// Parameters for one baseline resampling call.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplePlan {
    pub method: Method,
    pub target_count: usize,
    /// `None` selects `min(5, N₊ − 1)`.
    pub k_neighbors: Option<usize>,
    pub alpha: f64,
    pub seed: u64,
}

impl ResamplePlan {
    pub fn balanced(method: Method, ds: &Dataset, seed: u64) -> Self {
        Self {
            method,
            target_count: target_count_balance(ds),
            k_neighbors: None,
            alpha: DEFAULT_MIXUP_ALPHA,
            seed,
        }
    }
}

/// Applies `plan` with one of the baseline methods. draGAN is dispatched by
/// the harness, not here.
pub fn resample(ds: &Dataset, plan: &ResamplePlan) -> Result<Dataset> {
    match plan.method {
        Method::Vanilla => Ok(ds.clone()),
        Method::Smote => {
            let k = match plan.k_neighbors {
                Some(k) => k,
                None => default_k(ds),
            };
            smote(ds, plan.target_count, k, plan.seed)
        }
        Method::PolyfitStar => polyfit_star(ds, plan.target_count, plan.seed),
        Method::Mixup => mixup(ds, plan.target_count, plan.alpha, plan.seed),
        Method::Dragan => Err(Error::Config(
            "draGAN is not a baseline resampler; use dragan::resample_with_dragan".into(),
        )),
    }
}

/// `N₋ − N₊`, the number of minority rows that equalizes the classes.
pub fn target_count_balance(ds: &Dataset) -> usize {
    let (neg, pos) = ds.class_counts();
    neg.saturating_sub(pos)
}

pub fn default_k(ds: &Dataset) -> usize {
    let (_, pos) = ds.class_counts();
    5.min(pos.saturating_sub(1)).max(1)
}

fn minority_rows(ds: &Dataset) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = ds.indices_of(1).iter().map(|&i| ds.features.row(i).to_vec()).collect();
    if rows.len() < 2 {
        return Err(Error::InsufficientMinority {
            required: 2,
            found: rows.len(),
        });
    }
    Ok(rows)
}

/// Indices of the `k` nearest other rows of `points[i]` (Euclidean, ties by
/// index).
fn nearest(points: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| (euclid2(&points[i], p), j))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, j)| j).collect()
}

fn euclid2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// SMOTE: `x_new = x_i + ε·(x_j − x_i)`, `ε ~ U(0, 1)`, with `x_i` a random
/// minority row and `x_j` drawn from its `k` nearest minority neighbors.
pub fn smote(ds: &Dataset, target_count: usize, k: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed);
    smote_with(ds, target_count, k, &mut rng, |r| r.random::<f64>())
}

pub(crate) fn smote_with(
    ds: &Dataset,
    target_count: usize,
    k: usize,
    rng: &mut Rng,
    mut draw_eps: impl FnMut(&mut Rng) -> f64,
) -> Result<Dataset> {
    let minority = minority_rows(ds)?;
    if k == 0 || k > minority.len() - 1 {
        return Err(Error::Config(format!(
            "k_neighbors must be in [1, {}], got {k}",
            minority.len() - 1
        )));
    }
    let neighbors: Vec<Vec<usize>> = (0..minority.len()).map(|i| nearest(&minority, i, k)).collect();
    let mut out = ds.clone();
    let mut row = vec![0.0; ds.dim()];
    for _ in 0..target_count {
        let i = rng.random_range(0..minority.len());
        let j = neighbors[i][rng.random_range(0..k)];
        let eps = draw_eps(rng);
        for (c, v) in row.iter_mut().enumerate() {
            *v = minority[i][c] + eps * (minority[j][c] - minority[i][c]);
        }
        out.push(&row, 1)?;
    }
    Ok(out)
}

/// Polynomial-fit SMOTE with the star topology: new points are drawn
/// uniformly on the segments joining the minority centroid to each minority
/// row, cycling through the rows in shuffled order.
pub fn polyfit_star(ds: &Dataset, target_count: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed);
    polyfit_star_with(ds, target_count, &mut rng, |r| r.random::<f64>())
}

pub(crate) fn polyfit_star_with(
    ds: &Dataset,
    target_count: usize,
    rng: &mut Rng,
    mut draw_t: impl FnMut(&mut Rng) -> f64,
) -> Result<Dataset> {
    let minority = minority_rows(ds)?;
    let d = ds.dim();
    let mut centroid = vec![0.0; d];
    for r in &minority {
        centroid.iter_mut().zip(r).for_each(|(c, v)| *c += v);
    }
    centroid.iter_mut().for_each(|c| *c /= minority.len() as f64);

    let mut order: Vec<usize> = (0..minority.len()).collect();
    order.shuffle(rng);
    let mut out = ds.clone();
    let mut row = vec![0.0; d];
    for n in 0..target_count {
        let tip = &minority[order[n % order.len()]];
        let t = draw_t(rng);
        for c in 0..d {
            row[c] = centroid[c] + t * (tip[c] - centroid[c]);
        }
        out.push(&row, 1)?;
    }
    Ok(out)
}

/// MixUp: convex combinations of two distinct rows from either class with
/// `λ ~ Beta(α, α)`; the mixed label is rounded, with exactly one half
/// going to the minority.
pub fn mixup(ds: &Dataset, target_count: usize, alpha: f64, seed: u64) -> Result<Dataset> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("mixup alpha must be positive, got {alpha}")));
    }
    let beta = Beta::new(alpha, alpha).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    mixup_with(ds, target_count, &mut rng, |r| beta.sample(r))
}

pub(crate) fn mixup_with(
    ds: &Dataset,
    target_count: usize,
    rng: &mut Rng,
    mut draw_lambda: impl FnMut(&mut Rng) -> f64,
) -> Result<Dataset> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::DegenerateDataset("mixup needs at least two rows".into()));
    }
    let mut out = ds.clone();
    let mut row = vec![0.0; ds.dim()];
    for _ in 0..target_count {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let lambda = draw_lambda(rng);
        let (xi, xj) = (ds.features.row(i), ds.features.row(j));
        for c in 0..row.len() {
            row[c] = lambda * xi[c] + (1.0 - lambda) * xj[c];
        }
        let y = lambda * f64::from(ds.labels[i]) + (1.0 - lambda) * f64::from(ds.labels[j]);
        out.push(&row, round_label(y))?;
    }
    Ok(out)
}

/// Rounds a soft label at 0.5, with 0.5 itself going to the minority.
pub fn round_label(y: f64) -> u8 {
    u8::from(y >= 0.5)
}
