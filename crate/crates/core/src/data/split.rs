use std::io::Write;

use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Repeated stratified k-fold plan. Folds are ordered by (repeat, fold).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub n_splits: usize,
    pub n_repeats: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl SplitPlan {
    /// Audit export: one row per (repeat, fold, index) with its role.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["repeat", "fold", "index", "role"])?;
        for f in &self.folds {
            for (role, idx) in [("train", &f.train), ("test", &f.test)] {
                for i in idx {
                    w.write_record([
                        f.repeat.to_string(),
                        f.fold.to_string(),
                        i.to_string(),
                        role.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Per repeat: shuffle each class, then deal members round-robin into the
/// folds. Majority dealing continues where minority dealing stopped, so fold
/// sizes differ by at most one.
///
/// A class may have fewer members than `n_splits` (some test folds then lack
/// it), but it needs at least two so every training split contains it.
pub fn stratified_kfold(ds: &Dataset, n_splits: usize, n_repeats: usize, seed: u64) -> Result<SplitPlan> {
    if n_splits < 2 || n_splits > ds.len() {
        return Err(Error::Config(format!("n_splits must be in [2, n], got {n_splits}")));
    }
    if n_repeats < 1 {
        return Err(Error::Config("n_repeats must be >= 1".into()));
    }
    let pos = ds.indices_of(1);
    let neg = ds.indices_of(0);
    for (name, members) in [("minority", &pos), ("majority", &neg)] {
        if members.len() < 2 {
            return Err(Error::Stratification(format!(
                "{name} class of `{}` has {} members; at least 2 are needed",
                ds.name,
                members.len()
            )));
        }
    }

    let mut folds = Vec::with_capacity(n_splits * n_repeats);
    for repeat in 0..n_repeats {
        let mut rng = rng_from_seed(derive_seed(seed, &[repeat as u64]));
        let mut pos = pos.clone();
        let mut neg = neg.clone();
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let mut assignment = vec![0usize; ds.len()];
        for (k, &i) in pos.iter().chain(&neg).enumerate() {
            assignment[i] = k % n_splits;
        }
        for fold in 0..n_splits {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..ds.len()).partition(|&i| assignment[i] == fold);
            folds.push(Fold { repeat, fold, train, test });
        }
    }
    Ok(SplitPlan {
        n_splits,
        n_repeats,
        seed,
        folds,
    })
}

/// Stratified random subset of `round(fraction·n)` rows. The minority keeps
/// `round(fraction·N₊)` rows, but never fewer than one. Rows keep their
/// original relative order.
pub fn subsample_fraction(ds: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Domain(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let total = (fraction * ds.len() as f64).round() as usize;
    let mut pos = ds.indices_of(1);
    let mut neg = ds.indices_of(0);
    let n_pos = ((fraction * pos.len() as f64).round() as usize).max(1).min(pos.len());
    let n_neg = total.saturating_sub(n_pos).min(neg.len());
    if n_neg == 0 || pos.is_empty() {
        return Err(Error::DegenerateDataset(format!(
            "fraction {fraction} of `{}` leaves a class empty",
            ds.name
        )));
    }
    let mut rng = rng_from_seed(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut keep: Vec<usize> = pos[..n_pos].iter().chain(&neg[..n_neg]).copied().collect();
    keep.sort_unstable();
    let mut out = ds.subset(&keep);
    out.name = ds.name.clone();
    Ok(out)
}
