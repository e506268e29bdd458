//! Rate fitting and rank correlation for the convergence studies.

/// Least-squares fit of log(value) against log(h).
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_used: usize,
    pub n_excluded: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FitOutcome {
    Fit(RateFit),
    /// Too few usable points, or all values at the solver-tolerance floor.
    NotApplicable(String),
}

impl FitOutcome {
    pub fn slope(&self) -> Option<f64> {
        match self {
            FitOutcome::Fit(f) => Some(f.slope),
            FitOutcome::NotApplicable(_) => None,
        }
    }
}

/// Values below this are treated as the solver-tolerance floor: a rate fit over
/// such values measures roundoff, not convergence.
pub const FIT_FLOOR: f64 = 1e-10;

/// Fits `value ≈ C · h^slope` through (h, value) pairs; non-positive values are
/// excluded.
pub fn fit_rate(pairs: &[(f64, f64)]) -> FitOutcome {
    let usable: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(h, v)| h > 0.0 && v > 0.0)
        .collect();
    let n_excluded = pairs.len() - usable.len();
    if usable.len() < 2 {
        return FitOutcome::NotApplicable(format!(
            "need at least 2 positive pairs, have {}",
            usable.len()
        ));
    }
    if usable.iter().all(|&(_, v)| v < FIT_FLOOR) {
        return FitOutcome::NotApplicable("all values at the solver-tolerance floor".into());
    }

    let pts: Vec<(f64, f64)> = usable.iter().map(|&(h, v)| (h.ln(), v.ln())).collect();
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return FitOutcome::NotApplicable("all mesh sizes identical".into());
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    FitOutcome::Fit(RateFit {
        slope,
        intercept,
        r_squared,
        n_used: usable.len(),
        n_excluded,
    })
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// sequence has no variation.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return None;
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..a.len() {
        let xa = ra[i] - mean;
        let xb = rb[i] - mean;
        num += xa * xb;
        da += xa * xa;
        db += xb * xb;
    }
    if da == 0.0 || db == 0.0 {
        return None;
    }
    Some(num / (da * db).sqrt())
}
