//! Local power-law fits of `Z` near its near-zero minima.
//!
//! A finite Fisher information rules out zeros where `Z` behaves like
//! `C|y − y⋆|^β` with `β ≤ 1`. The fit window is a heuristic: the correction
//! terms are only known to be of lower order, so the two nodes closest to
//! `y⋆` are dropped and the remaining ones are fitted in log-log scale.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::fisher_functional;
use crate::grid::Field;
use crate::solver::Trajectory;
use crate::state::State;

/// Added to `Z − z_min` before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-30;
/// Candidates must have at least this many nodes between them and either end.
pub const MIN_SIDE_NODES: usize = 6;
/// Nodes closest to `y⋆` left out of the regression.
pub const EXCLUDED_NEAREST: usize = 2;
pub const ADMISSIBLE_EXPONENT: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodalSettings {
    pub zero_threshold: f64,
    /// Nodes per side in the fit window, counting the excluded ones.
    pub half_width: usize,
    /// Minimum `r²` for a fit to count as high confidence.
    pub min_r2: f64,
    /// Shift used for the Fisher functional reported next to each snapshot.
    pub fisher_delta: f64,
}

impl Default for NodalSettings {
    fn default() -> Self {
        Self { zero_threshold: 1e-3, half_width: 12, min_r2: 0.98, fisher_delta: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalCandidate {
    pub index: usize,
    pub y_star: f64,
    pub z_min: f64,
    /// Inclusive node range `[start, end]` around `index`.
    pub window: (usize, usize),
    pub beta_hat: f64,
    pub r2: f64,
    pub admissible: bool,
    /// All fitted values coincide, so no slope is defined.
    pub degenerate: bool,
}

impl NodalCandidate {
    fn unfitted(z: &Field, index: usize, half_width: usize) -> Self {
        let n = z.len();
        Self {
            index,
            y_star: z.grid().nodes()[index],
            z_min: z[index],
            window: (index.saturating_sub(half_width), (index + half_width).min(n - 1)),
            beta_hat: f64::NAN,
            r2: 0.0,
            admissible: true,
            degenerate: false,
        }
    }

    pub fn is_high_confidence_inadmissible(&self, min_r2: f64) -> bool {
        !self.admissible && !self.degenerate && self.r2 >= min_r2
    }
}

/// Local minima of `Z` at or below `zero_threshold`, at least
/// [`MIN_SIDE_NODES`] from either end. A flat run of equal values counts as
/// one minimum at its center. Minima closer than 12 cells are merged into
/// the lower one.
pub fn find_nodal_candidates(z: &Field, zero_threshold: f64) -> Vec<NodalCandidate> {
    find_with_width(z, zero_threshold, NodalSettings::default().half_width)
}

fn find_with_width(z: &Field, zero_threshold: f64, half_width: usize) -> Vec<NodalCandidate> {
    let vals = z.values();
    let n = vals.len();
    let mut minima: Vec<usize> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && vals[end + 1] == vals[start] {
            end += 1;
        }
        let left_higher = start == 0 || vals[start - 1] > vals[start];
        let right_higher = end + 1 == n || vals[end + 1] > vals[start];
        if left_higher && right_higher && vals[start] <= zero_threshold {
            minima.push((start + end) / 2);
        }
        start = end + 1;
    }
    minima.retain(|&i| i >= MIN_SIDE_NODES && i + MIN_SIDE_NODES < n);

    let mut merged: Vec<usize> = Vec::new();
    for i in minima {
        match merged.last_mut() {
            Some(last) if i - *last < 12 => {
                if vals[i] < vals[*last] {
                    *last = i;
                }
            }
            _ => merged.push(i),
        }
    }
    merged.into_iter().map(|i| NodalCandidate::unfitted(z, i, half_width)).collect()
}

/// Least-squares slope of `log(Z − z_min + 10⁻³⁰)` against `log|y − y⋆|`
/// over the candidate window, without the two nodes nearest `y⋆`.
pub fn fit_local_exponent(z: &Field, candidate: &NodalCandidate, zero_threshold: f64) -> NodalCandidate {
    let nodes = z.grid().nodes();
    let (lo, hi) = candidate.window;
    let c = candidate.index;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .filter(|&i| i.abs_diff(c) > EXCLUDED_NEAREST)
        .map(|i| ((nodes[i] - candidate.y_star).abs().ln(), (z[i] - candidate.z_min + LOG_FLOOR).ln()))
        .unzip();
    let mut out = candidate.clone();
    let fit = least_squares(&xs, &ys);
    match fit {
        Some((slope, r2)) => {
            out.beta_hat = slope;
            out.r2 = r2;
            out.degenerate = false;
        }
        None => {
            out.beta_hat = 0.0;
            out.r2 = 0.0;
            out.degenerate = true;
        }
    }
    out.admissible = out.beta_hat > ADMISSIBLE_EXPONENT || out.z_min > zero_threshold;
    out
}

/// Slope and `r²` of the regression of `ys` on `xs`; `None` when either has
/// no spread.
fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 || syy <= 1e-24 * n {
        return None;
    }
    Some((sxy / sxx, sxy * sxy / (sxx * syy)))
}

pub fn analyze_profile(z: &Field, settings: &NodalSettings) -> Vec<NodalCandidate> {
    find_with_width(z, settings.zero_threshold, settings.half_width)
        .iter()
        .map(|c| fit_local_exponent(z, c, settings.zero_threshold))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNodal {
    pub t: f64,
    pub fisher: f64,
    pub candidates: Vec<NodalCandidate>,
}

/// One line of the nodal report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalRow {
    pub t: f64,
    pub y_star: f64,
    pub z_min: f64,
    pub beta_hat: f64,
    pub r2: f64,
    pub admissible: bool,
    pub degenerate: bool,
    pub fisher: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalReport {
    pub settings: NodalSettings,
    pub snapshots: Vec<SnapshotNodal>,
    /// No snapshot has an inadmissible, non-degenerate fit with `r² ≥ min_r2`.
    pub pass: bool,
}

impl NodalReport {
    pub fn rows(&self) -> Vec<NodalRow> {
        self.snapshots
            .iter()
            .flat_map(|s| {
                s.candidates.iter().map(move |c| NodalRow {
                    t: s.t,
                    y_star: c.y_star,
                    z_min: c.z_min,
                    beta_hat: c.beta_hat,
                    r2: c.r2,
                    admissible: c.admissible,
                    degenerate: c.degenerate,
                    fisher: s.fisher,
                })
            })
            .collect()
    }

    pub fn high_confidence_inadmissible(&self) -> Vec<NodalRow> {
        let min_r2 = self.settings.min_r2;
        self.rows().into_iter().filter(|r| !r.admissible && !r.degenerate && r.r2 >= min_r2).collect()
    }
}

pub fn classify_states(states: &[&State], settings: &NodalSettings) -> NodalReport {
    let snapshots: Vec<SnapshotNodal> = states
        .par_iter()
        .map(|s| SnapshotNodal {
            t: s.t,
            fisher: fisher_functional(s, settings.fisher_delta),
            candidates: analyze_profile(&s.z, settings),
        })
        .collect();
    let pass = snapshots
        .iter()
        .all(|s| s.candidates.iter().all(|c| !c.is_high_confidence_inadmissible(settings.min_r2)));
    NodalReport { settings: *settings, snapshots, pass }
}

pub fn classify_trajectory(traj: &Trajectory, settings: &NodalSettings) -> NodalReport {
    let states: Vec<&State> = traj.states().collect();
    classify_states(&states, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, DomainKind};
    use proptest::prelude::*;

    fn profile(n: usize, f: impl Fn(f64) -> f64) -> Field {
        Field::from_fn(build_grid(DomainKind::UnitInterval, n).unwrap(), f).unwrap()
    }

    fn fitted(z: &Field) -> Vec<NodalCandidate> {
        analyze_profile(z, &NodalSettings::default())
    }

    #[test]
    fn flat_profile_has_no_candidates() {
        assert!(find_nodal_candidates(&profile(100, |_| 0.5), 1e-3).is_empty());
    }

    #[test]
    fn single_parabola() {
        let c = find_nodal_candidates(&profile(400, |y| (y - 0.5).powi(2)), 1e-3);
        assert_eq!(c.len(), 1);
        assert!((c[0].y_star - 0.5).abs() < 1e-12);
    }

    #[test]
    fn double_well() {
        let z = profile(400, |y| (y - 0.25).powi(2).min((y - 0.75).powi(2)));
        let c = find_nodal_candidates(&z, 1e-3);
        let ys: Vec<f64> = c.iter().map(|c| c.y_star).collect();
        assert_eq!(ys.len(), 2, "{ys:?}");
        assert!((ys[0] - 0.25).abs() < 1e-9 && (ys[1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn close_minima_merge() {
        // Two zeros 5 cells apart.
        let z = profile(400, |y| ((y - 0.5) * (y - 0.5125)).abs());
        assert_eq!(find_nodal_candidates(&z, 1e-3).len(), 1);
    }

    #[test]
    fn minima_near_the_ends_are_ignored() {
        let z = profile(100, |y| (y - 0.02).powi(2));
        assert!(find_nodal_candidates(&z, 1e-3).is_empty());
    }

    #[test]
    fn recovers_synthetic_exponents() {
        for beta in [1.0, 1.25, 1.5, 2.0, 3.0] {
            let c = fitted(&profile(400, |y| (y - 0.5).abs().powf(beta)));
            assert_eq!(c.len(), 1);
            assert!((c[0].beta_hat - beta).abs() <= 0.05, "beta {beta}: {}", c[0].beta_hat);
            assert!(c[0].r2 > 0.999);
            assert_eq!(c[0].admissible, beta > 1.05, "beta {beta}");
        }
    }

    #[test]
    fn corner_is_high_confidence_inadmissible() {
        let c = fitted(&profile(400, |y| (y - 0.5).abs()));
        assert!(c[0].is_high_confidence_inadmissible(0.98));
    }

    #[test]
    fn identically_zero_is_degenerate() {
        let c = fitted(&profile(200, |_| 0.0));
        assert_eq!(c.len(), 1);
        assert!(c[0].degenerate && !c[0].is_high_confidence_inadmissible(0.98));
    }

    #[test]
    fn raised_minimum_is_admissible() {
        let c = analyze_profile(
            &profile(400, |y| 0.01 + (y - 0.5).abs()),
            &NodalSettings { zero_threshold: 0.05, ..Default::default() },
        );
        assert!(!c[0].admissible);
        let c = analyze_profile(
            &profile(400, |y| 0.01 + (y - 0.5).abs()),
            &NodalSettings { zero_threshold: 1e-3, ..Default::default() },
        );
        assert!(c.is_empty());
    }

    proptest! {
        #[test]
        fn admissibility_is_scale_invariant(beta in 0.5f64..3.5, scale in 1e-3f64..1e3) {
            let z = profile(400, |y| (y - 0.5).abs().powf(beta));
            let zs = profile(400, |y| scale * (y - 0.5).abs().powf(beta));
            let (a, b) = (&fitted(&z)[0], &fitted(&zs)[0]);
            prop_assert_eq!(a.admissible, b.admissible);
            prop_assert!((a.beta_hat - b.beta_hat).abs() < 1e-9);
        }
    }
}
