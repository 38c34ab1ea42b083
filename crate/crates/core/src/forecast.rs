//! Forecast the off-sample state from the tail of the train labels.

use serde::{Deserialize, Serialize};

use crate::data::ReturnsPanel;
use crate::error::{Error, Result};
use crate::icc::{assign_clusters, calibrate_gamma, ClusterAssignment, ClusterConfig};

pub const DEFAULT_PREVALENCE_WINDOW: usize = 20;

/// `sparse0` is the state forecast to dominate the test period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLabeling {
    pub sparse0: usize,
    pub sparse1: usize,
    pub prevalence_window: usize,
    /// Occurrences of each state inside the window, indexed by state.
    pub counts: Vec<usize>,
}

/// Label the more frequent state over the last `prevalence_window` days as
/// Sparse 0. An exact tie goes to the state of the final train day.
pub fn label_states(labels: &[usize], k: usize, prevalence_window: usize) -> Result<StateLabeling> {
    if k != 2 {
        return Err(Error::Unsupported(format!(
            "state labeling needs exactly 2 states, got {k}"
        )));
    }
    if prevalence_window == 0 || prevalence_window > labels.len() {
        return Err(Error::Validation(format!(
            "prevalence window {prevalence_window} must be in 1..={}",
            labels.len()
        )));
    }
    let tail = &labels[labels.len() - prevalence_window..];
    let mut counts = vec![0usize; 2];
    for &l in tail {
        if l >= 2 {
            return Err(Error::Validation(format!("label {l} out of range for 2 states")));
        }
        counts[l] += 1;
    }
    let sparse0 = match counts[0].cmp(&counts[1]) {
        std::cmp::Ordering::Greater => 0,
        std::cmp::Ordering::Less => 1,
        std::cmp::Ordering::Equal => *tail.last().expect("non-empty window"),
    };
    Ok(StateLabeling {
        sparse0,
        sparse1: 1 - sparse0,
        prevalence_window,
        counts,
    })
}

pub fn label_assignment(a: &ClusterAssignment, prevalence_window: usize) -> Result<StateLabeling> {
    label_states(&a.labels, a.k, prevalence_window)
}

/// Labelings of one assignment for several prevalence windows.
pub fn labelings_for_windows(
    a: &ClusterAssignment,
    windows: &[usize],
) -> Result<Vec<(usize, StateLabeling)>> {
    windows
        .iter()
        .map(|&w| label_assignment(a, w).map(|l| (w, l)))
        .collect()
}

/// Cluster the train panel once (penalty calibrated on `gamma_grid`) and report
/// the labeling under each candidate prevalence window. No selection is made.
pub fn prevalence_grid_search(
    train: &ReturnsPanel,
    cfg: &ClusterConfig,
    target_persistence: f64,
    gamma_grid: &[f64],
    windows: &[usize],
    seed: u64,
) -> Result<Vec<(usize, StateLabeling)>> {
    if let Some(&w) = windows.iter().find(|&&w| w > train.len()) {
        return Err(Error::Validation(format!(
            "prevalence window {w} exceeds train length {}",
            train.len()
        )));
    }
    let cal = calibrate_gamma(train, cfg, target_persistence, gamma_grid, seed)?;
    let (a, _) = assign_clusters(train, cfg, cal.gamma, seed)?;
    labelings_for_windows(&a, windows)
}
