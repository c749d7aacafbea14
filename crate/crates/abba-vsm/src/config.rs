//! Pipeline hyperparameters and the default hyperparameter search space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::ClusterParams;

/// Clustering backend selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterType {
    SortingBased,
    KMeans,
}

impl std::fmt::Display for ClusterType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClusterType::SortingBased => f.write_str("sorting_based"),
            ClusterType::KMeans => f.write_str("k_means"),
        }
    }
}

impl std::str::FromStr for ClusterType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sorting_based" | "sorting" => Ok(ClusterType::SortingBased),
            "k_means" | "kmeans" => Ok(ClusterType::KMeans),
            other => Err(Error::InvalidParams(format!(
                "unknown cluster type {other:?}, expected sorting_based|k_means"
            ))),
        }
    }
}

/// Default search grids. `ct` applies only to sorting-based clustering and
/// `csize` only to k-means.
pub mod search_grid {
    pub const RT: [f64; 8] = [0.001, 0.005, 0.01, 0.05, 0.1, 0.3, 0.5, 0.7];
    pub const CT: [f64; 8] = [0.001, 0.005, 0.01, 0.05, 0.1, 0.3, 0.5, 0.7];
    pub const WSIZE: [usize; 9] = [2, 3, 4, 5, 6, 7, 8, 9, 10];
    pub const WSTEP: [usize; 4] = [1, 2, 3, 4];
    pub const CSIZE: [usize; 7] = [2, 3, 4, 5, 6, 7, 8];
    pub const TSIZE: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.4];
}

/// All knobs of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Reduction tolerance.
    pub rt: f64,
    /// Clustering backend.
    pub ctype: ClusterType,
    /// Clustering tolerance (sorting-based only).
    pub ct: f64,
    /// Cluster count (k-means only).
    pub csize: usize,
    /// Sliding-window word length.
    pub wsize: usize,
    /// Sliding-window stride.
    pub wstep: usize,
    /// Test fraction of the stratified split.
    pub tsize: f64,
    /// Seed for the split and the k-means initialization.
    pub seed: u64,
    /// Map unclassifiable samples to the largest training class instead of
    /// leaving them unlabeled.
    pub fallback_largest_class: bool,
    /// Permit values outside the default search-grid bounds.
    pub allow_out_of_range: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            rt: 0.1,
            ctype: ClusterType::SortingBased,
            ct: 0.1,
            csize: 4,
            wsize: 3,
            wstep: 1,
            tsize: 0.2,
            seed: 42,
            fallback_largest_class: false,
            allow_out_of_range: false,
        }
    }
}

fn in_bounds_f(v: f64, grid: &[f64]) -> bool {
    v >= grid[0] && v <= grid[grid.len() - 1]
}

fn in_bounds_u(v: usize, grid: &[usize]) -> bool {
    v >= grid[0] && v <= grid[grid.len() - 1]
}

impl PipelineConfig {
    /// Checks hard constraints always, and grid bounds unless
    /// `allow_out_of_range` is set.
    pub fn validate(&self) -> Result<()> {
        if !(self.rt.is_finite() && self.rt > 0.0) {
            return Err(Error::InvalidParams(format!(
                "rt must be positive, got {}",
                self.rt
            )));
        }
        if self.wsize < 1 || self.wstep < 1 {
            return Err(Error::InvalidParams(format!(
                "wsize and wstep must be at least 1, got {} and {}",
                self.wsize, self.wstep
            )));
        }
        if !(self.tsize > 0.0 && self.tsize < 1.0) {
            return Err(Error::InvalidParams(format!(
                "tsize must lie in (0,1), got {}",
                self.tsize
            )));
        }
        match self.ctype {
            ClusterType::SortingBased => {
                if !(self.ct.is_finite() && self.ct > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "ct must be positive, got {}",
                        self.ct
                    )));
                }
            }
            ClusterType::KMeans => {
                if self.csize < 1 {
                    return Err(Error::InvalidParams("csize must be at least 1".into()));
                }
            }
        }
        if self.allow_out_of_range {
            return Ok(());
        }

        let mut violations = Vec::new();
        if !in_bounds_f(self.rt, &search_grid::RT) {
            violations.push(format!("rt={}", self.rt));
        }
        if self.ctype == ClusterType::SortingBased && !in_bounds_f(self.ct, &search_grid::CT) {
            violations.push(format!("ct={}", self.ct));
        }
        if self.ctype == ClusterType::KMeans && !in_bounds_u(self.csize, &search_grid::CSIZE) {
            violations.push(format!("csize={}", self.csize));
        }
        if !in_bounds_u(self.wsize, &search_grid::WSIZE) {
            violations.push(format!("wsize={}", self.wsize));
        }
        if !in_bounds_u(self.wstep, &search_grid::WSTEP) {
            violations.push(format!("wstep={}", self.wstep));
        }
        if !in_bounds_f(self.tsize, &search_grid::TSIZE) {
            violations.push(format!("tsize={}", self.tsize));
        }
        if !violations.is_empty() {
            return Err(Error::InvalidParams(format!(
                "{} outside the default search bounds (pass the out-of-range override to permit)",
                violations.join(", ")
            )));
        }
        Ok(())
    }

    /// The clustering parameters implied by this configuration.
    pub fn cluster_params(&self) -> ClusterParams {
        match self.ctype {
            ClusterType::SortingBased => ClusterParams::SortingBased { ct: self.ct },
            ClusterType::KMeans => ClusterParams::KMeans {
                csize: self.csize,
                seed: self.seed,
            },
        }
    }
}

/// A hyperparameter search space; defaults to the full grids of
/// [`search_grid`] over both clustering backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub ctypes: Vec<ClusterType>,
    pub rts: Vec<f64>,
    pub cts: Vec<f64>,
    pub csizes: Vec<usize>,
    pub wsizes: Vec<usize>,
    pub wsteps: Vec<usize>,
    pub tsizes: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            ctypes: vec![ClusterType::SortingBased, ClusterType::KMeans],
            rts: search_grid::RT.to_vec(),
            cts: search_grid::CT.to_vec(),
            csizes: search_grid::CSIZE.to_vec(),
            wsizes: search_grid::WSIZE.to_vec(),
            wsteps: search_grid::WSTEP.to_vec(),
            tsizes: search_grid::TSIZE.to_vec(),
        }
    }
}

impl SearchSpace {
    /// Number of configurations the space enumerates to.
    pub fn len(&self) -> usize {
        let shared = self.rts.len() * self.wsizes.len() * self.wsteps.len() * self.tsizes.len();
        self.ctypes
            .iter()
            .map(|ct| match ct {
                ClusterType::SortingBased => shared * self.cts.len(),
                ClusterType::KMeans => shared * self.csizes.len(),
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Enumerates the cross product in a fixed order: cluster type, then rt,
    /// then the backend parameter, then wsize, wstep, tsize. The order is a
    /// pure function of the space.
    pub fn enumerate(&self, seed: u64) -> Result<Vec<PipelineConfig>> {
        if self.is_empty() {
            return Err(Error::EmptySearchSpace(
                "the cross product of the given value lists is empty".into(),
            ));
        }
        let mut configs = Vec::with_capacity(self.len());
        for &ctype in &self.ctypes {
            let backend_values: Vec<(f64, usize)> = match ctype {
                ClusterType::SortingBased => self
                    .cts
                    .iter()
                    .map(|&ct| (ct, PipelineConfig::default().csize))
                    .collect(),
                ClusterType::KMeans => self
                    .csizes
                    .iter()
                    .map(|&cs| (PipelineConfig::default().ct, cs))
                    .collect(),
            };
            for &rt in &self.rts {
                for &(ct, csize) in &backend_values {
                    for &wsize in &self.wsizes {
                        for &wstep in &self.wsteps {
                            for &tsize in &self.tsizes {
                                configs.push(PipelineConfig {
                                    rt,
                                    ctype,
                                    ct,
                                    csize,
                                    wsize,
                                    wstep,
                                    tsize,
                                    seed,
                                    fallback_largest_class: false,
                                    allow_out_of_range: false,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(configs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_rt_is_rejected() {
        let cfg = PipelineConfig {
            rt: 0.0,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidParams(_))));
        // the override does not relax hard constraints
        let cfg = PipelineConfig {
            rt: 0.0,
            allow_out_of_range: true,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn out_of_grid_needs_override() {
        let cfg = PipelineConfig {
            wsize: 1,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidParams(_))));
        let cfg = PipelineConfig {
            wsize: 1,
            allow_out_of_range: true,
            ..Default::default()
        };
        cfg.validate().unwrap();
    }

    #[test]
    fn inactive_backend_parameter_is_not_range_checked() {
        let cfg = PipelineConfig {
            ctype: ClusterType::KMeans,
            ct: 99.0, // inactive under k-means
            ..Default::default()
        };
        cfg.validate().unwrap();
    }

    #[test]
    fn sorting_only_space_has_the_expected_cardinality() {
        let space = SearchSpace {
            ctypes: vec![ClusterType::SortingBased],
            ..Default::default()
        };
        // RT x CT x Wsize x Wstep x Tsize
        assert_eq!(space.len(), 8 * 8 * 9 * 4 * 5);
        assert_eq!(space.enumerate(0).unwrap().len(), 11_520);
    }

    #[test]
    fn full_space_counts_both_backends() {
        let space = SearchSpace::default();
        assert_eq!(space.len(), 8 * 8 * 9 * 4 * 5 + 8 * 7 * 9 * 4 * 5);
    }

    #[test]
    fn enumeration_is_deterministic_and_config_order_is_stable() {
        let space = SearchSpace {
            ctypes: vec![ClusterType::SortingBased, ClusterType::KMeans],
            rts: vec![0.1, 0.3],
            cts: vec![0.01],
            csizes: vec![2, 3],
            wsizes: vec![3],
            wsteps: vec![1],
            tsizes: vec![0.2],
        };
        let a = space.enumerate(7).unwrap();
        let b = space.enumerate(7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 + 4);
        assert_eq!(a[0].ctype, ClusterType::SortingBased);
        assert_eq!(a[0].rt, 0.1);
        assert_eq!(a[1].rt, 0.3);
        assert_eq!(a[2].ctype, ClusterType::KMeans);
        assert_eq!(a[2].csize, 2);
        assert_eq!(a[3].csize, 3);
        assert!(a.iter().all(|c| c.seed == 7));
    }

    #[test]
    fn empty_space_is_an_error() {
        let space = SearchSpace {
            rts: vec![],
            ..Default::default()
        };
        assert!(matches!(
            space.enumerate(0),
            Err(Error::EmptySearchSpace(_))
        ));
    }
}
