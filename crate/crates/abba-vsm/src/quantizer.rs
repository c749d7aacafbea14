//! Segment symbolization: normalize pooled `(len, inc)` tuples, cluster them,
//! and map each segment to the symbol of its nearest cluster center.
//!
//! Two clustering backends are supported. The sorting-based sweep orders the
//! normalized tuples by 2-norm and grows a group around each still-unassigned
//! point using the clustering tolerance `ct` as the radius; the norm ordering
//! lets the scan stop as soon as the norm gap alone exceeds `ct`. The k-means
//! backend runs Lloyd iterations from a seeded greedy farthest-point
//! initialization.
//!
//! Clusters are then ordered by descending member count and assigned symbols
//! in that order, so symbol `a` is always the most common shape.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reducer::SegmentSequence;

const KMEANS_MAX_ITERS: usize = 300;

/// Index into a codebook alphabet. Rendered as `a`-`z`, then `A`-`Z`, then
/// `s<id>` for alphabets larger than 52.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolId(pub u32);

impl std::fmt::Display for SymbolId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            0..=25 => write!(f, "{}", (b'a' + self.0 as u8) as char),
            26..=51 => write!(f, "{}", (b'A' + (self.0 - 26) as u8) as char),
            id => write!(f, "s{id}"),
        }
    }
}

/// Renders a symbol sequence as compact text.
pub fn render_symbols(symbols: &[SymbolId]) -> String {
    symbols.iter().map(|s| s.to_string()).collect()
}

/// Clustering backend and its parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "method_params", rename_all = "snake_case")]
pub enum ClusterParams {
    SortingBased { ct: f64 },
    KMeans { csize: usize, seed: u64 },
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        match self {
            ClusterParams::SortingBased { ct } => {
                if !(ct.is_finite() && *ct > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "clustering tolerance must be a finite positive number, got {ct}"
                    )));
                }
            }
            ClusterParams::KMeans { csize, .. } => {
                if *csize < 1 {
                    return Err(Error::InvalidParams(
                        "cluster count must be at least 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Fitted normalization scales, cluster centers (in normalized space), and
/// the center-to-symbol alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub sigma_len: f64,
    pub sigma_inc: f64,
    pub centers: Vec<[f64; 2]>,
    pub alphabet: Vec<SymbolId>,
    #[serde(flatten)]
    pub params: ClusterParams,
}

impl Codebook {
    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() || self.centers.len() != self.alphabet.len() {
            return Err(Error::Format(format!(
                "codebook has {} centers and {} alphabet entries",
                self.centers.len(),
                self.alphabet.len()
            )));
        }
        if !(self.sigma_len.is_finite() && self.sigma_len > 0.0)
            || !(self.sigma_inc.is_finite() && self.sigma_inc > 0.0)
        {
            return Err(Error::Format(
                "codebook normalization scales must be positive".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.alphabet {
            if !seen.insert(s.0) {
                return Err(Error::Format(format!("duplicate symbol id {}", s.0)));
            }
        }
        Ok(())
    }

    fn normalize(&self, len: u32, inc: f64) -> [f64; 2] {
        [len as f64 / self.sigma_len, inc / self.sigma_inc]
    }

    /// Nearest center by Euclidean distance; ties go to the lower index.
    fn nearest(&self, p: [f64; 2]) -> usize {
        nearest_center(&self.centers, p)
    }
}

/// A sample's segments replaced by codebook symbols, one per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolString {
    pub sample_id: u64,
    pub label: Option<String>,
    pub symbols: Vec<SymbolId>,
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest_center(centers: &[[f64; 2]], p: [f64; 2]) -> usize {
    let mut best = 0usize;
    let mut best_d = dist2(p, centers[0]);
    for (i, c) in centers.iter().enumerate().skip(1) {
        let d = dist2(p, *c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Population standard deviation, with 1.0 substituted when the spread is
/// zero or not finite (constant inputs, single point).
fn population_std_or_one(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd.is_finite() && sd > 0.0 {
        sd
    } else {
        1.0
    }
}

/// Fits a codebook on the pooled segments of the given sequences.
pub fn fit_codebook(seqs: &[SegmentSequence], params: &ClusterParams) -> Result<Codebook> {
    params.validate()?;
    let mut lens = Vec::new();
    let mut incs = Vec::new();
    for seq in seqs {
        for seg in &seq.segments {
            lens.push(seg.len as f64);
            incs.push(seg.inc);
        }
    }
    if lens.is_empty() {
        return Err(Error::EmptyInput("no segments to cluster".into()));
    }

    let sigma_len = population_std_or_one(&lens);
    let sigma_inc = population_std_or_one(&incs);
    let points: Vec<[f64; 2]> = lens
        .iter()
        .zip(&incs)
        .map(|(&l, &i)| [l / sigma_len, i / sigma_inc])
        .collect();

    let (centers, counts) = match params {
        ClusterParams::SortingBased { ct } => cluster_sorting(&points, *ct),
        ClusterParams::KMeans { csize, seed } => {
            let (centers, assign) = cluster_kmeans(&points, *csize, *seed);
            let mut counts = vec![0usize; centers.len()];
            for &a in &assign {
                counts[a] += 1;
            }
            (centers, counts)
        }
    };

    // symbols ordered by cluster size, largest first; stable sort keeps
    // creation order on ties
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(counts[i]));
    let centers: Vec<[f64; 2]> = order.iter().map(|&i| centers[i]).collect();
    let alphabet: Vec<SymbolId> = (0..centers.len() as u32).map(SymbolId).collect();

    Ok(Codebook {
        sigma_len,
        sigma_inc,
        centers,
        alphabet,
        params: params.clone(),
    })
}

/// Maps each segment of `seq` to the symbol of its nearest codebook center.
pub fn symbolize(seq: &SegmentSequence, cb: &Codebook) -> SymbolString {
    let symbols = seq
        .segments
        .iter()
        .map(|seg| cb.alphabet[cb.nearest(cb.normalize(seg.len, seg.inc))])
        .collect();
    SymbolString {
        sample_id: seq.sample_id,
        label: seq.label.clone(),
        symbols,
    }
}

/// Norm-sorted aggregation sweep. Returns centers and member counts in group
/// creation order.
fn cluster_sorting(points: &[[f64; 2]], ct: f64) -> (Vec<[f64; 2]>, Vec<usize>) {
    let n = points.len();
    let norms: Vec<f64> = points
        .iter()
        .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal norms keep pool order
    order.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]));

    let mut assigned = vec![false; n];
    let mut centers = Vec::new();
    let mut counts = Vec::new();
    for si in 0..n {
        let i = order[si];
        if assigned[i] {
            continue;
        }
        assigned[i] = true;
        let seed = points[i];
        let mut sum = seed;
        let mut count = 1usize;
        for &j in &order[si + 1..] {
            // no later point can be within ct once the norm gap exceeds it
            if norms[j] - norms[i] > ct {
                break;
            }
            if assigned[j] {
                continue;
            }
            if dist2(points[j], seed).sqrt() <= ct {
                assigned[j] = true;
                sum[0] += points[j][0];
                sum[1] += points[j][1];
                count += 1;
            }
        }
        centers.push([sum[0] / count as f64, sum[1] / count as f64]);
        counts.push(count);
    }
    (centers, counts)
}

/// Lloyd's algorithm with `k = min(csize, distinct points)`, greedy
/// farthest-point initialization from a seeded first pick, and convergence
/// when assignments stop changing. Returns centers and the final assignment.
fn cluster_kmeans(points: &[[f64; 2]], csize: usize, seed: u64) -> (Vec<[f64; 2]>, Vec<usize>) {
    let n = points.len();
    let distinct: std::collections::BTreeSet<(u64, u64)> = points
        .iter()
        .map(|p| (p[0].to_bits(), p[1].to_bits()))
        .collect();
    let k = csize.min(distinct.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..n);
    let mut centers = vec![points[first]];
    let mut min_d2: Vec<f64> = points.iter().map(|&p| dist2(p, centers[0])).collect();
    while centers.len() < k {
        // farthest remaining point; ties go to the lowest index
        let mut best = 0usize;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in min_d2.iter().enumerate() {
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        let c = points[best];
        centers.push(c);
        for (i, &p) in points.iter().enumerate() {
            let d = dist2(p, c);
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
    }

    let mut assign: Vec<usize> = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let new_assign: Vec<usize> = points
            .iter()
            .map(|&p| nearest_center(&centers, p))
            .collect();
        if new_assign == assign {
            break;
        }
        assign = new_assign;

        let mut sums = vec![[0.0f64; 2]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (&a, &p) in assign.iter().zip(points) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        for (c, (sum, &count)) in centers.iter_mut().zip(sums.iter().zip(&counts)) {
            // a cluster that lost all members keeps its previous center
            if count > 0 {
                *c = [sum[0] / count as f64, sum[1] / count as f64];
            }
        }
    }
    // assignment consistent with the final centers
    let assign: Vec<usize> = points
        .iter()
        .map(|&p| nearest_center(&centers, p))
        .collect();
    (centers, assign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reducer::Segment;

    fn seq_from_segments(pairs: &[(u32, f64)]) -> SegmentSequence {
        let segments: Vec<Segment> = pairs
            .iter()
            .map(|&(len, inc)| Segment { len, inc })
            .collect();
        let n = 1 + segments.iter().map(|s| s.len as usize).sum::<usize>();
        SegmentSequence {
            sample_id: 0,
            label: None,
            y0: 0.0,
            original_length: n,
            segments,
        }
    }

    #[test]
    fn symbol_rendering_covers_all_ranges() {
        assert_eq!(SymbolId(0).to_string(), "a");
        assert_eq!(SymbolId(25).to_string(), "z");
        assert_eq!(SymbolId(26).to_string(), "A");
        assert_eq!(SymbolId(51).to_string(), "Z");
        assert_eq!(SymbolId(52).to_string(), "s52");
        assert_eq!(
            render_symbols(&[SymbolId(0), SymbolId(1), SymbolId(60)]),
            "abs60"
        );
    }

    #[test]
    fn sorting_sweep_matches_hand_run() {
        let points = vec![[0.0, 0.0], [0.1, 0.0], [1.0, 1.0]];
        let (centers, counts) = cluster_sorting(&points, 0.5);
        assert_eq!(centers.len(), 2);
        assert_eq!(counts, vec![2, 1]);
        assert!((centers[0][0] - 0.05).abs() < 1e-12);
        assert!(centers[0][1].abs() < 1e-12);
        assert_eq!(centers[1], [1.0, 1.0]);
    }

    #[test]
    fn sorting_sweep_early_termination_still_assigns_everything() {
        // second point is within the norm window of the first but not within
        // ct; it must seed its own group later
        let points = vec![[0.0, 0.3], [0.3, 0.0], [5.0, 5.0]];
        let (centers, counts) = cluster_sorting(&points, 0.35);
        assert_eq!(centers.len(), 3);
        assert_eq!(counts.iter().sum::<usize>(), 3);
    }

    /// Exhaustive minimum-SSE bipartition of `points`; the oracle for the
    /// two-cluster k-means example.
    fn best_two_partition_sse(points: &[[f64; 2]]) -> (f64, Vec<[f64; 2]>) {
        let n = points.len();
        let mut best = (f64::INFINITY, Vec::new());
        for mask in 1..(1u32 << n) - 1 {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (i, &p) in points.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    a.push(p);
                } else {
                    b.push(p);
                }
            }
            let centroid = |v: &[[f64; 2]]| {
                let m = v.len() as f64;
                [
                    v.iter().map(|p| p[0]).sum::<f64>() / m,
                    v.iter().map(|p| p[1]).sum::<f64>() / m,
                ]
            };
            let sse = |v: &[[f64; 2]], c: [f64; 2]| -> f64 { v.iter().map(|&p| dist2(p, c)).sum() };
            let (ca, cb) = (centroid(&a), centroid(&b));
            let total = sse(&a, ca) + sse(&b, cb);
            if total < best.0 {
                let mut cs = vec![ca, cb];
                cs.sort_by(|x, y| x[0].total_cmp(&y[0]));
                best = (total, cs);
            }
        }
        best
    }

    #[test]
    fn kmeans_finds_the_optimal_two_clusters_for_any_seed() {
        let points = vec![[0.0, 0.0], [0.0, 0.1], [10.0, 10.0], [10.0, 10.1]];
        let (_, expected) = best_two_partition_sse(&points);
        for seed in 0..20 {
            let (mut centers, assign) = cluster_kmeans(&points, 2, seed);
            assert_eq!(centers.len(), 2);
            centers.sort_by(|a, b| a[0].total_cmp(&b[0]));
            for (c, e) in centers.iter().zip(&expected) {
                assert!((c[0] - e[0]).abs() < 1e-9 && (c[1] - e[1]).abs() < 1e-9);
            }
            assert_eq!(assign[0], assign[1]);
            assert_eq!(assign[2], assign[3]);
            assert_ne!(assign[0], assign[2]);
        }
    }

    #[test]
    fn kmeans_caps_k_at_distinct_point_count() {
        let points = vec![[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]];
        let (centers, _) = cluster_kmeans(&points, 5, 3);
        assert_eq!(centers.len(), 2);
    }

    #[test]
    fn sorting_merges_duplicate_points() {
        // duplicates always land in the same group: distance 0 within any ct
        let points = vec![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0], [9.0, 9.0]];
        let (centers, counts) = cluster_sorting(&points, 0.001);
        assert_eq!(centers.len(), 2);
        assert_eq!(counts, vec![3, 1]);
    }

    #[test]
    fn kmeans_final_assignment_is_nearest_center() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let points: Vec<[f64; 2]> = (0..200)
            .map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
            .collect();
        let (centers, assign) = cluster_kmeans(&points, 6, 7);
        for (p, &a) in points.iter().zip(&assign) {
            assert_eq!(nearest_center(&centers, *p), a);
        }
    }

    #[test]
    fn single_segment_gives_single_symbol_codebook() {
        let seqs = vec![seq_from_segments(&[(3, 1.5)])];
        for params in [
            ClusterParams::SortingBased { ct: 0.1 },
            ClusterParams::KMeans { csize: 5, seed: 0 },
        ] {
            let cb = fit_codebook(&seqs, &params).unwrap();
            assert_eq!(cb.alphabet_size(), 1);
            let s = symbolize(&seqs[0], &cb);
            assert_eq!(s.symbols, vec![SymbolId(0)]);
        }
    }

    #[test]
    fn empty_pool_is_rejected() {
        assert!(matches!(
            fit_codebook(&[], &ClusterParams::SortingBased { ct: 0.1 }),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let seqs = vec![seq_from_segments(&[(1, 1.0)])];
        assert!(matches!(
            fit_codebook(&seqs, &ClusterParams::SortingBased { ct: 0.0 }),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            fit_codebook(&seqs, &ClusterParams::KMeans { csize: 0, seed: 0 }),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn sigma_fallback_handles_constant_lengths() {
        // all lens equal -> sigma_len would be 0, substituted by 1
        let seqs = vec![seq_from_segments(&[
            (2, 1.0),
            (2, -1.0),
            (2, 1.0),
            (2, -1.0),
        ])];
        let cb = fit_codebook(&seqs, &ClusterParams::SortingBased { ct: 0.1 }).unwrap();
        assert_eq!(cb.sigma_len, 1.0);
        assert!(cb.sigma_inc > 0.0);
    }

    #[test]
    fn alphabet_ordered_by_cluster_size() {
        // three identical small segments and one outlier: symbol 'a' must be
        // the big cluster
        let seqs = vec![seq_from_segments(&[
            (1, 0.1),
            (1, 0.11),
            (1, 0.09),
            (1, 50.0),
        ])];
        let cb = fit_codebook(&seqs, &ClusterParams::SortingBased { ct: 0.5 }).unwrap();
        assert_eq!(cb.alphabet_size(), 2);
        let s = symbolize(&seqs[0], &cb);
        assert_eq!(
            s.symbols,
            vec![SymbolId(0), SymbolId(0), SymbolId(0), SymbolId(1)]
        );
    }

    #[test]
    fn symbolize_follows_the_fitted_clusters_in_segment_order() {
        // normalized points land on {(0,0), (~0.1,0), (~1,1)} after the sigma
        // scaling built into the construction below
        let seqs = vec![seq_from_segments(&[(10, 0.0), (11, 0.0), (20, 10.0)])];
        let cb = fit_codebook(&seqs, &ClusterParams::SortingBased { ct: 0.5 }).unwrap();
        let s = symbolize(&seqs[0], &cb);
        assert_eq!(s.symbols.len(), 3);
        assert_eq!(s.symbols[0], s.symbols[1]);
        assert_ne!(s.symbols[0], s.symbols[2]);
        assert_eq!(render_symbols(&s.symbols), "aab");
    }

    #[test]
    fn tie_goes_to_lower_alphabet_index() {
        let cb = Codebook {
            sigma_len: 1.0,
            sigma_inc: 1.0,
            centers: vec![[0.0, 0.0], [2.0, 0.0]],
            alphabet: vec![SymbolId(0), SymbolId(1)],
            params: ClusterParams::SortingBased { ct: 0.1 },
        };
        // the point (1, 0) is equidistant from both centers
        let seq = seq_from_segments(&[(1, 0.0)]);
        let s = symbolize(&seq, &cb);
        assert_eq!(s.symbols, vec![SymbolId(0)]);
    }

    #[test]
    fn scaling_increments_by_a_power_of_two_leaves_symbols_unchanged() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pairs: Vec<(u32, f64)> = (0..60)
            .map(|_| (rng.gen_range(1..20), rng.gen_range(-3.0..3.0)))
            .collect();
        let base = vec![seq_from_segments(&pairs)];
        let scaled_pairs: Vec<(u32, f64)> = pairs.iter().map(|&(l, i)| (l, 4.0 * i)).collect();
        let scaled = vec![seq_from_segments(&scaled_pairs)];

        for params in [
            ClusterParams::SortingBased { ct: 0.3 },
            ClusterParams::KMeans { csize: 4, seed: 9 },
        ] {
            let cb_base = fit_codebook(&base, &params).unwrap();
            let cb_scaled = fit_codebook(&scaled, &params).unwrap();
            assert_eq!(cb_scaled.sigma_inc, 4.0 * cb_base.sigma_inc);
            assert_eq!(cb_base.sigma_len, cb_scaled.sigma_len);
            assert_eq!(
                symbolize(&base[0], &cb_base).symbols,
                symbolize(&scaled[0], &cb_scaled).symbols
            );
        }
    }

    #[test]
    fn fit_is_deterministic_for_equal_seed() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let pairs: Vec<(u32, f64)> = (0..100)
            .map(|_| (rng.gen_range(1..30), rng.gen_range(-5.0..5.0)))
            .collect();
        let seqs = vec![seq_from_segments(&pairs)];
        let params = ClusterParams::KMeans {
            csize: 6,
            seed: 1234,
        };
        let a = fit_codebook(&seqs, &params).unwrap();
        let b = fit_codebook(&seqs, &params).unwrap();
        assert_eq!(a, b);
    }
}
