//! K-means clustering and a 2-D PCA projection of the front in standardized
//! objective space.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ObjectiveMatrix;
use crate::error::InterpretError;
use crate::objectives::N_OBJECTIVES;

pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_MAX_ITERATIONS: usize = 300;
/// Largest k on the elbow curve.
pub const ELBOW_MAX_K: usize = 8;
pub const DEFAULT_CLUSTERS: usize = 3;

type Point = [f64; N_OBJECTIVES];

/// A fixed cluster count or elbow-based selection. Serialized as a number or
/// the string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ClusterKRepr", into = "ClusterKRepr")]
pub enum ClusterK {
    Fixed(usize),
    Auto,
}

impl Default for ClusterK {
    fn default() -> Self {
        ClusterK::Fixed(DEFAULT_CLUSTERS)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ClusterKRepr {
    Count(usize),
    Name(String),
}

impl TryFrom<ClusterKRepr> for ClusterK {
    type Error = String;

    fn try_from(r: ClusterKRepr) -> Result<Self, String> {
        match r {
            ClusterKRepr::Count(k) => ClusterK::Fixed(k).checked(),
            ClusterKRepr::Name(s) => s.parse(),
        }
    }
}

impl From<ClusterK> for ClusterKRepr {
    fn from(k: ClusterK) -> Self {
        match k {
            ClusterK::Fixed(k) => ClusterKRepr::Count(k),
            ClusterK::Auto => ClusterKRepr::Name("auto".into()),
        }
    }
}

impl ClusterK {
    fn checked(self) -> Result<Self, String> {
        match self {
            ClusterK::Fixed(0) => Err("cluster count must be at least 1".into()),
            k => Ok(k),
        }
    }
}

impl FromStr for ClusterK {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(ClusterK::Auto);
        }
        s.parse::<usize>()
            .map_err(|_| format!("invalid cluster count '{s}' (expected a positive integer or 'auto')"))
            .and_then(|k| ClusterK::Fixed(k).checked())
    }
}

impl fmt::Display for ClusterK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterK::Fixed(k) => write!(f, "{k}"),
            ClusterK::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Cluster id per matrix row.
    pub labels: Vec<usize>,
    /// Centroids in standardized objective space.
    pub centroids: Vec<Point>,
    pub pca_coords: Vec<[f64; 2]>,
    /// Share of total variance explained by each of the two components.
    pub pca_explained: [f64; 2],
    pub pca_components: [Point; 2],
    /// Best within-cluster sum of squares for `k = 1, 2, …`.
    pub wcss_by_k: Vec<f64>,
    pub chosen_k: usize,
}

pub fn cluster_solutions(matrix: &ObjectiveMatrix, k: ClusterK, seed: u64) -> Result<ClusterAssignment, InterpretError> {
    let n = matrix.len();
    if n == 0 {
        return Err(InterpretError::Empty);
    }
    if let ClusterK::Fixed(k) = k {
        if k == 0 || k > n {
            return Err(InterpretError::TooFewSolutions { needed: k.max(1), found: n });
        }
    }
    let z = standardize(matrix.rows());
    let curve_max = match k {
        ClusterK::Fixed(k) => k.max(ELBOW_MAX_K.min(n.saturating_sub(1))),
        ClusterK::Auto => ELBOW_MAX_K.min(n.saturating_sub(1)).max(1),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fits: Vec<Fit> = Vec::with_capacity(curve_max);
    for kk in 1..=curve_max {
        let mut best = best_of_restarts(&z, kk, &mut rng);
        if let Some(prev) = fits.last() {
            // Growing the previous optimum by its worst-fit point can only
            // lower WCSS, which keeps the curve non-increasing.
            let grown = lloyd(&z, grow(&z, prev));
            if grown.wcss < best.wcss {
                best = grown;
            }
        }
        fits.push(best);
    }
    let wcss_by_k: Vec<f64> = fits.iter().map(|f| f.wcss).collect();
    let chosen_k = match k {
        ClusterK::Fixed(k) => k,
        ClusterK::Auto => elbow(&wcss_by_k),
    };
    let chosen = &fits[chosen_k - 1];
    let (pca_coords, pca_explained, pca_components) = pca_2d(&z);
    Ok(ClusterAssignment {
        labels: chosen.labels.clone(),
        centroids: chosen.centroids.clone(),
        pca_coords,
        pca_explained,
        pca_components,
        wcss_by_k,
        chosen_k,
    })
}

/// Zero mean and unit population variance per column; constant columns → 0.
pub fn standardize(rows: &[Point]) -> Vec<Point> {
    let n = rows.len() as f64;
    let mut out = rows.to_vec();
    for j in 0..N_OBJECTIVES {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let sd = (rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for (o, r) in out.iter_mut().zip(rows) {
            o[j] = if sd > 1e-12 { (r[j] - mean) / sd } else { 0.0 };
        }
    }
    out
}

/// k at the largest second difference of the WCSS curve. Curves shorter than
/// three points have no interior elbow and give k = 1.
fn elbow(wcss: &[f64]) -> usize {
    if wcss.len() < 3 {
        return 1;
    }
    let mut best = (2, f64::NEG_INFINITY);
    for k in 2..wcss.len() {
        // wcss[k - 1] is the value for k clusters.
        let d2 = wcss[k - 2] - 2.0 * wcss[k - 1] + wcss[k];
        if d2 > best.1 {
            best = (k, d2);
        }
    }
    best.0
}

#[derive(Debug, Clone)]
struct Fit {
    labels: Vec<usize>,
    centroids: Vec<Point>,
    wcss: f64,
}

fn dist2(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = dist2(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn best_of_restarts<R: Rng>(z: &[Point], k: usize, rng: &mut R) -> Fit {
    let mut best: Option<Fit> = None;
    for _ in 0..KMEANS_RESTARTS {
        let fit = lloyd(z, plus_plus_seeds(z, k, rng));
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    best.expect("at least one restart")
}

fn plus_plus_seeds<R: Rng>(z: &[Point], k: usize, rng: &mut R) -> Vec<Point> {
    let mut centroids = vec![z[rng.gen_range(0..z.len())]];
    while centroids.len() < k {
        let d: Vec<f64> = z.iter().map(|p| nearest(p, &centroids).1).collect();
        let next = match WeightedIndex::new(&d) {
            Ok(w) => w.sample(rng),
            // Every point already coincides with a centroid.
            Err(_) => rng.gen_range(0..z.len()),
        };
        centroids.push(z[next]);
    }
    centroids
}

/// Previous centroids plus the point farthest from them.
fn grow(z: &[Point], prev: &Fit) -> Vec<Point> {
    let far = z
        .iter()
        .enumerate()
        .max_by(|a, b| nearest(a.1, &prev.centroids).1.total_cmp(&nearest(b.1, &prev.centroids).1))
        .map(|(i, _)| i)
        .expect("non-empty");
    let mut centroids = prev.centroids.clone();
    centroids.push(z[far]);
    centroids
}

fn lloyd(z: &[Point], mut centroids: Vec<Point>) -> Fit {
    let k = centroids.len();
    let mut labels = vec![usize::MAX; z.len()];
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut changed = false;
        for (l, p) in labels.iter_mut().zip(z) {
            let c = nearest(p, &centroids).0;
            if *l != c {
                *l = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![[0.0; N_OBJECTIVES]; k];
        let mut counts = vec![0usize; k];
        for (&l, p) in labels.iter().zip(z) {
            counts[l] += 1;
            for j in 0..N_OBJECTIVES {
                sums[l][j] += p[j];
            }
        }
        for c in 0..k {
            // An emptied cluster keeps its old centroid.
            if counts[c] > 0 {
                for j in 0..N_OBJECTIVES {
                    centroids[c][j] = sums[c][j] / counts[c] as f64;
                }
            }
        }
    }
    let wcss = labels.iter().zip(z).map(|(&l, p)| dist2(p, &centroids[l])).sum();
    Fit { labels, centroids, wcss }
}

fn pca_2d(z: &[Point]) -> (Vec<[f64; 2]>, [f64; 2], [Point; 2]) {
    let n = z.len() as f64;
    let x = DMatrix::from_fn(z.len(), N_OBJECTIVES, |i, j| z[i][j]);
    let cov = x.transpose() * &x / n;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..N_OBJECTIVES).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let mut components = [[0.0; N_OBJECTIVES]; 2];
    let mut explained = [0.0; 2];
    for (c, &idx) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(idx);
        let pivot = (0..N_OBJECTIVES)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .expect("six loadings");
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..N_OBJECTIVES {
            components[c][j] = sign * v[j];
        }
        explained[c] = if total > 0.0 { eig.eigenvalues[idx].max(0.0) / total } else { 0.0 };
    }
    let coords = z
        .iter()
        .map(|p| {
            let project = |w: &Point| p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            [project(&components[0]), project(&components[1])]
        })
        .collect();
    (coords, explained, components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: Vec<Point>) -> ObjectiveMatrix {
        ObjectiveMatrix::from_rows(rows).unwrap()
    }

    fn blobs() -> Vec<Point> {
        let mut rows = Vec::new();
        for i in 0..6 {
            let e = i as f64 * 0.01;
            rows.push([1.0 + e, 0.9, 0.9 - e, 0.1, 0.9, 0.9]);
            rows.push([20.0 - e, 0.2 + e, 0.1, 8.0, 0.1, 0.1 + e]);
        }
        rows
    }

    #[test]
    fn single_cluster_centroid_is_origin() {
        let a = cluster_solutions(&matrix(blobs()), ClusterK::Fixed(1), 0).unwrap();
        assert!(a.labels.iter().all(|&l| l == 0));
        assert!(a.centroids[0].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let a = cluster_solutions(&matrix(blobs()), ClusterK::Fixed(2), 5).unwrap();
        for pair in a.labels.chunks(2) {
            assert_ne!(pair[0], pair[1]);
        }
        let first = a.labels[0];
        assert!(a.labels.iter().step_by(2).all(|&l| l == first));
        let auto = cluster_solutions(&matrix(blobs()), ClusterK::Auto, 5).unwrap();
        assert_eq!(auto.chosen_k, 2);
    }

    #[test]
    fn collinear_rows_put_all_variance_on_first_component() {
        let rows: Vec<Point> = (0..7)
            .map(|i| {
                let t = i as f64;
                [t, 0.5 + 0.01 * t, 0.3 - 0.02 * t, 2.0 * t, 0.7, 0.1 * t]
            })
            .collect();
        let a = cluster_solutions(&matrix(rows), ClusterK::Fixed(3), 1).unwrap();
        assert!((a.pca_explained[0] - 1.0).abs() < 1e-9);
        assert!(a.pca_explained[1].abs() < 1e-9);
        let pivot = a.pca_components[0].iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(a.pca_components[0].contains(&pivot));
    }

    #[test]
    fn fixed_k_larger_than_front_is_rejected() {
        let err = cluster_solutions(&matrix(vec![[1.0; 6], [2.0; 6]]), ClusterK::Fixed(3), 0).unwrap_err();
        assert_eq!(err, InterpretError::TooFewSolutions { needed: 3, found: 2 });
    }

    #[test]
    fn deterministic_for_seed() {
        let a = cluster_solutions(&matrix(blobs()), ClusterK::Fixed(3), 11).unwrap();
        let b = cluster_solutions(&matrix(blobs()), ClusterK::Fixed(3), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cluster_k_parsing_and_serde() {
        assert_eq!("auto".parse::<ClusterK>().unwrap(), ClusterK::Auto);
        assert_eq!("4".parse::<ClusterK>().unwrap(), ClusterK::Fixed(4));
        assert!("0".parse::<ClusterK>().is_err());
        assert_eq!(serde_json::to_string(&ClusterK::Fixed(3)).unwrap(), "3");
        assert_eq!(serde_json::from_str::<ClusterK>("\"auto\"").unwrap(), ClusterK::Auto);
        assert!(serde_json::from_str::<ClusterK>("\"many\"").is_err());
    }

    fn arb_rows() -> impl Strategy<Value = Vec<Point>> {
        proptest::collection::vec(proptest::array::uniform6(-5.0f64..5.0), 3..30)
    }

    proptest! {
        #[test]
        fn wcss_curve_is_non_increasing(rows in arb_rows(), seed in 0u64..1000) {
            let a = cluster_solutions(&matrix(rows), ClusterK::Auto, seed).unwrap();
            for w in a.wcss_by_k.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", a.wcss_by_k);
            }
            prop_assert!(a.labels.iter().all(|&l| l < a.chosen_k));
        }

        #[test]
        fn top_two_components_are_optimal(rows in arb_rows()) {
            let z = standardize(&rows);
            let (_, explained, _) = pca_2d(&z);
            let n = z.len() as f64;
            let x = DMatrix::from_fn(z.len(), N_OBJECTIVES, |i, j| z[i][j]);
            let eig = SymmetricEigen::new(x.transpose() * &x / n);
            let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
            prop_assume!(total > 1e-9);
            let vals: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0) / total).collect();
            for a in 0..N_OBJECTIVES {
                for b in (a + 1)..N_OBJECTIVES {
                    prop_assert!(explained[0] + explained[1] >= vals[a] + vals[b] - 1e-9);
                }
            }
        }
    }
}
