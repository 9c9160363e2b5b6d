//! NSGA-III survivor selection: whole fronts first, then reference-point
//! niching on the front that does not fit.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use super::reference::ReferencePointSet;
use super::sort::non_dominated_sort;
use crate::objectives::Direction;

const ASF_EPS: f64 = 1e-6;
const INTERCEPT_EPS: f64 = 1e-6;

/// Indices of the `p` survivors among `points`.
///
/// Survivors from complete fronts come first (front order), followed by the
/// niche-selected members of the split front in selection order.
pub fn environmental_selection<P: AsRef<[f64]>, R: Rng>(
    points: &[P],
    directions: &[Direction],
    refs: &ReferencePointSet,
    p: usize,
    rng: &mut R,
) -> Vec<usize> {
    assert!(points.len() >= p, "need at least p candidates");
    let fronts = non_dominated_sort(points, directions);
    let mut selected: Vec<usize> = Vec::with_capacity(p);
    let mut last_front: Vec<usize> = Vec::new();
    for front in fronts {
        if selected.len() + front.len() <= p {
            selected.extend(front);
            if selected.len() == p {
                return selected;
            }
        } else {
            last_front = front;
            break;
        }
    }

    // Minimisation form of every member of S_t = selected ∪ last front.
    let members: Vec<usize> = selected.iter().chain(&last_front).copied().collect();
    let as_min: Vec<Vec<f64>> = members
        .iter()
        .map(|&i| {
            points[i]
                .as_ref()
                .iter()
                .zip(directions)
                .map(|(&v, d)| if *d == Direction::Max { -v } else { v })
                .collect()
        })
        .collect();
    let normalized = normalize(&as_min);
    let (niche_of, distance) = associate(&normalized, refs);

    let mut niche_count = vec![0usize; refs.len()];
    for &nich in &niche_of[..selected.len()] {
        niche_count[nich] += 1;
    }
    // Positions (within `members`) of split-front candidates still available.
    let mut pool: Vec<usize> = (selected.len()..members.len()).collect();
    let mut excluded = vec![false; refs.len()];
    while selected.len() < p {
        let min_count = (0..refs.len())
            .filter(|&j| !excluded[j])
            .map(|j| niche_count[j])
            .min()
            .expect("a reference point with candidates remains");
        let ties: Vec<usize> = (0..refs.len())
            .filter(|&j| !excluded[j] && niche_count[j] == min_count)
            .collect();
        let niche = *ties.choose(rng).expect("non-empty ties");
        let in_niche: Vec<usize> = pool
            .iter()
            .enumerate()
            .filter(|&(_, &pos)| niche_of[pos] == niche)
            .map(|(k, _)| k)
            .collect();
        if in_niche.is_empty() {
            excluded[niche] = true;
            continue;
        }
        let pick = if niche_count[niche] == 0 {
            *in_niche
                .iter()
                .min_by(|&&a, &&b| distance[pool[a]].total_cmp(&distance[pool[b]]))
                .expect("non-empty niche")
        } else {
            *in_niche.choose(rng).expect("non-empty niche")
        };
        let pos = pool.remove(pick);
        selected.push(members[pos]);
        niche_count[niche] += 1;
    }
    selected
}

/// Translates by the ideal point and divides by hyperplane intercepts.
fn normalize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = points[0].len();
    let ideal: Vec<f64> = (0..m)
        .map(|j| points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let translated: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&ideal).map(|(v, z)| v - z).collect())
        .collect();
    let intercepts = hyperplane_intercepts(&translated).unwrap_or_else(|| {
        // Degenerate hyperplane: fall back to the per-objective maximum.
        (0..m)
            .map(|j| {
                let hi = translated.iter().map(|p| p[j]).fold(0.0, f64::max);
                if hi > 1e-12 {
                    hi
                } else {
                    1.0
                }
            })
            .collect()
    });
    translated
        .into_iter()
        .map(|p| p.iter().zip(&intercepts).map(|(v, a)| v / a).collect())
        .collect()
}

fn hyperplane_intercepts(translated: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = translated[0].len();
    let mut extremes = DMatrix::zeros(m, m);
    for axis in 0..m {
        let asf = |p: &Vec<f64>| {
            p.iter()
                .enumerate()
                .map(|(j, &v)| v / if j == axis { 1.0 } else { ASF_EPS })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let best = translated
            .iter()
            .min_by(|a, b| asf(a).total_cmp(&asf(b)))
            .expect("non-empty");
        for j in 0..m {
            extremes[(axis, j)] = best[j];
        }
    }
    let b = extremes.lu().solve(&DVector::from_element(m, 1.0))?;
    let intercepts: Vec<f64> = b.iter().map(|&v| 1.0 / v).collect();
    if intercepts.iter().all(|a| a.is_finite() && *a > INTERCEPT_EPS) {
        Some(intercepts)
    } else {
        None
    }
}

/// Nearest reference line and perpendicular distance for every point.
fn associate(points: &[Vec<f64>], refs: &ReferencePointSet) -> (Vec<usize>, Vec<f64>) {
    let norms: Vec<f64> = refs.points.iter().map(|w| w.iter().map(|v| v * v).sum()).collect();
    points
        .iter()
        .map(|p| {
            let mut best = (0usize, f64::INFINITY);
            for (j, w) in refs.points.iter().enumerate() {
                let t = p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / norms[j];
                let d2: f64 = p.iter().zip(w).map(|(a, b)| (a - t * b).powi(2)).sum();
                if d2 < best.1 {
                    best = (j, d2);
                }
            }
            (best.0, best.1.sqrt())
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moea::reference::generate_reference_points;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const MIN2: [Direction; 2] = [Direction::Min, Direction::Min];

    #[test]
    fn everything_survives_when_it_fits() {
        let pts = vec![[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]];
        let refs = generate_reference_points(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut got = environmental_selection(&pts, &MIN2, &refs, 3, &mut rng);
        got.sort_unstable();
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn whole_fronts_take_priority() {
        let pts = vec![[5.0, 5.0], [0.0, 1.0], [1.0, 0.0], [6.0, 6.0]];
        let refs = generate_reference_points(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut got = environmental_selection(&pts, &MIN2, &refs, 3, &mut rng);
        got.sort_unstable();
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn niching_keeps_spread_and_exact_size() {
        // Dense cluster near one end of a linear front, plus the far end.
        let mut pts: Vec<[f64; 2]> = (0..10).map(|i| [i as f64 * 0.01, 1.0 - i as f64 * 0.01]).collect();
        pts.push([1.0, 0.0]);
        let refs = generate_reference_points(2, 4);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let got = environmental_selection(&pts, &MIN2, &refs, 4, &mut rng);
            assert_eq!(got.len(), 4);
            assert!(got.contains(&10), "extreme point lost with seed {seed}");
            let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(got, environmental_selection(&pts, &MIN2, &refs, 4, &mut rng2));
        }
    }

    #[test]
    fn degenerate_front_still_selects() {
        // All points identical: intercepts collapse to the fallback.
        let pts = vec![[1.0, 1.0, 1.0]; 6];
        let refs = generate_reference_points(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let got = environmental_selection(&pts, &[Direction::Min; 3], &refs, 4, &mut rng);
        assert_eq!(got.len(), 4);
    }
}
