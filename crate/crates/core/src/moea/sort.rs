//! Pareto dominance and fast non-dominated sorting.

use crate::objectives::Direction;

/// True iff `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64], directions: &[Direction]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(a.len(), directions.len());
    let mut strictly_better = false;
    for ((&x, &y), dir) in a.iter().zip(b).zip(directions) {
        let (better, worse) = match dir {
            Direction::Min => (x < y, x > y),
            Direction::Max => (x > y, x < y),
        };
        if worse {
            return false;
        }
        strictly_better |= better;
    }
    strictly_better
}

/// Partitions point indices into fronts `F1, F2, …`.
///
/// Members of each front are listed in ascending index order.
pub fn non_dominated_sort<P: AsRef<[f64]>>(points: &[P], directions: &[Direction]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates(a, b, directions) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(b, a, directions) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Front index (0-based) of every point.
pub fn front_ranks<P: AsRef<[f64]>>(points: &[P], directions: &[Direction]) -> Vec<usize> {
    let mut ranks = vec![0; points.len()];
    for (r, front) in non_dominated_sort(points, directions).iter().enumerate() {
        for &i in front {
            ranks[i] = r;
        }
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::DIRECTIONS;

    const MAX2: [Direction; 2] = [Direction::Max, Direction::Max];

    #[test]
    fn dominance_cases() {
        let a = [1.0, 0.9, 0.9, 0.1, 0.9, 0.9];
        let worse = [2.0, 0.8, 0.8, 0.2, 0.8, 0.8];
        assert!(dominates(&a, &worse, &DIRECTIONS));
        assert!(!dominates(&worse, &a, &DIRECTIONS));
        assert!(!dominates(&a, &a, &DIRECTIONS));
        // Better subset size, worse F1.
        let trade = [3.0, 0.9, 0.95, 0.1, 0.9, 0.9];
        assert!(!dominates(&a, &trade, &DIRECTIONS));
        assert!(!dominates(&trade, &a, &DIRECTIONS));
    }

    #[test]
    fn sort_cases() {
        let mutual = vec![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]];
        assert_eq!(non_dominated_sort(&mutual, &MAX2), vec![vec![0, 1, 2]]);
        let chain = vec![[1.0, 1.0], [3.0, 3.0], [2.0, 2.0]];
        assert_eq!(non_dominated_sort(&chain, &MAX2), vec![vec![1], vec![2], vec![0]]);
        assert_eq!(front_ranks(&chain, &MAX2), vec![2, 0, 1]);
        let empty: Vec<[f64; 2]> = vec![];
        assert!(non_dominated_sort(&empty, &MAX2).is_empty());
    }
}
