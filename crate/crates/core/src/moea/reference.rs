use serde::{Deserialize, Serialize};

/// Das-Dennis lattice on the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePointSet {
    pub divisions: usize,
    pub points: Vec<Vec<f64>>,
}

impl ReferencePointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// All points with coordinates `k / divisions` (k ≥ 0) summing to 1.
/// There are `C(divisions + objectives − 1, objectives − 1)` of them.
pub fn generate_reference_points(objectives: usize, divisions: usize) -> ReferencePointSet {
    assert!(objectives >= 1 && divisions >= 1);
    let mut points = Vec::new();
    let mut current = vec![0usize; objectives];
    fill(&mut current, 0, divisions, &mut points, divisions);
    ReferencePointSet { divisions, points }
}

fn fill(current: &mut [usize], dim: usize, left: usize, out: &mut Vec<Vec<f64>>, divisions: usize) {
    if dim == current.len() - 1 {
        current[dim] = left;
        out.push(current.iter().map(|&k| k as f64 / divisions as f64).collect());
        return;
    }
    for k in (0..=left).rev() {
        current[dim] = k;
        fill(current, dim + 1, left - k, out, divisions);
    }
}
