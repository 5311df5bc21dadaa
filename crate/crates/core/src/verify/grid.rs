use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid radius must be positive and finite, got {0}")]
    Radius(f64),
    #[error("points per axis must be odd and at least 3, got {0}")]
    Points(usize),
}

/// Tensor grid on the box `‖p‖∞ ≤ radius`, with the origin as a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    radius: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(radius: f64, points_per_axis: usize) -> Result<GridSpec, GridError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GridError::Radius(radius));
        }
        if points_per_axis < 3 || points_per_axis % 2 == 0 {
            return Err(GridError::Points(points_per_axis));
        }
        Ok(GridSpec {
            radius,
            points: points_per_axis,
        })
    }

    /// Radius 0.5 with 11 points per axis; dimension 4 and up uses a
    /// radius-0.3 box with 5 points per axis.
    pub fn default_for(dim: usize) -> GridSpec {
        if dim >= 4 {
            GridSpec { radius: 0.3, points: 5 }
        } else {
            GridSpec { radius: 0.5, points: 11 }
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    /// Node coordinates along one axis; the middle one is exactly 0.
    pub fn axis(&self) -> Vec<f64> {
        let half = (self.points / 2) as i64;
        (-half..=half)
            .map(|k| self.radius * k as f64 / half as f64)
            .collect()
    }

    pub fn len(&self, dim: usize) -> usize {
        self.points.pow(dim as u32)
    }

    /// All nodes in lexicographic order, last coordinate fastest.
    pub fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        let axis = self.axis();
        let mut out = vec![Vec::with_capacity(dim)];
        for _ in 0..dim {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&a| {
                        let mut q = p.clone();
                        q.push(a);
                        q
                    })
                })
                .collect();
        }
        out
    }
}
