//! Ordered point clouds in `[0,1)^n` with optional per-point component labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dims: usize,
    points: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn new(dims: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        for p in &points {
            if p.len() != dims {
                return Err(Error::DimensionMismatch { expected: dims, got: p.len() });
            }
        }
        Ok(PointCloud { dims, points, labels: None })
    }

    pub fn with_labels(dims: usize, points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::InvalidConfig(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        let mut cloud = PointCloud::new(dims, points)?;
        cloud.labels = Some(labels);
        Ok(cloud)
    }

    pub fn empty(dims: usize) -> Self {
        PointCloud { dims, points: Vec::new(), labels: None }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn push(&mut self, point: Vec<f64>, label: Option<usize>) -> Result<()> {
        if point.len() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, got: point.len() });
        }
        self.points.push(point);
        if let Some(l) = label {
            self.labels.get_or_insert_with(Vec::new).push(l);
        }
        Ok(())
    }

    /// Concatenates two clouds; labels are kept only when both carry them.
    pub fn concat(mut self, other: PointCloud) -> Result<PointCloud> {
        if other.dims != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, got: other.dims });
        }
        match (&mut self.labels, other.labels) {
            (Some(a), Some(b)) => a.extend(b),
            (a, _) => *a = None,
        }
        self.points.extend(other.points);
        Ok(self)
    }

    /// Greedy farthest-point subset under the torus metric: starts from the
    /// first point and repeatedly adds the point maximizing the minimum
    /// distance to the selection. Near-uniform spread keeps downstream
    /// feature matrices well conditioned, which an i.i.d. draw of a
    /// minimal-size design does not.
    pub fn farthest_subset(&self, count: usize) -> Result<PointCloud> {
        if count == 0 {
            return Err(Error::InvalidConfig("subset size must be ≥ 1".into()));
        }
        if self.points.len() < count {
            return Err(Error::InsufficientCandidates {
                available: self.points.len(),
                needed: count,
            });
        }
        let dist2 = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = (x - y + 0.5).rem_euclid(1.0) - 0.5;
                    d * d
                })
                .sum()
        };
        let mut selected = vec![0usize];
        let mut dist: Vec<f64> =
            self.points.iter().map(|p| dist2(p, &self.points[0])).collect();
        while selected.len() < count {
            let (best, _) = dist
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .expect("non-empty cloud");
            selected.push(best);
            for (i, p) in self.points.iter().enumerate() {
                dist[i] = dist[i].min(dist2(p, &self.points[best]));
            }
        }
        let points = selected.iter().map(|&i| self.points[i].clone()).collect();
        match &self.labels {
            Some(labels) => PointCloud::with_labels(
                self.dims,
                points,
                selected.iter().map(|&i| labels[i]).collect(),
            ),
            None => PointCloud::new(self.dims, points),
        }
    }

    /// Componentwise translation modulo 1.
    pub fn translated(&self, t: &[f64]) -> Result<PointCloud> {
        if t.len() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, got: t.len() });
        }
        let points = self
            .points
            .iter()
            .map(|p| p.iter().zip(t).map(|(x, s)| (x + s).rem_euclid(1.0)).collect())
            .collect();
        Ok(PointCloud { dims: self.dims, points, labels: self.labels.clone() })
    }
}
