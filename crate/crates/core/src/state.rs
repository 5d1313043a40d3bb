use std::ops::Deref;

/// A point `z = (u, m, b)` of `ℝ^{2d+1}`: density, momentum `m = u·b` and
/// velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; 2 * d + 1])
    }

    /// Wraps raw coordinates; panics unless the length is odd and ≥ 3.
    pub fn from_vec(v: Vec<f64>) -> Self {
        assert!(
            v.len() >= 3 && v.len() % 2 == 1,
            "state length must be 2d+1"
        );
        Self(v)
    }

    pub fn from_parts(u: f64, m: &[f64], b: &[f64]) -> Self {
        assert_eq!(m.len(), b.len());
        let mut v = Vec::with_capacity(1 + 2 * m.len());
        v.push(u);
        v.extend_from_slice(m);
        v.extend_from_slice(b);
        Self(v)
    }

    /// Spatial dimension `d`.
    pub fn d(&self) -> usize {
        (self.0.len() - 1) / 2
    }

    pub fn u(&self) -> f64 {
        self.0[0]
    }

    pub fn m(&self) -> &[f64] {
        &self.0[1..=self.d()]
    }

    pub fn b(&self) -> &[f64] {
        &self.0[self.d() + 1..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn add_scaled(&mut self, other: &[f64], scale: f64) {
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += scale * b;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| v * s).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<StateVector> for Vec<f64> {
    fn from(s: StateVector) -> Self {
        s.0
    }
}
