use serde::{Deserialize, Serialize};

use crate::geometry::{eps_geom, Point};

/// Weights at or below this magnitude are treated as zero and dropped.
pub const WEIGHT_EPS: f64 = 1e-12;

/// A finite sum of weighted Dirac masses.
///
/// Atoms closer than [`eps_geom`] are merged. Atoms are kept sorted
/// lexicographically by position, and no (near-)zero weights are stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "crate::io::MeasureJson", try_from = "crate::io::MeasureJson")]
pub struct AtomicMeasure {
    atoms: Vec<(Point, f64)>,
    signed: bool,
}

impl AtomicMeasure {
    pub fn positive() -> Self {
        AtomicMeasure {
            atoms: Vec::new(),
            signed: false,
        }
    }

    pub fn signed() -> Self {
        AtomicMeasure {
            atoms: Vec::new(),
            signed: true,
        }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (Point, f64)>, signed: bool) -> Self {
        let mut m = if signed { Self::signed() } else { Self::positive() };
        for (p, w) in atoms {
            m.add(p, w);
        }
        m.normalize();
        m
    }

    pub fn dirac(p: Point, w: f64) -> Self {
        Self::from_atoms([(p, w)], w < 0.0)
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    /// Accumulate `w` at `p`. Call [`AtomicMeasure::normalize`] (or use the
    /// accessors, which do not) once accumulation is done.
    pub fn add(&mut self, p: Point, w: f64) {
        let eps = eps_geom();
        if let Some(slot) = self.atoms.iter_mut().find(|(q, _)| q.dist(&p) <= eps) {
            slot.1 += w;
        } else {
            self.atoms.push((p, w));
        }
        if w < 0.0 {
            self.signed = true;
        }
    }

    /// Drop near-zero atoms and sort by position.
    pub fn normalize(&mut self) {
        self.atoms.retain(|(_, w)| w.abs() > WEIGHT_EPS);
        self.atoms.sort_by(|a, b| a.0.lex_cmp(&b.0));
        if !self.signed && self.atoms.iter().any(|(_, w)| *w < 0.0) {
            self.signed = true;
        }
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// μ(R^d).
    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// Total variation.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w.abs()).sum()
    }

    /// Σ |w|^α.
    pub fn alpha_mass(&self, alpha: f64) -> f64 {
        self.atoms.iter().map(|(_, w)| w.abs().powf(alpha)).sum()
    }

    pub fn weight_at(&self, p: &Point) -> f64 {
        let eps = eps_geom();
        self.atoms
            .iter()
            .filter(|(q, _)| q.dist(p) <= eps)
            .map(|(_, w)| w)
            .sum()
    }

    /// μ(A) for a predicate A.
    pub fn measure_of(&self, pred: impl Fn(&Point) -> bool) -> f64 {
        self.atoms.iter().filter(|(p, _)| pred(p)).map(|(_, w)| w).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::from_atoms(self.atoms.iter().map(|(p, w)| (p.clone(), w * k)), self.signed || k < 0.0)
    }

    /// `self - other`, always signed.
    pub fn sub(&self, other: &AtomicMeasure) -> Self {
        let mut out = Self::signed();
        for (p, w) in &self.atoms {
            out.add(p.clone(), *w);
        }
        for (p, w) in &other.atoms {
            out.add(p.clone(), -*w);
        }
        out.normalize();
        out
    }

    pub fn plus(&self, other: &AtomicMeasure) -> Self {
        let mut out = if self.signed || other.signed { Self::signed() } else { Self::positive() };
        for (p, w) in self.atoms.iter().chain(other.atoms.iter()) {
            out.add(p.clone(), *w);
        }
        out.normalize();
        out
    }

    /// Positive and negative parts of the Jordan decomposition.
    pub fn jordan(&self) -> (AtomicMeasure, AtomicMeasure) {
        let pos = Self::from_atoms(self.atoms.iter().filter(|(_, w)| *w > 0.0).cloned(), false);
        let neg = Self::from_atoms(
            self.atoms.iter().filter(|(_, w)| *w < 0.0).map(|(p, w)| (p.clone(), -w)),
            false,
        );
        (pos, neg)
    }

    /// True when every atom of `self - other` has weight at most `tol`.
    pub fn approx_eq(&self, other: &AtomicMeasure, tol: f64) -> bool {
        let diff = self.sub(other);
        diff.atoms.iter().all(|(_, w)| w.abs() <= tol)
    }

    pub fn max_abs_difference(&self, other: &AtomicMeasure) -> f64 {
        self.sub(other).atoms.iter().map(|(_, w)| w.abs()).fold(0.0, f64::max)
    }
}

impl Default for AtomicMeasure {
    fn default() -> Self {
        Self::positive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_drops_zeros() {
        let mut m = AtomicMeasure::signed();
        m.add(Point::xy(0.0, 0.0), 1.0);
        m.add(Point::xy(1e-12, 0.0), -1.0);
        m.add(Point::xy(1.0, 0.0), 0.5);
        m.normalize();
        assert_eq!(m.len(), 1);
        assert_eq!(m.total(), 0.5);
    }

    #[test]
    fn jordan_parts() {
        let m = AtomicMeasure::from_atoms([(Point::xy(0.0, 0.0), -2.0), (Point::xy(1.0, 0.0), 2.0)], true);
        let (p, n) = m.jordan();
        assert_eq!(p.total(), 2.0);
        assert_eq!(n.total(), 2.0);
        assert_eq!(m.mass(), 4.0);
        assert!((m.alpha_mass(0.5) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }
}
