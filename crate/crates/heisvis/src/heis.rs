//! The Heisenberg group H_n identified with its Lie algebra.
//!
//! Coordinates are taken in the standard basis e_1, ..., e_{2n+1}; the only
//! nontrivial brackets are [e_{2i-1}, e_{2i}] = e_{2n+1} for 1 <= i <= n, so
//! every bracket lands exactly on the center line (only the last coordinate
//! of a bracket is ever nonzero). The group law is Baker-Campbell-Hausdorff,
//! which terminates at the first-order commutator for a 2-step algebra:
//! x * y = x + y + [x, y]/2, and inversion is negation.

use crate::derivation::GradedStructure;
use crate::error::{HeisError, Result};

/// Element of H_n (equivalently of its Lie algebra) in standard coordinates.
/// Carries n explicitly so mixing ambient groups is an error, not silent
/// coordinate corruption.
#[derive(Debug, Clone, PartialEq)]
pub struct LieElement {
    n: usize,
    coords: Vec<f64>,
}

impl LieElement {
    /// `coords` must have length 2n+1 with finite entries.
    pub fn new(n: usize, coords: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(HeisError::InvalidArgument("n must be at least 1".into()));
        }
        if coords.len() != 2 * n + 1 {
            return Err(HeisError::DimensionMismatch(format!(
                "H_{n} needs {} coordinates, got {}",
                2 * n + 1,
                coords.len()
            )));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(HeisError::NonFinite(format!("{coords:?}")));
        }
        Ok(LieElement { n, coords })
    }

    pub fn zero(n: usize) -> Self {
        LieElement { n, coords: vec![0.0; 2 * n + 1] }
    }

    /// Standard basis vector e_{i+1} (0-based index into the 2n+1 coordinates).
    pub fn basis(n: usize, i: usize) -> Self {
        assert!(i < 2 * n + 1, "basis index {i} out of range for H_{n}");
        let mut coords = vec![0.0; 2 * n + 1];
        coords[i] = 1.0;
        LieElement { n, coords }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Coefficient of e_{2n+1}.
    pub fn center_coord(&self) -> f64 {
        self.coords[2 * self.n]
    }

    pub(crate) fn from_coords_unchecked(n: usize, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), 2 * n + 1);
        LieElement { n, coords }
    }

    fn check_same_group(&self, other: &LieElement) -> Result<()> {
        if self.n != other.n {
            return Err(HeisError::DimensionMismatch(format!(
                "operands live on H_{} and H_{}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    /// Lie bracket [x, y] = sum_i (x_{2i-1} y_{2i} - x_{2i} y_{2i-1}) e_{2n+1}.
    pub fn bracket(&self, other: &LieElement) -> Result<LieElement> {
        self.check_same_group(other)?;
        let mut out = vec![0.0; self.dim()];
        out[2 * self.n] = self.symplectic_pairing(other);
        Ok(LieElement { n: self.n, coords: out })
    }

    /// The scalar part of the bracket: coefficient of e_{2n+1} in [x, y].
    #[inline]
    pub fn symplectic_pairing(&self, other: &LieElement) -> f64 {
        let mut z = 0.0;
        for i in 0..self.n {
            z += self.coords[2 * i] * other.coords[2 * i + 1]
                - self.coords[2 * i + 1] * other.coords[2 * i];
        }
        z
    }

    /// BCH product x * y = x + y + [x, y]/2.
    pub fn bch_mul(&self, other: &LieElement) -> Result<LieElement> {
        self.check_same_group(other)?;
        let mut out: Vec<f64> =
            self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        out[2 * self.n] += 0.5 * self.symplectic_pairing(other);
        Ok(LieElement { n: self.n, coords: out })
    }

    /// Group inverse; negation, since x * (-x) = [x, -x]/2 = 0.
    pub fn bch_inv(&self) -> LieElement {
        LieElement { n: self.n, coords: self.coords.iter().map(|c| -c).collect() }
    }

    /// (-self) * other, the displacement entering left-invariant distances.
    pub fn left_difference(&self, other: &LieElement) -> Result<LieElement> {
        self.bch_inv().bch_mul(other)
    }

    pub fn add(&self, other: &LieElement) -> Result<LieElement> {
        self.check_same_group(other)?;
        Ok(LieElement {
            n: self.n,
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> LieElement {
        LieElement { n: self.n, coords: self.coords.iter().map(|c| c * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Element of the semidirect extension G_A = H_n x|_A R.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvElement {
    pub g: LieElement,
    pub t: f64,
}

impl SolvElement {
    pub fn new(g: LieElement, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(HeisError::NonFinite(format!("t = {t}")));
        }
        Ok(SolvElement { g, t })
    }
}

/// Product in G_A: (g, t1) (h, t2) = (g * e^{t1 A} h, t1 + t2), where the
/// flow e^{t1 A} is evaluated through the graded structure of A.
pub fn solv_mul(a: &SolvElement, b: &SolvElement, gs: &GradedStructure) -> Result<SolvElement> {
    if a.g.n() != gs.n() || b.g.n() != gs.n() {
        return Err(HeisError::DimensionMismatch(format!(
            "solv operands on H_{}/H_{} vs structure on H_{}",
            a.g.n(),
            b.g.n(),
            gs.n()
        )));
    }
    let flowed = gs.flow(a.t, &b.g)?;
    Ok(SolvElement { g: a.g.bch_mul(&flowed)?, t: a.t + b.t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::DerivationSpec;
    use crate::rng::SampleStream;
    use proptest::prelude::*;

    fn el(coords: &[f64]) -> LieElement {
        let n = (coords.len() - 1) / 2;
        LieElement::new(n, coords.to_vec()).unwrap()
    }

    #[test]
    fn bracket_of_first_pair_is_center() {
        let e1 = LieElement::basis(1, 0);
        let e2 = LieElement::basis(1, 1);
        assert_eq!(e1.bracket(&e2).unwrap(), LieElement::basis(1, 2));
    }

    #[test]
    fn bracket_example_negative() {
        let x = el(&[-1.0, 0.0, 0.0]);
        let y = el(&[1.0, 1.0, 0.0]);
        assert_eq!(x.bracket(&y).unwrap(), el(&[0.0, 0.0, -1.0]));
    }

    #[test]
    fn bch_product_example() {
        let x = el(&[1.0, 0.0, 0.0]);
        let y = el(&[0.0, 1.0, 0.0]);
        assert_eq!(x.bch_mul(&y).unwrap(), el(&[1.0, 1.0, 0.5]));
    }

    #[test]
    fn inverse_is_negation_and_cancels_exactly() {
        let x = el(&[0.3, -1.2, 4.0]);
        let prod = x.bch_mul(&x.bch_inv()).unwrap();
        assert_eq!(prod, LieElement::zero(1), "x * x^-1 must vanish exactly");
    }

    #[test]
    fn mixed_dimension_is_error() {
        let a = LieElement::zero(1);
        let b = LieElement::zero(2);
        assert!(matches!(a.bracket(&b), Err(HeisError::DimensionMismatch(_))));
        assert!(matches!(a.bch_mul(&b), Err(HeisError::DimensionMismatch(_))));
    }

    #[test]
    fn antisymmetry_is_bitwise_exact() {
        let s = SampleStream::new(11, 0);
        for i in 0..1000u64 {
            let mut c = [0.0; 5];
            s.box_point_at(2 * i, 10.0, &mut c);
            let mut d = [0.0; 5];
            s.box_point_at(2 * i + 1, 10.0, &mut d);
            let x = el(&c);
            let y = el(&d);
            let xy = x.bracket(&y).unwrap();
            let yx = y.bracket(&x).unwrap();
            assert_eq!(xy, yx.scale(-1.0), "antisymmetry must hold bitwise");
        }
    }

    #[test]
    fn double_bracket_vanishes_exactly() {
        // 2-step nilpotency: brackets land in the center, whose coordinates
        // never enter the pairing, so [[x,y],z] is exactly zero.
        let s = SampleStream::new(13, 0);
        for i in 0..1000u64 {
            let mut c = [0.0; 7];
            s.box_point_at(3 * i, 5.0, &mut c);
            let mut d = [0.0; 7];
            s.box_point_at(3 * i + 1, 5.0, &mut d);
            let mut e = [0.0; 7];
            s.box_point_at(3 * i + 2, 5.0, &mut e);
            let (x, y, z) = (el(&c), el(&d), el(&e));
            let inner = x.bracket(&y).unwrap();
            assert_eq!(inner.bracket(&z).unwrap(), LieElement::zero(3));
            assert_eq!(z.bracket(&inner).unwrap(), LieElement::zero(3));
        }
    }

    /// BCH associativity tolerance: coords O(1), one multiply-add each, so
    /// 1e-12 leaves three orders of magnitude over accumulated roundoff.
    const ASSOC_TOL: f64 = 1e-12;

    #[test]
    fn bch_associativity_on_many_triples() {
        let s = SampleStream::new(17, 0);
        for i in 0..10_000u64 {
            let mut c = [0.0; 5];
            s.box_point_at(3 * i, 1.0, &mut c);
            let mut d = [0.0; 5];
            s.box_point_at(3 * i + 1, 1.0, &mut d);
            let mut e = [0.0; 5];
            s.box_point_at(3 * i + 2, 1.0, &mut e);
            let (x, y, z) = (el(&c), el(&d), el(&e));
            let lhs = x.bch_mul(&y).unwrap().bch_mul(&z).unwrap();
            let rhs = x.bch_mul(&y.bch_mul(&z).unwrap()).unwrap();
            let err = lhs
                .coords()
                .iter()
                .zip(rhs.coords())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err <= ASSOC_TOL, "associativity defect {err:e} at triple {i}");
        }
    }

    #[test]
    fn solv_group_law_flows_second_factor() {
        // A = diag(1,2,3): (0, ln 2) . ((1,1,1), 0) = ((2,4,8), ln 2)
        let gs = DerivationSpec::from_matrix_rows(
            1,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]],
        )
        .unwrap()
        .decompose(1e-9)
        .unwrap();
        let a = SolvElement::new(LieElement::zero(1), 2f64.ln()).unwrap();
        let b = SolvElement::new(el(&[1.0, 1.0, 1.0]), 0.0).unwrap();
        let prod = solv_mul(&a, &b, &gs).unwrap();
        assert!((prod.t - 2f64.ln()).abs() < 1e-15);
        for (got, want) in prod.g.coords().iter().zip([2.0, 4.0, 8.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn solv_associativity() {
        let gs = DerivationSpec::from_matrix_rows(
            1,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]],
        )
        .unwrap()
        .decompose(1e-9)
        .unwrap();
        let s = SampleStream::new(23, 0);
        for i in 0..1000u64 {
            let mut pts = [[0.0; 3]; 3];
            let mut ts = [0.0; 3];
            for (j, p) in pts.iter_mut().enumerate() {
                s.box_point_at(6 * i + 2 * j as u64, 1.0, p);
                ts[j] = s.range_at(6 * i + 2 * j as u64 + 1, -1.5, 1.5);
            }
            let trio: Vec<SolvElement> = pts
                .iter()
                .zip(ts)
                .map(|(p, t)| SolvElement::new(el(p), t).unwrap())
                .collect();
            let lhs = solv_mul(&solv_mul(&trio[0], &trio[1], &gs).unwrap(), &trio[2], &gs).unwrap();
            let rhs = solv_mul(&trio[0], &solv_mul(&trio[1], &trio[2], &gs).unwrap(), &gs).unwrap();
            let mut err = (lhs.t - rhs.t).abs();
            for (a, b) in lhs.g.coords().iter().zip(rhs.g.coords()) {
                err = err.max((a - b).abs());
            }
            assert!(err <= 1e-9, "solvable associativity defect {err:e}");
        }
    }

    proptest! {
        #[test]
        fn bracket_bilinearity(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            x in proptest::collection::vec(-2.0f64..2.0, 5),
            y in proptest::collection::vec(-2.0f64..2.0, 5),
            z in proptest::collection::vec(-2.0f64..2.0, 5),
        ) {
            let (x, y, z) = (el(&x), el(&y), el(&z));
            let lhs = x.scale(a).add(&y.scale(b)).unwrap().bracket(&z).unwrap();
            let rhs = x.bracket(&z).unwrap().scale(a)
                .add(&y.bracket(&z).unwrap().scale(b)).unwrap();
            let err = lhs.coords().iter().zip(rhs.coords())
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            prop_assert!(err <= 1e-12, "bilinearity defect {}", err);
        }
    }
}
