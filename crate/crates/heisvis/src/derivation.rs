//! Graded eigenstructure of a diagonalizable derivation of H_n.
//!
//! A derivation A with positive eigenvalues 0 < a_1 < ... < a_{k+1} splits the
//! algebra into eigenspaces U_1 (+) ... (+) U_{k+1} with rigid structure:
//! the top block is the center line, [U_i, U_j] = 0 unless i + j = k + 2 - 1
//! (1-based: i + j = k+1), complementary blocks pair nondegenerately,
//! a_i + a_{k+1-i} = a_{k+1}, and dim U_i = dim U_{k+1-i}. From the pairing we
//! build an adapted basis: dual pairs [e_s, eta_t] = delta_st e across
//! complementary blocks, and a Darboux basis on the middle block when k is
//! odd. All downstream metric computations run in these adapted coordinates,
//! with the adapted basis declared orthonormal.

use crate::error::{HeisError, Result};
use crate::heis::LieElement;
use crate::linalg::{self, Mat};
use crate::rng::SampleStream;

/// Relative tolerance for merging computed eigenvalues into one block:
/// |a - b| <= RTOL * max(|a|, |b|, 1). Sits far above QR roundoff (~1e-14)
/// and far below any spectral gap a sane input presents.
pub const EIGENVALUE_GROUP_RTOL: f64 = 1e-9;

/// Rank tolerance for eigenspace extraction: a pivot below
/// RTOL * max|A - lambda I| is treated as zero. True null directions of a
/// diagonalizable matrix with separated groups sit near 1e-13 after the QR
/// pass; genuine pivots sit near the spectral gap.
const NULLSPACE_RTOL: f64 = 1e-7;

/// A pairing matrix whose smallest singular value falls below
/// RTOL * max(sigma_max, 1) is reported as degenerate.
pub const PAIRING_DEGENERACY_RTOL: f64 = 1e-9;

/// Spectral input: one eigenvalue with a basis of its eigenspace.
#[derive(Debug, Clone)]
pub struct SpectralBlock {
    pub eigenvalue: f64,
    pub eigenvectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub enum DerivationForm {
    /// Dense (2n+1)-square matrix in standard coordinates.
    Matrix(Mat),
    /// Eigendecomposition supplied directly; bypasses the QR solver and is
    /// the recommended input form.
    Spectral(Vec<SpectralBlock>),
}

/// A candidate derivation of H_n, prior to structural validation.
#[derive(Debug, Clone)]
pub struct DerivationSpec {
    n: usize,
    form: DerivationForm,
}

impl DerivationSpec {
    pub fn from_matrix(n: usize, matrix: Mat) -> Result<Self> {
        let d = 2 * n + 1;
        if n == 0 {
            return Err(HeisError::InvalidArgument("n must be at least 1".into()));
        }
        if matrix.rows() != d || matrix.cols() != d {
            return Err(HeisError::DimensionMismatch(format!(
                "derivation matrix for H_{n} must be {d}x{d}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_finite() {
            return Err(HeisError::NonFinite("derivation matrix".into()));
        }
        Ok(DerivationSpec { n, form: DerivationForm::Matrix(matrix) })
    }

    pub fn from_matrix_rows(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(n, Mat::from_rows(rows)?)
    }

    pub fn from_diagonal(n: usize, diag: &[f64]) -> Result<Self> {
        if diag.len() != 2 * n + 1 {
            return Err(HeisError::DimensionMismatch(format!(
                "diagonal for H_{n} needs {} entries, got {}",
                2 * n + 1,
                diag.len()
            )));
        }
        Self::from_matrix(n, Mat::diagonal(diag))
    }

    pub fn from_spectral(n: usize, blocks: Vec<SpectralBlock>) -> Result<Self> {
        let d = 2 * n + 1;
        if n == 0 {
            return Err(HeisError::InvalidArgument("n must be at least 1".into()));
        }
        for b in &blocks {
            if !b.eigenvalue.is_finite() {
                return Err(HeisError::NonFinite(format!("eigenvalue {}", b.eigenvalue)));
            }
            if b.eigenvectors.is_empty() {
                return Err(HeisError::InvalidArgument(format!(
                    "spectral block {} has no eigenvectors",
                    b.eigenvalue
                )));
            }
            for v in &b.eigenvectors {
                if v.len() != d {
                    return Err(HeisError::DimensionMismatch(format!(
                        "eigenvector length {} for H_{n} (need {d})",
                        v.len()
                    )));
                }
                if !v.iter().all(|c| c.is_finite()) {
                    return Err(HeisError::NonFinite("eigenvector".into()));
                }
            }
        }
        Ok(DerivationSpec { n, form: DerivationForm::Spectral(blocks) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn form(&self) -> &DerivationForm {
        &self.form
    }

    /// The derivation as a matrix; for spectral form, P D P^-1.
    pub fn matrix(&self) -> Result<Mat> {
        match &self.form {
            DerivationForm::Matrix(m) => Ok(m.clone()),
            DerivationForm::Spectral(blocks) => {
                let d = 2 * self.n + 1;
                let total: usize = blocks.iter().map(|b| b.eigenvectors.len()).sum();
                if total != d {
                    return Err(HeisError::NonDiagonalizable(format!(
                        "spectral form lists {total} eigenvectors, need {d}"
                    )));
                }
                let mut p = Mat::zeros(d, d);
                let mut diag = Vec::with_capacity(d);
                let mut col = 0;
                for b in blocks {
                    for v in &b.eigenvectors {
                        p.set_column(col, v);
                        diag.push(b.eigenvalue);
                        col += 1;
                    }
                }
                let p_inv = p.inverse().map_err(|_| {
                    HeisError::NonDiagonalizable("spectral eigenvectors do not span".into())
                })?;
                Ok(p.mul(&Mat::diagonal(&diag)).mul(&p_inv))
            }
        }
    }

    /// Leibniz check A[x,y] = [Ax,y] + [x,Ay] over all standard basis pairs.
    /// Returns (defect <= tol, max defect), defect in Euclidean norm.
    pub fn validate(&self, tol: f64) -> Result<(bool, f64)> {
        let a = self.matrix()?;
        let defect = leibniz_defect(self.n, &a);
        Ok((defect <= tol, defect))
    }

    /// Full structural decomposition. `tol` governs the Leibniz, center and
    /// adapted-table verifications; eigenvalue grouping always uses the fixed
    /// [`EIGENVALUE_GROUP_RTOL`].
    pub fn decompose(&self, tol: f64) -> Result<GradedStructure> {
        let a = self.matrix()?;
        let defect = leibniz_defect(self.n, &a);
        if defect > tol {
            return Err(HeisError::NotDerivation { defect, tol });
        }
        let (eigenvalues, bases) = self.eigen_data(&a)?;
        for &l in &eigenvalues {
            if l <= 0.0 {
                return Err(HeisError::NonPositiveEigenvalue(l));
            }
        }
        let dims: Vec<usize> = bases.iter().map(|b| b.len()).collect();
        let d = 2 * self.n + 1;
        if dims.iter().sum::<usize>() != d {
            return Err(HeisError::NonDiagonalizable(format!(
                "eigenspaces span {} of {d} dimensions",
                dims.iter().sum::<usize>()
            )));
        }
        // top block must be the center line
        let top = bases.last().expect("at least one block");
        if top.len() != 1 {
            return Err(HeisError::CenterMismatch(format!(
                "top eigenspace has dimension {}",
                top.len()
            )));
        }
        let v = &top[0];
        let vnorm = v.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
        let off = {
            let mut s = 0.0;
            for &c in &v.coords()[..d - 1] {
                s += c * c;
            }
            s.sqrt() / vnorm
        };
        if off > tol.max(1e-12) {
            return Err(HeisError::CenterMismatch(format!(
                "top eigenvector deviates from e_{{2n+1}} by sin angle {off:.3e}"
            )));
        }
        let center = LieElement::basis(self.n, d - 1);
        let (adapted, basis_mat, basis_inv, block_offsets) =
            build_adapted(self.n, eigenvalues.len(), &bases, &center)?;
        Ok(GradedStructure {
            n: self.n,
            eigenvalues,
            dims,
            eigenspace_bases: bases,
            center,
            adapted,
            basis_mat,
            basis_inv,
            block_offsets,
            matrix: a,
        })
    }

    /// Grouped increasing eigenvalues and eigenspace bases.
    fn eigen_data(&self, a: &Mat) -> Result<(Vec<f64>, Vec<Vec<LieElement>>)> {
        match &self.form {
            DerivationForm::Matrix(_) => {
                let mut raw = linalg::real_eigenvalues(a)?;
                raw.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let mut groups: Vec<(f64, usize)> = Vec::new(); // (sum, count)
                for l in raw {
                    match groups.last_mut() {
                        Some((sum, count))
                            if {
                                let mean = *sum / *count as f64;
                                (l - mean).abs()
                                    <= EIGENVALUE_GROUP_RTOL * l.abs().max(mean.abs()).max(1.0)
                            } =>
                        {
                            *sum += l;
                            *count += 1;
                        }
                        _ => groups.push((l, 1)),
                    }
                }
                let d = 2 * self.n + 1;
                let mut eigenvalues = Vec::with_capacity(groups.len());
                let mut bases = Vec::with_capacity(groups.len());
                for (sum, count) in groups {
                    let mean = sum / count as f64;
                    let shifted = a.sub(&Mat::identity(d).scale(mean));
                    let ns = linalg::null_space(&shifted, NULLSPACE_RTOL);
                    if ns.len() != count {
                        return Err(HeisError::NonDiagonalizable(format!(
                            "eigenvalue {mean} has algebraic multiplicity {count} \
                             but geometric multiplicity {}",
                            ns.len()
                        )));
                    }
                    eigenvalues.push(mean);
                    bases.push(
                        ns.into_iter()
                            .map(|v| LieElement::from_coords_unchecked(self.n, v))
                            .collect(),
                    );
                }
                Ok((eigenvalues, bases))
            }
            DerivationForm::Spectral(blocks) => {
                let mut sorted: Vec<&SpectralBlock> = blocks.iter().collect();
                sorted.sort_by(|x, y| x.eigenvalue.partial_cmp(&y.eigenvalue).unwrap());
                let mut eigenvalues: Vec<f64> = Vec::new();
                let mut bases: Vec<Vec<LieElement>> = Vec::new();
                for b in sorted {
                    let vecs = b
                        .eigenvectors
                        .iter()
                        .map(|v| LieElement::from_coords_unchecked(self.n, v.clone()));
                    match eigenvalues.last() {
                        Some(&prev)
                            if (b.eigenvalue - prev).abs()
                                <= EIGENVALUE_GROUP_RTOL
                                    * b.eigenvalue.abs().max(prev.abs()).max(1.0) =>
                        {
                            bases.last_mut().unwrap().extend(vecs);
                        }
                        _ => {
                            eigenvalues.push(b.eigenvalue);
                            bases.push(vecs.collect());
                        }
                    }
                }
                Ok((eigenvalues, bases))
            }
        }
    }
}

fn leibniz_defect(n: usize, a: &Mat) -> f64 {
    let d = 2 * n + 1;
    let images: Vec<LieElement> = (0..d)
        .map(|i| {
            LieElement::from_coords_unchecked(n, a.mul_vec(LieElement::basis(n, i).coords()))
        })
        .collect();
    let mut defect = 0.0f64;
    for i in 0..d {
        for j in i + 1..d {
            let ei = LieElement::basis(n, i);
            let ej = LieElement::basis(n, j);
            let lhs = LieElement::from_coords_unchecked(
                n,
                a.mul_vec(ei.bracket(&ej).expect("same n").coords()),
            );
            let rhs = images[i]
                .bracket(&ej)
                .expect("same n")
                .add(&ei.bracket(&images[j]).expect("same n"))
                .expect("same n");
            let err: f64 = lhs
                .coords()
                .iter()
                .zip(rhs.coords())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            defect = defect.max(err);
        }
    }
    defect
}

/// Dual pair of complementary blocks: [e_s, eta_t] = delta_st e.
#[derive(Debug, Clone)]
pub struct BlockPair {
    /// 0-based index of the lower block U_{low+1}.
    pub low_block: usize,
    /// 0-based index of the complementary block.
    pub high_block: usize,
    pub e: Vec<LieElement>,
    pub eta: Vec<LieElement>,
}

/// Darboux basis of the middle block (k odd): [e_s, eta_t] = delta_st e and
/// [e_s, e_t] = [eta_s, eta_t] = 0.
#[derive(Debug, Clone)]
pub struct DarbouxBlock {
    pub block: usize,
    pub e: Vec<LieElement>,
    pub eta: Vec<LieElement>,
}

#[derive(Debug, Clone)]
pub struct AdaptedBasis {
    pub pairs: Vec<BlockPair>,
    pub middle: Option<DarbouxBlock>,
    pub center: LieElement,
}

impl AdaptedBasis {
    /// Vectors of one block in adapted-coordinate column order.
    pub fn block_vectors(&self, block: usize) -> Vec<&LieElement> {
        for p in &self.pairs {
            if p.low_block == block {
                return p.e.iter().collect();
            }
            if p.high_block == block {
                return p.eta.iter().collect();
            }
        }
        if let Some(m) = &self.middle {
            if m.block == block {
                let mut v = Vec::with_capacity(2 * m.e.len());
                for (e, eta) in m.e.iter().zip(&m.eta) {
                    v.push(e);
                    v.push(eta);
                }
                return v;
            }
        }
        vec![&self.center]
    }
}

/// Builds the adapted basis from initial eigenspace bases.
///
/// Complementary pair (i, k+1-i): keep the initial basis of the lower block
/// as (e_s); invert the pairing matrix Omega_st = <[u_s, w_t], e> (LU with
/// partial pivoting) and set eta = w Omega^-1, so [e_s, eta_t] = delta_st e.
/// Middle block: symplectic Gram-Schmidt with complete pivoting on the skew
/// pairing, largest |omega| first.
fn build_adapted(
    n: usize,
    num_blocks: usize,
    bases: &[Vec<LieElement>],
    center: &LieElement,
) -> Result<(AdaptedBasis, Mat, Mat, Vec<usize>)> {
    let k = num_blocks - 1; // blocks 0..k, block k (0-based) is the center
    let d = 2 * n + 1;
    let mut block_vectors: Vec<Option<Vec<LieElement>>> = vec![None; num_blocks];
    let mut pairs = Vec::new();
    let mut middle = None;

    for low in 0..k {
        let high = k - 1 - low;
        if low > high {
            break;
        }
        if low == high {
            // middle block: skew pairing, Darboux reduction
            let (e, eta) = darboux_basis(&bases[low], low)?;
            let mut inter = Vec::with_capacity(2 * e.len());
            for (a, b) in e.iter().zip(&eta) {
                inter.push(a.clone());
                inter.push(b.clone());
            }
            block_vectors[low] = Some(inter);
            middle = Some(DarbouxBlock { block: low, e, eta });
            break;
        }
        let u = &bases[low];
        let w = &bases[high];
        if u.len() != w.len() {
            return Err(HeisError::DegeneratePairing(format!(
                "blocks {low} and {high} have dimensions {} and {}",
                u.len(),
                w.len()
            )));
        }
        let m = u.len();
        let mut omega = Mat::zeros(m, m);
        for (s, us) in u.iter().enumerate() {
            for (t, wt) in w.iter().enumerate() {
                omega.set(s, t, us.symplectic_pairing(wt));
            }
        }
        let sv = linalg::singular_values(&omega);
        let (smax, smin) = (sv[0], sv[m - 1]);
        if smin <= PAIRING_DEGENERACY_RTOL * smax.max(1.0) {
            return Err(HeisError::DegeneratePairing(format!(
                "pairing of blocks {low}/{high} has sigma_min {smin:.3e}"
            )));
        }
        let omega_inv = omega.inverse()?;
        let eta: Vec<LieElement> = (0..m)
            .map(|t| {
                let mut acc = LieElement::zero(n);
                for (r, wr) in w.iter().enumerate() {
                    acc = acc.add(&wr.scale(omega_inv.get(r, t))).expect("same n");
                }
                acc
            })
            .collect();
        block_vectors[low] = Some(u.clone());
        block_vectors[high] = Some(eta.clone());
        pairs.push(BlockPair { low_block: low, high_block: high, e: u.clone(), eta });
    }
    block_vectors[k] = Some(vec![center.clone()]);

    let mut basis_mat = Mat::zeros(d, d);
    let mut block_offsets = Vec::with_capacity(num_blocks);
    let mut col = 0;
    for bv in &block_vectors {
        block_offsets.push(col);
        for v in bv.as_ref().expect("every block fills") {
            basis_mat.set_column(col, v.coords());
            col += 1;
        }
    }
    debug_assert_eq!(col, d);
    let basis_inv = basis_mat
        .inverse()
        .map_err(|_| HeisError::NonDiagonalizable("adapted basis does not span".into()))?;
    Ok((AdaptedBasis { pairs, middle, center: center.clone() }, basis_mat, basis_inv, block_offsets))
}

/// Symplectic Gram-Schmidt on one block with complete pivoting: pick the pair
/// with the largest |pairing|, normalize it to a Darboux pair, project the
/// rest into its symplectic complement, recurse.
fn darboux_basis(basis: &[LieElement], block: usize) -> Result<(Vec<LieElement>, Vec<LieElement>)> {
    let mut rem: Vec<LieElement> = basis.to_vec();
    if rem.len() % 2 != 0 {
        return Err(HeisError::DegeneratePairing(format!(
            "middle block {block} has odd dimension {}",
            rem.len()
        )));
    }
    let scale = {
        let mut s = 0.0f64;
        for (i, a) in rem.iter().enumerate() {
            for b in rem.iter().skip(i + 1) {
                s = s.max(a.symplectic_pairing(b).abs());
            }
        }
        s
    };
    let mut es = Vec::new();
    let mut etas = Vec::new();
    while !rem.is_empty() {
        let (mut bs, mut bt, mut best) = (0usize, 1usize, 0.0f64);
        for i in 0..rem.len() {
            for j in i + 1..rem.len() {
                let w = rem[i].symplectic_pairing(&rem[j]).abs();
                if w > best {
                    best = w;
                    bs = i;
                    bt = j;
                }
            }
        }
        if best <= PAIRING_DEGENERACY_RTOL * scale.max(1.0) {
            return Err(HeisError::DegeneratePairing(format!(
                "middle block {block} skew pairing is singular (max residual {best:.3e})"
            )));
        }
        let w = rem[bs].symplectic_pairing(&rem[bt]);
        let e_new = rem[bs].clone();
        let eta_new = rem[bt].scale(1.0 / w);
        rem.remove(bt);
        rem.remove(bs);
        for v in &mut rem {
            let a = v.symplectic_pairing(&eta_new); // coefficient along e_new
            let b = v.symplectic_pairing(&e_new); // coefficient along eta_new
            *v = v
                .add(&e_new.scale(-a))
                .expect("same n")
                .add(&eta_new.scale(b))
                .expect("same n");
        }
        es.push(e_new);
        etas.push(eta_new);
    }
    Ok((es, etas))
}

/// Decomposed derivation: graded eigenstructure plus adapted coordinates.
#[derive(Debug, Clone)]
pub struct GradedStructure {
    n: usize,
    eigenvalues: Vec<f64>,
    dims: Vec<usize>,
    eigenspace_bases: Vec<Vec<LieElement>>,
    center: LieElement,
    adapted: AdaptedBasis,
    basis_mat: Mat,
    basis_inv: Mat,
    block_offsets: Vec<usize>,
    matrix: Mat,
}

impl GradedStructure {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    /// Number of non-center blocks (1-based indexing in the structure theory:
    /// eigenvalues a_1 < ... < a_k < a_{k+1}).
    pub fn k(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn eigenspace_basis(&self, block: usize) -> &[LieElement] {
        &self.eigenspace_bases[block]
    }

    pub fn center_generator(&self) -> &LieElement {
        &self.center
    }

    pub fn adapted_basis(&self) -> &AdaptedBasis {
        &self.adapted
    }

    pub fn derivation_matrix(&self) -> &Mat {
        &self.matrix
    }

    pub(crate) fn basis_inv(&self) -> &Mat {
        &self.basis_inv
    }

    pub(crate) fn basis_mat(&self) -> &Mat {
        &self.basis_mat
    }

    pub fn block_offsets(&self) -> &[usize] {
        &self.block_offsets
    }

    pub fn block_range(&self, block: usize) -> std::ops::Range<usize> {
        let start = self.block_offsets[block];
        start..start + self.dims[block]
    }

    fn check_n(&self, x: &LieElement) -> Result<()> {
        if x.n() != self.n {
            return Err(HeisError::DimensionMismatch(format!(
                "element on H_{} vs structure on H_{}",
                x.n(),
                self.n
            )));
        }
        Ok(())
    }

    /// Coordinates of x in the adapted basis, block order.
    pub fn adapted_coords(&self, x: &LieElement) -> Result<Vec<f64>> {
        self.check_n(x)?;
        Ok(self.basis_inv.mul_vec(x.coords()))
    }

    /// Element with the given adapted coordinates.
    pub fn from_adapted(&self, w: &[f64]) -> Result<LieElement> {
        if w.len() != self.dim() {
            return Err(HeisError::DimensionMismatch(format!(
                "adapted coordinate vector length {} vs dimension {}",
                w.len(),
                self.dim()
            )));
        }
        Ok(LieElement::from_coords_unchecked(self.n, self.basis_mat.mul_vec(w)))
    }

    /// Euclidean norm of the block-i component in adapted coordinates.
    pub fn block_component_norm(&self, x: &LieElement, block: usize) -> Result<f64> {
        let w = self.adapted_coords(x)?;
        Ok(self.block_range(block).map(|j| w[j] * w[j]).sum::<f64>().sqrt())
    }

    /// Element of block `block` with the given coefficients over that block's
    /// adapted vectors.
    pub fn element_from_block(&self, block: usize, coeffs: &[f64]) -> Result<LieElement> {
        if coeffs.len() != self.dims[block] {
            return Err(HeisError::DimensionMismatch(format!(
                "block {block} has dimension {}, got {} coefficients",
                self.dims[block],
                coeffs.len()
            )));
        }
        let mut w = vec![0.0; self.dim()];
        for (j, &c) in self.block_range(block).zip(coeffs) {
            w[j] = c;
        }
        self.from_adapted(&w)
    }

    /// The flow e^{tA} x, evaluated by scaling adapted blocks by e^{t a_i}.
    pub fn flow(&self, t: f64, x: &LieElement) -> Result<LieElement> {
        self.check_n(x)?;
        if !t.is_finite() {
            return Err(HeisError::NonFinite(format!("flow time {t}")));
        }
        let mut w = self.basis_inv.mul_vec(x.coords());
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            let f = (t * l).exp();
            for j in self.block_range(i) {
                w[j] *= f;
            }
        }
        Ok(LieElement::from_coords_unchecked(self.n, self.basis_mat.mul_vec(&w)))
    }

    /// Re-encodes the structure as a spectral-form spec (initial bases).
    pub fn to_spectral_spec(&self) -> DerivationSpec {
        let blocks = self
            .eigenvalues
            .iter()
            .zip(&self.eigenspace_bases)
            .map(|(&l, basis)| SpectralBlock {
                eigenvalue: l,
                eigenvectors: basis.iter().map(|v| v.coords().to_vec()).collect(),
            })
            .collect();
        DerivationSpec { n: self.n, form: DerivationForm::Spectral(blocks) }
    }

    /// Rebuilds the adapted basis from the stored initial eigenspace bases.
    pub fn rebuild_adapted_basis(&self) -> Result<AdaptedBasis> {
        let (adapted, _, _, _) =
            build_adapted(self.n, self.eigenvalues.len(), &self.eigenspace_bases, &self.center)?;
        Ok(adapted)
    }
}

/// One named structural check with its numeric defect.
#[derive(Debug, Clone)]
pub struct StructureCheck {
    pub name: &'static str,
    pub pass: bool,
    pub defect: f64,
}

/// Outcome of [`verify_structure`]: per-check pass/fail with numeric defects.
#[derive(Debug, Clone)]
pub struct StructureReport {
    pub checks: Vec<StructureCheck>,
}

impl StructureReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_defect(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.defect))
    }
}

/// Verifies the structural claims for a decomposed derivation numerically:
/// Leibniz identity, center block, vanishing brackets between non-complementary
/// blocks, nondegenerate complementary pairings, eigenvalue sum symmetry,
/// dimension symmetry, and the adapted-basis bracket table.
pub fn verify_structure(gs: &GradedStructure, tol: f64) -> StructureReport {
    let mut checks = Vec::new();
    let kp1 = gs.eigenvalues.len(); // number of blocks, 1-based k+1
    let k = kp1 - 1;

    let leibniz = leibniz_defect(gs.n, &gs.matrix);
    checks.push(StructureCheck { name: "leibniz_identity", pass: leibniz <= tol, defect: leibniz });

    // (1) top block is the center line
    let center_defect = {
        let dim_defect = (gs.dims[k] as f64 - 1.0).abs();
        let v = &gs.eigenspace_bases[k][0];
        let vnorm = v.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut off = 0.0;
        for &c in &v.coords()[..gs.dim() - 1] {
            off += c * c;
        }
        dim_defect.max(off.sqrt() / vnorm)
    };
    checks.push(StructureCheck {
        name: "center_block",
        pass: center_defect <= tol,
        defect: center_defect,
    });

    // (2) [U_i, U_j] = 0 whenever i + j != k + 1 (1-based)
    let mut vanish = 0.0f64;
    for i in 0..kp1 {
        for j in i..kp1 {
            if i + j == k - 1 {
                continue; // complementary (or middle) blocks pair
            }
            for u in &gs.eigenspace_bases[i] {
                for w in &gs.eigenspace_bases[j] {
                    let un = u.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
                    let wn = w.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
                    vanish = vanish.max(u.symplectic_pairing(w).abs() / (un * wn));
                }
            }
        }
    }
    checks.push(StructureCheck { name: "vanishing_brackets", pass: vanish <= tol, defect: vanish });

    // (3) nondegenerate pairing of complementary blocks (normalized bases)
    let mut degen = 0.0f64;
    for low in 0..k {
        let high = k - 1 - low;
        if low > high {
            break;
        }
        let u = &gs.eigenspace_bases[low];
        let w = &gs.eigenspace_bases[high];
        let mut omega = Mat::zeros(u.len(), w.len());
        for (s, us) in u.iter().enumerate() {
            let un = us.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
            for (t, wt) in w.iter().enumerate() {
                let wn = wt.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
                omega.set(s, t, us.symplectic_pairing(wt) / (un * wn));
            }
        }
        let sv = linalg::singular_values(&omega);
        let (smax, smin) = (sv[0], sv[sv.len() - 1]);
        let threshold = PAIRING_DEGENERACY_RTOL * smax.max(1.0);
        degen = degen.max((threshold - smin).max(0.0));
    }
    checks.push(StructureCheck {
        name: "pairing_nondegenerate",
        pass: degen <= tol,
        defect: degen,
    });

    // (4) a_i + a_{k+1-i} = a_{k+1}
    let mut sums = 0.0f64;
    let top = gs.eigenvalues[k];
    for i in 0..k {
        let j = k - 1 - i;
        sums = sums.max((gs.eigenvalues[i] + gs.eigenvalues[j] - top).abs() / top);
    }
    checks.push(StructureCheck { name: "eigenvalue_sums", pass: sums <= tol, defect: sums });

    // (5) m_i = m_{k+1-i}
    let mut dims_defect = 0.0f64;
    for i in 0..k {
        let j = k - 1 - i;
        dims_defect = dims_defect.max((gs.dims[i] as f64 - gs.dims[j] as f64).abs());
    }
    checks.push(StructureCheck {
        name: "dimension_symmetry",
        pass: dims_defect <= tol,
        defect: dims_defect,
    });

    // (6)/(7) adapted bracket table
    let mut table = 0.0f64;
    for p in &gs.adapted.pairs {
        for (s, e) in p.e.iter().enumerate() {
            for (t, eta) in p.eta.iter().enumerate() {
                let expected = if s == t { 1.0 } else { 0.0 };
                table = table.max((e.symplectic_pairing(eta) - expected).abs());
            }
        }
    }
    if let Some(m) = &gs.adapted.middle {
        for (s, e) in m.e.iter().enumerate() {
            for (t, eta) in m.eta.iter().enumerate() {
                let expected = if s == t { 1.0 } else { 0.0 };
                table = table.max((e.symplectic_pairing(eta) - expected).abs());
            }
        }
        for (s, a) in m.e.iter().enumerate() {
            for b in m.e.iter().skip(s + 1) {
                table = table.max(a.symplectic_pairing(b).abs());
            }
        }
        for (s, a) in m.eta.iter().enumerate() {
            for b in m.eta.iter().skip(s + 1) {
                table = table.max(a.symplectic_pairing(b).abs());
            }
        }
    }
    checks.push(StructureCheck { name: "adapted_bracket_table", pass: table <= tol, defect: table });

    StructureReport { checks }
}

/// Max deviation of phi from being a Lie algebra automorphism:
/// max over basis pairs of ||[phi e_a, phi e_b] - phi [e_a, e_b]||.
pub fn automorphism_defect(n: usize, phi: &Mat) -> f64 {
    let d = 2 * n + 1;
    let images: Vec<LieElement> = (0..d)
        .map(|i| LieElement::from_coords_unchecked(n, phi.mul_vec(LieElement::basis(n, i).coords())))
        .collect();
    let mut defect = 0.0f64;
    for i in 0..d {
        for j in i + 1..d {
            let lhs = images[i].bracket(&images[j]).expect("same n");
            let rhs = LieElement::from_coords_unchecked(
                n,
                phi.mul_vec(
                    LieElement::basis(n, i)
                        .bracket(&LieElement::basis(n, j))
                        .expect("same n")
                        .coords(),
                ),
            );
            let err: f64 = lhs
                .coords()
                .iter()
                .zip(rhs.coords())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            defect = defect.max(err);
        }
    }
    defect
}

/// Random bracket-preserving automorphism of H_n: a symplectic similitude on
/// the horizontal space (factor mu on the symplectic form, hence mu on the
/// center) plus an arbitrary shear into the center. Construction keeps the
/// conditioning moderate so conjugated derivations stay numerically clean.
pub fn random_automorphism(n: usize, seed: u64) -> Mat {
    let s = SampleStream::new(seed, 0xA07);
    let d = 2 * n + 1;
    let mut attempt = 0u64;
    loop {
        let base = attempt * 1000;
        attempt += 1;
        // block-ordered symplectic factor: [[A,0],[0,A^-T]] [[I,B],[0,I]] [[I,0],[C,I]]
        let mut a = Mat::identity(n);
        for i in 0..n {
            for j in 0..n {
                let r = s.range_at(base + (i * n + j) as u64, -0.35, 0.35);
                a.set(i, j, a.get(i, j) + r);
            }
        }
        let sv = linalg::singular_values(&a);
        if sv[sv.len() - 1] < 0.25 {
            continue; // badly conditioned draw; take the next one
        }
        let mut b = Mat::zeros(n, n);
        let mut c = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let rb = s.range_at(base + 100 + (i * n + j) as u64, -0.4, 0.4);
                let rc = s.range_at(base + 200 + (i * n + j) as u64, -0.4, 0.4);
                b.set(i, j, rb);
                b.set(j, i, rb);
                c.set(i, j, rc);
                c.set(j, i, rc);
            }
        }
        let a_inv_t = match a.inverse() {
            Ok(inv) => inv.transpose(),
            Err(_) => continue,
        };
        let two_n = 2 * n;
        let mut m_block = Mat::zeros(two_n, two_n);
        // [[A, AB],[CA, CAB + A^-T]]
        let ab = a.mul(&b);
        let ca = c.mul(&a);
        let cab = ca.mul(&b);
        for i in 0..n {
            for j in 0..n {
                m_block.set(i, j, a.get(i, j));
                m_block.set(i, n + j, ab.get(i, j));
                m_block.set(n + i, j, ca.get(i, j));
                m_block.set(n + i, n + j, cab.get(i, j) + a_inv_t.get(i, j));
            }
        }
        // permute block ordering (x_1..x_n, y_1..y_n) into the interleaved
        // standard ordering (x_1, y_1, x_2, y_2, ...)
        let block_of = |idx: usize| if idx % 2 == 0 { idx / 2 } else { n + idx / 2 };
        let scale = s.range_at(base + 300, 0.75, 1.35);
        let mu = scale * scale;
        let mut phi = Mat::zeros(d, d);
        for i in 0..two_n {
            for j in 0..two_n {
                phi.set(i, j, scale * m_block.get(block_of(i), block_of(j)));
            }
        }
        for j in 0..two_n {
            phi.set(two_n, j, s.range_at(base + 400 + j as u64, -0.5, 0.5));
        }
        phi.set(two_n, two_n, mu);
        debug_assert!(automorphism_defect(n, &phi) < 1e-10);
        return phi;
    }
}

/// phi A phi^-1.
pub fn conjugate(a: &Mat, phi: &Mat) -> Result<Mat> {
    Ok(phi.mul(a).mul(&phi.inverse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn diag(n: usize, d: &[f64]) -> DerivationSpec {
        DerivationSpec::from_diagonal(n, d).unwrap()
    }

    #[test]
    fn validate_accepts_graded_diagonal() {
        let (ok, defect) = diag(1, &[1.0, 2.0, 3.0]).validate(TOL).unwrap();
        assert!(ok);
        assert!(defect < 1e-14);
    }

    #[test]
    fn validate_rejects_unbalanced_diagonal() {
        // diag(1,2,4): A[e1,e2] = 4 e3 but [Ae1,e2]+[e1,Ae2] = 3 e3, defect 1
        let (ok, defect) = diag(1, &[1.0, 2.0, 4.0]).validate(TOL).unwrap();
        assert!(!ok);
        assert!((defect - 1.0).abs() < 1e-12, "defect {defect}");
    }

    #[test]
    fn decompose_rejects_non_derivation() {
        match diag(1, &[1.0, 2.0, 4.0]).decompose(TOL) {
            Err(HeisError::NotDerivation { defect, .. }) => {
                assert!((defect - 1.0).abs() < 1e-12)
            }
            other => panic!("expected NotDerivation, got {other:?}"),
        }
    }

    #[test]
    fn decompose_multiplicity_two() {
        let gs = diag(1, &[1.0, 1.0, 2.0]).decompose(TOL).unwrap();
        assert_eq!(gs.k(), 1);
        assert_eq!(gs.dims(), &[2, 1]);
        assert!((gs.eigenvalues()[0] - 1.0).abs() < 1e-12);
        assert!((gs.eigenvalues()[1] - 2.0).abs() < 1e-12);
        let mid = gs.adapted_basis().middle.as_ref().expect("k odd has a middle block");
        assert_eq!(mid.e.len(), 1);
        let table = mid.e[0].symplectic_pairing(&mid.eta[0]);
        assert!((table - 1.0).abs() < 1e-12, "Darboux pairing {table}");
    }

    #[test]
    fn decompose_h2_example() {
        let gs = diag(2, &[1.0, 3.0, 2.0, 2.0, 4.0]).decompose(TOL).unwrap();
        assert_eq!(gs.k(), 3);
        assert_eq!(gs.dims(), &[1, 2, 1, 1]);
        let want = [1.0, 2.0, 3.0, 4.0];
        for (got, want) in gs.eigenvalues().iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
        // middle block U_2 = span(e3, e4) carries the Darboux pair
        let mid = gs.adapted_basis().middle.as_ref().unwrap();
        assert_eq!(mid.block, 1);
        assert_eq!(mid.e.len(), 1);
    }

    #[test]
    fn adapted_dual_basis_for_diag123() {
        let gs = diag(1, &[1.0, 2.0, 3.0]).decompose(TOL).unwrap();
        let pair = &gs.adapted_basis().pairs[0];
        assert_eq!((pair.low_block, pair.high_block), (0, 1));
        // [e1, eta] = e means eta = e2 here
        let eta = &pair.eta[0];
        assert!((eta.coords()[1].abs() - 1.0).abs() < 1e-12);
        assert!(eta.coords()[0].abs() < 1e-12 && eta.coords()[2].abs() < 1e-12);
    }

    #[test]
    fn adapted_basis_rescales_spectral_input() {
        // U_2 initial basis 2 e2: pairing Omega = [2], so eta_1 = e2 (halved)
        let spec = DerivationSpec::from_spectral(
            1,
            vec![
                SpectralBlock { eigenvalue: 1.0, eigenvectors: vec![vec![1.0, 0.0, 0.0]] },
                SpectralBlock { eigenvalue: 2.0, eigenvectors: vec![vec![0.0, 2.0, 0.0]] },
                SpectralBlock { eigenvalue: 3.0, eigenvectors: vec![vec![0.0, 0.0, 1.0]] },
            ],
        )
        .unwrap();
        let gs = spec.decompose(TOL).unwrap();
        let eta = &gs.adapted_basis().pairs[0].eta[0];
        assert!((eta.coords()[1] - 1.0).abs() < 1e-12, "eta = {:?}", eta.coords());
    }

    #[test]
    fn conjugated_matrix_recovers_spectrum() {
        // Phi(e1) = e1 + e2 conjugate of diag(1,2,3)
        let spec = DerivationSpec::from_matrix_rows(
            1,
            &[vec![1.0, 0.0, 0.0], vec![-1.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]],
        )
        .unwrap();
        let gs = spec.decompose(TOL).unwrap();
        assert_eq!(gs.k(), 2);
        assert_eq!(gs.dims(), &[1, 1, 1]);
        for (got, want) in gs.eigenvalues().iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-9);
        }
        let report = verify_structure(&gs, TOL);
        assert!(report.pass(), "defects: {:?}", report.checks);
        // U_1 of the conjugate is spanned by Phi(e1) = e1 + e2
        let u1 = &gs.eigenspace_basis(0)[0];
        let c = u1.coords();
        assert!((c[0].abs() - c[1].abs()).abs() < 1e-9 && c[2].abs() < 1e-9);
    }

    #[test]
    fn flow_matches_exponential_and_semigroup() {
        let gs = diag(1, &[1.0, 2.0, 3.0]).decompose(TOL).unwrap();
        let x = LieElement::new(1, vec![1.0, 1.0, 1.0]).unwrap();
        let y = gs.flow(2f64.ln(), &x).unwrap();
        for (got, want) in y.coords().iter().zip([2.0, 4.0, 8.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let st = gs.flow(0.7, &gs.flow(0.5, &x).unwrap()).unwrap();
        let direct = gs.flow(1.2, &x).unwrap();
        for (a, b) in st.coords().iter().zip(direct.coords()) {
            assert!((a - b).abs() < 1e-12, "semigroup defect {}", (a - b).abs());
        }
        let id = gs.flow(0.0, &x).unwrap();
        for (a, b) in id.coords().iter().zip(x.coords()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn complex_spectrum_rejected() {
        // rotation block is a derivation (trace split 1+1 = 2) with spectrum 1 +- i
        let spec = DerivationSpec::from_matrix_rows(
            1,
            &[vec![1.0, -1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]],
        )
        .unwrap();
        assert!(matches!(spec.decompose(TOL), Err(HeisError::ComplexSpectrum(_))));
    }

    #[test]
    fn jordan_block_rejected() {
        let spec = DerivationSpec::from_matrix_rows(
            1,
            &[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]],
        )
        .unwrap();
        assert!(matches!(spec.decompose(TOL), Err(HeisError::NonDiagonalizable(_))));
    }

    #[test]
    fn nonpositive_eigenvalue_rejected() {
        let spec = diag(1, &[-1.0, 2.0, 1.0]);
        assert!(matches!(spec.decompose(TOL), Err(HeisError::NonPositiveEigenvalue(_))));
    }

    #[test]
    fn close_eigenvalues_group_into_one_block() {
        let spec = diag(1, &[1.0, 1.0 + 1e-12, 2.0 + 1e-12 / 2.0]);
        let gs = spec.decompose(TOL).unwrap();
        assert_eq!(gs.dims(), &[2, 1]);
    }

    #[test]
    fn spectral_reencoding_is_idempotent() {
        let gs = diag(2, &[1.0, 3.0, 2.0, 2.0, 4.0]).decompose(TOL).unwrap();
        let gs2 = gs.to_spectral_spec().decompose(TOL).unwrap();
        assert_eq!(gs.dims(), gs2.dims());
        for (a, b) in gs.eigenvalues().iter().zip(gs2.eigenvalues()) {
            assert!((a - b).abs() < 1e-15);
        }
        let rebuilt = gs.rebuild_adapted_basis().unwrap();
        assert_eq!(rebuilt.pairs.len(), gs.adapted_basis().pairs.len());
    }

    #[test]
    fn spectral_span_is_enforced() {
        let spec = DerivationSpec::from_spectral(
            1,
            vec![
                SpectralBlock { eigenvalue: 1.0, eigenvectors: vec![vec![1.0, 0.0, 0.0]] },
                SpectralBlock { eigenvalue: 2.0, eigenvectors: vec![vec![1.0, 0.0, 0.0]] },
                SpectralBlock { eigenvalue: 3.0, eigenvectors: vec![vec![0.0, 0.0, 1.0]] },
            ],
        )
        .unwrap();
        assert!(matches!(spec.decompose(TOL), Err(HeisError::NonDiagonalizable(_))));
    }

    #[test]
    fn random_automorphisms_preserve_brackets() {
        for n in 1..=2 {
            for seed in 0..20 {
                let phi = random_automorphism(n, seed);
                let defect = automorphism_defect(n, &phi);
                assert!(defect < 1e-12, "n={n} seed={seed} defect {defect:e}");
            }
        }
    }

    #[test]
    fn conjugated_structures_verify() {
        let a = Mat::diagonal(&[1.0, 2.0, 3.0]);
        for seed in 0..10 {
            let phi = random_automorphism(1, seed);
            let b = conjugate(&a, &phi).unwrap();
            let gs = DerivationSpec::from_matrix(1, b).unwrap().decompose(TOL).unwrap();
            let report = verify_structure(&gs, TOL);
            assert!(
                report.pass(),
                "seed {seed}: max defect {:.3e}",
                report.max_defect()
            );
        }
    }

    #[test]
    fn verify_structure_reports_all_checks() {
        let gs = diag(1, &[1.0, 2.0, 3.0]).decompose(TOL).unwrap();
        let report = verify_structure(&gs, TOL);
        let names: Vec<_> = report.checks.iter().map(|c| c.name).collect();
        assert_eq!(
            names,
            vec![
                "leibniz_identity",
                "center_block",
                "vanishing_brackets",
                "pairing_nondegenerate",
                "eigenvalue_sums",
                "dimension_symmetry",
                "adapted_bracket_table"
            ]
        );
        assert!(report.pass());
        assert!(report.max_defect() < 1e-12);
    }
}
