//! Coset geometry of the foliations by U_1, H = U_1 + ... + U_{k-1} + Z, and
//! K = U_2 + ... + U_{k-1} + Z (all requiring k >= 2, where they are
//! subgroups). Distances are at scale s = 1 unless noted.

use crate::derivation::GradedStructure;
use crate::error::{HeisError, Result};
use crate::heis::LieElement;
use crate::metric::Quasimetric;

/// Membership tolerance in adapted coordinates.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

const GRID_LEVELS: usize = 3;
const GRID_SHRINK: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgroupKind {
    /// The first eigenspace U_1.
    U1,
    /// H = U_1 + ... + U_{k-1} + Z.
    H,
    /// K = U_2 + ... + U_{k-1} + Z.
    K,
}

impl SubgroupKind {
    /// 0-based adapted blocks spanned by the subgroup.
    pub fn blocks(self, gs: &GradedStructure) -> Vec<usize> {
        let k = gs.k();
        match self {
            SubgroupKind::U1 => vec![0],
            SubgroupKind::H => (0..k - 1).chain([k]).collect(),
            SubgroupKind::K => (1..k - 1).chain([k]).collect(),
        }
    }

    pub fn contains_center(self) -> bool {
        !matches!(self, SubgroupKind::U1)
    }

    pub fn name(self) -> &'static str {
        match self {
            SubgroupKind::U1 => "U1",
            SubgroupKind::H => "H",
            SubgroupKind::K => "K",
        }
    }
}

/// Max |adapted coordinate| of x outside the subgroup's blocks.
pub fn subgroup_defect(gs: &GradedStructure, kind: SubgroupKind, x: &LieElement) -> Result<f64> {
    let blocks = kind.blocks(gs);
    let w = gs.adapted_coords(x)?;
    let mut defect = 0.0f64;
    for i in 0..=gs.k() {
        if !blocks.contains(&i) {
            for j in gs.block_range(i) {
                defect = defect.max(w[j].abs());
            }
        }
    }
    Ok(defect)
}

fn require_membership(
    gs: &GradedStructure,
    kind: SubgroupKind,
    x: &LieElement,
    what: &str,
) -> Result<()> {
    let defect = subgroup_defect(gs, kind, x)?;
    if defect > MEMBERSHIP_TOL {
        return Err(HeisError::NotInSubgroup(format!(
            "{what} has components outside {} of size {defect:.3e}",
            kind.name()
        )));
    }
    Ok(())
}

fn require_k2(gs: &GradedStructure) -> Result<()> {
    if gs.k() < 2 {
        return Err(HeisError::InvalidArgument(format!(
            "coset geometry needs k >= 2, structure has k = {}",
            gs.k()
        )));
    }
    Ok(())
}

/// A left coset basepoint * subgroup.
#[derive(Debug, Clone)]
pub struct CosetSpec {
    pub subgroup: SubgroupKind,
    pub basepoint: LieElement,
}

impl CosetSpec {
    pub fn new(gs: &GradedStructure, subgroup: SubgroupKind, basepoint: LieElement) -> Result<Self> {
        require_k2(gs)?;
        if basepoint.n() != gs.n() {
            return Err(HeisError::DimensionMismatch(format!(
                "basepoint on H_{} vs structure on H_{}",
                basepoint.n(),
                gs.n()
            )));
        }
        Ok(CosetSpec { subgroup, basepoint })
    }
}

/// D_A(pi(x), pi(y)) = sum_{i<=k} |x_i - y_i|^{1/(s a_i)} where pi drops the
/// center component; 1-Lipschitz image of d_A.
pub fn dist_da(qp: &Quasimetric, x: &LieElement, y: &LieElement) -> Result<f64> {
    let gs = qp.gs();
    let wx = gs.adapted_coords(x)?;
    let wy = gs.adapted_coords(y)?;
    let mut total = 0.0;
    for i in 0..gs.k() {
        let s: f64 = gs.block_range(i).map(|j| (wx[j] - wy[j]) * (wx[j] - wy[j])).sum();
        if s > 0.0 {
            total += s.sqrt().powf(1.0 / qp.effective_exponent(i));
        }
    }
    Ok(total)
}

/// Distance between the H-cosets x_k*H and x'_k*H: |x'_k - x_k|^{1/a_k},
/// with the minimizer h' = x_1 + ... + x_{k-1} + (x_{k+1} - [x'_k - x_k, x_1])
/// for the given representative h = x_1 + ... + x_{k-1} + x_{k+1}; that is,
/// dist_A(x_k*h, x'_k*h') attains the coset distance.
pub fn coset_dist_h(
    gs: &GradedStructure,
    xk: &LieElement,
    xk2: &LieElement,
    h: &LieElement,
) -> Result<(f64, LieElement)> {
    require_k2(gs)?;
    let k = gs.k();
    let uk = k - 1; // 0-based U_k
    for (what, x) in [("x_k", xk), ("x'_k", xk2)] {
        let w = gs.adapted_coords(x)?;
        let mut defect = 0.0f64;
        for i in 0..=k {
            if i != uk {
                for j in gs.block_range(i) {
                    defect = defect.max(w[j].abs());
                }
            }
        }
        if defect > MEMBERSHIP_TOL {
            return Err(HeisError::NotInSubgroup(format!(
                "{what} has components outside U_k of size {defect:.3e}"
            )));
        }
    }
    require_membership(gs, SubgroupKind::H, h, "h")?;
    // [U_k, U_k] = 0 for k >= 2, so the group difference is the vector one
    let delta = xk2.add(&xk.scale(-1.0))?;
    let dist = {
        let b = gs.block_component_norm(&delta, uk)?;
        if b == 0.0 {
            0.0
        } else {
            b.powf(1.0 / gs.eigenvalues()[uk])
        }
    };
    // U_1 component of h
    let w = gs.adapted_coords(h)?;
    let mut u1 = vec![0.0; gs.dim()];
    for j in gs.block_range(0) {
        u1[j] = w[j];
    }
    let x1 = gs.from_adapted(&u1)?;
    let correction = delta.bracket(&x1)?;
    let h_prime = h.add(&correction.scale(-1.0))?;
    Ok((dist, h_prime))
}

/// Distance between the U_1-cosets g*U_1 and g'*U_1 for g, g' in K: equals
/// d_A(g, g'), and the point-to-coset infimum from any g*x (x in U_1) attains
/// it — independence of the representative x.
pub fn coset_dist_u1(gs: &GradedStructure, g: &LieElement, g2: &LieElement) -> Result<f64> {
    require_k2(gs)?;
    require_membership(gs, SubgroupKind::K, g, "g")?;
    require_membership(gs, SubgroupKind::K, g2, "g'")?;
    Quasimetric::unit(gs).dist(g, g2)
}

/// a*b in standard coordinates, written into out.
fn bch_into(a: &[f64], b: &[f64], out: &mut [f64]) {
    let z = a.len() - 1;
    let mut pairing = 0.0;
    let mut i = 0;
    while i + 1 < z {
        pairing += a[i] * b[i + 1] - a[i + 1] * b[i];
        i += 2;
    }
    for j in 0..z {
        out[j] = a[j] + b[j];
    }
    out[z] = a[z] + b[z] + 0.5 * pairing;
}

/// Numeric inf of t' -> dist_A(p, g*t') over the subgroup parameters:
/// coarse-to-fine grid (three levels, 33 points per dimension) centered on
/// the adapted projection of (-g)*p, followed by a compass-search polish.
/// When the subgroup contains the center, the center parameter is eliminated
/// exactly (it enters the product additively, so the optimal choice zeroes
/// the center block). Upper-bound oracle: the result is >= the true infimum
/// up to roundoff, and within grid/descent resolution of it.
pub fn point_to_coset_dist(qp: &Quasimetric, p: &LieElement, coset: &CosetSpec) -> Result<f64> {
    let gs = qp.gs();
    require_k2(gs)?;
    if p.n() != gs.n() || coset.basepoint.n() != gs.n() {
        return Err(HeisError::DimensionMismatch(
            "point/coset dimension does not match the structure".into(),
        ));
    }
    let k = gs.k();
    let d = gs.dim();
    let param_blocks: Vec<usize> =
        coset.subgroup.blocks(gs).into_iter().filter(|&b| b != k).collect();
    let param_idx: Vec<usize> =
        param_blocks.iter().flat_map(|&b| gs.block_range(b)).collect();
    let dims = param_idx.len();
    let drop_center = coset.subgroup.contains_center();

    let g_std = coset.basepoint.coords();
    let p_std = p.coords();
    let mut w_full = vec![0.0; d];
    let mut t_std = vec![0.0; d];
    let mut gt = vec![0.0; d];
    let mut scratch = qp.scratch();
    let mut eval = |v: &[f64],
                    w_full: &mut Vec<f64>,
                    t_std: &mut Vec<f64>,
                    gt: &mut Vec<f64>|
     -> f64 {
        w_full.iter_mut().for_each(|c| *c = 0.0);
        for (slot, &j) in param_idx.iter().enumerate() {
            w_full[j] = v[slot];
        }
        gs.basis_mat().mul_vec_into(w_full, t_std);
        bch_into(g_std, t_std, gt);
        qp.left_diff_adapted(p_std, gt, &mut scratch);
        if drop_center {
            qp.norm_adapted_skipping(&scratch.adapted, k)
        } else {
            qp.norm_adapted(&scratch.adapted)
        }
    };

    // grid center: the subgroup parameters of (-g)*p
    let diff = coset.basepoint.left_difference(p)?;
    let diff_adapted = gs.adapted_coords(&diff)?;
    let c0: Vec<f64> = param_idx.iter().map(|&j| diff_adapted[j]).collect();
    if dims == 0 {
        return Ok(eval(&[], &mut w_full, &mut t_std, &mut gt));
    }

    let pts: usize = match dims {
        0..=3 => 33,
        4..=5 => 11,
        _ => 5,
    };
    let r0 = 1.0 + c0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut best_v = c0.clone();
    let mut best = eval(&best_v, &mut w_full, &mut t_std, &mut gt);
    let mut v = vec![0.0; dims];
    for level in 0..GRID_LEVELS {
        let r = r0 / GRID_SHRINK.powi(level as i32);
        let center = best_v.clone();
        let mut idx = vec![0usize; dims];
        'grid: loop {
            for (dim, &i) in idx.iter().enumerate() {
                v[dim] = center[dim] - r + 2.0 * r * i as f64 / (pts - 1) as f64;
            }
            let f = eval(&v, &mut w_full, &mut t_std, &mut gt);
            if f < best {
                best = f;
                best_v.copy_from_slice(&v);
            }
            // odometer
            for dim in 0..dims {
                idx[dim] += 1;
                if idx[dim] < pts {
                    continue 'grid;
                }
                idx[dim] = 0;
            }
            break;
        }
    }
    // compass polish from the best grid point
    let mut step = 2.0 * (r0 / GRID_SHRINK.powi(GRID_LEVELS as i32 - 1)) / (pts - 1) as f64;
    let floor = 1e-14 * (1.0 + best_v.iter().fold(0.0f64, |m, c| m.max(c.abs())));
    let mut evals = 0usize;
    while step > floor && evals < 40_000 {
        let mut moved = false;
        for dim in 0..dims {
            for sign in [1.0, -1.0] {
                v.copy_from_slice(&best_v);
                v[dim] += sign * step;
                let f = eval(&v, &mut w_full, &mut t_std, &mut gt);
                evals += 1;
                if f < best {
                    best = f;
                    best_v.copy_from_slice(&v);
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(best)
}

/// Growth profile of sup_{x in L1, |param| <= R} dist(x, L2) over radii, with
/// the algebraic dichotomy: finite Hausdorff distance iff the two U_1-cosets
/// lie in the same H-coset, i.e. the U_k component of (-g1)*g2 vanishes.
#[derive(Debug, Clone)]
pub struct HausdorffProfile {
    pub radii: Vec<f64>,
    pub sup_inf: Vec<f64>,
    pub algebraic_finite: bool,
    pub numeric_finite: bool,
}

impl HausdorffProfile {
    pub fn verdicts_agree(&self) -> bool {
        self.algebraic_finite == self.numeric_finite
    }
}

/// Log-log slope threshold below which the numeric profile counts as flat.
pub const PLATEAU_SLOPE: f64 = 0.05;

pub fn hausdorff_profile(
    gs: &GradedStructure,
    l1: &CosetSpec,
    l2: &CosetSpec,
    radii: &[f64],
) -> Result<HausdorffProfile> {
    require_k2(gs)?;
    if l1.subgroup != SubgroupKind::U1 || l2.subgroup != SubgroupKind::U1 {
        return Err(HeisError::InvalidArgument(
            "hausdorff_profile takes two U1 cosets".into(),
        ));
    }
    if radii.len() < 3 {
        return Err(HeisError::InvalidArgument("need at least three radii".into()));
    }
    for pair in radii.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(HeisError::InvalidArgument("radii must be strictly increasing".into()));
        }
    }
    if !(radii[0] > 0.0) {
        return Err(HeisError::InvalidArgument("radii must be positive".into()));
    }
    let qp = Quasimetric::unit(gs);
    let k = gs.k();
    let diff = l1.basepoint.left_difference(&l2.basepoint)?;
    let algebraic_finite = gs.block_component_norm(&diff, k - 1)? <= MEMBERSHIP_TOL;

    let m1 = gs.dims()[0];
    let per_dim = 9usize;
    let mut sup_inf = Vec::with_capacity(radii.len());
    let mut running_max = 0.0f64;
    for &r in radii {
        let mut sup = 0.0f64;
        let mut idx = vec![0usize; m1];
        let mut coeffs = vec![0.0; m1];
        'pts: loop {
            for (dim, &i) in idx.iter().enumerate() {
                coeffs[dim] = -r + 2.0 * r * i as f64 / (per_dim - 1) as f64;
            }
            let t = gs.element_from_block(0, &coeffs)?;
            let x = l1.basepoint.bch_mul(&t)?;
            let inf = point_to_coset_dist(&qp, &x, l2)?;
            sup = sup.max(inf);
            for dim in 0..m1 {
                idx[dim] += 1;
                if idx[dim] < per_dim {
                    continue 'pts;
                }
                idx[dim] = 0;
            }
            break;
        }
        // the exact sup over |param| <= R is nondecreasing in R; sampling can
        // only undershoot, so monotonize the recorded profile
        running_max = running_max.max(sup);
        sup_inf.push(running_max);
    }

    let m = sup_inf.len();
    let numeric_finite = if sup_inf[m - 1] <= 1e-6 {
        true
    } else {
        let v0 = sup_inf[m - 3].max(1e-300);
        let v1 = sup_inf[m - 1].max(1e-300);
        let slope = (v1.ln() - v0.ln()) / (radii[m - 1].ln() - radii[m - 3].ln());
        slope < PLATEAU_SLOPE
    };
    Ok(HausdorffProfile { radii: radii.to_vec(), sup_inf, algebraic_finite, numeric_finite })
}

/// D'((x_1, z), (x'_1, z')) = |x'_1 - x_1| + |z' - z|^{a_1/(a_1 + a_k)}: the
/// distance on a slice U_1 x {x_2} x ... x {x_k} + Z after the chart
/// f(x) = (x_1, x_{k+1} + 1/2 [x_1, x_k]), at the normalization s a_1 = 1.
pub fn slice_dist(
    gs: &GradedStructure,
    a: (&LieElement, f64),
    b: (&LieElement, f64),
) -> Result<f64> {
    require_k2(gs)?;
    require_membership(gs, SubgroupKind::U1, a.0, "first U_1 component")?;
    require_membership(gs, SubgroupKind::U1, b.0, "second U_1 component")?;
    if !(a.1.is_finite() && b.1.is_finite()) {
        return Err(HeisError::NonFinite("slice coordinate".into()));
    }
    let evs = gs.eigenvalues();
    let (a1, ak) = (evs[0], evs[gs.k() - 1]);
    let du = gs.block_component_norm(&b.0.add(&a.0.scale(-1.0))?, 0)?;
    let dz = (b.1 - a.1).abs();
    let center_term = if dz == 0.0 { 0.0 } else { dz.powf(a1 / (a1 + ak)) };
    Ok(du + center_term)
}

/// The slice chart f: x -> (x_1, x_{k+1} + 1/2 [x_1, x_k]) (adapted
/// components; the second slot is the adapted center coordinate).
pub fn slice_chart(gs: &GradedStructure, x: &LieElement) -> Result<(LieElement, f64)> {
    require_k2(gs)?;
    let k = gs.k();
    let w = gs.adapted_coords(x)?;
    let mut u1 = vec![0.0; gs.dim()];
    for j in gs.block_range(0) {
        u1[j] = w[j];
    }
    let x1 = gs.from_adapted(&u1)?;
    let mut uk = vec![0.0; gs.dim()];
    for j in gs.block_range(k - 1) {
        uk[j] = w[j];
    }
    let xk = gs.from_adapted(&uk)?;
    let z = w[gs.block_range(k).next().expect("center block is nonempty")];
    Ok((x1.clone(), z + 0.5 * x1.symplectic_pairing(&xk)))
}
