//! Quasiisometry invariants, the equivalence decision, the explicit boundary
//! isometry between equivalent structures, and distortion/quasisymmetry
//! samplers.
//!
//! Two structures are equivalent iff k matches, the block dimensions match,
//! and the exponent rays match: a_i = lambda b_i with lambda = a_1 / b_1.
//! For equivalent structures the blockwise adapted-basis map
//! G(e_s) = e'_s, G(eta_s) = eta'_s (identity on the center) is a group
//! isomorphism F with dist_{A,s=1}(p, q) = dist_{B,s=lambda}(Fp, Fq):
//! effective exponents 1 * a_i on the source match lambda * b_i on the
//! target. (Scales trade off as s' = s * lambda; quoting the identity at
//! source scale 1 fixes the direction unambiguously.)

use crate::derivation::{automorphism_defect, GradedStructure};
use crate::error::{HeisError, Result};
use crate::heis::LieElement;
use crate::linalg::Mat;
use crate::metric::Quasimetric;
use crate::rng::SampleStream;

/// Relative tolerance for comparing projectivized exponent vectors.
pub const RATIO_RTOL: f64 = 1e-9;

/// Quasiisometry invariants: depth k, non-center block dimensions, and
/// exponents projectivized by a_1.
#[derive(Debug, Clone, PartialEq)]
pub struct QIInvariants {
    pub k: usize,
    pub dims: Vec<usize>,
    pub ratios: Vec<f64>,
}

pub fn qi_invariants(gs: &GradedStructure) -> QIInvariants {
    let k = gs.k();
    let a1 = gs.eigenvalues()[0];
    QIInvariants {
        k,
        dims: gs.dims()[..k].to_vec(),
        ratios: gs.eigenvalues()[..k].iter().map(|a| a / a1).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub equivalent: bool,
    pub lambda: Option<f64>,
}

/// Equivalence decision: k and dims exactly, ratios within relative tol;
/// lambda = a_1 / b_1 satisfies a_i = lambda * b_i.
pub fn classify(a: &GradedStructure, b: &GradedStructure, tol: f64) -> Classification {
    let not = Classification { equivalent: false, lambda: None };
    if a.n() != b.n() {
        return not;
    }
    let ia = qi_invariants(a);
    let ib = qi_invariants(b);
    if ia.k != ib.k || ia.dims != ib.dims {
        return not;
    }
    for (ra, rb) in ia.ratios.iter().zip(&ib.ratios) {
        if (ra - rb).abs() > tol * ra.abs().max(rb.abs()).max(1.0) {
            return not;
        }
    }
    Classification {
        equivalent: true,
        lambda: Some(a.eigenvalues()[0] / b.eigenvalues()[0]),
    }
}

/// The boundary isometry F between equivalent structures: blockwise adapted
/// basis to adapted basis, identity on the center.
#[derive(Debug, Clone)]
pub struct BoundaryMap {
    source: GradedStructure,
    target: GradedStructure,
    matrix: Mat,
    inverse: Mat,
    lambda: f64,
    bracket_defect: f64,
}

pub fn build_isometry(a: &GradedStructure, b: &GradedStructure) -> Result<BoundaryMap> {
    let c = classify(a, b, RATIO_RTOL);
    let lambda = match c.lambda {
        Some(l) if c.equivalent => l,
        _ => {
            let ia = qi_invariants(a);
            let ib = qi_invariants(b);
            return Err(HeisError::NotEquivalent(format!(
                "invariants differ: (k={}, dims={:?}, ratios={:?}) vs (k={}, dims={:?}, ratios={:?})",
                ia.k, ia.dims, ia.ratios, ib.k, ib.dims, ib.ratios
            )));
        }
    };
    // adapted columns are block-aligned between equivalent structures, so
    // P_b P_a^{-1} sends e_s -> e'_s, eta_s -> eta'_s, center -> center
    let matrix = b.basis_mat().mul(a.basis_inv());
    let inverse = a.basis_mat().mul(b.basis_inv());
    let bracket_defect = automorphism_defect(a.n(), &matrix);
    Ok(BoundaryMap {
        source: a.clone(),
        target: b.clone(),
        matrix,
        inverse,
        lambda,
        bracket_defect,
    })
}

impl BoundaryMap {
    pub fn source(&self) -> &GradedStructure {
        &self.source
    }

    pub fn target(&self) -> &GradedStructure {
        &self.target
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Max bracket-preservation defect of the matrix (see
    /// [`automorphism_defect`]); near roundoff for well-conditioned inputs.
    pub fn bracket_defect(&self) -> f64 {
        self.bracket_defect
    }

    pub fn apply(&self, x: &LieElement) -> Result<LieElement> {
        if x.n() != self.source.n() {
            return Err(HeisError::DimensionMismatch(format!(
                "element on H_{} vs map on H_{}",
                x.n(),
                self.source.n()
            )));
        }
        Ok(LieElement::from_coords_unchecked(
            self.source.n(),
            self.matrix.mul_vec(x.coords()),
        ))
    }

    pub fn apply_inverse(&self, x: &LieElement) -> Result<LieElement> {
        if x.n() != self.target.n() {
            return Err(HeisError::DimensionMismatch(format!(
                "element on H_{} vs inverse map on H_{}",
                x.n(),
                self.target.n()
            )));
        }
        Ok(LieElement::from_coords_unchecked(
            self.target.n(),
            self.inverse.mul_vec(x.coords()),
        ))
    }

    /// The reverse map (target to source), with lambda inverted.
    pub fn reversed(&self) -> BoundaryMap {
        BoundaryMap {
            source: self.target.clone(),
            target: self.source.clone(),
            matrix: self.inverse.clone(),
            inverse: self.matrix.clone(),
            lambda: 1.0 / self.lambda,
            bracket_defect: automorphism_defect(self.target.n(), &self.inverse),
        }
    }
}

/// Per-spec apply: kept as a free function mirror of [`BoundaryMap::apply`].
pub fn apply_map(f: &BoundaryMap, x: &LieElement) -> Result<LieElement> {
    f.apply(x)
}

/// Numeric verification of the isometry contract on random pairs.
#[derive(Debug, Clone)]
pub struct IsometryCheck {
    /// max relative error of dist_{A,1}(p,q) = dist_{B,lambda}(Fp,Fq)
    pub max_rel_error: f64,
    /// observed range of dist_{B,1}(Fp,Fq) / dist_{A,1}(p,q)^{lambda}: the
    /// target metric is a snowflake of the source up to block-count factors
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// analytic comparability bound (k+1)^{|1 - lambda|} for that ratio
    pub ratio_bound: f64,
    pub bracket_defect: f64,
    pub pairs: u64,
    pub seed: u64,
}

pub fn verify_isometry(f: &BoundaryMap, pairs: u64, seed: u64) -> Result<IsometryCheck> {
    let src = Quasimetric::unit(f.source());
    let dst = Quasimetric::new(f.target(), f.lambda())?;
    let dst_unit = Quasimetric::unit(f.target());
    let n = f.source().n();
    let d = 2 * n + 1;
    let stream = SampleStream::new(seed, 0x150);
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut max_rel = 0.0f64;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = 0.0f64;
    for i in 0..pairs {
        stream.box_point_at(2 * i, 1.0, &mut a);
        stream.box_point_at(2 * i + 1, 1.0, &mut b);
        let p = LieElement::from_coords_unchecked(n, a.clone());
        let q = LieElement::from_coords_unchecked(n, b.clone());
        let da = src.dist(&p, &q)?;
        if da < 1e-150 {
            continue;
        }
        let fp = f.apply(&p)?;
        let fq = f.apply(&q)?;
        let db = dst.dist(&fp, &fq)?;
        max_rel = max_rel.max((db - da).abs() / da);
        let ratio = dst_unit.dist(&fp, &fq)? / da.powf(f.lambda());
        ratio_min = ratio_min.min(ratio);
        ratio_max = ratio_max.max(ratio);
    }
    let k = f.source().k() as f64;
    Ok(IsometryCheck {
        max_rel_error: max_rel,
        ratio_min,
        ratio_max,
        ratio_bound: (k + 1.0).powf((1.0 - f.lambda()).abs()),
        bracket_defect: f.bracket_defect(),
        pairs,
        seed,
    })
}

/// A point map between (possibly identical) groups.
pub type PointMap<'a> = dyn Fn(&LieElement) -> Result<LieElement> + 'a;

/// Finite-sample distortion of a map at basepoint x:
/// upper[r] ~ sup { d(Fx, Fx') : d(x,x') <= r },
/// lower[r] ~ inf { d(Fx, Fx') : r <= d(x,x') <= 2r }.
/// The sup surrogate underestimates and the inf surrogate overestimates, so
/// lower/upper may cross; limits extrapolate (value / r) linearly to r = 0
/// from the three smallest radii.
#[derive(Debug, Clone)]
pub struct DistortionProbe {
    pub radii: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub limit_upper: f64,
    pub limit_lower: f64,
    /// |L_{F^-1}(F(x)) * l_F(x) - 1| when an inverse map is supplied
    pub reciprocal_defect: Option<f64>,
    pub samples_per_radius: u64,
    pub seed: u64,
}

pub fn default_probe_radii() -> Vec<f64> {
    (0..=6).rev().map(|e| 2f64.powi(-e)).collect() // 2^-6 .. 2^0
}

pub fn distortion_probe(
    map: &PointMap,
    src: &Quasimetric,
    dst: &Quasimetric,
    x: &LieElement,
    radii: &[f64],
    samples: u64,
    seed: u64,
    inverse: Option<&PointMap>,
) -> Result<DistortionProbe> {
    if radii.len() < 3 {
        return Err(HeisError::InvalidArgument("need at least three radii".into()));
    }
    for pair in radii.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(HeisError::InvalidArgument("radii must be strictly increasing".into()));
        }
    }
    if samples == 0 {
        return Err(HeisError::InvalidArgument("need at least one sample".into()));
    }
    let gs = src.gs();
    let d = gs.dim();
    let fx = map(x)?;
    let mut upper = Vec::with_capacity(radii.len());
    let mut lower = Vec::with_capacity(radii.len());
    let mut w = vec![0.0; d];
    let mut scaled = vec![0.0; d];
    for (ri, &r) in radii.iter().enumerate() {
        let dirs = SampleStream::new(seed, 0xD1 + ri as u64);
        let fracs = SampleStream::new(seed, 0x2D1 + ri as u64);
        let mut up = 0.0f64;
        let mut lo = f64::INFINITY;
        for s in 0..samples {
            // direction from the unit adapted box, then dilated onto exact
            // target distances: blockwise scaling by c^{s*alpha_i} moves the
            // quasinorm to c * |w| by homogeneity, so targets u*r (ball) and
            // (1+u)*r (annulus) are hit without rejection
            dirs.box_point_at(s, 1.0, &mut w);
            let d0 = src.norm(&gs.from_adapted(&w)?)?;
            let u = fracs.f64_at(s);
            if d0 < 1e-12 || u < 1e-9 {
                continue;
            }
            for (target, inner) in [(u * r, true), ((1.0 + u) * r, false)] {
                let c = target / d0;
                for i in 0..=gs.k() {
                    let h = c.powf(src.effective_exponent(i));
                    for j in gs.block_range(i) {
                        scaled[j] = h * w[j];
                    }
                }
                let xp = x.bch_mul(&gs.from_adapted(&scaled)?)?;
                let dist_out = dst.dist(&fx, &map(&xp)?)?;
                if inner {
                    up = up.max(dist_out);
                } else {
                    lo = lo.min(dist_out);
                }
            }
        }
        upper.push(up);
        lower.push(if lo.is_finite() { lo } else { f64::NAN });
    }
    let limit_upper = extrapolate_to_zero(radii, &upper);
    let limit_lower = extrapolate_to_zero(radii, &lower);
    let reciprocal_defect = match inverse {
        None => None,
        Some(inv) => {
            let back =
                distortion_probe(inv, dst, src, &fx, radii, samples, seed ^ 0x5a5a, None)?;
            Some((back.limit_upper * limit_lower - 1.0).abs())
        }
    };
    Ok(DistortionProbe {
        radii: radii.to_vec(),
        upper,
        lower,
        limit_upper,
        limit_lower,
        reciprocal_defect,
        samples_per_radius: samples,
        seed,
    })
}

/// Least-squares line through the three smallest radii of value/r,
/// evaluated at r = 0.
fn extrapolate_to_zero(radii: &[f64], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(values)
        .filter(|(_, v)| v.is_finite())
        .take(3)
        .map(|(&r, &v)| (r, v / r))
        .collect();
    if pts.is_empty() {
        return f64::NAN;
    }
    if pts.len() < 3 {
        return pts[0].1;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|(x, _)| x).sum::<f64>() / m;
    let my = pts.iter().map(|(_, y)| y).sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    my - (sxy / sxx) * mx
}

/// Upper envelope of distortion ratios: for sampled triples (x, y, z),
/// t = d(x,y)/d(x,z) and rho = d(Fx,Fy)/d(Fx,Fz); per log-t bin keeps the
/// sample with the largest rho.
#[derive(Debug, Clone)]
pub struct EtaEnvelope {
    /// (t, rho) of the envelope sample per nonempty bin, ordered by t
    pub samples: Vec<(f64, f64)>,
    pub skipped_degenerate: u64,
    pub triples: u64,
    pub seed: u64,
}

const ETA_BINS: usize = 64;
const ETA_LOG10_RANGE: f64 = 4.0; // bins cover t in [1e-4, 1e4]

pub fn eta_envelope(
    map: &PointMap,
    src: &Quasimetric,
    dst: &Quasimetric,
    triples: u64,
    seed: u64,
) -> Result<EtaEnvelope> {
    let gs = src.gs();
    let n = gs.n();
    let d = gs.dim();
    let stream = SampleStream::new(seed, 0xE7A);
    let mut bufs = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut bins: Vec<Option<(f64, f64)>> = vec![None; ETA_BINS];
    let mut skipped = 0u64;
    for tr in 0..triples {
        let base = 3 * tr;
        for (which, buf) in bufs.iter_mut().enumerate() {
            stream.box_point_at(base + which as u64, 1.0, buf);
        }
        let x = LieElement::from_coords_unchecked(n, bufs[0].clone());
        let y = LieElement::from_coords_unchecked(n, bufs[1].clone());
        let z = LieElement::from_coords_unchecked(n, bufs[2].clone());
        let dxy = src.dist(&x, &y)?;
        let dxz = src.dist(&x, &z)?;
        if dxy < 1e-12 || dxz < 1e-12 {
            skipped += 1;
            continue;
        }
        let fx = map(&x)?;
        let dfxy = dst.dist(&fx, &map(&y)?)?;
        let dfxz = dst.dist(&fx, &map(&z)?)?;
        if dfxz < 1e-12 {
            skipped += 1;
            continue;
        }
        let t = dxy / dxz;
        let rho = dfxy / dfxz;
        let pos = (t.log10() + ETA_LOG10_RANGE) / (2.0 * ETA_LOG10_RANGE) * ETA_BINS as f64;
        if !(0.0..ETA_BINS as f64).contains(&pos) {
            continue; // tail outside the binned range
        }
        let b = pos as usize;
        match bins[b] {
            Some((_, best)) if best >= rho => {}
            _ => bins[b] = Some((t, rho)),
        }
    }
    Ok(EtaEnvelope {
        samples: bins.into_iter().flatten().collect(),
        skipped_degenerate: skipped,
        triples,
        seed,
    })
}

/// eta_1(t) = (eta^{-1}(t^{-1}))^{-1}: each envelope sample (t, rho) of eta
/// yields the sample (1/rho, 1/t) of eta_1.
pub fn eta1_samples(envelope: &EtaEnvelope) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> =
        envelope.samples.iter().map(|&(t, rho)| (1.0 / rho, 1.0 / t)).collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// d(Fx,Fy) ~ L d(x,y) + C: least squares through the origin for L,
/// C = max |d(Fx,Fy) - L d(x,y)|.
#[derive(Debug, Clone)]
pub struct SimilarityFit {
    pub l: f64,
    pub c: f64,
    pub pairs: u64,
    pub seed: u64,
}

/// d(Fx,Fy) in [C/K, C*K] d(x,y): C = exp(mean log ratio),
/// K = exp(max |log ratio - mean|).
#[derive(Debug, Clone)]
pub struct QuasisimilarityFit {
    pub k: f64,
    pub c: f64,
    pub pairs: u64,
    pub seed: u64,
}

pub fn almost_similarity_fit(
    map: &PointMap,
    src: &Quasimetric,
    dst: &Quasimetric,
    pairs: u64,
    seed: u64,
) -> Result<SimilarityFit> {
    let (ds, dd) = paired_distances(map, src, dst, pairs, seed)?;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in ds.iter().zip(&dd) {
        sxx += a * a;
        sxy += a * b;
    }
    let l = sxy / sxx;
    let c = ds
        .iter()
        .zip(&dd)
        .fold(0.0f64, |m, (a, b)| m.max((b - l * a).abs()));
    Ok(SimilarityFit { l, c, pairs, seed })
}

pub fn quasisimilarity_fit(
    map: &PointMap,
    src: &Quasimetric,
    dst: &Quasimetric,
    pairs: u64,
    seed: u64,
) -> Result<QuasisimilarityFit> {
    let (ds, dd) = paired_distances(map, src, dst, pairs, seed)?;
    let logs: Vec<f64> = ds.iter().zip(&dd).map(|(a, b)| (b / a).ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let spread = logs.iter().fold(0.0f64, |m, l| m.max((l - mean).abs()));
    Ok(QuasisimilarityFit { k: spread.exp(), c: mean.exp(), pairs, seed })
}

fn paired_distances(
    map: &PointMap,
    src: &Quasimetric,
    dst: &Quasimetric,
    pairs: u64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if pairs == 0 {
        return Err(HeisError::InvalidArgument("need at least one pair".into()));
    }
    let n = src.gs().n();
    let d = src.gs().dim();
    let stream = SampleStream::new(seed, 0xF17);
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut ds = Vec::new();
    let mut dd = Vec::new();
    for i in 0..pairs {
        stream.box_point_at(2 * i, 1.0, &mut a);
        stream.box_point_at(2 * i + 1, 1.0, &mut b);
        let p = LieElement::from_coords_unchecked(n, a.clone());
        let q = LieElement::from_coords_unchecked(n, b.clone());
        let din = src.dist(&p, &q)?;
        if din < 1e-12 {
            continue;
        }
        ds.push(din);
        dd.push(dst.dist(&map(&p)?, &map(&q)?)?);
    }
    Ok((ds, dd))
}

/// One-call bundle of the distortion samplers for a map.
#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub probe: DistortionProbe,
    pub envelope: EtaEnvelope,
    pub eta1: Vec<(f64, f64)>,
    pub almost_similarity: SimilarityFit,
    pub quasisimilarity: QuasisimilarityFit,
}

#[allow(clippy::too_many_arguments)]
pub fn distortion_report(
    map: &PointMap,
    src: &Quasimetric,
    dst: &Quasimetric,
    x: &LieElement,
    radii: &[f64],
    samples: u64,
    seed: u64,
    inverse: Option<&PointMap>,
) -> Result<DistortionReport> {
    let probe = distortion_probe(map, src, dst, x, radii, samples, seed, inverse)?;
    let envelope = eta_envelope(map, src, dst, samples * radii.len() as u64, seed)?;
    let eta1 = eta1_samples(&envelope);
    let almost_similarity = almost_similarity_fit(map, src, dst, samples, seed)?;
    let quasisimilarity = quasisimilarity_fit(map, src, dst, samples, seed)?;
    Ok(DistortionReport { probe, envelope, eta1, almost_similarity, quasisimilarity })
}
