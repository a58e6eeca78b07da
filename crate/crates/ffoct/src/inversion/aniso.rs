//! Recovery of matrix-valued (anisotropic) Radon data.
//!
//! A single detector direction `θ` only ever sees the 2×2 block
//! `(P_θ X)_{1..2,1..2}` of the plane-integrated susceptibility `X`, formed
//! from measurements with polarizations `e₁`, `e₂`, `e₁+e₂`. Rotating the
//! sample by `R` moves the data to the detector direction `θ_R` with
//! `θ_R + e₃ = α_R R(θ+e₃)`; three admissible rotations determine `X`
//! uniquely. The solver follows the constructive two-stage elimination:
//! first the projected part `Y = P_{θ+e₃}X`, then the rank-one remainder
//! along `θ+e₃`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};

use crate::error::{Error, Result};

/// `a_{p,j} = p_j [θ × (θ × X p)]_j`, the scalar a detector with direction
/// `θ` and polarization `p` measures of the matrix `X`.
pub fn polarization_projection(theta: &Vector3<f64>, x: &Matrix3<f64>, p: &Vector3<f64>, j: usize) -> f64 {
    debug_assert!(j < 2);
    let v = x * p;
    let w = theta.cross(&theta.cross(&v));
    p[j] * w[j]
}

/// Polarization measurements at one detector for `p ∈ {e₁, e₂, e₁+e₂}`.
#[derive(Debug, Clone, Copy)]
pub struct PolarizationData {
    pub a_e1_1: f64,
    pub a_e2_2: f64,
    pub a_e12_1: f64,
    pub a_e12_2: f64,
}

impl PolarizationData {
    /// Evaluate all four entries for a known matrix (test generator and
    /// consistency checks).
    pub fn from_matrix(theta: &Vector3<f64>, x: &Matrix3<f64>) -> Self {
        let e1 = Vector3::new(1.0, 0.0, 0.0);
        let e2 = Vector3::new(0.0, 1.0, 0.0);
        let e12 = Vector3::new(1.0, 1.0, 0.0);
        PolarizationData {
            a_e1_1: polarization_projection(theta, x, &e1, 0),
            a_e2_2: polarization_projection(theta, x, &e2, 1),
            a_e12_1: polarization_projection(theta, x, &e12, 0),
            a_e12_2: polarization_projection(theta, x, &e12, 1),
        }
    }
}

/// The reconstructable 2×2 block:
///
/// `B = [[−a_{e₁,1}, a_{e₁,1} − a_{e₁+e₂,1}],
///       [a_{e₂,2} − a_{e₁+e₂,2}, −a_{e₂,2}]] = (P_θ X)_{1..2,1..2}`.
pub fn anisotropic_b(d: &PolarizationData) -> Matrix2<f64> {
    Matrix2::new(
        -d.a_e1_1,
        d.a_e1_1 - d.a_e12_1,
        d.a_e2_2 - d.a_e12_2,
        -d.a_e2_2,
    )
}

/// Detector direction seeing the rotated sample: `θ_R + e₃ = α_R R(θ+e₃)`.
#[derive(Debug, Clone, Copy)]
pub struct RotatedDirection {
    pub theta_r: Vector3<f64>,
    pub alpha_r: f64,
}

/// Solve `θ_R + e₃ = α_R R(θ+e₃)` for a unit `θ_R ∈ S²₊`; `None` when the
/// rotated axis leaves the upper half-space.
pub fn rotated_direction(rot: &Matrix3<f64>, theta: &Vector3<f64>) -> Option<RotatedDirection> {
    let u = rot * (theta + Vector3::new(0.0, 0.0, 1.0));
    if u[2] <= 0.0 {
        return None;
    }
    let alpha_r = 2.0 * u[2] / u.norm_squared();
    let theta_r = u * alpha_r - Vector3::new(0.0, 0.0, 1.0);
    if theta_r[2] <= 0.0 {
        return None;
    }
    Some(RotatedDirection { theta_r, alpha_r })
}

/// Measurement datum of the rotated sample expressed through the unrotated
/// Radon data: `p_j[θ_R × (θ_R × R b̄ Rᵀ p)]_j` where `b̄` is the plane
/// integral of the matrix field over `E_{σ,θ}`.
pub fn rotated_projection(
    bbar: &Matrix3<f64>,
    rot: &Matrix3<f64>,
    theta: &Vector3<f64>,
    p: &Vector3<f64>,
    j: usize,
) -> Result<f64> {
    let rd = rotated_direction(rot, theta).ok_or_else(|| {
        Error::Geometry("rotation admits no detector direction in the upper half-space".into())
    })?;
    Ok(polarization_projection(&rd.theta_r, &(rot * bbar * rot.transpose()), p, j))
}

fn projector(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() - v * v.transpose() / v.norm_squared()
}

/// Smallest singular value of the matrix with the given (normalized) columns.
fn min_singular_value(cols: [&Vector3<f64>; 3]) -> f64 {
    let m = Matrix3::from_columns(&[cols[0].normalize(), cols[1].normalize(), cols[2].normalize()]);
    m.svd(false, false).singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn lstsq(a: DMatrix<f64>, rhs: DVector<f64>, context: &str) -> Result<(DVector<f64>, f64)> {
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let min_sv = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max_sv > 0.0) || min_sv < 1e-10 * max_sv {
        return Err(Error::Geometry(format!(
            "{context}: linear system is rank deficient (sv ratio {})",
            min_sv / max_sv.max(f64::MIN_POSITIVE)
        )));
    }
    let sol = svd
        .solve(&rhs, 1e-12 * max_sv)
        .map_err(|e| Error::Numerical(format!("{context}: {e}")))?;
    let residual = (a * &sol - rhs).norm();
    Ok((sol, residual))
}

/// Reconstruct the full matrix `X` from the 2×2 blocks `B_R` measured under
/// three rotations:
///
/// `P P_{θ_R} R X Rᵀ Pᵀ = B_R, R ∈ {R₀, R₁, R₂}`
///
/// (`P` drops the third row/column). Preconditions: every proper subset of
/// `{R₀ᵀe₃, R₁ᵀe₃, R₂ᵀe₃, θ+e₃}` linearly independent and every rotation
/// admits a detector direction. Returns `X` and the residual of the defining
/// equations; inconsistent data are rejected rather than silently projected.
pub fn anisotropic_solve(
    theta: &Vector3<f64>,
    rotations: &[Matrix3<f64>; 3],
    b_data: &[Matrix2<f64>; 3],
) -> Result<(Matrix3<f64>, f64)> {
    let e3 = Vector3::new(0.0, 0.0, 1.0);
    let axis = theta + e3;
    let r_axes: Vec<Vector3<f64>> = rotations.iter().map(|r| r.transpose() * e3).collect();

    // every proper 3-subset of {r_axes[0], r_axes[1], r_axes[2], axis}
    let triples = [
        [&r_axes[0], &r_axes[1], &r_axes[2]],
        [&r_axes[0], &r_axes[1], &axis],
        [&r_axes[0], &r_axes[2], &axis],
        [&r_axes[1], &r_axes[2], &axis],
    ];
    for t in triples {
        if min_singular_value(t) <= 1e-6 {
            return Err(Error::Geometry(
                "rotation axes and detector axis are too close to linearly dependent".into(),
            ));
        }
    }

    let rotated: Vec<RotatedDirection> = rotations
        .iter()
        .map(|r| {
            rotated_direction(r, theta).ok_or_else(|| {
                Error::Geometry("a rotation admits no detector direction in the upper half-space".into())
            })
        })
        .collect::<Result<_>>()?;

    let p_wide = nalgebra::Matrix2x3::<f64>::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);

    // stage 1: Y = P_{θ+e₃} X from
    //   P_{ν_R} Y P_{Rᵀe₃} = η_R (P R η_R)ᵀ B_R P R, (θ+e₃)ᵀ Y = 0
    let mut a1 = DMatrix::<f64>::zeros(3 * 9 + 3, 9);
    let mut rhs1 = DVector::<f64>::zeros(3 * 9 + 3);
    for (ri, rot) in rotations.iter().enumerate() {
        let b_axis = &r_axes[ri];
        let eta = axis.cross(b_axis).normalize();
        let nu = axis.cross(&eta).normalize();
        let p_nu = projector(&nu);
        let p_b = projector(b_axis);
        let rhs_mat = eta * (p_wide * rot * eta).transpose() * b_data[ri] * p_wide * rot;
        for i in 0..3 {
            for j in 0..3 {
                let row = ri * 9 + i * 3 + j;
                for k in 0..3 {
                    for l in 0..3 {
                        a1[(row, k * 3 + l)] = p_nu[(i, k)] * p_b[(l, j)];
                    }
                }
                rhs1[row] = rhs_mat[(i, j)];
            }
        }
    }
    for j in 0..3 {
        for k in 0..3 {
            a1[(27 + j, k * 3 + j)] = axis[k];
        }
    }
    let b_norm = b_data.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt();
    let (y_vec, res1) = lstsq(a1, rhs1, "projected-part system")?;
    let y = Matrix3::from_fn(|k, l| y_vec[k * 3 + l]);

    // stage 2: v = Xᵀ(θ+e₃) from
    //   −θ_{R,3} P_{Rᵀe₃} (w vᵀ) P_{Rᵀe₃}
    //     = Rᵀ Pᵀ B_R P R − P_{Rᵀe₃} (𝟙 − α_R (θ+e₃) θ_Rᵀ R) Y P_{Rᵀe₃}
    // with w = (θ+e₃)/|θ+e₃|².
    let w = axis / axis.norm_squared();
    let mut a2 = DMatrix::<f64>::zeros(3 * 9, 3);
    let mut rhs2 = DVector::<f64>::zeros(3 * 9);
    for (ri, rot) in rotations.iter().enumerate() {
        let b_axis = &r_axes[ri];
        let p_b = projector(b_axis);
        let rd = &rotated[ri];
        let correction = Matrix3::identity() - rd.alpha_r * axis * (rot.transpose() * rd.theta_r).transpose();
        let rhs_mat = rot.transpose() * p_wide.transpose() * b_data[ri] * p_wide * rot
            - p_b * correction * y * p_b;
        let pw = p_b * w;
        for i in 0..3 {
            for j in 0..3 {
                let row = ri * 9 + i * 3 + j;
                for l in 0..3 {
                    a2[(row, l)] = -rd.theta_r[2] * pw[i] * p_b[(j, l)];
                }
                rhs2[row] = rhs_mat[(i, j)];
            }
        }
    }
    let (v_vec, res2) = lstsq(a2, rhs2, "axis-part system")?;
    let v = Vector3::new(v_vec[0], v_vec[1], v_vec[2]);
    let x = y + w * v.transpose();

    // residual of the defining equations
    let mut res_def = 0.0f64;
    for (ri, rot) in rotations.iter().enumerate() {
        let p_tr = projector(&rotated[ri].theta_r);
        let lhs = p_wide * p_tr * rot * x * rot.transpose() * p_wide.transpose();
        res_def = res_def.max((lhs - b_data[ri]).norm());
    }
    let residual = res_def.max(res1).max(res2);
    if residual > 1e-8 * b_norm.max(f64::MIN_POSITIVE) {
        return Err(Error::InconsistentData(format!(
            "measured blocks are not consistent with any matrix: residual {residual}, data norm {b_norm}"
        )));
    }
    Ok((x, residual))
}
