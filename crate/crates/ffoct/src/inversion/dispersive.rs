//! Depth recursion for dispersive media.
//!
//! The plane-discretized Radon data obey
//!
//! `b̄χ_n(τ,θ) = b̄χ_{n+1}(τ,θ) + (√(2(1+θ₃))/c) ∂m̄/∂t(τ − (n+½)T, θ)`
//!
//! with `b̄χ_n = 0` above the sample, so the data are recovered by iterating
//! downward from the largest plane index. The time derivative uses central
//! differences at the native trace step (one-sided second-order stencils at
//! the range ends) and linear interpolation between derivative samples.

use crate::error::{Error, Result};
use crate::model::Units;
use crate::radon::{RadonBins, Trace};

fn derivative_at(d: &[f64], t0: f64, dt: f64, t: f64) -> Result<f64> {
    let s = (t - t0) / dt;
    let top = (d.len() - 1) as f64;
    if s < -1e-9 || s > top + 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "trace range [{t0}, {}] does not cover the required time {t}",
            t0 + top * dt
        )));
    }
    let s = s.clamp(0.0, top);
    let i = (s.floor() as usize).min(d.len() - 2);
    let w = s - i as f64;
    Ok(d[i] * (1.0 - w) + d[i + 1] * w)
}

/// Recover the Radon bins from a measurement trace. `t_support` is the bin
/// width `T`; plane indices run over `n_min..=n_max` and `b̄χ_{n_max+1} = 0`
/// is the starting value; `k_tau` values of `τ` are sampled at bin midpoints
/// `(m+½)T/k_tau`.
pub fn dispersive_recursion(
    m_bar: &Trace,
    t_support: f64,
    n_min: i64,
    n_max: i64,
    k_tau: usize,
    units: Units,
) -> Result<RadonBins> {
    if !(t_support > 0.0) || k_tau == 0 || n_min > n_max {
        return Err(Error::InvalidArgument(
            "recursion needs T > 0, k_tau > 0 and a nonempty plane window".into(),
        ));
    }
    if m_bar.dt > t_support / 8.0 + 1e-12 * t_support {
        return Err(Error::InvalidArgument(format!(
            "trace step {} exceeds T/8 = {}",
            m_bar.dt,
            t_support / 8.0
        )));
    }
    let fac = (2.0 * (1.0 + m_bar.theta[2])).sqrt() / units.c;
    let deriv = m_bar.derivative();
    let tau: Vec<f64> = (0..k_tau).map(|m| (m as f64 + 0.5) * t_support / k_tau as f64).collect();
    let n_planes = (n_max - n_min + 1) as usize;
    let mut values = vec![vec![0.0f64; k_tau]; n_planes];
    let mut above = vec![0.0f64; k_tau]; // b-bar at plane n+1
    for n in (n_min..=n_max).rev() {
        let row = (n - n_min) as usize;
        for (m, &tm) in tau.iter().enumerate() {
            let t = tm - (n as f64 + 0.5) * t_support;
            values[row][m] = above[m] + fac * derivative_at(&deriv, m_bar.t0, m_bar.dt, t)?;
        }
        above.copy_from_slice(&values[row]);
    }
    Ok(RadonBins { theta: m_bar.theta, t_support, n_min, values })
}
