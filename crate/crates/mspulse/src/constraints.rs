//! Linear constraints on Fourier coefficients for timing-error robustness.
//!
//! Setting the first k derivatives of F and G to zero at the gate time makes
//! the infidelity of order Delta t^{2k+2}. After reduction, the independent
//! conditions are
//!
//! ```text
//! delta_{1i} a0/2 + sum_{n>=2} a_n n^{i-1} = 0   for odd i,
//! sum_{n>=2} b_n n^{i-1} = 0                     for even i,
//! ```
//!
//! with n = 1 excluded (closure forces a1 = b1 = 0). A system of l
//! a-constraints (odd i = 1, 3, ..., 2l-1) with b = 0 yields infidelity of
//! leading order Delta t^{4l+2}.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pulse::{FourierPulse, PhysicalParams};
use crate::trajectory;

/// Linear constraint system on the coefficient vector.
///
/// Columns cover the a-block (a0, a2, ..., aN) and, when `include_b` is set,
/// a disjoint b-block (b2, ..., bN).
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub l: usize,
    pub n_max: usize,
    pub include_b: bool,
    pub matrix: DMatrix<f64>,
}

impl ConstraintSystem {
    /// Rows for odd i = 1, 3, ..., 2l-1 over the a-block; with `include_b`,
    /// additional rows for even i = 2, 4, ..., 2l-2 over the b-block.
    pub fn build(l: usize, n_max: usize, include_b: bool) -> Result<Self> {
        if l == 0 {
            return Err(Error::config("need at least one linear constraint"));
        }
        if n_max < l + 1 {
            return Err(Error::config(format!(
                "over-constrained system: N = {n_max} < l + 1 = {}",
                l + 1
            )));
        }
        let a_cols = n_max; // a0, a2..aN
        let b_cols = if include_b { n_max - 1 } else { 0 }; // b2..bN
        let b_rows = if include_b { l - 1 } else { 0 };
        let mut m = DMatrix::zeros(l + b_rows, a_cols + b_cols);
        for r in 0..l {
            let i = 2 * r + 1;
            m[(r, 0)] = if i == 1 { 0.5 } else { 0.0 };
            for (j, n) in (2..=n_max).enumerate() {
                m[(r, 1 + j)] = (n as f64).powi(i as i32 - 1);
            }
        }
        for r in 0..b_rows {
            let i = 2 * (r + 1);
            for (j, n) in (2..=n_max).enumerate() {
                m[(l + r, a_cols + j)] = (n as f64).powi(i as i32 - 1);
            }
        }
        Ok(ConstraintSystem {
            l,
            n_max,
            include_b,
            matrix: m,
        })
    }

    /// Column labels, a0, a2, ..., then b2, ... when present.
    pub fn column_labels(&self) -> Vec<String> {
        let mut labels = vec!["a0".to_string()];
        labels.extend((2..=self.n_max).map(|n| format!("a{n}")));
        if self.include_b {
            labels.extend((2..=self.n_max).map(|n| format!("b{n}")));
        }
        labels
    }

    /// Orthonormal basis of the null space (columns of the returned matrix).
    ///
    /// Gauss-Jordan elimination with per-row column pivoting yields the
    /// elimination solutions; a QR pass orthonormalizes them (orthonormal
    /// bases keep the reduced power matrix well conditioned). Fails if the
    /// constraint rows are linearly dependent, naming the offending row.
    pub fn nullspace_basis(&self) -> Result<DMatrix<f64>> {
        let rows = self.matrix.nrows();
        let cols = self.matrix.ncols();
        let mut m = self.matrix.clone();
        let scale = m.amax().max(1.0);
        let mut pivot_col = vec![usize::MAX; rows];
        let mut is_pivot = vec![false; cols];
        for r in 0..rows {
            let (c, top) = (0..cols)
                .filter(|&c| !is_pivot[c])
                .map(|c| (c, m[(r, c)].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("more rows than columns is rejected at build time");
            if top <= 1e-12 * scale {
                return Err(Error::numerical(format!(
                    "constraint row {r} is linearly dependent on the others"
                )));
            }
            pivot_col[r] = c;
            is_pivot[c] = true;
            let inv = 1.0 / m[(r, c)];
            for j in 0..cols {
                m[(r, j)] *= inv;
            }
            for rr in 0..rows {
                if rr != r && m[(rr, c)] != 0.0 {
                    let factor = m[(rr, c)];
                    for j in 0..cols {
                        m[(rr, j)] -= factor * m[(r, j)];
                    }
                }
            }
        }
        let free: Vec<usize> = (0..cols).filter(|&c| !is_pivot[c]).collect();
        let mut basis = DMatrix::zeros(cols, free.len());
        for (k, &fc) in free.iter().enumerate() {
            basis[(fc, k)] = 1.0;
            for r in 0..rows {
                basis[(pivot_col[r], k)] = -m[(r, fc)];
            }
        }
        let q = basis.qr().q();
        Ok(q)
    }

    /// Residual `max |C v|` for a coefficient vector in column layout.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        (&self.matrix * v).amax()
    }

    /// Export as CSV, header row naming the columns.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.column_labels().join(","))?;
        for r in 0..self.matrix.nrows() {
            let row: Vec<String> = (0..self.matrix.ncols())
                .map(|c| format!("{:.16e}", self.matrix[(r, c)]))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Outcome of checking that all F/G derivatives up to order k vanish at T.
#[derive(Clone, Debug)]
pub struct OrderReport {
    pub k: usize,
    /// (i, |F residual|, |G residual|), each normalized by xi0^{i-1}.
    pub residuals: Vec<(usize, f64, f64)>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Evaluate F^{(i)}(T), G^{(i)}(T) for i = 0..=k (i = 0 meaning the closed
/// forms F(T), G(T)) and report the largest residual against 1e-9 eta.
///
/// Residuals are normalized by xi0^{i-1} so different derivative orders are
/// comparable (i = 0 scales by xi0).
pub fn verify_order(
    pulse: &FourierPulse,
    params: &PhysicalParams,
    k: usize,
) -> Result<OrderReport> {
    if !pulse.is_closed() {
        return Err(Error::config("verify_order requires a closed pulse (a1 = b1 = 0)"));
    }
    let tolerance = 1e-9 * params.eta;
    let mut residuals = Vec::with_capacity(k + 1);
    let mut max_residual: f64 = 0.0;
    for i in 0..=k {
        let (rf, rg) = if i == 0 {
            (
                trajectory::f_closed(pulse, params, params.gate_time).abs() * params.xi0,
                trajectory::g_closed(pulse, params, params.gate_time).abs() * params.xi0,
            )
        } else {
            let scale = params.xi0.powi(i as i32 - 1);
            (
                trajectory::derivative_f_at_gate_time(pulse, params, i).abs() / scale,
                trajectory::derivative_g_at_gate_time(pulse, params, i).abs() / scale,
            )
        };
        max_residual = max_residual.max(rf).max(rg);
        residuals.push((i, rf, rg));
    }
    Ok(OrderReport {
        k,
        residuals,
        max_residual,
        tolerance,
        pass: max_residual < tolerance,
    })
}

/// Outcome of the redundancy check: G^{(4)}(T) = 0 follows from the i = 1, 3
/// a-constraints without being imposed.
#[derive(Clone, Debug)]
pub struct RedundancyReport {
    /// Residuals of the assumed constraints (i = 1 and the reduced i = 3).
    pub precondition_residuals: (f64, f64),
    pub precondition_ok: bool,
    pub g4_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Check that G^{(4)}(T) vanishes for pulses satisfying
/// `a0/2 + sum a_n = 0` and `sum a_n n^2 = 0`.
pub fn verify_redundancy(pulse: &FourierPulse, params: &PhysicalParams) -> RedundancyReport {
    let n_max = pulse.truncation_order();
    let sum_a: f64 = (1..=n_max).map(|n| pulse.coeff_a(n)).sum();
    let sum_an2: f64 = (1..=n_max).map(|n| pulse.coeff_a(n) * (n * n) as f64).sum();
    let r1 = (0.5 * pulse.a0() + sum_a).abs();
    let r3 = sum_an2.abs();
    let coeff_scale = pulse.a0().abs().max(1.0);
    let precondition_ok = r1 < 1e-9 * coeff_scale && r3 < 1e-9 * coeff_scale * (n_max * n_max) as f64;
    let g4 = trajectory::derivative_g_at_gate_time(pulse, params, 4).abs();
    let tolerance = 1e-10 * params.eta * params.xi0.powi(3) * coeff_scale;
    RedundancyReport {
        precondition_residuals: (r1, r3),
        precondition_ok,
        g4_residual: g4,
        tolerance,
        pass: precondition_ok && g4 < tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> PhysicalParams {
        PhysicalParams::new(0.1, 2.0 * PI).unwrap()
    }

    #[test]
    fn single_constraint_row() {
        let c = ConstraintSystem::build(1, 3, false).unwrap();
        assert_eq!(c.matrix.nrows(), 1);
        assert_eq!(c.matrix.ncols(), 3);
        assert_eq!(c.matrix[(0, 0)], 0.5);
        assert_eq!(c.matrix[(0, 1)], 1.0);
        assert_eq!(c.matrix[(0, 2)], 1.0);
    }

    #[test]
    fn two_constraints_a_only() {
        let c = ConstraintSystem::build(2, 4, false).unwrap();
        assert_eq!(c.matrix.nrows(), 2);
        let r0: Vec<f64> = (0..4).map(|j| c.matrix[(0, j)]).collect();
        let r1: Vec<f64> = (0..4).map(|j| c.matrix[(1, j)]).collect();
        assert_eq!(r0, vec![0.5, 1.0, 1.0, 1.0]);
        assert_eq!(r1, vec![0.0, 4.0, 9.0, 16.0]);
    }

    #[test]
    fn b_block_rows() {
        let c = ConstraintSystem::build(2, 4, true).unwrap();
        assert_eq!(c.matrix.nrows(), 3);
        assert_eq!(c.matrix.ncols(), 4 + 3);
        let brow: Vec<f64> = (4..7).map(|j| c.matrix[(2, j)]).collect();
        assert_eq!(brow, vec![2.0, 3.0, 4.0]);
        // a and b blocks are disjoint
        assert!((0..4).all(|j| c.matrix[(2, j)] == 0.0));
        assert!((4..7).all(|j| c.matrix[(0, j)] == 0.0 && c.matrix[(1, j)] == 0.0));
    }

    #[test]
    fn over_constrained_rejected() {
        assert!(ConstraintSystem::build(2, 2, false).is_err());
    }

    #[test]
    fn nullspace_one_dim() {
        let c = ConstraintSystem::build(1, 2, false).unwrap();
        let z = c.nullspace_basis().unwrap();
        assert_eq!((z.nrows(), z.ncols()), (2, 1));
        // spanned by normalize(-2, 1), up to sign
        let v = z.column(0);
        let expect = DVector::from_vec(vec![-2.0, 1.0]).normalize();
        let align = v.dot(&expect).abs();
        assert!((align - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nullspace_orthonormal_and_annihilated() {
        for (l, n) in [(1usize, 3usize), (2, 5), (3, 10)] {
            let c = ConstraintSystem::build(l, n, false).unwrap();
            let z = c.nullspace_basis().unwrap();
            assert_eq!(z.ncols(), n - l);
            assert!((&c.matrix * &z).amax() < 1e-12);
            let gram = z.transpose() * &z;
            let eye = DMatrix::identity(z.ncols(), z.ncols());
            assert!((gram - eye).amax() < 1e-12);
        }
    }

    #[test]
    fn nullspace_l2_n3_direction() {
        // Solve by hand: a2 = -(9/4) a3, a0 = -2(a2 + a3) = (5/2) a3.
        let c = ConstraintSystem::build(2, 3, false).unwrap();
        let z = c.nullspace_basis().unwrap();
        assert_eq!(z.ncols(), 1);
        let v = DVector::from_vec(vec![5.0 / 2.0, -9.0 / 4.0, 1.0]).normalize();
        assert!((z.column(0).dot(&v).abs() - 1.0).abs() < 1e-12);
        assert!(c.residual(&v) < 1e-14);
    }

    #[test]
    fn dependent_row_named() {
        let mut c = ConstraintSystem::build(2, 4, false).unwrap();
        let dup = c.matrix.row(0).into_owned();
        c.matrix = c.matrix.clone().insert_row(2, 0.0);
        c.matrix.set_row(2, &dup);
        let err = c.nullspace_basis().unwrap_err();
        assert!(err.to_string().contains("row"), "{err}");
    }

    #[test]
    fn order_check_ms_fails_k1() {
        let report = verify_order(&FourierPulse::ms_baseline(), &params(), 1).unwrap();
        assert!(!report.pass);
        // F^(1)(T) = -sqrt(2) eta
        let expect = 2.0f64.sqrt() * params().eta;
        assert!((report.max_residual - expect).abs() < 1e-12);
    }

    #[test]
    fn order_check_balanced_passes_k2() {
        let p = FourierPulse::new(2.0, vec![0.0, -1.0], vec![0.0, 0.0]).unwrap();
        let report = verify_order(&p, &params(), 2).unwrap();
        assert!(report.pass, "max residual {}", report.max_residual);
    }

    #[test]
    fn redundancy_hand_solved_n3() {
        // a0/2 + a2 + a3 = 0 and 4 a2 + 9 a3 = 0 with a3 = 1.
        let p = FourierPulse::new(5.0 / 2.0, vec![0.0, -9.0 / 4.0, 1.0], vec![0.0; 3]).unwrap();
        let report = verify_redundancy(&p, &params());
        assert!(report.precondition_ok);
        assert!(report.pass, "G4 residual {}", report.g4_residual);
    }

    #[test]
    fn redundancy_zero_pulse() {
        let p = FourierPulse::new(0.0, vec![0.0], vec![0.0]).unwrap();
        assert!(verify_redundancy(&p, &params()).pass);
    }

    #[test]
    fn redundancy_precondition_reported_not_thrown() {
        let report = verify_redundancy(&FourierPulse::ms_baseline(), &params());
        assert!(!report.precondition_ok);
        assert!(!report.pass);
    }
}
