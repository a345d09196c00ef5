//! The ¹³C sensor coupled to a driven proton bath.
//!
//! Joint operators are ordered sensor ⊗ bath. Hamiltonians are in rad/s, times in s.

use crate::error::{Error, Result};
use crate::liouville::{HermitianEigen, OperatorMatrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams<T: Real> {
    /// Scalar coupling J_CH in Hz.
    pub j_ch: T,
    /// Nutation frequency ν of the bath drive in Hz.
    pub nu: T,
    pub p_c: T,
    pub p_h: T,
    /// Coupling window δt in s.
    pub delta_t: T,
    /// Repetitions of the robust channel.
    pub n_repeat: usize,
    pub bath_spins: usize,
}

impl<T: Real> Default for ExperimentParams<T> {
    fn default() -> Self {
        Self {
            j_ch: T::lit(129.6),
            nu: T::lit(24000.0),
            p_c: T::one(),
            p_h: T::one(),
            delta_t: T::lit(0.5e-3),
            n_repeat: 1,
            bath_spins: 3,
        }
    }
}

impl<T: Real> ExperimentParams<T> {
    /// J = 2π·J_CH in rad/s.
    pub fn j(&self) -> T {
        T::two_pi() * self.j_ch
    }

    pub fn with_delta_t(mut self, dt: T) -> Self {
        self.delta_t = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("j_ch", self.j_ch), ("nu", self.nu), ("delta_t", self.delta_t)] {
            if !v.is_finite() || v <= T::zero() {
                return Err(Error::InvalidParameter(format!("{name} must be positive (got {v})")));
            }
        }
        for (name, v) in [("p_c", self.p_c), ("p_h", self.p_h)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if self.n_repeat == 0 {
            return Err(Error::InvalidParameter("n_repeat must be at least 1".into()));
        }
        if !(1..=4).contains(&self.bath_spins) {
            return Err(Error::InvalidParameter(format!("bath_spins must be 1..=4 (got {})", self.bath_spins)));
        }
        Ok(())
    }
}

/// Single-spin operator `op` on site `i` of an `n`-spin register.
pub fn site_operator<T: Real>(op: &OperatorMatrix<T>, i: usize, n: usize) -> OperatorMatrix<T> {
    (0..n).fold(
        OperatorMatrix::identity(1),
        |acc, j| {
            if j == i {
                acc.kron(op)
            } else {
                acc.kron(&OperatorMatrix::identity(2))
            }
        },
    )
}

/// Σᵢ σ_{i,k} over an `n`-spin register.
pub fn collective_pauli<T: Real>(k: usize, n: usize) -> OperatorMatrix<T> {
    let p = OperatorMatrix::pauli(k);
    (0..n).fold(OperatorMatrix::zeros(1 << n), |acc, i| acc + site_operator(&p, i, n))
}

#[derive(Debug, Clone)]
pub struct SystemModel<T: Real> {
    pub params: ExperimentParams<T>,
    /// πν Σσ_x.
    pub h_b: OperatorMatrix<T>,
    /// (J/2) Σσ_z.
    pub b: OperatorMatrix<T>,
    /// ½σ_z ⊗ B.
    pub v: OperatorMatrix<T>,
    pub rho_s: OperatorMatrix<T>,
    pub rho_b: OperatorMatrix<T>,
    h_b_eigen: HermitianEigen<T>,
}

impl<T: Real> SystemModel<T> {
    pub fn build(params: ExperimentParams<T>) -> Result<Self> {
        params.validate()?;
        let n = params.bath_spins;
        let sx = collective_pauli(1, n);
        let h_b = sx.scale_real(T::pi() * params.nu);
        let b = collective_pauli(3, n).scale_real(params.j() * T::lit(0.5));
        let v = OperatorMatrix::pauli(3).scale_real(T::lit(0.5)).kron(&b);
        let rho_s =
            (OperatorMatrix::identity(2) + OperatorMatrix::pauli(3).scale_real(params.p_c)).scale_real(T::lit(0.5));
        let rho_b =
            (OperatorMatrix::identity(1 << n) + sx.scale_real(params.p_h)).scale_real(T::lit(1.0 / (1u32 << n) as f64));
        let tol = T::structural_tol() * (T::one() + h_b.frobenius_norm() + b.frobenius_norm());
        for m in [&h_b, &b, &v, &rho_s, &rho_b] {
            if !m.is_hermitian(tol) {
                return Err(Error::InvalidParameter("non-Hermitian model operator".into()));
            }
        }
        let h_b_eigen = h_b.hermitian_eigen();
        Ok(Self { params, h_b, b, v, rho_s, rho_b, h_b_eigen })
    }

    pub fn sensor_dim(&self) -> usize {
        2
    }

    pub fn bath_dim(&self) -> usize {
        1 << self.params.bath_spins
    }

    pub fn joint_dim(&self) -> usize {
        2 * self.bath_dim()
    }

    /// exp(−i H_B t).
    pub fn bath_propagator(&self, t: T) -> OperatorMatrix<T> {
        self.h_b_eigen.unitary(t)
    }

    /// B(t) = e^{iH_B t} B e^{−iH_B t}.
    pub fn bath_operator_at(&self, t: T) -> OperatorMatrix<T> {
        let u = self.h_b_eigen.unitary(-t);
        self.b.conjugate_by(&u)
    }

    /// ρ_S ⊗ ρ_B.
    pub fn initial_state(&self) -> OperatorMatrix<T> {
        self.rho_s.kron(&self.rho_b)
    }
}
