use serde::{Deserialize, Serialize};

/// Chemical potential and hardness from frontier orbital energies (hartree):
/// `mu = (homo + lumo) / 2`, `eta = (lumo - homo) / 2`.
pub fn derive_qc(e_homo: f64, e_lumo: f64) -> (f64, f64) {
    ((e_homo + e_lumo) / 2.0, (e_lumo - e_homo) / 2.0)
}

/// The seven quantum-chemical descriptors. Dipole and the two most-negative
/// partial charges are passed through from the upstream calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedDescriptors {
    pub e_homo: f64,
    pub e_lumo: f64,
    pub mu: f64,
    pub eta: f64,
    pub dipole: f64,
    pub q_mk: f64,
    pub q_cm5: f64,
}

impl DerivedDescriptors {
    pub fn new(e_homo: f64, e_lumo: f64, dipole: f64, q_mk: f64, q_cm5: f64) -> Self {
        let (mu, eta) = derive_qc(e_homo, e_lumo);
        Self {
            e_homo,
            e_lumo,
            mu,
            eta,
            dipole,
            q_mk,
            q_cm5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-15
    }

    #[test]
    fn formula_cases() {
        let (mu, eta) = derive_qc(-0.3, 0.1);
        assert!(close(mu, -0.1) && close(eta, 0.2));
        let (mu, eta) = derive_qc(-0.25, -0.05);
        assert!(close(mu, -0.15) && close(eta, 0.10));
        assert_eq!(derive_qc(-0.4, -0.4), (-0.4, 0.0));
    }

    #[test]
    fn hardness_nonnegative_when_gap_nonnegative() {
        let d = DerivedDescriptors::new(-0.31, 0.02, 1.8, -0.7, -0.5);
        assert!(d.eta >= 0.0);
        assert_eq!(d.mu, (d.e_homo + d.e_lumo) / 2.0);
    }
}
