use serde::{Deserialize, Serialize};

/// Equispaced sample grid on the circle: `theta_j = 2 pi j / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub n: usize,
}

impl SampleGrid {
    pub const DEFAULT_SAMPLES: usize = 256;

    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "sample grid must have at least one point");
        SampleGrid { n }
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * (j as f64) / (self.n as f64)
    }

    pub fn thetas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.theta(j))
    }

    pub fn doubled(&self) -> Self {
        SampleGrid { n: self.n * 2 }
    }
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid {
            n: Self::DEFAULT_SAMPLES,
        }
    }
}

/// All numeric thresholds in one place. Every validator pins its tolerance
/// here rather than inline, so CLI `--tol name=value` overrides reach
/// everything consistently.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    /// Coefficientwise checks on banded data (exact identities up to float error).
    pub coeff: f64,
    /// Duality conditions (1),(2) on generated models.
    pub cond12: f64,
    /// Duality conditions (1),(2) sampled along operator paths.
    pub path_cond12: f64,
    /// Singular-value threshold separating zero from nonzero when computing
    /// fiberwise kernels, images and harmonic spaces.
    pub svd_threshold: f64,
    /// Smallest singular value the induced duality map must keep on fiber
    /// cohomology to count as an isomorphism.
    pub induced_iso_min: f64,
    /// Unitarity defect allowed for signature unitaries.
    pub unitary: f64,
    /// Bounded-transform lemma identities.
    pub q_lemma: f64,
    /// Cayley-transform comparison of D = iBS against the signature unitary.
    pub cayley: f64,
    /// Self-adjointness of sampled operator families.
    pub self_adjoint: f64,
    /// Resolvent identity and norm inequality.
    pub resolvent: f64,
    /// Equality of induced maps on fiber cohomology.
    pub cohomology_map: f64,
    /// Chain-homotopy identities (smoothing and Poincare).
    pub chain_homotopy: f64,
    /// Path stage endpoints must concatenate to this accuracy.
    pub endpoint: f64,
    /// Groupoid identities (exact finite sums).
    pub groupoid: f64,
    /// Winding numbers must round to an integer within this residual.
    pub winding_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            coeff: 1e-12,
            cond12: 1e-12,
            path_cond12: 1e-10,
            svd_threshold: 1e-8,
            induced_iso_min: 1e-6,
            unitary: 1e-9,
            q_lemma: 1e-8,
            cayley: 1e-8,
            self_adjoint: 1e-10,
            resolvent: 1e-8,
            cohomology_map: 1e-8,
            chain_homotopy: 1e-10,
            endpoint: 1e-12,
            groupoid: 1e-12,
            winding_residual: 0.1,
        }
    }
}

impl Tolerances {
    /// Apply a `name=value` override, as accepted by the CLI `--tol` flag.
    pub fn set_by_name(&mut self, name: &str, value: f64) -> Result<(), String> {
        match name {
            "coeff" => self.coeff = value,
            "cond12" => self.cond12 = value,
            "path_cond12" => self.path_cond12 = value,
            "svd_threshold" => self.svd_threshold = value,
            "induced_iso_min" => self.induced_iso_min = value,
            "unitary" => self.unitary = value,
            "q_lemma" => self.q_lemma = value,
            "cayley" => self.cayley = value,
            "self_adjoint" => self.self_adjoint = value,
            "resolvent" => self.resolvent = value,
            "cohomology_map" => self.cohomology_map = value,
            "chain_homotopy" => self.chain_homotopy = value,
            "endpoint" => self.endpoint = value,
            "groupoid" => self.groupoid = value,
            "winding_residual" => self.winding_residual = value,
            other => return Err(format!("unknown tolerance `{other}`")),
        }
        Ok(())
    }
}
