//! Shared assembly types: local Hessian stencils and evaluated potentials.

use nalgebra::{DMatrix, DVector};

/// Dense local Hessian block with its global DOF map.
#[derive(Clone, Debug)]
pub struct LocalStencil {
    pub dofs: Vec<usize>,
    pub hess: DMatrix<f64>,
}

/// Energy, full-length gradient, and per-stencil Hessians of one potential.
#[derive(Clone, Debug)]
pub struct PotentialEval {
    pub energy: f64,
    pub grad: DVector<f64>,
    pub stencils: Vec<LocalStencil>,
}

impl PotentialEval {
    pub fn zero(ndofs: usize) -> Self {
        Self { energy: 0.0, grad: DVector::zeros(ndofs), stencils: Vec::new() }
    }

    /// Accumulates another evaluated potential, scaled.
    pub fn add_scaled(&mut self, other: PotentialEval, scale: f64) {
        self.energy += scale * other.energy;
        self.grad.axpy(scale, &other.grad, 1.0);
        for mut s in other.stencils {
            s.hess *= scale;
            self.stencils.push(s);
        }
    }
}
