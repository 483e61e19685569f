use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;


/// A user-supplied proximal map `prox_{step·g}` together with the value of `g`.
pub trait ProximalMap: Send + Sync {
    /// Overwrites `z` with `argmin_x step·g(x) + ½‖x − z‖²`.
    fn apply(&self, step: f64, z: &mut [f64]);
    fn value(&self, x: &[f64]) -> f64;
}

/// Proximal operator of the regularizer `g`.
#[derive(Clone)]
pub enum ProxOperator {
    /// `g = 0`; the proximal map is the identity.
    Zero,
    /// `g(x) = xi·‖x‖₁`; the proximal map is soft-thresholding at `step·xi`.
    L1 { xi: f64 },
    Custom(Arc<dyn ProximalMap>),
}

impl fmt::Debug for ProxOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxOperator::Zero => f.write_str("Zero"),
            ProxOperator::L1 { xi } => f.debug_struct("L1").field("xi", xi).finish(),
            ProxOperator::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl ProxOperator {
    /// `l1(0)` collapses to [`ProxOperator::Zero`].
    pub fn l1(xi: f64) -> Self {
        if xi == 0.0 {
            ProxOperator::Zero
        } else {
            ProxOperator::L1 { xi }
        }
    }

    pub fn apply_in_place(&self, step: f64, z: &mut [f64]) {
        match self {
            ProxOperator::Zero => {}
            ProxOperator::L1 { xi } => {
                let t = step * xi;
                for zj in z.iter_mut() {
                    *zj = soft_threshold(*zj, t);
                }
            }
            ProxOperator::Custom(map) => map.apply(step, z),
        }
    }

    pub fn apply(&self, step: f64, z: &[f64]) -> Vec<f64> {
        let mut out = z.to_vec();
        self.apply_in_place(step, &mut out);
        out
    }

    /// Value of the regularizer `g(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ProxOperator::Zero => 0.0,
            ProxOperator::L1 { xi } => xi * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxOperator::Custom(map) => map.value(x),
        }
    }
}

#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    let m = z.abs() - t;
    if m > 0.0 {
        m.copysign(z)
    } else {
        0.0
    }
}

/// Convenience wrapper over [`ProxOperator::apply`].
pub fn prox_apply(op: &ProxOperator, step: f64, z: &[f64]) -> Vec<f64> {
    op.apply(step, z)
}
