//! Smooth cutoffs equal to 1 on a closed set and 0 beyond an enlargement.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::extension::bump::smooth_step;
use crate::numerics::VectorFunction;
use crate::sets::ClosedSet;

/// Target set `V` and enlargement `δ0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub set: ClosedSet,
    pub delta0: f64,
}

impl CutoffSpec {
    pub fn new(set: ClosedSet, delta0: f64) -> Result<Self> {
        if !(delta0 > 0.0) {
            return usage("cutoff enlargement must be positive");
        }
        Ok(Self { set, delta0 })
    }
}

/// `ξ(z) = S(d(z, V) / δ0)` with the bump-built smooth step `S`.
///
/// `ξ` is smooth wherever the distance function is; this holds for balls and
/// boxes and for point clouds within half their separation.
pub fn smooth_cutoff(spec: &CutoffSpec, z: &[f64]) -> f64 {
    smooth_step(spec.set.distance(z) / spec.delta0)
}

/// `ξ · g` as a function.
pub struct CutoffProduct<G> {
    pub cutoff: CutoffSpec,
    pub inner: G,
}

impl<G: VectorFunction> VectorFunction for CutoffProduct<G> {
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let xi = smooth_cutoff(&self.cutoff, u);
        if xi == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        self.inner.eval_into(u, out)?;
        out.iter_mut().for_each(|o| *o *= xi);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::MultiIndex;
    use crate::numerics::{finite_diff, scalar_fn};

    #[test]
    fn cutoff_values_and_flatness() {
        let spec = CutoffSpec::new(ClosedSet::ball(vec![0.0, 0.0], 1.0).unwrap(), 0.5).unwrap();
        assert_eq!(smooth_cutoff(&spec, &[0.5, 0.0]), 1.0);
        assert_eq!(smooth_cutoff(&spec, &[1.6, 0.0]), 0.0);
        let mid = smooth_cutoff(&spec, &[1.25, 0.0]);
        assert!(mid > 0.0 && mid < 1.0);
        let xi = scalar_fn(2, |u| smooth_cutoff(&spec, u));
        let k = MultiIndex::unit(2, 0);
        let d_mid = finite_diff(&xi, &[1.25, 0.0], &k, 1e-5).unwrap()[0];
        assert!(d_mid.is_finite() && d_mid < 0.0);
        for z in [[0.9, 0.0], [1.7, 0.3]] {
            for k in MultiIndex::enumerate(2, 2).unwrap().iter().skip(1) {
                assert_eq!(finite_diff(&xi, &z, k, 1e-3).unwrap()[0], 0.0);
            }
        }
        assert!(CutoffSpec::new(ClosedSet::ball(vec![0.0], 1.0).unwrap(), 0.0).is_err());
    }
}
