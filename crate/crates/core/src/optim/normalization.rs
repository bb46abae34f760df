use crate::error::{Error, Result};
use crate::model::{ParameterLayout, SegmentKind};
use crate::param::ParamVector;

/// Diagonal ASAM operator `T = diag(t)` with every `t_i >= xi > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationOperator {
    pub(crate) scale: ParamVector,
    pub(crate) xi: f64,
}

impl NormalizationOperator {
    /// `T = I`; reduces every ASAM formula to its SAM counterpart.
    pub fn identity(dim: usize) -> Self {
        NormalizationOperator {
            scale: ParamVector::filled(dim, 1.0),
            xi: 1.0,
        }
    }

    /// `T = diag(scale)`; every entry must be positive and finite.
    pub fn from_scale(scale: ParamVector) -> Result<Self> {
        let xi = scale.iter().copied().fold(f64::INFINITY, f64::min);
        if !(xi > 0.0) {
            return Err(Error::config("normalization scale must be positive"));
        }
        Ok(NormalizationOperator { scale, xi })
    }

    pub fn scale(&self) -> &ParamVector {
        &self.scale
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn len(&self) -> usize {
        self.scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scale.is_empty()
    }
}

/// Builds `T_theta` from the parameter layout.
///
/// Coordinates inside a convolution filter `c_i` all get `||c_i|| + xi`;
/// every other coordinate gets `|theta_j| + xi`.
pub fn build_normalization(
    layout: &ParameterLayout,
    theta: &ParamVector,
    xi: f64,
) -> Result<NormalizationOperator> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::config(format!("xi must be positive, got {xi}")));
    }
    if layout.dim() != theta.len() {
        return Err(Error::Dimension {
            expected: layout.dim(),
            found: theta.len(),
        });
    }
    let th = theta.as_slice();
    let mut t = Vec::with_capacity(th.len());
    for seg in layout.segments() {
        let coords = &th[seg.offset..seg.offset + seg.len];
        match &seg.kind {
            SegmentKind::ConvFilterGroup { filter_sizes } => {
                let mut start = 0;
                for &size in filter_sizes {
                    let filter = &coords[start..start + size];
                    let norm = filter.iter().map(|v| v * v).sum::<f64>().sqrt();
                    t.extend(std::iter::repeat(norm + xi).take(size));
                    start += size;
                }
            }
            SegmentKind::DenseWeight | SegmentKind::Bias => {
                t.extend(coords.iter().map(|v| v.abs() + xi));
            }
        }
    }
    Ok(NormalizationOperator {
        scale: ParamVector::new(t)?,
        xi,
    })
}
