//! Small dense-network kernels shared by the trainee and the Q-networks.

mod checkpoint;
mod loss;
mod mlp;
mod rmsprop;

pub(crate) use checkpoint::mlp_tensor_specs;
pub use checkpoint::{read_params, write_params, ParamHeader, TensorSpec};
pub use loss::{log_prob, softmax, softmax_xent, PROB_FLOOR};
pub use mlp::{ForwardTrace, Mlp};
pub use rmsprop::{RmsProp, RmsPropConfig};

/// Anything that exposes its parameters as an ordered list of flat tensors.
///
/// The order must be stable: optimizers and checkpoints index by position.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Hash of the exact parameter bits.
    fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for t in self.tensors() {
            t.len().hash(&mut h);
            for v in t {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}
