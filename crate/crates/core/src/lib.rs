//! Tensor calculus for spherically symmetric Finsler metrics
//! F(x, y) = u·φ(r, s), with r = |x|, u = |y|, s = ⟨x, y⟩/u.
//!
//! Two independent routes to every tensor: closed forms built from φ and its
//! s-derivatives ([`metric`], [`cartan`], [`ttensor`]), and a definitional
//! oracle that differentiates F² in y with nested jets
//! ([`ttensor::t_tensor_oracle`]). [`verify`] runs them against each other.

pub mod cartan;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod frame;
pub mod jets;
pub mod metric;
pub mod sampling;
pub mod tensor;
pub mod tolerance;
pub mod ttensor;
pub mod verify;

pub use cartan::{
    cartan_mixed, cartan_tensor, cartan_vertical_closed, mean_cartan, quasi_c_decomposition, MeanCartan,
    QuasiCDecomposition,
};
pub use catalog::{builtin, family_phi, BuiltinInfo, MetricKind, MetricSpec, Params, BUILTINS};
pub use error::{Error, Result};
pub use expr::{eval_expr, parse_metric_expr, MetricExpr, ParseError};
pub use frame::{make_eval_point, n_tensor, EvalPoint};
pub use jets::{fpow2_partial, fpow2_partial4, phi_jet, Jet, Jet4, PhiJet, Scalar};
pub use metric::{inverse_metric, metric_tensor, regularity, rhos, sigmas, RegularityReport, SigmaRho};
pub use tensor::{MixedTensor, SymTensor, SymTensor2, SymTensor3, SymTensor4};
pub use ttensor::{
    phi_zero_identity, recover_family_params, t_coefficients, t_condition_check, t_tensor_closed,
    t_tensor_cyclic_lemmas, t_tensor_oracle, w_value, ClassificationReport, Grid, TCoefficients, WValue,
};
