//! Reference big-step semantics with resource and minimal-level tracking, and
//! a bounded exhaustive oracle for the three triple judgments.

mod bounds;
mod exec;
mod oracle;
mod state;

pub use bounds::DomainBounds;
pub use exec::{enumerate, exec, ChoiceScript, Decision, Enumeration, ExecError, Outcome};
pub use oracle::{holds_semantically, post_value, post_values, pre_value, Truth};
pub use state::{eval_array, eval_bool, eval_expr, ArrayVal, EvalError, State};
