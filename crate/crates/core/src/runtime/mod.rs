//! Value model, frames, per-branch info, the shared session (scores, costs,
//! effect provider) and the direct evaluator.

pub mod builtins;
pub mod eval;
pub mod frame;
pub mod info;
pub mod provider;
pub mod scoredb;
pub mod session;
pub mod stack;
pub mod value;

pub use eval::{Exec, Fault, Signal};
pub use frame::{Frame, IterState};
pub use info::{Info, Score};
pub use provider::{CallRecord, Provider};
pub use scoredb::{ScoreDb, ScoreHandle};
pub use session::Session;
pub use value::{Num, Value};
