//! Word equations with regular constraints: Nielsen transformation graphs,
//! counter-system abstractions, Presburger length formulas and a solver for
//! the length-constrained problem.

pub mod accel;
pub mod automata;
pub mod counter;
pub mod graph;
pub mod nielsen;
pub mod oracle;
pub mod pad;
pub mod problem;
pub mod solver;
pub mod terms;

pub use automata::{Nfa, UnarySemilinear};
pub use terms::{Assignment, Equation, LengthVector, Letter, Signature, Symbol, Var, Word};
