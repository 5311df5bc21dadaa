//! Normal forms of Euler-like vector fields, functions and symplectic forms
//! by the Moser path method, in weighted polynomial coordinates.

pub mod cli;
pub mod expr;
pub mod flow;
pub mod normal;
pub mod numeric;
pub mod verify;
pub mod weighted;
