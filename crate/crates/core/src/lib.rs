//! Non-local Cahn–Hilliard tumor growth with a single-well Lennard–Jones
//! potential.
//!
//! [`solver::run`] integrates a resolved [`config::Problem`] and monitors the
//! properties of the continuous model along the way. The guide under `book/`
//! walks through the modules in order.

pub mod diagnostics;
pub mod grid;
pub mod kernel;
pub mod model;
pub mod potential;
pub mod solver;
pub mod config;
pub mod error;
pub mod io;
pub mod experiments;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/model.md")]
    pub struct Model;
    #[doc = include_str!("../../../book/src/potential.md")]
    pub struct Potential;
    #[doc = include_str!("../../../book/src/kernel.md")]
    pub struct Kernel;
    #[doc = include_str!("../../../book/src/grid.md")]
    pub struct Grid;
    #[doc = include_str!("../../../book/src/solver.md")]
    pub struct Solver;
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    pub struct Diagnostics;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
