//! Exact planning and online learning for admission control to an
//! M/M/c/S queue with several job classes.
//!
//! * [`model`]: the controlled birth-death chain, expected rewards and
//!   closed-form policy evaluation.
//! * [`solvers`]: policy iteration and uniformized value iteration.
//! * [`learner`]: the optimistic episodic learner for unknown arrival rates.
//! * [`sim`]: event-driven simulation and regret accounting.
//! * [`harness`]: experiment configuration, regret bounds and CSV output.

pub mod harness;
pub mod learner;
pub mod model;
pub mod sim;
pub mod solvers;
