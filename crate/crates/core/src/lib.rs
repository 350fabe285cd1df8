//! Rolling-ball physics laboratory.

mod binio;
pub mod gradcore;
pub mod mechanics;
pub mod optics;
pub mod datasets;
pub mod predictor;
pub mod seeding;
pub mod training;
pub mod baselines;
pub mod evaluation;
pub mod selftest;
pub mod cli;
