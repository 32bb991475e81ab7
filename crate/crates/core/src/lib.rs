pub mod cli;
pub mod footstep;
pub mod geometry;
pub mod planner;
pub mod query;
pub mod scene;
