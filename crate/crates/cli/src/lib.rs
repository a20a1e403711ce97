//! Command-line front end and HTTP service.

pub mod args;
pub mod commands;
pub mod service;
