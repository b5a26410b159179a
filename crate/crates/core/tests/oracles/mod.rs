//! Independent reference implementations used only by tests.
#![allow(dead_code)]

pub mod ccf;
pub mod eval;
pub mod raycast;
pub mod tpn;
