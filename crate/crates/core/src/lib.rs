//! Multi-agent task allocation toolkit.

pub mod accounting;
pub mod allocation;
pub mod assignment;
pub mod coordination;
pub mod gateway;
pub mod kitchen;
pub mod rational;
pub mod seed;
