pub mod assign;
pub mod kitchen;
pub mod replay;
pub mod sweep;
