pub mod calc;
pub mod list;
pub mod search;
pub mod simulate;
pub mod sources;
pub mod sweep;
pub mod tables;
