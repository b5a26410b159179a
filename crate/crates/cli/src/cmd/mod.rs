pub mod eval;
pub mod simulate;
pub mod track;
pub mod train;
