pub mod calibrate;
pub mod ctds;
pub mod distances;
pub mod eval;
pub mod simulate;
