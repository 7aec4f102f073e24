//! Correlation functions as chain elements, the reduction and sewing
//! differentials acting on them, and the checks built on top.

pub mod genus0;
pub mod genus1;
pub mod genusg;
pub mod probe;
pub mod total;
pub mod checks;
pub mod connection;
