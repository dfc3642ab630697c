#![allow(dead_code)]

pub mod audit;
pub mod enumerate;
pub mod expansion_oracle;
pub mod fixtures;
