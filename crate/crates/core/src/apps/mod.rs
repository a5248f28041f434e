pub mod kset;
pub mod matching;
