pub mod annotations;
pub mod dublin_core;
pub mod lexicon;
pub mod manifest;
pub mod normalize;
pub mod ontology;
pub mod query;
pub mod taxonomy;
