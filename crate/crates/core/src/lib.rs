pub mod abstraction;
pub mod condition;
pub mod declare;
pub mod dpn;
pub mod gfa;
pub mod model;
pub mod monitor;
pub mod syntax;
