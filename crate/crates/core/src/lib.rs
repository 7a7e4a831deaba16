pub mod bench;
pub mod cli;
pub mod corpus;
pub mod dialogue;
pub mod mutator;
mod par;
pub mod pipeline;
pub mod provider;
mod seeding;
pub mod sqlkit;
pub mod valuelink;
