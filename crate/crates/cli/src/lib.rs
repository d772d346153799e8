//! Command-line interface and HTTP service for the tender drafting pipeline.

pub mod cli;
pub mod config;
pub mod data;
pub mod providers;
pub mod server;
pub mod store;

pub use config::AppConfig;
pub use providers::{HttpEmbedder, HttpLlm, Providers};
pub use server::{router, serve, AppState};
pub use store::{SessionRecord, SessionStore};
