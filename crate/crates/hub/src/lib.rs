//! HTTP service and command-line client for a Paperstack hub.

pub mod api;
pub mod cli;
pub mod client;
pub mod config;
pub mod server;

pub use client::{Client, ClientError};
pub use server::{router, serve, spawn, AppState, Running, ServiceError};
