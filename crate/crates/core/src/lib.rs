//! Core building blocks for cloud-edge LLM serving: the deployment cost
//! model, a deterministic latency simulator, the edge/cloud wire protocol,
//! network-management data harnesses and the shared config format.

pub mod config;
pub mod cost_model;
pub mod latency_sim;
pub mod netmgmt;
pub mod protocol;
