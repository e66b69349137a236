//! Flexible-duplex (FlexD) inter-satellite link analysis.
//!
//! Two satellites `S_k` and `S_l` relay backlogged traffic to each other's
//! ground users over a half-duplex inter-satellite link (ISL). In every slot
//! FlexD activates the ISL direction whose two-hop chain (ISL, downlink,
//! backlog) offers the larger instantaneous rate. This crate provides:
//!
//! * the per-slot physical model: geometry, link budgets, ISL SINR under
//!   interference, Rician/Nakagami downlink fading, and backlog-equivalent
//!   SINR ([`geometry`], [`linkbudget`], [`channel`], [`sinr`]);
//! * FlexD and the half-/full-duplex baselines ([`scheduler`]);
//! * closed-form outage probability and the energy-efficiency upper bound
//!   ([`analytics`]);
//! * an independent, seeded Monte Carlo oracle ([`montecarlo`]);
//! * scenario files, parameter sweeps with CSV output and a self-check
//!   ([`config`], [`sweep`], [`selfcheck`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod linkbudget;
pub mod montecarlo;
pub mod scenario;
pub mod scheduler;
pub mod selfcheck;
pub mod sinr;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
