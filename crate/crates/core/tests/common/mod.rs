// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures and brute-force oracles for the integration tests.

#![allow(dead_code)]

pub mod campaign;
pub mod coi;
pub mod corpus;
pub mod graph_oracle;
pub mod metrics;
pub mod pipeline;
pub mod sva_cases;
pub mod trace_oracle;
