// SPDX-License-Identifier: Apache-2.0

//! Hierarchy-aware assertion generation and checking for Verilog designs.

pub mod graph;
pub mod llm;
pub mod mutation;
pub mod pipeline;
pub mod report;
pub mod sim;
pub mod sva;
pub mod trace;
pub mod value;
pub mod verilog;
