// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment harness for change-point preferential attachment trees: file
//! formats, run manifests, parallel ensembles and the `pachange` subcommands.

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod formats;
pub mod manifest;
