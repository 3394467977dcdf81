// SPDX-License-Identifier: Apache-2.0

//! Random and/or trees and the distributions they induce on Boolean functions.

pub mod boolfn;
pub mod exprtree;
pub mod treegen;
pub mod trimming;
pub mod complexity;
pub mod spine;
pub mod seeding;
pub mod forest;
pub mod model;
pub mod limitdist;
