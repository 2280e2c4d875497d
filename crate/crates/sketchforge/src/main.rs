// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

fn main() {
    std::process::exit(sketchforge::cli::run());
}
