// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Generates one composition per spatial relation and prints its layout:
//! the labeled steps, the region boxes, and a few alternative drawing
//! orders.

use sketchforge::shapes::{enumerate_orders, gen_composition, Relation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let relations = [Relation::Containment, Relation::Adjacency, Relation::Overlap, Relation::Grouping];
    for relation in relations {
        let comp = gen_composition(relation, 3, 7, (480.0, 832.0))?;
        println!("== {} (seed {}) ==", relation.word(), comp.seed);
        for (k, (name, description)) in comp.steps.iter().enumerate() {
            let r = &comp.regions[k];
            println!(
                "  {}. {name} - {description} in [{:.0},{:.0}]x[{:.0},{:.0}]",
                k + 1,
                r.min_x,
                r.max_x,
                r.min_y,
                r.max_y
            );
        }
        let orders = enumerate_orders(&comp, 3, 99)?;
        let rendered: Vec<String> = orders.iter().map(|o| format!("{:?}", o.as_slice())).collect();
        println!("  orders: {}", rendered.join(" "));
    }
    Ok(())
}
