//! Both sides of the planar evolution equation for `σ_z(F)` at the top
//! corner, on a grid and on its refinement with the same draws.
//!
//! ```bash
//! cargo run --release --example dmz_residual
//! ```

use sheetfilter::harness::checks::{dmz_case, dmz_configs};
use sheetfilter::harness::config::ExperimentConfig;
use sheetfilter::model::Func;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (reduced, full) = dmz_configs(&ExperimentConfig::default());
    let f = Func::sin(1.0, 1.0);
    for (name, cfg) in [("sensor g = 0", reduced), ("sensor g = 0.5 sin", full)] {
        let case = dmz_case(&cfg, &f, 5000, true)?;
        let (c, fine) = (case.coarse, case.fine.unwrap());
        println!("{name}");
        println!("  lhs {:.4}, rhs terms {:.4?}", c.lhs, c.rhs_terms);
        println!("  residual 8x8   {:+.4} (se {:.4})", c.residual, c.se);
        println!("  residual 16x16 {:+.4} (se {:.4})", fine.residual, fine.se);
    }
    Ok(())
}
