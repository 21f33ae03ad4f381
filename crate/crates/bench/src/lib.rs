//! Workloads shared by the benchmarks.

use gbell_core::{preset_cglmp, preset_mermin, BellFunctional, Result};

/// Functionals spanning small to medium enumeration sizes.
pub fn bound_workloads() -> Result<Vec<(String, BellFunctional)>> {
    Ok(vec![
        ("cglmp_d5".into(), preset_cglmp(5)?),
        ("cglmp_d10".into(), preset_cglmp(10)?),
        ("mermin_n5".into(), preset_mermin(5)?),
        ("mermin_n8".into(), preset_mermin(8)?),
    ])
}
