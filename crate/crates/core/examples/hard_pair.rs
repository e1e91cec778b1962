//! Two instances that differ only in the second arm's mean.
//!
//! A policy with small regret on the first instance rarely pulls the
//! first arm, so it cannot tell the two gaps apart quickly.

use mixcomb::instance::{make_hard_pair, true_gaps};

fn main() -> mixcomb::Result<()> {
    let (a, b) = make_hard_pair(0.2, 0.05)?;
    for (name, inst) in [("first", &a), ("second", &b)] {
        let gaps = true_gaps(inst);
        println!(
            "{name}: mu = {:?}, best arm {}, gap(0, 1) = {:+.3}",
            inst.mu(),
            gaps.best_index,
            gaps.super_gap.get(0, 1)
        );
    }
    Ok(())
}
