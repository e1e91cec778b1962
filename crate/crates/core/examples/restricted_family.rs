//! A family in which only some base-arm gaps are identifiable from
//! full-bandit feedback, and the semi-bandit run that still covers all.

use mixcomb::geometry::estimable_base_arms;
use mixcomb::harness::{Algo, Experiment, ExperimentConfig, FamilySpec};
use mixcomb::SuperArmFamily;

fn main() -> mixcomb::Result<()> {
    let family = SuperArmFamily::restricted(3)?;
    println!("arms: {:?}", family.arms());
    println!("estimable from totals: {:?}", estimable_base_arms(&family));

    let cfg = ExperimentConfig::new(Algo::Ucb, FamilySpec::Restricted { d0: 3 }, 2000, vec![0.5], 5, 9);
    let exp = Experiment::new(cfg)?;
    let r = exp.run_trial(0.5, 0)?;
    println!("semi-bandit base gap labels: {:?}", r.estimated.base_gap.labels());
    println!("final max super-arm error: {:.3}", r.last().max_err_m);

    let kl = ExperimentConfig::new(Algo::Kl, FamilySpec::Restricted { d0: 3 }, 2000, vec![0.5], 5, 9);
    if let Err(e) = Experiment::new(kl) {
        println!("full-bandit run refused: {e}");
    }
    Ok(())
}
