//! Drives the full-bandit mirror-descent policy by hand.
//!
//! Only the total reward of the played super arm is fed back.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixcomb::geometry::spectral_constants;
use mixcomb::instance::true_gaps;
use mixcomb::metrics::max_pairwise_error;
use mixcomb::mixcombkl::{kl_params, KlState};
use mixcomb::{BanditInstance, NoiseLaw, SuperArmFamily};

fn main() -> mixcomb::Result<()> {
    let n = 4000;
    let family = SuperArmFamily::uniform_matroid(6, 2)?;
    let mu = vec![0.9, 0.7, 0.6, 0.4, 0.3, 0.1];
    let inst = BanditInstance::new(family.clone(), mu.clone(), NoiseLaw::Bernoulli)?;
    let constants = spectral_constants(&family)?;
    let params = kl_params(&constants, &family, n, 0.5)?;
    println!("gamma = {:.4}, eta = {:.5}", params.gamma, params.eta);

    let mut state = KlState::new(family.clone(), constants, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..n {
        let sel = state.select(&mut rng)?;
        let total: f64 = family.arm(sel.arm).iter().map(|&e| f64::from(rng.random::<f64>() < mu[e])).sum();
        state.update(total, &sel)?;
    }
    println!("final q: {:.3?}", state.q());
    println!("explored in {} of {n} rounds", state.explore_rounds());

    let (super_est, base_est) = state.estimates(n)?;
    let truth = true_gaps(&inst);
    let base_truth = truth.base_gap.restrict(base_est.labels()).unwrap();
    println!("max super-arm gap error: {:.3}", max_pairwise_error(&super_est, &truth.super_gap)?);
    println!("max base-arm gap error:  {:.3}", max_pairwise_error(&base_est, &base_truth)?);
    Ok(())
}
