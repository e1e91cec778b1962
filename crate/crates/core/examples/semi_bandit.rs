//! Drives the semi-bandit UCB policy with forced exploration by hand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixcomb::mixcombucb::init_ucb;
use mixcomb::SuperArmFamily;

fn main() -> mixcomb::Result<()> {
    let mu = [0.9, 0.7, 0.6, 0.4, 0.3, 0.1];
    let family = SuperArmFamily::uniform_matroid(6, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut env = ChaCha8Rng::seed_from_u64(4);
    let mut draw = move || -> Vec<f64> { mu.iter().map(|&p| f64::from(env.random::<f64>() < p)).collect() };

    let (mut state, report) = init_ucb(&family, 0.5, |_| draw())?;
    println!("initialization played {:?}", report.played);
    let n = 3000;
    let mut forced = 0;
    while state.t() <= n {
        let rec = state.select(&mut rng)?;
        forced += usize::from(rec.selected != rec.ucb_arm);
        let w = draw();
        let obs: Vec<(usize, f64)> = family.arm(rec.selected).iter().map(|&e| (e, w[e])).collect();
        state.update(&obs, &rec)?;
    }
    println!("{forced} rounds left the UCB arm");
    println!("empirical means: {:.3?}", state.w_hat());
    println!("pull counts:     {:?}", state.counts());
    let (_, base) = state.estimates(n)?;
    println!("IPW scores:      {:.3?}", base.scores());
    Ok(())
}
