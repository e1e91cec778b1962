//! Spectral constants and estimable base arms for a few families.
//!
//! `cargo run --example inspect_constants`

use mixcomb::geometry::{estimable_base_arms, spectral_constants};
use mixcomb::SuperArmFamily;

fn main() -> mixcomb::Result<()> {
    let families = [
        ("uniform matroid d=8 m=3", SuperArmFamily::uniform_matroid(8, 3)?),
        ("uniform matroid d=9 m=4", SuperArmFamily::uniform_matroid(9, 4)?),
        ("perfect matchings of K_3,3", SuperArmFamily::perfect_matchings(3)?),
        ("restricted d0=3", SuperArmFamily::restricted(3)?),
    ];
    for (name, family) in &families {
        let c = spectral_constants(family)?;
        println!("{name}");
        println!("  |M| = {}, d = {}", family.len(), family.d());
        println!("  lambda_min = {:.6}, rho_min = {:.6}", c.lambda_min, c.rho_min);
        println!("  estimable arms: {:?}", estimable_base_arms(family));
    }
    Ok(())
}
