//! Writes a point of the convex hull as a sparse mixture of super arms.

use mixcomb::geometry::{decompose, kl_project};
use mixcomb::SuperArmFamily;

fn main() -> mixcomb::Result<()> {
    let family = SuperArmFamily::uniform_matroid(8, 3)?;
    let q = kl_project(&family, &[0.3, 0.2, 0.15, 0.1, 0.1, 0.05, 0.05, 0.05], 1e-9)?;
    let target: Vec<f64> = q.iter().map(|x| 3.0 * x).collect();
    let p = decompose(&family, &target)?;
    println!("target   {target:.4?}");
    for &(arm, w) in p.pairs() {
        println!("  {w:.4}  x  {:?}", family.arm(arm));
    }
    let residual = p
        .mean_theta(&family)
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("support {} of {}, residual {residual:.1e}", p.support_len(), family.len());
    Ok(())
}
