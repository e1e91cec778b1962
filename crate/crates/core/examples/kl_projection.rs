//! KL projection onto the scaled convex hull of a family.
//!
//! The complete matroid uses the closed form; the path family goes
//! through Frank-Wolfe.

use mixcomb::geometry::{kl_divergence, kl_project, project_frank_wolfe};
use mixcomb::SuperArmFamily;

fn main() -> mixcomb::Result<()> {
    let q_tilde = vec![0.62, 0.2, 0.1, 0.05, 0.03];

    let matroid = SuperArmFamily::uniform_matroid(5, 2)?;
    let q = kl_project(&matroid, &q_tilde, 1e-9)?;
    println!("capped simplex: {q:.4?}  KL = {:.6}", kl_divergence(&q, &q_tilde));

    let path = SuperArmFamily::new(5, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]])?;
    let (q, report) = project_frank_wolfe(&path, &q_tilde, 1e-9, 50_000)?;
    println!(
        "path family:    {q:.4?}  KL = {:.6} ({} iterations, gap {:.1e})",
        kl_divergence(&q, &q_tilde),
        report.iterations,
        report.gap
    );
    Ok(())
}
