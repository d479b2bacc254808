//! Closed-form reference for the pendulum `H = p^2/2 + cos(2 pi x)`.

use evans_kam::mather::{critical_momentum, pendulum_reference, PENDULUM_CRITICAL_MOMENTUM};
use evans_kam::MechanicalHamiltonian;

fn main() -> evans_kam::Result<()> {
    let v = MechanicalHamiltonian::pendulum(1.0).v;
    let p_star = critical_momentum(&v)?;
    println!("P* = {p_star:.10} (4/pi = {PENDULUM_CRITICAL_MOMENTUM:.10})");
    for p in [0.0, 1.0, 1.3, 1.5, 2.0, 3.0] {
        println!("hbar({p:.1}) = {:.10}", pendulum_reference(&v, p)?);
    }
    Ok(())
}
