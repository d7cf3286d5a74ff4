//! Sweep over particle numbers and a power-law fit of the squared norm
//! error against `N`.

use bogolab::harness::{parse_config_str, run_sweep};

const SWEEP: &str = r#"
particles_list = [3, 4, 5, 6]
beta_list = [0.0, 0.2]
[grid]
length = 6.283185307179586
points = 12
[interaction]
beta = 0.0
[interaction.profile]
kind = "gaussian"
strength = 2.0
sigma = 0.5
[condensate]
kind = "gaussian"
center = 3.141592653589793
width = 1.0
momentum = 1.0
[time]
t_final = 0.5
dt = 1e-2
stride = 25
"#;

fn main() -> bogolab::Result<()> {
    let cfg = parse_config_str(SWEEP)?;
    let out = std::env::temp_dir().join("bogolab_sweep");
    let res = run_sweep(&cfg, Some(&out))?;
    println!("{:>3} {:>5} {:>6} {:>14} {:>12} {:>10} status", "N", "beta", "t", "norm_error^2", "<N_exc>", "leakage");
    for r in res.rows.iter().filter(|r| r.t == cfg.time.t_final || r.status != "ok") {
        println!(
            "{:>3} {:>5.2} {:>6.3} {:>14.5e} {:>12.5e} {:>10.2e} {}",
            r.particles, r.beta, r.t, r.norm_error_sq, r.excitation_number, r.leakage, r.status
        );
    }
    for f in &res.fits {
        match &f.fit {
            Some(fit) => println!("beta = {}: norm_error^2 ~ N^{:.3} (rms residual {:.2e})", f.beta, fit.slope, fit.residual),
            None => println!("beta = {}: {}", f.beta, f.error.as_deref().unwrap_or("no fit")),
        }
    }
    println!("summary in {}", out.display());
    Ok(())
}
