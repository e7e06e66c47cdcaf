//! A coarse phase diagram at reduced size. Writes the grid CSV to
//! `$COSPARSE_OUT_DIR` (default: the temp dir).

use cosparse::harness::{phase_diagram, ExperimentConfig, OUT_DIR_ENV};

fn main() -> cosparse::error::Result<()> {
    let mut cfg = ExperimentConfig::desk_scale(vec![0.3, 0.6, 0.9], vec![0.2, 0.5, 0.8]);
    cfg.n = 60;
    cfg.p = 72;
    cfg.iters = 1000;
    cfg.trials = 4;
    let grid = phase_diagram(&cfg)?;

    print!("alpha\\beta");
    for b in &cfg.beta_grid {
        print!("{b:>10}");
    }
    println!();
    for a in &cfg.alpha_grid {
        print!("{a:>10}");
        for b in &cfg.beta_grid {
            print!("{:>10.2e}", grid.cell(*a, *b).unwrap().mean_err);
        }
        println!();
    }

    let dir = std::env::var_os(OUT_DIR_ENV).map(Into::into).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;
    let path = std::path::Path::new(&dir).join("phase_diagram_example.csv");
    std::fs::write(&path, grid.to_csv_string())?;
    println!("wrote {}", path.display());
    Ok(())
}
