use cosparse::flatbin;
use cosparse::frames::{cosparse_signal, random_tight_frame};
use cosparse::harness::experiments::read_grid_csv;
use cosparse::harness::{phase_diagram, ExperimentConfig};
use cosparse::linops::DenseMatrix;
use cosparse::solvers::{read_trace_csv, sfista, CsvOptions, SolverConfig};
use proptest::prelude::*;

#[test]
fn trace_csv_round_trip() {
    let frame = random_tight_frame(20, 24, 1).unwrap();
    let (problem, truth) = cosparse::harness::make_problem(20, 15, &frame, 10, 0.01, 0.01, 2).unwrap();
    let trace = sfista(&problem, &SolverConfig::smoothing(0.5, 50), Some(&truth)).unwrap();
    let opts = CsvOptions {
        timing: false,
        stage_column: true,
    };
    let rows = read_trace_csv(trace.to_csv_string(opts).as_bytes()).unwrap();
    assert_eq!(rows.len(), trace.rows.len());
    for (a, b) in rows.iter().zip(&trace.rows) {
        assert_eq!(a.iter, b.iter);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.true_objective, b.true_objective);
        assert_eq!(a.rel_error, b.rel_error);
        assert_eq!(a.seconds, 0.0);
    }
}

#[test]
fn grid_csv_round_trip() {
    let mut cfg = ExperimentConfig::desk_scale(vec![0.6], vec![0.2, 0.4]);
    cfg.n = 20;
    cfg.p = 24;
    cfg.iters = 50;
    cfg.trials = 3;
    let grid = phase_diagram(&cfg).unwrap();
    let rows = read_grid_csv(grid.to_csv_string().as_bytes()).unwrap();
    for (row, cell) in rows.iter().zip(&grid.cells) {
        assert_eq!((row.0, row.1, row.2, row.3, row.4), (cell.alpha, cell.beta, cell.mean_err, cell.std_err, cell.trials));
    }
}

#[test]
fn frame_and_signal_files() {
    let dir = tempfile::tempdir().unwrap();
    let frame = random_tight_frame(10, 14, 3).unwrap();
    let sig = cosparse_signal(&frame, 6, 4).unwrap();
    flatbin::save_frame(&dir.path().join("f.bin"), &frame).unwrap();
    flatbin::save_signal(&dir.path().join("s.bin"), &sig).unwrap();
    let f2 = flatbin::load_frame(&dir.path().join("f.bin")).unwrap();
    assert!(f2.is_tight());
    assert_eq!(flatbin::load_signal(&dir.path().join("s.bin"), &f2).unwrap(), sig);
}

proptest! {
    #[test]
    fn matrices_survive_the_flat_format(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        let m = DenseMatrix::gaussian(rows, cols, seed);
        let mut buf = Vec::new();
        flatbin::write_matrix(&mut buf, &m).unwrap();
        prop_assert_eq!(buf.len(), 8 * (3 + rows * cols));
        let back = flatbin::read_matrix(buf.as_slice()).unwrap();
        prop_assert_eq!(back.data(), m.data());
        prop_assert!(flatbin::read_matrix(&buf[..buf.len() - 1]).is_err());
    }
}
