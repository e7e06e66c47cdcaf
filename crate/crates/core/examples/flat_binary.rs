//! Save and reload a frame and a signal in the flat binary format
//! (little-endian u64 rank, u64 dims, f64 values).

use cosparse::flatbin;
use cosparse::frames::{cosparse_signal, random_tight_frame};

fn main() -> cosparse::error::Result<()> {
    let dir = std::env::temp_dir().join("cosparse_flat_binary_example");
    std::fs::create_dir_all(&dir)?;
    let frame = random_tight_frame(12, 16, 3)?;
    let signal = cosparse_signal(&frame, 5, 4)?;

    let (fp, sp) = (dir.join("frame.bin"), dir.join("signal.bin"));
    flatbin::save_frame(&fp, &frame)?;
    flatbin::save_signal(&sp, &signal)?;
    println!("wrote {} ({} bytes)", fp.display(), std::fs::metadata(&fp)?.len());

    let frame2 = flatbin::load_frame(&fp)?;
    let signal2 = flatbin::load_signal(&sp, &frame2)?;
    assert_eq!(frame2.dense_analysis().data(), frame.dense_analysis().data());
    assert_eq!(signal2, signal);
    println!("round trip exact; cosupport {:?}", signal2.cosupport);
    Ok(())
}
