//! Regenerates the bundled Sioux Falls scenario file.

use std::path::Path;

fn main() -> edue_core::Result<()> {
    let doc = edue_core::bundled::build_sioux_falls()?;
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    let out = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/sioux_falls.json");
    edue_core::io::write_atomic(&out, text.as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}
