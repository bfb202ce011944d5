//! Regenerates `data/example_languages.csv`.
//!
//! cargo run -p sdmlab --example gen_example_data

fn main() -> std::io::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/example_languages.csv");
    std::fs::write(path, sdmlab::dataset::example_dataset().to_csv())?;
    println!("wrote {path}");
    Ok(())
}
