use sdmlab::dataset::{example_dataset, frequencies, parse_dataset, EXAMPLE_PLACEHOLDER, REFERENCE_FREQUENCIES};

const SHIPPED: &str = include_str!("../data/example_languages.csv");

#[test]
fn shipped_file_matches_generator() {
    assert_eq!(
        example_dataset().to_csv(),
        SHIPPED,
        "rerun: cargo run -p sdmlab --example gen_example_data"
    );
}

#[test]
fn shipped_file_shape() {
    let ds = parse_dataset(SHIPPED).unwrap();
    assert_eq!(ds.len(), 166);
    assert_eq!(ds.records().last().unwrap().name, EXAMPLE_PLACEHOLDER);
    let f = frequencies(&ds).unwrap();
    for (j, (&ones, &target)) in f.ones.iter().zip(&REFERENCE_FREQUENCIES).enumerate() {
        assert_eq!(ones, (target * 166.0).round() as usize, "column {j}");
    }
}
