//! Shared helpers for the integration tests: an independent naive memory
//! and CLI plumbing.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Textbook memory over `Vec<bool>`: linear scans, no indexing, no
/// packing. Kept deliberately independent of the library internals.
pub struct NaiveMemory {
    pub addresses: Vec<Vec<bool>>,
    pub counters: Vec<Vec<i64>>,
    pub radius: usize,
    pub bound: Option<i64>,
    pub ties_to_one: bool,
}

fn distance(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

impl NaiveMemory {
    pub fn new(addresses: Vec<Vec<bool>>, radius: usize, bound: Option<i64>, ties_to_one: bool) -> Self {
        let n = addresses.first().map_or(0, Vec::len);
        Self {
            counters: vec![vec![0; n]; addresses.len()],
            addresses,
            radius,
            bound,
            ties_to_one,
        }
    }

    pub fn write(&mut self, d: &[bool]) {
        for (addr, ctr) in self.addresses.iter().zip(&mut self.counters) {
            if distance(addr, d) <= self.radius {
                for (c, &bit) in ctr.iter_mut().zip(d) {
                    *c += if bit { 1 } else { -1 };
                    if let Some(b) = self.bound {
                        *c = (*c).clamp(-b, b);
                    }
                }
            }
        }
    }

    /// `None` when the access sphere is empty.
    pub fn read(&self, y: &[bool]) -> Option<Vec<bool>> {
        let mut sums = vec![0i64; y.len()];
        let mut any = false;
        for (addr, ctr) in self.addresses.iter().zip(&self.counters) {
            if distance(addr, y) <= self.radius {
                any = true;
                for (s, c) in sums.iter_mut().zip(ctr) {
                    *s += c;
                }
            }
        }
        any.then(|| {
            sums.into_iter()
                .map(|s| if s == 0 { self.ties_to_one } else { s > 0 })
                .collect()
        })
    }
}

pub fn bools(v: &sdmlab::BitVector) -> Vec<bool> {
    v.iter().collect()
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sdmlab")
}

/// Runs the CLI with `SDMLAB_SEED` cleared.
pub fn sdmlab(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("SDMLAB_SEED")
        .output()
        .expect("spawn sdmlab")
}

pub fn example_data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/example_languages.csv")
}

pub fn header() -> String {
    let ids: Vec<&str> = sdmlab::dataset::PARAMETERS.iter().map(|p| p.0).collect();
    format!("language,{}", ids.join(","))
}

/// A standard-catalog CSV from rows of (name, 21 bits).
pub fn csv_rows(rows: &[(&str, [u8; 21])]) -> String {
    let mut s = header();
    s.push('\n');
    for (name, bits) in rows {
        let vals: Vec<String> = bits.iter().map(u8::to_string).collect();
        s.push_str(&format!("{name},{}\n", vals.join(",")));
    }
    s
}
