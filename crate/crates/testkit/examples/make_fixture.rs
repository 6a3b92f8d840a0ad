//! Writes the fixture databases into a directory.
//!
//! ```text
//! cargo run -p otforge-testkit --example make_fixture -- ./data
//! ```

use std::path::PathBuf;

use otforge_testkit::Fixture;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&dir).expect("create output directory");
    for f in Fixture::ALL {
        let path = f.write_to(&dir).expect("write fixture");
        println!("{}", path.display());
    }
}
