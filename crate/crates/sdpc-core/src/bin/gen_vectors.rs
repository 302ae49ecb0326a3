//! Regenerates the test-vector files under `vectors/` from the reference
//! (oracle) implementations only.
//!
//! Usage: `cargo run -p sdpc-core --bin gen_vectors`

use std::fs;
use std::path::PathBuf;

use sdpc_core::oracle;

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("vectors");
    fs::create_dir_all(&dir).expect("create vectors dir");

    let hash = oracle::hash_vector_lines().join("\n") + "\n";
    let chain = oracle::chain_vector_lines().join("\n") + "\n";

    fs::write(dir.join("hash.txt"), &hash).expect("write hash.txt");
    fs::write(dir.join("chain.txt"), &chain).expect("write chain.txt");

    println!(
        "wrote {} hash records and {} chain records to {}",
        oracle::hash_vector_lines().len() - 1,
        oracle::chain_vector_lines().len() - 1,
        dir.display()
    );
}
