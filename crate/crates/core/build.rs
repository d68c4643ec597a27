use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

fn main() {
    let dir = Path::new("datasets");
    let manifest = dir.join("manifest.csv");
    println!("cargo:rerun-if-changed={}", manifest.display());
    let text = fs::read_to_string(&manifest).expect("dataset manifest missing");
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.splitn(5, ',').collect();
        assert!(fields.len() >= 3, "malformed manifest line: {line}");
        let path = dir.join(fields[1]);
        println!("cargo:rerun-if-changed={}", path.display());
        let bytes = fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(digest, fields[2], "checksum mismatch for bundled dataset {}", fields[0]);
    }
}
