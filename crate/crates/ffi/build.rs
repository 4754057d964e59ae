use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR");
    let out_dir = PathBuf::from(env::var("OUT_DIR").expect("OUT_DIR"));

    let bindings = cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_language(cbindgen::Language::C)
        .with_include_guard("NSAC_LAB_H")
        .with_cpp_compat(true)
        .with_documentation(true)
        .generate()
        .expect("cbindgen header generation failed");

    bindings.write_to_file(out_dir.join("nsac_lab.h"));
    // Keep a copy in the source tree for consumers that vendor the header.
    let include_dir = PathBuf::from(&crate_dir).join("include");
    if std::fs::create_dir_all(&include_dir).is_ok() {
        bindings.write_to_file(include_dir.join("nsac_lab.h"));
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
}
