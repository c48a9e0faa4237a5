fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    #[cfg(feature = "cbindgen")]
    {
        let dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
        let config =
            cbindgen::Config::from_file(format!("{dir}/cbindgen.toml")).expect("cbindgen.toml");
        cbindgen::generate_with_config(&dir, config)
            .expect("unable to generate the C header")
            .write_to_file(format!("{dir}/include/cloudq.h"));
    }
}
