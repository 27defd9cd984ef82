//! Compile and run the C example against the committed header and the
//! freshly built static library. This is the guard keeping
//! `include/tideprob.h` in sync with the exported symbols. Skips (with a
//! note) when no C compiler is available.

use std::path::PathBuf;
use std::process::Command;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps/<name>; the libraries live two up
    let exe = std::env::current_exe().expect("test binary path");
    exe.parent()
        .and_then(|p| p.parent())
        .expect("target profile dir")
        .to_path_buf()
}

#[test]
fn c_demo_compiles_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".to_string());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler ({cc}) on PATH");
        return;
    }

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = target_dir();
    let staticlib = target.join("libtideprob_ffi.a");
    if !staticlib.is_file() {
        // `cargo test` links the rlib only; produce the C artifacts.
        let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".to_string());
        let mut build = Command::new(cargo);
        build.args(["build", "-p", "tideprob-ffi"]);
        if target.ends_with("release") {
            build.arg("--release");
        }
        let out = build.output().expect("cargo runs");
        assert!(
            out.status.success(),
            "building the static library failed:\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert!(
        staticlib.is_file(),
        "static library missing at {}",
        staticlib.display()
    );

    let out_dir = tempfile::tempdir().unwrap();
    let demo = out_dir.path().join("demo");
    let compile = Command::new(&cc)
        .arg(manifest.join("examples/c/demo.c"))
        .arg(format!("-I{}", manifest.join("include").display()))
        .arg(format!("-L{}", target.display()))
        .arg("-ltideprob_ffi")
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&demo)
        .output()
        .expect("compiler runs");
    assert!(
        compile.status.success(),
        "C compilation failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&demo).output().expect("demo runs");
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "demo failed:\nstdout: {stdout}\nstderr: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stdout.contains("demo ok"), "unexpected output: {stdout}");
}
