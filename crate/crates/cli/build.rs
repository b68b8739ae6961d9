use std::process::Command;

/// Embed `git describe` so output headers can record the exact source state.
fn main() {
    let describe = Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .current_dir(std::env::var("CARGO_MANIFEST_DIR").expect("cargo sets manifest dir"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string());
    println!("cargo:rustc-env=GIT_DESCRIBE={describe}");
}
