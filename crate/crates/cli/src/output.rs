use std::fmt::Display;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

pub fn kv(key: &str, value: impl Display) {
    println!("{key}={value}");
}

pub fn kv_list<T: Display>(key: &str, values: &[T]) {
    let joined: Vec<String> = values.iter().map(ToString::to_string).collect();
    println!("{key}={}", joined.join(","));
}

pub fn kv_opt(key: &str, value: Option<f64>) {
    match value {
        Some(v) => kv(key, v),
        None => kv(key, "none"),
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
