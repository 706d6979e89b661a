//! Shared fixtures for the harness integration tests.

use std::fs;
use std::path::{Path, PathBuf};

/// A configuration small enough to pretrain in well under a second.
pub fn tiny_config_text(out: &Path, extra: &[(&str, &str)]) -> String {
    let mut pairs: Vec<(String, String)> = vec![
        ("reward_method".into(), "becl".into()),
        ("layout".into(), "bottleneck".into()),
        ("out".into(), out.display().to_string()),
        ("seeds".into(), "5".into()),
        ("discount".into(), "0.95".into()),
        ("n_step".into(), "3".into()),
        ("batch_size".into(), "8".into()),
        ("seed_frames".into(), "60".into()),
        ("update_frequency".into(), "5".into()),
        ("pretrain_frames".into(), "120".into()),
        ("finetune_frames".into(), "60".into()),
        ("learning_rate".into(), "0.001".into()),
        ("skill_dim".into(), "2".into()),
        ("kappa".into(), "0.5".into()),
        ("hidden_dim".into(), "8".into()),
        ("feature_dim".into(), "4".into()),
        ("disc_hidden_dim".into(), "8".into()),
        ("buffer_capacity".into(), "1000".into()),
        ("episode_length".into(), "10".into()),
        ("exploration_stddev".into(), "0.2".into()),
        ("stddev_clip".into(), "0.3".into()),
        ("ema_rate".into(), "0.05".into()),
        ("knn_k".into(), "4".into()),
        ("pair_mode".into(), "cross_trajectory".into()),
        ("min_pair_gap".into(), "3".into()),
    ];
    for (key, value) in extra {
        if let Some(slot) = pairs.iter_mut().find(|(k, _)| k == key) {
            slot.1 = (*value).into();
        } else {
            pairs.push(((*key).into(), (*value).into()));
        }
    }
    let mut text = String::new();
    for (key, value) in pairs {
        text.push_str(&format!("{key} = {value}\n"));
    }
    text
}

/// Writes the tiny config into `dir/config-under-test.txt`, outputs under
/// `dir/run`.
pub fn write_tiny_config(dir: &Path, extra: &[(&str, &str)]) -> PathBuf {
    let path = dir.join("config-under-test.txt");
    fs::write(&path, tiny_config_text(&dir.join("run"), extra)).unwrap();
    path
}
