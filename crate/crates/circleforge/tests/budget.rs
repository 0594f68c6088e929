//! The table-memory budget. Kept in its own binary because it sets a process-wide variable.

use std::process::Command;

use circleforge::conv::Kernel;
use circleforge::counting::count_representations;
use circleforge::sets::{generate_set, SetSpec};
use circleforge::Error;

#[test]
fn budget_caps_tables() {
    let a = generate_set(&SetSpec::Naturals, 2000).unwrap();
    std::env::set_var("CIRCLEFORGE_BUDGET_MB", "1");
    let err = count_representations(&a, 2, 2, 2_000_000, Kernel::Auto).unwrap_err();
    assert!(matches!(err, Error::Budget { .. }), "{err}");
    assert!(count_representations(&a, 2, 2, 1000, Kernel::Auto).is_ok());
    std::env::remove_var("CIRCLEFORGE_BUDGET_MB");
    assert!(count_representations(&a, 2, 2, 2_000_000, Kernel::Auto).is_ok());

    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_circleforge"))
        .args(["count", "--set", "n_max=2000000", "--set", "s=[2]", "--out"])
        .arg(dir.path())
        .env("CIRCLEFORGE_BUDGET_MB", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}
