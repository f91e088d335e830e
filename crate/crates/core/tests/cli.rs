use std::fs;
use std::process::Command;

fn modsym(args: &[&str]) -> (i32, String, String) {
    modsym_env(args, &[])
}

fn modsym_env(args: &[&str], env: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_modsym"));
    cmd.args(args).env_remove("MODSYM_CACHE_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn gens_lists_cosets_and_generators() {
    let (code, out, _) = modsym(&["gens", "11"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("index 12\n"));
    assert_eq!(out.lines().filter(|l| l.starts_with("coset ")).count(), 12);
    assert!(out.contains("generators "));
}

#[test]
fn cusps_output() {
    let (code, out, _) = modsym(&["cusps", "11"]);
    assert_eq!(code, 0);
    assert_eq!(out, "oo width 1\n0/1 width 11\n");
}

#[test]
fn decompose_and_reduce() {
    let (code, out, _) = modsym(&["decompose", "1", "0", "1", "1"]);
    assert_eq!((code, out.as_str()), (0, "T S T\n"));
    let (code, out, _) = modsym(&["reduce", "11", "1", "40", "11", "441"]);
    assert_eq!(code, 0);
    assert!(out.contains("gamma_s (1 0; 11 1)"));
    assert!(out.contains("parabolics 1"));
}

#[test]
fn symbol_of_zero_series() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.txt");
    fs::write(&path, "1 2 3\n1 0\n2 0\n3 0\n").unwrap();
    let (code, out, _) = modsym(&["symbol", "1", "--coeffs", path.to_str().unwrap(), "1", "1", "0", "1"]);
    assert_eq!((code, out.as_str()), (0, "0 0 0\n"));
}

#[test]
fn scan_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let args = [
            "scan", "11", "--coeffs", "builtin:11", "--size", "100", "--max-len", "20", "--seed", "7", "--out",
            path.to_str().unwrap(),
        ];
        let (code, out, err) = modsym(&args);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("rows 100 failed 0"));
        fs::read(path).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert_eq!(text.lines().next().unwrap(), "norm,log_norm,word_len,dist,reduced_dist,abs_psi");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# manifest\nseed = 3\nsize = 5\nmax-len = 10\n").unwrap();
    let (code, out, err) = modsym(&["scan", "11", "--config", cfg.to_str().unwrap(), "--size", "4"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 5);
    assert!(err.contains("rows 4 failed 0"));
}

#[test]
fn error_exit_codes() {
    let (code, _, err) = modsym(&["symbol", "11", "0", "-1", "1", "0"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: membership"));
    let (code, _, err) = modsym(&["symbol", "11", "2", "0", "0", "1"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"));
    let (code, _, err) = modsym(&["gens", "11", "--bogus"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"));
    let (code, _, err) = modsym(&["scan", "11", "--size", "3"]);
    assert_eq!(code, 1);
    assert!(err.contains("seed"));
    // a lower-left entry beyond what the stored coefficients resolve
    let (code, _, err) = modsym(&["symbol", "11", "1", "0", "11000000000000", "1"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.starts_with("error: precision"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "11 2 2\n1 1\nx 2\n").unwrap();
    let (code, _, err) = modsym(&["symbol", "11", "--coeffs", bad.to_str().unwrap(), "1", "0", "11", "1"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: parse: line 3"));
}

#[test]
fn table_cache_is_written_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    let env = [("MODSYM_CACHE_DIR", dir.path().to_str().unwrap())];
    let (code, first, _) = modsym_env(&["gens", "14"], &env);
    assert_eq!(code, 0);
    let bytes = fs::read(dir.path().join("gamma0_14.bin")).unwrap();
    assert_eq!(&bytes[..4], b"MSGT");
    let (_, second, _) = modsym_env(&["gens", "14"], &env);
    assert_eq!(first, second);
}
