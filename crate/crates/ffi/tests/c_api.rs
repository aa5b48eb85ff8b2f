use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mixmnl_ffi::*;

fn complete_pairs(n: usize) -> Vec<usize> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            v.extend([i, j]);
        }
    }
    v
}

#[test]
fn end_to_end_learning() {
    unsafe {
        let pairs = complete_pairs(6);
        let mut g = ptr::null_mut();
        assert_eq!(
            mnl_graph_from_edges(6, pairs.as_ptr(), 15, &mut g),
            MnlStatus::Ok
        );
        assert_eq!(mnl_graph_num_edges(g), 15);
        assert_eq!(mnl_graph_num_items(g), 6);

        let w = [
            1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 8.0, 1.0, 32.0, 2.0, 16.0, 4.0,
        ];
        let q = [0.35, 0.65];
        let mut m = ptr::null_mut();
        assert_eq!(
            mnl_model_new(6, 2, w.as_ptr(), q.as_ptr(), &mut m),
            MnlStatus::Ok
        );

        let mut b = ptr::null_mut();
        assert_eq!(mnl_batch_sample(m, g, 5, 200_000, 7, &mut b), MnlStatus::Ok);
        assert_eq!(mnl_batch_len(b), 200_000);

        let mut e = ptr::null_mut();
        assert_eq!(mnl_learn(b, g, 2, 0, 0, 1, &mut e), MnlStatus::Ok);
        assert_eq!(mnl_estimate_num_components(e), 2);
        let mut qh = [0.0; 2];
        assert_eq!(mnl_estimate_q(e, qh.as_mut_ptr(), 2), MnlStatus::Ok);
        qh.sort_by(f64::total_cmp);
        assert!(
            (qh[0] - 0.35).abs() < 0.05 && (qh[1] - 0.65).abs() < 0.05,
            "{qh:?}"
        );
        let mut wh = [0.0; 6];
        assert_eq!(
            mnl_estimate_weights(e, 1, wh.as_mut_ptr(), 6),
            MnlStatus::Ok
        );
        assert!((wh.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let mut json = ptr::null_mut();
        assert_eq!(mnl_estimate_to_json(e, &mut json), MnlStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.starts_with("{\"q_hat\":"));
        mnl_string_free(json);

        mnl_estimate_free(e);
        mnl_batch_free(b);
        mnl_model_free(m);
        mnl_graph_free(g);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(
            mnl_graph_erdos_renyi(10, 4.0, 3, ptr::null_mut()),
            MnlStatus::NullPointer
        );
        assert!(last_error_message().unwrap().contains("null"));

        let bad = [0usize, 0];
        assert_eq!(
            mnl_graph_from_edges(3, bad.as_ptr(), 1, &mut g),
            MnlStatus::Validation
        );
        assert!(g.is_null());

        assert_eq!(mnl_graph_erdos_renyi(12, 4.0, 3, &mut g), MnlStatus::Ok);
        let mut gap = 0.0;
        assert_eq!(mnl_graph_spectral_gap(g, &mut gap), MnlStatus::Ok);
        assert!(gap > 0.0 && gap <= 1.0);

        let mut sparse = ptr::null_mut();
        let s = mnl_graph_erdos_renyi(40, 0.3, 3, &mut sparse);
        assert_eq!(s, MnlStatus::Numerical, "{:?}", last_error_message());
        assert!(sparse.is_null());

        let w: Vec<f64> = (0..12).map(|i| 1.0 + i as f64).collect();
        let mut m = ptr::null_mut();
        assert_eq!(
            mnl_model_new(12, 1, w.as_ptr(), [1.0].as_ptr(), &mut m),
            MnlStatus::Ok
        );
        let mut b = ptr::null_mut();
        assert_eq!(mnl_batch_sample(m, g, 4, 3000, 1, &mut b), MnlStatus::Ok);
        let mut e = ptr::null_mut();
        assert_eq!(mnl_learn(b, g, 0, 0, 0, 1, &mut e), MnlStatus::Validation);
        assert!(e.is_null());

        let mut short = [0.0; 2];
        let mut est = ptr::null_mut();
        assert_eq!(mnl_learn(b, g, 1, 0, 0, 1, &mut est), MnlStatus::Ok);
        assert_eq!(
            mnl_estimate_weights(est, 0, short.as_mut_ptr(), 2),
            MnlStatus::Validation
        );
        assert_eq!(
            mnl_estimate_weights(est, 5, short.as_mut_ptr(), 2),
            MnlStatus::Validation
        );

        mnl_estimate_free(est);
        mnl_batch_free(b);
        mnl_model_free(m);
        mnl_graph_free(g);
        mnl_graph_free(ptr::null_mut());
    }
}

#[test]
fn rank_centrality_recovers_single_model() {
    unsafe {
        let pairs = complete_pairs(4);
        let mut g = ptr::null_mut();
        assert_eq!(
            mnl_graph_from_edges(4, pairs.as_ptr(), 6, &mut g),
            MnlStatus::Ok
        );
        let w = [1.0, 2.0, 3.0, 4.0];
        let p: Vec<f64> = pairs
            .chunks(2)
            .map(|c| (w[c[1]] - w[c[0]]) / (w[c[1]] + w[c[0]]))
            .collect();
        let mut pi = [0.0; 4];
        assert_eq!(
            mnl_rank_centrality(g, p.as_ptr(), 6, 0, pi.as_mut_ptr(), 4),
            MnlStatus::Ok
        );
        for (a, b) in pi.iter().zip(w) {
            assert!((a - b / 10.0).abs() < 1e-8);
        }
        mnl_graph_free(g);
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(mnl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let mut p = std::env::current_exe().unwrap();
    p.pop();
    p.pop();
    p
}

#[test]
fn c_example_compiles_and_runs() {
    let lib = target_dir().join("libmixmnl_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!(
            "skipping: no C compiler or static library at {}",
            lib.display()
        );
        return;
    }
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = tempfile_path("mixmnl_c_example");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-O1"])
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("examples/learn.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("q_hat ="));
    let _ = std::fs::remove_file(exe);
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}_{}", std::process::id()))
}
