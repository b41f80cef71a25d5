use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use dida::cli::{cmd_synth, cmd_train, RunArgs, SynthArgs};
use dida_ffi::*;

/// Synthetic corpus plus a two-epoch model; returns (run config, checkpoint).
fn trained(dir: &Path) -> (CString, CString) {
    let data = dir.join("syn");
    cmd_synth(&SynthArgs {
        n: 20,
        seed: 5,
        out: data.clone(),
        interaction_fraction: None,
    })
    .unwrap();
    let run = dir.join("run");
    cmd_train(&RunArgs {
        config: Some(data.join("config.toml")),
        out: Some(run.clone()),
        epochs: Some(2),
        ..RunArgs::default()
    })
    .unwrap();
    (c(&run.join("config.toml")), c(&run.join("model.ckpt")))
}

fn c(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = dida_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn open_predict_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let (config, ckpt) = trained(dir.path());
    let mut det = ptr::null_mut();
    unsafe {
        assert_eq!(dida_detector_open(config.as_ptr(), ckpt.as_ptr(), &mut det), DidaStatus::Ok);
        assert!(!det.is_null());

        let json = CString::new(r#"{"id":"q","news":"w001 w002","label":null,"comments":[{"text":"happy w003","ts":1},{"text":"sad","ts":2}]}"#).unwrap();
        let mut p = -1.0;
        assert_eq!(dida_predict_json(det, json.as_ptr(), &mut p), DidaStatus::Ok);
        assert!(p > 0.0 && p < 1.0);

        let d = dida_emotion_dim(det);
        assert!(d > 0);
        let text = CString::new("happy happy sad !").unwrap();
        let mut buf = vec![f64::NAN; d];
        let mut n = 0usize;
        assert_eq!(dida_emotion_vector(det, text.as_ptr(), buf.as_mut_ptr(), d, &mut n), DidaStatus::Ok);
        assert_eq!(n, d);
        assert!(buf.iter().all(|x| x.is_finite()));

        let mut short = vec![0.0; 1];
        n = 0;
        assert_eq!(
            dida_emotion_vector(det, text.as_ptr(), short.as_mut_ptr(), 1, &mut n),
            DidaStatus::BufferTooSmall
        );
        assert_eq!(n, d);

        let bad = CString::new("{not json").unwrap();
        assert_eq!(dida_predict_json(det, bad.as_ptr(), &mut p), DidaStatus::Invalid);
        assert!(last_error().contains("record json"));

        dida_detector_free(det);
    }
}

#[test]
fn errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = c(&dir.path().join("none.toml"));
    let mut det = ptr::null_mut();
    unsafe {
        assert_eq!(dida_detector_open(missing.as_ptr(), missing.as_ptr(), &mut det), DidaStatus::Io);
        assert!(det.is_null());
        assert!(last_error().contains("none.toml"));
        assert_eq!(dida_detector_open(ptr::null(), missing.as_ptr(), &mut det), DidaStatus::NullArgument);
        let mut p = 0.0;
        assert_eq!(dida_predict_json(ptr::null(), missing.as_ptr(), &mut p), DidaStatus::NullArgument);
        assert_eq!(dida_emotion_dim(ptr::null()), 0);
        dida_detector_free(ptr::null_mut());
    }
}

#[test]
fn checkpoint_from_another_config_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let (config, ckpt) = trained(dir.path());
    let other = dir.path().join("other.toml");
    let text = std::fs::read_to_string(config.to_str().unwrap()).unwrap();
    let changed = text.replace("hidden_dim = 16", "hidden_dim = 8");
    assert_ne!(text, changed);
    std::fs::write(&other, changed).unwrap();
    let mut det = ptr::null_mut();
    unsafe {
        assert_eq!(dida_detector_open(c(&other).as_ptr(), ckpt.as_ptr(), &mut det), DidaStatus::Checkpoint);
    }
    assert!(det.is_null());
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(dida_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dida.h");
    assert!(header.exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ DidaDetector *d = 0; double p; \
             return dida_predict_json(d, \"{{}}\", &p) == DIDA_STATUS_OK; }}\n",
            header.display()
        ),
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = match std::process::Command::new(&cc).args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("skipping: no C compiler ({cc}: {e})");
            return;
        }
    };
    assert!(status.success());
}
