//! The C ABI exercised from Rust, plus a compile-and-run of the C example
//! against the static library and generated header.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use biasaudit_ffi::*;

fn last_error() -> String {
    let p = biasaudit_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { biasaudit_string_free(p) };
    s
}

#[test]
fn full_round_trip() {
    unsafe {
        let mut corpus = ptr::null_mut();
        assert_eq!(
            biasaudit_corpus_synthetic(true, 200, 3, &mut corpus),
            BiasauditStatus::Ok
        );
        assert_eq!(biasaudit_corpus_len(corpus), 400);

        let resources = biasaudit_resources_bundled();
        let mut vocab = ptr::null_mut();
        assert_eq!(
            biasaudit_vocabulary_build(
                corpus,
                resources,
                BiasauditMode::Adjectives,
                40,
                &mut vocab
            ),
            BiasauditStatus::Ok
        );
        let n = biasaudit_vocabulary_len(vocab);
        assert!(n >= 40);
        let mut word = ptr::null_mut();
        assert_eq!(
            biasaudit_vocabulary_word(vocab, 0, &mut word),
            BiasauditStatus::Ok
        );
        assert!(!take_string(word).is_empty());

        let mut model = ptr::null_mut();
        assert_eq!(
            biasaudit_model_train(corpus, vocab, resources, 3, &mut model),
            BiasauditStatus::Ok
        );
        let text = CString::new("She was beautiful.").unwrap();
        let mut p = 0.0;
        assert_eq!(
            biasaudit_model_predict_proba(model, resources, text.as_ptr(), &mut p),
            BiasauditStatus::Ok
        );
        assert!(p > 0.5 && p < 1.0);

        let mut saved = ptr::null_mut();
        assert_eq!(
            biasaudit_model_to_text(model, &mut saved),
            BiasauditStatus::Ok
        );
        let saved = CString::new(take_string(saved)).unwrap();
        let mut restored = ptr::null_mut();
        assert_eq!(
            biasaudit_model_from_text(saved.as_ptr(), vocab, &mut restored),
            BiasauditStatus::Ok
        );
        for i in 0..n {
            let (mut a, mut b) = (0.0, 0.0);
            assert_eq!(
                biasaudit_model_weight(model, i, &mut a),
                BiasauditStatus::Ok
            );
            assert_eq!(
                biasaudit_model_weight(restored, i, &mut b),
                BiasauditStatus::Ok
            );
            assert_eq!(a.to_bits(), b.to_bits());
        }

        let config = CString::new(r#"{"runs": 3, "seed": 2}"#).unwrap();
        let mut report = ptr::null_mut();
        assert_eq!(
            biasaudit_audit_json(corpus, resources, config.as_ptr(), &mut report),
            BiasauditStatus::Ok
        );
        let report: serde_json::Value = serde_json::from_str(&take_string(report)).unwrap();
        assert_eq!(report["experiment"]["runs"], 3);
        assert_eq!(report["seed"], 2);

        biasaudit_model_free(restored);
        biasaudit_model_free(model);
        biasaudit_vocabulary_free(vocab);
        biasaudit_resources_free(resources);
        biasaudit_corpus_free(corpus);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut corpus = ptr::null_mut();
        assert_eq!(
            biasaudit_corpus_load(ptr::null(), &mut corpus),
            BiasauditStatus::NullPointer
        );
        assert!(last_error().contains("path"));

        let missing = CString::new("/no/such/corpus.jsonl").unwrap();
        assert_eq!(
            biasaudit_corpus_load(missing.as_ptr(), &mut corpus),
            BiasauditStatus::Io
        );
        assert!(corpus.is_null());

        let bad_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            biasaudit_corpus_load(bad_utf8.as_ptr().cast(), &mut corpus),
            BiasauditStatus::InvalidUtf8
        );

        assert_eq!(
            biasaudit_corpus_synthetic(false, 50, 1, &mut corpus),
            BiasauditStatus::Ok
        );
        let mut vocab = ptr::null_mut();
        assert_eq!(
            biasaudit_vocabulary_build(
                corpus,
                ptr::null(),
                BiasauditMode::Adjectives,
                0,
                &mut vocab
            ),
            BiasauditStatus::Config
        );
        assert_eq!(
            biasaudit_vocabulary_build(
                corpus,
                ptr::null(),
                BiasauditMode::AdjectivesAndNouns,
                10,
                &mut vocab
            ),
            BiasauditStatus::Ok
        );
        let mut word = ptr::null_mut();
        assert_eq!(
            biasaudit_vocabulary_word(vocab, 9999, &mut word),
            BiasauditStatus::OutOfRange
        );
        let bad_config = CString::new(r#"{"runs": "many"}"#).unwrap();
        let mut report = ptr::null_mut();
        assert_eq!(
            biasaudit_audit_json(corpus, ptr::null(), bad_config.as_ptr(), &mut report),
            BiasauditStatus::Config
        );
        let garbage = CString::new("not a model").unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(
            biasaudit_model_from_text(garbage.as_ptr(), vocab, &mut model),
            BiasauditStatus::Data
        );

        assert_eq!(biasaudit_corpus_len(ptr::null()), 0);
        biasaudit_corpus_free(ptr::null_mut());
        biasaudit_string_free(ptr::null_mut());
        biasaudit_vocabulary_free(vocab);
        biasaudit_corpus_free(corpus);
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(biasaudit_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Directory holding the library artifacts for the current profile.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_example_compiles_links_and_runs() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/biasaudit.h");
    let generated = std::fs::read_to_string(&header).unwrap();
    for symbol in [
        "biasaudit_corpus_load",
        "biasaudit_audit_json",
        "BiasauditStatus_Ok",
        "typedef struct BiasauditModel",
    ] {
        assert!(generated.contains(symbol), "{symbol} missing from header");
    }

    let lib = artifact_dir().join("libbiasaudit_ffi.a");
    assert!(
        lib.is_file(),
        "static library not found at {}",
        lib.display()
    );
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("biasaudit_smoke");
    let compile = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("examples/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("a C compiler is available");
    assert!(
        compile.status.success(),
        "cc failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "{stdout}{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stdout.trim_end().ends_with("ok"));
}
