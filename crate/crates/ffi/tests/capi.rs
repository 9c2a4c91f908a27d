//! Exercises the C ABI the way a foreign caller would: raw pointers,
//! status codes, and the last-error channel.

use std::ffi::{c_char, CString};
use std::ptr;

use nsvm_ffi::*;

fn xor_data() -> (Vec<f64>, Vec<u32>) {
    let x = vec![1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0];
    let labels = vec![1, 1, 2, 2];
    (x, labels)
}

fn make_dataset() -> *mut NsvmDataset {
    let (x, labels) = xor_data();
    let mut ds: *mut NsvmDataset = ptr::null_mut();
    let status = unsafe { nsvm_dataset_create(x.as_ptr(), 4, 2, labels.as_ptr(), &mut ds) };
    assert_eq!(status, NsvmStatus::Ok);
    assert!(!ds.is_null());
    ds
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { nsvm_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn dataset_accessors() {
    let ds = make_dataset();
    unsafe {
        assert_eq!(nsvm_dataset_rows(ds), 4);
        assert_eq!(nsvm_dataset_cols(ds), 2);
        assert_eq!(nsvm_dataset_classes(ds), 2);
        nsvm_dataset_free(ds);
    }
}

#[test]
fn train_predict_save_load_round_trip() {
    let ds = make_dataset();
    let opts = nsvm_train_options_default();
    let mut model: *mut NsvmModel = ptr::null_mut();
    let status = unsafe { nsvm_train_kernel(ds, &opts, NSVM_KERNEL_RBF, 1.0, &mut model) };
    assert_eq!(status, NsvmStatus::Ok);

    let (x, labels) = xor_data();
    let mut pred = vec![0u32; 4];
    let status = unsafe { nsvm_model_predict(model, x.as_ptr(), 4, 2, pred.as_mut_ptr()) };
    assert_eq!(status, NsvmStatus::Ok);
    assert_eq!(pred, labels);

    // label token lookup
    let mut buf = vec![0 as c_char; 16];
    let n = unsafe { nsvm_model_label_name(model, 1, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(n, 1);
    assert_eq!(buf[0] as u8 as char, '1');
    assert_eq!(
        unsafe { nsvm_model_label_name(model, 9, buf.as_mut_ptr(), buf.len()) },
        0
    );

    // save, reload, predictions identical
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.nsvm").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { nsvm_model_save(model, path.as_ptr()) },
        NsvmStatus::Ok
    );
    let mut reloaded: *mut NsvmModel = ptr::null_mut();
    assert_eq!(
        unsafe { nsvm_model_load(path.as_ptr(), &mut reloaded) },
        NsvmStatus::Ok
    );
    let mut pred2 = vec![0u32; 4];
    assert_eq!(
        unsafe { nsvm_model_predict(reloaded, x.as_ptr(), 4, 2, pred2.as_mut_ptr()) },
        NsvmStatus::Ok
    );
    assert_eq!(pred, pred2);

    unsafe {
        assert_eq!(nsvm_model_classes(model), 2);
        assert_eq!(nsvm_model_features(model), 2);
        nsvm_model_free(model);
        nsvm_model_free(reloaded);
        nsvm_dataset_free(ds);
    }
}

#[test]
fn all_baseline_trainers_work() {
    let ds = make_dataset();
    unsafe {
        let mut m: *mut NsvmModel = ptr::null_mut();
        assert_eq!(nsvm_train_gepsvm(ds, 0.01, &mut m), NsvmStatus::Ok);
        nsvm_model_free(m);
        let mut m: *mut NsvmModel = ptr::null_mut();
        assert_eq!(nsvm_train_lstsvm(ds, 1.0, 1.0, &mut m), NsvmStatus::Ok);
        nsvm_model_free(m);
        let mut m: *mut NsvmModel = ptr::null_mut();
        assert_eq!(nsvm_train_pcc(ds, 1.0, &mut m), NsvmStatus::Ok);
        nsvm_model_free(m);
        let mut m: *mut NsvmModel = ptr::null_mut();
        let opts = nsvm_train_options_default();
        assert_eq!(nsvm_train_linear(ds, &opts, &mut m), NsvmStatus::Ok);
        nsvm_model_free(m);
        nsvm_dataset_free(ds);
    }
}

#[test]
fn error_paths_set_codes_and_messages() {
    // null pointers
    let status = unsafe { nsvm_dataset_create(ptr::null(), 0, 0, ptr::null(), ptr::null_mut()) };
    assert_eq!(status, NsvmStatus::NullPointer);
    assert!(!last_error().is_empty());

    // single-class data
    let x = [1.0, 2.0];
    let labels = [5u32, 5];
    let mut ds: *mut NsvmDataset = ptr::null_mut();
    let status = unsafe { nsvm_dataset_create(x.as_ptr(), 2, 1, labels.as_ptr(), &mut ds) };
    assert_eq!(status, NsvmStatus::InvalidArgument);
    assert!(last_error().contains("classes"), "{}", last_error());

    // bad config
    let good = make_dataset();
    let mut opts = nsvm_train_options_default();
    opts.c1 = -1.0;
    let mut m: *mut NsvmModel = ptr::null_mut();
    let status = unsafe { nsvm_train_linear(good, &opts, &mut m) };
    assert_eq!(status, NsvmStatus::InvalidArgument);

    // dimension mismatch at prediction
    let opts = nsvm_train_options_default();
    let status = unsafe { nsvm_train_linear(good, &opts, &mut m) };
    assert_eq!(status, NsvmStatus::Ok);
    let wide = [0.0; 3];
    let mut out = vec![0u32; 1];
    let status = unsafe { nsvm_model_predict(m, wide.as_ptr(), 1, 3, out.as_mut_ptr()) };
    assert_eq!(status, NsvmStatus::InvalidArgument);

    // missing file
    let path = CString::new("/nonexistent/nsvm/file.csv").unwrap();
    let mut ds2: *mut NsvmDataset = ptr::null_mut();
    let status = unsafe { nsvm_dataset_load_csv(path.as_ptr(), false, &mut ds2) };
    assert_eq!(status, NsvmStatus::IoError);

    unsafe {
        nsvm_model_free(m);
        nsvm_dataset_free(good);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = nsvm_version();
    assert!(!v.is_null());
    let s = unsafe { std::ffi::CStr::from_ptr(v) }.to_str().unwrap();
    assert!(!s.is_empty());
}

#[test]
fn csv_loader_through_ffi() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "1,2,a\n3,4,b\n").unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut ds: *mut NsvmDataset = ptr::null_mut();
    assert_eq!(
        unsafe { nsvm_dataset_load_csv(cpath.as_ptr(), false, &mut ds) },
        NsvmStatus::Ok
    );
    unsafe {
        assert_eq!(nsvm_dataset_rows(ds), 2);
        nsvm_dataset_free(ds);
    }
}

#[test]
fn header_matches_exported_surface() {
    // every exported function must be declared in the C header and the
    // header must not declare functions that do not exist
    let source = include_str!("../src/lib.rs");
    let header = include_str!("../include/nsvm.h");
    let mut exported = Vec::new();
    for window in source.split("#[no_mangle]").skip(1) {
        let name_start = window.find("fn nsvm_").expect("exported fn name") + 3;
        let rest = &window[name_start..];
        let end = rest.find('(').unwrap();
        exported.push(&rest[..end]);
    }
    assert!(!exported.is_empty());
    for name in &exported {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from include/nsvm.h"
        );
    }
    for line in header.lines() {
        if let Some(pos) = line.find("nsvm_") {
            let rest = &line[pos..];
            if let Some(paren) = rest.find('(') {
                let name = &rest[..paren];
                if name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    assert!(
                        exported.contains(&name),
                        "header declares {name} which is not exported"
                    );
                }
            }
        }
    }
}
