use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use approx::assert_abs_diff_eq;
use souq_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(souq_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn handle(atoms: &[f64], m: usize, k: usize, weights: Option<&[f64]>) -> (SouqStatus, *mut SouqSecondOrder) {
    let mut out = ptr::null_mut();
    let w = weights.map_or(ptr::null(), |w| w.as_ptr());
    let status = unsafe { souq_second_order_new(atoms.as_ptr(), m, k, w, &mut out) };
    (status, out)
}

#[test]
fn variance_of_two_member_ensemble() {
    let (status, q) = handle(&[0.9, 0.1, 0.5, 0.5], 2, 2, None);
    assert_eq!(status, SouqStatus::Ok);
    assert_eq!(unsafe { souq_second_order_num_classes(q) }, 2);
    assert_eq!(unsafe { souq_second_order_num_atoms(q) }, 2);
    let mut global = SouqTriple::default();
    let mut per_label = [SouqTriple::default(); 2];
    let status = unsafe { souq_measure(q, SouqFamily::Variance, &mut global, per_label.as_mut_ptr(), 2) };
    assert_eq!(status, SouqStatus::Ok);
    // mean 0.7: TU = 0.21, EU = 0.04, per label and both labels
    assert_abs_diff_eq!(per_label[0].total, 0.21, epsilon = 1e-12);
    assert_abs_diff_eq!(per_label[0].epistemic, 0.04, epsilon = 1e-12);
    assert_abs_diff_eq!(global.total, 0.42, epsilon = 1e-12);
    assert_abs_diff_eq!(global.aleatoric, 0.34, epsilon = 1e-12);
    unsafe { souq_second_order_free(q) };
}

#[test]
fn weights_and_global_entropy() {
    let (status, q) = handle(&[1.0, 0.0, 0.0, 1.0], 2, 2, Some(&[0.5, 0.5]));
    assert_eq!(status, SouqStatus::Ok);
    let mut global = SouqTriple::default();
    let status = unsafe { souq_measure(q, SouqFamily::GlobalEntropy, &mut global, ptr::null_mut(), 0) };
    assert_eq!(status, SouqStatus::Ok);
    assert_abs_diff_eq!(global.total, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(global.aleatoric, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(global.epistemic, 1.0, epsilon = 1e-12);
    unsafe { souq_second_order_free(q) };
}

#[test]
fn errors_set_status_and_message() {
    let (status, q) = handle(&[0.6, 0.6], 1, 2, None);
    assert_eq!(status, SouqStatus::InvalidDistribution);
    assert!(q.is_null());
    assert!(!last_error().is_empty());

    let (status, _) = handle(&[0.5, 0.5], 1, 1, None);
    assert_eq!(status, SouqStatus::InvalidArgument);

    let status = unsafe { souq_second_order_new(ptr::null(), 1, 2, ptr::null(), ptr::null_mut()) };
    assert_eq!(status, SouqStatus::NullPointer);

    let (_, q) = handle(&[0.2, 0.3, 0.5], 1, 3, None);
    let mut global = SouqTriple::default();
    let mut small = [SouqTriple::default(); 2];
    let status = unsafe { souq_measure(q, SouqFamily::LabelEntropy, &mut global, small.as_mut_ptr(), 2) };
    assert_eq!(status, SouqStatus::BufferTooSmall);
    let status = unsafe { souq_measure(ptr::null(), SouqFamily::Variance, &mut global, ptr::null_mut(), 0) };
    assert_eq!(status, SouqStatus::NullPointer);
    unsafe { souq_second_order_free(q) };
    unsafe { souq_second_order_free(ptr::null_mut()) };

    let (status, q) = handle(&[0.5, 0.5], 1, 2, None);
    assert_eq!(status, SouqStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { souq_second_order_free(q) };
}

#[test]
fn auroc_through_abi() {
    let id = [0.1, 0.2, 0.3];
    let ood = [0.25, 0.4];
    let mut area = 0.0;
    let status = unsafe { souq_auroc(id.as_ptr(), id.len(), ood.as_ptr(), ood.len(), &mut area) };
    assert_eq!(status, SouqStatus::Ok);
    // pairs won by ood: 0.25 beats 2, 0.4 beats 3 -> 5/6
    assert_abs_diff_eq!(area, 5.0 / 6.0, epsilon = 1e-15);
    let status = unsafe { souq_auroc(id.as_ptr(), id.len(), ood.as_ptr(), 0, &mut area) };
    assert_eq!(status, SouqStatus::InvalidArgument);
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(souq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/souq.h");
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        if Command::new(compiler).arg("--version").output().is_err() {
            eprintln!("{compiler} not available, skipping");
            continue;
        }
        let status = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, header])
            .status()
            .unwrap();
        assert!(status.success(), "{compiler} rejected the header");
    }
}
