#![no_main]

use libfuzzer_sys::fuzz_target;
use qspin_core::clifford::GammaSet;
use qspin_core::expr::Expr;
use qspin_core::matrix::CMatrix;
use qspin_core::qintegral::Prefactor;
use qspin_core::qsolve::EquationKind;

fuzz_target!(|data: &[u8]| {
    let _ = serde_json::from_slice::<Expr>(data);
    let _ = serde_json::from_slice::<CMatrix>(data);
    let _ = serde_json::from_slice::<EquationKind>(data);
    if let Ok(set) = serde_json::from_slice::<GammaSet>(data) {
        assert!(set.worst_anticommutator(1e-12).is_none());
    }
    if let Ok(p) = serde_json::from_slice::<Prefactor>(data) {
        let _ = p.lower();
        let _ = p.upper();
    }
});
