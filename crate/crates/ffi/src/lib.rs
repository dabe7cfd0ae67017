//! C interface to `uj-core`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with the
//! matching `uj_*_free`. Every fallible call returns a [`UjStatus`]; on failure
//! [`uj_last_error`] describes what went wrong on the calling thread.
//! Matrices are passed as row-major `double` arrays of real and imaginary
//! parts, where a null imaginary array means zero.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use uj_core::bell::{box_chsh, chsh, smeared_chsh, NoSignalingBox, Settings};
use uj_core::decompose::{compress_sector, neumark_dilate};
use uj_core::joint::{
    jointly_measurable, lambda_opt_search, BlochVector, JointObservable, OracleSettings, PairSource, Route,
    SearchSettings, Verdict,
};
use uj_core::operators::{ComplexMatrix, DensityMatrix, DichotomicObservable, Effect, C64};
use uj_core::unsharp::{smear, smeared_mean, UnsharpParam};
use uj_core::Error;

/// Complex square matrix.
pub struct UjMatrix(ComplexMatrix);

/// Two-outcome observable.
pub struct UjObservable(DichotomicObservable);

/// Four-outcome joint observable.
pub struct UjJoint(JointObservable);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UjStatus {
    Ok = 0,
    NullPointer = 1,
    /// Input fails validation (shape, Hermiticity, spectrum, normalization).
    InvalidInput = 2,
    DimensionMismatch = 3,
    InvalidLambda = 4,
    LambdaTooLarge = 5,
    NonConvergence = 6,
    SelfCheckFailed = 7,
    /// A Rust panic was caught; the library state is unaffected.
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UjVerdict {
    Feasible = 0,
    Infeasible = 1,
    Undetermined = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> UjStatus {
    match e {
        Error::DimensionMismatch { .. } => UjStatus::DimensionMismatch,
        Error::InvalidLambda(_) => UjStatus::InvalidLambda,
        Error::LambdaTooLarge(_) => UjStatus::LambdaTooLarge,
        Error::NonConvergence { .. } => UjStatus::NonConvergence,
        Error::SelfCheck { .. } => UjStatus::SelfCheckFailed,
        _ => UjStatus::InvalidInput,
    }
}

struct Null;

enum Failure {
    Core(Error),
    Null,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<Null> for Failure {
    fn from(_: Null) -> Self {
        Failure::Null
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UjStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UjStatus::Ok,
        Ok(Err(Failure::Null)) => {
            set_error("required pointer argument is null".into());
            UjStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal error".into());
            UjStatus::Internal
        }
    }
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, Null> {
    p.as_ref().ok_or(Null)
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), Null> {
    if out.is_null() {
        return Err(Null);
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Null> {
    if out.is_null() {
        return Err(Null);
    }
    *out = v;
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn uj_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn uj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `re` (and `im` unless null) must point to `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn uj_matrix_new(dim: usize, re: *const f64, im: *const f64, out: *mut *mut UjMatrix) -> UjStatus {
    guard(|| {
        if re.is_null() {
            return Err(Null.into());
        }
        let n = dim.checked_mul(dim).ok_or(Error::InvalidArgument("dimension overflows".into()))?;
        let re = std::slice::from_raw_parts(re, n);
        let entries: Vec<C64> = if im.is_null() {
            re.iter().map(|r| C64::new(*r, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(im, n);
            re.iter().zip(im).map(|(r, i)| C64::new(*r, *i)).collect()
        };
        let m = ComplexMatrix::from_row_major(dim, &entries)?;
        put(out, UjMatrix(m))?;
        Ok(())
    })
}

/// # Safety
/// `m` must come from this library and not be freed already; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn uj_matrix_free(m: *mut UjMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn uj_matrix_dim(m: *const UjMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// Copies the entries out in row-major order.
///
/// # Safety
/// `re` and `im` (each nullable) must have room for `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn uj_matrix_copy(m: *const UjMatrix, re: *mut f64, im: *mut f64) -> UjStatus {
    guard(|| {
        let m = &get(m)?.0;
        let d = m.dim();
        for i in 0..d {
            for j in 0..d {
                let z = m.get(i, j);
                if !re.is_null() {
                    *re.add(i * d + j) = z.re;
                }
                if !im.is_null() {
                    *im.add(i * d + j) = z.im;
                }
            }
        }
        Ok(())
    })
}

/// Observable `{E, I - E}` from an effect.
///
/// # Safety
/// Pointers must be live handles / writable.
#[no_mangle]
pub unsafe extern "C" fn uj_observable_from_effect(yes: *const UjMatrix, out: *mut *mut UjObservable) -> UjStatus {
    guard(|| {
        let e = Effect::new(get(yes)?.0.clone())?;
        put(out, UjObservable(DichotomicObservable::from_yes(e)))?;
        Ok(())
    })
}

/// # Safety
/// `o` must come from this library and not be freed already; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn uj_observable_free(o: *mut UjObservable) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// Copy of the yes-effect.
///
/// # Safety
/// Pointers must be live handles / writable.
#[no_mangle]
pub unsafe extern "C" fn uj_observable_yes(o: *const UjObservable, out: *mut *mut UjMatrix) -> UjStatus {
    guard(|| {
        put(out, UjMatrix(get(o)?.0.yes().matrix().clone()))?;
        Ok(())
    })
}

/// # Safety
/// Pointers must be live handles / writable.
#[no_mangle]
pub unsafe extern "C" fn uj_smear(o: *const UjObservable, lambda: f64, out: *mut *mut UjObservable) -> UjStatus {
    guard(|| {
        let lam = UnsharpParam::new(lambda)?;
        put(out, UjObservable(smear(&get(o)?.0, lam)))?;
        Ok(())
    })
}

/// Mean value of the smeared observable in state `rho`.
///
/// # Safety
/// Pointers must be live handles / writable.
#[no_mangle]
pub unsafe extern "C" fn uj_smeared_mean(
    o: *const UjObservable,
    rho: *const UjMatrix,
    lambda: f64,
    out: *mut f64,
) -> UjStatus {
    guard(|| {
        let rho = DensityMatrix::new(get(rho)?.0.clone())?;
        let m = smeared_mean(&get(o)?.0, UnsharpParam::new(lambda)?, &rho)?;
        write(out, m.direct)?;
        Ok(())
    })
}

/// Joint measurability of the two observables smeared by `lambda`.
///
/// With `use_oracle` zero the constructive route is used; otherwise the
/// numerical oracle with `max_iter` and `tol`. `joint` may be null; when not
/// null it receives the witness, or null if there is none.
///
/// # Safety
/// Pointers must be live handles / writable.
#[no_mangle]
pub unsafe extern "C" fn uj_jointly_measurable(
    o1: *const UjObservable,
    o2: *const UjObservable,
    lambda: f64,
    use_oracle: i32,
    max_iter: usize,
    tol: f64,
    verdict: *mut UjVerdict,
    joint: *mut *mut UjJoint,
) -> UjStatus {
    guard(|| {
        let route = if use_oracle != 0 {
            Route::Oracle(OracleSettings { max_iter, tol })
        } else {
            Route::Auto
        };
        let r = jointly_measurable(&get(o1)?.0, &get(o2)?.0, UnsharpParam::new(lambda)?, route)?;
        write(
            verdict,
            match r.feasible {
                Verdict::Feasible => UjVerdict::Feasible,
                Verdict::Infeasible => UjVerdict::Infeasible,
                Verdict::Undetermined => UjVerdict::Undetermined,
            },
        )?;
        if !joint.is_null() {
            *joint = r.witness.map_or(ptr::null_mut(), |w| Box::into_raw(Box::new(UjJoint(w))));
        }
        Ok(())
    })
}

/// # Safety
/// `j` must come from this library and not be freed already; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn uj_joint_free(j: *mut UjJoint) {
    if !j.is_null() {
        drop(Box::from_raw(j));
    }
}

/// Effect `G_jk` for outcome signs `j, k` in `{+1, -1}`.
///
/// # Safety
/// Pointers must be live handles / writable.
#[no_mangle]
pub unsafe extern "C" fn uj_joint_effect(j: *const UjJoint, sj: i32, sk: i32, out: *mut *mut UjMatrix) -> UjStatus {
    guard(|| {
        let sign = |s: i32| match s {
            1 => Ok(1i8),
            -1 => Ok(-1i8),
            _ => Err(Error::InvalidArgument(format!("outcome sign {s} is not +1 or -1"))),
        };
        let e = get(j)?.0.effect(sign(sj)?, sign(sk)?).matrix().clone();
        put(out, UjMatrix(e))?;
        Ok(())
    })
}

unsafe fn settings(obs: [*const UjObservable; 4]) -> Result<Settings, Failure> {
    Ok(Settings {
        a1: get(obs[0])?.0.clone(),
        a2: get(obs[1])?.0.clone(),
        b1: get(obs[2])?.0.clone(),
        b2: get(obs[3])?.0.clone(),
    })
}

/// `|<A1 B1> + <A1 B2> + <A2 B1> - <A2 B2>|`, with Alice's observables
/// smeared by `lambda` (pass 1 for sharp).
///
/// # Safety
/// Pointers must be live handles / writable.
#[no_mangle]
pub unsafe extern "C" fn uj_chsh(
    rho: *const UjMatrix,
    a1: *const UjObservable,
    a2: *const UjObservable,
    b1: *const UjObservable,
    b2: *const UjObservable,
    lambda: f64,
    out: *mut f64,
) -> UjStatus {
    guard(|| {
        let rho = DensityMatrix::new(get(rho)?.0.clone())?;
        let s = settings([a1, a2, b1, b2])?;
        let r = if lambda == 1.0 {
            chsh(&rho, &s)?
        } else {
            smeared_chsh(&rho, &s, UnsharpParam::new(lambda)?)?
        };
        write(out, r.value)?;
        Ok(())
    })
}

/// Neumark projector on `C^d (x) C^2`, ancilla last.
///
/// # Safety
/// Pointers must be live handles / writable.
#[no_mangle]
pub unsafe extern "C" fn uj_dilate(o: *const UjObservable, out: *mut *mut UjMatrix) -> UjStatus {
    guard(|| {
        put(out, UjMatrix(neumark_dilate(&get(o)?.0).projector.matrix().clone()))?;
        Ok(())
    })
}

/// `<0|G|0>` on the ancilla.
///
/// # Safety
/// Pointers must be live handles / writable.
#[no_mangle]
pub unsafe extern "C" fn uj_compress(g: *const UjMatrix, out: *mut *mut UjMatrix) -> UjStatus {
    guard(|| {
        put(out, UjMatrix(compress_sector(&get(g)?.0, 0)?))?;
        Ok(())
    })
}

/// Threshold unsharpness for the qubit pair along Bloch vectors `m`, `n`.
///
/// # Safety
/// `m` and `n` must point to three doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uj_lambda_opt_qubit(m: *const f64, n: *const f64, tol: f64, out: *mut f64) -> UjStatus {
    guard(|| {
        if m.is_null() || n.is_null() {
            return Err(Null.into());
        }
        let v = |p: *const f64| BlochVector::new([*p, *p.add(1), *p.add(2)]);
        let src = PairSource::Bloch(v(m)?, v(n)?);
        write(out, lambda_opt_search(&src, &SearchSettings::new(tol))?.lambda_opt)?;
        Ok(())
    })
}

/// Minimum threshold over a Fibonacci mesh of qubit pairs.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uj_lambda_opt_worst_case(mesh: usize, seed: u64, tol: f64, out: *mut f64) -> UjStatus {
    guard(|| {
        let src = PairSource::WorstCase { mesh, seed };
        write(out, lambda_opt_search(&src, &SearchSettings::new(tol))?.lambda_opt)?;
        Ok(())
    })
}

/// CHSH of a box given as `p[((x*2 + y)*2 + a)*2 + b]`, settings `x, y` and
/// outcomes `a, b` indexed from 0 with outcome 0 meaning `+1`.
///
/// # Safety
/// `p` must point to 16 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uj_box_chsh(p: *const f64, out: *mut f64) -> UjStatus {
    guard(|| {
        if p.is_null() {
            return Err(Null.into());
        }
        let mut table = [0.0; 16];
        table.copy_from_slice(std::slice::from_raw_parts(p, 16));
        write(out, box_chsh(&NoSignalingBox::new(table)?).value)?;
        Ok(())
    })
}
