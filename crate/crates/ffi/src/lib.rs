//! C ABI over `topocon`.
//!
//! Objects are opaque heap handles created by `tc_*_new`/`tc_network_*` and
//! released with the matching `tc_*_free`. Every call returns a [`TcStatus`];
//! on failure `tc_last_error_message` describes the error for the calling
//! thread. Indices are 0-based.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use topocon::consensus;
use topocon::walks;
use topocon::{Error, GraphFamily, LinearSystem, Network};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer,
    DimensionMismatch,
    Singular,
    IndexOutOfRange,
    InvalidParams,
    GenerationFailed,
    Disconnected,
    TooLarge,
    DegenerateInitial,
    BoundViolated,
    EmptyInput,
    Parse,
    Io,
    BufferTooSmall,
    Panic,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcFamily {
    Er = 0,
    Ws,
    Sf,
    Rr,
}

/// Opaque linear system handle.
pub struct TcSystem(LinearSystem);

/// Opaque network handle.
pub struct TcNetwork(Network);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> TcStatus {
    match err {
        Error::DimensionMismatch(_) => TcStatus::DimensionMismatch,
        Error::SingularMatrix { .. } => TcStatus::Singular,
        Error::IndexOutOfRange { .. } => TcStatus::IndexOutOfRange,
        Error::InvalidParams(_) => TcStatus::InvalidParams,
        Error::GenerationFailed(_) => TcStatus::GenerationFailed,
        Error::Disconnected => TcStatus::Disconnected,
        Error::TooLarge(_) => TcStatus::TooLarge,
        Error::DegenerateInitial => TcStatus::DegenerateInitial,
        Error::BoundViolated { .. } => TcStatus::BoundViolated,
        Error::EmptyInput => TcStatus::EmptyInput,
        Error::Parse(_) | Error::Json(_) | Error::Csv(_) => TcStatus::Parse,
        Error::Io(_) => TcStatus::Io,
    }
}

struct Failure(TcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TcStatus::NullPointer, format!("{} is null", what))
}

fn guard<F>(f: F) -> TcStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside topocon".into());
            TcStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a system from a row-major `n x n` matrix and a length-`n` right-hand side.
///
/// # Safety
/// `a` must hold `n * n` doubles, `b` `n` doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_system_new(
    n: usize,
    a: *const f64,
    b: *const f64,
    out: *mut *mut TcSystem,
) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = slice(a, n * n, "a")?;
        let b = slice(b, n, "b")?;
        let sys = LinearSystem::from_rows(n, a, b)?;
        *out = Box::into_raw(Box::new(TcSystem(sys)));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from `tc_system_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_system_free(sys: *mut TcSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_system_phi(sys: *const TcSystem, out: *mut f64) -> TcStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = sys.0.phi();
        Ok(())
    })
}

/// Writes the exact solution into `out[0..n]`.
///
/// # Safety
/// `sys` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tc_system_x_star(sys: *const TcSystem, out: *mut f64, len: usize) -> TcStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        let n = sys.0.n();
        if len < n {
            return Err(Failure(
                TcStatus::BufferTooSmall,
                format!("need {} doubles, got {}", n, len),
            ));
        }
        slice_mut(out, n, "out")?.copy_from_slice(sys.0.x_star().as_slice());
        Ok(())
    })
}

/// Builds a connected network from `edge_count` pairs stored as
/// `edges[2k], edges[2k+1]`. Self-loops are implied.
///
/// # Safety
/// `edges` must hold `2 * edge_count` values, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_network_from_edges(
    n: usize,
    edges: *const usize,
    edge_count: usize,
    out: *mut *mut TcNetwork,
) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let flat = slice(edges, 2 * edge_count, "edges")?;
        let pairs = flat.chunks_exact(2).map(|c| (c[0], c[1]));
        let net = Network::from_edges(n, pairs)?;
        *out = Box::into_raw(Box::new(TcNetwork(net)));
        Ok(())
    })
}

/// Samples a connected random network. `p` is used by ER and WS, `k` by WS
/// and RR, `m` by SF.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_network_generate(
    family: TcFamily,
    n: usize,
    p: f64,
    k: usize,
    m: usize,
    seed: u64,
    out: *mut *mut TcNetwork,
) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let fam = match family {
            TcFamily::Er => GraphFamily::Er { p },
            TcFamily::Ws => GraphFamily::Ws { k, p },
            TcFamily::Sf => GraphFamily::Sf { m },
            TcFamily::Rr => GraphFamily::Rr { k },
        };
        let net = fam.generate(n, seed)?;
        *out = Box::into_raw(Box::new(TcNetwork(net)));
        Ok(())
    })
}

/// # Safety
/// `net` must come from a `tc_network_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_network_free(net: *mut TcNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_network_diameter(net: *const TcNetwork, out: *mut usize) -> TcStatus {
    guard(|| {
        let net = handle(net, "net")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = net.0.diameter();
        Ok(())
    })
}

/// Degree of vertex `i`, self-loop included.
///
/// # Safety
/// `net` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_network_degree(net: *const TcNetwork, i: usize, out: *mut usize) -> TcStatus {
    guard(|| {
        let net = handle(net, "net")?;
        if i >= net.0.n() {
            return Err(Error::IndexOutOfRange { index: i, len: net.0.n() }.into());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = net.0.degree(i);
        Ok(())
    })
}

/// Runs `t_max` rounds of the distributed iteration and writes `R(t)` at
/// checkpoints `0, stride, 2 stride, ..., t_max` into `out`. `written`
/// receives the number of checkpoints; if `out_len` is too small nothing is
/// copied and `TC_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// Handles must be live; `out` valid for `out_len` doubles; `written` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_run(
    sys: *const TcSystem,
    net: *const TcNetwork,
    t_max: usize,
    stride: usize,
    radius: f64,
    seed: u64,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> TcStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        let net = handle(net, "net")?;
        if written.is_null() {
            return Err(null("written"));
        }
        let trace = consensus::run(&sys.0, &net.0, t_max, stride, radius, seed)?;
        let count = trace.checkpoints.len();
        *written = count;
        if out_len < count {
            return Err(Failure(
                TcStatus::BufferTooSmall,
                format!("need {} doubles, got {}", count, out_len),
            ));
        }
        let dst = slice_mut(out, count, "out")?;
        for (d, c) in dst.iter_mut().zip(&trace.checkpoints) {
            *d = c.relative;
        }
        Ok(())
    })
}

/// Walk-sum bound on agent `source`'s error after `t + 1` rounds, given the
/// initial error norms `y0[0..n]`. `use_dp` selects the dynamic program
/// instead of enumeration.
///
/// # Safety
/// Handles must be live; `y0` valid for `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_bound(
    sys: *const TcSystem,
    net: *const TcNetwork,
    source: usize,
    t: usize,
    y0: *const f64,
    use_dp: bool,
    out: *mut f64,
) -> TcStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        let net = handle(net, "net")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let y0 = slice(y0, net.0.n(), "y0")?;
        let report = if use_dp {
            walks::bound_dp(&sys.0, &net.0, source, t, y0)?
        } else {
            walks::bound_bruteforce(&sys.0, &net.0, source, t, y0)?
        };
        *out = report.bound;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, TcStatus::Panic);
        let status = guard(|| Err(Error::EmptyInput.into()));
        assert_eq!(status, TcStatus::EmptyInput);
        let mut buf = [0 as c_char; 4];
        let len = unsafe { tc_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert!(len > 3);
        assert_eq!(buf[3], 0);
    }
}
