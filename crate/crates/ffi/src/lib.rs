//! C ABI for the rdpc solver, channel-simulation codec and bitstream
//! container.
//!
//! Every function returns an [`RdpcStatus`]; results go through out
//! pointers. Handles are opaque and owned by the caller once created; free
//! them with the matching `*_free` function. Matrices are row-major.
//! Panics never cross the boundary: they surface as `RDPC_STATUS_PANIC`.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use rdpc::bitcode::{self, StreamContents};
use rdpc::irf::{self, SolveStatus};
use rdpc::pfr::{CommonRandomness, PfrCodec};
use rdpc::probcore::{Channel, DistortionMatrix, DivergenceKind, Pmf};
use rdpc::Error;

/// Outcome of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    TooLarge = 3,
    /// The constraint set is empty.
    Infeasible = 4,
    /// The solver stopped before certifying its tolerance.
    MaxIterations = 5,
    BudgetExhausted = 6,
    ZeroIndex = 7,
    Truncated = 8,
    Malformed = 9,
    BadMagic = 10,
    UnsupportedVersion = 11,
    Panic = 12,
}

/// Realism divergence for [`rdpc_rdpf_solve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdpcDivergence {
    TotalVariation = 0,
    KullbackLeibler = 1,
    /// Needs per-symbol scalar values for both alphabets.
    Wasserstein1 = 2,
}

/// Opaque channel-simulation codec.
pub struct RdpcCodec(PfrCodec);

/// Opaque decoded container.
pub struct RdpcStream(StreamContents);

/// Heap bytes owned by the library; release with [`rdpc_buffer_free`].
#[repr(C)]
pub struct RdpcBuffer {
    pub data: *mut u8,
    pub len: usize,
}

impl From<Error> for RdpcStatus {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible { .. } => RdpcStatus::Infeasible,
            Error::MaxIterations => RdpcStatus::MaxIterations,
            Error::TooLarge(_) => RdpcStatus::TooLarge,
            Error::BudgetExhausted { .. } => RdpcStatus::BudgetExhausted,
            Error::ZeroIndex => RdpcStatus::ZeroIndex,
            Error::Truncated => RdpcStatus::Truncated,
            Error::Malformed(_) => RdpcStatus::Malformed,
            Error::BadMagic => RdpcStatus::BadMagic,
            Error::UnsupportedVersion(_) => RdpcStatus::UnsupportedVersion,
            _ => RdpcStatus::InvalidArgument,
        }
    }
}

fn guard<F: FnOnce() -> Result<(), RdpcStatus> + UnwindSafe>(f: F) -> RdpcStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => RdpcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => RdpcStatus::Panic,
    }
}

/// # Safety
/// `p` must be null or valid for `len` reads.
unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], RdpcStatus> {
    if p.is_null() {
        return Err(RdpcStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn rows(data: &[f64], cols: usize) -> Vec<Vec<f64>> {
    data.chunks(cols).map(<[f64]>::to_vec).collect()
}

fn nonzero(v: usize) -> Result<usize, RdpcStatus> {
    if v == 0 {
        Err(RdpcStatus::InvalidArgument)
    } else {
        Ok(v)
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn rdpc_status_message(status: RdpcStatus) -> *const c_char {
    let s: &'static CStr = match status {
        RdpcStatus::Ok => c"ok",
        RdpcStatus::NullPointer => c"null pointer argument",
        RdpcStatus::InvalidArgument => c"invalid argument",
        RdpcStatus::TooLarge => c"problem too large",
        RdpcStatus::Infeasible => c"no channel satisfies the constraints",
        RdpcStatus::MaxIterations => c"solver hit its iteration cap",
        RdpcStatus::BudgetExhausted => c"candidate budget exhausted",
        RdpcStatus::ZeroIndex => c"index zero has no codeword",
        RdpcStatus::Truncated => c"bitstream truncated",
        RdpcStatus::Malformed => c"malformed bitstream",
        RdpcStatus::BadMagic => c"bad magic bytes",
        RdpcStatus::UnsupportedVersion => c"unsupported container version",
        RdpcStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Solves `R(theta_d, theta_div)` for a source of `m` symbols, an `m × n`
/// distortion matrix and the chosen divergence. `theta_div` may be
/// `INFINITY`. `source_values` (length `m`) and `recon_values` (length `n`)
/// are read only for [`RdpcDivergence::Wasserstein1`].
///
/// On `RDPC_STATUS_OK` writes the rate in bits, the certified gap and, when
/// `out_channel` is non-null, the `m × n` channel. An empty feasible set
/// returns `RDPC_STATUS_INFEASIBLE`; an uncertified solve returns
/// `RDPC_STATUS_MAX_ITERATIONS` with the outputs still written.
///
/// # Safety
/// Pointers must be valid for the stated lengths; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rdpc_rdpf_solve(
    source: *const f64,
    m: usize,
    distortion: *const f64,
    n: usize,
    divergence: RdpcDivergence,
    source_values: *const f64,
    recon_values: *const f64,
    theta_d: f64,
    theta_div: f64,
    tolerance: f64,
    out_rate_bits: *mut f64,
    out_gap_bits: *mut f64,
    out_channel: *mut f64,
) -> RdpcStatus {
    guard(|| {
        let (m, n) = (nonzero(m)?, nonzero(n)?);
        if out_rate_bits.is_null() || out_gap_bits.is_null() {
            return Err(RdpcStatus::NullPointer);
        }
        let p = Pmf::new(slice(source, m)?.to_vec())?;
        let d = DistortionMatrix::new(rows(slice(distortion, m * n)?, n))?;
        let kind = match divergence {
            RdpcDivergence::TotalVariation => DivergenceKind::TotalVariation,
            RdpcDivergence::KullbackLeibler => DivergenceKind::KullbackLeibler,
            RdpcDivergence::Wasserstein1 => DivergenceKind::Wasserstein1Scalar {
                source_values: slice(source_values, m)?.to_vec(),
                recon_values: slice(recon_values, n)?.to_vec(),
            },
        };
        let sol = irf::rdpf(&p, &d, &kind, theta_d, theta_div, tolerance)?;
        if sol.status == SolveStatus::Infeasible {
            return Err(RdpcStatus::Infeasible);
        }
        *out_rate_bits = sol.rate_bits;
        *out_gap_bits = sol.gap_estimate;
        if !out_channel.is_null() {
            let out = std::slice::from_raw_parts_mut(out_channel, m * n);
            for (x, chunk) in out.chunks_mut(n).enumerate() {
                chunk.copy_from_slice(sol.channel.row(x));
            }
        }
        match sol.status {
            SolveStatus::Optimal => Ok(()),
            _ => Err(RdpcStatus::MaxIterations),
        }
    })
}

/// Creates a codec for the `m × n` channel `channel` on source `source`.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rdpc_codec_new(
    channel: *const f64,
    m: usize,
    n: usize,
    source: *const f64,
    out: *mut *mut RdpcCodec,
) -> RdpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(RdpcStatus::NullPointer);
        }
        let (m, n) = (nonzero(m)?, nonzero(n)?);
        let q = Channel::new(rows(slice(channel, m * n)?, n))?;
        let p = Pmf::new(slice(source, m)?.to_vec())?;
        let codec = PfrCodec::for_source(q, &p)?;
        *out = Box::into_raw(Box::new(RdpcCodec(codec)));
        Ok(())
    })
}

/// Sets the candidate budget per encoded symbol.
///
/// # Safety
/// `codec` must come from [`rdpc_codec_new`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn rdpc_codec_set_budget(codec: *mut RdpcCodec, budget: u64) -> RdpcStatus {
    guard(|| {
        let c = codec.as_mut().ok_or(RdpcStatus::NullPointer)?;
        if budget == 0 {
            return Err(RdpcStatus::InvalidArgument);
        }
        c.0 = c.0.clone().with_budget(budget);
        Ok(())
    })
}

/// Encodes input symbol `x` with common randomness `(seed, sample_index)`.
///
/// # Safety
/// `codec` must be live; `out_k` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rdpc_codec_encode(
    codec: *const RdpcCodec,
    x: usize,
    seed: u64,
    sample_index: u64,
    out_k: *mut u64,
) -> RdpcStatus {
    guard(|| {
        let c = codec.as_ref().ok_or(RdpcStatus::NullPointer)?;
        if out_k.is_null() {
            return Err(RdpcStatus::NullPointer);
        }
        *out_k = c.0.encode(x, CommonRandomness::new(seed, sample_index))?.k;
        Ok(())
    })
}

/// Decodes index `k` to a reconstruction symbol.
///
/// # Safety
/// `codec` must be live; `out_y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rdpc_codec_decode(
    codec: *const RdpcCodec,
    k: u64,
    seed: u64,
    sample_index: u64,
    out_y: *mut usize,
) -> RdpcStatus {
    guard(|| {
        let c = codec.as_ref().ok_or(RdpcStatus::NullPointer)?;
        if out_y.is_null() {
            return Err(RdpcStatus::NullPointer);
        }
        *out_y = c.0.decode(k, CommonRandomness::new(seed, sample_index))?;
        Ok(())
    })
}

/// # Safety
/// `codec` must be null or come from [`rdpc_codec_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn rdpc_codec_free(codec: *mut RdpcCodec) {
    if !codec.is_null() {
        drop(Box::from_raw(codec));
    }
}

/// Serializes `len` indices into the container format.
///
/// # Safety
/// `indices` must be valid for `len` reads (may be null when `len` is 0);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rdpc_stream_write(
    indices: *const u64,
    len: usize,
    seed: u64,
    block_size: u16,
    out: *mut RdpcBuffer,
) -> RdpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(RdpcStatus::NullPointer);
        }
        let ks = if len == 0 {
            &[][..]
        } else {
            slice(indices, len)?
        };
        let bytes = bitcode::write_stream(ks, seed, block_size)?.into_boxed_slice();
        let len = bytes.len();
        *out = RdpcBuffer {
            data: Box::into_raw(bytes).cast::<u8>(),
            len,
        };
        Ok(())
    })
}

/// # Safety
/// `buffer` must come from [`rdpc_stream_write`] and be freed once.
#[no_mangle]
pub unsafe extern "C" fn rdpc_buffer_free(buffer: RdpcBuffer) {
    if !buffer.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(
            buffer.data,
            buffer.len,
        )));
    }
}

/// Parses a container.
///
/// # Safety
/// `bytes` must be valid for `len` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rdpc_stream_read(
    bytes: *const u8,
    len: usize,
    out: *mut *mut RdpcStream,
) -> RdpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(RdpcStatus::NullPointer);
        }
        let contents = bitcode::read_stream(slice(bytes, len)?)?;
        *out = Box::into_raw(Box::new(RdpcStream(contents)));
        Ok(())
    })
}

/// Number of indices in a parsed container.
///
/// # Safety
/// `stream` must be live.
#[no_mangle]
pub unsafe extern "C" fn rdpc_stream_len(stream: *const RdpcStream) -> usize {
    stream.as_ref().map_or(0, |s| s.0.indices.len())
}

/// Borrowed pointer to the indices, valid until the stream is freed.
///
/// # Safety
/// `stream` must be live.
#[no_mangle]
pub unsafe extern "C" fn rdpc_stream_indices(stream: *const RdpcStream) -> *const u64 {
    stream
        .as_ref()
        .map_or(ptr::null(), |s| s.0.indices.as_ptr())
}

/// # Safety
/// `stream` must be live.
#[no_mangle]
pub unsafe extern "C" fn rdpc_stream_seed(stream: *const RdpcStream) -> u64 {
    stream.as_ref().map_or(0, |s| s.0.seed)
}

/// # Safety
/// `stream` must be live.
#[no_mangle]
pub unsafe extern "C" fn rdpc_stream_block_size(stream: *const RdpcStream) -> u16 {
    stream.as_ref().map_or(0, |s| s.0.block_size)
}

/// # Safety
/// `stream` must be null or come from [`rdpc_stream_read`], freed once.
#[no_mangle]
pub unsafe extern "C" fn rdpc_stream_free(stream: *mut RdpcStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}
