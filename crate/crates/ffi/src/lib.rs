//! C interface to the kzsim solvers.
//!
//! Objects are opaque handles returned through `out` pointers by constructors and released with the
//! matching `_free`. Every fallible call returns a [`KzStatus`]; on failure the message is
//! available from [`kzsim_last_error`] on the same thread until the next failing call.
//! Results are written through caller-provided pointers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kzsim::bdg::dense::dense_oracle;
use kzsim::bdg::{evolve_bdg, ground_state_probability, kink_stats_bdg, BdgState};
use kzsim::disorder::{DisorderSpec, DisorderTargets};
use kzsim::mc::{run_sampler, BetaSchedule, SamplerRequest, SimulatedAnnealing};
use kzsim::modes::mode_spectrum;
use kzsim::stats;
use kzsim::tebd::{run_tebd, TebdConfig};
use kzsim::{ChainSpec, Error, Schedule, SchedulePoint, StepPolicy};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    InsufficientData = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Which chain terms receive disorder.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KzTargets {
    Couplings = 0,
    Fields = 1,
    Both = 2,
}

/// Anneal schedule (opaque).
pub struct KzSchedule(Schedule);

/// Ising chain with per-bond couplings and per-site fields (opaque).
pub struct KzChain(ChainSpec);

/// BdG state at the end of an anneal (opaque).
pub struct KzBdgState(BdgState);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KzStatus {
    match e {
        Error::Integration { .. } | Error::LinearAlgebra(_) | Error::ZeroDensity | Error::NoCriticalPoint { .. } => {
            KzStatus::Numerical
        }
        Error::InsufficientData(_) => KzStatus::InsufficientData,
        Error::Io { .. } | Error::Parse { .. } | Error::Json(_) => KzStatus::Io,
        _ => KzStatus::InvalidArgument,
    }
}

struct Fail(KzStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type Ffi<T> = std::result::Result<T, Fail>;

fn guard<F: FnOnce() -> Ffi<()>>(f: F) -> KzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KzStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            KzStatus::Panic
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(KzStatus::NullPointer, format!("{name} is NULL"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Ffi<&'a T> {
    unsafe { p.as_ref() }.ok_or_else(|| null(name))
}

unsafe fn write<T>(p: *mut T, name: &str, v: T) -> Ffi<()> {
    if p.is_null() {
        return Err(null(name));
    }
    unsafe { p.write(v) };
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &str) -> Ffi<&'a [T]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, n) })
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, name: &str) -> Ffi<&'a mut [T]> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(unsafe { std::slice::from_raw_parts_mut(p, n) })
}

unsafe fn boxed<T>(out: *mut *mut T, v: T) -> Ffi<()> {
    unsafe { write(out, "out", Box::into_raw(Box::new(v))) }
}

fn too_small(need: usize, have: usize) -> Fail {
    Fail(KzStatus::BufferTooSmall, format!("buffer holds {have} values, need {need}"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kzsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Owned by the library and valid
/// until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn kzsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn kzsim_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Γ = β(1−s), 𝒥 = βs in GHz.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kzsim_schedule_linear(beta_ghz: f64, out: *mut *mut KzSchedule) -> KzStatus {
    guard(|| unsafe { boxed(out, KzSchedule(Schedule::linear(beta_ghz)?)) })
}

/// Γ = 4β(1−s)², 𝒥 = 4βs² in GHz.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kzsim_schedule_quadratic(beta_ghz: f64, out: *mut *mut KzSchedule) -> KzStatus {
    guard(|| unsafe { boxed(out, KzSchedule(Schedule::quadratic(beta_ghz)?)) })
}

/// Piecewise-linear schedule through `n` knots, s strictly increasing.
///
/// # Safety
/// The three arrays must hold `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_schedule_tabulated(
    s: *const f64,
    gamma_ghz: *const f64,
    jcal_ghz: *const f64,
    n: usize,
    out: *mut *mut KzSchedule,
) -> KzStatus {
    guard(|| unsafe {
        let (s, g, j) = (slice(s, n, "s")?, slice(gamma_ghz, n, "gamma_ghz")?, slice(jcal_ghz, n, "jcal_ghz")?);
        let pts: Vec<SchedulePoint> =
            (0..n).map(|i| SchedulePoint { s: s[i], gamma_ghz: g[i], jcal_ghz: j[i] }).collect();
        boxed(out, KzSchedule(Schedule::tabulated(&pts)?))
    })
}

/// # Safety
/// `sch` must come from a `kzsim_schedule_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kzsim_schedule_free(sch: *mut KzSchedule) {
    if !sch.is_null() {
        drop(unsafe { Box::from_raw(sch) });
    }
}

/// Γ and 𝒥 in GHz at `s`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_schedule_eval(sch: *const KzSchedule, s: f64, gamma_ghz: *mut f64, jcal_ghz: *mut f64) -> KzStatus {
    guard(|| unsafe {
        let e = deref(sch, "schedule")?.0.eval(s)?;
        write(gamma_ghz, "gamma_ghz", e.gamma)?;
        write(jcal_ghz, "jcal_ghz", e.jcal)
    })
}

/// Critical point s_c and quench constant b (1/ns) for coupling `j`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_schedule_critical(sch: *const KzSchedule, j: f64, s_c: *mut f64, b: *mut f64) -> KzStatus {
    guard(|| unsafe {
        let kz = deref(sch, "schedule")?.0.kz_constants(j)?;
        write(s_c, "s_c", kz.s_c)?;
        write(b, "b", kz.b)
    })
}

/// Uniform periodic chain of `l` sites with coupling `j` and no fields.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_chain_uniform(l: usize, j: f64, out: *mut *mut KzChain) -> KzStatus {
    guard(|| unsafe { boxed(out, KzChain(ChainSpec::uniform(l, j)?)) })
}

/// # Safety
/// `chain` must come from a chain constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kzsim_chain_free(chain: *mut KzChain) {
    if !chain.is_null() {
        drop(unsafe { Box::from_raw(chain) });
    }
}

/// Number of sites, 0 for NULL.
///
/// # Safety
/// `chain` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_chain_len(chain: *const KzChain) -> usize {
    unsafe { chain.as_ref() }.map_or(0, |c| c.0.len())
}

/// Replaces the bond couplings; bond `i` joins sites `i` and `i+1 mod L`.
///
/// # Safety
/// `values` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn kzsim_chain_set_couplings(chain: *mut KzChain, values: *const f64, n: usize) -> KzStatus {
    guard(|| unsafe {
        let c = chain.as_mut().ok_or_else(|| null("chain"))?;
        let v = slice(values, n, "values")?;
        let mut next = c.0.clone();
        next.couplings = v.to_vec();
        next.validate()?;
        c.0 = next;
        Ok(())
    })
}

/// Replaces the longitudinal fields.
///
/// # Safety
/// `values` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn kzsim_chain_set_fields(chain: *mut KzChain, values: *const f64, n: usize) -> KzStatus {
    guard(|| unsafe {
        let c = chain.as_mut().ok_or_else(|| null("chain"))?;
        let v = slice(values, n, "values")?;
        let mut next = c.0.clone();
        next.fields = v.to_vec();
        next.validate()?;
        c.0 = next;
        Ok(())
    })
}

/// Realization `index` of Gaussian disorder of width `sigma` around `nominal`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_chain_disorder(
    nominal: *const KzChain,
    sigma: f64,
    targets: KzTargets,
    master_seed: u64,
    index: usize,
    out: *mut *mut KzChain,
) -> KzStatus {
    guard(|| unsafe {
        let targets = match targets {
            KzTargets::Couplings => DisorderTargets::Couplings,
            KzTargets::Fields => DisorderTargets::Fields,
            KzTargets::Both => DisorderTargets::Both,
        };
        let spec = DisorderSpec { sigma, targets, n_realizations: index + 1, master_seed };
        boxed(out, KzChain(spec.realize(&deref(nominal, "nominal")?.0, index)?))
    })
}

/// Uniform chain through the momentum-mode solver: kink-density cumulants and ground-state
/// probability. Any output pointer may be NULL.
///
/// # Safety
/// `sch` must be valid; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kzsim_modes_run(
    sch: *const KzSchedule,
    j: f64,
    t_a: f64,
    l: usize,
    kappa1: *mut f64,
    kappa2: *mut f64,
    kappa3: *mut f64,
    p_gs: *mut f64,
) -> KzStatus {
    guard(|| unsafe {
        let sp = mode_spectrum(&deref(sch, "schedule")?.0, j, t_a, l, &StepPolicy::default())?;
        let c = sp.cumulants();
        for (p, v) in [(kappa1, c.k1), (kappa2, c.k2), (kappa3, c.k3), (p_gs, sp.ground_state_probability())] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Real-space BdG anneal over the full schedule.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_bdg_evolve(
    chain: *const KzChain,
    sch: *const KzSchedule,
    t_a: f64,
    out: *mut *mut KzBdgState,
) -> KzStatus {
    guard(|| unsafe {
        let st = evolve_bdg(&deref(chain, "chain")?.0, &deref(sch, "schedule")?.0, t_a, &StepPolicy::bdg_default())?;
        boxed(out, KzBdgState(st))
    })
}

/// # Safety
/// `state` must come from [`kzsim_bdg_evolve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kzsim_bdg_free(state: *mut KzBdgState) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Kink density and C^KK_r for r = 1..=n_r, written to `ckk[0..n_r]`.
///
/// # Safety
/// `ckk` must hold `n_r` doubles; other pointers valid. `chain` must be the evolved chain.
#[no_mangle]
pub unsafe extern "C" fn kzsim_bdg_kinks(
    state: *const KzBdgState,
    chain: *const KzChain,
    n_r: usize,
    n_bar: *mut f64,
    ckk: *mut f64,
) -> KzStatus {
    guard(|| unsafe {
        let rs: Vec<usize> = (1..=n_r).collect();
        let ks = kink_stats_bdg(&deref(state, "state")?.0, &deref(chain, "chain")?.0, &rs)?;
        slice_mut(ckk, n_r, "ckk")?.copy_from_slice(&ks.ckk);
        write(n_bar, "n_bar", ks.n_bar)
    })
}

/// Overlap with the instantaneous ground state at the end of the schedule.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_bdg_ground_state_probability(
    state: *const KzBdgState,
    chain: *const KzChain,
    sch: *const KzSchedule,
    p_gs: *mut f64,
) -> KzStatus {
    guard(|| unsafe {
        let p = ground_state_probability(&deref(state, "state")?.0, &deref(chain, "chain")?.0, &deref(sch, "schedule")?.0)?;
        write(p_gs, "p_gs", p)
    })
}

/// TEBD anneal with bond dimension `bond_dim` and Trotter step `dt` (ns). Writes n̄, C^KK_r for
/// r = 1..=n_r, the largest bond entropy and the total discarded weight.
///
/// # Safety
/// `ckk` must hold `n_r` doubles; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_tebd_run(
    chain: *const KzChain,
    sch: *const KzSchedule,
    t_a: f64,
    bond_dim: usize,
    dt: f64,
    n_r: usize,
    n_bar: *mut f64,
    ckk: *mut f64,
    max_entropy: *mut f64,
    discarded_weight: *mut f64,
) -> KzStatus {
    guard(|| unsafe {
        let cfg = TebdConfig { bond_dim, dt, ..TebdConfig::default() };
        let rs: Vec<usize> = (1..=n_r).collect();
        let (_, obs) = run_tebd(&deref(chain, "chain")?.0, &deref(sch, "schedule")?.0, t_a, &cfg, &rs)?;
        slice_mut(ckk, n_r, "ckk")?.copy_from_slice(&obs.kinks.ckk);
        write(n_bar, "n_bar", obs.kinks.n_bar)?;
        write(max_entropy, "max_entropy", obs.max_entropy)?;
        write(discarded_weight, "discarded_weight", obs.discarded_weight)
    })
}

/// Exact state-vector anneal for small chains (L ≤ 12).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_dense_run(
    chain: *const KzChain,
    sch: *const KzSchedule,
    t_a: f64,
    n_bar: *mut f64,
    p_gs: *mut f64,
) -> KzStatus {
    guard(|| unsafe {
        let d = dense_oracle(&deref(chain, "chain")?.0, &deref(sch, "schedule")?.0, t_a, &StepPolicy::default())?;
        write(n_bar, "n_bar", d.n_bar)?;
        write(p_gs, "p_gs", d.p_gs)
    })
}

/// Simulated annealing with a geometric β ramp from `beta_from` to `beta_to`. Writes
/// `n_samples` rows of L spins (±1) into `spins`, which must hold `capacity` bytes.
///
/// # Safety
/// `spins` must hold `capacity` bytes; `chain` valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_sa_sample(
    chain: *const KzChain,
    sweeps: usize,
    beta_from: f64,
    beta_to: f64,
    n_samples: usize,
    seed: u64,
    spins: *mut i8,
    capacity: usize,
) -> KzStatus {
    guard(|| unsafe {
        let chain = &deref(chain, "chain")?.0;
        let need = n_samples * chain.len();
        if capacity < need {
            return Err(too_small(need, capacity));
        }
        let sa = SimulatedAnnealing { sweeps, beta: BetaSchedule::Geometric { from: beta_from, to: beta_to } };
        sa.validate()?;
        let set = run_sampler(&sa, &SamplerRequest::new(chain.clone(), n_samples, seed))?;
        let out = slice_mut(spins, need, "spins")?;
        for (dst, s) in out.chunks_mut(chain.len()).zip(set.samples()) {
            dst.copy_from_slice(s);
        }
        Ok(())
    })
}

/// Cumulants of the kink density over `n_samples` rows of `l` spins.
///
/// # Safety
/// `spins` must hold `n_samples·l` values of ±1; outputs valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_kink_cumulants(
    spins: *const i8,
    n_samples: usize,
    l: usize,
    j_sign: f64,
    kappa1: *mut f64,
    kappa2: *mut f64,
    kappa3: *mut f64,
) -> KzStatus {
    guard(|| unsafe {
        if l == 0 {
            return Err(Fail(KzStatus::InvalidArgument, "l must be positive".into()));
        }
        let data = slice(spins, n_samples * l, "spins")?;
        if data.iter().any(|&x| x != 1 && x != -1) {
            return Err(Fail(KzStatus::InvalidArgument, "spins must be +1 or -1".into()));
        }
        let n: Vec<f64> = data.chunks(l).map(|s| stats::sample_density(s, j_sign)).collect();
        let c = stats::cumulants_of(&n)?;
        write(kappa1, "kappa1", c.k1)?;
        write(kappa2, "kappa2", c.k2)?;
        write(kappa3, "kappa3", c.k3)
    })
}

/// Kibble-Zurek density `t_a^{-1/2}/(2π√(2b))`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_predict_density(b: f64, t_a: f64, out: *mut f64) -> KzStatus {
    guard(|| unsafe { write(out, "out", kzsim::theory::predict_density(b, t_a)?) })
}

/// Landau-Zener rate `2π³b/L²`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kzsim_lz_rate(b: f64, l: usize, out: *mut f64) -> KzStatus {
    guard(|| unsafe { write(out, "out", kzsim::theory::lz_rate(b, l)?) })
}

/// Runs a CLI command (`run`, `analyze`, `theory`, `fit` or `shim`) from a config file.
/// `out_dir` may be NULL to use the config's `out`. `failures` receives the number of grid
/// units that failed.
///
/// # Safety
/// Strings must be NUL-terminated UTF-8; `failures` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn kzsim_run_command(
    command: *const c_char,
    config_path: *const c_char,
    out_dir: *const c_char,
    failures: *mut usize,
) -> KzStatus {
    use kzsim::experiment::{analyze, fit, run, shim, theory};
    guard(|| unsafe {
        let text = |p: *const c_char, name: &str| -> Ffi<String> {
            if p.is_null() {
                return Err(null(name));
            }
            CStr::from_ptr(p).to_str().map(str::to_string).map_err(|e| Fail(KzStatus::InvalidArgument, format!("{name}: {e}")))
        };
        let cmd = text(command, "command")?;
        let cfg = std::path::PathBuf::from(text(config_path, "config_path")?);
        let out = if out_dir.is_null() { None } else { Some(std::path::PathBuf::from(text(out_dir, "out_dir")?)) };
        let out = out.as_deref();
        let outcome = match cmd.as_str() {
            "run" => run::run_file(&cfg, out),
            "analyze" => analyze::analyze_file(&cfg, out),
            "theory" => theory::theory_file(&cfg, out),
            "fit" => fit::fit_file(&cfg, out),
            "shim" => shim::shim_file(&cfg, out),
            other => return Err(Fail(KzStatus::InvalidArgument, format!("unknown command {other:?}"))),
        }?;
        if !failures.is_null() {
            failures.write(outcome.failures);
        }
        Ok(())
    })
}
