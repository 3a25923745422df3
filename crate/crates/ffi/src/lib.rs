//! C ABI over the `swarmbt` core.
//!
//! Objects cross the boundary as opaque handles owned by the caller and released with the
//! matching `*_free`. Every fallible call returns an [`SbtStatus`]; on failure a description is
//! available from [`sbt_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use swarmbt::bt::{random_constrained_tree, random_tree};
use swarmbt::eval::jaccard;
use swarmbt::evolve::{extract_with, Observation};
use swarmbt::metrics::{compute_metrics, BetaEdgeRule, STREAM_COUNT};
use swarmbt::sim::{init_state, simulate};
use swarmbt::{
    io, rng, ArenaConfig, BehaviorTree, Error, EvolutionConfig, ExtractionResult, MetricParams,
    MetricSeries, Trajectory,
};

/// Number of metric streams per frame.
pub const SBT_STREAM_COUNT: usize = 9;
const _: () = assert!(SBT_STREAM_COUNT == STREAM_COUNT);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Capacity = 4,
    Io = 5,
    Trajectory = 6,
    LengthMismatch = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbtBetaRule {
    CloserThanMean = 0,
    FartherThanMean = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbtArenaConfig {
    pub side_length: f64,
    pub agent_count: usize,
    pub agent_radius: f64,
    pub sensing_range: f64,
    pub speed: f64,
    pub dt: f64,
    pub steps: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbtEvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub elitism_size: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub leaf_count: usize,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbtMetricParams {
    pub density_radius: f64,
    pub beta_rule: SbtBetaRule,
}

/// Opaque behavior tree.
pub struct SbtTree(BehaviorTree);
/// Opaque trajectory.
pub struct SbtTrajectory(Trajectory);
/// Opaque metric series.
pub struct SbtMetrics(MetricSeries);
/// Opaque extraction result.
pub struct SbtExtraction(ExtractionResult);

impl From<SbtArenaConfig> for ArenaConfig {
    fn from(c: SbtArenaConfig) -> Self {
        ArenaConfig {
            side_length: c.side_length,
            agent_count: c.agent_count,
            agent_radius: c.agent_radius,
            sensing_range: c.sensing_range,
            speed: c.speed,
            dt: c.dt,
            steps: c.steps,
        }
    }
}

impl From<ArenaConfig> for SbtArenaConfig {
    fn from(c: ArenaConfig) -> Self {
        SbtArenaConfig {
            side_length: c.side_length,
            agent_count: c.agent_count,
            agent_radius: c.agent_radius,
            sensing_range: c.sensing_range,
            speed: c.speed,
            dt: c.dt,
            steps: c.steps,
        }
    }
}

impl From<SbtEvolutionConfig> for EvolutionConfig {
    fn from(c: SbtEvolutionConfig) -> Self {
        EvolutionConfig {
            population_size: c.population_size,
            generations: c.generations,
            elitism_size: c.elitism_size,
            tournament_size: c.tournament_size,
            crossover_rate: c.crossover_rate,
            mutation_rate: c.mutation_rate,
            leaf_count: c.leaf_count,
            seed: c.seed,
        }
    }
}

impl From<EvolutionConfig> for SbtEvolutionConfig {
    fn from(c: EvolutionConfig) -> Self {
        SbtEvolutionConfig {
            population_size: c.population_size,
            generations: c.generations,
            elitism_size: c.elitism_size,
            tournament_size: c.tournament_size,
            crossover_rate: c.crossover_rate,
            mutation_rate: c.mutation_rate,
            leaf_count: c.leaf_count,
            seed: c.seed,
        }
    }
}

impl From<SbtMetricParams> for MetricParams {
    fn from(p: SbtMetricParams) -> Self {
        MetricParams {
            density_radius: p.density_radius,
            beta_rule: match p.beta_rule {
                SbtBetaRule::CloserThanMean => BetaEdgeRule::CloserThanMean,
                SbtBetaRule::FartherThanMean => BetaEdgeRule::FartherThanMean,
            },
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(SbtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) | Error::Config { .. } => SbtStatus::InvalidArgument,
            Error::UnknownToken { .. } | Error::MalformedTree { .. } => SbtStatus::Parse,
            Error::Capacity { .. } => SbtStatus::Capacity,
            Error::LengthMismatch { .. } => SbtStatus::LengthMismatch,
            Error::Trajectory { .. } => SbtStatus::Trajectory,
            Error::Io { .. } => SbtStatus::Io,
            Error::Individual { .. } | Error::Trial { .. } => SbtStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SbtStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SbtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SbtStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            SbtStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes either null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn out_slot<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller passes either null or writable storage for one `T`.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and NUL-terminated by contract.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| {
        Failure(
            SbtStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message for the last failed call on this thread, or null if none. Owned by the library.
#[no_mangle]
pub extern "C" fn sbt_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sbt_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: allocated by `CString::into_raw` in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

#[no_mangle]
pub extern "C" fn sbt_arena_config_default() -> SbtArenaConfig {
    ArenaConfig::default().into()
}

#[no_mangle]
pub extern "C" fn sbt_evolution_config_default() -> SbtEvolutionConfig {
    EvolutionConfig::default().into()
}

#[no_mangle]
pub extern "C" fn sbt_metric_params_default() -> SbtMetricParams {
    SbtMetricParams {
        density_radius: MetricParams::default().density_radius,
        beta_rule: SbtBetaRule::CloserThanMean,
    }
}

/// Parses `seq(a,b,...)`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_tree_parse(text: *const c_char, out: *mut *mut SbtTree) -> SbtStatus {
    guard(|| {
        let out = unsafe { out_slot(out, "out") }?;
        let tree = BehaviorTree::parse(unsafe { c_str(text, "text") }?)?;
        *out = boxed(SbtTree(tree));
        Ok(())
    })
}

/// Draws a uniform tree of `leaf_count` leaves; `constrained` rejects canceling pairs.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_tree_random(
    leaf_count: usize,
    seed: u64,
    constrained: bool,
    out: *mut *mut SbtTree,
) -> SbtStatus {
    guard(|| {
        let out = unsafe { out_slot(out, "out") }?;
        let mut rng = rng::seeded(seed);
        let tree = if constrained {
            random_constrained_tree(leaf_count, &mut rng)?
        } else {
            random_tree(leaf_count, &mut rng)?
        };
        *out = boxed(SbtTree(tree));
        Ok(())
    })
}

/// Canonical string form; release with [`sbt_string_free`].
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_tree_to_string(
    tree: *const SbtTree,
    out: *mut *mut c_char,
) -> SbtStatus {
    guard(|| {
        let out = unsafe { out_slot(out, "out") }?;
        let tree = unsafe { borrow(tree, "tree") }?;
        let s = CString::new(tree.0.serialize()).expect("tree strings contain no NUL");
        *out = s.into_raw();
        Ok(())
    })
}

/// Number of leaves, or 0 for null.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sbt_tree_len(tree: *const SbtTree) -> usize {
    unsafe { tree.as_ref() }.map_or(0, |t| t.0.len())
}

/// # Safety
/// `tree` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sbt_tree_free(tree: *mut SbtTree) {
    if !tree.is_null() {
        drop(unsafe { Box::from_raw(tree) });
    }
}

/// Token-set Jaccard similarity of two trees.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_jaccard(
    a: *const SbtTree,
    b: *const SbtTree,
    out: *mut f64,
) -> SbtStatus {
    guard(|| {
        let out = unsafe { out_slot(out, "out") }?;
        let a = unsafe { borrow(a, "a") }?;
        let b = unsafe { borrow(b, "b") }?;
        *out = jaccard(&a.0, &b.0);
        Ok(())
    })
}

/// Places agents and runs `tree` for `config->steps` steps, all from `seed`.
///
/// # Safety
/// `tree` and `config` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_simulate(
    tree: *const SbtTree,
    config: *const SbtArenaConfig,
    seed: u64,
    out: *mut *mut SbtTrajectory,
) -> SbtStatus {
    guard(|| {
        let out = unsafe { out_slot(out, "out") }?;
        let tree = unsafe { borrow(tree, "tree") }?;
        let config: ArenaConfig = (*unsafe { borrow(config, "config") }?).into();
        config.validate()?;
        let mut rng = rng::seeded(seed);
        let init = init_state(&config, &mut rng)?;
        let traj = simulate(&tree.0, &init, &config, &mut rng)?;
        *out = boxed(SbtTrajectory(traj));
        Ok(())
    })
}

/// Reads a `t,agent,x,y` CSV. `config` supplies the arena geometry.
///
/// # Safety
/// `path` must be NUL-terminated; `config` valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_trajectory_read_csv(
    path: *const c_char,
    config: *const SbtArenaConfig,
    out: *mut *mut SbtTrajectory,
) -> SbtStatus {
    guard(|| {
        let out = unsafe { out_slot(out, "out") }?;
        let path = PathBuf::from(unsafe { c_str(path, "path") }?);
        let config: ArenaConfig = (*unsafe { borrow(config, "config") }?).into();
        let traj = io::read_trajectory_file(&path, &config)?;
        *out = boxed(SbtTrajectory(traj));
        Ok(())
    })
}

/// # Safety
/// `traj` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sbt_trajectory_write_csv(
    traj: *const SbtTrajectory,
    path: *const c_char,
) -> SbtStatus {
    guard(|| {
        let traj = unsafe { borrow(traj, "trajectory") }?;
        let path = PathBuf::from(unsafe { c_str(path, "path") }?);
        io::write_trajectory_file(&traj.0, &path)?;
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sbt_trajectory_frame_count(traj: *const SbtTrajectory) -> usize {
    unsafe { traj.as_ref() }.map_or(0, |t| t.0.frame_count())
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sbt_trajectory_agent_count(traj: *const SbtTrajectory) -> usize {
    unsafe { traj.as_ref() }.map_or(0, |t| t.0.agent_count())
}

/// Position of `agent` at `frame`.
///
/// # Safety
/// `traj` must be a live handle; `x` and `y` writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_trajectory_position(
    traj: *const SbtTrajectory,
    frame: usize,
    agent: usize,
    x: *mut f64,
    y: *mut f64,
) -> SbtStatus {
    guard(|| {
        let traj = unsafe { borrow(traj, "trajectory") }?;
        let x = unsafe { out_slot(x, "x") }?;
        let y = unsafe { out_slot(y, "y") }?;
        let p = traj
            .0
            .frames
            .get(frame)
            .and_then(|f| f.positions.get(agent))
            .ok_or_else(|| {
                Failure(
                    SbtStatus::InvalidArgument,
                    format!("frame {frame} agent {agent} is out of range"),
                )
            })?;
        *x = p.x;
        *y = p.y;
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sbt_trajectory_free(traj: *mut SbtTrajectory) {
    if !traj.is_null() {
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// # Safety
/// `traj` and `params` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_metrics_compute(
    traj: *const SbtTrajectory,
    params: *const SbtMetricParams,
    out: *mut *mut SbtMetrics,
) -> SbtStatus {
    guard(|| {
        let out = unsafe { out_slot(out, "out") }?;
        let traj = unsafe { borrow(traj, "trajectory") }?;
        let params: MetricParams = (*unsafe { borrow(params, "params") }?).into();
        params.validate()?;
        *out = boxed(SbtMetrics(compute_metrics(&traj.0, &params)?));
        Ok(())
    })
}

/// Frames per stream, or 0 for null.
///
/// # Safety
/// `metrics` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sbt_metrics_len(metrics: *const SbtMetrics) -> usize {
    unsafe { metrics.as_ref() }.map_or(0, |m| m.0.len())
}

/// Copies stream `index` (0..SBT_STREAM_COUNT) into `buf`, which must hold `sbt_metrics_len` values.
///
/// # Safety
/// `metrics` must be a live handle; `buf` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn sbt_metrics_stream(
    metrics: *const SbtMetrics,
    index: usize,
    buf: *mut f64,
    capacity: usize,
) -> SbtStatus {
    guard(|| {
        let metrics = unsafe { borrow(metrics, "metrics") }?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let streams = metrics.0.streams();
        let stream = streams.get(index).ok_or_else(|| {
            Failure(
                SbtStatus::InvalidArgument,
                format!("stream index {index} is out of range 0..{STREAM_COUNT}"),
            )
        })?;
        if capacity < stream.len() {
            return Err(Error::LengthMismatch {
                expected: stream.len(),
                found: capacity,
            }
            .into());
        }
        // SAFETY: `buf` has room for `capacity >= stream.len()` values.
        unsafe { ptr::copy_nonoverlapping(stream.as_ptr(), buf, stream.len()) };
        Ok(())
    })
}

/// # Safety
/// `metrics` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sbt_metrics_free(metrics: *mut SbtMetrics) {
    if !metrics.is_null() {
        drop(unsafe { Box::from_raw(metrics) });
    }
}

/// Runs the full evolutionary extraction against an observed trajectory.
///
/// # Safety
/// All pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_extract(
    observation: *const SbtTrajectory,
    config: *const SbtEvolutionConfig,
    params: *const SbtMetricParams,
    out: *mut *mut SbtExtraction,
) -> SbtStatus {
    guard(|| {
        let out = unsafe { out_slot(out, "out") }?;
        let traj = unsafe { borrow(observation, "observation") }?;
        let config: EvolutionConfig = (*unsafe { borrow(config, "config") }?).into();
        let params: MetricParams = (*unsafe { borrow(params, "params") }?).into();
        params.validate()?;
        let obs = Observation::new(traj.0.clone(), params)?;
        let result = extract_with(&obs, &config, |_| {})?;
        *out = boxed(SbtExtraction(result));
        Ok(())
    })
}

/// Copies the best tree into a new handle.
///
/// # Safety
/// `ex` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_extraction_best_tree(
    ex: *const SbtExtraction,
    out: *mut *mut SbtTree,
) -> SbtStatus {
    guard(|| {
        let out = unsafe { out_slot(out, "out") }?;
        let ex = unsafe { borrow(ex, "extraction") }?;
        *out = boxed(SbtTree(ex.0.best_tree.clone()));
        Ok(())
    })
}

/// Best fitness found, or NaN for null.
///
/// # Safety
/// `ex` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sbt_extraction_best_fitness(ex: *const SbtExtraction) -> f64 {
    unsafe { ex.as_ref() }.map_or(f64::NAN, |e| e.0.best_fitness)
}

/// One entry per generation, starting at generation 0; 0 for null.
///
/// # Safety
/// `ex` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sbt_extraction_history_len(ex: *const SbtExtraction) -> usize {
    unsafe { ex.as_ref() }.map_or(0, |e| e.0.history.len())
}

/// # Safety
/// `ex` must be a live handle; `best` and `mean` writable.
#[no_mangle]
pub unsafe extern "C" fn sbt_extraction_history_at(
    ex: *const SbtExtraction,
    generation: usize,
    best: *mut f64,
    mean: *mut f64,
) -> SbtStatus {
    guard(|| {
        let ex = unsafe { borrow(ex, "extraction") }?;
        let best = unsafe { out_slot(best, "best") }?;
        let mean = unsafe { out_slot(mean, "mean") }?;
        let g = ex.0.history.get(generation).ok_or_else(|| {
            Failure(
                SbtStatus::InvalidArgument,
                format!("generation {generation} is out of range"),
            )
        })?;
        *best = g.best_fitness;
        *mean = g.mean_fitness;
        Ok(())
    })
}

/// # Safety
/// `ex` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sbt_extraction_free(ex: *mut SbtExtraction) {
    if !ex.is_null() {
        drop(unsafe { Box::from_raw(ex) });
    }
}
