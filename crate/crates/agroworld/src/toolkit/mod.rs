//! The tool registry.
//!
//! Every tool call is a pure function of the immutable world snapshot and its
//! arguments. A call returns a JSON value plus an [`Artifact`] whose `prov`
//! digest covers the tool name, registry version, world id, and canonicalized
//! arguments — identical calls produce byte-identical artifacts, and any
//! parameter change alters the digest.
//!
//! Tool failures are structured [`ToolError`] diagnostics with a stable code
//! and machine-readable details; the agent's reflection rules key off them.

mod args;
mod artifact;
mod geo;
mod grid_tools;
pub mod rs_tools;
mod sim_tools;
mod util_tools;
mod wx_tools;
mod zones;

pub use artifact::{Artifact, ArtifactKind, ArtifactMeta, ArtifactStore, StoreEntry};
pub use zones::Zone;

use crate::model::WorldState;
use crate::{align, canonical, units};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt;

/// Registry version baked into every provenance digest.
pub const TOOL_VERSION: &str = "1.0.0";

/// Maximum plan/tool argument nesting the resolver will traverse.
pub(crate) type Args = BTreeMap<String, Value>;

/// Stable machine-readable error codes shared by tools, the plan executor,
/// the remote policy transport, and the benchmark layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    UnknownTool,
    UnknownBand,
    UnknownRegion,
    ArgumentError,
    TemporalWindowError,
    LowCoverage,
    EmptyZone,
    EmptyBaseline,
    EmptySeries,
    ExtrapolationError,
    OutOfDomain,
    DimensionMismatch,
    SpatialMisalignment,
    GridMismatch,
    ZeroMeanNormalization,
    PlanError,
    ParseError,
    TransportError,
    InvariantError,
    IoError,
    GenerationExhausted,
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A structured, serializable diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl ToolError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> ToolError {
        ToolError { code, message: message.into(), details: Value::Null }
    }

    /// Attach a machine-readable detail field.
    pub fn with(mut self, key: &str, value: impl Serialize) -> ToolError {
        let v = canonical::to_value(&value);
        match &mut self.details {
            Value::Object(map) => {
                map.insert(key.to_string(), v);
            }
            _ => {
                let mut map = serde_json::Map::new();
                map.insert(key.to_string(), v);
                self.details = Value::Object(map);
            }
        }
        self
    }

    pub fn detail(&self, key: &str) -> Option<&Value> {
        self.details.get(key)
    }
}

impl fmt::Display for ToolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ToolError {}

impl From<align::AlignError> for ToolError {
    fn from(e: align::AlignError) -> ToolError {
        match &e {
            align::AlignError::SpatialMisalignment { left, right } => {
                ToolError::new(ErrorCode::SpatialMisalignment, e.to_string())
                    .with("found", left)
                    .with("expected", right)
            }
            align::AlignError::Extrapolation { t0, t1, .. } => {
                ToolError::new(ErrorCode::ExtrapolationError, e.to_string())
                    .with("available", [*t0, *t1])
            }
            align::AlignError::EmptySeries => ToolError::new(ErrorCode::EmptySeries, e.to_string()),
            align::AlignError::NonIncreasing => ToolError::new(ErrorCode::ArgumentError, e.to_string()),
            align::AlignError::OutOfDomain(_) => ToolError::new(ErrorCode::OutOfDomain, e.to_string()),
        }
    }
}

impl From<units::UnitsError> for ToolError {
    fn from(e: units::UnitsError) -> ToolError {
        match &e {
            units::UnitsError::DimensionMismatch { from, to, .. } => {
                ToolError::new(ErrorCode::DimensionMismatch, e.to_string())
                    .with("observed", from.symbol())
                    .with("expected", to.symbol())
            }
            units::UnitsError::UnknownSymbol(_) => ToolError::new(ErrorCode::ArgumentError, e.to_string())
                .with("valid", units::ALL_UNITS.iter().map(|u| u.symbol()).collect::<Vec<_>>()),
            units::UnitsError::NonFinite(_) => ToolError::new(ErrorCode::ArgumentError, e.to_string()),
        }
    }
}

/// One tool invocation: dotted tool name plus named arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    #[serde(default)]
    pub args: Args,
}

/// Coarse argument type for signature validation and prompt rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgKind {
    Str,
    Int,
    Num,
    IntPair,
    List,
    Obj,
    Any,
}

impl ArgKind {
    fn accepts(&self, v: &Value) -> bool {
        match self {
            ArgKind::Str => v.is_string(),
            ArgKind::Int => v.is_i64() || v.is_u64(),
            ArgKind::Num => v.is_number(),
            ArgKind::IntPair => {
                v.as_array().is_some_and(|a| a.len() == 2 && a.iter().all(|x| x.is_i64() || x.is_u64()))
            }
            ArgKind::List => v.is_array(),
            ArgKind::Obj => v.is_object(),
            ArgKind::Any => true,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            ArgKind::Str => "string",
            ArgKind::Int => "int",
            ArgKind::Num => "number",
            ArgKind::IntPair => "[int, int]",
            ArgKind::List => "list",
            ArgKind::Obj => "object",
            ArgKind::Any => "any",
        }
    }
}

pub struct ArgSpec {
    pub name: &'static str,
    pub kind: ArgKind,
    pub required: bool,
}

pub struct ToolSpec {
    pub name: &'static str,
    pub args: &'static [ArgSpec],
    pub summary: &'static str,
}

impl ToolSpec {
    /// Human/LLM-facing one-line signature.
    pub fn signature(&self) -> String {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| {
                if a.required {
                    format!("{}: {}", a.name, a.kind.name())
                } else {
                    format!("{}?: {}", a.name, a.kind.name())
                }
            })
            .collect();
        format!("{}({}) — {}", self.name, args.join(", "), self.summary)
    }
}

/// Whether spatial alignment machinery is active.
///
/// `Full` is normal operation: composite tools auto-align their inputs and
/// zone-consuming tools verify CRS equality, raising `SpatialMisalignment` on
/// mismatch. `Disabled` is the ablation mode: no reprojection, no checks, raw
/// coordinates compared as-is — mismatched inputs silently produce empty
/// joins and zones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentMode {
    Full,
    Disabled,
}

/// Tool-visible execution context.
pub struct ToolCtx<'a> {
    pub world: &'a WorldState,
    pub alignment: AlignmentMode,
}

impl ToolCtx<'_> {
    /// Enforce CRS equality between two spatial inputs (no-op when alignment
    /// is disabled).
    pub fn ensure_aligned(
        &self,
        arg: &str,
        found: &crate::geometry::Crs,
        expected: &crate::geometry::Crs,
    ) -> Result<(), ToolError> {
        if self.alignment == AlignmentMode::Disabled {
            return Ok(());
        }
        align::check_aligned(found, expected).map_err(|e| {
            ToolError::from(e).with("arg", arg)
        })
    }
}

pub(crate) struct ToolOutput {
    pub value: Value,
    pub kind: ArtifactKind,
    pub meta: ArtifactMeta,
}

type ToolFn = fn(&ToolCtx, &Args) -> Result<ToolOutput, ToolError>;

struct ToolEntry {
    spec: ToolSpec,
    run: ToolFn,
}

fn table() -> &'static [ToolEntry] {
    macro_rules! arg {
        ($name:literal, $kind:ident) => {
            ArgSpec { name: $name, kind: ArgKind::$kind, required: true }
        };
        ($name:literal, $kind:ident, opt) => {
            ArgSpec { name: $name, kind: ArgKind::$kind, required: false }
        };
    }
    static TABLE: &[ToolEntry] = &[
        ToolEntry {
            spec: ToolSpec {
                name: "geo.filter_parcels",
                args: &[
                    arg!("region", Str, opt),
                    arg!("crop", Str, opt),
                    arg!("area_range", List, opt),
                ],
                summary: "select parcel ids by region, crop, and area range (ha)",
            },
            run: geo::filter_parcels,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "geo.sjoin",
                args: &[
                    arg!("left", List),
                    arg!("right", List),
                    arg!("align", Any, opt),
                ],
                summary: "pairs of geometries with positive intersection area",
            },
            run: geo::sjoin,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "geo.reproject",
                args: &[arg!("parcels", List), arg!("to", Obj)],
                summary: "reproject parcel geometries into a target CRS",
            },
            run: geo::reproject,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "rs.load",
                args: &[
                    arg!("band", Str),
                    arg!("time_range", IntPair),
                    arg!("region", List, opt),
                    arg!("raster_id", Str, opt),
                ],
                summary: "open a time-sliced view of a raster band",
            },
            run: rs_tools::load,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "rs.zonal_stats",
                args: &[
                    arg!("raster", Obj),
                    arg!("zones", List),
                    arg!("stat", Str),
                    arg!("tau_min", Num, opt),
                ],
                summary: "masked per-parcel per-day statistics over a raster view",
            },
            run: rs_tools::zonal_stats,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "rs.anomaly",
                args: &[
                    arg!("series", Any),
                    arg!("baseline_window", IntPair),
                    arg!("method", Str, opt),
                    arg!("threshold", Num, opt),
                ],
                summary: "z-score anomaly flags against a baseline window",
            },
            run: rs_tools::anomaly,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "grid.sample",
                args: &[arg!("grid", Str), arg!("zones", List)],
                summary: "per-parcel mean of a static grid layer",
            },
            run: grid_tools::sample,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "grid.aggregate",
                args: &[arg!("grid", Str), arg!("region", Str)],
                summary: "mean of a grid layer over a region's parcels",
            },
            run: grid_tools::aggregate,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "wx.get",
                args: &[arg!("region", Str), arg!("time_range", IntPair), arg!("var", Str)],
                summary: "daily weather series for a region",
            },
            run: wx_tools::get,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "wx.rolling_sum",
                args: &[arg!("series", Any), arg!("window", Int)],
                summary: "trailing sum over the last N days (null during warm-up)",
            },
            run: wx_tools::rolling_sum,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "wx.degree_days",
                args: &[arg!("tmax", Any), arg!("tmin", Any), arg!("t_base", Num)],
                summary: "cumulative growing degree days above a base temperature",
            },
            run: wx_tools::degree_days,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "sim.run",
                args: &[arg!("parcel", Str), arg!("intervention", Obj, opt)],
                summary: "daily water-balance simulation over the season",
            },
            run: sim_tools::run,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "sim.delta",
                args: &[arg!("parcel", Str), arg!("intervention", Obj), arg!("target", Str, opt)],
                summary: "intervened-minus-baseline difference on a simulator metric",
            },
            run: sim_tools::delta,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "pred.stress",
                args: &[arg!("parcel", Str), arg!("time_range", IntPair)],
                summary: "cumulative-deficit water stress proxy in [0,1]",
            },
            run: sim_tools::stress,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "pred.yield",
                args: &[arg!("parcel", Str)],
                summary: "season-end yield forecast (kg/ha)",
            },
            run: sim_tools::yield_forecast,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "pred.disease",
                args: &[arg!("parcel", Str), arg!("time_range", IntPair)],
                summary: "humidity/temperature disease risk in [0,1]",
            },
            run: sim_tools::disease,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "unit.convert",
                args: &[arg!("value", Any), arg!("target", Str)],
                summary: "convert a {value, unit} quantity to another unit",
            },
            run: util_tools::convert,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "tbl.pick",
                args: &[arg!("table", Obj), arg!("key", Str)],
                summary: "scalar cell of a per-parcel table",
            },
            run: util_tools::tbl_pick,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "tbl.row",
                args: &[arg!("table", Obj), arg!("key", Str)],
                summary: "one parcel's time series row of a table",
            },
            run: util_tools::tbl_row,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "series.mean",
                args: &[arg!("series", Any), arg!("t_range", IntPair, opt)],
                summary: "mean of a series (optionally restricted to a window)",
            },
            run: util_tools::series_mean,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "series.pick",
                args: &[arg!("series", Any), arg!("t", Int)],
                summary: "series value at an exact day",
            },
            run: util_tools::series_pick,
        },
        ToolEntry {
            spec: ToolSpec {
                name: "viz.plot",
                args: &[arg!("series", Any), arg!("title", Str), arg!("y_label", Str, opt)],
                summary: "declarative figure description of a series",
            },
            run: util_tools::plot,
        },
    ];
    TABLE
}

/// The tool registry, configurable for ablation variants.
#[derive(Debug, Clone)]
pub struct Registry {
    alignment: AlignmentMode,
    rs_enabled: bool,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::full()
    }
}

impl Registry {
    pub fn full() -> Registry {
        Registry { alignment: AlignmentMode::Full, rs_enabled: true }
    }

    /// Identity alignment: no reprojection, no CRS checks.
    pub fn without_alignment() -> Registry {
        Registry { alignment: AlignmentMode::Disabled, rs_enabled: true }
    }

    /// Remote-sensing tools removed from the registry.
    pub fn without_rs() -> Registry {
        Registry { alignment: AlignmentMode::Full, rs_enabled: false }
    }

    pub fn alignment(&self) -> AlignmentMode {
        self.alignment
    }

    fn enabled(&self, name: &str) -> bool {
        self.rs_enabled || !name.starts_with("rs.")
    }

    /// Enabled tool names, sorted.
    pub fn tool_names(&self) -> Vec<&'static str> {
        table()
            .iter()
            .map(|e| e.spec.name)
            .filter(|n| self.enabled(n))
            .collect()
    }

    /// Enabled tool specs for prompt rendering.
    pub fn specs(&self) -> Vec<&'static ToolSpec> {
        table()
            .iter()
            .filter(|e| self.enabled(e.spec.name))
            .map(|e| &e.spec)
            .collect()
    }

    /// Dispatch a call: validate the signature, run the tool, and wrap the
    /// result in a provenance-hashed artifact.
    pub fn invoke(&self, world: &WorldState, call: &ToolCall) -> Result<(Value, Artifact), ToolError> {
        let entry = table()
            .iter()
            .find(|e| e.spec.name == call.tool && self.enabled(e.spec.name))
            .ok_or_else(|| {
                ToolError::new(ErrorCode::UnknownTool, format!("unknown tool {:?}", call.tool))
                    .with("valid", self.tool_names())
            })?;
        validate_args(&entry.spec, &call.args)?;
        let ctx = ToolCtx { world, alignment: self.alignment };
        let out = (entry.run)(&ctx, &call.args)?;
        let prov = canonical::digest(&serde_json::json!({
            "args": call.args,
            "tool": call.tool,
            "version": TOOL_VERSION,
            "world": world.world_id,
        }));
        let artifact = Artifact { kind: out.kind, payload: out.value.clone(), meta: out.meta, prov };
        Ok((out.value, artifact))
    }
}

fn validate_args(spec: &ToolSpec, args: &Args) -> Result<(), ToolError> {
    for key in args.keys() {
        if !spec.args.iter().any(|a| a.name == key) {
            return Err(ToolError::new(
                ErrorCode::ArgumentError,
                format!("{} does not accept argument {key:?}", spec.name),
            )
            .with("arg", key)
            .with("valid", spec.args.iter().map(|a| a.name).collect::<Vec<_>>()));
        }
    }
    for a in spec.args {
        match args.get(a.name) {
            None if a.required => {
                return Err(ToolError::new(
                    ErrorCode::ArgumentError,
                    format!("{} requires argument {:?}", spec.name, a.name),
                )
                .with("arg", a.name)
                .with("missing", true));
            }
            Some(v) if !a.kind.accepts(v) => {
                return Err(ToolError::new(
                    ErrorCode::ArgumentError,
                    format!("{} argument {:?} must be {}", spec.name, a.name, a.kind.name()),
                )
                .with("arg", a.name)
                .with("expected", a.kind.name()));
            }
            _ => {}
        }
    }
    Ok(())
}
