//! End-to-end template generation with per-stage timings.

use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::boolean::{merge_tubes, BooleanError};
use crate::contour::{default_density, project_to_surface, resample_spline, validate_loop, ContourError, ContourLoop};
use crate::geometry::Point3;
use crate::mesh::{is_closed, MeshError, TriangleMesh, DEFAULT_WELD_EPSILON};
use crate::offset::{
    build_distance_field_clamped, clip_outer_surface, marching_cubes, project_border_points, OffsetError, OffsetParams,
    DEFAULT_K_NEIGHBORS, DEFAULT_MAX_SAMPLES,
};
use crate::ruled::{connect_shells, RuledError};
use crate::segmentation::{segment, SegmentationError};
use crate::tube::{DrillAxis, TubeError, DEFAULT_TUBE_SEGMENTS};

pub const DEFAULT_SAMPLING_STEP: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateParams {
    /// Template thickness in millimeters.
    pub thickness: f64,
    /// Stride over inner border vertices when projecting to the offset.
    pub sampling_step: usize,
    /// Distance grid spacing; `None` means `thickness / 4`.
    pub spacing: Option<f64>,
    pub k_neighbors: usize,
    pub tube_segments: usize,
    /// Used when the anatomy mesh is read from STL.
    pub weld_epsilon: f64,
    /// Point on the side of the contour to keep.
    pub seed: Option<Point3>,
    /// Cap on distance grid samples.
    pub max_samples: usize,
    /// Where to write the sampled distance field, if anywhere.
    pub field_dump: Option<PathBuf>,
}

impl TemplateParams {
    pub fn new(thickness: f64) -> Self {
        TemplateParams {
            thickness,
            sampling_step: DEFAULT_SAMPLING_STEP,
            spacing: None,
            k_neighbors: DEFAULT_K_NEIGHBORS,
            tube_segments: DEFAULT_TUBE_SEGMENTS,
            weld_epsilon: DEFAULT_WELD_EPSILON,
            seed: None,
            max_samples: DEFAULT_MAX_SAMPLES,
            field_dump: None,
        }
    }

    pub fn offset_params(&self) -> OffsetParams {
        let p = OffsetParams::new(self.thickness);
        OffsetParams { max_samples: self.max_samples, ..self.spacing.map_or(p, |s| p.with_spacing(s)) }
    }
}

/// One row of the timing report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    InnerSegmentation,
    Offset,
    BorderPoints,
    OuterSegmentation,
    Connection,
    InitialTemplate,
    Boolean,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::InnerSegmentation => "Inner surface segmentation",
            Stage::Offset => "Offset of inner surface",
            Stage::BorderPoints => "Generation of points for outer surface segmentation",
            Stage::OuterSegmentation => "Outer surface segmentation",
            Stage::Connection => "Connection of inner and outer surfaces",
            Stage::InitialTemplate => "Initial template generation",
            Stage::Boolean => "Runtime of Boolean operation(s)",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Wall-clock time per stage. `boolean` is `None` when no tubes were
/// merged.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub inner_segmentation: Duration,
    pub offset: Duration,
    pub border_points: Duration,
    pub outer_segmentation: Duration,
    pub connection: Duration,
    pub boolean: Option<Duration>,
}

impl StageTimings {
    /// Sum of the five stages that build the initial template.
    pub fn initial_template(&self) -> Duration {
        self.inner_segmentation + self.offset + self.border_points + self.outer_segmentation + self.connection
    }

    pub fn rows(&self) -> Vec<(Stage, Duration)> {
        let mut rows = vec![
            (Stage::InnerSegmentation, self.inner_segmentation),
            (Stage::Offset, self.offset),
            (Stage::BorderPoints, self.border_points),
            (Stage::OuterSegmentation, self.outer_segmentation),
            (Stage::Connection, self.connection),
            (Stage::InitialTemplate, self.initial_template()),
        ];
        if let Some(b) = self.boolean {
            rows.push((Stage::Boolean, b));
        }
        rows
    }

    /// `name<TAB>seconds` per row.
    pub fn report(&self) -> String {
        self.rows().iter().map(|(s, d)| format!("{}\t{:.6}\n", s.name(), d.as_secs_f64())).collect()
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("contour: {0}")]
    Contour(#[from] ContourError),
    #[error("contour validation: {}", messages.join("; "))]
    Validation { messages: Vec<String>, offending: Vec<Point3> },
    #[error("{stage}: {source}")]
    Segmentation { stage: Stage, source: SegmentationError },
    #[error("{stage}: {source}")]
    Offset { stage: Stage, source: OffsetError },
    #[error("Connection of inner and outer surfaces: {0}")]
    Connection(#[from] RuledError),
    #[error("drill axis: {0}")]
    Tube(#[from] TubeError),
    #[error("Runtime of Boolean operation(s): {0}")]
    Boolean(#[from] BooleanError),
    #[error("internal consistency: {0} output is not closed")]
    NotClosed(Stage),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl PipelineError {
    /// The timing-report stage the error belongs to, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Segmentation { stage, .. } | PipelineError::Offset { stage, .. } | PipelineError::NotClosed(stage) => {
                Some(*stage)
            }
            PipelineError::Connection(_) => Some(Stage::Connection),
            PipelineError::Boolean(_) => Some(Stage::Boolean),
            _ => None,
        }
    }

    fn offset(stage: Stage) -> impl FnOnce(OffsetError) -> PipelineError {
        move |source| PipelineError::Offset { stage, source }
    }
}

/// Closed template and the timings that produced it.
#[derive(Debug, Clone)]
pub struct Template {
    pub mesh: TriangleMesh,
    pub timings: StageTimings,
}

/// Resamples the closed spline through `controls`, snaps it onto `mesh`
/// and rejects loops that cross themselves or run next to a hole. The
/// error lists the offending loop points.
pub fn prepare_contour(mesh: &TriangleMesh, controls: &[Point3]) -> Result<ContourLoop, PipelineError> {
    let samples = resample_spline(controls, default_density(mesh))?;
    let projected = project_to_surface(&samples, mesh, None)?;
    let report = validate_loop(&projected, mesh);
    if !report.is_clean() {
        let mut idx: Vec<usize> = report.self_intersections.iter().flat_map(|&(a, b)| [a, b]).collect();
        idx.extend(&report.off_surface);
        idx.extend(&report.near_hole);
        idx.sort_unstable();
        idx.dedup();
        let offending = idx.iter().map(|&i| projected.points[i]).collect();
        return Err(PipelineError::Validation { messages: report.messages(), offending });
    }
    Ok(projected)
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot = start.elapsed();
    out
}

/// Runs every stage: contour, inner cut, distance field and isosurface,
/// border projection and outer cut, shell connection and, for each axis,
/// a tube union. Each axis is first extended one thickness below its entry
/// so the tube pierces the whole template.
pub fn generate_template(
    mesh: &TriangleMesh,
    controls: &[Point3],
    params: &TemplateParams,
    axes: &[DrillAxis],
) -> Result<Template, PipelineError> {
    let offset_params = params.offset_params();
    offset_params.validate().map_err(PipelineError::offset(Stage::Offset))?;
    let axes = axes
        .iter()
        .map(|a| a.validated().map(|a| a.extended_below(params.thickness)))
        .collect::<Result<Vec<_>, _>>()?;
    let contour = prepare_contour(mesh, controls)?;

    let mut t = StageTimings::default();
    let inner = timed(&mut t.inner_segmentation, || segment(mesh, &contour, params.seed))
        .map_err(|source| PipelineError::Segmentation { stage: Stage::InnerSegmentation, source })?;

    let offset = timed(&mut t.offset, || {
        // the isosurface only depends on samples below thickness + spacing
        let clamp = params.thickness + 2.0 * offset_params.spacing;
        let field = build_distance_field_clamped(&inner.region, &offset_params, clamp)?;
        if let Some(path) = &params.field_dump {
            let file = std::fs::File::create(path)?;
            field.write_dump(std::io::BufWriter::new(file))?;
        }
        marching_cubes(&field, params.thickness)
    })
    .map_err(PipelineError::offset(Stage::Offset))?;

    let projected = timed(&mut t.border_points, || {
        project_border_points(&inner.boundary, &inner.region, &offset, params.sampling_step, params.k_neighbors)
    })
    .map_err(PipelineError::offset(Stage::BorderPoints))?;

    let outer = timed(&mut t.outer_segmentation, || clip_outer_surface(&offset, &projected, &inner.region))
        .map_err(PipelineError::offset(Stage::OuterSegmentation))?;

    let body = timed(&mut t.connection, || connect_shells(&inner.region, &outer))?;
    if !is_closed(&body) {
        return Err(PipelineError::NotClosed(Stage::InitialTemplate));
    }
    if axes.is_empty() {
        return Ok(Template { mesh: body, timings: t });
    }

    let mut boolean = Duration::ZERO;
    let merged = timed(&mut boolean, || merge_tubes(&body, &axes, params.tube_segments))?;
    t.boolean = Some(boolean);
    if !is_closed(&merged) {
        return Err(PipelineError::NotClosed(Stage::Boolean));
    }
    Ok(Template { mesh: merged, timings: t })
}
