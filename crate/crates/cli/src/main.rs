//! `guidesmith`: build a closed surgical template from an anatomy STL, a
//! contour file and an optional axis file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use guidesmith::contour::{format_control_points, parse_control_points};
use guidesmith::fixtures;
use guidesmith::mesh::{mesh_from_stl, save_stl, StlFormat};
use guidesmith::pipeline::{generate_template, TemplateParams, DEFAULT_SAMPLING_STEP};
use guidesmith::tube::{format_axes, parse_axes, DEFAULT_TUBE_SEGMENTS};
use guidesmith::offset::DEFAULT_K_NEIGHBORS;
use guidesmith::{Point3, TriangleMesh};

#[derive(Debug, Parser)]
#[command(name = "guidesmith", version, about = "Generate a surgical template from an anatomy mesh")]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    generate: Generate,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic test meshes, contours and axes to a directory.
    Fixtures {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Generate {
    /// Anatomy surface (binary or ASCII STL).
    #[arg(long, required = true)]
    mesh: Option<PathBuf>,
    /// Control points, one `x y z` per line.
    #[arg(long, required = true)]
    contour: Option<PathBuf>,
    /// Drill axes, one `ex ey ez dx dy dz inner_r outer_r length` per line.
    #[arg(long)]
    axes: Option<PathBuf>,
    /// Template thickness in mm.
    #[arg(long, required = true)]
    thickness: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SAMPLING_STEP)]
    sampling_step: usize,
    /// Distance grid spacing in mm [default: thickness / 4].
    #[arg(long)]
    spacing: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_K_NEIGHBORS)]
    k_neighbors: usize,
    #[arg(long, default_value_t = DEFAULT_TUBE_SEGMENTS)]
    segments: usize,
    /// Weld tolerance for the input STL in mm.
    #[arg(long, default_value_t = guidesmith::mesh::DEFAULT_WELD_EPSILON)]
    weld_epsilon: f64,
    /// A point on the side of the contour to keep, as `x,y,z`.
    #[arg(long, value_parser = parse_point)]
    seed: Option<Point3>,
    /// Output STL (binary).
    #[arg(long, required = true)]
    out: Option<PathBuf>,
    /// Write the per-stage timing report here.
    #[arg(long)]
    timings: Option<PathBuf>,
    /// Write the sampled distance field here.
    #[arg(long)]
    dump_field: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<Point3, String> {
    let v: Vec<f64> = s.split(',').map(|c| c.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Point3::new(x, y, z)),
        _ => Err(format!("expected three finite numbers `x,y,z`, got `{s}`")),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("reading {}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, String> {
    String::from_utf8(read(path)?).map_err(|e| format!("reading {}: {e}", path.display()))
}

fn run_generate(g: Generate) -> Result<(), String> {
    let (Some(mesh_path), Some(contour_path), Some(thickness), Some(out)) = (g.mesh, g.contour, g.thickness, g.out) else {
        unreachable!("clap enforces required flags");
    };
    let params = TemplateParams {
        sampling_step: g.sampling_step,
        spacing: g.spacing,
        k_neighbors: g.k_neighbors,
        tube_segments: g.segments,
        weld_epsilon: g.weld_epsilon,
        seed: g.seed,
        field_dump: g.dump_field,
        ..TemplateParams::new(thickness)
    };
    let mesh = mesh_from_stl(&read(&mesh_path)?, params.weld_epsilon).map_err(|e| format!("mesh {}: {e}", mesh_path.display()))?;
    let controls = parse_control_points(&read_text(&contour_path)?).map_err(|e| format!("contour {}: {e}", contour_path.display()))?;
    let axes = match &g.axes {
        Some(p) => parse_axes(&read_text(p)?).map_err(|e| format!("axes {}: {e}", p.display()))?,
        None => Vec::new(),
    };
    let template = generate_template(&mesh, &controls, &params, &axes).map_err(|e| e.to_string())?;
    save_stl(&template.mesh, &out, StlFormat::Binary).map_err(|e| format!("writing {}: {e}", out.display()))?;
    if let Some(path) = &g.timings {
        std::fs::write(path, template.timings.report()).map_err(|e| format!("writing {}: {e}", path.display()))?;
    }
    Ok(())
}

fn write_fixtures(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    let meshes: [(&str, TriangleMesh); 5] = [
        ("dome.stl", fixtures::dome(10.0, 24, 96)),
        ("hemisphere.stl", fixtures::open_hemisphere(10.0, 24, 96)),
        ("sphere.stl", fixtures::icosphere(10.0, 4)),
        ("plate.stl", fixtures::slab(Point3::new(-10.0, -10.0, 0.0), Point3::new(10.0, 10.0, 2.0), 20)),
        ("saddle.stl", fixtures::saddle(40, 20.0)),
    ];
    for (name, m) in &meshes {
        let path = dir.join(name);
        save_stl(m, &path, StlFormat::Binary).map_err(|e| format!("writing {}: {e}", path.display()))?;
    }
    let texts = [
        ("dome_contour.txt", format_control_points(&fixtures::latitude_circle(10.0, 40.0, 8))),
        ("dome_axes_1.txt", format_axes(&fixtures::dome_axes(10.0, 1))),
        ("dome_axes_2.txt", format_axes(&fixtures::dome_axes(10.0, 2))),
    ];
    for (name, text) in texts {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| format!("writing {}: {e}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Fixtures { out_dir }) => write_fixtures(&out_dir),
        None => run_generate(cli.generate),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
