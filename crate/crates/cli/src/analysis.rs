use std::fs;

use dichotomy::bifurcation::{boundary_trace, locate_zeros_on_path, sign_map_2d};
use dichotomy::index::index_report;
use dichotomy::model::{build, parse_config_doc, ProblemSpec, SpaceDoc, Topology};
use dichotomy::report::Report;
use dichotomy::subspaces::frame_field;
use dichotomy::Error;

use crate::artifacts::{ld_curves, sample_table, sign_map, Artifacts};
use crate::{Failure, RunArgs};

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Path,
    Circle,
    Grid,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Path => "path",
            Kind::Circle => "circle",
            Kind::Grid => "grid",
        }
    }

    fn topology(self) -> &'static str {
        match self {
            Kind::Path => "interval",
            Kind::Circle => "circle",
            Kind::Grid => "grid2d",
        }
    }
}

fn load(args: &RunArgs) -> Result<ProblemSpec, Failure> {
    let text = fs::read_to_string(&args.config).map_err(|e| Failure::Io(args.config.clone(), e))?;
    let mut doc = parse_config_doc(&text)?;
    if let Some(t) = args.truncation_time {
        doc.numerics.truncation_time = t;
    }
    if let Some(n) = args.grid {
        match &mut doc.space {
            SpaceDoc::Interval { nodes, .. } | SpaceDoc::Circle { nodes, .. } => *nodes = n,
            SpaceDoc::Grid2d { resolution, .. } => *resolution = n,
        }
    }
    Ok(build(doc)?)
}

pub fn analyse(kind: Kind, spec: &ProblemSpec) -> Result<Artifacts, Failure> {
    let found = spec.space.topology();
    let matches = matches!(
        (kind, found),
        (Kind::Path, Topology::Interval { .. })
            | (Kind::Circle, Topology::Circle)
            | (Kind::Grid, Topology::Grid2d { .. })
    );
    if !matches {
        return Err(Error::Topology {
            expected: kind.topology(),
            found: found.name(),
        }
        .into());
    }

    let field = frame_field(&spec.family, &spec.space, &spec.numerics)?;
    let index = index_report(&spec.family, &field, &spec.numerics)?;
    let mut report = Report::new(kind.name());
    report.config = Some(spec.doc.clone());
    let samples = sample_table(&spec.space, &index);
    let plots = match kind {
        Kind::Path => {
            report.path = Some(locate_zeros_on_path(&spec.family, &field, &spec.numerics)?);
            ld_curves(&index)
        }
        Kind::Circle => ld_curves(&index),
        Kind::Grid => {
            let grid = sign_map_2d(&field, &spec.numerics)?;
            report.boundary = Some(boundary_trace(&grid, &spec.space)?);
            let plots = sign_map(&spec.space, &grid);
            report.grid = Some(grid);
            plots
        }
    };
    report.index = Some(index);
    Ok(Artifacts {
        report,
        samples: Some(samples),
        plots,
    })
}

fn summary(report: &Report) -> Vec<String> {
    let mut lines = Vec::new();
    if let Some(index) = &report.index {
        lines.push(format!(
            "{} nodes, topology {}",
            index.samples.len(),
            index.topology
        ));
        for p in &index.parity {
            let psi = p
                .psi
                .map_or("undefined (non-transversal endpoint)".to_string(), |v| {
                    v.to_string()
                });
            lines.push(format!("parity psi({}, {}) = {psi}", p.a, p.b));
        }
        if let Some(iota) = index.iota {
            lines.push(format!("iota = {iota}"));
        }
        if let (Some(s), Some(u)) = (index.stable_holonomy, index.unstable_holonomy) {
            lines.push(format!("stable holonomy sign {} (w1 = {})", s.sign, s.w1));
            lines.push(format!("unstable holonomy sign {} (w1 = {})", u.sign, u.w1));
        }
        if let Some(c) = index.pejsachowicz_class {
            lines.push(format!("pejsachowicz class = {c}"));
        }
    }
    if let Some(path) = &report.path {
        lines.push(format!("zeros: {}", path.zeros.len()));
        for z in &path.zeros {
            lines.push(format!(
                "  lambda* = {:.12} (bracket width {:.1e}, |LD| {:.1e}, margin {:.1e})",
                z.lambda,
                z.bracket.1 - z.bracket.0,
                z.residual,
                z.margin
            ));
        }
        if !path.candidates.is_empty() {
            lines.push(format!(
                "candidates without sign change: {:?}",
                path.candidates
            ));
        }
    }
    if let Some(g) = &report.grid {
        lines.push(format!(
            "sign components: {} positive, {} negative; zero nodes {} in {} component(s)",
            g.positive_components,
            g.negative_components,
            g.zero_nodes.len(),
            g.zero_components
        ));
        lines.push(format!("disconnects: {}", g.disconnects));
    }
    if let Some(b) = &report.boundary {
        lines.push(format!("boundary sign changes: {}", b.len()));
        for c in b {
            lines.push(format!("  at angle {:.4} ({:?})", c.angle, c.semicircle));
        }
    }
    lines
}

pub fn run(kind: Kind, args: &RunArgs) -> Result<(), Failure> {
    let spec = load(args)?;
    let artifacts = analyse(kind, &spec)?;
    if let Some(dir) = &args.output {
        artifacts.write(dir)?;
    }
    if args.json {
        print!("{}", artifacts.report.to_json());
    } else {
        for line in summary(&artifacts.report) {
            println!("{line}");
        }
    }
    Ok(())
}
