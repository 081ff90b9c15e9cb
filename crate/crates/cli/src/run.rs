use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use endohyp::hyperbolic::verify_hyperbolic;
use endohyp::natural_extension::grow_preimage_tree;
use endohyp::spectral::*;
use endohyp::{Endomorphism, Manifold, Model, Point};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::render::{basins_pgm, cells_pgm, RenderError};
use crate::report::{GridSummary, Report, SetRecord};
use crate::Command;

/// Refinements at which graph smoothness is compared.
pub const SMOOTHNESS_REFINEMENTS: [usize; 2] = [1 << 7, 1 << 10];
const INJECTIVITY_POINTS: usize = 200;
const HYPERBOLIC_BRANCHES: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("budget exceeded: {0}")]
    Budget(endohyp::Error),
    #[error(transparent)]
    Core(endohyp::Error),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<endohyp::Error> for RunError {
    fn from(e: endohyp::Error) -> Self {
        match e {
            endohyp::Error::BudgetExceeded { .. } | endohyp::Error::NonconvergentAtBudget { .. } => {
                RunError::Budget(e)
            }
            e => RunError::Core(e),
        }
    }
}

/// A finished run: the report and the files that go next to it.
pub struct Output {
    pub report: Report,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn new(report: Report) -> Self {
        Output {
            report,
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: String, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    /// Write all files and the report in one pass.
    pub fn write(mut self, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| RunError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        self.files.sort_by(|a, b| a.0.cmp(&b.0));
        self.report.files = self.files.iter().map(|f| f.0.clone()).collect();
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(io(&path))?;
            written.push(path);
        }
        let mut json = serde_json::to_string_pretty(&self.report).expect("report serializes");
        json.push('\n');
        let path = dir.join("report.json");
        std::fs::write(&path, json).map_err(io(&path))?;
        written.push(path);
        Ok(written)
    }
}

struct Analysis {
    f: Endomorphism,
    grid: BoxGrid,
    graph: TransitionGraph,
    recurrent: CellSet,
    sets: Vec<BasicSetApprox>,
}

impl Analysis {
    fn new(cfg: &RunConfig) -> Result<Self, RunError> {
        let f = cfg.endomorphism();
        let grid = BoxGrid::new(f.manifold(), cfg.grid)?;
        let graph = build_transition_graph_with(&f, &grid, cfg.samples_per_cell, cfg.bloat)?;
        let recurrent = chain_recurrent_cells(&graph);
        let sets = decompose_basic_sets(&graph, &recurrent, &sampling(cfg));
        Ok(Analysis {
            f,
            grid,
            graph,
            recurrent,
            sets,
        })
    }

    fn summary(&self) -> GridSummary {
        GridSummary {
            manifold: self.grid.manifold(),
            subdivisions: self.grid.subdivisions(),
            cells: self.grid.cell_count(),
            edges: self.graph.edge_count(),
            recurrent_cells: self.recurrent.len(),
        }
    }

    fn renderable(&self) -> bool {
        matches!(self.grid.manifold(), Manifold::Torus(2) | Manifold::Sphere)
    }

    /// Recurrent set and one image per basic set, when the grid can be drawn.
    fn add_cell_images(&self, out: &mut Output) -> Result<(), RunError> {
        if !self.renderable() {
            return Ok(());
        }
        out.add("recurrent.pgm".into(), cells_pgm(&self.recurrent, &self.grid)?);
        for s in &self.sets {
            out.add(format!("set_{}.pgm", s.id), cells_pgm(&s.cells, &self.grid)?);
        }
        Ok(())
    }
}

fn sampling(cfg: &RunConfig) -> SamplingOptions {
    SamplingOptions {
        depth: cfg.depth,
        seed: cfg.seed,
        type_samples: cfg.type_samples,
    }
}

fn record(s: &BasicSetApprox) -> SetRecord {
    SetRecord {
        id: s.id,
        cells: s.len(),
        type_uv: s.type_uv,
        type_vote: s.type_vote.clone(),
        classification: s.classification,
        attractor: None,
        repeller: None,
        metric_expansion: Vec::new(),
        derivative_expansion: None,
        hyperbolicity: None,
        injectivity_scale: None,
        purity: None,
        smoothness: Vec::new(),
        errors: Vec::new(),
    }
}

fn keep<T>(rec: &mut SetRecord, op: &str, r: endohyp::Result<T>) -> Option<T> {
    r.map_err(|e| rec.errors.push(format!("{op}: {e}"))).ok()
}

fn expansion(a: &Analysis, cfg: &RunConfig, s: &BasicSetApprox, rec: &mut SetRecord) {
    rec.metric_expansion = cfg
        .eps
        .iter()
        .map(|&eps| verify_expanding_metric(&a.f, &a.grid, s, eps, cfg.pairs, cfg.seed))
        .collect();
    if s.type_uv.is_some_and(|(u, _)| u > 0) {
        rec.derivative_expansion = keep(
            rec,
            "verify_expanding_derivative",
            verify_expanding_derivative(&a.f, &a.grid, s, cfg.depth, cfg.horizon, cfg.seed),
        );
    }
}

fn smoothness(a: &Analysis, s: &BasicSetApprox, rec: &mut SetRecord) {
    let reports: endohyp::Result<Vec<SmoothnessReport>> = match a.f.model() {
        Model::Product { .. } | Model::ForcedCircle { .. } if s.type_uv == Some((1, 1)) => SMOOTHNESS_REFINEMENTS
            .iter()
            .map(|&n| attractor_smoothness(&a.f, &a.grid, s, n))
            .collect(),
        Model::Quadratic { .. } if s.type_uv == Some((2, 0)) => SMOOTHNESS_REFINEMENTS
            .iter()
            .map(|&n| julia_polar_smoothness(&a.f, n))
            .collect(),
        _ => return,
    };
    rec.smoothness = keep(rec, "smoothness", reports).unwrap_or_default();
}

fn classify_set(a: &Analysis, cfg: &RunConfig, s: &BasicSetApprox) -> SetRecord {
    let mut rec = record(s);
    let att = keep(
        &mut rec,
        "classify_attractor",
        classify_attractor(&a.f, &a.grid, s, &cfg.eps, cfg.depth, cfg.n_test, cfg.seed),
    );
    let rep = classify_repeller(&a.graph, s, cfg.fattening);
    rec.classification = match &att {
        Some(r) if r.is_attractor() => Classification::Attractor,
        _ if rep.repeller => Classification::Repeller,
        Some(r) => r.verdict,
        None => Classification::Inconclusive,
    };
    rec.attractor = att;
    rec.repeller = Some(rep);
    expansion(a, cfg, s, &mut rec);
    rec.injectivity_scale = keep(
        &mut rec,
        "injectivity_scale",
        injectivity_scale(&a.f, &a.grid, s, INJECTIVITY_POINTS, cfg.seed),
    );
    rec.purity = Some(check_preimage_purity(&a.f, &a.grid, s, cfg.fattening, cfg.seed));
    smoothness(a, s, &mut rec);
    rec
}

fn point_cells(p: &Point) -> Vec<String> {
    if p.is_infinite() {
        return vec!["inf".into(), "inf".into()];
    }
    p.coords()[..p.dim()].iter().map(|x| x.to_string()).collect()
}

fn coordinate_header(m: Manifold) -> String {
    match m {
        Manifold::Sphere => "re,im".into(),
        m => (0..m.dim()).map(|i| format!("x{i}")).collect::<Vec<_>>().join(","),
    }
}

fn start_point(cfg: &RunConfig, f: &Endomorphism) -> Point {
    cfg.point.unwrap_or_else(|| match f.manifold() {
        Manifold::Sphere => Point::finite(num_complex::Complex64::new(0.0, 0.0)),
        m => Point::on_torus(&vec![0.0; m.dim()]).expect("origin of a torus"),
    })
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Output, RunError> {
    let mut out = Output::new(Report::new(cmd.name(), cfg));
    match cmd {
        Command::Orbit => {
            let f = cfg.endomorphism();
            let mut csv = format!("step,{}\n", coordinate_header(f.manifold()));
            for (i, p) in f.orbit(&start_point(cfg, &f), cfg.iterations).iter().enumerate() {
                writeln!(csv, "{i},{}", point_cells(p).join(",")).unwrap();
            }
            out.add("orbit.csv".into(), csv.into_bytes());
        }
        Command::Preimages => {
            let f = cfg.endomorphism();
            let tree = grow_preimage_tree(&f, &start_point(cfg, &f), cfg.tree_depth)?;
            let mut csv = format!("level,index,parent,{}\n", coordinate_header(f.manifold()));
            writeln!(csv, "0,0,,{}", point_cells(tree.root()).join(",")).unwrap();
            for level in 0..tree.depth() {
                let mut index = 0;
                for parent in 0..tree.level(level).len() {
                    for p in tree.children(level, parent) {
                        writeln!(csv, "{},{index},{parent},{}", level + 1, point_cells(&p).join(",")).unwrap();
                        index += 1;
                    }
                }
            }
            out.add("preimages.csv".into(), csv.into_bytes());
        }
        Command::Spectral => {
            let a = Analysis::new(cfg)?;
            out.report.grid = Some(a.summary());
            out.report.sets = a.sets.iter().map(record).collect();
            a.add_cell_images(&mut out)?;
        }
        Command::Classify => {
            let a = Analysis::new(cfg)?;
            out.report.grid = Some(a.summary());
            out.report.sets = a.sets.iter().map(|s| classify_set(&a, cfg, s)).collect();
            out.report.axiom_a = Some(verify_axiom_a(&a.graph, &a.sets, cfg.max_period, &sampling(cfg)));
            a.add_cell_images(&mut out)?;
        }
        Command::VerifyExpanding => {
            let a = Analysis::new(cfg)?;
            out.report.grid = Some(a.summary());
            out.report.sets = a
                .sets
                .iter()
                .map(|s| {
                    let mut rec = record(s);
                    expansion(&a, cfg, s, &mut rec);
                    let branches = in_set_branches(&a.f, &a.grid, &s.cells, HYPERBOLIC_BRANCHES, cfg.depth, cfg.seed);
                    rec.hyperbolicity = keep(&mut rec, "verify_hyperbolic", verify_hyperbolic(&a.f, &branches, cfg.horizon));
                    rec
                })
                .collect();
        }
        Command::AxiomA => {
            let a = Analysis::new(cfg)?;
            out.report.grid = Some(a.summary());
            out.report.sets = a.sets.iter().map(record).collect();
            out.report.axiom_a = Some(verify_axiom_a(&a.graph, &a.sets, cfg.max_period, &sampling(cfg)));
        }
        Command::Render => {
            let a = Analysis::new(cfg)?;
            if !a.renderable() {
                return Err(RenderError::UnsupportedManifold(a.grid.manifold()).into());
            }
            out.report.grid = Some(a.summary());
            out.report.sets = a.sets.iter().map(record).collect();
            a.add_cell_images(&mut out)?;
            if cfg.basins {
                let basin: Vec<Option<usize>> = (0..a.grid.cell_count())
                    .into_par_iter()
                    .map(|c| {
                        let x = a.grid.cell_center(c);
                        omega_limit(&a.f, &a.grid, &x, &a.sets, cfg.burn_in, cfg.budget).ok()
                    })
                    .collect();
                out.add("basins.pgm".into(), basins_pgm(&basin, a.sets.len(), &a.grid)?);
            }
        }
    }
    Ok(out)
}
