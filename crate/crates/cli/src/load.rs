use crate::args::GraphArgs;
use crate::{Ctx, Failure};
use ellgraph_core::io;
use ellgraph_core::{EllipticOperator, Family, Potential, Region, VertexFunction, VertexId, WeightRule, WeightedGraph};
use std::path::Path;

type Result<T> = std::result::Result<T, Failure>;

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn read(ctx: &Ctx, p: &Path) -> Result<String> {
    let full = ctx.path(p);
    std::fs::read_to_string(&full).map_err(|e| config(format!("{}: {e}", full.display())))
}

fn with_file<T>(p: &Path, r: ellgraph_core::Result<T>) -> Result<T> {
    r.map_err(|e| {
        let f = Failure::from(e);
        match f {
            Failure::Config(m) => config(format!("{}: {m}", p.display())),
            other => other,
        }
    })
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| config(format!("invalid {what} `{s}`")))
}

pub fn graph(ctx: &Ctx, args: &GraphArgs) -> Result<EllipticOperator> {
    let (kind, rest) = args.graph.split_once(':').unwrap_or(("file", &args.graph));
    let weight = match args.weights.as_deref().map(|w| w.split_once(':').unwrap_or((w, ""))) {
        None => None,
        Some(("const", v)) => Some(Ok(number::<f64>(v, "constant weight")?)),
        Some(("file", p)) => Some(Err(Path::new(p))),
        Some(_) => return Err(config(format!("--weights: expected `const:<v>` or `file:<path>`, got `{}`", args.weights.as_deref().unwrap_or("")))),
    };
    let mut g = match kind {
        "lattice" | "tree" => {
            let family = if kind == "lattice" {
                Family::Lattice { dim: number(rest, "lattice dimension")? }
            } else {
                Family::RegularTree { degree: number(rest, "tree degree")? }
            };
            let rule = match weight {
                None => WeightRule::Constant(1.0),
                Some(Ok(v)) => WeightRule::Constant(v),
                Some(Err(_)) => return Err(config("--weights file:<path> applies to finite graphs only")),
            };
            WeightedGraph::generated(family, rule)?
        }
        "file" => {
            let p = Path::new(rest);
            let g = with_file(p, io::parse_edge_list(&read(ctx, p)?))?;
            match weight {
                None => g,
                Some(Ok(v)) => {
                    let all: Vec<_> = g.edges().map(|(x, y, _)| (x.index(), y.index(), v)).collect();
                    g.with_weight_overrides(all)?
                }
                Some(Err(wp)) => with_file(wp, io::apply_weight_file(g, &read(ctx, wp)?))?,
            }
        }
        other => return Err(config(format!("--graph: unknown kind `{other}` (expected lattice, tree or file)"))),
    };
    if !g.is_finite() {
        g.expand(g.origin())?;
    }
    let potential = match &args.potential {
        Some(p) => with_file(p, io::parse_potential(&read(ctx, p)?))?,
        None => Potential::zero(),
    };
    Ok(EllipticOperator::new(g, potential)?)
}

pub fn vertex(op: &EllipticOperator, id: usize, what: &str) -> Result<VertexId> {
    let v = VertexId(id);
    if op.graph().contains(v) {
        Ok(v)
    } else {
        Err(config(format!("--{what}: unknown vertex {id}")))
    }
}

pub fn region(op: &mut EllipticOperator, spec: &str) -> Result<Region> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "all" => {
            if !op.graph().is_finite() {
                return Err(config("--region all needs a finite graph"));
            }
            let vs: Vec<VertexId> = op.graph().vertices().collect();
            Ok(op.graph_mut().region(vs)?)
        }
        "ball" => {
            let (c, r) = rest.split_once(':').ok_or_else(|| config("--region ball:<center>:<radius>"))?;
            let c = vertex(op, number(c, "ball center")?, "region")?;
            Ok(op.graph_mut().ball(c, number(r, "ball radius")?)?)
        }
        "vertices" => {
            let ids: Vec<usize> = rest.split(',').map(|s| number(s, "vertex id")).collect::<Result<_>>()?;
            let vs: Vec<VertexId> = ids.into_iter().map(|i| vertex(op, i, "region")).collect::<Result<_>>()?;
            Ok(op.graph_mut().region(vs)?)
        }
        _ => Err(config(format!("--region: expected all, ball:<c>:<r> or vertices:<ids>, got `{spec}`"))),
    }
}

/// `a..b` (inclusive) or a comma list.
pub fn levels(spec: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = spec.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (usize, usize) = (number(a, "level")?, number(b, "level")?);
        if a > b {
            return Err(config(format!("--levels: empty range `{spec}`")));
        }
        Ok((a..=b).collect())
    } else {
        spec.split(',').map(|s| number(s, "level")).collect()
    }
}

pub fn reals(spec: &str, what: &str) -> Result<Vec<f64>> {
    spec.split(',').map(|s| number(s, what)).collect()
}

/// `<x> <value>` lines, in the potential file format.
pub fn function(ctx: &Ctx, p: &Path) -> Result<VertexFunction> {
    let pot = with_file(p, io::parse_potential(&read(ctx, p)?))?;
    let (domain, values): (Vec<VertexId>, Vec<f64>) = pot.explicit_values().unzip();
    Ok(VertexFunction::new(domain, values)?)
}
