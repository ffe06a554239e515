use std::path::{Path, PathBuf};

use clap::{Subcommand, ValueEnum};
use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value,
};
use magnitude_core::manifest::RunManifest;
use magnitude_core::symbol::{
    expectation_expansion, homogeneity_check, is_identity, parametrix, parity_vanishing_check,
    reduce_two_variable, symbol_product, Bindings, GaussRat, Manifold, PolyhomSymbol, TwoVariableSymbol,
};
use magnitude_core::{Error, Result};
use serde_json::json;

use super::commands::{emit, write_json};

#[derive(Subcommand, Debug)]
pub(crate) enum SymbolCommand {
    /// Composition `a ∘ b` down to a cutoff degree.
    Product {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        cutoff: i32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parametrix down to a cutoff degree, optionally checked against the input.
    Parametrix {
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        cutoff: i32,
        /// Also report whether `a ∘ b` is the identity as far as it is determined.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Declared against measured homogeneity degree of every term.
    Homogeneity {
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parity under `ξ ↦ -ξ` and values at `ξ = 0`.
    Parity {
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a boundary-layer two-variable symbol to the base point.
    Reduce {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Order of the Taylor jet of the boundary graph.
        #[arg(long, default_value_t = 2)]
        jet: u32,
        /// Radial kernel coefficients `c_q`, comma separated (`1,-1/2,0`).
        #[arg(long, allow_hyphen_values = true)]
        coeffs: String,
        /// Degree of the `q = 0` kernel term.
        #[arg(long, allow_hyphen_values = true)]
        d0: i32,
        #[arg(long, value_enum, default_value_t = Layer::Plain)]
        layer: Layer,
        /// Lowest degree kept.
        #[arg(long, allow_hyphen_values = true)]
        target: i32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coefficients `a_k` of the large-`R` expansion of the expectation.
    Expectation {
        #[arg(long)]
        symbol: PathBuf,
        /// `circle:r` or `torus:r1,r2`.
        #[arg(long, default_value = "circle:1")]
        manifold: String,
        #[arg(long = "k-max", default_value_t = 4)]
        k_max: u32,
        /// Scalar binding `name=expr` in `theta` (circle) or `theta1`, `theta2`.
        #[arg(long = "bind")]
        bind: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub(crate) enum Layer {
    /// `b0`
    Plain,
    /// `b1 + (ξ·∇S(x)) b0`
    X,
    /// `b1 + (ξ·∇S(y)) b0`
    Y,
    /// both sides
    Xy,
}

fn read_symbol(path: &Path) -> Result<PolyhomSymbol> {
    PolyhomSymbol::from_json(&std::fs::read_to_string(path)?)
}

fn parse_manifold(s: &str) -> Result<Manifold> {
    let bad = || Error::InvalidInput(format!("bad manifold `{s}`: expected circle:r or torus:r1,r2"));
    let (kind, radii) = s.split_once(':').unwrap_or((s, "1"));
    let radii: Vec<f64> = radii
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match (kind, radii.as_slice()) {
        ("circle", [r]) => Ok(Manifold::Circle { radius: *r }),
        ("torus" | "torus2", [r]) => Ok(Manifold::Torus2 { r1: *r, r2: *r }),
        ("torus" | "torus2", [r1, r2]) => Ok(Manifold::Torus2 { r1: *r1, r2: *r2 }),
        _ => Err(bad()),
    }
}

const FUNCTIONS: [&str; 10] = ["sin", "cos", "tan", "exp", "ln", "sqrt", "abs", "sinh", "cosh", "tanh"];

/// Prefixes bare calls such as `cos(` with the `math::` namespace.
fn qualify_functions(expr: &str) -> String {
    let mut out = String::with_capacity(expr.len() + 16);
    let mut ident = String::new();
    let mut chars = expr.chars().peekable();
    let flush = |ident: &mut String, out: &mut String, call: bool| {
        let qualified = call && FUNCTIONS.contains(&ident.as_str()) && !out.ends_with("::");
        if qualified {
            out.push_str("math::");
        }
        out.push_str(ident);
        ident.clear();
    };
    while let Some(c) = chars.next() {
        if c.is_alphanumeric() || c == '_' {
            ident.push(c);
            if !chars.peek().is_some_and(|n| n.is_alphanumeric() || *n == '_') {
                let call = chars.peek() == Some(&'(');
                flush(&mut ident, &mut out, call);
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn compile_binding(expr: &str, vars: &'static [&'static str]) -> Result<Box<dyn Fn(&[f64]) -> f64 + Sync>> {
    let node: Node<DefaultNumericTypes> = build_operator_tree(&qualify_functions(expr))
        .map_err(|e| Error::InvalidInput(format!("binding `{expr}`: {e}")))?;
    let eval = move |x: &[f64]| -> std::result::Result<f64, String> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        ctx.set_value("pi".into(), Value::Float(std::f64::consts::PI))
            .map_err(|e| e.to_string())?;
        for (name, v) in vars.iter().zip(x) {
            ctx.set_value((*name).into(), Value::Float(*v)).map_err(|e| e.to_string())?;
        }
        node.eval_number_with_context(&ctx).map_err(|e| e.to_string())
    };
    // fail early on unknown variables or functions
    eval(&vec![0.0; vars.len()]).map_err(|e| Error::InvalidInput(format!("binding `{expr}`: {e}")))?;
    Ok(Box::new(move |x| eval(x).unwrap_or(f64::NAN)))
}

fn bindings(specs: &[String], manifold: Manifold) -> Result<Bindings<'static>> {
    let vars: &'static [&'static str] = match manifold {
        Manifold::Circle { .. } => &["theta"],
        Manifold::Torus2 { .. } => &["theta1", "theta2"],
    };
    specs
        .iter()
        .map(|s| {
            let (name, expr) = s
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("binding `{s}` is not name=expr")))?;
            Ok((name.trim().to_string(), compile_binding(expr, vars)?))
        })
        .collect()
}

pub(crate) fn run(cmd: SymbolCommand) -> Result<()> {
    match cmd {
        SymbolCommand::Product { a, b, cutoff, out } => {
            let c = symbol_product(&read_symbol(&a)?, &read_symbol(&b)?, cutoff)?;
            let m = RunManifest::new("symbol product", 0).param("a", &a).param("b", &b).param("cutoff", cutoff);
            emit(out.as_deref(), m, |w| write_json(w, &c))
        }
        SymbolCommand::Parametrix { symbol, cutoff, check, out } => {
            let a = read_symbol(&symbol)?;
            let b = parametrix(&a, cutoff)?;
            let m = RunManifest::new("symbol parametrix", 0).param("symbol", &symbol).param("cutoff", cutoff);
            if check {
                // b is known down to `cutoff`, so a ∘ b down to `cutoff + ord a`
                let product_cutoff = cutoff + a.order();
                let ok = is_identity(&symbol_product(&a, &b, product_cutoff)?);
                eprintln!("a ∘ b = 1 down to degree {product_cutoff}: {ok}");
                emit(out.as_deref(), m, |w| write_json(w, &json!({ "parametrix": b, "identity": ok })))
            } else {
                emit(out.as_deref(), m, |w| write_json(w, &b))
            }
        }
        SymbolCommand::Homogeneity { symbol, out } => {
            let rep = homogeneity_check(&read_symbol(&symbol)?);
            if !rep.all_pass {
                eprintln!("{} terms fail the homogeneity check", rep.terms.iter().filter(|t| !t.pass).count());
            }
            let m = RunManifest::new("symbol homogeneity", 0).param("symbol", &symbol);
            emit(out.as_deref(), m, |w| write_json(w, &rep))
        }
        SymbolCommand::Parity { symbol, out } => {
            let rep = parity_vanishing_check(&read_symbol(&symbol)?);
            let m = RunManifest::new("symbol parity", 0).param("symbol", &symbol);
            emit(out.as_deref(), m, |w| write_json(w, &rep))
        }
        SymbolCommand::Reduce { dim, jet, coeffs, d0, layer, target, out } => {
            let coeffs: Vec<GaussRat> = coeffs.split(',').map(str::parse).collect::<Result<_>>()?;
            let base = TwoVariableSymbol::constant(dim, jet, GaussRat::one())?;
            let (x_side, y_side) = match layer {
                Layer::Plain => (false, false),
                Layer::X => (true, false),
                Layer::Y => (false, true),
                Layer::Xy => (true, true),
            };
            let reduced = reduce_two_variable(&base.layer_symbol(&coeffs, d0, x_side, y_side), target)?;
            let parity = parity_vanishing_check(&reduced);
            eprintln!("odd terms vanish at xi = 0: {}", parity.odd_terms_vanish);
            let m = RunManifest::new("symbol reduce", 0)
                .param("dim", dim)
                .param("jet", jet)
                .param("coeffs", &coeffs)
                .param("d0", d0)
                .param("layer", format!("{layer:?}").to_lowercase())
                .param("target", target);
            emit(out.as_deref(), m, |w| write_json(w, &json!({ "symbol": reduced, "parity": parity })))
        }
        SymbolCommand::Expectation { symbol, manifold, k_max, bind, out } => {
            let sym = read_symbol(&symbol)?;
            let manifold = parse_manifold(&manifold)?;
            let a = expectation_expansion(&sym, manifold, k_max, &bindings(&bind, manifold)?)?;
            let coefficients: Vec<_> = a
                .iter()
                .enumerate()
                .map(|(k, c)| json!({ "k": k, "power": sym.order() - k as i32, "re": c.re, "im": c.im }))
                .collect();
            let m = RunManifest::new("symbol expectation", 0)
                .param("symbol", &symbol)
                .param("manifold", manifold)
                .param("k_max", k_max)
                .param("bindings", &bind);
            let doc = json!({ "manifold": manifold, "order": sym.order(), "coefficients": coefficients });
            emit(out.as_deref(), m, |w| write_json(w, &doc))
        }
    }
}
