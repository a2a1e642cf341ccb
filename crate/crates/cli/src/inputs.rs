//! Structure and model inputs: germ files or `builtin:NAME[:SEED]` generators.

use std::path::Path;
use std::sync::Arc;

use germforge::fields::germ_file::{GermFile, GermKind};
use germforge::fields::{
    standard_metric, ConnectionField, EndoField, MetricField, OneFormField, PolynomialField, StructureKind,
};
use germforge::fixtures;
use germforge::jets::Variance::Co;
use germforge::models::{null_para_frame, random_para_kahler_model, random_riemannian_model, xi, CurvatureModel, ModelFile};

use crate::{Common, Failure};

/// Amplitude of the seeded random structures (coefficient bound at degree ≤ 4).
pub const AMPLITUDE: f64 = 0.1;

pub const BUILTINS: &str = "flat, random, hermitian, conformal, kahler, structure, connection";

/// Everything supplied for one role (input, germ or host).
#[derive(Default, Clone)]
pub struct Structures {
    pub metric: Option<MetricField>,
    /// Polynomial form of the metric, when known (needed by Kähler transplants).
    pub metric_poly: Option<PolynomialField>,
    pub endo: Option<EndoField>,
    pub connection: Option<ConnectionField>,
    pub one_form: Option<OneFormField>,
}

impl Structures {
    pub fn dim(&self) -> Option<usize> {
        self.metric
            .as_ref()
            .map(|g| g.dim())
            .or_else(|| self.endo.as_ref().map(|j| j.dim()))
            .or_else(|| self.connection.as_ref().map(|c| c.dim()))
    }

    pub fn require_metric(&self, role: &str) -> Result<&MetricField, Failure> {
        self.metric.as_ref().ok_or_else(|| Failure::Input(format!("{role} needs a metric")))
    }

    pub fn require_endo(&self, role: &str) -> Result<&EndoField, Failure> {
        self.endo.as_ref().ok_or_else(|| Failure::Input(format!("{role} needs an endomorphism (J) structure")))
    }

    fn set_metric(&mut self, g: MetricField, poly: Option<PolynomialField>) -> Result<(), Failure> {
        if self.metric.is_some() {
            return Err(Failure::Input("more than one metric supplied for the same role".into()));
        }
        self.metric = Some(g);
        self.metric_poly = poly;
        Ok(())
    }

    fn set<T>(slot: &mut Option<T>, v: T, what: &str) -> Result<(), Failure> {
        if slot.is_some() {
            return Err(Failure::Input(format!("more than one {what} supplied for the same role")));
        }
        *slot = Some(v);
        Ok(())
    }
}

pub fn parse_signature(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Input(format!("--signature expects `p,q`, got {s:?}"));
    let (p, q) = s.split_once(',').ok_or_else(bad)?;
    let p: usize = p.trim().parse().map_err(|_| bad())?;
    let q: usize = q.trim().parse().map_err(|_| bad())?;
    if p + q == 0 {
        return Err(bad());
    }
    Ok((p, q))
}

pub fn parse_structure(s: &str) -> Result<StructureKind, Failure> {
    match s {
        "complex" => Ok(StructureKind::Complex),
        "para" => Ok(StructureKind::Para),
        _ => Err(Failure::Input(format!("--structure expects complex or para, got {s:?}"))),
    }
}

/// `builtin:NAME` or `builtin:NAME:SEED`.
fn parse_builtin(spec: &str, default_seed: u64) -> Result<Option<(String, u64)>, Failure> {
    let Some(rest) = spec.strip_prefix("builtin:") else { return Ok(None) };
    match rest.split_once(':') {
        Some((name, seed)) => {
            let seed = seed.parse().map_err(|_| Failure::Input(format!("bad seed in {spec:?}")))?;
            Ok(Some((name.to_string(), seed)))
        }
        None => Ok(Some((rest.to_string(), default_seed))),
    }
}

fn builtin(into: &mut Structures, name: &str, seed: u64, common: &Common) -> Result<(), Failure> {
    let (p, q) = parse_signature(&common.signature)?;
    let m = p + q;
    let kind = parse_structure(&common.structure)?;
    match name {
        "flat" => {
            let poly = PolynomialField::constant(m, &[Co, Co], &standard_metric(p, q))?;
            into.set_metric(MetricField::new(Arc::new(poly.clone()), (p, q))?, Some(poly))?;
        }
        "random" => {
            let poly = fixtures::random_metric_polynomial(seed, &standard_metric(p, q), m, 4, AMPLITUDE);
            into.set_metric(MetricField::new(Arc::new(poly.clone()), (p, q))?, Some(poly))?;
        }
        "hermitian" | "conformal" => {
            let (g, j) = if name == "hermitian" {
                fixtures::random_almost_hermitian(seed, m, p, kind, AMPLITUDE)?
            } else {
                fixtures::conformal_hermitian(seed, m, p, kind, AMPLITUDE)?
            };
            into.set_metric(g, None)?;
            Structures::set(&mut into.endo, j, "endomorphism")?;
        }
        "kahler" => {
            if m != 4 {
                return Err(Failure::Input(format!("builtin:kahler is four-dimensional, got signature ({p},{q})")));
            }
            let poly = fixtures::kahler_product_polynomial(seed, kind, p, AMPLITUDE);
            into.set_metric(MetricField::new(Arc::new(poly.clone()), (p, q))?, Some(poly))?;
            Structures::set(&mut into.endo, fixtures::standard_structure(m, kind)?, "endomorphism")?;
        }
        "structure" => Structures::set(&mut into.endo, fixtures::standard_structure(m, kind)?, "endomorphism")?,
        "connection" => Structures::set(&mut into.connection, fixtures::random_connection(seed, m, AMPLITUDE)?, "connection")?,
        _ => return Err(Failure::Input(format!("unknown builtin {name:?} (expected one of {BUILTINS})"))),
    }
    Ok(())
}

fn germ_file(into: &mut Structures, path: &Path) -> Result<(), Failure> {
    let file = GermFile::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let ctx = |e: germforge::GeomError| Failure::Input(format!("{}: {e}", path.display()));
    match file.kind {
        GermKind::Metric => {
            let g = file.metric().map_err(ctx)?;
            into.set_metric(g, Some(file.to_field().map_err(ctx)?))?;
        }
        GermKind::Endo => Structures::set(&mut into.endo, file.endomorphism().map_err(ctx)?, "endomorphism")?,
        GermKind::Connection => Structures::set(&mut into.connection, file.connection().map_err(ctx)?, "connection")?,
        GermKind::Oneform => Structures::set(&mut into.one_form, file.one_form().map_err(ctx)?, "one-form")?,
        GermKind::Scalar | GermKind::Tensor => {
            return Err(Failure::Input(format!("{}: {:?} germs are not structures", path.display(), file.kind)))
        }
    }
    Ok(())
}

/// Load every spec of one role. All pieces must share a dimension.
pub fn load(specs: &[String], seed: u64, common: &Common, role: &str) -> Result<Structures, Failure> {
    if specs.is_empty() {
        return Err(Failure::Input(format!("no {role} given (use --{role} FILE or --{role} builtin:NAME)")));
    }
    let mut out = Structures::default();
    for spec in specs {
        match parse_builtin(spec, seed)? {
            Some((name, s)) => builtin(&mut out, &name, s, common)?,
            None => germ_file(&mut out, Path::new(spec))?,
        }
    }
    let dims = [
        out.metric.as_ref().map(|g| g.dim()),
        out.endo.as_ref().map(|j| j.dim()),
        out.connection.as_ref().map(|c| c.dim()),
        out.one_form.as_ref().map(|w| w.field.dim()),
    ];
    let mut known = dims.into_iter().flatten();
    if let Some(d) = known.next() {
        if let Some(e) = known.find(|&e| e != d) {
            return Err(Failure::Input(format!("{role} pieces disagree on dimension ({d} vs {e})")));
        }
    }
    Ok(out)
}

/// A model file or `builtin:random`, `builtin:random-para`, `builtin:xi1313`.
pub fn load_model(spec: &str, seed: u64, common: &Common) -> Result<CurvatureModel, Failure> {
    match parse_builtin(spec, seed)? {
        Some((name, s)) => match name.as_str() {
            "random" => Ok(random_riemannian_model(s, parse_signature(&common.signature)?)),
            "random-para" => {
                let (p, q) = parse_signature(&common.signature)?;
                Ok(random_para_kahler_model(s, p + q)?)
            }
            "xi1313" => {
                let (eps, j) = null_para_frame(4);
                Ok(CurvatureModel::new(eps, (2, 2), xi(4, 0, 2, 0, 2), Some(j))?)
            }
            _ => Err(Failure::Input(format!("unknown builtin model {name:?} (expected random, random-para or xi1313)"))),
        },
        None => {
            let path = Path::new(spec);
            let file = ModelFile::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            file.to_model().map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
        }
    }
}
