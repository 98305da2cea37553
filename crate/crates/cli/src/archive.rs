//! Single-file model archive.
//!
//! Layout, all integers little-endian `u64`:
//!
//! ```text
//! b"KOOPIDAR" | manifest length | manifest (TOML) | array count |
//!   per array: name length | name (UTF-8) | rows | cols | rows·cols f64 LE, column-major
//! ```

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use koopid_core::dictionary::MONOMIAL_ORDER_VERSION;
use koopid_core::estimators::ModelWarning;
use koopid_core::{
    DictionarySpec, KoopmanModel, Matrix, ModelFamily, PodBasis, Rank, ReducedModel,
};
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 8] = b"KOOPIDAR";
pub const FORMAT_VERSION: u32 = 1;

/// A fitted model and, optionally, its POD reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArchive {
    pub model: KoopmanModel,
    pub reduced: Option<ReducedModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    monomial_order_version: u32,
    family: String,
    m: usize,
    q: usize,
    z: usize,
    b: usize,
    l: usize,
    state_dim: usize,
    dt: f64,
    /// Absent for a full-rank fit.
    fit_rank: Option<usize>,
    lifted_state: bool,
    warnings: Vec<String>,
    pod_rho: Option<usize>,
    spec: DictionarySpec,
}

const UNIDENTIFIABLE_INPUT: &str = "unidentifiable_input";

fn family_arrays(family: &ModelFamily) -> Vec<(&'static str, &Matrix)> {
    match family {
        ModelFamily::Linear { a } => vec![("A", a)],
        ModelFamily::LinearControlled { a, b } => vec![("A", a), ("B", b)],
        ModelFamily::Nonlinear { a, c } => vec![("An", a), ("Cn", c)],
        ModelFamily::NonlinearControlled { a, b, c } => vec![("Ac", a), ("Bc", b), ("Cc", c)],
    }
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_array(out: &mut Vec<u8>, name: &str, m: &Matrix) {
    put_u64(out, name.len() as u64);
    out.extend_from_slice(name.as_bytes());
    put_u64(out, m.rows() as u64);
    put_u64(out, m.cols() as u64);
    for j in 0..m.cols() {
        for v in m.col(j) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            bail!("archive truncated at byte {}", self.pos);
        };
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).context("length does not fit in memory")
    }

    fn array(&mut self) -> Result<(String, Matrix)> {
        let n = self.len()?;
        let name = String::from_utf8(self.take(n)?.to_vec()).context("array name is not UTF-8")?;
        let (rows, cols) = (self.len()?, self.len()?);
        let count = rows.checked_mul(cols).context("array too large")?;
        let bytes = self.take(count.checked_mul(8).context("array too large")?)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let m = Matrix::new(rows, cols, data).with_context(|| format!("array {name}"))?;
        Ok((name, m))
    }
}

impl ModelArchive {
    pub fn new(model: KoopmanModel, reduced: Option<ReducedModel>) -> Self {
        Self { model, reduced }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let model = &self.model;
        let dict = model.dictionary();
        let spec = &model.spec;
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            monomial_order_version: MONOMIAL_ORDER_VERSION,
            family: model.family.name().to_string(),
            m: spec.m,
            q: spec.q,
            z: spec.z,
            b: spec.pre_lift_dim()?,
            l: dict.lift_dim(),
            state_dim: dict.state_dim(),
            dt: model.dt,
            fit_rank: match model.fit_rank {
                Rank::Full => None,
                Rank::Truncated(r) => Some(r),
            },
            lifted_state: model.lifted_state,
            warnings: model
                .warnings
                .iter()
                .map(|w| match w {
                    ModelWarning::UnidentifiableInput => UNIDENTIFIABLE_INPUT.to_string(),
                })
                .collect(),
            pod_rho: self.reduced.as_ref().map(ReducedModel::rho),
            spec: spec.clone(),
        };
        let text = toml::to_string(&manifest)?;
        let mut arrays = family_arrays(&model.family);
        let energy;
        let eig;
        if let Some(r) = &self.reduced {
            energy = Matrix::row_vector(&[r.basis.energy_fraction])?;
            eig = Matrix::column_vector(&r.basis.eigenvalues)?;
            arrays.push(("Phi", &r.basis.phi));
            arrays.push(("eigenvalues", &eig));
            arrays.push(("energy_fraction", &energy));
            arrays.push(("Ar", &r.a));
            if let Some(b) = &r.b {
                arrays.push(("Br", b));
            }
            arrays.push(("Cr", &r.c));
        }
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u64(&mut out, text.len() as u64);
        out.extend_from_slice(text.as_bytes());
        put_u64(&mut out, arrays.len() as u64);
        for (name, m) in arrays {
            put_array(&mut out, name, m);
        }
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        ensure!(r.take(8)? == MAGIC, "not a koopid model archive");
        let n = r.len()?;
        let text = std::str::from_utf8(r.take(n)?).context("manifest is not UTF-8")?;
        let man: Manifest = toml::from_str(text).context("reading archive manifest")?;
        ensure!(
            man.format_version == FORMAT_VERSION,
            "archive format version {} is not supported (expected {FORMAT_VERSION})",
            man.format_version
        );
        ensure!(
            man.monomial_order_version == MONOMIAL_ORDER_VERSION,
            "archive was written with monomial order version {}, this build uses {MONOMIAL_ORDER_VERSION}",
            man.monomial_order_version
        );
        let count = r.len()?;
        let mut arrays = std::collections::BTreeMap::new();
        for _ in 0..count {
            let (name, m) = r.array()?;
            ensure!(
                arrays.insert(name.clone(), m).is_none(),
                "array {name} appears twice"
            );
        }
        ensure!(
            r.pos == buf.len(),
            "{} trailing bytes after the last array",
            buf.len() - r.pos
        );
        let mut take = |name: &str| {
            arrays
                .remove(name)
                .with_context(|| format!("archive lacks array {name}"))
        };
        let family = match man.family.as_str() {
            "dmd" => ModelFamily::Linear { a: take("A")? },
            "edmdc" => ModelFamily::LinearControlled {
                a: take("A")?,
                b: take("B")?,
            },
            "nonlinear" => ModelFamily::Nonlinear {
                a: take("An")?,
                c: take("Cn")?,
            },
            "nonlinear_controlled" => ModelFamily::NonlinearControlled {
                a: take("Ac")?,
                b: take("Bc")?,
                c: take("Cc")?,
            },
            other => bail!("unknown model family {other:?}"),
        };
        let fit_rank = man.fit_rank.map_or(Rank::Full, Rank::Truncated);
        let mut model =
            KoopmanModel::new(family, man.spec.clone(), man.dt, fit_rank, man.lifted_state)?;
        for w in &man.warnings {
            match w.as_str() {
                UNIDENTIFIABLE_INPUT => model.warnings.push(ModelWarning::UnidentifiableInput),
                other => bail!("unknown model warning {other:?}"),
            }
        }
        let spec = &man.spec;
        ensure!(
            (spec.m, spec.q, spec.z) == (man.m, man.q, man.z)
                && spec.pre_lift_dim()? == man.b
                && model.lift_dim() == man.l
                && model.delay_dim() == man.state_dim,
            "manifest dimensions disagree with the dictionary spec"
        );
        let reduced = match man.pod_rho {
            None => None,
            Some(rho) => {
                let energy = take("energy_fraction")?;
                ensure!(energy.shape() == (1, 1), "energy_fraction must be 1x1");
                let eig = take("eigenvalues")?;
                ensure!(eig.cols() == 1, "eigenvalues must be a column");
                let basis = PodBasis {
                    phi: take("Phi")?,
                    eigenvalues: eig.col(0).to_vec(),
                    energy_fraction: energy[(0, 0)],
                };
                ensure!(
                    basis.rho() == rho,
                    "Phi has {} modes, manifest says {rho}",
                    basis.rho()
                );
                let b = if spec.q > 0 { Some(take("Br")?) } else { None };
                Some(ReducedModel::new(
                    basis,
                    take("Ar")?,
                    b,
                    take("Cr")?,
                    spec.clone(),
                    man.dt,
                )?)
            }
        };
        if let Some(extra) = arrays.keys().next() {
            bail!("unexpected array {extra} in archive");
        }
        Ok(Self { model, reduced })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)
            .with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_bytes(&buf).with_context(|| format!("loading model archive {}", path.display()))
    }
}
