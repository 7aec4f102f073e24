//! The experiment file: TOML with a truncation block, a tolerance block and
//! one block per subcommand. Every field has a default so that the resolved
//! config can be echoed in full.

use num_complex::Complex64 as C64;
use reduction_core::complex::genus0::Insertion;
use reduction_core::scalar::{GaussQ, Q};
use reduction_core::schottky::SchottkyData;
use reduction_core::voa::{FockState, FockVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub truncation: Truncation,
    pub tolerance: Tolerance,
    pub eisenstein: Option<EisensteinCfg>,
    pub weierstrass: Option<WeierstrassCfg>,
    pub pm: Option<PmCfg>,
    pub f0: Option<F0Cfg>,
    pub npoint: Option<NpointCfg>,
    pub sew: Option<SewCfg>,
    pub schottky: Option<SchottkyCfg>,
    pub reduce: Option<ReduceCfg>,
    pub check: Option<CheckCfg>,
    pub connection: Option<ConnectionCfg>,
    pub cohomology: Option<CohomologyCfg>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    pub weight_cutoff: i64,
    pub q_order: i64,
    pub rho_order: i64,
    pub mode_cutoff: usize,
    pub neumann_order: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { weight_cutoff: 12, q_order: 8, rho_order: 4, mode_cutoff: 4, neumann_order: 8 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerance {
    pub exact_mode: bool,
    pub float_tol: f64,
    /// Always true: no computation draws random numbers.
    pub deterministic: bool,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { exact_mode: false, float_tol: 1e-9, deterministic: true }
    }
}

/// A state: `"vacuum"`, `"a"`, `"omega"`, or a partition such as `[2, 1]`
/// for `a(-2)a(-1)1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Partition(Vec<u32>),
}

impl StateSpec {
    pub fn resolve(&self) -> Result<FockVector, String> {
        match self {
            StateSpec::Named(n) => match n.as_str() {
                "vacuum" | "1" => Ok(FockVector::vacuum(i64::MAX)),
                "a" => Ok(FockVector::a(i64::MAX)),
                "omega" => Ok(FockVector::omega(i64::MAX)),
                other => Err(format!("unknown state `{other}` (use vacuum, a, omega or a partition)")),
            },
            StateSpec::Partition(p) => {
                FockState::new(p.clone()).map(|s| FockVector::basis(s, i64::MAX)).map_err(|e| e.to_string())
            }
        }
    }
}

/// A real or rational coordinate: a float, an integer or a string `"p/q"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Int(i64),
    Float(f64),
    Rational(String),
}

impl Coord {
    pub fn exact(&self) -> Result<Q, String> {
        match self {
            Coord::Int(n) => Ok(Q::from_integer((*n).into())),
            Coord::Float(x) => Q::from_float(*x).ok_or_else(|| format!("non-finite coordinate {x}")),
            Coord::Rational(s) => {
                let (n, d) = s.split_once('/').unwrap_or((s.as_str(), "1"));
                let n: num_bigint::BigInt = n.trim().parse().map_err(|_| format!("bad rational `{s}`"))?;
                let d: num_bigint::BigInt = d.trim().parse().map_err(|_| format!("bad rational `{s}`"))?;
                if d == 0.into() {
                    return Err(format!("zero denominator in `{s}`"));
                }
                Ok(Q::new(n, d))
            }
        }
    }

    pub fn float(&self) -> Result<f64, String> {
        match self {
            Coord::Int(n) => Ok(*n as f64),
            Coord::Float(x) => Ok(*x),
            Coord::Rational(_) => {
                let q = self.exact()?;
                Ok(num_traits::ToPrimitive::to_f64(&q).unwrap_or(f64::NAN))
            }
        }
    }
}

/// A complex number as `[re, im]` or a bare real coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Complex([Coord; 2]),
    Real(Coord),
}

impl Point {
    fn parts(&self) -> (Coord, Coord) {
        match self {
            Point::Complex([re, im]) => (re.clone(), im.clone()),
            Point::Real(re) => (re.clone(), Coord::Int(0)),
        }
    }

    pub fn c64(&self) -> Result<C64, String> {
        let (re, im) = self.parts();
        Ok(C64::new(re.float()?, im.float()?))
    }

    pub fn gauss(&self) -> Result<GaussQ, String> {
        let (re, im) = self.parts();
        Ok(GaussQ::new(re.exact()?, im.exact()?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionSpec {
    pub state: StateSpec,
    pub point: Point,
}

pub fn insertions_c64(specs: &[InsertionSpec]) -> Result<Vec<Insertion<C64>>, String> {
    specs.iter().map(|s| Ok(Insertion::new(s.state.resolve()?, s.point.c64()?))).collect()
}

pub fn insertions_exact(specs: &[InsertionSpec]) -> Result<Vec<Insertion<GaussQ>>, String> {
    specs.iter().map(|s| Ok(Insertion::new(s.state.resolve()?, s.point.gauss()?))).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EisensteinCfg {
    pub k: i64,
    pub order: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeierstrassCfg {
    pub k: i64,
    pub tau: Point,
    pub z: Point,
    pub z_terms: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmCfg {
    pub m: i64,
    pub z: Point,
    pub tau: Option<Point>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct F0Cfg {
    pub n: i64,
    pub m: i64,
    pub order: i64,
    pub z: Option<Point>,
    pub w: Option<Point>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NpointCfg {
    pub genus: usize,
    #[serde(default)]
    pub insertions: Vec<InsertionSpec>,
    /// End states at genus 0.
    #[serde(default = "vacuum_spec")]
    pub out_state: StateSpec,
    #[serde(default = "vacuum_spec")]
    pub in_state: StateSpec,
}

fn vacuum_spec() -> StateSpec {
    StateSpec::Named("vacuum".into())
}

/// Where a handle is attached: `"boundary"` or two points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotsSpec {
    Named(String),
    Points([Point; 2]),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SewCfg {
    pub rho: Point,
    pub slots: SlotsSpec,
    #[serde(default)]
    pub insertions: Vec<InsertionSpec>,
    #[serde(default)]
    pub disk_radii: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchottkyCfg {
    pub genus: usize,
    #[serde(default = "one")]
    pub p: i64,
    pub rho: Vec<Point>,
    /// Pairs `[w_a, w_{-a}]`.
    pub w: Vec<[Point; 2]>,
    /// Per index `l`: list of `[exponent, value]` terms of the polynomial `f_l`.
    #[serde(default)]
    pub f_coeffs: Vec<Vec<(i64, Point)>>,
    #[serde(default)]
    pub rho_orders: Option<Vec<i64>>,
    /// Override the values in `[truncation]`.
    #[serde(default)]
    pub mode_cutoff: Option<usize>,
    #[serde(default)]
    pub neumann_order: Option<usize>,
}

fn one() -> i64 {
    1
}

impl SchottkyCfg {
    pub fn data(&self, t: &Truncation) -> Result<SchottkyData, String> {
        let rho = self.rho.iter().map(Point::c64).collect::<Result<_, _>>()?;
        let points = self.w.iter().map(|[a, b]| Ok((a.c64()?, b.c64()?))).collect::<Result<_, String>>()?;
        let f_coeffs = self
            .f_coeffs
            .iter()
            .map(|f| f.iter().map(|(e, v)| Ok((*e, v.c64()?))).collect::<Result<Vec<_>, String>>())
            .collect::<Result<_, _>>()?;
        let data = SchottkyData {
            genus: self.genus,
            rho,
            points,
            p: self.p,
            f_coeffs,
            mode_cutoff: self.mode_cutoff.unwrap_or(t.mode_cutoff),
            neumann_order: self.neumann_order.unwrap_or(t.neumann_order),
        };
        data.validate().map_err(|e| e.to_string())?;
        Ok(data)
    }

    pub fn orders(&self, t: &Truncation) -> Vec<i64> {
        self.rho_orders.clone().unwrap_or_else(|| vec![t.rho_order; self.genus])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceCfg {
    pub genus: usize,
    #[serde(default)]
    pub insertions: Vec<InsertionSpec>,
    /// At genus `g >= 2`: the quasiprimary state reduced at `y`.
    #[serde(default)]
    pub u: Option<InsertionSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum CaseSpec {
    N {
        genus: usize,
        #[serde(default)]
        base: Vec<InsertionSpec>,
        x: InsertionSpec,
        x_prime: InsertionSpec,
    },
    G {
        #[serde(default)]
        base: Vec<InsertionSpec>,
        first: [Point; 2],
        second: [Point; 2],
        orders: [i64; 2],
    },
    GN {
        #[serde(default)]
        base: Vec<InsertionSpec>,
        x: InsertionSpec,
    },
    Total {
        m: usize,
        a: DescriptorSpec,
        b: DescriptorSpec,
    },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckCfg {
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
    #[serde(default)]
    pub cases: Vec<CaseSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub pool: Vec<StateSpec>,
    pub points: Vec<Point>,
}

/// Pool index of the inserted state, either the same for every block or
/// per block as `[g, n, index]` triples.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorSpec {
    #[serde(default)]
    pub uniform: Option<usize>,
    #[serde(default)]
    pub blocks: Vec<[usize; 3]>,
    #[serde(default = "yes")]
    pub sewing: bool,
    #[serde(default = "yes")]
    pub reduction: bool,
    #[serde(default = "one_usize")]
    pub max_genus: usize,
}

fn yes() -> bool {
    true
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpSpec {
    /// `"zero"` or `"identified"`.
    pub kind: String,
    #[serde(default = "one_point")]
    pub coefficient: Point,
    #[serde(default)]
    pub zeta: Option<[Point; 2]>,
    #[serde(default)]
    pub include_k0: bool,
}

fn one_point() -> Point {
    Point::Real(Coord::Int(1))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionCfg {
    pub genus: usize,
    /// Genus tag of `psi`; defaults to `genus`.
    #[serde(default)]
    pub psi_genus: Option<usize>,
    pub psi: InsertionSpec,
    #[serde(default)]
    pub phi: Vec<InsertionSpec>,
    /// Terms of `F`; a single entry is the plain operator, several give
    /// their linear combination.
    pub op: Vec<OpSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohomologyCfg {
    pub probe: ProbeSpec,
    pub descriptor: DescriptorSpec,
    pub degrees: Vec<usize>,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

fn default_rank_tol() -> f64 {
    1e-9
}

pub fn parse(text: &str) -> Result<Config, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}
