//! Geometric multipath channels for the direct BS-UE link and the RIS link.
//!
//! The RIS link of UE `k` is a tensor `ℋ_R,k ∈ C^{M×L×N}` whose slab `ℓ` is
//! the composite BS → element `ℓ` → UE channel. Each (BS-RIS path, RIS-UE
//! path) pair contributes a rank-one term to every slab, weighted by a gain
//! and by the RIS response `Ω` evaluated at the pair's angles at the surface.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{complex_normal, substream, Link, SHARED};
use crate::tensor::{mode_product, Axis, CMatrix, CTensor3, CVector, C64, ZERO};

/// Uniform planar array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub horizontal: usize,
    pub vertical: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl ArrayGeometry {
    pub fn new(horizontal: usize, vertical: usize) -> Self {
        Self {
            horizontal,
            vertical,
            spacing: 0.5,
        }
    }

    /// Closest-to-square `h × v` layout with `h ≥ v` and `h·v = total`.
    pub fn from_total(total: usize) -> Self {
        let mut v = (total as f64).sqrt() as usize;
        while v > 1 && total % v != 0 {
            v -= 1;
        }
        let v = v.max(1);
        Self::new(total / v, v)
    }

    pub fn total(&self) -> usize {
        self.horizontal * self.vertical
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.total() == 0 {
            return Err(Error::config(format!("{name} array has no elements")));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::config(format!("{name} element spacing must be positive")));
        }
        Ok(())
    }
}

/// `a(az, el) = h ⊗ v` with `h_m = e^{j2πdm cos(az) sin(el)}`,
/// `v_m = e^{j2πdm cos(el)}`.
pub fn upa_response(geom: &ArrayGeometry, az: f64, el: f64) -> CVector {
    let two_pi_d = 2.0 * std::f64::consts::PI * geom.spacing;
    let uh = two_pi_d * az.cos() * el.sin();
    let uv = two_pi_d * el.cos();
    let nv = geom.vertical;
    CVector::from_fn(geom.total(), |idx, _| {
        let (mh, mv) = (idx / nv, idx % nv);
        C64::from_polar(1.0, uh * mh as f64 + uv * mv as f64)
    })
}

/// One propagation path. The `aoa_*` angles steer the row-side array of the
/// link and the `aod_*` angles the column-side array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub gain: C64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub aod_az: f64,
    pub aod_el: f64,
}

/// Variance of the per-pair gain in the RIS tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainModel {
    /// One gain per pair with variance `β_BR(d_BR)^-α + β_RU(d_RU)^-α`.
    Sum,
    /// One gain per pair with variance `β_BR(d_BR)^-α · β_RU(d_RU)^-α`.
    Product,
    /// `γ_pb · γ_pc`, the cascade of independent per-link gains.
    Separable,
}

impl GainModel {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Self::Sum),
            "product" => Ok(Self::Product),
            "separable" => Ok(Self::Separable),
            _ => Err(Error::config(format!(
                "ris_gain_model: expected sum|product|separable, got {s:?}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sum => "sum",
            Self::Product => "product",
            Self::Separable => "separable",
        }
    }
}

/// Tabulated RIS response, looked up by nearest neighbour in
/// `(az_in, el_in, az_out, el_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaTable {
    entries: Vec<([f64; 4], C64)>,
}

impl OmegaTable {
    pub fn new(entries: Vec<([f64; 4], C64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::config("RIS response table is empty"));
        }
        if entries
            .iter()
            .any(|(a, v)| a.iter().any(|x| !x.is_finite()) || !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::config("RIS response table has non-finite entries"));
        }
        Ok(Self { entries })
    }

    /// Reads `az_in,el_in,az_out,el_out,re,im` rows. A non-numeric first line
    /// is taken as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read RIS response table {}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let nums: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse()).collect();
            match nums {
                Ok(v) if v.len() == 6 => {
                    entries.push(([v[0], v[1], v[2], v[3]], C64::new(v[4], v[5])))
                }
                Err(_) if lineno == 0 => continue,
                _ => {
                    return Err(Error::config(format!(
                        "{}:{}: expected six numeric fields",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(entries)
    }

    pub fn lookup(&self, q: [f64; 4]) -> C64 {
        let dist = |a: &[f64; 4]| a.iter().zip(&q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let mut best = &self.entries[0];
        let mut best_d = dist(&best.0);
        for e in &self.entries[1..] {
            let d = dist(&e.0);
            if d < best_d {
                best = e;
                best_d = d;
            }
        }
        best.1
    }
}

/// RIS response `Ω(az_in, el_in, az_out, el_out)` at the surface.
#[derive(Debug, Clone, PartialEq)]
pub enum RisResponseModel {
    Constant(C64),
    /// `(cos el_in · cos el_out)^p`.
    SeparableCosine(f64),
    Table(Arc<OmegaTable>),
}

impl RisResponseModel {
    pub fn eval(&self, az_in: f64, el_in: f64, az_out: f64, el_out: f64) -> C64 {
        match self {
            Self::Constant(c) => *c,
            Self::SeparableCosine(p) => {
                C64::new((el_in.cos().abs() * el_out.cos().abs()).powf(*p), 0.0)
            }
            Self::Table(t) => t.lookup([az_in, el_in, az_out, el_out]),
        }
    }

    /// `constant:<re>[,<im>]`, `cosine:<p>` or `table:<csv path>`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("ris_response: cannot parse {s:?}"));
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "constant" => {
                let parts: Vec<&str> = arg.split(',').collect();
                let re: f64 = parts[0].trim().parse().map_err(|_| bad())?;
                let im: f64 = match parts.get(1) {
                    Some(p) => p.trim().parse().map_err(|_| bad())?,
                    None => 0.0,
                };
                if parts.len() > 2 {
                    return Err(bad());
                }
                Ok(Self::Constant(C64::new(re, im)))
            }
            "cosine" => Ok(Self::SeparableCosine(arg.trim().parse().map_err(|_| bad())?)),
            "table" => Ok(Self::Table(Arc::new(OmegaTable::from_csv(Path::new(arg.trim()))?))),
            _ => Err(bad()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Constant(c) if c.im == 0.0 => format!("constant:{}", c.re),
            Self::Constant(c) => format!("constant:{},{}", c.re, c.im),
            Self::SeparableCosine(p) => format!("cosine:{p}"),
            Self::Table(t) => format!("table({} entries)", t.entries.len()),
        }
    }
}

/// Whether the direct BS-UE channel exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectChannel {
    Present,
    Blocked,
}

pub type Point3 = [f64; 3];

/// Simulation geometry, arrays, propagation and link budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub bs_position: Point3,
    pub ris_position: Point3,
    /// `[x_min, x_max, y_min, y_max]`.
    pub ue_area: [f64; 4],
    pub ue_height: f64,
    pub num_ues: usize,
    pub bs_geometry: ArrayGeometry,
    pub ue_geometry: ArrayGeometry,
    pub ris_geometry: ArrayGeometry,
    pub paths_direct: usize,
    pub paths_bs_ris: usize,
    pub paths_ris_ue: usize,
    pub pathloss_exponent_los: f64,
    pub pathloss_exponent_nlos: f64,
    pub beta_bu_db: f64,
    pub beta_br_db: f64,
    pub beta_ru_db: f64,
    pub reference_distance: f64,
    pub gain_model: GainModel,
    pub ris_response: RisResponseModel,
    pub direct_channel: DirectChannel,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bs_position: [0.0, 0.0, 35.0],
            ris_position: [50.0, 0.0, 15.0],
            ue_area: [25.0, 75.0, 5.0, 35.0],
            ue_height: 1.5,
            num_ues: 4,
            bs_geometry: ArrayGeometry::from_total(8),
            ue_geometry: ArrayGeometry::from_total(4),
            ris_geometry: ArrayGeometry::from_total(32),
            paths_direct: 16,
            paths_bs_ris: 16,
            paths_ris_ue: 16,
            pathloss_exponent_los: 2.5,
            pathloss_exponent_nlos: 3.0,
            beta_bu_db: -80.0,
            beta_br_db: -126.0,
            beta_ru_db: -126.0,
            reference_distance: 1.0,
            gain_model: GainModel::Sum,
            ris_response: RisResponseModel::Constant(C64::new(1.0, 0.0)),
            direct_channel: DirectChannel::Present,
            tx_power_dbm: 30.0,
            noise_dbm: -104.0,
            rng_seed: 1,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn distance(a: &Point3, b: &Point3) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn draw_azimuth<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2)
}

fn draw_elevation<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.0..=std::f64::consts::FRAC_PI_2)
}

impl ScenarioConfig {
    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn noise_w(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ues == 0 {
            return Err(Error::config("num_ues must be at least 1"));
        }
        self.bs_geometry.validate("bs")?;
        self.ue_geometry.validate("ue")?;
        self.ris_geometry.validate("ris")?;
        for (name, p) in [
            ("paths_direct", self.paths_direct),
            ("paths_bs_ris", self.paths_bs_ris),
            ("paths_ris_ue", self.paths_ris_ue),
        ] {
            if p == 0 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        let [x0, x1, y0, y1] = self.ue_area;
        if !(x0 <= x1 && y0 <= y1) {
            return Err(Error::config("ue_area must be x_min,x_max,y_min,y_max"));
        }
        if !(self.reference_distance > 0.0) {
            return Err(Error::config("reference_distance must be positive"));
        }
        let (p, n) = (self.tx_power_w(), self.noise_w());
        if !(p > 0.0 && p.is_finite() && n > 0.0 && n.is_finite()) {
            return Err(Error::config("tx_power_dbm and noise_dbm must map to finite positive watts"));
        }
        Ok(())
    }

    fn path_variance(&self, beta_db: f64, d: f64, los: bool) -> f64 {
        let alpha = if los {
            self.pathloss_exponent_los
        } else {
            self.pathloss_exponent_nlos
        };
        db_to_linear(beta_db) * (d / self.reference_distance).powf(-alpha)
    }

    /// Path distances: index 0 is the LoS path, the rest are stretched by
    /// `U[0, 0.4]` of the LoS length.
    fn path_distances<R: Rng + ?Sized>(&self, rng: &mut R, d_los: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|p| {
                if p == 0 {
                    d_los
                } else {
                    d_los + rng.random_range(0.0..=0.4 * d_los)
                }
            })
            .collect()
    }
}

/// Uniform position in the UE area.
pub fn draw_ue_position<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Point3 {
    let [x0, x1, y0, y1] = cfg.ue_area;
    [
        rng.random_range(x0..=x1),
        rng.random_range(y0..=y1),
        cfg.ue_height,
    ]
}

/// `Σ_p γ_p a_M(aoa_p) a_N(aod_p)ᴴ`.
pub fn sum_of_paths(rows: &ArrayGeometry, cols: &ArrayGeometry, paths: &[PathSpec]) -> CMatrix {
    let mut h = CMatrix::zeros(rows.total(), cols.total());
    for p in paths {
        let a = upa_response(rows, p.aoa_az, p.aoa_el) * p.gain;
        let b = upa_response(cols, p.aod_az, p.aod_el);
        h += a * b.adjoint();
    }
    h
}

/// Direct-link paths for a UE at `ue_pos`.
pub fn draw_direct_paths<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    ue_pos: &Point3,
    rng: &mut R,
) -> Vec<PathSpec> {
    let d_los = distance(&cfg.bs_position, ue_pos);
    let dists = cfg.path_distances(rng, d_los, cfg.paths_direct);
    dists
        .iter()
        .enumerate()
        .map(|(p, &d)| {
            let (aoa_az, aoa_el, aod_az, aod_el) =
                (draw_azimuth(rng), draw_elevation(rng), draw_azimuth(rng), draw_elevation(rng));
            let gain = complex_normal(rng, cfg.path_variance(cfg.beta_bu_db, d, p == 0));
            PathSpec {
                gain,
                aoa_az,
                aoa_el,
                aod_az,
                aod_el,
            }
        })
        .collect()
}

/// `H_d,k ∈ C^{M×N}`.
pub fn draw_direct_channel<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    ue_pos: &Point3,
    rng: &mut R,
) -> CMatrix {
    let paths = draw_direct_paths(cfg, ue_pos, rng);
    sum_of_paths(&cfg.bs_geometry, &cfg.ue_geometry, &paths)
}

/// Paths of one RIS hop: angles at both ends, the per-path variance term and
/// a per-path gain (used only by the separable gain model).
#[derive(Debug, Clone, PartialEq)]
pub struct HopPaths {
    pub paths: Vec<PathSpec>,
    pub variances: Vec<f64>,
}

/// BS-RIS paths, shared by all UEs. `aoa_*` are at the BS, `aod_*` at the RIS.
pub fn draw_bs_ris_paths<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> HopPaths {
    let d_los = distance(&cfg.bs_position, &cfg.ris_position);
    draw_hop(cfg, rng, d_los, cfg.paths_bs_ris, cfg.beta_br_db)
}

/// RIS-UE paths. `aoa_*` are at the RIS, `aod_*` at the UE.
pub fn draw_ris_ue_paths<R: Rng + ?Sized>(cfg: &ScenarioConfig, ue_pos: &Point3, rng: &mut R) -> HopPaths {
    let d_los = distance(&cfg.ris_position, ue_pos);
    draw_hop(cfg, rng, d_los, cfg.paths_ris_ue, cfg.beta_ru_db)
}

fn draw_hop<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R, d_los: f64, count: usize, beta_db: f64) -> HopPaths {
    let dists = cfg.path_distances(rng, d_los, count);
    let mut paths = Vec::with_capacity(count);
    let mut variances = Vec::with_capacity(count);
    for (p, &d) in dists.iter().enumerate() {
        let var = cfg.path_variance(beta_db, d, p == 0);
        let (aoa_az, aoa_el, aod_az, aod_el) =
            (draw_azimuth(rng), draw_elevation(rng), draw_azimuth(rng), draw_elevation(rng));
        let gain = complex_normal(rng, var);
        paths.push(PathSpec {
            gain,
            aoa_az,
            aoa_el,
            aod_az,
            aod_el,
        });
        variances.push(var);
    }
    HopPaths { paths, variances }
}

/// Per-pair gains `γ_{pb,pc}` of the RIS tensor.
pub fn draw_pair_gains<R: Rng + ?Sized>(
    model: GainModel,
    bs_ris: &HopPaths,
    ris_ue: &HopPaths,
    rng: &mut R,
) -> CMatrix {
    let (pb, pc) = (bs_ris.paths.len(), ris_ue.paths.len());
    let mut g = CMatrix::zeros(pb, pc);
    for b in 0..pb {
        for c in 0..pc {
            g[(b, c)] = match model {
                GainModel::Sum => complex_normal(rng, bs_ris.variances[b] + ris_ue.variances[c]),
                GainModel::Product => complex_normal(rng, bs_ris.variances[b] * ris_ue.variances[c]),
                GainModel::Separable => bs_ris.paths[b].gain * ris_ue.paths[c].gain,
            };
        }
    }
    g
}

/// `ℋ_R = Σ_{pb,pc} γ Ω (a_M a_Lᴴ) ⊙₂ (a_L a_Nᴴ)`.
///
/// Slab `ℓ` is assembled as `A_M C_ℓ A_Nᴴ` with
/// `C_ℓ(pb, pc) = γ Ω conj(a_L,pb[ℓ]) a_L,pc[ℓ]`.
pub fn ris_tensor_from_paths(
    cfg: &ScenarioConfig,
    bs_ris: &HopPaths,
    ris_ue: &HopPaths,
    pair_gains: &CMatrix,
    response: &RisResponseModel,
) -> CTensor3 {
    let (m_geo, l_geo, n_geo) = (&cfg.bs_geometry, &cfg.ris_geometry, &cfg.ue_geometry);
    let (pb, pc) = (bs_ris.paths.len(), ris_ue.paths.len());
    let (m, l, n) = (m_geo.total(), l_geo.total(), n_geo.total());

    let mut a_m = CMatrix::zeros(m, pb);
    let mut a_lb = CMatrix::zeros(l, pb);
    for (b, p) in bs_ris.paths.iter().enumerate() {
        a_m.set_column(b, &upa_response(m_geo, p.aoa_az, p.aoa_el));
        a_lb.set_column(b, &upa_response(l_geo, p.aod_az, p.aod_el));
    }
    let mut a_n = CMatrix::zeros(n, pc);
    let mut a_lc = CMatrix::zeros(l, pc);
    for (c, p) in ris_ue.paths.iter().enumerate() {
        a_lc.set_column(c, &upa_response(l_geo, p.aoa_az, p.aoa_el));
        a_n.set_column(c, &upa_response(n_geo, p.aod_az, p.aod_el));
    }
    let weights = CMatrix::from_fn(pb, pc, |b, c| {
        let (pin, pout) = (&bs_ris.paths[b], &ris_ue.paths[c]);
        pair_gains[(b, c)] * response.eval(pin.aod_az, pin.aod_el, pout.aoa_az, pout.aoa_el)
    });
    let a_n_h = a_n.adjoint();
    let mut t = CTensor3::zeros(m, l, n);
    for ell in 0..l {
        let c_ell = CMatrix::from_fn(pb, pc, |b, c| {
            weights[(b, c)] * a_lb[(ell, b)].conj() * a_lc[(ell, c)]
        });
        let slab = &a_m * c_ell * &a_n_h;
        t.set_slab(ell, &slab).expect("slab shape matches");
    }
    t
}

/// All channels of one trial, with the link budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub direct: Vec<CMatrix>,
    pub ris: Vec<CTensor3>,
    /// `E_tx` in watts.
    pub tx_power: f64,
    /// `σ²` in watts.
    pub noise_var: f64,
}

impl ChannelRealization {
    pub fn new(direct: Vec<CMatrix>, ris: Vec<CTensor3>, tx_power: f64, noise_var: f64) -> Result<Self> {
        if direct.is_empty() || direct.len() != ris.len() {
            return Err(Error::dim(format!(
                "{} direct channels and {} RIS tensors",
                direct.len(),
                ris.len()
            )));
        }
        let (m, n) = direct[0].shape();
        let l = ris[0].dims()[1];
        for (h, t) in direct.iter().zip(&ris) {
            if h.shape() != (m, n) || t.dims() != [m, l, n] {
                return Err(Error::dim(format!(
                    "direct {:?} and RIS {:?} against M={m}, L={l}, N={n}",
                    h.shape(),
                    t.dims()
                )));
            }
        }
        if !(tx_power > 0.0) || !(noise_var > 0.0) {
            return Err(Error::Domain("tx power and noise variance must be positive".into()));
        }
        Ok(Self {
            direct,
            ris,
            tx_power,
            noise_var,
        })
    }

    pub fn num_ues(&self) -> usize {
        self.direct.len()
    }

    pub fn bs_antennas(&self) -> usize {
        self.direct[0].nrows()
    }

    pub fn ue_antennas(&self) -> usize {
        self.direct[0].ncols()
    }

    pub fn ris_elements(&self) -> usize {
        self.ris[0].dims()[1]
    }

    /// `[[ℋ_R,k ×₂ φ]]`.
    pub fn ris_term(&self, k: usize, phi: &[C64]) -> Result<CMatrix> {
        mode_product(&self.ris[k], phi, Axis::Two)
    }

    /// `H_k = H_d,k + [[ℋ_R,k ×₂ φ]]`.
    pub fn effective_channel(&self, k: usize, phi: &[C64]) -> Result<CMatrix> {
        Ok(&self.direct[k] + self.ris_term(k, phi)?)
    }

    pub fn channels(&self, phi: &[C64]) -> Result<Vec<CMatrix>> {
        (0..self.num_ues()).map(|k| self.effective_channel(k, phi)).collect()
    }

    /// `ℋ_k = [H_d,k : ℋ_R,k] ∈ C^{M×(L+1)×N}`.
    pub fn concatenated(&self, k: usize) -> CTensor3 {
        self.ris[k].prepend_slab(&self.direct[k]).expect("shapes validated")
    }

    pub fn without_ris(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.ris {
            t.scale(ZERO);
        }
        out
    }

    pub fn without_direct(&self) -> Self {
        let mut out = self.clone();
        for h in &mut out.direct {
            h.fill(ZERO);
        }
        out
    }
}

/// Positions of all UEs in a trial.
pub fn ue_positions(cfg: &ScenarioConfig, trial: u64) -> Vec<Point3> {
    (0..cfg.num_ues as u64)
        .map(|k| draw_ue_position(cfg, &mut substream(cfg.rng_seed, trial, k, Link::UePosition)))
        .collect()
}

/// Draws the full realization for `trial`.
///
/// Each UE and each link has its own substream, so changing the array sizes
/// keeps positions, angles and gains fixed.
pub fn realize(cfg: &ScenarioConfig, trial: u64) -> Result<ChannelRealization> {
    cfg.validate()?;
    let seed = cfg.rng_seed;
    let bs_ris = draw_bs_ris_paths(cfg, &mut substream(seed, trial, SHARED, Link::BsRis));
    let mut direct = Vec::with_capacity(cfg.num_ues);
    let mut ris = Vec::with_capacity(cfg.num_ues);
    for (k, pos) in ue_positions(cfg, trial).iter().enumerate() {
        let k = k as u64;
        let h = draw_direct_channel(cfg, pos, &mut substream(seed, trial, k, Link::Direct));
        direct.push(match cfg.direct_channel {
            DirectChannel::Present => h,
            DirectChannel::Blocked => CMatrix::zeros(h.nrows(), h.ncols()),
        });
        let ris_ue = draw_ris_ue_paths(cfg, pos, &mut substream(seed, trial, k, Link::RisUe));
        let gains = draw_pair_gains(
            cfg.gain_model,
            &bs_ris,
            &ris_ue,
            &mut substream(seed, trial, k, Link::JointGain),
        );
        ris.push(ris_tensor_from_paths(cfg, &bs_ris, &ris_ue, &gains, &cfg.ris_response));
    }
    ChannelRealization::new(direct, ris, cfg.tx_power_w(), cfg.noise_w())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{random_cmatrix, random_phases, random_tensor, seeded};
    use crate::tensor::hadamard2;

    fn small_cfg(m: usize, l: usize, n: usize, pb: usize, pc: usize) -> ScenarioConfig {
        ScenarioConfig {
            bs_geometry: ArrayGeometry::from_total(m),
            ris_geometry: ArrayGeometry::from_total(l),
            ue_geometry: ArrayGeometry::from_total(n),
            paths_bs_ris: pb,
            paths_ris_ue: pc,
            num_ues: 1,
            ..ScenarioConfig::default()
        }
    }

    fn singular_values(m: &CMatrix) -> Vec<f64> {
        let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        s
    }

    fn numerical_rank(m: &CMatrix) -> usize {
        let s = singular_values(m);
        s.iter().filter(|&&x| x > 1e-10 * s[0]).count()
    }

    #[test]
    fn near_square_factoring() {
        assert_eq!(ArrayGeometry::from_total(32).horizontal, 8);
        assert_eq!(ArrayGeometry::from_total(32).vertical, 4);
        assert_eq!(ArrayGeometry::from_total(7).total(), 7);
        assert_eq!(ArrayGeometry::from_total(1).total(), 1);
    }

    #[test]
    fn single_element_response_is_one() {
        let a = upa_response(&ArrayGeometry::new(1, 1), 0.3, 1.1);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn broadside_horizontal_factor_is_flat() {
        let g = ArrayGeometry::new(2, 1);
        let a = upa_response(&g, std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
        for z in a.iter() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn upa_matches_elementwise_kronecker() {
        let mut rng = seeded(11);
        let g = ArrayGeometry::new(2, 2);
        let (az, el): (f64, f64) = (rng.random_range(-1.5..1.5), rng.random_range(0.0..1.5));
        let a = upa_response(&g, az, el);
        let k = std::f64::consts::PI;
        let h = [C64::new(1.0, 0.0), C64::from_polar(1.0, k * az.cos() * el.sin())];
        let v = [C64::new(1.0, 0.0), C64::from_polar(1.0, k * el.cos())];
        let want = [h[0] * v[0], h[0] * v[1], h[1] * v[0], h[1] * v[1]];
        for i in 0..4 {
            assert!((a[i] - want[i]).norm() < 1e-14);
            assert!((a[i].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_unit_path_scalar_channel() {
        let g = ArrayGeometry::new(1, 1);
        let p = PathSpec {
            gain: C64::new(1.0, 0.0),
            aoa_az: 0.2,
            aoa_el: 0.4,
            aod_az: -0.3,
            aod_el: 1.0,
        };
        let h = sum_of_paths(&g, &g, &[p]);
        assert_eq!(h[(0, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn single_direct_path_has_rank_one() {
        let cfg = ScenarioConfig {
            paths_direct: 1,
            ..small_cfg(8, 4, 4, 1, 1)
        };
        let pos = [40.0, 10.0, 1.5];
        let h = draw_direct_channel(&cfg, &pos, &mut seeded(3));
        assert_eq!(numerical_rank(&h), 1);
    }

    #[test]
    fn direct_channel_matches_reference_path_sum() {
        let cfg = ScenarioConfig {
            paths_direct: 3,
            ..small_cfg(4, 4, 2, 1, 1)
        };
        let pos = [30.0, 20.0, 1.5];
        let h = draw_direct_channel(&cfg, &pos, &mut seeded(5));
        let paths = draw_direct_paths(&cfg, &pos, &mut seeded(5));
        let k = std::f64::consts::PI;
        let resp = |g: &ArrayGeometry, az: f64, el: f64| -> Vec<C64> {
            let mut out = Vec::new();
            for mh in 0..g.horizontal {
                for mv in 0..g.vertical {
                    out.push(C64::from_polar(1.0, k * (mh as f64 * az.cos() * el.sin() + mv as f64 * el.cos())));
                }
            }
            out
        };
        let mut want = CMatrix::zeros(4, 2);
        for p in &paths {
            let a = resp(&cfg.bs_geometry, p.aoa_az, p.aoa_el);
            let b = resp(&cfg.ue_geometry, p.aod_az, p.aod_el);
            for i in 0..4 {
                for j in 0..2 {
                    want[(i, j)] += p.gain * a[i] * b[j].conj();
                }
            }
        }
        assert!((h.norm() - want.norm()).abs() < 1e-12 * want.norm().max(1e-300));
        assert!((&h - &want).norm() < 1e-12 * want.norm());
    }

    fn tensor_for(cfg: &ScenarioConfig, seed: u64, resp: &RisResponseModel) -> (CTensor3, HopPaths, HopPaths, CMatrix) {
        let pos = [50.0, 20.0, 1.5];
        let b = draw_bs_ris_paths(cfg, &mut seeded(seed));
        let c = draw_ris_ue_paths(cfg, &pos, &mut seeded(seed + 1));
        let g = draw_pair_gains(cfg.gain_model, &b, &c, &mut seeded(seed + 2));
        (ris_tensor_from_paths(cfg, &b, &c, &g, resp), b, c, g)
    }

    #[test]
    fn single_path_pair_gives_rank_one_slabs() {
        let cfg = small_cfg(4, 6, 3, 1, 1);
        let (t, ..) = tensor_for(&cfg, 7, &RisResponseModel::Constant(C64::new(1.0, 0.0)));
        for ell in 0..6 {
            let s = singular_values(&t.slab(ell));
            assert!(s[1] < 1e-10 * s[0]);
        }
    }

    #[test]
    fn varying_response_raises_slab_rank_up_to_path_product() {
        let cfg = small_cfg(8, 4, 8, 2, 2);
        let (t, ..) = tensor_for(&cfg, 9, &RisResponseModel::SeparableCosine(2.0));
        let ranks: Vec<usize> = (0..4).map(|l| numerical_rank(&t.slab(l))).collect();
        assert!(ranks.iter().any(|&r| r > 1), "{ranks:?}");
        assert!(ranks.iter().all(|&r| r <= 4), "{ranks:?}");
    }

    #[test]
    fn separable_constant_response_matches_conventional_factors() {
        let cfg = ScenarioConfig {
            gain_model: GainModel::Separable,
            ..small_cfg(4, 6, 2, 3, 2)
        };
        let (t, b, c, _) = tensor_for(&cfg, 13, &RisResponseModel::Constant(C64::new(1.0, 0.0)));
        let f = sum_of_paths(&cfg.bs_geometry, &cfg.ris_geometry, &b.paths);
        let g = sum_of_paths(&cfg.ris_geometry, &cfg.ue_geometry, &c.paths);
        let conv = hadamard2(&f, &g).unwrap();
        let scale = conv.frobenius_norm();
        let mut diff = 0.0f64;
        for ell in 0..6 {
            diff = diff.max((t.slab(ell) - conv.slab(ell)).norm());
        }
        assert!(diff < 1e-12 * scale, "{diff} vs {scale}");
    }

    #[test]
    fn zero_phases_leave_direct_channel() {
        let mut rng = seeded(17);
        let real = ChannelRealization::new(
            vec![random_cmatrix(&mut rng, 3, 2)],
            vec![random_tensor(&mut rng, 3, 5, 2)],
            1.0,
            1.0,
        )
        .unwrap();
        let h = real.effective_channel(0, &[C64::new(0.0, 0.0); 5]).unwrap();
        assert_eq!(h, real.direct[0]);
        assert!(real.effective_channel(0, &[C64::new(1.0, 0.0); 4]).is_err());
    }

    #[test]
    fn single_element_matches_diag_model() {
        let mut rng = seeded(19);
        let f = random_cmatrix(&mut rng, 4, 1);
        let g = random_cmatrix(&mut rng, 1, 3);
        let hd = random_cmatrix(&mut rng, 4, 3);
        let t = hadamard2(&f, &g).unwrap();
        let real = ChannelRealization::new(vec![hd.clone()], vec![t], 1.0, 1.0).unwrap();
        let phi = random_phases(&mut rng, 1);
        let want = &hd + &f * CMatrix::from_element(1, 1, phi[0]) * &g;
        assert!((real.effective_channel(0, &phi).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn effective_channel_is_affine_in_phi() {
        let mut rng = seeded(23);
        let real = ChannelRealization::new(
            vec![random_cmatrix(&mut rng, 4, 2)],
            vec![random_tensor(&mut rng, 4, 6, 2)],
            1.0,
            1.0,
        )
        .unwrap();
        let p1 = random_phases(&mut rng, 6);
        let p2 = random_phases(&mut rng, 6);
        let sum: Vec<C64> = p1.iter().zip(&p2).map(|(a, b)| a + b).collect();
        let lhs = real.effective_channel(0, &sum).unwrap() - real.effective_channel(0, &p1).unwrap();
        assert!((lhs - real.ris_term(0, &p2).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn concatenated_tensor_folds_direct_channel() {
        let mut rng = seeded(29);
        let real = ChannelRealization::new(
            vec![random_cmatrix(&mut rng, 4, 3)],
            vec![random_tensor(&mut rng, 4, 7, 3)],
            1.0,
            1.0,
        )
        .unwrap();
        let phi = random_phases(&mut rng, 7);
        let mut psi = vec![C64::new(1.0, 0.0)];
        psi.extend_from_slice(&phi);
        let via_concat = mode_product(&real.concatenated(0), &psi, Axis::Two).unwrap();
        assert!((via_concat - real.effective_channel(0, &phi).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn los_gain_variance_matches_pathloss() {
        let cfg = small_cfg(1, 1, 1, 1, 1);
        let pos = [40.0, 20.0, 1.5];
        let d = distance(&cfg.bs_position, &pos);
        let want = db_to_linear(cfg.beta_bu_db) * d.powf(-2.5);
        let mut rng = seeded(31);
        let n = 20_000;
        let mean = (0..n)
            .map(|_| draw_direct_paths(&cfg, &pos, &mut rng)[0].gain.norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean / want - 1.0).abs() < 0.05, "{mean} vs {want}");
    }

    #[test]
    fn ue_positions_centre_on_the_area() {
        let cfg = ScenarioConfig::default();
        let n = 4000;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for t in 0..n / 4 {
            for p in ue_positions(&cfg, t as u64) {
                sx += p[0];
                sy += p[1];
            }
        }
        let (mx, my) = (sx / n as f64, sy / n as f64);
        let [x0, x1, y0, y1] = cfg.ue_area;
        let sdx = (x1 - x0) / 12f64.sqrt() / (n as f64).sqrt();
        let sdy = (y1 - y0) / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mx - (x0 + x1) / 2.0).abs() < 3.0 * sdx);
        assert!((my - (y0 + y1) / 2.0).abs() < 3.0 * sdy);
    }

    #[test]
    fn realization_is_reproducible_and_blockable() {
        let cfg = ScenarioConfig {
            paths_direct: 3,
            paths_bs_ris: 3,
            paths_ris_ue: 3,
            ..ScenarioConfig::default()
        };
        let a = realize(&cfg, 4).unwrap();
        let b = realize(&cfg, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, realize(&cfg, 5).unwrap());
        let blocked = realize(
            &ScenarioConfig {
                direct_channel: DirectChannel::Blocked,
                ..cfg.clone()
            },
            4,
        )
        .unwrap();
        assert!(blocked.direct.iter().all(|h| h.iter().all(|z| *z == ZERO)));
        assert_eq!(blocked.ris, a.ris);
    }

    #[test]
    fn response_parsing() {
        assert_eq!(
            RisResponseModel::parse("constant:1").unwrap(),
            RisResponseModel::Constant(C64::new(1.0, 0.0))
        );
        assert_eq!(
            RisResponseModel::parse("cosine:2").unwrap(),
            RisResponseModel::SeparableCosine(2.0)
        );
        assert!(RisResponseModel::parse("bogus").is_err());
        assert!(matches!(
            RisResponseModel::parse("table:/nonexistent/omega.csv"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn table_lookup_is_nearest_neighbour() {
        let t = OmegaTable::new(vec![
            ([0.0, 0.0, 0.0, 0.0], C64::new(1.0, 0.0)),
            ([1.0, 1.0, 1.0, 1.0], C64::new(0.0, 2.0)),
        ])
        .unwrap();
        assert_eq!(t.lookup([0.1, 0.2, 0.0, 0.1]), C64::new(1.0, 0.0));
        assert_eq!(t.lookup([0.9, 0.7, 1.0, 0.6]), C64::new(0.0, 2.0));
    }
}
