//! Manufactured solutions, study configuration and the convergence /
//! interpolation / stability drivers with CSV emission.

use crate::assembly::{
    apply_essential, assemble_a, assemble_b, assemble_rhs, sigma_essential_values,
    v_essential_values, DofMap, MaterialLaw, SparseSymSystem,
};
use crate::basis::{self, ElementBases};
use crate::error::{Error, Result};
use crate::interpolation::{
    interpolate_sigma, interpolate_v, interpolate_w, ClosureScalar, ClosureStress, ClosureVector,
    ScalarField, StressField, VectorField,
};
use crate::mesh::{build_structured_cube, CubeFace, Mesh};
use crate::norms::{
    broken_h1_norm, face_domination_constant, hcurl_norm, norm_equivalence_ratios, sigma_h_norm,
    w_h1_norm, DualNormContext, NormReport, ScalarArg, StressArg, VectorArg,
};
use crate::reference::{Space, SymTensor3};
use crate::solver::{solve_saddle, stability_constants, SaddleSolution, EIGEN_SIZE_CAP};
use nalgebra::{Matrix3, Point3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Closed-form solution set (u, σ, f, boundary data) for verification.
pub struct ManufacturedCase {
    pub name: String,
    pub material: MaterialLaw,
    pub dirichlet_spec: Vec<CubeFace>,
    pub u: Box<dyn VectorField>,
    pub sigma: Box<dyn StressField>,
    pub f: Box<dyn Fn(&Point3<f64>) -> Vector3<f64> + Sync>,
    /// scalar companion field for the W-interpolation studies
    pub w: Box<dyn ScalarField>,
}

impl ManufacturedCase {
    /// Validate -div σ = f against central differences of σ at 20 random
    /// points (step 1e-5, tolerance 1e-3 relative to the data scale).
    fn validate_equilibrium(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7d5);
        let h = 1e-5;
        for _ in 0..20 {
            let x = Point3::new(
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.05..0.95),
            );
            let mut div = Vector3::zeros();
            for j in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let dp = self.sigma.value(&xp);
                let dm = self.sigma.value(&xm);
                for i in 0..3 {
                    div[i] += (dp.get(i, j) - dm.get(i, j)) / (2.0 * h);
                }
            }
            let f_val = (self.f)(&x);
            let scale = f_val.norm().max(1.0);
            if ((-div) - f_val).norm() > 1e-3 * scale {
                return Err(Error::InvalidArgument(format!(
                    "case {}: -div sigma != f at {x:?} (fd {:?} vs {:?})",
                    self.name, -div, f_val
                )));
            }
        }
        Ok(())
    }
}

/// The built-in case names.
pub const CASE_NAMES: [&str; 3] = ["LINEAR", "TRIG", "TRIG-MIXED"];

/// Construct a built-in manufactured case for the given material.
pub fn build_case(name: &str, material: MaterialLaw) -> Result<ManufacturedCase> {
    let case = match name.to_ascii_uppercase().as_str() {
        "LINEAR" => linear_case(material),
        "TRIG" => trig_case(material, CubeFace::ALL.to_vec()),
        "TRIG-MIXED" => trig_case(
            material,
            vec![CubeFace::XMin, CubeFace::YMin, CubeFace::ZMin, CubeFace::ZMax],
        ),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown case `{other}`; available: {}",
                CASE_NAMES.join(", ")
            )))
        }
    };
    case.validate_equilibrium()?;
    Ok(case)
}

/// All built-in cases.
pub fn builtin_cases(material: MaterialLaw) -> Result<Vec<ManufacturedCase>> {
    CASE_NAMES
        .iter()
        .map(|name| build_case(name, material))
        .collect()
}

/// u = (x + 2y, 3z, x - y): constant stress, zero body force.
fn linear_case(material: MaterialLaw) -> ManufacturedCase {
    let grad = Matrix3::new(1.0, 2.0, 0.0, 0.0, 0.0, 3.0, 1.0, -1.0, 0.0);
    let strain = SymTensor3::from_matrix(&grad);
    let stress = material.stiffness(&strain);
    ManufacturedCase {
        name: "LINEAR".into(),
        material,
        dirichlet_spec: CubeFace::ALL.to_vec(),
        u: Box::new(ClosureVector {
            value: Box::new(|x| Vector3::new(x.x + 2.0 * x.y, 3.0 * x.z, x.x - x.y)),
            gradient: Box::new(move |_| grad),
        }),
        sigma: Box::new(ClosureStress {
            value: Box::new(move |_| stress),
        }),
        f: Box::new(|_| Vector3::zeros()),
        w: Box::new(ClosureScalar {
            value: Box::new(|x| x.x + 2.0 * x.y),
            gradient: Box::new(|_| Vector3::new(1.0, 2.0, 0.0)),
        }),
    }
}

/// u_i = sin(πx) sin(πy) sin(πz), i = 1..3, with closed-form σ and f.
fn trig_case(material: MaterialLaw, dirichlet_spec: Vec<CubeFace>) -> ManufacturedCase {
    let (lam, mu) = (material.lambda(), material.mu());
    let g = |x: &Point3<f64>| (PI * x.x).sin() * (PI * x.y).sin() * (PI * x.z).sin();
    let grad_g = |x: &Point3<f64>| {
        Vector3::new(
            PI * (PI * x.x).cos() * (PI * x.y).sin() * (PI * x.z).sin(),
            PI * (PI * x.x).sin() * (PI * x.y).cos() * (PI * x.z).sin(),
            PI * (PI * x.x).sin() * (PI * x.y).sin() * (PI * x.z).cos(),
        )
    };

    let sigma_at = move |x: &Point3<f64>| -> SymTensor3 {
        let dg = grad_g(x);
        let tr = lam * (dg.x + dg.y + dg.z);
        SymTensor3([
            tr + 2.0 * mu * dg.x,
            tr + 2.0 * mu * dg.y,
            tr + 2.0 * mu * dg.z,
            mu * (dg.x + dg.y),
            mu * (dg.x + dg.z),
            mu * (dg.y + dg.z),
        ])
    };

    let f_at = move |x: &Point3<f64>| -> Vector3<f64> {
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        let (sz, cz) = (PI * x.z).sin_cos();
        let gval = sx * sy * sz;
        let cxy = cx * cy * sz;
        let cxz = cx * sy * cz;
        let cyz = sx * cy * cz;
        let a = lam + 4.0 * mu;
        let b = lam + mu;
        PI * PI * Vector3::new(
            a * gval - b * (cxy + cxz),
            a * gval - b * (cxy + cyz),
            a * gval - b * (cxz + cyz),
        )
    };

    ManufacturedCase {
        name: "TRIG".into(),
        material,
        dirichlet_spec,
        u: Box::new(ClosureVector {
            value: Box::new(move |x| {
                let v = g(x);
                Vector3::new(v, v, v)
            }),
            gradient: Box::new(move |x| {
                let dg = grad_g(x);
                Matrix3::from_fn(|_, j| dg[j])
            }),
        }),
        sigma: Box::new(ClosureStress {
            value: Box::new(sigma_at),
        }),
        f: Box::new(f_at),
        w: Box::new(ClosureScalar {
            value: Box::new(g),
            gradient: Box::new(grad_g),
        }),
    }
}

/// What a study run does per level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Solve,
    Interp,
    Stability,
}

impl StudyKind {
    fn parse(s: &str) -> Option<StudyKind> {
        match s.to_ascii_lowercase().as_str() {
            "solve" => Some(StudyKind::Solve),
            "interp" => Some(StudyKind::Interp),
            "stability" => Some(StudyKind::Stability),
            _ => None,
        }
    }
}

/// Study parameters; parsed from flat key/value text and CLI overrides.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub case: String,
    pub k: usize,
    pub levels: Vec<usize>,
    pub e: f64,
    pub nu: f64,
    pub csv: Option<PathBuf>,
    pub vtk: bool,
    pub kind: StudyKind,
    pub parallel: bool,
    pub dump_matrix: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            case: "TRIG".into(),
            k: 1,
            levels: vec![1, 2],
            e: 1.0,
            nu: 0.3,
            csv: None,
            vtk: false,
            kind: StudyKind::Solve,
            parallel: false,
            dump_matrix: None,
        }
    }
}

impl StudyConfig {
    /// Apply `key = value` lines; `#` starts a comment, unknown keys are
    /// rejected with their line number.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(Error::ConfigParse {
                    line,
                    msg: format!("expected `key = value`, got `{stripped}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::ConfigParse {
                line,
                msg: format!("invalid {what} `{value}`"),
            };
            match key {
                "case" => self.case = value.to_string(),
                "kind" => {
                    self.kind = StudyKind::parse(value).ok_or_else(|| bad("study kind"))?;
                }
                "order" => self.k = value.parse().map_err(|_| bad("order"))?,
                "levels" => {
                    let mut levels = Vec::new();
                    for part in value.split(',') {
                        levels.push(part.trim().parse().map_err(|_| bad("level list"))?);
                    }
                    self.levels = levels;
                }
                "e" => self.e = value.parse().map_err(|_| bad("Young's modulus"))?,
                "nu" => self.nu = value.parse().map_err(|_| bad("Poisson ratio"))?,
                "csv" => self.csv = Some(PathBuf::from(value)),
                "vtk" => self.vtk = value.parse().map_err(|_| bad("vtk toggle"))?,
                "parallel" => self.parallel = value.parse().map_err(|_| bad("parallel toggle"))?,
                other => {
                    return Err(Error::ConfigParse {
                        line,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.k) {
            return Err(Error::InvalidArgument(format!(
                "order must be 1 or 2, got {}",
                self.k
            )));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("no refinement levels given".into()));
        }
        if !self.levels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "levels must be strictly increasing".into(),
            ));
        }
        if self.nu >= 0.49 {
            return Err(Error::InvalidArgument(format!(
                "Poisson ratio {} too close to the incompressible limit (require < 0.49)",
                self.nu
            )));
        }
        let max_level = *self.levels.last().unwrap();
        let cap = match (self.kind, self.k) {
            (StudyKind::Stability, _) => 4,
            (_, 1) => 8,
            (_, _) => 4,
        };
        if max_level > cap {
            return Err(Error::InvalidArgument(format!(
                "level {max_level} exceeds the desk-scale cap {cap} for this study"
            )));
        }
        Ok(())
    }

    pub fn material(&self) -> Result<MaterialLaw> {
        MaterialLaw::new(self.e, self.nu)
    }
}

/// One assembled and solved level of a case.
pub struct LevelSolution {
    pub n: usize,
    pub mesh: Mesh,
    pub sigma_map: DofMap,
    pub v_map: DofMap,
    pub sigma_bases: ElementBases,
    pub v_bases: ElementBases,
    pub dual: DualNormContext,
    pub system: SparseSymSystem,
    pub solution: SaddleSolution,
}

/// Assemble and solve one refinement level of a manufactured case.
pub fn solve_case_on_level(case: &ManufacturedCase, n: usize, k: usize) -> Result<LevelSolution> {
    let mesh = build_structured_cube(n, &case.dirichlet_spec)?;
    let sigma_map = DofMap::build(&mesh, Space::Sigma, k);
    let v_map = DofMap::build(&mesh, Space::V, k);
    let sigma_bases = basis::build_element_bases(&mesh, Space::Sigma, k)?;
    let v_bases = basis::build_element_bases(&mesh, Space::V, k)?;
    let dual = DualNormContext::new(&mesh, k)?;

    let a = assemble_a(&mesh, &case.material, &sigma_bases, &sigma_map)?;
    let b = assemble_b(&mesh, &sigma_bases, &v_bases, &sigma_map, &v_map)?;
    let (rhs_sigma, rhs_v) = assemble_rhs(
        &mesh,
        &sigma_bases,
        &v_bases,
        &sigma_map,
        &v_map,
        case.u.as_ref(),
        &case.f,
        case.sigma.as_ref(),
    )?;
    let sigma_prescribed = sigma_essential_values(&mesh, &sigma_map, case.sigma.as_ref())?;
    let v_prescribed = v_essential_values(&mesh, &v_map, case.u.as_ref())?;
    let system = apply_essential(
        &a,
        &b,
        &rhs_sigma,
        &rhs_v,
        &sigma_map,
        &v_map,
        sigma_prescribed,
        v_prescribed,
    );
    let solution = solve_saddle(&system)?;

    Ok(LevelSolution {
        n,
        mesh,
        sigma_map,
        v_map,
        sigma_bases,
        v_bases,
        dual,
        system,
        solution,
    })
}

/// Per-level discretization errors of a solve study.
#[derive(Debug, Clone, Copy)]
pub struct SolveErrors {
    pub hcurl: f64,
    pub sigma: NormReport,
    pub combined: f64,
}

/// Errors of the discrete solution against the exact fields (quadrature
/// degree 2k+4 on the difference).
pub fn solution_errors(case: &ManufacturedCase, level: &LevelSolution) -> Result<SolveErrors> {
    let hcurl = hcurl_norm(
        &VectorArg::Error(case.u.as_ref(), &level.solution.u),
        &level.mesh,
        &level.v_bases,
        &level.v_map,
    )?;
    let sigma = sigma_h_norm(
        &StressArg::Error(case.sigma.as_ref(), &level.solution.sigma),
        &level.mesh,
        &level.sigma_bases,
        &level.sigma_map,
        &level.dual,
    )?;
    Ok(SolveErrors {
        hcurl,
        sigma,
        combined: (hcurl * hcurl + sigma.total * sigma.total).sqrt(),
    })
}

/// Column-labelled numeric table with deterministic CSV formatting.
#[derive(Debug, Clone)]
pub struct StudyTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl StudyTable {
    pub fn new(columns: &[&str]) -> Self {
        StudyTable {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(col, v)| match v {
                    // the leading level column prints as an integer
                    Some(x) if col == 0 => format!("{}", *x as i64),
                    Some(x) => format!("{x:.12e}"),
                    None => String::new(),
                })
                .collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    pub fn write(&self, path: &PathBuf) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Value at (row, column name).
    pub fn get(&self, row: usize, column: &str) -> Option<f64> {
        let idx = self.columns.iter().position(|c| c == column)?;
        self.rows[row][idx]
    }
}

fn rate(prev_err: f64, prev_h: f64, err: f64, h: f64) -> Option<f64> {
    if prev_err > 0.0 && err > 0.0 && prev_h > h {
        Some((prev_err / err).ln() / (prev_h / h).ln())
    } else {
        None
    }
}

/// Convergence study: solve every level, report errors and observed rates.
pub fn run_convergence(config: &StudyConfig) -> Result<StudyTable> {
    config.validate()?;
    let material = config.material()?;
    let case = build_case(&config.case, material)?;

    let run_level = |&n: &usize| -> Result<(usize, f64, SolveErrors, LevelSolution)> {
        let level = solve_case_on_level(&case, n, config.k)?;
        let errors = solution_errors(&case, &level)?;
        let h = level.mesh.mesh_size();
        Ok((n, h, errors, level))
    };
    let results: Vec<(usize, f64, SolveErrors, LevelSolution)> = if config.parallel {
        use rayon::prelude::*;
        config
            .levels
            .par_iter()
            .map(run_level)
            .collect::<Result<Vec<_>>>()?
    } else {
        config.levels.iter().map(run_level).collect::<Result<Vec<_>>>()?
    };

    let mut table = StudyTable::new(&[
        "level",
        "h",
        "err_hcurl",
        "err_l2_sigma",
        "err_face",
        "err_dual",
        "err_sigma_norm",
        "err_combined",
        "rate_combined",
    ]);
    let mut prev: Option<(f64, f64)> = None;
    for (n, h, errors, level) in &results {
        let r = prev.and_then(|(ph, pe)| rate(pe, ph, errors.combined, *h));
        table.rows.push(vec![
            Some(*n as f64),
            Some(*h),
            Some(errors.hcurl),
            Some(errors.sigma.l2_sigma),
            Some(errors.sigma.face_term),
            Some(errors.sigma.dual_term),
            Some(errors.sigma.total),
            Some(errors.combined),
            r,
        ]);
        prev = Some((*h, errors.combined));

        if config.vtk {
            let stem = config
                .csv
                .as_ref()
                .map(|p| p.with_extension(""))
                .unwrap_or_else(|| PathBuf::from("tdnns_solution"));
            let path = PathBuf::from(format!("{}_n{n}.vtk", stem.display()));
            crate::vtk::write_vtk(
                &path,
                &level.mesh,
                Some((&level.v_bases, &level.v_map, &level.solution.u)),
                Some((&level.sigma_bases, &level.sigma_map, &level.solution.sigma)),
            )?;
        }
    }

    if let Some(path) = &config.dump_matrix {
        if let Some((_, _, _, level)) = results.first() {
            let mut file = std::fs::File::create(path)?;
            level.system.write_coo(&mut file)?;
        }
    }
    if let Some(path) = &config.csv {
        table.write(path)?;
    }
    Ok(table)
}

/// Interpolation-rate study for the three operators.
pub fn run_interp_rates(config: &StudyConfig) -> Result<StudyTable> {
    config.validate()?;
    let material = config.material()?;
    let case = build_case(&config.case, material)?;
    let k = config.k;

    let mut table = StudyTable::new(&[
        "level",
        "h",
        "l2_sigma",
        "signorm_sigma",
        "dual_sigma",
        "hcurl_v",
        "h1h_v",
        "h1_w",
        "rate_l2_sigma",
        "rate_hcurl_v",
        "rate_h1h_v",
        "rate_h1_w",
    ]);

    let mut prev: Option<(f64, f64, f64, f64, f64)> = None;
    for &n in &config.levels {
        let mesh = build_structured_cube(n, &case.dirichlet_spec)?;
        let sigma_map = DofMap::build(&mesh, Space::Sigma, k);
        let v_map = DofMap::build(&mesh, Space::V, k);
        let sigma_bases = basis::build_element_bases(&mesh, Space::Sigma, k)?;
        let v_bases = basis::build_element_bases(&mesh, Space::V, k)?;
        let dual = DualNormContext::new(&mesh, k)?;

        let sig_coeffs = interpolate_sigma(case.sigma.as_ref(), &mesh, &sigma_map)?;
        let v_coeffs = interpolate_v(case.u.as_ref(), &mesh, &v_map)?;
        let w_coeffs = interpolate_w(case.w.as_ref(), &mesh, &dual.w_map)?;

        let sig_err = sigma_h_norm(
            &StressArg::Error(case.sigma.as_ref(), &sig_coeffs),
            &mesh,
            &sigma_bases,
            &sigma_map,
            &dual,
        )?;
        let hcurl = hcurl_norm(
            &VectorArg::Error(case.u.as_ref(), &v_coeffs),
            &mesh,
            &v_bases,
            &v_map,
        )?;
        let h1h = broken_h1_norm(
            &VectorArg::Error(case.u.as_ref(), &v_coeffs),
            &mesh,
            &v_bases,
            &v_map,
        )?;
        let h1w = w_h1_norm(
            &ScalarArg::Error(case.w.as_ref(), &w_coeffs),
            &mesh,
            &dual.w_bases,
            &dual.w_map,
        )?;

        let h = mesh.mesh_size();
        let rates = prev.map(|(ph, pl2, phc, ph1h, ph1w)| {
            (
                rate(pl2, ph, sig_err.l2_sigma, h),
                rate(phc, ph, hcurl, h),
                rate(ph1h, ph, h1h, h),
                rate(ph1w, ph, h1w, h),
            )
        });
        table.rows.push(vec![
            Some(n as f64),
            Some(h),
            Some(sig_err.l2_sigma),
            Some(sig_err.total),
            Some(sig_err.dual_term),
            Some(hcurl),
            Some(h1h),
            Some(h1w),
            rates.and_then(|r| r.0),
            rates.and_then(|r| r.1),
            rates.and_then(|r| r.2),
            rates.and_then(|r| r.3),
        ]);
        prev = Some((h, sig_err.l2_sigma, hcurl, h1h, h1w));
    }

    if let Some(path) = &config.csv {
        table.write(path)?;
    }
    Ok(table)
}

/// Stability-constant study with norm-equivalence and face-domination
/// diagnostics.
pub fn run_stability(config: &StudyConfig) -> Result<StudyTable> {
    config.validate()?;
    let material = config.material()?;
    let case = build_case(&config.case, material)?;

    let mut table = StudyTable::new(&[
        "level",
        "h",
        "infsup",
        "kernel_coercivity",
        "continuity",
        "kernel_dim",
        "norm_equiv_min",
        "norm_equiv_max",
        "face_domination",
    ]);
    for &n in &config.levels {
        let mesh = build_structured_cube(n, &case.dirichlet_spec)?;
        let report = stability_constants(&mesh, &material, config.k, EIGEN_SIZE_CAP)?;
        let v_map = DofMap::build(&mesh, Space::V, config.k);
        let v_bases = basis::build_element_bases(&mesh, Space::V, config.k)?;
        let sigma_map = DofMap::build(&mesh, Space::Sigma, config.k);
        let sigma_bases = basis::build_element_bases(&mesh, Space::Sigma, config.k)?;
        let ratios = norm_equivalence_ratios(&mesh, &v_bases, &v_map, 5, 0x5eed)?;
        let face_dom = face_domination_constant(&mesh, &sigma_bases, &sigma_map)?;
        let (rmin, rmax) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        table.rows.push(vec![
            Some(n as f64),
            Some(mesh.mesh_size()),
            Some(report.infsup),
            Some(report.kernel_coercivity),
            Some(report.continuity),
            Some(report.kernel_dim as f64),
            Some(rmin),
            Some(rmax),
            Some(face_dom),
        ]);
    }

    if let Some(path) = &config.csv {
        table.write(path)?;
    }
    Ok(table)
}

/// Dump the canonical reference basis tables as CSV (debug aid).
pub fn dump_basis_csv(space: Space, k: usize) -> Result<String> {
    let basis = match space {
        Space::Sigma => crate::reference::build_sigma_basis(k)?,
        Space::V => crate::reference::build_v_basis(k)?,
        Space::W => crate::reference::build_w_basis(k + 1)?,
    };
    let mut out = String::new();
    writeln!(
        out,
        "# space={} order={} shapes={} vandermonde_condition={:.6e}",
        space.name(),
        basis.order,
        basis.n_shapes(),
        basis.vandermonde_condition
    )
    .unwrap();
    // sample on a small barycentric lattice
    let mut pts = Vec::new();
    let steps = 3usize;
    for i in 0..=steps {
        for j in 0..=steps - i {
            for l in 0..=steps - i - j {
                pts.push(Vector3::new(
                    i as f64 / steps as f64,
                    j as f64 / steps as f64,
                    l as f64 / steps as f64,
                ));
            }
        }
    }
    let dof_tag = |d: &crate::reference::DofKind| format!("{d:?}").replace(", ", ";").replace(' ', "");
    match space {
        Space::Sigma => {
            writeln!(out, "shape,dof,x,y,z,xx,yy,zz,xy,xz,yz").unwrap();
            for j in 0..basis.n_shapes() {
                for p in &pts {
                    let s = basis.eval_sigma(j, p);
                    writeln!(
                        out,
                        "{j},{},{},{},{},{},{},{},{},{},{}",
                        dof_tag(&basis.dofs[j]),
                        p.x, p.y, p.z, s.0[0], s.0[1], s.0[2], s.0[3], s.0[4], s.0[5]
                    )
                    .unwrap();
                }
            }
        }
        Space::V => {
            writeln!(out, "shape,dof,x,y,z,vx,vy,vz").unwrap();
            for j in 0..basis.n_shapes() {
                for p in &pts {
                    let v = basis.eval_v(j, p);
                    writeln!(
                        out,
                        "{j},{},{},{},{},{},{},{}",
                        dof_tag(&basis.dofs[j]),
                        p.x, p.y, p.z, v.x, v.y, v.z
                    )
                    .unwrap();
                }
            }
        }
        Space::W => {
            writeln!(out, "shape,dof,x,y,z,w").unwrap();
            for j in 0..basis.n_shapes() {
                for p in &pts {
                    writeln!(
                        out,
                        "{j},{},{},{},{},{}",
                        dof_tag(&basis.dofs[j]),
                        p.x,
                        p.y,
                        p.z,
                        basis.eval_w(j, p)
                    )
                    .unwrap();
                }
            }
        }
    }
    Ok(out)
}
