//! `YM_p` evaluation and smoothed `L^p` energy minimization on a node grid
//! with prescribed integer point charges.
//!
//! The discrete field is a flux on the grid edges, stored at the lower node
//! of each edge: `F[3n + a]` lives on the edge from node `n` to `n + e_a`.
//! Edges leaving the box do not exist, which is the zero normal flux
//! condition. The constraint at node `n` reads
//! `Σ_a c_a (F[n, a] - F[n - e_a, a]) = q_n` with face areas `c_a = V / h_a`,
//! i.e. net flux out of the dual cell equals the deposited charge. The energy
//! is `Σ_n V (|X_n|² + ε²)^{p/2}` with `X_n = (F[n, 0], F[n, 1], F[n, 2])`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSource, GridField};
use crate::geom::{GridSpec, Vec3};
use crate::norms::{lp_integral, IntegrationOptions, Region};
use crate::synthesis::{counterexample_field, TargetMeasure, DEFAULT_SEGMENT_CAP};

/// `∫_region |X|^p`.
pub fn ym_p(field: &FieldSource, p: f64, region: &Region, opts: &IntegrationOptions) -> Result<f64> {
    lp_integral(field, p, region, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    pub point: [f64; 3],
    pub charge: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeSpec {
    pub atoms: Vec<Charge>,
    pub grid: GridSpec,
}

impl ChargeSpec {
    pub fn new(atoms: Vec<Charge>, grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        let bounds = grid.bounds();
        for (i, a) in atoms.iter().enumerate() {
            let p = Vec3::from(a.point);
            if !bounds.contains(&p, 1e-12) {
                return Err(Error::OutOfDomain(p[0], p[1], p[2]));
            }
            if atoms[..i].iter().any(|b| b.point == a.point) {
                return Err(Error::invalid("atoms must be pairwise distinct"));
            }
        }
        let total: i64 = atoms.iter().map(|a| a.charge).sum();
        if total != 0 {
            return Err(Error::Incompatible(total));
        }
        Ok(Self { atoms, grid })
    }

    /// Charges deposited on their nearest nodes.
    pub fn deposit(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.grid.node_count()];
        for a in &self.atoms {
            let [i, j, k] = self.grid.nearest_node(&Vec3::from(a.point));
            q[self.grid.index(i, j, k)] += a.charge as f64;
        }
        q
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// First trial step of the backtracking line search.
    pub step: f64,
    pub max_iters: usize,
    /// Bound on the max-norm divergence residual, in charge units.
    pub tol: f64,
    /// Initial smoothing `ε_s`; defaults to `1e-6` times the mean node field
    /// magnitude of the minimal-`L²` feasible field.
    pub smoothing: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { step: 1.0, max_iters: 200, tol: 1e-8, smoothing: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub iterations: usize,
    pub objective: Vec<f64>,
    pub div_residual: Vec<f64>,
    /// Smoothing in effect at the end.
    pub smoothing: f64,
}

impl SolveTrace {
    pub fn final_residual(&self) -> f64 {
        self.div_residual.last().copied().unwrap_or(0.0)
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "iter,objective,div_residual")?;
        for (i, (o, r)) in self.objective.iter().zip(&self.div_residual).enumerate() {
            write!(w, "{}", crate::output::csv_line(&[i.to_string(), crate::output::fmt17(*o), crate::output::fmt17(*r)]))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChargedSolution {
    pub grid: GridSpec,
    /// Edge fluxes, three per node.
    pub fluxes: Vec<f64>,
    pub objective: f64,
    pub smoothing: f64,
}

impl ChargedSolution {
    /// Node-centred field: each component averages the two edges meeting the
    /// node along that axis.
    pub fn node_field(&self) -> GridField {
        let g = &self.grid;
        let mut data = vec![0.0; 3 * g.node_count()];
        for n in 0..g.node_count() {
            let c = g.unindex(n);
            for a in 0..3 {
                let mut v = self.fluxes[3 * n + a];
                if c[a] > 0 {
                    v += self.fluxes[3 * (n - stride(g, a)) + a];
                }
                data[3 * n + a] = 0.5 * v;
            }
        }
        GridField::new(*g, data).expect("grid is valid")
    }
}

fn stride(g: &GridSpec, a: usize) -> usize {
    match a {
        0 => 1,
        1 => g.dims[0],
        _ => g.dims[0] * g.dims[1],
    }
}

/// Edge-flux divergence operator and its energy.
pub(crate) struct EdgeGrid {
    grid: GridSpec,
    face: [f64; 3],
    volume: f64,
    /// `valid[3n + a]`: the edge from `n` along `a` exists.
    valid: Vec<bool>,
}

impl EdgeGrid {
    pub fn new(grid: GridSpec) -> Self {
        let volume = grid.cell_volume();
        let face = std::array::from_fn(|a| volume / grid.spacing[a]);
        let mut valid = vec![false; 3 * grid.node_count()];
        for n in 0..grid.node_count() {
            let c = grid.unindex(n);
            for a in 0..3 {
                valid[3 * n + a] = c[a] + 1 < grid.dims[a];
            }
        }
        Self { grid, face, volume, valid }
    }

    fn nodes(&self) -> usize {
        self.grid.node_count()
    }

    pub fn div(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes()];
        for n in 0..self.nodes() {
            for a in 0..3 {
                if self.valid[3 * n + a] {
                    let flux = self.face[a] * f[3 * n + a];
                    out[n] += flux;
                    out[n + stride(&self.grid, a)] -= flux;
                }
            }
        }
        out
    }

    /// Adjoint of [`div`](Self::div).
    pub fn div_adjoint(&self, lambda: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 3 * self.nodes()];
        for n in 0..self.nodes() {
            for a in 0..3 {
                if self.valid[3 * n + a] {
                    out[3 * n + a] = self.face[a] * (lambda[n] - lambda[n + stride(&self.grid, a)]);
                }
            }
        }
        out
    }

    pub fn objective(&self, f: &[f64], p: f64, eps: f64) -> f64 {
        f.chunks_exact(3)
            .map(|x| self.volume * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + eps * eps).powf(0.5 * p))
            .sum()
    }

    fn residual(&self, f: &[f64], q: &[f64]) -> f64 {
        self.div(f).iter().zip(q).map(|(d, q)| (d - q).abs()).fold(0.0, f64::max)
    }
}

/// Per-node Hessian blocks `α (I + β X Xᵀ)` of the energy.
struct Curvature {
    x: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Curvature {
    fn identity(n: usize) -> Self {
        Self { x: vec![0.0; 3 * n], alpha: vec![1.0; n], beta: vec![0.0; n] }
    }

    fn new(e: &EdgeGrid, f: &[f64], p: f64, eps: f64) -> (Self, Vec<f64>) {
        let n = e.nodes();
        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n];
        let mut grad = vec![0.0; 3 * n];
        for i in 0..n {
            let x = &f[3 * i..3 * i + 3];
            let s = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + eps * eps;
            alpha[i] = e.volume * p * s.powf(0.5 * p - 1.0);
            beta[i] = (p - 2.0) / s;
            for a in 0..3 {
                grad[3 * i + a] = alpha[i] * x[a];
            }
        }
        (Self { x: f.to_vec(), alpha, beta }, grad)
    }

    /// `H⁻¹ v` by Sherman–Morrison on each block.
    fn solve(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for i in 0..self.alpha.len() {
            let x = &self.x[3 * i..3 * i + 3];
            let w = &v[3 * i..3 * i + 3];
            let xx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let xw = x[0] * w[0] + x[1] * w[1] + x[2] * w[2];
            let c = self.beta[i] / (1.0 + self.beta[i] * xx);
            for a in 0..3 {
                out[3 * i + a] = (w[a] - c * xw * x[a]) / self.alpha[i];
            }
        }
        out
    }

    fn inverse_diagonal(&self, i: usize, a: usize) -> f64 {
        let x = &self.x[3 * i..3 * i + 3];
        let xx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let c = self.beta[i] / (1.0 + self.beta[i] * xx);
        (1.0 - c * x[a] * x[a]) / self.alpha[i]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Solves `div H⁻¹ divᵀ λ = rhs` for zero-mean `rhs` by Jacobi-preconditioned
/// conjugate gradients on the complement of the constants.
fn schur_solve(e: &EdgeGrid, h: &Curvature, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = e.nodes();
    let mut diag = vec![0.0; n];
    for i in 0..n {
        for a in 0..3 {
            if e.valid[3 * i + a] {
                let w = e.face[a] * e.face[a] * h.inverse_diagonal(i, a);
                diag[i] += w;
                diag[i + stride(&e.grid, a)] += w;
            }
        }
    }
    let apply = |v: &[f64]| e.div(&h.solve(&e.div_adjoint(v)));
    let mut b = rhs.to_vec();
    remove_mean(&mut b);
    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b;
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    remove_mean(&mut z);
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let max_iters = 20 * n + 100;
    for it in 0..max_iters {
        let sd = apply(&d);
        let step = rz / dot(&d, &sd);
        for i in 0..n {
            x[i] += step * d[i];
            r[i] -= step * sd[i];
        }
        let rn = dot(&r, &r).sqrt();
        if rn <= 1e-14 * bnorm {
            remove_mean(&mut x);
            return Ok(x);
        }
        z = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        remove_mean(&mut z);
        let rz_new = dot(&r, &z);
        if !rz_new.is_finite() || it + 1 == max_iters {
            break;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + beta * d[i];
        }
    }
    let rn = dot(&r, &r).sqrt();
    if rn <= 1e-9 * bnorm {
        remove_mean(&mut x);
        Ok(x)
    } else {
        Err(Error::NoConvergence { iterations: max_iters, residual: rn / bnorm })
    }
}

/// Removes the divergence residual with the smallest `L²` correction.
fn project(e: &EdgeGrid, f: &mut [f64], q: &[f64]) -> Result<()> {
    let r: Vec<f64> = q.iter().zip(e.div(f)).map(|(q, d)| q - d).collect();
    let mu = schur_solve(e, &Curvature::identity(e.nodes()), &r)?;
    for (f, c) in f.iter_mut().zip(e.div_adjoint(&mu)) {
        *f += c;
    }
    Ok(())
}

fn newton_stage(
    e: &EdgeGrid,
    f: &mut Vec<f64>,
    q: &[f64],
    p: f64,
    eps: f64,
    opts: &SolverOptions,
    trace: &mut SolveTrace,
) -> Result<()> {
    let mut phi = e.objective(f, p, eps);
    while trace.iterations < opts.max_iters {
        let (h, g) = Curvature::new(e, f, p, eps);
        let r: Vec<f64> = q.iter().zip(e.div(f)).map(|(q, d)| q - d).collect();
        let hg = h.solve(&g);
        let rhs: Vec<f64> = e.div(&hg).iter().zip(&r).map(|(a, r)| -a - r).collect();
        let lambda = schur_solve(e, &h, &rhs)?;
        let at = e.div_adjoint(&lambda);
        let gl: Vec<f64> = g.iter().zip(&at).map(|(g, a)| g + a).collect();
        let df: Vec<f64> = h.solve(&gl).iter().map(|v| -v).collect();
        let decrement = -dot(&g, &df);
        if decrement <= 1e-15 * phi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let mut t = opts.step;
        let mut accepted = None;
        while t > 1e-12 {
            let trial: Vec<f64> = f.iter().zip(&df).map(|(f, d)| f + t * d).collect();
            let value = e.objective(&trial, p, eps);
            if value <= phi - 1e-4 * t * decrement {
                accepted = Some((trial, value));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, value)) = accepted else { break };
        *f = trial;
        phi = value;
        trace.iterations += 1;
        trace.objective.push(phi);
        trace.div_residual.push(e.residual(f, q));
    }
    Ok(())
}

/// Minimizes the smoothed energy subject to the charge constraint.
///
/// Starts from the minimal-`L²` feasible field, runs damped Newton steps on
/// the equality-constrained problem, reduces `ε_s` once by a factor 10 and
/// continues, then projects the result back onto the constraint.
pub fn minimize_charged(spec: &ChargeSpec, p: f64, opts: &SolverOptions) -> Result<(ChargedSolution, SolveTrace)> {
    if !(p > 1.0 && p < 1.5) {
        return Err(Error::invalid("p must lie in (1, 3/2)"));
    }
    if !(opts.step > 0.0 && opts.step <= 1.0) || !(opts.tol > 0.0) {
        return Err(Error::invalid("step must lie in (0, 1] and tol must be positive"));
    }
    let total: i64 = spec.atoms.iter().map(|a| a.charge).sum();
    if total != 0 {
        return Err(Error::Incompatible(total));
    }
    let e = EdgeGrid::new(spec.grid);
    let q = spec.deposit();
    let mut f = vec![0.0; 3 * e.nodes()];
    project(&e, &mut f, &q)?;
    let scale = f.chunks_exact(3).map(|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()).sum::<f64>()
        / e.nodes() as f64;
    let eps0 = match opts.smoothing {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(_) => return Err(Error::invalid("smoothing must be positive")),
        None => 1e-6 * scale,
    };
    let mut trace = SolveTrace {
        iterations: 0,
        objective: vec![e.objective(&f, p, eps0)],
        div_residual: vec![e.residual(&f, &q)],
        smoothing: eps0,
    };
    let mut eps = eps0;
    if scale > 0.0 {
        newton_stage(&e, &mut f, &q, p, eps, opts, &mut trace)?;
        eps = 0.1 * eps0;
        newton_stage(&e, &mut f, &q, p, eps, opts, &mut trace)?;
        project(&e, &mut f, &q)?;
    }
    let residual = e.residual(&f, &q);
    let objective = e.objective(&f, p, eps);
    trace.objective.push(objective);
    trace.div_residual.push(residual);
    trace.smoothing = eps;
    if residual > opts.tol {
        return Err(Error::NoConvergence { iterations: trace.iterations, residual });
    }
    Ok((ChargedSolution { grid: spec.grid, fluxes: f, objective, smoothing: eps }, trace))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub p: f64,
    pub k: Vec<u32>,
    pub norms: Vec<f64>,
    pub energies: Vec<f64>,
    /// `energy_k / M(I_k)`.
    pub energy_per_mass: Vec<f64>,
    pub ratios: Vec<f64>,
    pub bounded: bool,
}

/// `‖X_k‖_{L^p}` for the lattice counterexample with constant density. A
/// row is flagged bounded when `energy_k / M(I_k)` does not increase.
pub fn growth_diagnostic(ps: &[f64], ks: &[u32], cap: Option<u128>) -> Result<Vec<GrowthRow>> {
    if ks.is_empty() || ps.is_empty() {
        return Err(Error::invalid("growth needs at least one p and one k"));
    }
    let examples = ks
        .iter()
        .map(|&k| counterexample_field(k, &TargetMeasure::ConstantX, cap.unwrap_or(DEFAULT_SEGMENT_CAP)))
        .collect::<Result<Vec<_>>>()?;
    ps.iter()
        .map(|&p| {
            let energies = examples.iter().map(|c| c.lp_energy(p)).collect::<Result<Vec<_>>>()?;
            let norms: Vec<f64> = energies.iter().map(|e| e.powf(1.0 / p)).collect();
            let energy_per_mass: Vec<f64> = energies
                .iter()
                .zip(&examples)
                .map(|(e, c)| {
                    let (num, den) = c.lattice.mass_rational();
                    e / (num as f64 / den as f64)
                })
                .collect();
            let ratios = norms.windows(2).map(|w| w[1] / w[0]).collect();
            let bounded = energy_per_mass.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
            Ok(GrowthRow { p, k: ks.to_vec(), norms, energies, energy_per_mass, ratios, bounded })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use nalgebra::{DMatrix, DVector};

    fn unit_grid(n: usize) -> GridSpec {
        GridSpec::spanning(&Aabb::unit_cube(), n).unwrap()
    }

    fn pair(n: usize) -> ChargeSpec {
        let a = Charge { point: [0.25, 0.5, 0.5], charge: 1 };
        let b = Charge { point: [0.75, 0.5, 0.5], charge: -1 };
        ChargeSpec::new(vec![a, b], unit_grid(n)).unwrap()
    }

    /// Divergence of edge fluxes built from its definition as a dense matrix
    /// over the existing edges.
    fn dense_constraint(grid: &GridSpec) -> (DMatrix<f64>, Vec<(usize, usize)>) {
        let mut edges = Vec::new();
        for n in 0..grid.node_count() {
            let c = grid.unindex(n);
            for a in 0..3 {
                if c[a] + 1 < grid.dims[a] {
                    edges.push((n, a));
                }
            }
        }
        let v = grid.cell_volume();
        let mut m = DMatrix::zeros(grid.node_count(), edges.len());
        for (col, &(n, a)) in edges.iter().enumerate() {
            let mut c = grid.unindex(n);
            c[a] += 1;
            let up = grid.index(c[0], c[1], c[2]);
            m[(n, col)] += v / grid.spacing[a];
            m[(up, col)] -= v / grid.spacing[a];
        }
        (m, edges)
    }

    /// Null-space Newton with dense linear algebra.
    fn dense_oracle(spec: &ChargeSpec, p: f64, eps: f64) -> f64 {
        let g = spec.grid;
        let (a, edges) = dense_constraint(&g);
        let q = DVector::from_vec(spec.deposit());
        let svd = a.clone().svd(true, true);
        let f0 = svd.solve(&q, 1e-12).unwrap();
        let v_t = svd.v_t.unwrap();
        let tol = 1e-10 * svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
        // Orthonormal basis of ker A from the projector onto the complement
        // of the row space.
        let row = v_t.rows(0, rank).transpose();
        let comp = DMatrix::<f64>::identity(edges.len(), edges.len()) - &row * row.transpose();
        let eig = comp.symmetric_eigen();
        let keep: Vec<usize> = (0..edges.len()).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        assert_eq!(keep.len(), edges.len() - rank);
        let z = eig.eigenvectors.select_columns(&keep);
        let vol = g.cell_volume();
        let node_vectors = |f: &DVector<f64>| {
            let mut x = vec![[0.0; 3]; g.node_count()];
            for (col, &(n, a)) in edges.iter().enumerate() {
                x[n][a] = f[col];
            }
            x
        };
        let energy = |f: &DVector<f64>| -> f64 {
            node_vectors(f)
                .iter()
                .map(|x| vol * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + eps * eps).powf(p / 2.0))
                .sum()
        };
        let mut y = DVector::zeros(z.ncols());
        for _ in 0..200 {
            let f = &f0 + &z * &y;
            let x = node_vectors(&f);
            let mut grad = DVector::zeros(edges.len());
            let mut hess = DMatrix::zeros(edges.len(), edges.len());
            for (ci, &(ni, ai)) in edges.iter().enumerate() {
                let xn = x[ni];
                let s = xn[0] * xn[0] + xn[1] * xn[1] + xn[2] * xn[2] + eps * eps;
                grad[ci] = vol * p * s.powf(p / 2.0 - 1.0) * xn[ai];
                for (cj, &(nj, aj)) in edges.iter().enumerate() {
                    if nj == ni {
                        let delta = if ai == aj { 1.0 } else { 0.0 };
                        hess[(ci, cj)] = vol
                            * p
                            * (s.powf(p / 2.0 - 1.0) * delta + (p - 2.0) * s.powf(p / 2.0 - 2.0) * xn[ai] * xn[aj]);
                    }
                }
            }
            let gz = z.transpose() * &grad;
            let hz = z.transpose() * &hess * &z;
            let step = hz.cholesky().unwrap().solve(&(-&gz));
            let dec = -gz.dot(&step);
            if dec < 1e-16 {
                break;
            }
            let e0 = energy(&f);
            let mut t = 1.0;
            while energy(&(&f0 + &z * (&y + &step * t))) > e0 - 1e-4 * t * dec && t > 1e-12 {
                t *= 0.5;
            }
            y += &step * t;
        }
        energy(&(&f0 + &z * &y))
    }

    #[test]
    fn adjoint_matches_dense_transpose() {
        let g = GridSpec::new([0.0; 3], [0.5, 0.25, 1.0], [3, 4, 2]).unwrap();
        let e = EdgeGrid::new(g);
        let (a, edges) = dense_constraint(&g);
        let lambda: Vec<f64> = (0..g.node_count()).map(|i| (i as f64 * 0.37).sin()).collect();
        let at = a.transpose() * DVector::from_vec(lambda.clone());
        let mine = e.div_adjoint(&lambda);
        for (col, &(n, ax)) in edges.iter().enumerate() {
            assert!((at[col] - mine[3 * n + ax]).abs() < 1e-12);
        }
    }

    #[test]
    fn no_atoms_gives_zero() {
        let spec = ChargeSpec::new(vec![], unit_grid(4)).unwrap();
        let (sol, trace) = minimize_charged(&spec, 1.2, &SolverOptions::default()).unwrap();
        assert!(sol.fluxes.iter().all(|v| *v == 0.0));
        assert_eq!(sol.objective, 0.0);
        assert_eq!(trace.final_residual(), 0.0);
    }

    #[test]
    fn incompatible_charges() {
        let a = Charge { point: [0.5; 3], charge: 2 };
        assert!(matches!(ChargeSpec::new(vec![a], unit_grid(4)), Err(Error::Incompatible(2))));
    }

    #[test]
    fn matches_dense_oracle_and_trace_is_monotone() {
        let spec = pair(5);
        let (sol, trace) = minimize_charged(&spec, 1.2, &SolverOptions::default()).unwrap();
        assert!(trace.final_residual() <= 1e-8);
        for w in trace.objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{w:?}");
        }
        let oracle = dense_oracle(&spec, 1.2, sol.smoothing);
        assert!(((sol.objective - oracle) / oracle).abs() < 1e-4, "{} vs {}", sol.objective, oracle);
    }

    #[test]
    fn dipole_energy_bounds_the_minimum() {
        use crate::synthesis::{dipole, DipoleSpec};
        let spec = pair(5);
        let (sol, _) = minimize_charged(&spec, 1.2, &SolverOptions::default()).unwrap();
        let d = dipole(&DipoleSpec::new(Vec3::new(0.75, 0.5, 0.5), Vec3::new(0.25, 0.5, 0.5))).unwrap();
        let bound = ym_p(&d, 1.2, &Region::Box(Aabb::unit_cube()), &IntegrationOptions::default()).unwrap();
        assert!(sol.objective <= bound);
    }

    #[test]
    fn ym_p_of_constant_field_is_volume() {
        let f = FieldSource::Constant(Vec3::new(0.6, 0.0, 0.8));
        let v = ym_p(&f, 1.3, &Region::Box(Aabb::unit_cube()), &IntegrationOptions::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(ym_p(&FieldSource::zero(), 1.3, &Region::Box(Aabb::unit_cube()), &IntegrationOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn growth_flags() {
        let rows = growth_diagnostic(&[1.0, 1.2], &[1, 2, 3], None).unwrap();
        assert!(rows[0].bounded);
        assert!(!rows[1].bounded);
        assert!(rows[1].norms.windows(2).all(|w| w[1] > w[0]));
    }
}
