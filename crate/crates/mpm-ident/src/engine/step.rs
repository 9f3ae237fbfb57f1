//! The transfer kernels and the time loop.

use rayon::prelude::*;

use crate::constitutive::{cauchy_stress, return_map};
use crate::error::{Error, Result};
use crate::math::{Mat3, Scalar, Vec3};

use super::{GridSpec, SimConfig, SimGrid, SimState, Snapshot, SnapshotSink};

/// Particles per scatter chunk in parallel mode. Fixed so the reduction
/// order (and therefore the result) does not depend on the thread count.
const P2G_CHUNK: usize = 1024;

/// Quadratic B-spline stencil for one particle: the base node index and the
/// three per-axis weights. Weights carry tangents because the particle
/// position does.
pub struct Stencil {
    pub base: [usize; 3],
    pub w: [[Scalar; 3]; 3],
    /// Position in grid units, for node-offset computations.
    pub cell: [Scalar; 3],
}

/// Quadratic B-spline weights around `pos`. Requires the whole stencil to be
/// inside the grid (one cell from every face).
pub fn bspline_weights(pos: Vec3, grid: &GridSpec) -> Result<Stencil> {
    let inv_dx = 1.0 / grid.dx;
    let mut base = [0usize; 3];
    let mut w = [[Scalar::zero(); 3]; 3];
    let mut cell = [Scalar::zero(); 3];
    for axis in 0..3 {
        let x = (pos.comp(axis) - grid.origin[axis]) * inv_dx;
        let b = (x.val - 0.5).floor();
        if b < 0.0 || b + 2.0 > (grid.resolution[axis] - 1) as f64 {
            return Err(Error::OutOfDomain { pos: pos.values() });
        }
        // Offset from the base node, in (0.5, 1.5).
        let fx = x - b;
        let half = Scalar::new(0.5);
        w[axis][0] = (Scalar::new(1.5) - fx).sq() * half;
        w[axis][1] = Scalar::new(0.75) - (fx - 1.0).sq();
        w[axis][2] = (fx - half).sq() * half;
        base[axis] = b as usize;
        cell[axis] = x;
    }
    Ok(Stencil { base, w, cell })
}

/// One simulation driver with its reusable grid storage.
pub struct Stepper {
    pub config: SimConfig,
    grid: SimGrid,
    pool: Option<rayon::ThreadPool>,
    cfl_warned: bool,
}

impl Stepper {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let grid = SimGrid::new(config.grid);
        let pool = if config.threads > 0 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.threads)
                    .build()
                    .map_err(|e| Error::validation("threads", e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Stepper { config, grid, pool, cfl_warned: false })
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    /// Particle-to-grid scatter: mass, affine momentum, and the fused
    /// MLS-MPM stress contribution.
    pub fn p2g(&mut self, state: &SimState) -> Result<()> {
        self.grid.clear();
        let spec = self.grid.spec;
        let dt = self.config.dt;

        if let Some(pool) = &self.pool {
            let n = state.particles.len();
            let n_chunks = n.div_ceil(P2G_CHUNK);
            let partials: Vec<Result<(Vec<Scalar>, Vec<Vec3>)>> = pool.install(|| {
                (0..n_chunks)
                    .into_par_iter()
                    .map(|c| {
                        let lo = c * P2G_CHUNK;
                        let hi = (lo + P2G_CHUNK).min(n);
                        let mut mass = vec![Scalar::zero(); spec.node_count()];
                        let mut mom = vec![Vec3::zero(); spec.node_count()];
                        for p in &state.particles[lo..hi] {
                            scatter_particle(p, state, &spec, dt, &mut mass, &mut mom)?;
                        }
                        Ok((mass, mom))
                    })
                    .collect()
            });
            let mut buffers = Vec::with_capacity(n_chunks);
            for p in partials {
                buffers.push(p?);
            }
            let grid = &mut self.grid;
            pool.install(|| {
                grid.mass
                    .par_iter_mut()
                    .zip(grid.momentum.par_iter_mut())
                    .enumerate()
                    .for_each(|(i, (m, mv))| {
                        for (bm, bmv) in &buffers {
                            *m += bm[i];
                            *mv += bmv[i];
                        }
                    });
            });
        } else {
            let grid = &mut self.grid;
            // Split borrows: scatter into locals to keep the loop simple.
            let (mass, mom) = (&mut grid.mass, &mut grid.momentum);
            for p in &state.particles {
                scatter_particle(p, state, &spec, dt, mass, mom)?;
            }
        }
        Ok(())
    }

    /// Momentum to velocity, gravity, external forces, boundary conditions.
    pub fn grid_update(&mut self, state: &SimState) {
        let spec = self.grid.spec;
        let dt = self.config.dt;
        let step = state.step_index as i64;
        let gravity = Vec3::from_array(self.config.gravity) * dt;

        let max_mass = self.grid.mass.iter().fold(0.0f64, |m, x| m.max(x.val));
        let eps_mass = 1e-12 * max_mass;

        // Per-force velocity increments for this step. Impulse forces divide
        // their vector across the window's steps and across the region's
        // mass, so the total momentum injected per step is exactly J/n.
        let mut active: Vec<(usize, Vec3)> = Vec::new();
        for (fi, force) in self.config.forces.iter().enumerate() {
            let (k_start, n_window) = force.step_window(dt);
            if step < k_start || step >= k_start + n_window {
                continue;
            }
            match force.kind {
                super::ForceKind::Gravity => {
                    active.push((fi, Vec3::from_array(force.vector) * dt));
                }
                super::ForceKind::Impulse => {
                    let mut region_mass = Scalar::zero();
                    for k in 0..spec.resolution[2] {
                        for j in 0..spec.resolution[1] {
                            for i in 0..spec.resolution[0] {
                                let idx = spec.index(i, j, k);
                                if self.grid.mass[idx].val > eps_mass
                                    && force.contains(spec.node_pos(i, j, k))
                                {
                                    region_mass += self.grid.mass[idx];
                                }
                            }
                        }
                    }
                    if region_mass.val > 0.0 {
                        let dv = Vec3::from_array(force.vector)
                            * (region_mass.recip() * (1.0 / n_window as f64));
                        active.push((fi, dv));
                    } else {
                        log::debug!("impulse force {fi} window step {step}: empty region");
                    }
                }
            }
        }

        let grid_mass = &self.grid.mass;
        let momentum = &self.grid.momentum;
        let forces = &self.config.forces;
        let boundaries = &self.config.boundaries;
        let update_node = |idx: usize, vel: &mut Vec3| {
            let (i, j, k) = unflatten(&spec, idx);
            let m = grid_mass[idx];
            if m.val <= eps_mass {
                *vel = Vec3::zero();
                return;
            }
            let mut v = momentum[idx] * m.recip();
            v += gravity;
            let pos = spec.node_pos(i, j, k);
            for (fi, dv) in &active {
                if forces[*fi].contains(pos) {
                    v += *dv;
                }
            }
            for bc in boundaries {
                apply_boundary(bc, &spec, (i, j, k), pos, &mut v);
            }
            *vel = v;
        };

        if let Some(pool) = &self.pool {
            let velocity = &mut self.grid.velocity;
            pool.install(|| {
                velocity
                    .par_iter_mut()
                    .enumerate()
                    .for_each(|(idx, vel)| update_node(idx, vel));
            });
        } else {
            for idx in 0..self.grid.velocity.len() {
                let mut v = self.grid.velocity[idx];
                update_node(idx, &mut v);
                self.grid.velocity[idx] = v;
            }
        }
    }

    /// Grid-to-particle gather, advection, and the plastic projection.
    pub fn g2p_advect(&mut self, state: &mut SimState) -> Result<()> {
        let spec = self.grid.spec;
        let dt = self.config.dt;
        let step = state.step_index;
        let velocity = &self.grid.velocity;
        let materials = &state.materials;

        let advance = |pi: usize, p: &mut super::Particle| -> Result<()> {
            let st = bspline_weights(p.pos, &spec)?;
            let inv_dx2 = 4.0 / (spec.dx * spec.dx);
            let mut v_new = Vec3::zero();
            let mut c_new = Mat3::zero();
            for dk in 0..3 {
                for dj in 0..3 {
                    for di in 0..3 {
                        let w = st.w[0][di] * st.w[1][dj] * st.w[2][dk];
                        let idx = spec.index(st.base[0] + di, st.base[1] + dj, st.base[2] + dk);
                        let vi = velocity[idx];
                        let node = spec.node_pos(st.base[0] + di, st.base[1] + dj, st.base[2] + dk);
                        let d = Vec3::from_array(node) - p.pos;
                        v_new += vi * w;
                        c_new += vi.outer(d).scale(w);
                    }
                }
            }
            let c_new = c_new.scale(Scalar::new(inv_dx2));
            p.vel = v_new;
            p.pos += v_new * dt;
            p.affine = c_new;

            let f_trial = (Mat3::identity() + c_new.scale(Scalar::new(dt))) * p.def_grad;
            let det = f_trial.determinant().val;
            if !(det > 0.0) {
                return Err(Error::BlowUp { particle: pi, step, det });
            }
            let mat = &materials[p.material_id];
            p.def_grad = return_map(mat.kind, &mat.params, &f_trial, dt).map_err(|e| match e {
                Error::InvertedElement { det } => Error::BlowUp { particle: pi, step, det },
                other => other,
            })?;
            Ok(())
        };

        if let Some(pool) = &self.pool {
            let failure = pool.install(|| {
                state
                    .particles
                    .par_iter_mut()
                    .enumerate()
                    .filter_map(|(pi, p)| advance(pi, p).err().map(|e| (pi, e)))
                    .min_by_key(|(pi, _)| *pi)
            });
            if let Some((_, e)) = failure {
                return Err(e);
            }
        } else {
            for (pi, p) in state.particles.iter_mut().enumerate() {
                advance(pi, p)?;
            }
        }
        Ok(())
    }

    /// One full step: P2G, grid update, G2P + advection.
    pub fn step(&mut self, state: &mut SimState) -> Result<()> {
        if !self.cfl_warned {
            let v_max = state
                .particles
                .iter()
                .flat_map(|p| p.vel.values())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            if self.config.dt * v_max >= self.config.grid.dx {
                log::warn!(
                    "CFL exceeded at step {}: dt*v_max = {:.3e} >= dx = {:.3e}",
                    state.step_index,
                    self.config.dt * v_max,
                    self.config.grid.dx
                );
                self.cfl_warned = true;
            }
        }
        self.p2g(state)?;
        self.grid_update(state);
        self.g2p_advect(state)?;
        state.step_index += 1;
        state.time += self.config.dt;
        Ok(())
    }

    /// Run `n_steps`, emitting the initial state and every `output_stride`-th
    /// step to the sink.
    pub fn run(&mut self, state: &mut SimState, sink: &mut dyn SnapshotSink) -> Result<()> {
        let mut frame = 0;
        sink.emit(&state.snapshot(frame))?;
        for k in 1..=self.config.n_steps {
            self.step(state)?;
            if k % self.config.output_stride == 0 {
                frame += 1;
                sink.emit(&state.snapshot(frame))?;
            }
        }
        Ok(())
    }

    /// Run and collect snapshots in memory.
    pub fn run_collect(&mut self, state: &mut SimState) -> Result<Vec<Snapshot>> {
        let mut sink = super::MemorySink::default();
        self.run(state, &mut sink)?;
        Ok(sink.snapshots)
    }
}

fn scatter_particle(
    p: &super::Particle,
    state: &SimState,
    spec: &GridSpec,
    dt: f64,
    mass: &mut [Scalar],
    mom: &mut [Vec3],
) -> Result<()> {
    let st = bspline_weights(p.pos, spec)?;
    let mat = &state.materials[p.material_id];
    let sigma = cauchy_stress(mat.kind, &mat.params, &p.def_grad, &p.affine)?;
    let jp = p.def_grad.determinant();
    // Fused MLS-MPM force: -dt · V₀ · 4/dx² · J · σ, combined with the APIC
    // affine term m·C into one matrix applied to the node offset.
    let coeff = jp * (-dt * p.volume0 * 4.0 / (spec.dx * spec.dx));
    let q = p.affine.scale(Scalar::new(p.mass)) + sigma.scale(coeff);
    let mv = p.vel * p.mass;

    for dk in 0..3 {
        for dj in 0..3 {
            for di in 0..3 {
                let w = st.w[0][di] * st.w[1][dj] * st.w[2][dk];
                let idx = spec.index(st.base[0] + di, st.base[1] + dj, st.base[2] + dk);
                let node = spec.node_pos(st.base[0] + di, st.base[1] + dj, st.base[2] + dk);
                let d = Vec3::from_array(node) - p.pos;
                mass[idx] += w * p.mass;
                mom[idx] += (mv + q * d) * w;
            }
        }
    }
    Ok(())
}

fn unflatten(spec: &GridSpec, idx: usize) -> (usize, usize, usize) {
    let i = idx % spec.resolution[0];
    let rest = idx / spec.resolution[0];
    (i, rest % spec.resolution[1], rest / spec.resolution[1])
}

fn apply_boundary(
    bc: &super::BoundaryCondition,
    spec: &GridSpec,
    (i, j, k): (usize, usize, usize),
    pos: [f64; 3],
    v: &mut Vec3,
) {
    match bc.kind {
        super::BoundaryKind::StickyPlane => {
            if signed_distance(bc, pos) <= 0.0 {
                *v = Vec3::zero();
            }
        }
        super::BoundaryKind::SlipPlane => {
            if signed_distance(bc, pos) <= 0.0 {
                let n = unit(bc.normal);
                slip(v, n, bc.friction);
            }
        }
        super::BoundaryKind::BoxWalls => {
            let m = bc.margin_cells;
            let res = spec.resolution;
            let faces: [(bool, [f64; 3]); 6] = [
                (i < m, [1.0, 0.0, 0.0]),
                (i >= res[0] - m, [-1.0, 0.0, 0.0]),
                (j < m, [0.0, 1.0, 0.0]),
                (j >= res[1] - m, [0.0, -1.0, 0.0]),
                (k < m, [0.0, 0.0, 1.0]),
                (k >= res[2] - m, [0.0, 0.0, -1.0]),
            ];
            for (hit, n) in faces {
                if hit {
                    if bc.sticky {
                        *v = Vec3::zero();
                    } else {
                        slip(v, n, bc.friction);
                    }
                }
            }
        }
    }
}

fn signed_distance(bc: &super::BoundaryCondition, pos: [f64; 3]) -> f64 {
    let n = unit(bc.normal);
    (0..3).map(|a| (pos[a] - bc.point[a]) * n[a]).sum()
}

fn unit(n: [f64; 3]) -> [f64; 3] {
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    [n[0] / len, n[1] / len, n[2] / len]
}

/// Remove the incoming normal component and apply Coulomb friction to the
/// tangential remainder: |Δv_t| ≤ μ·|removed normal velocity|.
fn slip(v: &mut Vec3, n: [f64; 3], friction: f64) {
    let nv = Vec3::from_f64(n[0], n[1], n[2]);
    let vn = v.dot(nv);
    if vn.val >= 0.0 {
        return;
    }
    let vt = *v - nv * vn;
    if friction <= 0.0 {
        *v = vt;
        return;
    }
    let vt_norm = vt.norm();
    if vt_norm.val <= 0.0 {
        *v = vt;
        return;
    }
    let scale = (Scalar::one() - (-vn) * friction / vt_norm).max(Scalar::zero());
    *v = vt * scale;
}

#[cfg(test)]
mod tests;
