//! Test-only helpers: random small instances and an independent reference
//! solver for the joint `(θ, u)` problem.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use cmf::huber::shrink;
use cmf::model::{sample_noise, DesignMatrix, NoiseSpec, OutlierDistribution};
use cmf::seeds;
use cmf::sensing::{build_cmf, SensingMatrix};

pub struct SmallInstance {
    pub design: DesignMatrix,
    pub sensing: SensingMatrix,
    pub theta: DVector<f64>,
    pub z: DVector<f64>,
    pub h: f64,
}

/// Gaussian design, CMF sensing and contaminated data, all from one seed.
pub fn small_instance(n: usize, k: usize, m: usize, seed: u64) -> SmallInstance {
    let mut rng = seeds::rng(seeds::derive(seed, &[1]));
    let hmat = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let design = DesignMatrix::new(hmat).unwrap();
    let sensing = build_cmf(&design, m, seeds::derive(seed, &[2])).unwrap();
    let theta = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let spec = NoiseSpec::new(0.1, 1.0, OutlierDistribution::Gaussian { sigma2_sq: 400.0 }).unwrap();
    let noise = sample_noise(&spec, n, seeds::derive(seed, &[3]));
    let y = design.entries() * &theta + noise.values;
    let z = sensing.entries() * y;
    let h = cmf::huber::solve_huber_threshold(0.1, 1.0).unwrap().h;
    SmallInstance { design, sensing, theta, z, h }
}

/// Solution of `min ‖z - T(Hθ + u)‖²_{(TTᵀ)⁻¹} + 2h‖u‖₁`.
pub struct JointSolution {
    pub theta: DVector<f64>,
    pub u: DVector<f64>,
    pub objective: f64,
}

/// `‖z - T(Hθ + u)‖²_{(TTᵀ)⁻¹} + 2h‖u‖₁` evaluated with a dense inverse.
pub fn joint_objective(inst: &SmallInstance, theta: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let t = inst.sensing.entries();
    let w = (t * t.transpose()).try_inverse().unwrap();
    let r = &inst.z - t * (inst.design.entries() * theta + u);
    r.dot(&(w * &r)) + 2.0 * inst.h * u.lp_norm(1)
}

/// Reference solver: whiten with the Cholesky factor of `TTᵀ`, run exact
/// block coordinate descent (closed-form θ block, scalar soft-threshold
/// updates for u) and finish by solving the KKT system on the detected
/// support and signs.
pub fn reference_solve(inst: &SmallInstance) -> JointSolution {
    let t = inst.sensing.entries();
    let gram = t * t.transpose();
    let l = gram.cholesky().unwrap().l();
    let linv = l.clone().try_inverse().unwrap();
    let a = &linv * t;
    let b = &linv * (t * inst.design.entries());
    let rhs = &linv * &inst.z;
    let h = inst.h;
    let (m, n) = a.shape();
    let k = b.ncols();

    let btb_inv = (b.transpose() * &b).try_inverse().unwrap();
    let col_sq: Vec<f64> = (0..n).map(|j| a.column(j).norm_squared()).collect();
    let mut u = DVector::zeros(n);
    let mut theta = &btb_inv * b.transpose() * &rhs;
    let mut r = &rhs - &b * &theta;
    for _ in 0..200_000 {
        let mut max_change: f64 = 0.0;
        for j in 0..n {
            let old = u[j];
            let aj = a.column(j);
            let new = shrink(old + aj.dot(&r) / col_sq[j], h / col_sq[j]);
            if new != old {
                r.axpy(old - new, &aj, 1.0);
                u[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        let new_theta = &btb_inv * b.transpose() * (&rhs - &a * &u);
        max_change = max_change.max((&new_theta - &theta).amax());
        theta = new_theta;
        r = &rhs - &b * &theta - &a * &u;
        if max_change < 1e-15 {
            break;
        }
    }

    // polish on the support
    let support: Vec<usize> = (0..n).filter(|&j| u[j] != 0.0).collect();
    if support.len() + k <= m {
        let mut x = DMatrix::zeros(m, k + support.len());
        x.columns_mut(0, k).copy_from(&b);
        for (c, &j) in support.iter().enumerate() {
            x.set_column(k + c, &a.column(j));
        }
        let mut g = x.transpose() * &rhs;
        for (c, &j) in support.iter().enumerate() {
            g[k + c] -= h * u[j].signum();
        }
        if let Some(inv) = (x.transpose() * &x).try_inverse() {
            let sol = inv * g;
            let mut u_pol = DVector::zeros(n);
            for (c, &j) in support.iter().enumerate() {
                u_pol[j] = sol[k + c];
            }
            let theta_pol = sol.rows(0, k).into_owned();
            let signs_ok = support.iter().all(|&j| u_pol[j].signum() == u[j].signum());
            let r_pol = &rhs - &b * &theta_pol - &a * &u_pol;
            let kkt_ok = (0..n)
                .filter(|j| !support.contains(j))
                .all(|j| a.column(j).dot(&r_pol).abs() <= h * (1.0 + 1e-9));
            if signs_ok && kkt_ok {
                u = u_pol;
                theta = theta_pol;
            }
        }
    }
    let objective = joint_objective(inst, &theta, &u);
    JointSolution { theta, u, objective }
}
