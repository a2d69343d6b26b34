//! Snapshot computation, POD and brick precomputation.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::database::{Bricks, RbDatabase};
use super::{ScalarProduct, SnapshotMesh};
use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness, harmonic_basis, solve_dirichlet, TriMesh};
use crate::geometry::{generate_convex_polygon, reference_polygon, AffineMap, Polygon};
use crate::linalg::{symmetric_eigen, CsrMatrix, DenseMatrix, Mat2};
use crate::par;

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineConfig {
    /// Vertex count of the polygons the database serves.
    pub n: usize,
    /// Number of training polygons `P`.
    pub train: usize,
    pub m_max: usize,
    /// Mesh size on the reference polygon.
    pub delta: f64,
    /// Mesh size on the training polygons.
    pub delta_k: f64,
    pub seed: u64,
    pub snapshot_mesh: SnapshotMesh,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        Self {
            n: 6,
            train: 100,
            m_max: 20,
            delta: 0.02,
            delta_k: 0.02,
            seed: 1,
            snapshot_mesh: SnapshotMesh::Independent,
        }
    }
}

/// Everything on the reference polygon that the snapshots are measured against.
pub struct ReferenceData {
    pub mesh: TriMesh,
    pub liftings: Vec<Vec<f64>>,
    /// Scalar-product matrix on interior nodes.
    pub scalar: CsrMatrix,
}

impl ReferenceData {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        let mesh = TriMesh::triangulate(&reference_polygon(n)?, delta)?;
        let liftings = harmonic_basis(&mesh)?;
        let interior = mesh.interior_nodes();
        let scalar = assemble_stiffness(&mesh, Mat2::IDENTITY)?.submatrix(interior, interior);
        Ok(Self {
            mesh,
            liftings,
            scalar,
        })
    }

    pub fn n(&self) -> usize {
        self.liftings.len()
    }

    pub fn num_interior(&self) -> usize {
        self.mesh.interior_nodes().len()
    }

    /// Scalar product `xᵀ S y` of two stacked vectors (`n` interior blocks).
    pub fn stacked_product(&self, x: &[f64], y: &[f64]) -> f64 {
        let ni = self.num_interior();
        (0..self.n())
            .map(|j| {
                let sy = self.scalar.matvec(&y[j * ni..(j + 1) * ni]);
                x[j * ni..(j + 1) * ni].iter().zip(&sy).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    }
}

/// Harmonic lifting `Λ̂_j` of the hat boundary datum of vertex `j`.
pub fn compute_lifting(ref_mesh: &TriMesh, j: usize) -> Result<Vec<f64>> {
    solve_dirichlet(ref_mesh, Mat2::IDENTITY, &ref_mesh.hat_trace(j), None)
}

/// Physical triangulation used for a training polygon.
pub fn snapshot_mesh(p: &Polygon, reference: &ReferenceData, delta_k: f64, policy: SnapshotMesh) -> Result<TriMesh> {
    match policy {
        SnapshotMesh::Independent => TriMesh::triangulate(p, delta_k),
        SnapshotMesh::PulledBack => TriMesh::with_level(p, reference.mesh.level()),
    }
}

/// `d̂_{j,δ} = I_δ(e_j ∘ ℬ_K⁻¹) − Λ̂_j` on the interior reference nodes, for
/// every vertex `j`, stacked into one vector.
pub fn compute_snapshot(
    p: &Polygon,
    reference: &ReferenceData,
    delta_k: f64,
    policy: SnapshotMesh,
) -> Result<Vec<f64>> {
    let n = reference.n();
    if p.n() != n {
        return Err(Error::NoDatabaseForN(p.n()));
    }
    let map = AffineMap::build(p)?;
    let mesh = snapshot_mesh(p, reference, delta_k, policy)?;
    let basis = harmonic_basis(&mesh)?;
    let interior = reference.mesh.interior_nodes();
    let ni = interior.len();
    let mut out = vec![0.0; n * ni];
    match policy {
        SnapshotMesh::PulledBack => {
            // node k of the physical mesh is the preimage of reference node k
            for j in 0..n {
                for (r, &k) in interior.iter().enumerate() {
                    out[j * ni + r] = basis[j][k] - reference.liftings[j][k];
                }
            }
        }
        SnapshotMesh::Independent => {
            for (r, &k) in interior.iter().enumerate() {
                let x = map.to_physical(reference.mesh.nodes()[k])?;
                let (t, l) = mesh
                    .locate(x, 1e-10)
                    .ok_or(Error::OutOfDomain { x: x[0], y: x[1] })?;
                let [a, b, c] = mesh.triangles()[t];
                for j in 0..n {
                    let v = l[0] * basis[j][a] + l[1] * basis[j][b] + l[2] * basis[j][c];
                    out[j * ni + r] = v - reference.liftings[j][k];
                }
            }
        }
    }
    Ok(out)
}

/// Training polygons and their stacked snapshot columns.
pub struct SnapshotSet {
    pub polygons: Vec<Polygon>,
    pub columns: Vec<Vec<f64>>,
    /// Polygons dropped because a snapshot could not be computed.
    pub rejected: usize,
}

/// Draws training polygons from `seed` until `count` snapshots succeed.
pub fn collect_snapshots(
    n: usize,
    count: usize,
    seed: u64,
    reference: &ReferenceData,
    delta_k: f64,
    policy: SnapshotMesh,
) -> Result<SnapshotSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = SnapshotSet {
        polygons: Vec::with_capacity(count),
        columns: Vec::with_capacity(count),
        rejected: 0,
    };
    let mut rounds = 0;
    while set.columns.len() < count {
        rounds += 1;
        if rounds > 50 {
            return Err(Error::GenerationFailure(format!(
                "only {} of {count} snapshots succeeded",
                set.columns.len()
            )));
        }
        let need = count - set.columns.len();
        let polys = (0..need)
            .map(|_| generate_convex_polygon(n, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let cols = par::map(&polys, |p| compute_snapshot(p, reference, delta_k, policy));
        for (p, c) in polys.into_iter().zip(cols) {
            match c {
                Ok(c) => {
                    set.polygons.push(p);
                    set.columns.push(c);
                }
                Err(e) => {
                    log::warn!("training polygon dropped: {e}");
                    set.rejected += 1;
                }
            }
        }
    }
    Ok(set)
}

/// POD of the snapshot columns.
pub struct Pod {
    /// All eigenvalues of the correlation matrix, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors (columns) of the correlation matrix.
    pub eigenvectors: DenseMatrix,
    /// Stacked reduced-basis vectors `ξ^ℓ`, `ℓ < m`.
    pub basis: Vec<Vec<f64>>,
}

/// Correlation matrix `C = P⁻¹ UᵀSU`.
pub fn correlation_matrix(columns: &[Vec<f64>], reference: &ReferenceData) -> DenseMatrix {
    let p = columns.len();
    let len = columns.first().map_or(0, |c| c.len());
    let ni = reference.num_interior();
    let n = reference.n();
    let u = Mat::<f64>::from_fn(len, p, |r, k| columns[k][r]);
    let su_cols: Vec<Vec<f64>> = par::map(columns, |c| {
        let mut out = Vec::with_capacity(len);
        for j in 0..n {
            out.extend(reference.scalar.matvec(&c[j * ni..(j + 1) * ni]));
        }
        out
    });
    let su = Mat::<f64>::from_fn(len, p, |r, k| su_cols[k][r]);
    let c = u.transpose() * &su;
    let inv_p = 1.0 / p as f64;
    DenseMatrix::from_fn(p, p, |a, b| 0.5 * (c[(a, b)] + c[(b, a)]) * inv_p)
}

pub fn pod(columns: &[Vec<f64>], reference: &ReferenceData, m: usize) -> Result<Pod> {
    let p = columns.len();
    if m > p || p == 0 {
        return Err(Error::InvalidArgument(format!(
            "POD needs 1 <= P and M <= P (P = {p}, M = {m})"
        )));
    }
    let c = correlation_matrix(columns, reference);
    let eig = symmetric_eigen(&c)?;
    let len = columns[0].len();
    let scale = 1.0 / (p as f64).sqrt();
    let u = Mat::<f64>::from_fn(len, p, |r, k| columns[k][r]);
    let z = Mat::<f64>::from_fn(p, m, |k, l| eig.vectors[(k, l)] * scale);
    let xi = &u * &z;
    let basis = (0..m).map(|l| (0..len).map(|r| xi[(r, l)]).collect()).collect();
    Ok(Pod {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        basis,
    })
}

/// Splits stacked interior vectors into full nodal vectors `[ℓ][j][node]`.
pub fn unstack_basis(basis: &[Vec<f64>], reference: &ReferenceData) -> Vec<Vec<Vec<f64>>> {
    let ni = reference.num_interior();
    let nn = reference.mesh.num_nodes();
    let interior = reference.mesh.interior_nodes();
    basis
        .iter()
        .map(|stacked| {
            (0..reference.n())
                .map(|j| {
                    let mut v = vec![0.0; nn];
                    for (r, &k) in interior.iter().enumerate() {
                        v[k] = stacked[j * ni + r];
                    }
                    v
                })
                .collect()
        })
        .collect()
}

/// Integrals of `𝒜^ν` against gradients of the liftings and basis members on
/// each reference fan triangle (exact for P1).
pub fn precompute_bricks(mesh: &TriMesh, liftings: &[Vec<f64>], basis: &[Vec<Vec<f64>>]) -> Bricks {
    let n = liftings.len();
    let m = basis.len();
    let ncol = n + n * m;
    let col = |c: usize| -> &[f64] {
        if c < n {
            &liftings[c]
        } else {
            let (j, l) = ((c - n) / m, (c - n) % m);
            &basis[l][j]
        }
    };
    let per_fan = par::map_range(n, |i| {
        let tris: Vec<usize> = mesh.fan_triangles(i).collect();
        let grads: Vec<[[f64; 2]; 3]> = tris.iter().map(|&t| mesh.shape_gradients(t)).collect();
        let areas: Vec<f64> = tris.iter().map(|&t| mesh.triangle_area(t)).collect();
        let gx = |r: usize, c: usize| {
            let t = mesh.triangles()[tris[r]];
            let v = col(c);
            grads[r][0][0] * v[t[0]] + grads[r][1][0] * v[t[1]] + grads[r][2][0] * v[t[2]]
        };
        let gy = |r: usize, c: usize| {
            let t = mesh.triangles()[tris[r]];
            let v = col(c);
            grads[r][0][1] * v[t[0]] + grads[r][1][1] * v[t[1]] + grads[r][2][1] * v[t[2]]
        };
        let x = Mat::<f64>::from_fn(tris.len(), ncol, gx);
        let y = Mat::<f64>::from_fn(tris.len(), ncol, gy);
        let wx = Mat::<f64>::from_fn(tris.len(), ncol, |r, c| areas[r] * x[(r, c)]);
        let wy = Mat::<f64>::from_fn(tris.len(), ncol, |r, c| areas[r] * y[(r, c)]);
        let q1 = x.transpose() * &wx;
        let q2 = y.transpose() * &wy;
        // z[p][q] = ∫ ∂ₓcol_p ∂ᵧcol_q
        let z = x.transpose() * &wy;
        let q = move |nu: usize, p: usize, r: usize| -> f64 {
            match nu {
                0 => q1[(p, r)],
                1 => q2[(p, r)],
                2 => z[(p, r)] + z[(r, p)],
                _ => z[(r, p)] - z[(p, r)],
            }
        };
        let mut local = Bricks::zeros(n, m);
        for nu in 0..4 {
            for j in 0..n {
                for jp in 0..n {
                    let gi = local.g_index(0, nu, j, jp);
                    local.g[gi] = q(nu, j, jp);
                    for l in 0..m {
                        let cj = n + j * m + l;
                        let fi = local.f_index(0, nu, j, jp, l);
                        local.f[fi] = q(nu, cj, jp);
                        for lp in 0..m {
                            let ai = local.a_index(0, nu, j, jp, l, lp);
                            local.a[ai] = q(nu, cj, n + jp * m + lp);
                        }
                    }
                }
            }
        }
        local
    });
    let mut bricks = Bricks::zeros(n, m);
    let (sa, sf, sg) = (4 * n * n * m * m, 4 * n * n * m, 4 * n * n);
    for (i, local) in per_fan.into_iter().enumerate() {
        bricks.a[i * sa..(i + 1) * sa].copy_from_slice(&local.a[..sa]);
        bricks.f[i * sf..(i + 1) * sf].copy_from_slice(&local.f[..sf]);
        bricks.g[i * sg..(i + 1) * sg].copy_from_slice(&local.g[..sg]);
    }
    bricks
}

/// Builds a database from already computed snapshots.
pub fn build_database(cfg: &OfflineConfig, reference: ReferenceData, snapshots: &SnapshotSet) -> Result<RbDatabase> {
    let pod = pod(&snapshots.columns, &reference, cfg.m_max)?;
    let basis = unstack_basis(&pod.basis, &reference);
    let bricks = precompute_bricks(&reference.mesh, &reference.liftings, &basis);
    Ok(RbDatabase {
        n: cfg.n,
        train: snapshots.columns.len(),
        m_max: cfg.m_max,
        delta: cfg.delta,
        delta_k: cfg.delta_k,
        seed: cfg.seed,
        scalar_product: ScalarProduct::H1Semi,
        snapshot_mesh: cfg.snapshot_mesh,
        ref_mesh: reference.mesh,
        liftings: reference.liftings,
        basis,
        eigenvalues: pod.eigenvalues,
        bricks,
    })
}

/// The whole offline phase for one vertex count.
pub fn run_offline(cfg: &OfflineConfig) -> Result<RbDatabase> {
    if cfg.n < 3 {
        return Err(Error::InvalidArgument(format!("n must be >= 3, got {}", cfg.n)));
    }
    if cfg.m_max == 0 || cfg.m_max > cfg.train {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= M_max <= P (M_max = {}, P = {})",
            cfg.m_max, cfg.train
        )));
    }
    let reference = ReferenceData::new(cfg.n, cfg.delta)?;
    let snapshots = collect_snapshots(cfg.n, cfg.train, cfg.seed, &reference, cfg.delta_k, cfg.snapshot_mesh)?;
    log::info!(
        "n = {}: {} snapshots ({} rejected), {} reference nodes",
        cfg.n,
        snapshots.columns.len(),
        snapshots.rejected,
        reference.mesh.num_nodes()
    );
    build_database(cfg, reference, &snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_reference(n: usize) -> ReferenceData {
        ReferenceData::new(n, 0.1).unwrap()
    }

    #[test]
    fn liftings_sum_to_one() {
        let r = small_reference(5);
        for k in 0..r.mesh.num_nodes() {
            let s: f64 = r.liftings.iter().map(|l| l[k]).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-10);
        }
        assert_eq!(compute_lifting(&r.mesh, 2).unwrap(), r.liftings[2]);
    }

    #[test]
    fn snapshot_of_reference_polygon_vanishes() {
        let r = small_reference(6);
        let p = reference_polygon(6).unwrap();
        let s = compute_snapshot(&p, &r, 0.1, SnapshotMesh::PulledBack).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-12));
        let s = compute_snapshot(&p, &r, 0.05, SnapshotMesh::Independent).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-2));
    }

    #[test]
    fn snapshot_blocks_sum_to_zero() {
        let r = small_reference(5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = generate_convex_polygon(5, &mut rng).unwrap();
        for policy in [SnapshotMesh::Independent, SnapshotMesh::PulledBack] {
            let s = compute_snapshot(&p, &r, 0.07, policy).unwrap();
            let ni = r.num_interior();
            for k in 0..ni {
                let sum: f64 = (0..5).map(|j| s[j * ni + k]).sum();
                assert!(sum.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pod_small_cases() {
        let r = small_reference(3);
        let len = 3 * r.num_interior();
        let c: Vec<f64> = (0..len).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let pod2 = pod(&[c.clone(), c.clone()], &r, 2).unwrap();
        assert!(pod2.eigenvalues[1].abs() < 1e-12 * pod2.eigenvalues[0]);
        assert!(pod(&[c], &r, 2).is_err());
    }

    #[test]
    fn pod_projection_error_decreases() {
        let r = small_reference(4);
        let set = collect_snapshots(4, 8, 3, &r, 0.1, SnapshotMesh::PulledBack).unwrap();
        let pod = pod(&set.columns, &r, 8).unwrap();
        assert!(pod.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(*pod.eigenvalues.last().unwrap() >= -1e-12);
        // ‖ξ^ℓ‖²_S = λ_ℓ and the ξ are S-orthogonal
        for a in 0..8 {
            for b in 0..8 {
                let ip = r.stacked_product(&pod.basis[a], &pod.basis[b]);
                let expect = if a == b { pod.eigenvalues[a] } else { 0.0 };
                assert_abs_diff_eq!(ip, expect, epsilon = 1e-10 * pod.eigenvalues[0]);
            }
        }
        let mut prev = f64::INFINITY;
        let total: f64 = set.columns.iter().map(|c| r.stacked_product(c, c)).sum();
        for m in 0..=8 {
            let mut err = 0.0;
            for c in &set.columns {
                let mut resid = c.clone();
                for l in 0..m {
                    let coef = r.stacked_product(c, &pod.basis[l]) / pod.eigenvalues[l];
                    for (x, y) in resid.iter_mut().zip(&pod.basis[l]) {
                        *x -= coef * y;
                    }
                }
                err += r.stacked_product(&resid, &resid);
            }
            assert!(err <= prev + 1e-12 * total);
            prev = err;
        }
        assert!(prev <= 1e-16 * total);
    }
}
