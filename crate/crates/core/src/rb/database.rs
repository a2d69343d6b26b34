//! The per-vertex-count reduced-basis database and its on-disk format.
//!
//! A database lives in its own directory holding `manifest.txt` and one flat
//! little-endian `f64` file per array (row-major, shapes in the manifest).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{ScalarProduct, SnapshotMesh};
use crate::error::{Error, Result};
use crate::fem::TriMesh;
use crate::geometry::reference_polygon;

pub const FORMAT_VERSION: &str = "RBDB v1";

/// Affine-decomposition bricks on the reference fan triangles, for
/// `ν = 1..4` (stored 0-based).
///
/// * `A[i][ν][j][j'][ℓ][ℓ'] = ∫_{T̂_i} 𝒜^ν∇ξ_j^ℓ·∇ξ_{j'}^{ℓ'}`
/// * `F[i][ν][j][j'][ℓ]     = ∫_{T̂_i} 𝒜^ν∇ξ_j^ℓ·∇Λ_{j'}`
/// * `G[i][ν][j][j']        = ∫_{T̂_i} 𝒜^ν∇Λ_j·∇Λ_{j'}`
#[derive(Clone, Debug, PartialEq)]
pub struct Bricks {
    pub(crate) n: usize,
    pub(crate) m: usize,
    pub(crate) a: Vec<f64>,
    pub(crate) f: Vec<f64>,
    pub(crate) g: Vec<f64>,
}

impl Bricks {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            a: vec![0.0; n * 4 * n * n * m * m],
            f: vec![0.0; n * 4 * n * n * m],
            g: vec![0.0; n * 4 * n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub(crate) fn a_index(&self, i: usize, nu: usize, j: usize, jp: usize, l: usize, lp: usize) -> usize {
        ((((i * 4 + nu) * self.n + j) * self.n + jp) * self.m + l) * self.m + lp
    }

    #[inline]
    pub(crate) fn f_index(&self, i: usize, nu: usize, j: usize, jp: usize, l: usize) -> usize {
        (((i * 4 + nu) * self.n + j) * self.n + jp) * self.m + l
    }

    #[inline]
    pub(crate) fn g_index(&self, i: usize, nu: usize, j: usize, jp: usize) -> usize {
        ((i * 4 + nu) * self.n + j) * self.n + jp
    }

    pub fn a(&self, i: usize, nu: usize, j: usize, jp: usize, l: usize, lp: usize) -> f64 {
        self.a[self.a_index(i, nu, j, jp, l, lp)]
    }

    pub fn f(&self, i: usize, nu: usize, j: usize, jp: usize, l: usize) -> f64 {
        self.f[self.f_index(i, nu, j, jp, l)]
    }

    pub fn g(&self, i: usize, nu: usize, j: usize, jp: usize) -> f64 {
        self.g[self.g_index(i, nu, j, jp)]
    }

    /// The sub-bricks for the first `m` basis members.
    pub fn truncated(&self, m: usize) -> Self {
        assert!(m <= self.m);
        let mut out = Self::zeros(self.n, m);
        for i in 0..self.n {
            for nu in 0..4 {
                for j in 0..self.n {
                    for jp in 0..self.n {
                        for l in 0..m {
                            let dst = out.f_index(i, nu, j, jp, l);
                            out.f[dst] = self.f(i, nu, j, jp, l);
                            for lp in 0..m {
                                let dst = out.a_index(i, nu, j, jp, l, lp);
                                out.a[dst] = self.a(i, nu, j, jp, l, lp);
                            }
                        }
                    }
                }
            }
        }
        out.g.copy_from_slice(&self.g);
        out
    }
}

/// Offline output for one vertex count.
#[derive(Clone, Debug)]
pub struct RbDatabase {
    pub n: usize,
    pub train: usize,
    /// Number of basis members held (≤ the number computed offline when
    /// loaded truncated).
    pub m_max: usize,
    pub delta: f64,
    pub delta_k: f64,
    pub seed: u64,
    pub scalar_product: ScalarProduct,
    pub snapshot_mesh: SnapshotMesh,
    pub ref_mesh: TriMesh,
    /// `Λ̂_j`, full nodal vectors on `ref_mesh`.
    pub liftings: Vec<Vec<f64>>,
    /// `ξ̂_j^ℓ` at `basis[ℓ][j]`, full nodal vectors (zero on the boundary).
    pub basis: Vec<Vec<Vec<f64>>>,
    /// All POD eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    pub bricks: Bricks,
}

struct ArraySpec {
    name: &'static str,
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl RbDatabase {
    /// Copy holding only the first `m` basis members.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m > self.m_max {
            return Err(Error::InvalidArgument(format!(
                "requested M = {m} exceeds the database's M_max = {}",
                self.m_max
            )));
        }
        let mut db = self.clone();
        db.m_max = m;
        db.basis.truncate(m);
        db.bricks = self.bricks.truncated(m);
        Ok(db)
    }

    fn arrays(&self) -> Vec<ArraySpec> {
        let nn = self.ref_mesh.num_nodes();
        let nt = self.ref_mesh.num_triangles();
        vec![
            ArraySpec {
                name: "ref_nodes",
                shape: vec![nn, 2],
                data: self.ref_mesh.nodes().iter().flat_map(|p| [p[0], p[1]]).collect(),
            },
            ArraySpec {
                name: "ref_triangles",
                shape: vec![nt, 3],
                data: self
                    .ref_mesh
                    .triangles()
                    .iter()
                    .flat_map(|t| t.map(|v| v as f64))
                    .collect(),
            },
            ArraySpec {
                name: "liftings",
                shape: vec![self.n, nn],
                data: self.liftings.concat(),
            },
            ArraySpec {
                name: "basis",
                shape: vec![self.m_max, self.n, nn],
                data: self.basis.iter().flat_map(|b| b.concat()).collect(),
            },
            ArraySpec {
                name: "eigenvalues",
                shape: vec![self.eigenvalues.len()],
                data: self.eigenvalues.clone(),
            },
            ArraySpec {
                name: "bricks_a",
                shape: vec![self.n, 4, self.n, self.n, self.m_max, self.m_max],
                data: self.bricks.a.clone(),
            },
            ArraySpec {
                name: "bricks_f",
                shape: vec![self.n, 4, self.n, self.n, self.m_max],
                data: self.bricks.f.clone(),
            },
            ArraySpec {
                name: "bricks_g",
                shape: vec![self.n, 4, self.n, self.n],
                data: self.bricks.g.clone(),
            },
        ]
    }

    /// Writes the database into `dir` (created if missing).
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = String::new();
        let _ = writeln!(manifest, "{FORMAT_VERSION}");
        let _ = writeln!(manifest, "n {}", self.n);
        let _ = writeln!(manifest, "train {}", self.train);
        let _ = writeln!(manifest, "m_max {}", self.m_max);
        let _ = writeln!(manifest, "delta {:.16e}", self.delta);
        let _ = writeln!(manifest, "delta_k {:.16e}", self.delta_k);
        let _ = writeln!(manifest, "seed {}", self.seed);
        let _ = writeln!(manifest, "level {}", self.ref_mesh.level());
        let _ = writeln!(manifest, "scalar_product {}", self.scalar_product.tag());
        let _ = writeln!(manifest, "snapshot_mesh {}", self.snapshot_mesh.tag());
        for arr in self.arrays() {
            let bytes: Vec<u8> = arr.data.iter().flat_map(|v| v.to_le_bytes()).collect();
            let file = format!("{}.bin", arr.name);
            let path = dir.join(&file);
            std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            let shape: Vec<String> = arr.shape.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(
                manifest,
                "array {} {} {} {}",
                arr.name,
                shape.join("x"),
                file,
                hex(&Sha256::digest(&bytes))
            );
        }
        let path = dir.join("manifest.txt");
        std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
    }

    /// Loads a database, optionally keeping only the first `m` basis members.
    pub fn load(dir: &Path, m: Option<usize>) -> Result<Self> {
        let manifest_path = dir.join("manifest.txt");
        if !manifest_path.exists() {
            return Err(Error::DatabaseNotFound(dir.to_path_buf()));
        }
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let lerr = |reason: String| Error::Load {
            path: manifest_path.clone(),
            reason,
        };
        let mut lines = text.lines();
        if lines.next() != Some(FORMAT_VERSION) {
            return Err(lerr(format!("unsupported format (expected `{FORMAT_VERSION}`)")));
        }
        let mut scalars: BTreeMap<String, String> = BTreeMap::new();
        let mut arrays: BTreeMap<String, (Vec<usize>, String, String)> = BTreeMap::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                [] => {}
                ["array", name, shape, file, digest] => {
                    let shape = shape
                        .split('x')
                        .map(|s| s.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| lerr(format!("bad shape for {name}")))?;
                    arrays.insert(name.to_string(), (shape, file.to_string(), digest.to_string()));
                }
                [key, value] => {
                    scalars.insert(key.to_string(), value.to_string());
                }
                _ => return Err(lerr(format!("malformed manifest line `{line}`"))),
            }
        }
        let get = |k: &str| scalars.get(k).ok_or_else(|| lerr(format!("missing `{k}`")));
        let parse_usize = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| lerr(format!("bad value for `{k}`")))
        };
        let parse_f64 = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| lerr(format!("bad value for `{k}`")))
        };
        let n = parse_usize("n")?;
        let train = parse_usize("train")?;
        let stored_m = parse_usize("m_max")?;
        let delta = parse_f64("delta")?;
        let delta_k = parse_f64("delta_k")?;
        let seed: u64 = get("seed")?.parse().map_err(|_| lerr("bad seed".into()))?;
        let level = parse_usize("level")? as u32;
        let scalar_product = ScalarProduct::from_tag(get("scalar_product")?)
            .ok_or_else(|| lerr("unknown scalar product".into()))?;
        let snapshot_mesh = SnapshotMesh::from_tag(get("snapshot_mesh")?)
            .ok_or_else(|| lerr("unknown snapshot mesh policy".into()))?;

        let read = |name: &str, expect: &[usize]| -> Result<Vec<f64>> {
            let (shape, file, digest) = arrays
                .get(name)
                .ok_or_else(|| lerr(format!("missing array `{name}`")))?;
            if shape != expect {
                return Err(lerr(format!("array `{name}` has shape {shape:?}, expected {expect:?}")));
            }
            let path: PathBuf = dir.join(file);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let len: usize = shape.iter().product();
            if bytes.len() != 8 * len {
                return Err(Error::Load {
                    path,
                    reason: format!("truncated array: {} bytes, expected {}", bytes.len(), 8 * len),
                });
            }
            if hex(&Sha256::digest(&bytes)) != *digest {
                return Err(Error::Load {
                    path,
                    reason: "checksum mismatch".into(),
                });
            }
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };

        let ref_mesh = TriMesh::with_level(&reference_polygon(n)?, level)?;
        let nn = ref_mesh.num_nodes();
        let nodes = read("ref_nodes", &[nn, 2])?;
        let tris = read("ref_triangles", &[ref_mesh.num_triangles(), 3])?;
        let same_nodes = ref_mesh
            .nodes()
            .iter()
            .zip(nodes.chunks_exact(2))
            .all(|(p, q)| p[0] == q[0] && p[1] == q[1]);
        let same_tris = ref_mesh
            .triangles()
            .iter()
            .zip(tris.chunks_exact(3))
            .all(|(t, q)| (0..3).all(|k| t[k] as f64 == q[k]));
        if !same_nodes || !same_tris {
            return Err(lerr("stored reference mesh does not match its level".into()));
        }
        let liftings: Vec<Vec<f64>> = read("liftings", &[n, nn])?.chunks(nn).map(|c| c.to_vec()).collect();
        let basis_flat = read("basis", &[stored_m, n, nn])?;
        let basis: Vec<Vec<Vec<f64>>> = basis_flat
            .chunks(n * nn)
            .map(|b| b.chunks(nn).map(|c| c.to_vec()).collect())
            .collect();
        let eig_len = arrays
            .get("eigenvalues")
            .map(|(s, _, _)| s.iter().product())
            .unwrap_or(0);
        let eigenvalues = read("eigenvalues", &[eig_len])?;
        let bricks = Bricks {
            n,
            m: stored_m,
            a: read("bricks_a", &[n, 4, n, n, stored_m, stored_m])?,
            f: read("bricks_f", &[n, 4, n, n, stored_m])?,
            g: read("bricks_g", &[n, 4, n, n])?,
        };
        let db = Self {
            n,
            train,
            m_max: stored_m,
            delta,
            delta_k,
            seed,
            scalar_product,
            snapshot_mesh,
            ref_mesh,
            liftings,
            basis,
            eigenvalues,
            bricks,
        };
        match m {
            Some(m) => db.truncated(m),
            None => Ok(db),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Databases for several vertex counts, keyed by `n`.
#[derive(Clone, Debug, Default)]
pub struct RbLibrary {
    dbs: BTreeMap<usize, RbDatabase>,
}

impl RbLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, db: RbDatabase) {
        self.dbs.insert(db.n, db);
    }

    pub fn get(&self, n: usize) -> Result<&RbDatabase> {
        self.dbs.get(&n).ok_or(Error::NoDatabaseForN(n))
    }

    pub fn contains(&self, n: usize) -> bool {
        self.dbs.contains_key(&n)
    }

    pub fn vertex_counts(&self) -> Vec<usize> {
        self.dbs.keys().copied().collect()
    }

    /// Smallest `M_max` over the held databases.
    pub fn m_max(&self) -> usize {
        self.dbs.values().map(|d| d.m_max).min().unwrap_or(0)
    }

    /// Directory of the database for `n` under a library root.
    pub fn subdir(root: &Path, n: usize) -> PathBuf {
        root.join(format!("n{n}"))
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        for db in self.dbs.values() {
            db.save(&Self::subdir(root, db.n))?;
        }
        Ok(())
    }

    /// Loads every `n<N>/` database under `root` (or `root` itself if it is a
    /// single database directory).
    pub fn load(root: &Path, m: Option<usize>) -> Result<Self> {
        if !root.exists() {
            return Err(Error::DatabaseNotFound(root.to_path_buf()));
        }
        let mut lib = Self::new();
        if root.join("manifest.txt").exists() {
            lib.insert(RbDatabase::load(root, m)?);
            return Ok(lib);
        }
        let mut entries: Vec<PathBuf> = std::fs::read_dir(root)
            .map_err(|e| Error::io(root, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("manifest.txt").exists())
            .collect();
        entries.sort();
        for dir in entries {
            lib.insert(RbDatabase::load(&dir, m)?);
        }
        if lib.dbs.is_empty() {
            return Err(Error::DatabaseNotFound(root.to_path_buf()));
        }
        Ok(lib)
    }
}
