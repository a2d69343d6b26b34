//! Plain-text polygon datasets.
//!
//! ```text
//! POLYSET v1 N=<n> count=<c> seed=<s>
//! N x1 y1 x2 y2 ... xN yN
//! ```

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::generator::generate_convex_polygon;
use super::polygon::Polygon;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PolygonSet {
    pub n: usize,
    pub seed: u64,
    pub polygons: Vec<Polygon>,
}

impl PolygonSet {
    /// `count` random normalized convex `n`-gons drawn from one seeded stream.
    pub fn generate(n: usize, count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let polygons = (0..count)
            .map(|_| generate_convex_polygon(n, &mut rng))
            .collect::<Result<_>>()?;
        Ok(Self { n, seed, polygons })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "POLYSET v1 N={} count={} seed={}\n",
            self.n,
            self.polygons.len(),
            self.seed
        );
        for p in &self.polygons {
            let _ = write!(s, "{}", p.n());
            for v in p.vertices() {
                let _ = write!(s, " {:.16e} {:.16e}", v[0], v[1]);
            }
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("POLYSET") || fields.next() != Some("v1") {
            return Err(perr(1, "expected header `POLYSET v1`".into()));
        }
        let (mut n, mut count, mut seed) = (None, None, None);
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| perr(1, format!("bad header field `{f}`")))?;
            let bad = |_| perr(1, format!("bad value in `{f}`"));
            match k {
                "N" => n = Some(v.parse::<usize>().map_err(bad)?),
                "count" => count = Some(v.parse::<usize>().map_err(bad)?),
                "seed" => seed = Some(v.parse::<u64>().map_err(bad)?),
                _ => return Err(perr(1, format!("unknown header field `{k}`"))),
            }
        }
        let n = n.ok_or_else(|| perr(1, "missing N".into()))?;
        let count = count.ok_or_else(|| perr(1, "missing count".into()))?;
        let seed = seed.unwrap_or(0);
        let mut polygons = Vec::with_capacity(count);
        for (idx, line) in lines {
            let lno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let nums: Vec<&str> = line.split_whitespace().collect();
            let k: usize = nums[0]
                .parse()
                .map_err(|_| perr(lno, "bad vertex count".into()))?;
            if k != n {
                return Err(perr(lno, format!("polygon has {k} vertices, header says {n}")));
            }
            if nums.len() != 1 + 2 * k {
                return Err(perr(lno, format!("expected {} numbers", 1 + 2 * k)));
            }
            let mut verts = Vec::with_capacity(k);
            for i in 0..k {
                let x: f64 = nums[1 + 2 * i]
                    .parse()
                    .map_err(|_| perr(lno, "bad coordinate".into()))?;
                let y: f64 = nums[2 + 2 * i]
                    .parse()
                    .map_err(|_| perr(lno, "bad coordinate".into()))?;
                verts.push([x, y]);
            }
            polygons.push(Polygon::new(verts).map_err(|e| perr(lno, e.to_string()))?);
        }
        if polygons.len() != count {
            return Err(perr(
                text.lines().count(),
                format!("header says {count} polygons, found {}", polygons.len()),
            ));
        }
        Ok(Self { n, seed, polygons })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let set = PolygonSet::generate(5, 20, 9).unwrap();
        let back = PolygonSet::parse(&set.to_text(), Path::new("mem")).unwrap();
        assert_eq!(back.n, 5);
        assert_eq!(back.seed, 9);
        for (a, b) in set.polygons.iter().zip(&back.polygons) {
            assert_eq!(a.vertices(), b.vertices());
        }
    }

    #[test]
    fn malformed_input_reports_line() {
        let text = "POLYSET v1 N=3 count=1 seed=0\n3 0 0 1 0\n";
        match PolygonSet::parse(text, Path::new("x")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(PolygonSet::parse("", Path::new("x")).is_err());
    }
}
