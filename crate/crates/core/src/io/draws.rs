//! Columnar on-disk layout of a [`DrawStore`].
//!
//! A draws directory holds one little-endian binary file per parameter family
//! and a `manifest.txt` of `key = value` lines. The manifest records the
//! dimensions and a SHA-256 digest over the family files, so corruption and
//! manifest edits are both detected on read.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::params::{LatentState, ParamSet, ProfileTables};
use crate::sampler::{Draw, DrawStore, StoreDims};
use crate::structure::BlockStructure;

pub const MANIFEST: &str = "manifest.txt";
const FORMAT: &str = "bm3-draws";
const VERSION: u32 = 1;

/// Family files in checksum order.
const FAMILIES: [&str; 10] = [
    "lambda.f64",
    "alpha.f64",
    "xi.f64",
    "kappa.f64",
    "s.u32",
    "v.u32",
    "pi.f64",
    "z.u32",
    "accept.u8",
    "loglik.f64",
];

fn put_f64(buf: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_u32(buf: &mut Vec<u8>, xs: impl IntoIterator<Item = usize>) {
    for x in xs {
        buf.extend_from_slice(&(x as u32).to_le_bytes());
    }
}

fn digest(files: &[(&str, Vec<u8>)]) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in files {
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn write_draws(store: &DrawStore, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut bufs: Vec<(&str, Vec<u8>)> = FAMILIES.iter().map(|&f| (f, Vec::new())).collect();
    for d in &store.draws {
        put_f64(&mut bufs[0].1, d.params.lambda.as_slice());
        put_f64(&mut bufs[1].1, &d.params.alpha);
        put_f64(&mut bufs[2].1, &d.params.xi);
        for k in &d.params.kappa {
            put_f64(&mut bufs[3].1, k);
        }
        put_u32(&mut bufs[4].1, d.blocks.groups.iter().copied());
        put_u32(&mut bufs[5].1, d.blocks.cutpoints.iter().flatten().copied());
        put_f64(&mut bufs[6].1, &d.state.pi);
        put_u32(&mut bufs[7].1, d.state.z.iter().copied());
    }
    bufs[8].1 = store.accepted.iter().map(|&a| a as u8).collect();
    put_f64(&mut bufs[9].1, &store.loglik);

    let dims = &store.dims;
    let manifest = format!(
        "format = {FORMAT}\nversion = {VERSION}\nn = {}\ncategories = {}\nt_max = {}\nsubpops = {}\ngroups = {}\nperiods = {}\nprofiles = {}\ncatalog_size = {}\ndraws = {}\niterations = {}\nchains = {}\nburn_in = {}\nthin = {}\nseed = {}\nchain = {}\nsigma_alpha = {:016x}\nchecksum = sha256:{}\n",
        dims.n,
        join(&dims.categories),
        dims.t_max,
        dims.n_subpops,
        dims.groups,
        dims.periods,
        dims.profiles,
        dims.catalog_size,
        store.draws.len(),
        store.iterations,
        store.n_chains(),
        store.burn_in,
        store.thin,
        store.seed,
        store.chain,
        store.sigma_alpha.to_bits(),
        digest(&bufs),
    );
    for (name, bytes) in &bufs {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

struct Manifest<'a> {
    path: &'a Path,
    entries: BTreeMap<String, String>,
}

impl Manifest<'_> {
    fn raw(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| self.error(format!("missing key `{key}`")))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| self.error(format!("`{key}` = `{raw}` is not a count")))
    }

    fn error(&self, reason: String) -> Error {
        Error::ManifestDims {
            path: self.path.to_path_buf(),
            reason,
        }
    }
}

fn parse_manifest(path: &Path) -> Result<Manifest<'_>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: no as u64 + 1,
            reason: "expected `key = value`".into(),
        })?;
        entries.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(Manifest { path, entries })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn f64s(&mut self, count: usize) -> Vec<f64> {
        let out = self.bytes[self.pos..self.pos + 8 * count]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        self.pos += 8 * count;
        out
    }

    fn u32s(&mut self, count: usize) -> Vec<usize> {
        let out = self.bytes[self.pos..self.pos + 4 * count]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")) as usize)
            .collect();
        self.pos += 4 * count;
        out
    }
}

pub fn read_draws(dir: &Path) -> Result<DrawStore> {
    let manifest_path = dir.join(MANIFEST);
    let m = parse_manifest(&manifest_path)?;
    if m.raw("format")? != FORMAT {
        return Err(m.error(format!("not a {FORMAT} directory")));
    }
    if m.usize("version")? != VERSION as usize {
        return Err(m.error(format!("unsupported version {}", m.raw("version")?)));
    }

    let mut files: Vec<(&str, Vec<u8>)> = Vec::with_capacity(FAMILIES.len());
    for name in FAMILIES {
        let path = dir.join(name);
        files.push((name, fs::read(&path).map_err(|e| Error::io(&path, e))?));
    }
    let expected = m.raw("checksum")?.trim_start_matches("sha256:").to_string();
    let found = digest(&files);
    if expected != found {
        return Err(Error::Checksum {
            path: dir.to_path_buf(),
            expected,
            found,
        });
    }

    let categories: Vec<usize> = m
        .raw("categories")?
        .split(',')
        .map(|c| c.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| m.error("`categories` is not a list of counts".into()))?;
    let dims = StoreDims {
        n: m.usize("n")?,
        categories,
        t_max: m.usize("t_max")?,
        n_subpops: m.usize("subpops")?,
        groups: m.usize("groups")?,
        periods: m.usize("periods")?,
        profiles: m.usize("profiles")?,
        catalog_size: m.usize("catalog_size")?,
    };
    let l = m.usize("draws")?;
    let iterations = m.usize("iterations")?;
    let traces = iterations * m.usize("chains")?;
    let sigma_bits = u64::from_str_radix(m.raw("sigma_alpha")?, 16)
        .map_err(|_| m.error("`sigma_alpha` is not a hex bit pattern".into()))?;

    let (g_n, r_n, k_n, c_n) = (dims.groups, dims.periods, dims.profiles, dims.n_subpops);
    if g_n == 0 || r_n == 0 || k_n == 0 || c_n == 0 {
        return Err(m.error("zero model dimension".into()));
    }
    let rows: usize = dims.categories.iter().sum();
    let slots = g_n * c_n;
    let per_draw = [
        8 * rows * k_n,
        8 * k_n,
        8 * g_n,
        8 * slots * dims.catalog_size,
        4 * dims.p(),
        4 * slots * (r_n - 1),
        8 * dims.n * k_n,
        4 * dims.n * g_n * r_n,
    ];
    for (q, size) in per_draw.iter().enumerate() {
        if files[q].1.len() != l * size {
            return Err(m.error(format!(
                "{} holds {} bytes, dimensions imply {}",
                FAMILIES[q],
                files[q].1.len(),
                l * size
            )));
        }
    }
    if files[8].1.len() != traces || files[9].1.len() != 8 * traces {
        return Err(m.error("trace length disagrees with `iterations` and `chains`".into()));
    }

    let mut readers: Vec<Reader> = files.iter().map(|(_, b)| Reader { bytes: b, pos: 0 }).collect();
    let mut draws = Vec::with_capacity(l);
    for _ in 0..l {
        let lambda = ProfileTables::from_flat(&dims.categories, k_n, readers[0].f64s(rows * k_n))?;
        let alpha = readers[1].f64s(k_n);
        let xi = readers[2].f64s(g_n);
        let kappa = (0..slots).map(|_| readers[3].f64s(dims.catalog_size)).collect();
        let groups = readers[4].u32s(dims.p());
        let cutpoints = (0..slots).map(|_| readers[5].u32s(r_n - 1)).collect();
        let pi = readers[6].f64s(dims.n * k_n);
        let z = readers[7].u32s(dims.n * g_n * r_n);
        draws.push(Draw {
            params: ParamSet {
                lambda,
                alpha,
                xi,
                kappa,
            },
            blocks: BlockStructure {
                n_groups: g_n,
                n_periods: r_n,
                n_subpops: c_n,
                t_max: dims.t_max,
                groups,
                cutpoints,
            },
            state: LatentState {
                n_profiles: k_n,
                n_groups: g_n,
                n_periods: r_n,
                pi,
                z,
            },
        });
    }
    Ok(DrawStore {
        dims,
        iterations,
        burn_in: m.usize("burn_in")?,
        thin: m.usize("thin")?,
        seed: m.raw("seed")?.parse().map_err(|_| m.error("bad `seed`".into()))?,
        chain: m.usize("chain")?,
        sigma_alpha: f64::from_bits(sigma_bits),
        draws,
        accepted: files[8].1.iter().map(|&b| b != 0).collect(),
        loglik: readers[9].f64s(traces),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{run_chain, ModelDims, SamplerConfig};
    use crate::simulate::{builtin_setting, draw_dataset, Setting};

    fn store() -> DrawStore {
        let (config, blocks, params) = builtin_setting(Setting::III);
        let (d, _) = draw_dataset(&config.with_n(15), &blocks, &params.lambda, &params.alpha).unwrap();
        let cfg = SamplerConfig {
            iterations: 20,
            burn_in: 10,
            thin: 2,
            ..Default::default()
        };
        run_chain(
            &d,
            ModelDims {
                groups: 2,
                periods: 2,
                profiles: 3,
            },
            &cfg,
            0,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let s = store();
        let dir = tempfile::tempdir().unwrap();
        write_draws(&s, dir.path()).unwrap();
        assert_eq!(read_draws(dir.path()).unwrap(), s);
    }

    #[test]
    fn corrupted_byte_fails_checksum() {
        let s = store();
        let dir = tempfile::tempdir().unwrap();
        write_draws(&s, dir.path()).unwrap();
        let path = dir.path().join("pi.f64");
        let mut bytes = fs::read(&path).unwrap();
        bytes[17] ^= 0x40;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_draws(dir.path()), Err(Error::Checksum { .. })));
    }

    #[test]
    fn edited_profile_count_fails_dims() {
        let s = store();
        let dir = tempfile::tempdir().unwrap();
        write_draws(&s, dir.path()).unwrap();
        let path = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("profiles = 3", "profiles = 4");
        fs::write(&path, text).unwrap();
        assert!(matches!(read_draws(dir.path()), Err(Error::ManifestDims { .. })));
    }

    #[test]
    fn pooled_chains_round_trip() {
        let a = store();
        let mut b = a.clone();
        b.accepted.iter_mut().for_each(|x| *x = !*x);
        let pooled = crate::sampler::pool_chains(vec![a, b]).unwrap();
        assert_eq!(pooled.n_chains(), 2);
        let dir = tempfile::tempdir().unwrap();
        write_draws(&pooled, dir.path()).unwrap();
        let back = read_draws(dir.path()).unwrap();
        assert_eq!(back, pooled);
        // the two chains' post-burn-in indicators are complementary
        assert!((back.acceptance_rate() - 0.5).abs() < 1e-15);
    }
}
