//! Synthetic data from the generative process, and the built-in designs.

use crate::data::{Dataset, MISSING};
use crate::error::{Error, Result};
use crate::params::{LatentState, ParamSet, ProfileTables};
use crate::rng::{categorical, dirichlet, dirichlet_into, Purpose, Streams};
use crate::structure::{BlockStructure, CutpointCatalog};

/// How subjects are assigned to observed subpopulations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubpopRule {
    /// Subject `i` (0-based) goes to subpopulation `i mod C`.
    RoundRobin,
    Given(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    /// Visit count per subject; a single entry applies to everyone.
    pub visits: Vec<usize>,
    pub categories: Vec<usize>,
    pub n_groups: usize,
    pub n_periods: usize,
    pub n_profiles: usize,
    pub n_subpops: usize,
    pub subpops: SubpopRule,
    pub seed: u64,
}

impl SimConfig {
    pub fn with_n(&self, n: usize) -> SimConfig {
        SimConfig { n, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> SimConfig {
        SimConfig { seed, ..self.clone() }
    }

    pub fn p(&self) -> usize {
        self.categories.len()
    }

    pub fn t_max(&self) -> usize {
        self.visits.iter().copied().max().unwrap_or(0)
    }

    pub fn subject_visits(&self) -> Result<Vec<usize>> {
        match self.visits.len() {
            1 => Ok(vec![self.visits[0]; self.n]),
            len if len == self.n => Ok(self.visits.clone()),
            len => Err(Error::dims("visits", self.n, len)),
        }
    }

    pub fn subject_subpops(&self) -> Result<Vec<usize>> {
        match &self.subpops {
            SubpopRule::RoundRobin => Ok((0..self.n).map(|i| i % self.n_subpops).collect()),
            SubpopRule::Given(labels) if labels.len() == self.n => Ok(labels.clone()),
            SubpopRule::Given(labels) => Err(Error::dims("subpops", self.n, labels.len())),
        }
    }

    fn check(&self) -> Result<()> {
        let positive = [
            ("n", self.n),
            ("p", self.p()),
            ("n_groups", self.n_groups),
            ("n_periods", self.n_periods),
            ("n_profiles", self.n_profiles),
            ("n_subpops", self.n_subpops),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.n_groups > self.p() {
            return Err(Error::InfeasibleDims(format!(
                "{} groups for {} items",
                self.n_groups,
                self.p()
            )));
        }
        if self.n_periods > self.t_max() {
            return Err(Error::InfeasibleDims(format!(
                "{} periods for {} visits",
                self.n_periods,
                self.t_max()
            )));
        }
        Ok(())
    }
}

/// The parameters and latent variables a simulated dataset was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub blocks: BlockStructure,
    /// `xi` and `kappa` are uniform: they play no role once `blocks` is fixed.
    pub params: ParamSet,
    pub state: LatentState,
}

/// Draws `pi_i ~ Dirichlet(alpha)`, `z_{i,g,r} ~ Categorical(pi_i)` and every
/// response from the profile of its block.
pub fn draw_dataset(
    config: &SimConfig,
    blocks: &BlockStructure,
    lambda: &ProfileTables,
    alpha: &[f64],
) -> Result<(Dataset, GroundTruth)> {
    config.check()?;
    let n = config.n;
    let p = config.p();
    let k_n = config.n_profiles;
    let (g_n, r_n) = (config.n_groups, config.n_periods);
    let visits = config.subject_visits()?;
    let subpop = config.subject_subpops()?;
    let t_max = config.t_max();

    if blocks.groups.len() != p {
        return Err(Error::dims("blocks.groups", p, blocks.groups.len()));
    }
    if blocks.n_groups != g_n || blocks.n_periods != r_n || blocks.n_subpops != config.n_subpops {
        return Err(Error::InvalidValue {
            field: "blocks".into(),
            reason: "block structure dimensions disagree with the simulation config".into(),
        });
    }
    if blocks.t_max != t_max {
        return Err(Error::dims("blocks.t_max", t_max, blocks.t_max));
    }
    blocks.validate()?;
    if lambda.categories() != config.categories.as_slice() || lambda.n_profiles() != k_n {
        return Err(Error::InvalidValue {
            field: "lambda".into(),
            reason: "table shapes disagree with the simulation config".into(),
        });
    }
    lambda.validate()?;
    if alpha.len() != k_n {
        return Err(Error::dims("alpha", k_n, alpha.len()));
    }

    let streams = Streams::new(config.seed);
    let periods = blocks.period_map();
    let mut y = vec![MISSING; n * t_max * p];
    let mut pi = vec![0.0; n * k_n];
    let mut z = vec![0usize; n * g_n * r_n];
    let mut column = Vec::with_capacity(8);
    for i in 0..n {
        let mut rng = streams.rng(Purpose::Simulate, 0, i as u64);
        let pi_i = &mut pi[i * k_n..(i + 1) * k_n];
        dirichlet_into(alpha, &mut rng, pi_i);
        let z_i = &mut z[i * g_n * r_n..(i + 1) * g_n * r_n];
        for slot in z_i.iter_mut() {
            *slot = categorical(pi_i, &mut rng);
        }
        let c = subpop[i];
        for t in 0..visits[i] {
            for j in 0..p {
                let g = blocks.groups[j];
                let r = periods.slot(g * config.n_subpops + c)[t] as usize;
                let k = z_i[g * r_n + r];
                column.clear();
                column.extend((0..config.categories[j]).map(|cat| lambda.get(j, cat, k)));
                y[(i * t_max + t) * p + j] = categorical(&column, &mut rng) as u8;
            }
        }
    }

    let dataset = Dataset::new(config.categories.clone(), visits, subpop, config.n_subpops, y)?;
    let catalog = CutpointCatalog::new(t_max, r_n)?;
    let truth = GroundTruth {
        blocks: blocks.clone(),
        params: ParamSet {
            lambda: lambda.clone(),
            alpha: alpha.to_vec(),
            xi: vec![1.0 / g_n as f64; g_n],
            kappa: vec![vec![1.0 / catalog.len() as f64; catalog.len()]; g_n * config.n_subpops],
        },
        state: LatentState {
            n_profiles: k_n,
            n_groups: g_n,
            n_periods: r_n,
            pi,
            z,
        },
    };
    Ok((dataset, truth))
}

/// The three block-structure designs used for recovery studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    /// Homogeneous periods.
    I,
    /// Group-specific periods.
    II,
    /// Group- and subpopulation-specific periods.
    III,
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Setting::I),
            "II" | "2" => Ok(Setting::II),
            "III" | "3" => Ok(Setting::III),
            other => Err(Error::Config(format!("unknown setting `{other}`"))),
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Setting::I => "I",
            Setting::II => "II",
            Setting::III => "III",
        };
        f.write_str(s)
    }
}

/// Five 3 x 4 response tables as printed (rows are categories, columns
/// profiles). Three printed columns do not sum to one; [`repeated_tables`]
/// rescales every column onto the simplex.
const PRINTED_TABLES: [[[f64; 4]; 3]; 5] = [
    [
        [0.1, 0.30, 0.45, 0.70],
        [0.8, 0.10, 0.45, 0.05],
        [0.1, 0.60, 0.45, 0.25],
    ],
    [
        [0.2, 0.45, 0.55, 0.80],
        [0.7, 0.05, 0.40, 0.10],
        [0.1, 0.05, 0.05, 0.10],
    ],
    [
        [0.3, 0.45, 0.60, 0.90],
        [0.6, 0.05, 0.35, 0.05],
        [0.1, 0.50, 0.05, 0.55],
    ],
    [
        [0.1, 0.25, 0.50, 0.90],
        [0.1, 0.65, 0.05, 0.05],
        [0.8, 0.10, 0.45, 0.05],
    ],
    [
        [0.2, 0.45, 0.60, 0.90],
        [0.7, 0.05, 0.05, 0.05],
        [0.1, 0.50, 0.35, 0.05],
    ],
];

/// The base tables repeated `repeats` times, item `5u + m` using table `m`.
pub fn repeated_tables(repeats: usize) -> ProfileTables {
    let base: Vec<Vec<Vec<f64>>> = PRINTED_TABLES
        .iter()
        .map(|t| {
            let sums: Vec<f64> = (0..4).map(|k| t.iter().map(|row| row[k]).sum()).collect();
            t.iter().map(|row| (0..4).map(|k| row[k] / sums[k]).collect()).collect()
        })
        .collect();
    let tables: Vec<Vec<Vec<f64>>> = (0..repeats).flat_map(|_| base.iter().cloned()).collect();
    ProfileTables::from_tables(&tables).expect("static tables are rectangular")
}

fn uniform_params(lambda: ProfileTables, n_groups: usize, slots: usize, catalog: usize) -> ParamSet {
    let k_n = lambda.n_profiles();
    ParamSet {
        lambda,
        alpha: vec![1.0; k_n],
        xi: vec![1.0 / n_groups as f64; n_groups],
        kappa: vec![vec![1.0 / catalog as f64; catalog]; slots],
    }
}

/// `(p, T, G, R, K) = (10, 10, 2, 2, 4)`, three categories per item,
/// `alpha = (1, 1, 1, 1)`, items 1-5 in group 1 and 6-10 in group 2.
pub fn builtin_setting(which: Setting) -> (SimConfig, BlockStructure, ParamSet) {
    let (p, t, g_n, r_n) = (10usize, 10usize, 2usize, 2usize);
    let groups: Vec<usize> = (0..p).map(|j| j / 5).collect();
    let (n_subpops, cutpoints) = match which {
        Setting::I => (1, vec![vec![5], vec![5]]),
        // The group-specific periods are proportional versions of a 30-visit
        // layout: group 1 switches late, group 2 early.
        Setting::II => (1, vec![vec![7], vec![3]]),
        // Slot order is g * C + c: subpopulation 1 switches after visit 3,
        // subpopulation 2 after visit 7, in both groups.
        Setting::III => (2, vec![vec![3], vec![7], vec![3], vec![7]]),
    };
    let blocks = BlockStructure {
        n_groups: g_n,
        n_periods: r_n,
        n_subpops,
        t_max: t,
        groups,
        cutpoints,
    };
    let config = SimConfig {
        n: 500,
        visits: vec![t],
        categories: vec![3; p],
        n_groups: g_n,
        n_periods: r_n,
        n_profiles: 4,
        n_subpops,
        subpops: SubpopRule::RoundRobin,
        seed: 0,
    };
    let catalog = CutpointCatalog::new(t, r_n).expect("static design").len();
    let params = uniform_params(repeated_tables(2), g_n, g_n * n_subpops, catalog);
    (config, blocks, params)
}

/// Design for the information-criterion study:
/// `(n, p, T, G, R, K) = (100, 15, 10, 3, 2, 4)` with five items per group and
/// a shared cut-point after visit 5.
pub fn selection_design() -> (SimConfig, BlockStructure, ParamSet) {
    let (p, t, g_n) = (15usize, 10usize, 3usize);
    let blocks = BlockStructure::homogeneous((0..p).map(|j| j / 5).collect(), g_n, 1, t, vec![5]);
    let config = SimConfig {
        n: 100,
        visits: vec![t],
        categories: vec![3; p],
        n_groups: g_n,
        n_periods: 2,
        n_profiles: 4,
        n_subpops: 1,
        subpops: SubpopRule::RoundRobin,
        seed: 0,
    };
    let catalog = CutpointCatalog::new(t, 2).expect("static design").len();
    let params = uniform_params(repeated_tables(3), g_n, g_n, catalog);
    (config, blocks, params)
}

/// A clinical-registry-shaped design: 300 subjects, 29 four-category items in
/// four groups, up to 18 unbalanced visits, two subpopulations and three
/// ordered severity profiles. Visit counts and tables are drawn from `seed`.
pub fn registry_design(seed: u64) -> (SimConfig, BlockStructure, ParamSet) {
    let (n, p, t_max, g_n, r_n, k_n, c_n) = (300usize, 29usize, 18usize, 4usize, 2usize, 3usize, 2usize);
    let streams = Streams::new(seed);
    let mut rng = streams.rng(Purpose::Simulate, 1, 0);
    let mut visits: Vec<usize> = (0..n).map(|_| 4 + categorical(&[1.0; 15], &mut rng)).collect();
    visits[0] = t_max;

    let sizes = [9usize, 3, 9, 8];
    let groups: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(g, &m)| std::iter::repeat_n(g, m))
        .collect();
    // Subpopulation 2 progresses later than subpopulation 1.
    let early = [11usize, 8, 12, 10];
    let late = [15usize, 12, 16, 14];
    let cutpoints = (0..g_n).flat_map(|g| [vec![early[g]], vec![late[g]]]).collect();
    let blocks = BlockStructure {
        n_groups: g_n,
        n_periods: r_n,
        n_subpops: c_n,
        t_max,
        groups,
        cutpoints,
    };

    // Profile k puts most of its mass on category k (normal, slight, mild),
    // with a tail into the most severe category.
    let mut tables = Vec::with_capacity(p);
    for _ in 0..p {
        let mut table = vec![vec![0.0; k_n]; 4];
        for k in 0..k_n {
            let mut conc = [1.0, 1.0, 1.0, 1.0];
            conc[k] = 12.0;
            conc[3] += 2.0 * k as f64;
            let col = dirichlet(&conc, &mut rng);
            for (c, row) in table.iter_mut().enumerate() {
                row[k] = col[c];
            }
        }
        tables.push(table);
    }
    let lambda = ProfileTables::from_tables(&tables).expect("rectangular");
    let config = SimConfig {
        n,
        visits,
        categories: vec![4; p],
        n_groups: g_n,
        n_periods: r_n,
        n_profiles: k_n,
        n_subpops: c_n,
        subpops: SubpopRule::RoundRobin,
        seed,
    };
    let catalog = CutpointCatalog::new(t_max, r_n).expect("static design").len();
    let mut params = uniform_params(lambda, g_n, g_n * c_n, catalog);
    params.alpha = vec![0.6, 0.3, 0.15];
    (config, blocks, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate;

    #[test]
    fn setting_cutpoints() {
        let (_, b1, _) = builtin_setting(Setting::I);
        assert!(b1.cutpoints.iter().all(|v| v == &[5]));
        assert_eq!(b1.period_labels(0, 0), vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let (_, b2, _) = builtin_setting(Setting::II);
        assert_eq!(b2.cuts(0, 0), &[7]);
        assert_eq!(b2.cuts(1, 0), &[3]);
        let (c3, b3, _) = builtin_setting(Setting::III);
        assert_eq!(c3.n_subpops, 2);
        for g in 0..2 {
            assert_eq!(b3.cuts(g, 0), &[3]);
            assert_eq!(b3.cuts(g, 1), &[7]);
        }
    }

    #[test]
    fn setting_tables() {
        let (config, blocks, params) = builtin_setting(Setting::I);
        assert_eq!(blocks.groups, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(config.categories, vec![3; 10]);
        assert_eq!(params.alpha, vec![1.0; 4]);
        params.lambda.validate().unwrap();
        assert_eq!(params.lambda.column(0, 0), vec![0.1, 0.8, 0.1]);
        assert_eq!(params.lambda.column(5, 0), vec![0.1, 0.8, 0.1]);
        assert_eq!(params.lambda.column(3, 3), vec![0.9, 0.05, 0.05]);
        // Printed with column sum 1.35; rescaled.
        for c in 0..3 {
            assert!((params.lambda.get(0, c, 2) - 1.0 / 3.0).abs() < 1e-15);
        }
        for j in 0..10 {
            for k in 0..4 {
                let s: f64 = params.lambda.column(j, k).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "item {j} profile {k}");
            }
        }
    }

    #[test]
    fn simulated_data_validates_and_is_deterministic() {
        for setting in [Setting::I, Setting::II, Setting::III] {
            let (config, blocks, params) = builtin_setting(setting);
            let config = config.with_n(40).with_seed(9);
            let (d1, t1) = draw_dataset(&config, &blocks, &params.lambda, &params.alpha).unwrap();
            let (d2, t2) = draw_dataset(&config, &blocks, &params.lambda, &params.alpha).unwrap();
            assert_eq!(d1, d2);
            assert_eq!(t1, t2);
            validate(&d1, &t1.blocks, &t1.params).unwrap();
            let (d3, _) = draw_dataset(&config.with_seed(10), &blocks, &params.lambda, &params.alpha).unwrap();
            assert_ne!(d1.y, d3.y);
        }
    }

    #[test]
    fn concentrated_dirichlet_mean() {
        let (config, blocks, params) = builtin_setting(Setting::I);
        let config = config.with_n(10_000).with_seed(3);
        let (_, truth) = draw_dataset(&config, &blocks, &params.lambda, &[1e6; 4]).unwrap();
        for k in 0..4 {
            let m: f64 = (0..config.n).map(|i| truth.state.pi[i * 4 + k]).sum::<f64>() / 1e4;
            assert!((m - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn registry_design_is_valid() {
        let (config, blocks, params) = registry_design(5);
        assert_eq!(config.t_max(), 18);
        let (data, truth) = draw_dataset(&config, &blocks, &params.lambda, &params.alpha).unwrap();
        validate(&data, &truth.blocks, &truth.params).unwrap();
        assert_eq!(data.p(), 29);
        assert!(data.visits.iter().any(|&t| t < 18));
    }

    #[test]
    fn rejects_too_many_groups() {
        let (config, blocks, params) = builtin_setting(Setting::I);
        let mut bad = config.clone();
        bad.n_groups = 11;
        assert!(draw_dataset(&bad, &blocks, &params.lambda, &params.alpha).is_err());
    }
}
