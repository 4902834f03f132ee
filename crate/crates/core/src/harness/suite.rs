//! Suite runner: the (city x description x baseline x depth) trial matrix,
//! aggregate statistics, and report files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mos::{PriorMode, TrialConfig, TrialTarget, DEFAULT_MAX_STEPS};
use crate::planner::PlannerConfig;
use crate::plot::{line_plot, Series};
use crate::seeding::derive_seed;

use super::citygen::generate_city;
use super::langgen::generate_language;
use super::trial::{run_trial_configured, TrialResult};
use super::HarnessError;

const TARGET_ROTATION: &[&str] = &["RedCar", "BlueTruck", "GreenBike", "WhiteVan", "Drone"];

fn default_cities() -> u32 {
    5
}
fn default_descriptions() -> u32 {
    20
}
fn default_depths() -> Vec<u32> {
    vec![3]
}
fn default_baselines() -> Vec<PriorMode> {
    PriorMode::ALL.to_vec()
}
fn default_max_steps() -> u32 {
    DEFAULT_MAX_STEPS
}
fn default_simulations() -> u32 {
    1000
}
fn default_side() -> u32 {
    41
}

/// Declarative benchmark suite: everything downstream is derived from
/// `seed`, so equal configs produce byte-identical results files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    #[serde(default = "default_cities")]
    pub cities: u32,
    #[serde(default = "default_descriptions")]
    pub descriptions_per_city: u32,
    #[serde(default = "default_depths")]
    pub depths: Vec<u32>,
    #[serde(default = "default_baselines")]
    pub baselines: Vec<PriorMode>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
    #[serde(default = "default_simulations")]
    pub simulations: u32,
    #[serde(default = "default_side")]
    pub map_width: u32,
    #[serde(default = "default_side")]
    pub map_height: u32,
    /// Write the slu prior's heatmap per description into heatmaps/.
    #[serde(default)]
    pub heatmaps: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        serde_json::from_str("{\"seed\":0}").expect("defaults deserialize")
    }
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(json: &str) -> Result<Self, HarnessError> {
        let config: SuiteConfig = serde_json::from_str(json)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.cities == 0 || self.descriptions_per_city == 0 {
            return Err(HarnessError::BadSuite("cities and descriptions must be positive"));
        }
        if self.depths.is_empty() || self.baselines.is_empty() {
            return Err(HarnessError::BadSuite("need at least one depth and one baseline"));
        }
        if self.max_steps == 0 || self.simulations == 0 {
            return Err(HarnessError::BadSuite("max_steps and simulations must be positive"));
        }
        Ok(())
    }
}

/// Aggregates for one (baseline, depth) condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionStats {
    pub baseline: PriorMode,
    pub depth: u32,
    pub trials: u32,
    pub successes: u32,
    pub mean_reward: f64,
    /// 1.96 standard errors: the half-width of the 95% interval.
    pub ci_half_width: f64,
    /// completion[t-1] = successful trials that finished within t steps.
    pub completion: Vec<u32>,
}

/// Aggregates for one (baseline, relation) slice; a trial contributes
/// once per distinct relation in its tuples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrepositionStats {
    pub baseline: PriorMode,
    pub relation: String,
    pub trials: u32,
    pub successes: u32,
    pub mean_reward: f64,
    pub ci_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub trial_id: String,
    pub error: String,
}

/// Everything a finished suite produced.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub results: Vec<TrialResult>,
    pub conditions: Vec<ConditionStats>,
    pub prepositions: Vec<PrepositionStats>,
    pub failures: Vec<TrialFailure>,
    pub max_steps: u32,
}

/// Sample mean and 1.96-standard-error half-width (0 for n < 2).
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Mean difference a-b over paired samples, with its 95% half-width.
pub fn paired_mean_ci(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len(), "paired samples must align");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_ci(&diffs)
}

impl SuiteReport {
    pub fn condition(&self, baseline: PriorMode, depth: u32) -> Option<&ConditionStats> {
        self.conditions.iter().find(|c| c.baseline == baseline && c.depth == depth)
    }

    /// Rewards of one condition in trial-matrix order, for paired tests.
    pub fn rewards(&self, baseline: PriorMode, depth: u32) -> Vec<f64> {
        self.results
            .iter()
            .filter(|r| r.baseline == baseline && r.depth == depth)
            .map(|r| r.discounted_reward)
            .collect()
    }

    pub fn results_csv(&self) -> String {
        let mut out = String::from(
            "trial_id,baseline,depth,seed,steps,success,discounted_reward,relations\n",
        );
        for result in &self.results {
            out.push_str(&result.csv_row());
            out.push('\n');
        }
        out
    }

    /// Completion curves as an SVG line chart, one series per condition.
    pub fn curves_svg(&self) -> String {
        let color = |baseline: PriorMode| match baseline {
            PriorMode::Slu => "#1f77b4",
            PriorMode::Keyword => "#ff7f0e",
            PriorMode::Uniform => "#2ca02c",
            PriorMode::Informed => "#d62728",
        };
        let dash = |depth: u32| match depth {
            3 => None,
            4 => Some("7 3".to_string()),
            _ => Some("2 3".to_string()),
        };
        let series: Vec<Series> = self
            .conditions
            .iter()
            .map(|c| Series {
                label: format!("{} depth {}", c.baseline, c.depth),
                color: color(c.baseline).to_string(),
                dash: dash(c.depth),
                points: c
                    .completion
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| ((i + 1) as f64, f64::from(n)))
                    .collect(),
            })
            .collect();
        line_plot("Completed searches by step limit", "step limit", "completed", &series)
    }

    /// Fixed-width text table of the per-preposition breakdown.
    pub fn preposition_table(&self) -> String {
        let mut out = format!(
            "{:<10} {:<9} {:>6} {:>9} {:>12} {:>10}\n",
            "relation", "baseline", "trials", "successes", "mean_reward", "ci95"
        );
        for row in &self.prepositions {
            out.push_str(&format!(
                "{:<10} {:<9} {:>6} {:>9} {:>12.2} {:>10.2}\n",
                row.relation,
                row.baseline.name(),
                row.trials,
                row.successes,
                row.mean_reward,
                row.ci_half_width
            ));
        }
        out
    }
}

fn aggregate(results: Vec<TrialResult>, failures: Vec<TrialFailure>, max_steps: u32) -> SuiteReport {
    let mut by_condition: BTreeMap<(PriorMode, u32), Vec<&TrialResult>> = BTreeMap::new();
    let mut by_preposition: BTreeMap<(PriorMode, String), Vec<&TrialResult>> = BTreeMap::new();
    for result in &results {
        by_condition.entry((result.baseline, result.depth)).or_default().push(result);
        let relations: BTreeSet<&str> =
            result.tuples.iter().map(|t| t.relation.as_str()).collect();
        for relation in relations {
            by_preposition
                .entry((result.baseline, relation.to_string()))
                .or_default()
                .push(result);
        }
    }

    let conditions = by_condition
        .into_iter()
        .map(|((baseline, depth), trials)| {
            let rewards: Vec<f64> = trials.iter().map(|t| t.discounted_reward).collect();
            let (mean_reward, ci_half_width) = mean_ci(&rewards);
            let mut completion = vec![0u32; max_steps as usize];
            for trial in &trials {
                if trial.success {
                    for slot in &mut completion[trial.steps.saturating_sub(1) as usize..] {
                        *slot += 1;
                    }
                }
            }
            ConditionStats {
                baseline,
                depth,
                trials: trials.len() as u32,
                successes: trials.iter().filter(|t| t.success).count() as u32,
                mean_reward,
                ci_half_width,
                completion,
            }
        })
        .collect();

    let prepositions = by_preposition
        .into_iter()
        .map(|((baseline, relation), trials)| {
            let rewards: Vec<f64> = trials.iter().map(|t| t.discounted_reward).collect();
            let (mean_reward, ci_half_width) = mean_ci(&rewards);
            PrepositionStats {
                baseline,
                relation,
                trials: trials.len() as u32,
                successes: trials.iter().filter(|t| t.success).count() as u32,
                mean_reward,
                ci_half_width,
            }
        })
        .collect();

    SuiteReport { results, conditions, prepositions, failures, max_steps }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    conditions: &'a [ConditionStats],
    prepositions: &'a [PrepositionStats],
    failures: &'a [TrialFailure],
}

/// Runs the whole trial matrix, continuing past per-trial failures, and
/// writes results.csv, curves.svg, and report.json into `out_dir`.
pub fn run_suite(config: &SuiteConfig, out_dir: &Path) -> Result<SuiteReport, HarnessError> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    if config.heatmaps {
        std::fs::create_dir_all(out_dir.join("heatmaps"))?;
    }
    let mut results = Vec::new();
    let mut failures = Vec::new();

    for city in 0..config.cities {
        let city_tag = city.to_string();
        let city_seed = derive_seed(config.seed, &["city", &city_tag]);
        let map = generate_city(city_seed, config.map_width, config.map_height)?;
        for description in 0..config.descriptions_per_city {
            let desc_tag = description.to_string();
            let target =
                TARGET_ROTATION[(city * config.descriptions_per_city + description) as usize
                    % TARGET_ROTATION.len()];
            let language = generate_language(
                &map,
                target,
                derive_seed(config.seed, &["language", &city_tag, &desc_tag]),
            )?;
            let mut start_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.seed,
                &["robot", &city_tag, &desc_tag],
            ));
            let robot = (
                start_rng.random_range(0..config.map_width as i32),
                start_rng.random_range(0..config.map_height as i32),
                start_rng.random_range(0..8u8),
            );
            let trial_seed = derive_seed(config.seed, &["trial", &city_tag, &desc_tag]);

            if config.heatmaps {
                write_description_heatmap(&map, &language, out_dir, city, description)?;
            }

            for &depth in &config.depths {
                for &baseline in &config.baselines {
                    let trial_id = format!("c{city:02}-d{description:02}-{baseline}-k{depth}");
                    let trial = TrialConfig {
                        map: map.name.clone(),
                        targets: vec![TrialTarget { id: target.to_string(), cell: language.true_cell }],
                        robot,
                        sensor_depth: depth,
                        epsilon: config.epsilon,
                        prior: baseline,
                        language: language.sentence.clone(),
                        seed: trial_seed,
                        max_steps: config.max_steps,
                    };
                    let planner = PlannerConfig {
                        seed: derive_seed(trial_seed, &["planner"]),
                        simulations: config.simulations,
                        ..PlannerConfig::default()
                    };
                    match run_trial_configured(&trial_id, &map, &trial, planner) {
                        Ok(result) => results.push(result),
                        Err(error) => {
                            failures.push(TrialFailure { trial_id, error: error.to_string() })
                        }
                    }
                }
            }
        }
    }

    let report = aggregate(results, failures, config.max_steps);
    std::fs::write(out_dir.join("results.csv"), report.results_csv())?;
    std::fs::write(out_dir.join("curves.svg"), report.curves_svg())?;
    let file = ReportFile {
        conditions: &report.conditions,
        prepositions: &report.prepositions,
        failures: &report.failures,
    };
    std::fs::write(
        out_dir.join("report.json"),
        serde_json::to_string_pretty(&file).expect("report serializes"),
    )?;
    Ok(report)
}

fn write_description_heatmap(
    map: &crate::gridmap::GridMap,
    language: &super::langgen::GeneratedLanguage,
    out_dir: &Path,
    city: u32,
    description: u32,
) -> Result<(), HarnessError> {
    use crate::foref::OracleForProvider;
    use crate::spatial::{language_likelihood_field, SpatialModelConfig};

    let provider = OracleForProvider { base_seed: super::langgen::ORACLE_BASE_SEED };
    let field = language_likelihood_field(
        &language.tuples,
        map,
        &provider,
        &SpatialModelConfig::default(),
    )?;
    let svg = crate::plot::heatmap(&language.sentence, &field, map.width as usize);
    std::fs::write(
        out_dir.join("heatmaps").join(format!("c{city:02}-d{description:02}.svg")),
        svg,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langparse::SpatialTuple;

    fn result(
        trial_id: &str,
        baseline: PriorMode,
        steps: u32,
        success: bool,
        reward: f64,
        relations: &[&str],
    ) -> TrialResult {
        TrialResult {
            trial_id: trial_id.into(),
            baseline,
            depth: 3,
            seed: 0,
            steps,
            success,
            discounted_reward: reward,
            language: String::new(),
            tuples: relations
                .iter()
                .map(|r| SpatialTuple::new("RedCar", *r, "Belmont"))
                .collect(),
        }
    }

    #[test]
    fn mean_ci_matches_hand_computation() {
        let (mean, ci) = mean_ci(&[1.0, 2.0, 3.0, 4.0]);
        assert!((mean - 2.5).abs() < 1e-12);
        // sample sd = sqrt(5/3), se = sd/2
        let expected = 1.96 * (5.0_f64 / 3.0).sqrt() / 2.0;
        assert!((ci - expected).abs() < 1e-12);
        assert_eq!(mean_ci(&[7.0]), (7.0, 0.0));
        assert_eq!(mean_ci(&[]), (0.0, 0.0));
    }

    #[test]
    fn paired_ci_uses_differences() {
        let (mean, ci) = paired_mean_ci(&[3.0, 5.0, 7.0], &[1.0, 2.0, 3.0]);
        assert!((mean - 3.0).abs() < 1e-12);
        let direct = mean_ci(&[2.0, 3.0, 4.0]);
        assert!((ci - direct.1).abs() < 1e-12);
    }

    #[test]
    fn completion_curves_are_monotone_and_end_at_total_successes() {
        let results = vec![
            result("a", PriorMode::Slu, 3, true, 800.0, &["near"]),
            result("b", PriorMode::Slu, 10, true, 500.0, &["near"]),
            result("c", PriorMode::Slu, 20, false, -200.0, &["near"]),
        ];
        let report = aggregate(results, vec![], 20);
        let stats = report.condition(PriorMode::Slu, 3).unwrap();
        assert_eq!(stats.completion.len(), 20);
        assert!(stats.completion.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*stats.completion.last().unwrap(), stats.successes);
        assert_eq!(stats.completion[2], 1);
        assert_eq!(stats.completion[9], 2);
    }

    #[test]
    fn prepositions_partition_each_trial_once_per_relation() {
        let results = vec![
            result("a", PriorMode::Slu, 3, true, 800.0, &["near", "behind"]),
            result("b", PriorMode::Slu, 5, true, 700.0, &["near", "near"]),
        ];
        let report = aggregate(results, vec![], 10);
        let near = report
            .prepositions
            .iter()
            .find(|p| p.relation == "near")
            .expect("near row");
        let behind = report
            .prepositions
            .iter()
            .find(|p| p.relation == "behind")
            .expect("behind row");
        assert_eq!(near.trials, 2);
        assert_eq!(behind.trials, 1);
    }

    #[test]
    fn csv_header_matches_the_interface_contract() {
        let report = aggregate(vec![], vec![], 5);
        assert!(report
            .results_csv()
            .starts_with("trial_id,baseline,depth,seed,steps,success,discounted_reward,relations\n"));
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(SuiteConfig::from_json("{\"seed\":1,\"cities\":0}").is_err());
        assert!(SuiteConfig::from_json("{\"seed\":1,\"depths\":[]}").is_err());
        let config = SuiteConfig::default();
        assert_eq!(config.cities, 5);
        assert_eq!(config.descriptions_per_city, 20);
        assert_eq!(config.depths, vec![3]);
    }

    #[test]
    fn tiny_suite_runs_deterministically_end_to_end() {
        let config = SuiteConfig {
            cities: 1,
            descriptions_per_city: 2,
            depths: vec![3],
            baselines: vec![PriorMode::Informed, PriorMode::Uniform],
            simulations: 25,
            max_steps: 12,
            map_width: 25,
            map_height: 25,
            ..SuiteConfig::default()
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let report_a = run_suite(&config, dir_a.path()).unwrap();
        let report_b = run_suite(&config, dir_b.path()).unwrap();
        assert!(report_a.failures.is_empty(), "failures: {:?}", report_a.failures);
        assert_eq!(report_a.results.len(), 4);
        let csv_a = std::fs::read(dir_a.path().join("results.csv")).unwrap();
        let csv_b = std::fs::read(dir_b.path().join("results.csv")).unwrap();
        assert!(!csv_a.is_empty());
        assert_eq!(csv_a, csv_b);
        assert!(dir_a.path().join("curves.svg").exists());
        assert!(dir_a.path().join("report.json").exists());
        assert_eq!(report_a.rewards(PriorMode::Uniform, 3), report_b.rewards(PriorMode::Uniform, 3));
    }
}
