use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checker::CompilabilityCheck;
use super::config::{RunConfig, TreeMetrics};
use crate::error::{Error, Result};
use crate::generators::{generate, GenContext, GeneratorId, NoCandidate};
use crate::history::{HistoryWriter, Snapshot};
use crate::model::{AssetTree, DonorProject};
use crate::ops::{run_in_transaction, CandidateOperation, OperationRecord, TxOutcome};
use crate::transplant::{load_donor, LanguageAdapter, ManifestModel, Minilang, MANIFEST_FILE};

/// The generator used for one iteration: ChaCha8 seeded with the run seed,
/// on the stream numbered by the iteration.
pub fn iteration_rng(seed: u64, iteration: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AttemptOutcome {
    Committed,
    RolledBack,
    Discarded,
    NoCandidate,
}

/// One transaction attempt, as written to the debug log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AttemptLog {
    pub iteration: u64,
    pub attempt: u32,
    pub generator: GeneratorId,
    pub outcome: AttemptOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<CandidateOperation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Receives everything a run produces.
pub trait HistorySink {
    fn initial(&mut self, tree: &AssetTree, snapshot: &Snapshot) -> Result<()>;
    fn commit(&mut self, record: &OperationRecord, tree: &AssetTree, snapshot: &Snapshot) -> Result<()>;
    fn attempt(&mut self, _entry: &AttemptLog) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, _config: &RunConfig, _summary: &RunSummary) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl HistorySink for NullSink {
    fn initial(&mut self, _: &AssetTree, _: &Snapshot) -> Result<()> {
        Ok(())
    }

    fn commit(&mut self, _: &OperationRecord, _: &AssetTree, _: &Snapshot) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeneratorStats {
    pub selected: u64,
    pub committed: u64,
    pub rolled_back: u64,
    pub discarded: u64,
    pub skipped: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StopReason {
    MaxIterations,
    Termination,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub iterations: u64,
    pub committed: u64,
    pub skipped: u64,
    pub rolled_back: u64,
    pub stopped_by: StopReason,
    pub consumed_tests: u64,
    pub per_generator: BTreeMap<GeneratorId, GeneratorStats>,
    pub initial_metrics: TreeMetrics,
    pub final_metrics: TreeMetrics,
}

/// Runs the simulation loop on `tree`, reporting to `sink`. Returns the
/// summary and the final tree.
pub fn simulate(
    config: &RunConfig,
    mut tree: AssetTree,
    adapter: &dyn LanguageAdapter,
    checker: &dyn CompilabilityCheck,
    sink: &mut dyn HistorySink,
) -> Result<(RunSummary, AssetTree)> {
    config.validate()?;
    let dist = config.selection()?;
    let gen_cfg = config.generator_config();
    let snap0 = Snapshot::of(&tree);
    checker.check(&snap0).map_err(Error::InvalidInitialSystem)?;
    sink.initial(&tree, &snap0)?;

    let mut summary = RunSummary {
        iterations: 0,
        committed: 0,
        skipped: 0,
        rolled_back: 0,
        stopped_by: StopReason::MaxIterations,
        consumed_tests: 0,
        per_generator: dist.entries().iter().map(|(g, _)| (*g, GeneratorStats::default())).collect(),
        initial_metrics: TreeMetrics::of(&tree),
        final_metrics: TreeMetrics::of(&tree),
    };
    let mut consumed = BTreeSet::new();
    loop {
        if let Some(t) = &config.termination {
            if t.holds(&TreeMetrics::of(&tree)) {
                summary.stopped_by = StopReason::Termination;
                break;
            }
        }
        if summary.iterations == config.max_iterations {
            break;
        }
        summary.iterations += 1;
        let iteration = summary.iterations;
        let mut rng = iteration_rng(config.seed, iteration);
        let generator = dist.select(&mut rng);
        let stats = summary.per_generator.get_mut(&generator).expect("listed");
        stats.selected += 1;
        let mut committed = false;
        for attempt in 1..=config.max_retries {
            let mut log = AttemptLog {
                iteration,
                attempt,
                generator,
                outcome: AttemptOutcome::NoCandidate,
                candidate: None,
                reason: None,
            };
            let ctx = GenContext {
                tree: &tree,
                adapter,
                consumed: &consumed,
                config: &gen_cfg,
            };
            match generate(generator, &ctx, &mut rng) {
                Err(NoCandidate::Empty) => {
                    sink.attempt(&log)?;
                    break;
                }
                Err(NoCandidate::Discarded) => {
                    log.outcome = AttemptOutcome::Discarded;
                    stats.discarded += 1;
                    sink.attempt(&log)?;
                }
                Ok(cand) => {
                    if let CandidateOperation::Transplant { test, .. } = &cand {
                        consumed.insert(test.clone());
                    }
                    let outcome = run_in_transaction(&mut tree, &cand, adapter, checker);
                    log.candidate = Some(cand);
                    match outcome {
                        TxOutcome::Committed {
                            mut record, snapshot, ..
                        } => {
                            record.iteration = Some(iteration);
                            log.outcome = AttemptOutcome::Committed;
                            sink.attempt(&log)?;
                            sink.commit(&record, &tree, &snapshot)?;
                            stats.committed += 1;
                            committed = true;
                            break;
                        }
                        TxOutcome::RolledBack(reason) => {
                            log.outcome = AttemptOutcome::RolledBack;
                            log.reason = Some(reason);
                            stats.rolled_back += 1;
                            summary.rolled_back += 1;
                            sink.attempt(&log)?;
                        }
                    }
                }
            }
        }
        if committed {
            summary.committed += 1;
        } else {
            summary.skipped += 1;
            stats.skipped += 1;
        }
    }
    summary.consumed_tests = consumed.len() as u64;
    summary.final_metrics = TreeMetrics::of(&tree);
    sink.finish(config, &summary)?;
    Ok((summary, tree))
}

/// Reads the initial system. A directory with a build manifest at its top is
/// one repository; otherwise every subdirectory is a repository.
pub fn load_system(path: &Path) -> Result<AssetTree> {
    let manifest = path.join(MANIFEST_FILE);
    let prefix = if manifest.is_file() {
        let text = std::fs::read_to_string(&manifest).map_err(|e| Error::snapshot_io(&manifest, e))?;
        let name = ManifestModel::parse(&text)?.name;
        let name = if name.is_empty() {
            path.canonicalize()
                .map_err(|e| Error::snapshot_io(path, e))?
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "system".into())
        } else {
            name
        };
        if name.contains('/') || name.contains('!') || name.starts_with('.') {
            return Err(Error::InvalidInitialSystem(format!("unusable repository name `{name}`")));
        }
        Some(name)
    } else {
        None
    };
    let snap = Snapshot::read(path, prefix.as_deref())?;
    let tree = snap.to_tree();
    if tree.repositories().next().is_none() {
        return Err(Error::InvalidInitialSystem("no repository found".into()));
    }
    Ok(tree)
}

/// Loads donor projects and registers them with the tree.
pub fn attach_donors(tree: &mut AssetTree, paths: &[PathBuf], adapter: &dyn LanguageAdapter) -> Result<()> {
    for p in paths {
        let source = load_donor(p, adapter)?;
        let id = source.id.clone();
        if tree.donors.insert(id.clone(), DonorProject::new(source)).is_some() {
            return Err(Error::Config(format!("two donors share the id `{id}`")));
        }
    }
    Ok(())
}

/// Loads inputs, runs the simulation and writes the history to `out_dir`.
pub fn run(config: &RunConfig, system: &Path, donors: &[PathBuf], out_dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    let adapter = Minilang;
    let mut tree = load_system(system)?;
    attach_donors(&mut tree, donors, &adapter)?;
    let checker = config.checker.build();
    let mut writer = HistoryWriter::create(out_dir)?;
    let (summary, _) = simulate(config, tree, &adapter, checker.as_ref(), &mut writer)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AssetNode, FeatureModel, NodeKind};
    use crate::runner::{BundledChecker, Preset, Termination};

    fn small_tree() -> AssetTree {
        let mut t = AssetTree::new();
        let mut r = AssetNode::new(t.alloc_id(), NodeKind::Repository, "calc");
        r.feature_model = Some(FeatureModel::new("calc"));
        t.insert_child(&[], 0, r).unwrap();
        let f = AssetNode::new(t.alloc_id(), NodeKind::File, "main.ml").with_content(
            ["fn main() {", "  let a = 1", "", "  let b = 2", "}"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        );
        t.insert_child(&[0], 0, f).unwrap();
        t
    }

    struct Counter {
        commits: u64,
        attempts: Vec<AttemptLog>,
    }

    impl HistorySink for Counter {
        fn initial(&mut self, _: &AssetTree, _: &Snapshot) -> Result<()> {
            Ok(())
        }

        fn commit(&mut self, _: &OperationRecord, _: &AssetTree, _: &Snapshot) -> Result<()> {
            self.commits += 1;
            Ok(())
        }

        fn attempt(&mut self, e: &AttemptLog) -> Result<()> {
            self.attempts.push(e.clone());
            Ok(())
        }
    }

    #[test]
    fn zero_iterations_only_initial() {
        let mut cfg = Preset::GrowingSystem.config();
        cfg.max_iterations = 0;
        let mut c = Counter {
            commits: 0,
            attempts: Vec::new(),
        };
        let (s, _) = simulate(&cfg, small_tree(), &Minilang, &BundledChecker, &mut c).unwrap();
        assert_eq!((s.iterations, s.committed, c.commits), (0, 0, 0));
    }

    #[test]
    fn counts_and_retry_bound() {
        let mut cfg = Preset::UniformGenerators.config();
        cfg.max_iterations = 40;
        cfg.max_retries = 3;
        let mut c = Counter {
            commits: 0,
            attempts: Vec::new(),
        };
        let (s, _) = simulate(&cfg, small_tree(), &Minilang, &BundledChecker, &mut c).unwrap();
        assert_eq!(s.committed + s.skipped, s.iterations);
        assert_eq!(s.committed, c.commits);
        for it in 1..=s.iterations {
            let n = c.attempts.iter().filter(|a| a.iteration == it).count();
            assert!((1..=3).contains(&n), "iteration {it} has {n} attempts");
        }
    }

    #[test]
    fn termination_stops_first() {
        let mut cfg = Preset::GrowingSystem.config();
        cfg.termination = Some("repositoryCount >= 1".parse::<Termination>().unwrap());
        let (s, _) = simulate(&cfg, small_tree(), &Minilang, &BundledChecker, &mut NullSink).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(s.stopped_by, StopReason::Termination);
    }

    #[test]
    fn invalid_initial_system() {
        let mut t = small_tree();
        t.node_mut(&[0, 0]).unwrap().content.pop();
        let cfg = Preset::GrowingSystem.config();
        let err = simulate(&cfg, t, &Minilang, &BundledChecker, &mut NullSink).unwrap_err();
        assert!(matches!(err, Error::InvalidInitialSystem(_)));
    }

    #[test]
    fn streams_are_independent_per_iteration() {
        use rand::Rng;
        let a: u64 = iteration_rng(5, 1).gen();
        let b: u64 = iteration_rng(5, 2).gen();
        assert_ne!(a, b);
        assert_eq!(a, iteration_rng(5, 1).gen::<u64>());
    }
}
