//! Two-phase fuzzy topic modeling.
//!
//! Phase 1 projects the whole corpus with t-SNE, grid-searches the minimum
//! cluster size by mean cluster persistence, clusters, and keeps the
//! documents with non-zero membership. Phase 2 takes each phase-1 topic's
//! retained documents, re-projects their original embeddings, and
//! re-clusters them with a small fixed minimum cluster size. The report
//! lists every phase-2 topic with its members ranked by membership.

use std::time::Instant;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{DocId, EmbeddingSet};
use crate::hierarchy::{self, ClusterSelection, CondensedTree, HierarchyError, OutlierScores};
use crate::matrix::Matrix;
use crate::membership::{
    cluster_exemplars, membership_matrix, ranked_members, ExemplarSet, GloshSign, MembershipError,
    MembershipMatrix,
};
use crate::metric::{
    core_distances, mutual_reachability, pairwise_distances, DistanceMatrix, Metric, MetricError,
};
use crate::rng::derive_seed;
use crate::tsne::{self, Projection, TsneConfig, TsneError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no candidate minimum cluster size produced a cluster (grid {0:?})")]
    NoClusters(Vec<usize>),
    #[error("phase 1 retained no documents")]
    EmptyRetained,
    #[error(transparent)]
    Tsne(#[from] TsneError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Membership(#[from] MembershipError),
}

type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase2Scope {
    /// Refine each phase-1 topic separately.
    #[default]
    PerTopic,
    /// Refine all retained documents together.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mcs_grid: Vec<usize>,
    pub phase2_min_cluster_size: usize,
    pub top_n: usize,
    pub phase2_scope: Phase2Scope,
    pub tsne: TsneConfig,
    pub glosh_sign: GloshSign,
    /// Core-distance neighbor rank; defaults to the minimum cluster size.
    pub min_samples: Option<usize>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mcs_grid: (5..=64).collect(),
            phase2_min_cluster_size: 5,
            top_n: 5,
            phase2_scope: Phase2Scope::PerTopic,
            tsne: TsneConfig::default(),
            glosh_sign: GloshSign::Inverted,
            min_samples: None,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mcs_grid.is_empty() {
            return Err(PipelineError::InvalidConfig("mcs grid is empty".into()));
        }
        if let Some(&bad) = self.mcs_grid.iter().find(|&&m| m < 2) {
            return Err(PipelineError::InvalidConfig(format!(
                "minimum cluster size {bad} is below 2"
            )));
        }
        if self.phase2_min_cluster_size < 2 {
            return Err(PipelineError::InvalidConfig(
                "phase-2 minimum cluster size must be at least 2".into(),
            ));
        }
        if self.top_n == 0 {
            return Err(PipelineError::InvalidConfig("top_n must be positive".into()));
        }
        if self.min_samples == Some(0) {
            return Err(PipelineError::InvalidConfig("min_samples must be positive".into()));
        }
        if !(self.tsne.perplexity > 0.0 && self.tsne.learning_rate > 0.0 && self.tsne.init_std > 0.0) {
            return Err(PipelineError::InvalidConfig(
                "t-SNE perplexity, learning rate, and init_std must be positive".into(),
            ));
        }
        Ok(())
    }

    fn tsne_with_seed(&self, seed: u64) -> TsneConfig {
        TsneConfig {
            seed,
            ..self.tsne.clone()
        }
    }
}

/// One row of the grid-search table. `score` is `None` when the candidate
/// selected no clusters (scored as −∞).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub min_cluster_size: usize,
    pub score: Option<f64>,
    pub n_clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub best: usize,
    pub table: Vec<GridScore>,
}

fn neighbor_rank(min_samples: Option<usize>, mcs: usize, n: usize) -> usize {
    min_samples.unwrap_or(mcs).min(n - 1).max(1)
}

fn fit_at(distances: &DistanceMatrix, mcs: usize, min_samples: Option<usize>) -> Result<(hierarchy::Hierarchy, crate::metric::MutualReachabilityMatrix)> {
    let n = distances.len();
    let core = core_distances(distances, neighbor_rank(min_samples, mcs, n))?;
    let m = mutual_reachability(distances, &core)?;
    let h = hierarchy::fit(&m, mcs)?;
    Ok((h, m))
}

fn grid_search_distances(distances: &DistanceMatrix, grid: &[usize], min_samples: Option<usize>) -> Result<GridSearch> {
    if grid.is_empty() {
        return Err(PipelineError::InvalidConfig("mcs grid is empty".into()));
    }
    let n = distances.len();
    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for &mcs in grid {
        if mcs < 2 {
            return Err(HierarchyError::MinClusterSizeTooSmall(mcs).into());
        }
        // Two children of at least `mcs` points need 2·mcs points.
        let (score, n_clusters) = if 2 * mcs > n {
            (None, 0)
        } else {
            let (h, _) = fit_at(distances, mcs, min_samples)?;
            (h.selection.mean_persistence(), h.selection.n_clusters())
        };
        debug!("grid mcs={mcs}: clusters={n_clusters} score={score:?}");
        if let Some(s) = score {
            let better = match best {
                None => true,
                Some((bm, bs)) => s > bs || (s == bs && mcs < bm),
            };
            if better {
                best = Some((mcs, s));
            }
        }
        table.push(GridScore {
            min_cluster_size: mcs,
            score,
            n_clusters,
        });
    }
    let (best, _) = best.ok_or_else(|| PipelineError::NoClusters(grid.to_vec()))?;
    Ok(GridSearch { best, table })
}

/// Scores every candidate minimum cluster size on the 2-D `coords` by mean
/// cluster persistence and returns the best (ties to the smaller size).
pub fn grid_search_mcs(coords: &Matrix, grid: &[usize], min_samples: Option<usize>) -> Result<GridSearch> {
    let distances = pairwise_distances(coords, Metric::Euclidean)?;
    grid_search_distances(&distances, grid, min_samples)
}

/// Projection, hierarchy, and membership for one set of documents.
///
/// `indices` maps local rows (of `projection`, `membership`, ...) to
/// dataset rows; `retained` lists dataset rows with non-zero membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub indices: Vec<usize>,
    pub projection: Projection,
    pub chosen_mcs: usize,
    pub grid: Option<GridSearch>,
    pub tree: CondensedTree,
    pub selection: ClusterSelection,
    pub outliers: OutlierScores,
    pub exemplars: ExemplarSet,
    pub membership: MembershipMatrix,
    pub retained: Vec<usize>,
}

impl PhaseResult {
    pub fn n_clusters(&self) -> usize {
        self.selection.n_clusters()
    }

    /// Dataset rows whose joint-membership argmax is `cluster`, ascending.
    pub fn topic_rows(&self, cluster: usize) -> Vec<usize> {
        (0..self.indices.len())
            .filter(|&x| self.membership.argmax(x) == Some(cluster))
            .map(|x| self.indices[x])
            .collect()
    }
}

fn cluster_phase(
    indices: Vec<usize>,
    projection: Projection,
    distances: &DistanceMatrix,
    chosen_mcs: usize,
    grid: Option<GridSearch>,
    cfg: &PipelineConfig,
) -> Result<PhaseResult> {
    let (h, m) = fit_at(distances, chosen_mcs, cfg.min_samples)?;
    let exemplars = cluster_exemplars(&h.tree, &h.selection)?;
    let membership = membership_matrix(&h.tree, &h.selection, &exemplars, &m, cfg.glosh_sign);
    let retained = (0..indices.len())
        .filter(|&x| membership.p_any[x] > 0.0)
        .map(|x| indices[x])
        .collect();
    Ok(PhaseResult {
        indices,
        projection,
        chosen_mcs,
        grid,
        tree: h.tree,
        selection: h.selection,
        outliers: h.outliers,
        exemplars,
        membership,
        retained,
    })
}

/// t-SNE on the full corpus, grid search, clustering, membership.
pub fn run_phase1(set: &EmbeddingSet, cfg: &PipelineConfig) -> Result<PhaseResult> {
    cfg.validate()?;
    let points = set.to_matrix();
    let projection = tsne::project(&points, &cfg.tsne_with_seed(cfg.seed))?;
    info!(
        "phase 1 projection: KL {:.4} -> {:.4}",
        projection.initial_kl, projection.final_kl
    );
    let distances = pairwise_distances(&projection.coords, Metric::Euclidean)?;
    let grid = grid_search_distances(&distances, &cfg.mcs_grid, cfg.min_samples)?;
    info!("phase 1 grid search picked min cluster size {}", grid.best);
    let best = grid.best;
    cluster_phase((0..set.len()).collect(), projection, &distances, best, Some(grid), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phase2Outcome {
    /// Re-projected and re-clustered.
    Refined(Box<PhaseResult>),
    /// Too small to refine, or refinement found no cluster: the parent
    /// topic is kept whole with its phase-1 memberships.
    PassThrough { membership: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase2Result {
    /// Phase-1 cluster index; `None` under global scope.
    pub parent: Option<usize>,
    /// Dataset rows fed to this run.
    pub members: Vec<usize>,
    pub outcome: Phase2Outcome,
}

fn refine(
    set: &EmbeddingSet,
    phase1: &PhaseResult,
    parent: Option<usize>,
    members: Vec<usize>,
    stream: u64,
    cfg: &PipelineConfig,
) -> Result<Phase2Result> {
    let pass_through = |members: Vec<usize>| {
        let local: Vec<usize> = members
            .iter()
            .map(|r| phase1.indices.binary_search(r).expect("member of phase 1"))
            .collect();
        let membership = local
            .iter()
            .map(|&x| match parent {
                Some(c) => phase1.membership.joint.get(x, c),
                None => phase1.membership.p_any[x],
            })
            .collect();
        Phase2Result {
            parent,
            members,
            outcome: Phase2Outcome::PassThrough { membership },
        }
    };
    let mcs = cfg.phase2_min_cluster_size;
    if members.len() < 2 * mcs {
        return Ok(pass_through(members));
    }
    let points = set.select_matrix(&members);
    let projection = tsne::project(&points, &cfg.tsne_with_seed(derive_seed(cfg.seed, stream)))?;
    let distances = pairwise_distances(&projection.coords, Metric::Euclidean)?;
    match cluster_phase(members.clone(), projection, &distances, mcs, None, cfg) {
        Ok(result) => Ok(Phase2Result {
            parent,
            members,
            outcome: Phase2Outcome::Refined(Box::new(result)),
        }),
        Err(PipelineError::Membership(MembershipError::NoClusters)) => {
            debug!("phase 2 for {parent:?} found no cluster; passing through");
            Ok(pass_through(members))
        }
        Err(e) => Err(e),
    }
}

/// Re-projects and re-clusters the retained documents of phase 1.
pub fn run_phase2(set: &EmbeddingSet, phase1: &PhaseResult, cfg: &PipelineConfig) -> Result<Vec<Phase2Result>> {
    cfg.validate()?;
    if phase1.retained.is_empty() {
        return Err(PipelineError::EmptyRetained);
    }
    match cfg.phase2_scope {
        Phase2Scope::Global => {
            Ok(vec![refine(set, phase1, None, phase1.retained.clone(), 0, cfg)?])
        }
        Phase2Scope::PerTopic => (0..phase1.n_clusters())
            .into_par_iter()
            .map(|c| refine(set, phase1, Some(c), phase1.topic_rows(c), c as u64 + 1, cfg))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().filter(|r| !r.members.is_empty()).collect()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMember {
    pub row: usize,
    pub article_id: DocId,
    pub title: String,
    /// Joint membership toward this topic.
    pub membership: f64,
    pub p_any: f64,
    /// Joint membership over all clusters of the run that produced the topic.
    pub membership_vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub label: String,
    pub phase1_parent: Option<usize>,
    /// Cluster index within the phase-2 run; `None` for a pass-through.
    pub phase2_cluster: Option<usize>,
    pub chosen_mcs: usize,
    pub persistence: f64,
    pub exemplar_ids: Vec<DocId>,
    /// Sorted by membership descending, then article id.
    pub members: Vec<TopicMember>,
    pub representatives: Vec<TopicMember>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: PipelineConfig,
    pub seed: u64,
    pub n_documents: usize,
    pub embedding_dim: usize,
    pub phase1_mcs: usize,
    pub phase1_clusters: usize,
    pub phase1_retained: usize,
    pub phase1_grid: Option<GridSearch>,
    pub phase1_kl: (f64, f64),
    /// Wall-clock seconds per stage; excluded from deterministic outputs.
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub topics: Vec<Topic>,
    pub run_metadata: RunMetadata,
}

fn make_member(set: &EmbeddingSet, row: usize, membership: f64, p_any: f64, vector: Vec<f64>) -> TopicMember {
    let doc = &set.documents()[row];
    TopicMember {
        row,
        article_id: doc.id.clone(),
        title: doc.title.clone(),
        membership,
        p_any,
        membership_vector: vector,
    }
}

fn sort_members(members: &mut [TopicMember]) {
    members.sort_by(|a, b| {
        b.membership
            .total_cmp(&a.membership)
            .then_with(|| a.article_id.cmp(&b.article_id))
    });
}

/// Labels phase-2 clusters `topic_1, topic_2, …` in (parent, cluster) order.
pub fn assemble_report(
    set: &EmbeddingSet,
    phase1: &PhaseResult,
    phase2: &[Phase2Result],
    cfg: &PipelineConfig,
) -> TopicReport {
    let mut topics = Vec::new();
    let docs = set.documents();
    for run in phase2 {
        match &run.outcome {
            Phase2Outcome::PassThrough { membership } => {
                let (chosen_mcs, persistence, exemplar_ids) = match run.parent {
                    Some(c) => (
                        phase1.chosen_mcs,
                        phase1.selection.persistence[c],
                        phase1.exemplars.per_cluster[c]
                            .iter()
                            .map(|&x| docs[phase1.indices[x]].id.clone())
                            .collect(),
                    ),
                    None => (phase1.chosen_mcs, phase1.selection.mean_persistence().unwrap_or(0.0), Vec::new()),
                };
                let mut members: Vec<TopicMember> = run
                    .members
                    .iter()
                    .zip(membership)
                    .filter(|(_, &m)| m > 0.0)
                    .map(|(&row, &m)| {
                        let x = phase1.indices.binary_search(&row).expect("phase-1 row");
                        make_member(
                            set,
                            row,
                            m,
                            phase1.membership.p_any[x],
                            phase1.membership.joint.row(x).to_vec(),
                        )
                    })
                    .collect();
                if members.is_empty() {
                    continue;
                }
                sort_members(&mut members);
                topics.push(Topic {
                    label: String::new(),
                    phase1_parent: run.parent,
                    phase2_cluster: None,
                    chosen_mcs,
                    persistence,
                    exemplar_ids,
                    representatives: members.iter().take(cfg.top_n).cloned().collect(),
                    members,
                });
            }
            Phase2Outcome::Refined(result) => {
                let local_docs: Vec<_> = result.indices.iter().map(|&r| docs[r].clone()).collect();
                let ranked = ranked_members(&result.membership, &local_docs);
                for (k, list) in ranked.into_iter().enumerate() {
                    if list.is_empty() {
                        continue;
                    }
                    let members: Vec<TopicMember> = list
                        .iter()
                        .map(|r| {
                            make_member(
                                set,
                                result.indices[r.point],
                                r.membership,
                                result.membership.p_any[r.point],
                                result.membership.joint.row(r.point).to_vec(),
                            )
                        })
                        .collect();
                    topics.push(Topic {
                        label: String::new(),
                        phase1_parent: run.parent,
                        phase2_cluster: Some(k),
                        chosen_mcs: result.chosen_mcs,
                        persistence: result.selection.persistence[k],
                        exemplar_ids: result.exemplars.per_cluster[k]
                            .iter()
                            .map(|&x| docs[result.indices[x]].id.clone())
                            .collect(),
                        representatives: members.iter().take(cfg.top_n).cloned().collect(),
                        members,
                    });
                }
            }
        }
    }
    for (i, t) in topics.iter_mut().enumerate() {
        t.label = format!("topic_{}", i + 1);
    }
    TopicReport {
        topics,
        run_metadata: RunMetadata {
            config: cfg.clone(),
            seed: cfg.seed,
            n_documents: set.len(),
            embedding_dim: set.dim(),
            phase1_mcs: phase1.chosen_mcs,
            phase1_clusters: phase1.n_clusters(),
            phase1_retained: phase1.retained.len(),
            phase1_grid: phase1.grid.clone(),
            phase1_kl: (phase1.projection.initial_kl, phase1.projection.final_kl),
            timings: Timings::default(),
        },
    }
}

/// Every artifact of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub phase1: PhaseResult,
    pub phase2: Vec<Phase2Result>,
    pub report: TopicReport,
}

pub fn run_pipeline_full(set: &EmbeddingSet, cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let start = Instant::now();
    let phase1 = run_phase1(set, cfg)?;
    let t1 = start.elapsed().as_secs_f64();
    let phase2 = run_phase2(set, &phase1, cfg)?;
    let t2 = start.elapsed().as_secs_f64();
    let mut report = assemble_report(set, &phase1, &phase2, cfg);
    report.run_metadata.timings.stages = vec![
        ("phase1".into(), t1),
        ("phase2".into(), t2 - t1),
        ("total".into(), start.elapsed().as_secs_f64()),
    ];
    info!(
        "pipeline finished: {} phase-1 clusters, {} topics",
        phase1.n_clusters(),
        report.topics.len()
    );
    Ok(PipelineRun {
        phase1,
        phase2,
        report,
    })
}

/// Phase 1, phase 2, and report assembly.
pub fn run_pipeline(set: &EmbeddingSet, cfg: &PipelineConfig) -> Result<TopicReport> {
    run_pipeline_full(set, cfg).map(|r| r.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Document;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn blobs(centers: &[Vec<f64>], per: usize, sigma: f64, seed: u64) -> EmbeddingSet {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut rows = Vec::new();
        for c in centers {
            for _ in 0..per {
                rows.push(c.iter().map(|&v| v + noise.sample(&mut rng)).collect::<Vec<f64>>());
            }
        }
        let docs = (0..rows.len()).map(|i| Document::new(i as i64, format!("doc {i}"))).collect();
        EmbeddingSet::from_rows(docs, &rows).unwrap()
    }

    fn quick_cfg(seed: u64) -> PipelineConfig {
        PipelineConfig {
            mcs_grid: vec![5, 10, 20],
            seed,
            ..PipelineConfig::default()
        }
    }

    fn three_centers(dim: usize) -> Vec<Vec<f64>> {
        (0..3)
            .map(|k| (0..dim).map(|j| if j == k { 20.0 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn grid_search_prefers_clusters_over_none() {
        let set = blobs(&three_centers(2), 100, 0.5, 1);
        let coords = set.to_matrix();
        let gs = grid_search_mcs(&coords, &[5, 25, 80], None).unwrap();
        let row80 = gs.table.iter().find(|r| r.min_cluster_size == 80).unwrap();
        assert!(row80.score.is_some() || row80.n_clusters == 0);
        let best = gs.table.iter().find(|r| r.min_cluster_size == gs.best).unwrap();
        assert!(best.n_clusters >= 1);
        for r in &gs.table {
            if r.n_clusters == 0 {
                assert!(r.score.is_none());
            }
        }
        assert!(gs.table.iter().any(|r| r.n_clusters == 3));
    }

    #[test]
    fn grid_beyond_n_is_an_error() {
        let set = blobs(&three_centers(2), 10, 0.5, 1);
        let err = grid_search_mcs(&set.to_matrix(), &[31], None).unwrap_err();
        assert!(matches!(err, PipelineError::NoClusters(_)));
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.mcs_grid = vec![];
        assert!(cfg.validate().is_err());
        cfg.mcs_grid = vec![1, 5];
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            top_n: 0,
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn small_topics_pass_through() {
        let set = blobs(&three_centers(4), 8, 0.3, 5);
        let cfg = PipelineConfig {
            mcs_grid: vec![5, 6],
            phase2_min_cluster_size: 5,
            ..quick_cfg(3)
        };
        let p1 = run_phase1(&set, &cfg).unwrap();
        let p2 = run_phase2(&set, &p1, &cfg).unwrap();
        assert!(!p2.is_empty());
        let mut passed = 0;
        for r in &p2 {
            if r.members.len() < 10 {
                assert!(matches!(r.outcome, Phase2Outcome::PassThrough { .. }));
                passed += 1;
            }
        }
        assert!(passed > 0);
        let report = assemble_report(&set, &p1, &p2, &cfg);
        assert_eq!(report.topics.len(), p2.len());
        assert_eq!(report.topics[0].label, "topic_1");
    }

    #[test]
    fn end_to_end_report_invariants() {
        let set = blobs(&three_centers(8), 60, 0.5, 9);
        let cfg = quick_cfg(11);
        let run = run_pipeline_full(&set, &cfg).unwrap();
        assert!(cfg.mcs_grid.contains(&run.phase1.chosen_mcs));
        assert_eq!(run.phase1.n_clusters(), 3);
        let retained: std::collections::HashSet<usize> = run.phase1.retained.iter().copied().collect();
        let mut labels = std::collections::HashSet::new();
        for t in &run.report.topics {
            assert!(labels.insert(t.label.clone()));
            assert!(t.representatives.len() <= cfg.top_n);
            assert!(t.representatives.windows(2).all(|w| w[0].membership >= w[1].membership));
            for m in &t.members {
                assert!(m.membership > 0.0 && m.membership <= 1.0);
                assert!(retained.contains(&m.row));
            }
        }
        // Phase-2 topics of one parent never share a document.
        let mut seen = std::collections::HashSet::new();
        for t in &run.report.topics {
            for m in &t.members {
                assert!(seen.insert(m.row), "row {} in two topics", m.row);
            }
        }
        let again = run_pipeline(&set, &cfg).unwrap();
        assert_eq!(again.topics, run.report.topics);
    }

    #[test]
    fn global_scope_runs_once() {
        let set = blobs(&three_centers(4), 40, 0.5, 2);
        let cfg = PipelineConfig {
            phase2_scope: Phase2Scope::Global,
            ..quick_cfg(4)
        };
        let p1 = run_phase1(&set, &cfg).unwrap();
        let p2 = run_phase2(&set, &p1, &cfg).unwrap();
        assert_eq!(p2.len(), 1);
        assert_eq!(p2[0].parent, None);
        assert_eq!(p2[0].members, p1.retained);
    }
}
