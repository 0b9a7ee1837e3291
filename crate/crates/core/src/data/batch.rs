use crate::curriculum::CurriculumMask;
use crate::numerics::RandomStream;
use crate::{Error, Result, Scalar};

/// Window anchors and node columns of one stratified batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub anchors: Vec<usize>,
    /// Included node columns, ascending.
    pub nodes: Vec<usize>,
}

/// Shuffles the included training windows and cuts them into batches of at most
/// `batch_size`. Excluded windows never enter the pool; their slots are refilled
/// with further shuffled passes over the included ones, so an epoch always holds
/// `train.len()` rows. Excluded nodes are dropped as whole columns.
///
/// `train` holds the anchors of the training windows; the mask's window axis
/// indexes positions in that list.
pub fn stratified_batches<S: Scalar>(
    train: &[usize],
    batch_size: usize,
    mask: &CurriculumMask<S>,
    stream: &mut RandomStream,
) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(Error::Contract("batch size must be positive".into()));
    }
    if mask.window_count() != train.len() {
        return Err(Error::shape("curriculum window mask", &[train.len()], &[mask.window_count()]));
    }
    let nodes = mask.included_nodes();
    if nodes.is_empty() {
        return Err(Error::EmptyInclusion { view: "node" });
    }
    let included: Vec<usize> = mask.included_windows().into_iter().map(|pos| train[pos]).collect();
    if included.is_empty() {
        return Err(Error::EmptyInclusion { view: "window" });
    }
    let mut pool = Vec::with_capacity(train.len() + included.len());
    while pool.len() < train.len() {
        let mut pass = included.clone();
        stream.shuffle(&mut pass);
        pool.extend(pass);
    }
    pool.truncate(train.len());
    Ok(pool
        .chunks(batch_size)
        .map(|chunk| Batch {
            anchors: chunk.to_vec(),
            nodes: nodes.clone(),
        })
        .collect())
}
