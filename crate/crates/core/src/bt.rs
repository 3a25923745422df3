//! Behavior-tree genotype.
//!
//! A controller is a single sequence root over an ordered list of motion leaves. Only the
//! leaf list is stored; the root is implicit. The canonical text form is
//! `seq(token,token,...)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LeafAction {
    Aggregation,
    Dispersion,
    Separation,
    Clustering,
    RandomMotion,
    SouthEast,
    SouthWest,
    NorthEast,
    NorthWest,
}

impl LeafAction {
    pub const ALL: [LeafAction; 9] = [
        LeafAction::Aggregation,
        LeafAction::Dispersion,
        LeafAction::Separation,
        LeafAction::Clustering,
        LeafAction::RandomMotion,
        LeafAction::SouthEast,
        LeafAction::SouthWest,
        LeafAction::NorthEast,
        LeafAction::NorthWest,
    ];

    pub const COUNT: usize = Self::ALL.len();

    pub fn token(self) -> &'static str {
        match self {
            LeafAction::Aggregation => "aggregation",
            LeafAction::Dispersion => "dispersion",
            LeafAction::Separation => "separation",
            LeafAction::Clustering => "clustering",
            LeafAction::RandomMotion => "random",
            LeafAction::SouthEast => "southeast",
            LeafAction::SouthWest => "southwest",
            LeafAction::NorthEast => "northeast",
            LeafAction::NorthWest => "northwest",
        }
    }

    pub fn from_token(token: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.token() == token)
            .ok_or_else(|| Error::UnknownToken {
                token: token.to_string(),
            })
    }

    /// Position in [`LeafAction::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn valid_tokens() -> String {
        Self::ALL.map(LeafAction::token).join(", ")
    }

    pub fn is_stochastic(self) -> bool {
        self == LeafAction::RandomMotion
    }
}

impl fmt::Display for LeafAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for LeafAction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_token(s)
    }
}

/// Ordered leaf list under an implicit sequence root. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BehaviorTree {
    leaves: Vec<LeafAction>,
}

impl BehaviorTree {
    pub fn new(leaves: Vec<LeafAction>) -> Result<Self> {
        if leaves.is_empty() {
            return Err(Error::invalid("a behavior tree needs at least one leaf"));
        }
        Ok(Self { leaves })
    }

    pub fn leaves(&self) -> &[LeafAction] {
        &self.leaves
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, action: LeafAction) -> bool {
        self.leaves.contains(&action)
    }

    pub fn has_stochastic_leaf(&self) -> bool {
        self.leaves.iter().any(|a| a.is_stochastic())
    }

    /// Leaf counts indexed by [`LeafAction::index`].
    pub fn counts(&self) -> [usize; LeafAction::COUNT] {
        let mut counts = [0; LeafAction::COUNT];
        for leaf in &self.leaves {
            counts[leaf.index()] += 1;
        }
        counts
    }

    /// Same leaves with the same multiplicities, ignoring order.
    pub fn same_multiset(&self, other: &BehaviorTree) -> bool {
        self.counts() == other.counts()
    }

    pub fn serialize(&self) -> String {
        self.to_string()
    }

    pub fn parse(input: &str) -> Result<Self> {
        let malformed = |reason: &str| Error::MalformedTree {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let body = input
            .trim()
            .strip_prefix("seq(")
            .and_then(|rest| rest.strip_suffix(')'))
            .ok_or_else(|| malformed("expected the form seq(token,...)"))?;
        if body.trim().is_empty() {
            return Err(malformed("no leaves"));
        }
        let leaves = body
            .split(',')
            .map(|tok| LeafAction::from_token(tok.trim()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(leaves)
    }
}

impl fmt::Display for BehaviorTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("seq(")?;
        for (i, leaf) in self.leaves.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(leaf.token())?;
        }
        f.write_str(")")
    }
}

impl FromStr for BehaviorTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl TryFrom<String> for BehaviorTree {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

impl From<BehaviorTree> for String {
    fn from(tree: BehaviorTree) -> String {
        tree.serialize()
    }
}

/// Pairs of leaves whose forces cancel; constrained generation never puts both members of
/// a pair into the same tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CancelingPairs(Vec<(LeafAction, LeafAction)>);

impl CancelingPairs {
    pub fn new(pairs: Vec<(LeafAction, LeafAction)>) -> Self {
        Self(pairs)
    }

    pub fn none() -> Self {
        Self(Vec::new())
    }

    pub fn pairs(&self) -> &[(LeafAction, LeafAction)] {
        &self.0
    }

    pub fn cancels(&self, a: LeafAction, b: LeafAction) -> bool {
        self.0
            .iter()
            .any(|&(x, y)| (x == a && y == b) || (x == b && y == a))
    }

    /// True when the tree holds both members of some pair.
    pub fn violated_by(&self, tree: &BehaviorTree) -> bool {
        self.0
            .iter()
            .any(|&(x, y)| tree.contains(x) && tree.contains(y))
    }
}

impl Default for CancelingPairs {
    /// Aggregation/dispersion and the two diagonal-opposite force pairs.
    fn default() -> Self {
        use LeafAction::*;
        Self(vec![
            (Aggregation, Dispersion),
            (SouthEast, NorthWest),
            (SouthWest, NorthEast),
        ])
    }
}

fn check_leaf_count(leaf_count: usize) -> Result<()> {
    if leaf_count == 0 {
        return Err(Error::invalid("leaf count must be at least 1"));
    }
    Ok(())
}

/// Each leaf drawn uniformly and independently from the nine actions.
pub fn random_tree<R: Rng + ?Sized>(leaf_count: usize, rng: &mut R) -> Result<BehaviorTree> {
    check_leaf_count(leaf_count)?;
    let leaves = (0..leaf_count)
        .map(|_| LeafAction::ALL[rng.random_range(0..LeafAction::COUNT)])
        .collect();
    BehaviorTree::new(leaves)
}

/// Random tree free of the default canceling pairs.
pub fn random_constrained_tree<R: Rng + ?Sized>(
    leaf_count: usize,
    rng: &mut R,
) -> Result<BehaviorTree> {
    random_constrained_tree_with(leaf_count, &CancelingPairs::default(), rng)
}

/// Fills slots left to right, each uniform over the actions that cancel nothing already chosen.
pub fn random_constrained_tree_with<R: Rng + ?Sized>(
    leaf_count: usize,
    pairs: &CancelingPairs,
    rng: &mut R,
) -> Result<BehaviorTree> {
    check_leaf_count(leaf_count)?;
    let mut leaves: Vec<LeafAction> = Vec::with_capacity(leaf_count);
    for _ in 0..leaf_count {
        let candidates: Vec<LeafAction> = LeafAction::ALL
            .into_iter()
            .filter(|&c| !leaves.iter().any(|&l| pairs.cancels(l, c)))
            .collect();
        if candidates.is_empty() {
            return Err(Error::invalid(
                "canceling-pair list leaves no admissible action",
            ));
        }
        leaves.push(candidates[rng.random_range(0..candidates.len())]);
    }
    BehaviorTree::new(leaves)
}

/// Single-point crossover at a uniform cut in `1..L`. Single-leaf parents have no interior
/// cut point and come back unchanged.
pub fn crossover<R: Rng + ?Sized>(
    a: &BehaviorTree,
    b: &BehaviorTree,
    rng: &mut R,
) -> Result<(BehaviorTree, BehaviorTree)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Ok((a.clone(), b.clone()));
    }
    let cut = rng.random_range(1..a.len());
    crossover_at(a, b, cut)
}

/// Children `a[..cut] + b[cut..]` and `b[..cut] + a[cut..]`.
pub fn crossover_at(
    a: &BehaviorTree,
    b: &BehaviorTree,
    cut: usize,
) -> Result<(BehaviorTree, BehaviorTree)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if cut == 0 || cut >= a.len() {
        return Err(Error::invalid(format!(
            "cut point {cut} outside 1..{}",
            a.len()
        )));
    }
    let splice = |head: &BehaviorTree, tail: &BehaviorTree| BehaviorTree {
        leaves: head.leaves[..cut]
            .iter()
            .chain(&tail.leaves[cut..])
            .copied()
            .collect(),
    };
    Ok((splice(a, b), splice(b, a)))
}

/// Replaces one uniformly chosen leaf with a uniform draw over the eight other actions.
pub fn mutate<R: Rng + ?Sized>(tree: &BehaviorTree, rng: &mut R) -> BehaviorTree {
    let slot = rng.random_range(0..tree.len());
    let current = tree.leaves[slot].index();
    // Skip over the current action by drawing from 0..8 and shifting past it.
    let mut pick = rng.random_range(0..LeafAction::COUNT - 1);
    if pick >= current {
        pick += 1;
    }
    let mut leaves = tree.leaves.clone();
    leaves[slot] = LeafAction::ALL[pick];
    BehaviorTree { leaves }
}
