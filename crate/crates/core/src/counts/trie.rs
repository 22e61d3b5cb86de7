use std::collections::BTreeMap;

use super::PhraseId;

/// Count trie node. The root carries no count; a node at depth k holds the
/// count of the k-gram spelled by the path to it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrieNode {
    pub count: u64,
    pub children: BTreeMap<PhraseId, TrieNode>,
}

impl TrieNode {
    pub fn child_mut(&mut self, id: PhraseId) -> &mut TrieNode {
        self.children.entry(id).or_default()
    }

    pub fn find(&self, key: &[PhraseId]) -> Option<&TrieNode> {
        let mut node = self;
        for id in key {
            node = node.children.get(id)?;
        }
        Some(node)
    }

    /// Visits every node at `depth` below this one in key order.
    pub fn walk_depth(&self, depth: usize, f: &mut dyn FnMut(&[PhraseId], &TrieNode)) {
        let mut key = Vec::with_capacity(depth);
        self.walk_inner(depth, &mut key, f);
    }

    fn walk_inner(
        &self,
        depth: usize,
        key: &mut Vec<PhraseId>,
        f: &mut dyn FnMut(&[PhraseId], &TrieNode),
    ) {
        if key.len() == depth {
            f(key, self);
            return;
        }
        for (&id, child) in &self.children {
            key.push(id);
            child.walk_inner(depth, key, f);
            key.pop();
        }
    }

    pub fn count_at_depth(&self, depth: usize) -> usize {
        if depth == 0 {
            return 1;
        }
        self.children
            .values()
            .map(|c| c.count_at_depth(depth - 1))
            .sum()
    }

    /// Adds `other` into `self`, translating `other`'s ids through `remap`.
    pub fn merge_remapped(&mut self, other: &TrieNode, remap: &[PhraseId]) {
        self.count += other.count;
        for (id, child) in &other.children {
            self.child_mut(remap[id.index()])
                .merge_remapped(child, remap);
        }
    }
}
