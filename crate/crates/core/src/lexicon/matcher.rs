use super::{Lexicon, PatternKind};

const ROOT: u32 = 0;

#[derive(Clone, Debug, Default)]
struct Node {
    /// Sorted by byte.
    children: Vec<(u8, u32)>,
    /// Category slots whose exact pattern ends here.
    exact: Vec<u32>,
    /// Category slots whose prefix pattern ends here.
    prefix: Vec<u32>,
}

/// Byte trie over every pattern stem of a lexicon.
///
/// Matching walks the token once: every prefix pattern met along the path
/// applies, and exact patterns apply only at the token's final node. Results
/// are category *sets*; several patterns of one category hitting the same
/// token count once.
#[derive(Clone, Debug)]
pub struct Matcher {
    nodes: Vec<Node>,
    /// Slot -> (category id, name), in lexicon id order.
    categories: Vec<(u32, String)>,
    lexicon_name: String,
    fingerprint: u64,
}

impl Matcher {
    pub fn compile(lexicon: &Lexicon) -> Matcher {
        let mut nodes = vec![Node::default()];
        let categories: Vec<(u32, String)> = lexicon
            .categories()
            .iter()
            .map(|c| (c.id, c.name.clone()))
            .collect();
        for (slot, category) in lexicon.categories().iter().enumerate() {
            for pattern in &category.patterns {
                let mut node = ROOT;
                for &b in pattern.stem().as_bytes() {
                    node = match nodes[node as usize]
                        .children
                        .binary_search_by_key(&b, |(k, _)| *k)
                    {
                        Ok(i) => nodes[node as usize].children[i].1,
                        Err(i) => {
                            let next = nodes.len() as u32;
                            nodes.push(Node::default());
                            nodes[node as usize].children.insert(i, (b, next));
                            next
                        }
                    };
                }
                let leaf = &mut nodes[node as usize];
                let list = match pattern.kind() {
                    PatternKind::Exact => &mut leaf.exact,
                    PatternKind::Prefix => &mut leaf.prefix,
                };
                if !list.contains(&(slot as u32)) {
                    list.push(slot as u32);
                }
            }
        }
        Matcher {
            nodes,
            categories,
            lexicon_name: lexicon.name().to_string(),
            fingerprint: lexicon.fingerprint(),
        }
    }

    /// Appends the distinct category slots matching `token` to `out`
    /// (cleared first), sorted ascending.
    pub fn match_slots(&self, token: &str, out: &mut Vec<u32>) {
        out.clear();
        let mut node = Some(&self.nodes[ROOT as usize]);
        for &b in token.as_bytes() {
            let Some(current) = node else { break };
            node = current
                .children
                .binary_search_by_key(&b, |(k, _)| *k)
                .ok()
                .map(|i| &self.nodes[current.children[i].1 as usize]);
            if let Some(next) = node {
                out.extend_from_slice(&next.prefix);
            }
        }
        // the whole token was consumed: exact patterns ending here apply
        if let Some(last) = node {
            out.extend_from_slice(&last.exact);
        }
        if out.len() > 1 {
            out.sort_unstable();
            out.dedup();
        }
    }

    /// Category ids matching `token`, ascending.
    pub fn match_token(&self, token: &str) -> Vec<u32> {
        let mut slots = Vec::new();
        self.match_slots(token, &mut slots);
        slots
            .into_iter()
            .map(|s| self.categories[s as usize].0)
            .collect()
    }

    pub fn matches_category(&self, token: &str, id: u32) -> bool {
        self.match_token(token).contains(&id)
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn slot_of(&self, id: u32) -> Option<usize> {
        self.categories.iter().position(|(cid, _)| *cid == id)
    }

    /// `(id, name)` per slot.
    pub fn categories(&self) -> &[(u32, String)] {
        &self.categories
    }

    pub fn lexicon_name(&self) -> &str {
        &self.lexicon_name
    }

    /// Fingerprint of the lexicon this matcher was compiled from.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}
