use std::collections::HashMap;

use super::array::{Array, Scalar};
use super::tape::{Graph, Tensor};

/// Named trainable tensors with deterministic iteration order (insertion
/// order), so optimizer sweeps and checkpoints are reproducible.
#[derive(Debug, Clone)]
pub struct ParameterSet<T: Scalar> {
    entries: Vec<(String, Array<T>)>,
    index: HashMap<String, usize>,
    seed: u64,
}

impl<T: Scalar> ParameterSet<T> {
    pub fn new(seed: u64) -> Self {
        ParameterSet { entries: Vec::new(), index: HashMap::new(), seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array<T>) {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter name {name}");
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push((name, value));
    }

    pub fn get(&self, name: &str) -> &Array<T> {
        let i = *self.index.get(name).unwrap_or_else(|| panic!("unknown parameter {name}"));
        &self.entries[i].1
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Array<T> {
        let i = *self.index.get(name).unwrap_or_else(|| panic!("unknown parameter {name}"));
        &mut self.entries[i].1
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array<T>)> {
        self.entries.iter().map(|(n, a)| (n.as_str(), a))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Array<T>)> {
        self.entries.iter_mut().map(|(n, a)| (n.as_str(), a))
    }

    pub fn total_scalars(&self) -> usize {
        self.entries.iter().map(|(_, a)| a.numel()).sum()
    }

    /// Cast every tensor (used to run f64 gradient checks on f32-built nets).
    pub fn cast<U: Scalar>(&self) -> ParameterSet<U> {
        let mut out = ParameterSet::new(self.seed);
        for (n, a) in self.iter() {
            out.insert(n, Array::<U>::from_f64_slice(a.shape(), &a.to_f64_vec()));
        }
        out
    }
}

/// Leaves for one parameter set on one graph, so every layer referencing a
/// parameter by name shares a single tape node.
pub struct GraphParams<'g, T: Scalar> {
    handles: HashMap<String, Tensor<'g, T>>,
    order: Vec<String>,
}

impl<'g, T: Scalar> GraphParams<'g, T> {
    /// Wrap pre-existing leaf handles (used by gradient-check harnesses).
    pub fn from_handles(handles: Vec<(String, Tensor<'g, T>)>) -> Self {
        let order: Vec<String> = handles.iter().map(|(n, _)| n.clone()).collect();
        GraphParams { handles: handles.into_iter().collect(), order }
    }

    pub fn bind(graph: &'g Graph<T>, params: &ParameterSet<T>) -> Self {
        let mut handles = HashMap::new();
        let mut order = Vec::new();
        for (name, value) in params.iter() {
            handles.insert(name.to_string(), graph.leaf(value.clone(), true));
            order.push(name.to_string());
        }
        GraphParams { handles, order }
    }

    pub fn get(&self, name: &str) -> Tensor<'g, T> {
        *self.handles.get(name).unwrap_or_else(|| panic!("unbound parameter {name}"))
    }

    /// Gradients in parameter-set order; zeros where a parameter was unused.
    pub fn grads(&self, graph: &Graph<T>, params: &ParameterSet<T>) -> Vec<Array<T>> {
        self.order
            .iter()
            .map(|name| {
                graph
                    .grad(self.get(name))
                    .unwrap_or_else(|| Array::zeros(params.get(name).shape()))
            })
            .collect()
    }
}
