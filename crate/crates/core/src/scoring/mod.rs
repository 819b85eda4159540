//! Embedding storage and the scoring functions.
//!
//! Every model scores a triplet so that higher means more plausible;
//! translational models return negated distances.

mod checkpoint;
mod kernels;
mod loss;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Triplet;
use crate::{rng, Error, Result};

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CheckpointMeta,
};
pub use loss::{pair_gradient, softplus, Loss, LossKind, PairStats};

/// Floating-point element type of an [`EmbeddingStore`].
pub trait Real:
    num_traits::Float + Default + fmt::Debug + Send + Sync + std::iter::Sum + 'static
{
    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    TransE,
    TransH,
    TransD,
    DistMult,
    ComplEx,
    SimplE,
    RotatE,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::TransE,
        ModelKind::TransH,
        ModelKind::TransD,
        ModelKind::DistMult,
        ModelKind::ComplEx,
        ModelKind::SimplE,
        ModelKind::RotatE,
    ];

    /// Parameter matrices in their fixed storage and checkpoint order.
    pub fn roles(self) -> &'static [Role] {
        use Role::*;
        match self {
            ModelKind::TransE | ModelKind::DistMult | ModelKind::ComplEx | ModelKind::RotatE => {
                &[Entity, Relation]
            }
            ModelKind::TransH => &[Entity, Relation, RelationNormal],
            ModelKind::TransD => &[Entity, Relation, EntityProjection, RelationProjection],
            ModelKind::SimplE => &[Entity, Relation, Entity2, Relation2],
        }
    }

    /// Columns per row for a model of dimension `dim`.
    pub fn width(self, dim: usize) -> usize {
        match self {
            ModelKind::ComplEx | ModelKind::RotatE => 2 * dim,
            _ => dim,
        }
    }

    /// Distance-based models, the ones an entity L2-normalization flag applies to.
    pub fn is_translational(self) -> bool {
        matches!(
            self,
            ModelKind::TransE | ModelKind::TransH | ModelKind::TransD | ModelKind::RotatE
        )
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown model {s:?}")))
    }
}

/// What a parameter matrix holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Entity,
    Relation,
    /// TransH hyperplane normal per relation.
    RelationNormal,
    /// TransD projection vector per entity.
    EntityProjection,
    /// TransD projection vector per relation.
    RelationProjection,
    /// SimplE second entity embedding.
    Entity2,
    /// SimplE inverse-relation embedding.
    Relation2,
}

impl Role {
    pub fn indexes_entities(self) -> bool {
        matches!(self, Role::Entity | Role::EntityProjection | Role::Entity2)
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        use Role::*;
        [
            Entity,
            Relation,
            RelationNormal,
            EntityProjection,
            RelationProjection,
            Entity2,
            Relation2,
        ]
        .get(c as usize)
        .copied()
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Model parameters: one matrix per [`Role`] of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore<T> {
    pub kind: ModelKind,
    pub dim: usize,
    pub entity_count: usize,
    pub relation_count: usize,
    /// SimplE only: average the two bilinear terms instead of summing them.
    pub simple_half: bool,
    pub params: Vec<Matrix<T>>,
}

impl<T: Real> EmbeddingStore<T> {
    pub fn zeros(kind: ModelKind, entity_count: usize, relation_count: usize, dim: usize) -> Self {
        let width = kind.width(dim);
        let params = kind
            .roles()
            .iter()
            .map(|r| {
                let rows = if r.indexes_entities() {
                    entity_count
                } else {
                    relation_count
                };
                Matrix::zeros(rows, width)
            })
            .collect();
        EmbeddingStore {
            kind,
            dim,
            entity_count,
            relation_count,
            simple_half: false,
            params,
        }
    }

    /// Xavier-uniform initialization: each matrix gets i.i.d. draws from
    /// `±sqrt(6 / (rows + cols))`. TransH normals are then scaled to unit length.
    pub fn xavier(
        kind: ModelKind,
        entity_count: usize,
        relation_count: usize,
        dim: usize,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension(
                "embedding dimension must be positive".into(),
            ));
        }
        let mut store = Self::zeros(kind, entity_count, relation_count, dim);
        for (slot, m) in store.params.iter_mut().enumerate() {
            let bound = (6.0 / (m.rows + m.cols) as f64).sqrt();
            let mut r = rng::stream(seed, &[0x1A17, slot as u64]);
            for x in m.data.iter_mut() {
                *x = T::of(r.gen_range(-bound..bound));
            }
        }
        store.project_constraints(None);
        Ok(store)
    }

    pub fn role(&self, slot: usize) -> Role {
        self.kind.roles()[slot]
    }

    pub fn slot_of(&self, role: Role) -> Option<usize> {
        self.kind.roles().iter().position(|r| *r == role)
    }

    pub fn width(&self) -> usize {
        self.kind.width(self.dim)
    }

    pub fn check(&self, t: &Triplet) -> Result<()> {
        if t.head >= self.entity_count
            || t.tail >= self.entity_count
            || t.relation >= self.relation_count
        {
            return Err(Error::Dimension(format!(
                "triplet {t:?} out of range for |E|={}, |R|={}",
                self.entity_count, self.relation_count
            )));
        }
        Ok(())
    }

    /// Plausibility of a triplet.
    #[inline]
    pub fn score(&self, t: Triplet) -> T {
        kernels::score(self, t, None)
    }

    /// Score and add `coef * d score / d params` into `grad`.
    #[inline]
    pub fn score_with_grad(&self, t: Triplet, coef: T, grad: &mut SparseGrad<T>) -> T {
        kernels::score(self, t, Some((coef, grad)))
    }

    /// Scores of `(head, relation, e)` for every entity `e`.
    pub fn score_all_tails(&self, head: usize, relation: usize, out: &mut Vec<T>) {
        out.clear();
        out.extend((0..self.entity_count).map(|e| self.score(Triplet::new(head, relation, e))));
    }

    /// Scores of `(e, relation, tail)` for every entity `e`.
    pub fn score_all_heads(&self, relation: usize, tail: usize, out: &mut Vec<T>) {
        out.clear();
        out.extend((0..self.entity_count).map(|e| self.score(Triplet::new(e, relation, tail))));
    }

    /// Parameter rows a triplet's score depends on, without duplicates.
    pub fn touched_rows(&self, t: Triplet, out: &mut Vec<(usize, usize)>) {
        for (slot, role) in self.kind.roles().iter().enumerate() {
            if role.indexes_entities() {
                push_unique(out, (slot, t.head));
                push_unique(out, (slot, t.tail));
            } else {
                push_unique(out, (slot, t.relation));
            }
        }
    }

    /// Re-impose hard constraints after an update. With `entity_rows` set only
    /// those entities are touched; TransH normals are always renormalized for
    /// the given relations (or all when `None`).
    pub fn project_constraints(&mut self, relations: Option<&[usize]>) {
        if let Some(slot) = self.slot_of(Role::RelationNormal) {
            let m = &mut self.params[slot];
            match relations {
                Some(rs) => {
                    for &r in rs {
                        normalize(m.row_mut(r));
                    }
                }
                None => {
                    for r in 0..m.rows {
                        normalize(m.row_mut(r));
                    }
                }
            }
        }
    }

    /// L2-normalize the given entity embedding rows.
    pub fn normalize_entities(&mut self, entities: &[usize]) {
        if let Some(slot) = self.slot_of(Role::Entity) {
            let m = &mut self.params[slot];
            for &e in entities {
                normalize(m.row_mut(e));
            }
        }
    }

    pub fn cast<U: Real>(&self) -> EmbeddingStore<U> {
        EmbeddingStore {
            kind: self.kind,
            dim: self.dim,
            entity_count: self.entity_count,
            relation_count: self.relation_count,
            simple_half: self.simple_half,
            params: self
                .params
                .iter()
                .map(|m| Matrix {
                    rows: m.rows,
                    cols: m.cols,
                    data: m.data.iter().map(|&x| U::of(x.as_f64())).collect(),
                })
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params
            .iter()
            .all(|m| m.data.iter().all(|x| x.is_finite()))
    }
}

fn push_unique(v: &mut Vec<(usize, usize)>, x: (usize, usize)) {
    if !v.contains(&x) {
        v.push(x);
    }
}

fn normalize<T: Real>(row: &mut [T]) {
    let n = row.iter().map(|&x| x * x).sum::<T>().sqrt();
    if n > T::zero() {
        for x in row.iter_mut() {
            *x = *x / n;
        }
    }
}

/// Gradient over a handful of parameter rows, keyed by `(slot, row)`.
#[derive(Debug, Clone, Default)]
pub struct SparseGrad<T> {
    keys: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    width: usize,
    buf: Vec<T>,
}

impl<T: Real> SparseGrad<T> {
    pub fn new(width: usize) -> Self {
        SparseGrad {
            keys: Vec::new(),
            offsets: Vec::new(),
            width,
            buf: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        self.keys.clear();
        self.offsets.clear();
        self.buf.clear();
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Offset of the row `(slot, row)` inside the buffer, creating a zero row.
    pub fn entry(&mut self, slot: usize, row: usize) -> usize {
        if let Some(i) = self.keys.iter().position(|k| *k == (slot, row)) {
            return self.offsets[i];
        }
        let off = self.buf.len();
        self.buf.resize(off + self.width, T::zero());
        self.keys.push((slot, row));
        self.offsets.push(off);
        off
    }

    /// Mutable view of row `(slot, row)`, zero-initialized on first use.
    pub fn row_mut(&mut self, slot: usize, row: usize) -> &mut [T] {
        let off = self.entry(slot, row);
        &mut self.buf[off..off + self.width]
    }

    #[inline]
    pub(crate) fn buf_mut(&mut self) -> &mut [T] {
        &mut self.buf
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &[T])> + '_ {
        self.keys
            .iter()
            .zip(&self.offsets)
            .map(move |(k, &o)| (*k, &self.buf[o..o + self.width]))
    }

    pub fn get(&self, slot: usize, row: usize) -> Option<&[T]> {
        self.keys
            .iter()
            .position(|k| *k == (slot, row))
            .map(|i| &self.buf[self.offsets[i]..self.offsets[i] + self.width])
    }

    /// Euclidean norm of the whole gradient, accumulated in f64.
    pub fn norm(&self) -> f64 {
        self.buf
            .iter()
            .map(|x| x.as_f64() * x.as_f64())
            .sum::<f64>()
            .sqrt()
    }
}
