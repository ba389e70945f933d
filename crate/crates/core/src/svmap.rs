//! Set-valued maps over a finite metric space.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{directed_units, MetricSpace, PointSet, SpaceKind};
use crate::Length;

/// Built-in example systems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuiltinMap {
    /// `F(x) = X` for every `x`.
    ConstantFull,
    /// Single-valued identity.
    Identity,
    /// Single-valued circle rotation `t -> t + k/q`.
    Rotation { k: usize },
    /// Single-valued angle doubling `t -> 2t mod 1`.
    Doubling,
    /// `F(t) = [t, t + k/q]`, the arc swept by a rotation.
    RotationInterval { k: usize },
    /// `F(t) = B[2t mod 1, delta]`.
    BlurredDoubling { delta: Length },
    /// Cat map `(x, y) -> (2x + y, x + y)` on the torus lattice.
    AnosovMimic,
}

impl BuiltinMap {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinMap::ConstantFull => "constant_full",
            BuiltinMap::Identity => "identity",
            BuiltinMap::Rotation { .. } => "rotation",
            BuiltinMap::Doubling => "doubling",
            BuiltinMap::RotationInterval { .. } => "rotation_interval",
            BuiltinMap::BlurredDoubling { .. } => "blurred_doubling",
            BuiltinMap::AnosovMimic => "anosov_mimic",
        }
    }
}

/// A relation `x -> F(x)` with non-empty images.
#[derive(Clone)]
pub struct SetValuedMap {
    space: Arc<MetricSpace>,
    images: Vec<Vec<usize>>,
    images_connected: Option<bool>,
    usc: Option<bool>,
    label: String,
}

impl fmt::Debug for SetValuedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetValuedMap")
            .field("label", &self.label)
            .field("points", &self.space.len())
            .field("images_connected", &self.images_connected)
            .field("usc", &self.usc)
            .finish()
    }
}

impl SetValuedMap {
    /// Builds a map from an explicit image table (one row per point).
    pub fn from_images(space: Arc<MetricSpace>, images: Vec<Vec<usize>>) -> Result<Self> {
        if images.len() != space.len() {
            return Err(Error::ImageTableSize {
                got: images.len(),
                expected: space.len(),
            });
        }
        let mut clean = Vec::with_capacity(images.len());
        for (x, mut img) in images.into_iter().enumerate() {
            if img.is_empty() {
                return Err(Error::EmptyImage(x));
            }
            img.sort_unstable();
            img.dedup();
            space.check_point(*img.last().expect("non-empty"))?;
            clean.push(img);
        }
        let mut map = Self {
            space,
            images: clean,
            images_connected: None,
            usc: None,
            label: "explicit".into(),
        };
        map.images_connected = Some(map.check_cw_hypotheses().connected);
        Ok(map)
    }

    /// Single-valued map `F_f(x) = {f(x)}`.
    pub fn single_valued(space: Arc<MetricSpace>, f: &[usize]) -> Result<Self> {
        let mut map = Self::from_images(space, f.iter().map(|&y| vec![y]).collect())?;
        map.label = "single_valued".into();
        Ok(map)
    }

    pub fn builtin(space: Arc<MetricSpace>, kind: &BuiltinMap) -> Result<Self> {
        let q = space.side();
        let need = |expected: SpaceKind| -> Result<()> {
            if space.kind() == expected {
                Ok(())
            } else {
                Err(Error::InvalidMapParameter(format!(
                    "{} needs a {expected} space, got {}",
                    kind.name(),
                    space.kind()
                )))
            }
        };
        let images: Vec<Vec<usize>> = match kind {
            BuiltinMap::ConstantFull => vec![(0..space.len()).collect(); space.len()],
            BuiltinMap::Identity => (0..space.len()).map(|x| vec![x]).collect(),
            BuiltinMap::Rotation { k } => {
                need(SpaceKind::Circle)?;
                (0..q).map(|t| vec![(t + k) % q]).collect()
            }
            BuiltinMap::Doubling => {
                need(SpaceKind::Circle)?;
                (0..q).map(|t| vec![(2 * t) % q]).collect()
            }
            BuiltinMap::RotationInterval { k } => {
                need(SpaceKind::Circle)?;
                if *k == 0 || *k >= q {
                    return Err(Error::InvalidMapParameter(format!(
                        "rotation step {k} must satisfy 1 <= k < q = {q}"
                    )));
                }
                (0..q)
                    .map(|t| (0..=*k).map(|i| (t + i) % q).collect())
                    .collect()
            }
            BuiltinMap::BlurredDoubling { delta } => {
                need(SpaceKind::Circle)?;
                let scaled = *delta * Length::from_integer(q as i64);
                if *delta < Length::from_integer(0) || !scaled.is_integer() {
                    return Err(Error::NotOnGrid {
                        what: "blur radius",
                        value: *delta,
                        q,
                    });
                }
                let radius = u32::try_from(scaled.to_integer())
                    .map_err(|_| Error::InvalidMapParameter("blur radius too large".into()))?;
                (0..q)
                    .map(|t| space.ball_units((2 * t) % q, radius).members().to_vec())
                    .collect()
            }
            BuiltinMap::AnosovMimic => {
                need(SpaceKind::Torus)?;
                (0..space.len())
                    .map(|i| {
                        let (x, y) = (i / q, i % q);
                        vec![space.torus_index(2 * x + y, x + y)]
                    })
                    .collect()
            }
        };
        let mut map = Self::from_images(space, images)?;
        map.label = kind.name().into();
        // Each built-in is a continuous map or a closed-ball/arc blur of one.
        map.usc = Some(true);
        Ok(map)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    /// Number of points of the underlying space.
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, x: usize) -> &[usize] {
        &self.images[x]
    }

    pub fn image_set(&self, x: usize) -> PointSet {
        PointSet::from_sorted(&self.space, self.images[x].clone())
    }

    pub fn images(&self) -> &[Vec<usize>] {
        &self.images
    }

    pub fn images_connected(&self) -> Option<bool> {
        self.images_connected
    }

    /// Upper semi-continuity flag: `Some(true)` for built-ins, `None` for
    /// explicit tables until [`SetValuedMap::check_usc`] has been consulted.
    pub fn usc(&self) -> Option<bool> {
        self.usc
    }

    pub fn relates(&self, x: usize, y: usize) -> bool {
        self.images[x].binary_search(&y).is_ok()
    }

    pub fn max_image_len(&self) -> usize {
        self.images.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_single_valued(&self) -> bool {
        self.images.iter().all(|i| i.len() == 1)
    }

    /// Preimage lists (the transposed relation); entries may be empty.
    pub fn preimages(&self) -> Vec<Vec<usize>> {
        let mut pre = vec![Vec::new(); self.len()];
        for (x, img) in self.images.iter().enumerate() {
            for &y in img {
                pre[y].push(x);
            }
        }
        pre
    }

    pub(crate) fn image_mask(&self, mask: &[bool]) -> Vec<bool> {
        let mut out = vec![false; mask.len()];
        for (x, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            for &y in &self.images[x] {
                out[y] = true;
            }
        }
        out
    }

    /// `F(A)`: union of the images of the members of `A`.
    pub fn image_of_set(&self, a: &PointSet) -> Result<PointSet> {
        self.check_space(a)?;
        let out = self.image_mask(&a.mask());
        Ok(PointSet::from_mask(&self.space, &out).expect("images are non-empty"))
    }

    /// `F^n(A)`, with `F^0(A) = A`.
    pub fn iterate_set(&self, a: &PointSet, n: usize) -> Result<PointSet> {
        self.check_space(a)?;
        let mut mask = a.mask();
        for _ in 0..n {
            mask = self.image_mask(&mask);
        }
        Ok(PointSet::from_mask(&self.space, &mask).expect("images are non-empty"))
    }

    /// Sequence `A, F(A), ..., F^n(A)`.
    pub fn orbit_of_set(&self, a: &PointSet, n: usize) -> Result<Vec<PointSet>> {
        self.check_space(a)?;
        let mut out = Vec::with_capacity(n + 1);
        out.push(a.clone());
        let mut mask = a.mask();
        for _ in 0..n {
            mask = self.image_mask(&mask);
            out.push(PointSet::from_mask(&self.space, &mask).expect("images are non-empty"));
        }
        Ok(out)
    }

    /// `G o F`, i.e. `x -> union of G(y) over y in F(x)`; `self` is `G`.
    pub fn compose(&self, f: &SetValuedMap) -> Result<SetValuedMap> {
        if !self.space.same_as(&f.space) {
            return Err(Error::SpaceMismatch);
        }
        let images = (0..f.len())
            .map(|x| {
                let mut mask = vec![false; self.len()];
                for &y in f.image(x) {
                    for &z in self.image(y) {
                        mask[z] = true;
                    }
                }
                mask.iter()
                    .enumerate()
                    .filter_map(|(i, &m)| m.then_some(i))
                    .collect()
            })
            .collect();
        let mut out = Self::from_images(Arc::clone(&self.space), images)?;
        out.label = format!("{}∘{}", self.label, f.label);
        out.usc = match (self.usc, f.usc) {
            (Some(true), Some(true)) => Some(true),
            _ => None,
        };
        Ok(out)
    }

    /// One-step surrogate for upper semi-continuity: every neighbour `y` of
    /// `x` must have `F(y)` inside the `tol`-expansion of `F(x)`.
    pub fn check_usc(&self, tol: Length) -> Result<UscReport> {
        let radius = self.space.adjacency_radius();
        if tol < radius {
            return Err(Error::ToleranceBelowResolution { tol, radius });
        }
        let limit = self.space.floor_units(tol);
        let mut witnesses = Vec::new();
        for x in 0..self.len() {
            let fx = self.image_set(x);
            for &y in self.space.neighbors(x) {
                if i64::from(directed_units(&self.image_set(y), &fx)) > limit {
                    witnesses.push((x, y));
                }
            }
        }
        Ok(UscReport {
            pass: witnesses.is_empty(),
            tolerance: tol,
            witnesses,
            approximate: true,
        })
    }

    /// Checks that every image is non-empty and connected.
    pub fn check_cw_hypotheses(&self) -> CwHypothesesReport {
        let witnesses: Vec<usize> = (0..self.len())
            .filter(|&x| !self.image_set(x).is_connected())
            .collect();
        CwHypothesesReport {
            connected: witnesses.is_empty(),
            nonempty: self.images.iter().all(|i| !i.is_empty()),
            witnesses,
        }
    }

    fn check_space(&self, a: &PointSet) -> Result<()> {
        if a.space().same_as(&self.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UscReport {
    pub pass: bool,
    pub tolerance: Length,
    /// Pairs `(x, y)` with `y` adjacent to `x` and `F(y)` escaping `F(x)`.
    pub witnesses: Vec<(usize, usize)>,
    /// Always true: this is a net-scale surrogate, not the limit property.
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CwHypothesesReport {
    pub connected: bool,
    pub nonempty: bool,
    /// Points whose image is disconnected.
    pub witnesses: Vec<usize>,
}
