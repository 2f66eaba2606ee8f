//! Denavit-Hartenberg forward kinematics for a primary serial chain plus any
//! number of secondary chains (e.g. a parallelogram) whose rows are driven by
//! affine combinations of the actuated joint coordinates.
//!
//! Frames are indexed per chain: frame 0 is the chain base (the world base for
//! the primary chain, or the attachment frame for a secondary chain) and frame
//! `k` is the frame after the `k`-th DH row. Every row carries one link, so the
//! links of the model are the rows of all chains in chain order.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Which actuated coordinate drives a row when no explicit coupling is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointRef {
    Fixed,
    /// Zero-based actuated joint index.
    Actuated(usize),
}

/// One row of a standard DH table.
#[derive(Debug, Clone, PartialEq)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta_offset: f64,
    pub joint: JointRef,
}

impl DhRow {
    pub fn new(a: f64, alpha: f64, d: f64, theta_offset: f64, joint: JointRef) -> Self {
        Self {
            a,
            alpha: normalize_angle(alpha),
            d,
            theta_offset: normalize_angle(theta_offset),
            joint,
        }
    }
}

/// Homogeneous transform of one DH row at effective coordinate `q`:
/// `Rot_z(theta_offset + q) * Trans_z(d) * Trans_x(a) * Rot_x(alpha)`.
pub fn link_transform(row: &DhRow, q: f64) -> Matrix4<f64> {
    let (st, ct) = (row.theta_offset + q).sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    Matrix4::new(
        ct,
        -st * ca,
        st * sa,
        row.a * ct,
        st,
        ct * ca,
        -ct * sa,
        row.a * st,
        0.0,
        sa,
        ca,
        row.d,
        0.0,
        0.0,
        0.0,
        1.0,
    )
}

/// Affine map from actuated coordinates to one row's effective angle:
/// `q_eff = offset + sum(coeff * q[joint])`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Coupling {
    pub offset: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Coupling {
    pub fn identity(joint: usize) -> Self {
        Self {
            offset: 0.0,
            terms: vec![(joint, 1.0)],
        }
    }

    pub fn fixed(offset: f64) -> Self {
        Self {
            offset,
            terms: Vec::new(),
        }
    }

    pub fn evaluate(&self, q: &[f64]) -> f64 {
        self.terms.iter().fold(self.offset, |acc, &(j, c)| acc + c * q[j])
    }

    fn from_ref(joint: JointRef) -> Self {
        match joint {
            JointRef::Fixed => Self::fixed(0.0),
            JointRef::Actuated(j) => Self::identity(j),
        }
    }
}

/// A frame of some chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRef {
    pub chain: usize,
    pub frame: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub name: String,
    /// Attachment frame; `None` means the world base (only valid for chain 0).
    pub attach: Option<FrameRef>,
    pub rows: Vec<DhRow>,
    /// Per-row coupling, parallel to `rows`.
    pub couplings: Vec<Coupling>,
}

impl Chain {
    /// A chain whose couplings follow each row's `joint` reference.
    pub fn new(name: impl Into<String>, attach: Option<FrameRef>, rows: Vec<DhRow>) -> Self {
        let couplings = rows.iter().map(|r| Coupling::from_ref(r.joint)).collect();
        Self {
            name: name.into(),
            attach,
            rows,
            couplings,
        }
    }

    pub fn with_couplings(mut self, couplings: Vec<Coupling>) -> Self {
        self.couplings = couplings;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimit {
    pub lo: f64,
    pub hi: f64,
}

impl JointLimit {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.lo && q <= self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// One row on the path from the world base to a link frame.
#[derive(Debug, Clone, Copy)]
struct PathRow {
    chain: usize,
    row: usize,
}

#[derive(Debug, Clone)]
pub struct KinematicModel {
    pub name: String,
    pub chains: Vec<Chain>,
    pub n_joints: usize,
    pub limits: Vec<JointLimit>,
    pub gravity_direction: Vector3<f64>,
    /// `(chain, row)` of every link, in link order.
    links: Vec<(usize, usize)>,
    /// Rows from the base to each link frame, proximal first.
    paths: Vec<Vec<PathRow>>,
}

impl PartialEq for KinematicModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.chains == other.chains
            && self.n_joints == other.n_joints
            && self.limits == other.limits
            && self.gravity_direction == other.gravity_direction
    }
}

impl KinematicModel {
    pub fn new(
        name: impl Into<String>,
        chains: Vec<Chain>,
        n_joints: usize,
        limits: Vec<JointLimit>,
        gravity_direction: Vector3<f64>,
    ) -> Result<Self> {
        if chains.is_empty() {
            return Err(Error::InvalidModel("no chains".into()));
        }
        if chains[0].attach.is_some() {
            return Err(Error::InvalidModel(
                "the primary chain must start at the world base".into(),
            ));
        }
        if limits.len() != n_joints {
            return Err(Error::InvalidModel(format!(
                "{} joint limits given for {} joints",
                limits.len(),
                n_joints
            )));
        }
        for (j, l) in limits.iter().enumerate() {
            if !(l.lo <= l.hi) {
                return Err(Error::InvalidModel(format!(
                    "joint {} limits [{}, {}] not ordered",
                    j + 1,
                    l.lo,
                    l.hi
                )));
            }
        }
        if ((gravity_direction.norm() - 1.0).abs()) > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "gravity direction norm {} is not 1",
                gravity_direction.norm()
            )));
        }
        for (c, chain) in chains.iter().enumerate() {
            if chain.rows.len() != chain.couplings.len() {
                return Err(Error::InvalidModel(format!(
                    "chain `{}` has {} rows but {} couplings",
                    chain.name,
                    chain.rows.len(),
                    chain.couplings.len()
                )));
            }
            if let Some(at) = chain.attach {
                if c == 0 || at.chain >= c {
                    return Err(Error::InvalidModel(format!(
                        "chain `{}` must attach to an earlier chain",
                        chain.name
                    )));
                }
                if at.frame > chains[at.chain].rows.len() {
                    return Err(Error::InvalidModel(format!(
                        "chain `{}` attaches to missing frame {}",
                        chain.name, at.frame
                    )));
                }
            }
            for (r, (row, cp)) in chain.rows.iter().zip(&chain.couplings).enumerate() {
                if let JointRef::Actuated(j) = row.joint {
                    if j >= n_joints {
                        return Err(Error::InvalidModel(format!(
                            "chain `{}` row {} references joint {} of {}",
                            chain.name,
                            r + 1,
                            j + 1,
                            n_joints
                        )));
                    }
                }
                if let Some(&(j, _)) = cp.terms.iter().find(|(j, _)| *j >= n_joints) {
                    return Err(Error::InvalidModel(format!(
                        "chain `{}` row {} coupling references nonexistent joint {}",
                        chain.name,
                        r + 1,
                        j + 1
                    )));
                }
            }
        }

        let mut links = Vec::new();
        let mut paths = Vec::new();
        for (c, chain) in chains.iter().enumerate() {
            for r in 0..chain.rows.len() {
                links.push((c, r));
                paths.push(path_to(&chains, c, r + 1));
            }
        }

        Ok(Self {
            name: name.into(),
            chains,
            n_joints,
            limits,
            gravity_direction,
            links,
            paths,
        })
    }

    /// The shipped six-joint MTM-like description (representative values).
    pub fn mtm_default() -> Self {
        crate::files::parse_kinematic_model(DEFAULT_MODEL_TOML, "builtin:mtm-like")
            .expect("builtin kinematic model parses")
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// `(chain, row)` for a zero-based link index.
    pub fn link_location(&self, link: usize) -> Option<(usize, usize)> {
        self.links.get(link).copied()
    }

    pub fn link_name(&self, link: usize) -> String {
        let (c, r) = self.links[link];
        format!("{}[{}]", self.chains[c].name, r + 1)
    }

    /// Checks length and (unless disabled) joint limits of `q`.
    pub fn check_q(&self, q: &[f64], enforce_limits: bool) -> Result<()> {
        if q.len() != self.n_joints {
            return Err(Error::Dimension(format!(
                "joint vector has {} entries, model has {} joints",
                q.len(),
                self.n_joints
            )));
        }
        if enforce_limits {
            for (j, (&v, l)) in q.iter().zip(&self.limits).enumerate() {
                if !l.contains(v) {
                    return Err(Error::OutOfLimits {
                        joint: j + 1,
                        value: v,
                        lo: l.lo,
                        hi: l.hi,
                    });
                }
            }
        }
        Ok(())
    }

    /// Effective per-row coordinates, indexed `[chain][row]`.
    pub fn resolve_coupling(&self, q: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_q(q, false)?;
        Ok(self
            .chains
            .iter()
            .map(|ch| ch.couplings.iter().map(|c| c.evaluate(q)).collect())
            .collect())
    }

    /// Base-frame pose of every frame of every chain.
    pub fn frames(&self, q: &[f64]) -> Result<FrameSet> {
        self.check_q(q, false)?;
        let mut fs = FrameSet::default();
        self.frames_into(q, &mut fs);
        Ok(fs)
    }

    /// Fills `out` without reallocating once its buffers have grown to size.
    /// `q` must have `n_joints` entries.
    pub fn frames_into(&self, q: &[f64], out: &mut FrameSet) {
        out.poses.resize_with(self.chains.len(), Vec::new);
        for (c, chain) in self.chains.iter().enumerate() {
            let base = match chain.attach {
                None => Matrix4::identity(),
                Some(at) => out.poses[at.chain][at.frame],
            };
            let poses = &mut out.poses[c];
            poses.clear();
            poses.push(base);
            let mut t = base;
            for (row, cp) in chain.rows.iter().zip(&chain.couplings) {
                t *= link_transform(row, cp.evaluate(q));
                poses.push(t);
            }
        }
    }

    /// Center of mass of a link (zero-based index) in the base frame.
    pub fn com_position(
        &self,
        masses: &crate::gravity::LinkMassParams,
        q: &[f64],
        link: usize,
    ) -> Result<Vector3<f64>> {
        self.check_link(link)?;
        if masses.links.len() != self.link_count() {
            return Err(Error::Dimension(format!(
                "{} link mass entries for {} links",
                masses.links.len(),
                self.link_count()
            )));
        }
        let fs = self.frames(q)?;
        Ok(fs.link_point(self, link, &masses.links[link].com))
    }

    /// Pose of the last frame of the primary chain.
    pub fn end_effector(&self, q: &[f64]) -> Result<Matrix4<f64>> {
        let fs = self.frames(q)?;
        Ok(*fs.poses[0].last().expect("frames include the base"))
    }

    pub(crate) fn check_link(&self, link: usize) -> Result<()> {
        if link >= self.link_count() {
            return Err(Error::IndexOutOfRange {
                index: link,
                valid: format!("0..{}", self.link_count()),
            });
        }
        Ok(())
    }

    /// Calls `f(joint, coefficient, axis, origin)` for every actuated
    /// dependency of the given link frame: the partial derivative of a point
    /// `p` rigidly attached to the link with respect to `q[joint]` is the sum
    /// of `coefficient * axis x (p - origin)` over these calls.
    pub(crate) fn for_each_dependency(
        &self,
        frames: &FrameSet,
        link: usize,
        mut f: impl FnMut(usize, f64, Vector3<f64>, Vector3<f64>),
    ) {
        for pr in &self.paths[link] {
            let parent = &frames.poses[pr.chain][pr.row];
            let axis = parent.fixed_view::<3, 1>(0, 2).into_owned();
            let origin = parent.fixed_view::<3, 1>(0, 3).into_owned();
            for &(j, c) in &self.chains[pr.chain].couplings[pr.row].terms {
                f(j, c, axis, origin);
            }
        }
    }

    /// Chain transform from frame `from` to frame `to` of one chain.
    pub fn chain_transform(&self, chain: usize, q: &[f64], from: usize, to: usize) -> Result<Matrix4<f64>> {
        self.check_q(q, false)?;
        let ch = self.chains.get(chain).ok_or(Error::IndexOutOfRange {
            index: chain,
            valid: format!("0..{}", self.chains.len()),
        })?;
        if from > to || to > ch.rows.len() {
            return Err(Error::IndexOutOfRange {
                index: to,
                valid: format!("{}..={}", from, ch.rows.len()),
            });
        }
        Ok(ch.rows[from..to]
            .iter()
            .zip(&ch.couplings[from..to])
            .fold(Matrix4::identity(), |t, (row, cp)| {
                t * link_transform(row, cp.evaluate(q))
            }))
    }
}

fn path_to(chains: &[Chain], chain: usize, frame: usize) -> Vec<PathRow> {
    let mut path = match chains[chain].attach {
        None => Vec::new(),
        Some(at) => path_to(chains, at.chain, at.frame),
    };
    path.extend((0..frame).map(|row| PathRow { chain, row }));
    path
}

/// Base-frame poses of every chain frame for one configuration.
#[derive(Debug, Clone, Default)]
pub struct FrameSet {
    /// `poses[chain][frame]`.
    pub poses: Vec<Vec<Matrix4<f64>>>,
}

impl FrameSet {
    pub fn link_pose(&self, model: &KinematicModel, link: usize) -> &Matrix4<f64> {
        let (c, r) = model.links[link];
        &self.poses[c][r + 1]
    }

    pub fn link_rotation(&self, model: &KinematicModel, link: usize) -> Matrix3<f64> {
        self.link_pose(model, link).fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn link_origin(&self, model: &KinematicModel, link: usize) -> Vector3<f64> {
        self.link_pose(model, link).fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// A point given in link coordinates, expressed in the base frame.
    pub fn link_point(&self, model: &KinematicModel, link: usize, local: &Vector3<f64>) -> Vector3<f64> {
        self.link_origin(model, link) + self.link_rotation(model, link) * local
    }
}

pub(crate) const DEFAULT_MODEL_TOML: &str = include_str!("../data/mtm_like.toml");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gravity::{LinkMass, LinkMassParams};
    use std::f64::consts::FRAC_PI_2;

    fn one_link() -> KinematicModel {
        let row = DhRow::new(0.0, 0.0, 0.0, 0.0, JointRef::Actuated(0));
        KinematicModel::new(
            "one",
            vec![Chain::new("arm", None, vec![row])],
            1,
            vec![JointLimit::new(-PI, PI)],
            Vector3::new(0.0, -1.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn zero_row_is_identity() {
        let row = DhRow::new(0.0, 0.0, 0.0, 0.0, JointRef::Actuated(0));
        assert_eq!(link_transform(&row, 0.0), Matrix4::identity());
    }

    #[test]
    fn quarter_turn_maps_x_to_y() {
        let row = DhRow::new(1.0, 0.0, 0.0, 0.0, JointRef::Actuated(0));
        let t = link_transform(&row, FRAC_PI_2);
        let p = t * nalgebra::Vector4::new(0.0, 0.0, 0.0, 1.0);
        assert!((p.x - 0.0).abs() < 1e-15 && (p.y - 1.0).abs() < 1e-15);
        assert_eq!(t.row(3).into_owned(), nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn angles_are_normalized() {
        let row = DhRow::new(0.0, 3.0 * PI, 0.0, -PI, JointRef::Fixed);
        assert!((row.alpha - PI).abs() < 1e-12);
        assert!((row.theta_offset - PI).abs() < 1e-12);
        assert_eq!(normalize_angle(0.5), 0.5);
        assert!((normalize_angle(-3.0 * PI / 2.0) - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn com_of_one_link() {
        let m = one_link();
        let masses = LinkMassParams {
            links: vec![LinkMass::new(1.0, Vector3::new(1.0, 0.0, 0.0))],
        };
        let p = m.com_position(&masses, &[0.0], 0).unwrap();
        assert!((p - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        let p = m.com_position(&masses, &[PI], 0).unwrap();
        assert!((p - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            m.com_position(&masses, &[0.0], 1),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn identity_coupling_passes_joints_through() {
        let m = KinematicModel::mtm_default();
        let q = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let eff = m.resolve_coupling(&q).unwrap();
        assert_eq!(eff[0][0], 0.1);
        assert_eq!(eff[0][3], 0.4);
        assert_eq!(eff[0][5], 0.6);
    }

    #[test]
    fn parallelogram_coupling_is_affine() {
        let cp = Coupling {
            offset: 0.0,
            terms: vec![(2, -1.0), (1, 1.0)],
        };
        let q = [0.0, 0.3, 0.1, 0.0, 0.0, 0.0];
        assert!((cp.evaluate(&q) - 0.2).abs() < 1e-15);
        let fixed = Coupling::fixed(0.7);
        assert_eq!(fixed.evaluate(&q), 0.7);
        assert_eq!(fixed.evaluate(&[1.0; 6]), 0.7);
    }

    #[test]
    fn coupling_to_missing_joint_is_rejected() {
        let row = DhRow::new(0.0, 0.0, 0.0, 0.0, JointRef::Fixed);
        let chain = Chain::new("arm", None, vec![row]).with_couplings(vec![Coupling::identity(3)]);
        let err = KinematicModel::new(
            "bad",
            vec![chain],
            1,
            vec![JointLimit::new(-1.0, 1.0)],
            Vector3::new(0.0, 0.0, -1.0),
        );
        assert!(matches!(err, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn gravity_must_be_unit() {
        let row = DhRow::new(0.0, 0.0, 0.0, 0.0, JointRef::Actuated(0));
        let err = KinematicModel::new(
            "bad",
            vec![Chain::new("arm", None, vec![row])],
            1,
            vec![JointLimit::new(-1.0, 1.0)],
            Vector3::new(0.0, 0.0, -2.0),
        );
        assert!(err.is_err());
    }

    #[test]
    fn shipped_model_shape() {
        let m = KinematicModel::mtm_default();
        assert_eq!(m.n_joints, 6);
        assert_eq!(m.chains[0].rows.len(), 6);
        assert!(m.limits.iter().all(|l| l.lo < l.hi));
        assert!((m.gravity_direction - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
    }
}
