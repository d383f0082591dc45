use nalgebra::{Matrix3, Vector3};

use super::hand::{angles_from_direction, palm_measures, v3};
use super::hull::hull_nearest;
use super::interval::{interval_value, interval_with_slope};
use super::limits::{default_limits, BiomechanicalLimits, HandLimits, ResolvedLimits};
use super::weights::{ObjectiveWeights, Term, TermBreakdown};
use crate::body_model::{
    geodesic_angle, CameraIntrinsics, FkAdjoint, FkFrame, ParamLayout, Precision, SkeletonModel, IDENTITY_6D, MIN_DEPTH,
};
use crate::dual::{Dual, V3};
use crate::error::{Error, Result};
use crate::keypoints::KeypointSequence;
use crate::par;

#[derive(Debug, Clone, Copy)]
struct Observation {
    joint: usize,
    hand: bool,
    target: [f64; 2],
    conf: f64,
}

#[derive(Debug, Clone)]
struct Bend {
    joint: usize,
    /// Rest direction of the driven bone.
    e: Vector3<f64>,
    /// Hinge axis crossed with `e`.
    w: Vector3<f64>,
}

/// Value, per-term breakdown and gradient over a packed parameter vector.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub total: f64,
    pub terms: TermBreakdown,
    pub gradient: Vec<f64>,
}

/// The full fitting energy over one sequence, evaluated on packed
/// parameters laid out by [`ParamLayout`].
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    model: &'a SkeletonModel,
    cam: CameraIntrinsics,
    layout: ParamLayout,
    weights: ObjectiveWeights,
    observations: Vec<Vec<Observation>>,
    limits: ResolvedLimits,
    bends: Vec<Bend>,
    smooth_rows: Vec<usize>,
    prior_rows: std::ops::Range<usize>,
}

impl<'a> Objective<'a> {
    /// `keypoints` must be fused and filled, one frame per motion frame.
    /// Without `limits` the defaults derived from the rest hand are used.
    pub fn new(
        model: &'a SkeletonModel,
        cam: &CameraIntrinsics,
        keypoints: Option<&KeypointSequence>,
        frames: usize,
        limits: Option<&BiomechanicalLimits>,
        weights: ObjectiveWeights,
    ) -> Result<Self> {
        cam.check()?;
        weights.check()?;
        if frames == 0 {
            return Err(Error::EmptySequence);
        }
        let observations = match keypoints {
            Some(kp) => observations(model, kp, frames)?,
            None => vec![Vec::new(); frames],
        };
        let limits = match limits {
            Some(l) => ResolvedLimits::resolve(model, l)?,
            None => ResolvedLimits::resolve(model, &default_limits(model))?,
        };
        let bends = model
            .subsets
            .bend
            .iter()
            .map(|b| {
                let child = model
                    .children(b.joint)
                    .next()
                    .ok_or_else(|| Error::DegenerateBone(format!("{} has no child", model.joints[b.joint].name)))?;
                let off = Vector3::from(model.joints[child].rest_offset);
                if off.norm() < 1e-12 {
                    return Err(Error::DegenerateBone(model.joints[child].name.clone()));
                }
                let e = off.normalize();
                let h = Vector3::from(b.axis);
                let h = h - e * h.dot(&e);
                if h.norm() < 1e-9 {
                    return Err(Error::InvalidModel(format!(
                        "bend axis of {} is parallel to its bone",
                        model.joints[b.joint].name
                    )));
                }
                Ok(Bend {
                    joint: b.joint,
                    e,
                    w: h.normalize().cross(&e),
                })
            })
            .collect::<Result<_>>()?;
        let smooth_rows = model
            .subsets
            .smooth_body
            .iter()
            .chain(&model.subsets.smooth_hand)
            .filter_map(|&j| model.slot(j))
            .collect();
        let prior_rows = 1..model.body_joint_count + 2 * model.hand_joint_count();
        Ok(Objective {
            model,
            cam: *cam,
            layout: ParamLayout::new(model, frames),
            weights,
            observations,
            limits,
            bends,
            smooth_rows,
            prior_rows,
        })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn weights(&self) -> &ObjectiveWeights {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: ObjectiveWeights) -> Result<()> {
        weights.check()?;
        self.weights = weights;
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x, true)?.total)
    }

    /// Value and gradient. With `shape_free == false` the shape entries of
    /// the gradient are zero.
    pub fn evaluate(&self, x: &[f64], shape_free: bool) -> Result<Evaluation> {
        let lay = self.layout;
        if x.len() != lay.len() {
            return Err(Error::ModelMismatch(format!(
                "parameter vector has length {}, expected {}",
                x.len(),
                lay.len()
            )));
        }
        let shape = &x[lay.shape_offset()..];
        let per_frame = par::map_range(lay.frames, |t| self.frame(x, shape, t));
        let mut terms = TermBreakdown::default();
        let mut gradient = vec![0.0; lay.len()];
        for (t, res) in per_frame.into_iter().enumerate() {
            let (ft, fg, sg) = res?;
            terms.accumulate(&ft);
            let o = lay.frame_offset(t);
            gradient[o..o + lay.frame_stride()].copy_from_slice(&fg);
            for (g, s) in gradient[lay.shape_offset()..].iter_mut().zip(&sg) {
                *g += s;
            }
        }
        terms.smooth += self.velocity(x, &mut gradient);
        let lb = self.weights.lambda_beta;
        if lb > 0.0 {
            let so = lay.shape_offset();
            for k in 0..lay.shape_dim {
                terms.shape_prior += lb * x[so + k] * x[so + k];
                gradient[so + k] += 2.0 * lb * x[so + k];
            }
        }
        if !shape_free {
            gradient[lay.shape_offset()..].fill(0.0);
        }
        Ok(Evaluation {
            total: terms.total(),
            terms,
            gradient,
        })
    }

    fn velocity(&self, x: &[f64], gradient: &mut [f64]) -> f64 {
        let lam = self.weights.lambda_smooth;
        if lam == 0.0 {
            return 0.0;
        }
        let lay = self.layout;
        let rows = self.model.body_joint_count + 2 * self.model.hand_joint_count();
        let mut total = 0.0;
        for t in 1..lay.frames {
            let (a, b) = (lay.row_offset(t - 1, 0), lay.row_offset(t, 0));
            for k in 0..rows * 6 {
                let d = x[b + k] - x[a + k];
                total += lam * d * d;
                gradient[b + k] += 2.0 * lam * d;
                gradient[a + k] -= 2.0 * lam * d;
            }
        }
        total
    }

    fn frame(&self, x: &[f64], shape: &[f64], t: usize) -> Result<(TermBreakdown, Vec<f64>, Vec<f64>)> {
        let lay = self.layout;
        let w = &self.weights;
        let model = self.model;
        let rows: Vec<[f64; 6]> = (0..lay.rows)
            .map(|r| {
                let o = lay.row_offset(t, r);
                std::array::from_fn(|k| x[o + k])
            })
            .collect();
        let to = lay.transl_offset(t);
        let transl = [x[to], x[to + 1], x[to + 2]];
        let fk = FkFrame::from_rows(model, &rows, transl, shape, true).map_err(|e| match e {
            Error::DegenerateRotation(m) => Error::DegenerateRotation(format!("frame {t}: {m}")),
            other => other,
        })?;
        let mut terms = TermBreakdown::default();
        let mut adj = FkAdjoint::zeros(model.joint_count());
        let mut row_grad = vec![[0.0; 6]; lay.rows];

        if w.lambda_j > 0.0 {
            terms.reprojection = self
                .reprojection(t, &fk, &mut adj)
                .map_err(|e| e.in_term(Term::Reprojection.name()))?;
        }
        if w.lambda_theta > 0.0 {
            terms.pose_prior = self.pose_prior(&rows, &mut row_grad);
        }
        if w.lambda_alpha > 0.0 {
            terms.bending = self.bending(&fk, &mut adj);
        }
        if w.lambda_smooth > 0.0 {
            for &r in &self.smooth_rows {
                for k in 0..6 {
                    let d = rows[r][k] - IDENTITY_6D[k];
                    terms.smooth += w.lambda_smooth * d * d;
                    row_grad[r][k] += 2.0 * w.lambda_smooth * d;
                }
            }
        }
        if w.lambda_angle > 0.0 {
            terms.angle = self.angle_limits(&fk, &mut adj);
        }
        for hand in &self.limits.hands {
            self.bio(hand, &fk, &mut adj, &mut terms);
        }

        let g = fk.backward(model, adj);
        let mut out = vec![0.0; lay.frame_stride()];
        for r in 0..lay.rows {
            for k in 0..6 {
                out[r * 6 + k] = g.rows[r][k] + row_grad[r][k];
            }
        }
        out[lay.rows * 6..].copy_from_slice(&g.transl);
        Ok((terms, out, g.shape))
    }

    fn reprojection(&self, t: usize, fk: &FkFrame, adj: &mut FkAdjoint) -> Result<f64> {
        let w = &self.weights;
        let mut total = 0.0;
        for ob in &self.observations[t] {
            let p = fk.positions[ob.joint];
            if !(p.z > MIN_DEPTH) {
                return Err(Error::BehindCamera {
                    frame: t,
                    joint: ob.joint,
                    depth: p.z,
                });
            }
            let uv = [
                self.cam.fx * p.x / p.z + self.cam.cx,
                self.cam.fy * p.y / p.z + self.cam.cy,
            ];
            let r = [uv[0] - ob.target[0], uv[1] - ob.target[1]];
            let e2 = r[0] * r[0] + r[1] * r[1];
            let (rho, drho) = match w.robust_sigma {
                Some(s) => {
                    let s2 = s * s;
                    let den = e2 + s2;
                    (e2 * s2 / den, s2 * s2 / (den * den))
                }
                None => (e2, 1.0),
            };
            let k = w.lambda_j * if ob.hand { w.w_hand } else { w.w_body } * ob.conf;
            total += k * rho;
            let gp = self
                .cam
                .project_adjoint(&p, [2.0 * k * drho * r[0], 2.0 * k * drho * r[1]]);
            adj.positions[ob.joint] += gp;
        }
        Ok(total)
    }

    fn pose_prior(&self, rows: &[[f64; 6]], row_grad: &mut [[f64; 6]]) -> f64 {
        let lam = self.weights.lambda_theta;
        let prior = &self.model.pose_prior;
        let d: Vec<f64> = rows[self.prior_rows.clone()]
            .iter()
            .flatten()
            .zip(&prior.mean)
            .map(|(x, m)| x - m)
            .collect();
        let mut g = vec![0.0; d.len()];
        let mut value = 0.0;
        match &prior.precision {
            Precision::Diagonal(p) => {
                for i in 0..d.len() {
                    value += p[i] * d[i] * d[i];
                    g[i] = 2.0 * p[i] * d[i];
                }
            }
            Precision::Full(p) => {
                for i in 0..d.len() {
                    for j in 0..d.len() {
                        value += d[i] * p[i][j] * d[j];
                        g[i] += (p[i][j] + p[j][i]) * d[j];
                    }
                }
            }
        }
        let first = self.prior_rows.start;
        for (i, gi) in g.into_iter().enumerate() {
            row_grad[first + i / 6][i % 6] += lam * gi;
        }
        lam * value
    }

    fn bending(&self, fk: &FkFrame, adj: &mut FkAdjoint) -> f64 {
        let lam = self.weights.lambda_alpha;
        let s = self.weights.bend_gain;
        let mut total = 0.0;
        for b in &self.bends {
            let d = fk.local[b.joint] * b.e;
            let (a, c) = (d.dot(&b.w), d.dot(&b.e));
            let kappa = a.atan2(c);
            let v = (s * kappa).exp();
            total += lam * v;
            // d(kappa)/dd = (c w - a e) / (a^2 + c^2), and d = R e.
            let gd = (b.w * c - b.e * a) * (lam * s * v / (a * a + c * c));
            adj.local[b.joint] += gd * b.e.transpose();
        }
        total
    }

    fn angle_limits(&self, fk: &FkFrame, adj: &mut FkAdjoint) -> f64 {
        let lam = self.weights.lambda_angle;
        let mut total = 0.0;
        for (j, iv) in &self.limits.pose_angles {
            let phi = geodesic_angle(&fk.local[*j]);
            let (v, slope) = interval_with_slope(phi, iv.min, iv.max);
            total += lam * v;
            if slope != 0.0 {
                let dphi = -0.5 / phi.sin().max(1e-12);
                adj.local[*j] += Matrix3::identity() * (lam * slope * dphi);
            }
        }
        total
    }

    fn bio(&self, hand: &HandLimits, fk: &FkFrame, adj: &mut FkAdjoint, terms: &mut TermBreakdown) {
        let w = &self.weights;
        if w.lambda_bl > 0.0 {
            for (j, iv) in &hand.bones {
                let o = fk.offsets[*j];
                let len = o.norm();
                let (v, slope) = interval_with_slope(len, iv.min, iv.max);
                terms.bone_length += w.lambda_bl * v;
                if slope != 0.0 && len > 0.0 {
                    adj.offsets[*j] += o * (w.lambda_bl * slope / len);
                }
            }
        }
        if w.lambda_palm > 0.0 {
            let points: Vec<usize> = std::iter::once(hand.wrist).chain(hand.roots.iter().copied()).collect();
            let (curv, dist) = palm_measures::<f64>(
                v3(&fk.positions[hand.wrist]),
                &hand.roots.iter().map(|&r| v3(&fk.positions[r])).collect::<Vec<_>>(),
            );
            let value: f64 = curv
                .iter()
                .zip(&hand.curvature)
                .chain(dist.iter().zip(&hand.angular_distance))
                .map(|(&x, iv)| interval_value(x, iv.min, iv.max))
                .sum();
            terms.palm += w.lambda_palm * value;
            if value > 0.0 {
                for (k, &pj) in points.iter().enumerate() {
                    let pts: Vec<V3<Dual<3>>> = points
                        .iter()
                        .enumerate()
                        .map(|(i, &j)| {
                            let p = v3(&fk.positions[j]);
                            if i == k {
                                Dual::vars(p)
                            } else {
                                p.map(Dual::constant)
                            }
                        })
                        .collect();
                    let (c, d) = palm_measures(pts[0], &pts[1..]);
                    let mut acc = Dual::<3>::constant(0.0);
                    for (x, iv) in c
                        .iter()
                        .zip(&hand.curvature)
                        .chain(d.iter().zip(&hand.angular_distance))
                    {
                        acc = acc + interval_value(*x, iv.min, iv.max);
                    }
                    adj.positions[pj] += Vector3::from(acc.d) * w.lambda_palm;
                }
            }
        }
        if w.lambda_ja > 0.0 {
            for (f, hull) in &hand.fingers {
                let d = fk.local[f.joint] * fk.offsets[f.child];
                let [af, aa] = angles_from_direction(Dual::vars(v3(&d)), &f.axes);
                let p = [af.v, aa.v];
                let (dist, q) = hull_nearest(hull, p);
                terms.joint_angle += w.lambda_ja * dist * dist;
                if dist > 0.0 {
                    let gp = [2.0 * (p[0] - q[0]), 2.0 * (p[1] - q[1])];
                    let gd = Vector3::from(std::array::from_fn::<f64, 3, _>(|i| gp[0] * af.d[i] + gp[1] * aa.d[i]))
                        * w.lambda_ja;
                    adj.local[f.joint] += gd * fk.offsets[f.child].transpose();
                    adj.offsets[f.child] += fk.local[f.joint].transpose() * gd;
                }
            }
        }
    }
}

fn observations(model: &SkeletonModel, kp: &KeypointSequence, frames: usize) -> Result<Vec<Vec<Observation>>> {
    if kp.len() != frames {
        return Err(Error::Layout(format!(
            "keypoint sequence has {} frames, motion has {frames}",
            kp.len()
        )));
    }
    let resolved = kp.layout.resolve(model)?;
    Ok(kp
        .frames
        .iter()
        .map(|f| {
            resolved
                .mapped()
                .filter_map(|(g, s, joint)| {
                    let k = f.group(g).get(s)?;
                    (k.conf > 0.0).then_some(Observation {
                        joint,
                        hand: g.is_hand(),
                        target: [k.u, k.v],
                        conf: k.conf,
                    })
                })
                .collect()
        })
        .collect())
}
