//! Synthetic 12-channel recordings of the four interaction classes.
//!
//! Contact forces are placed on the nodes of a randomly oriented structure,
//! pushed through the static load map, and read out per node as the
//! compression of that node's bar after the force divider. Each recording
//! draws sensor noise and orientation from two independent streams derived
//! from `(rng_seed, recording index)`, so generation order and threading do
//! not affect the output.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calibration::{fsr_measure, NodeCalibration};
use crate::dataset::{ForceFrame, InteractionClass, Recording, NOMINAL_SAMPLE_RATE_HZ};
use crate::error::{PhriError, Result};
use crate::par;
use crate::rng::{derive_seed, stream};
use crate::statics::{
    build_icosahedron_topology_with_diameter, solve_force_densities, LoadMap, NodePositions,
    DEFAULT_DIAMETER_M, NODE_COUNT,
};

pub const GRAVITY: f64 = 9.81;

/// Reference observation counts (null, drop, squeeze, handle) at a 60-sample window.
pub const TABLE1_COUNTS: [usize; 4] = [3930, 2643, 4648, 539];

const NOISE_STREAM: u64 = 0;
const ORIENTATION_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassDurations {
    pub null: f64,
    pub drop: f64,
    pub squeeze: f64,
    pub handle: f64,
}

impl ClassDurations {
    pub fn get(&self, class: InteractionClass) -> f64 {
        match class {
            InteractionClass::Null => self.null,
            InteractionClass::Drop => self.drop,
            InteractionClass::Squeeze => self.squeeze,
            InteractionClass::Handle => self.handle,
        }
    }
}

impl Default for ClassDurations {
    fn default() -> Self {
        Self {
            null: 2.0,
            drop: 2.0,
            squeeze: 2.5,
            handle: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub sample_rate_hz: f64,
    /// Recording length per class, s.
    pub durations: ClassDurations,
    /// Standard deviation of additive sensor noise, in FSR-reading Newtons.
    pub noise_std_n: f64,
    /// Equilibrium bar compression, N.
    pub preload_n: f64,
    pub rng_seed: u64,
    /// Round readings to 0.01 N.
    pub quantize: bool,
    pub calibration: NodeCalibration,
    pub diameter_m: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: NOMINAL_SAMPLE_RATE_HZ,
            durations: ClassDurations::default(),
            noise_std_n: 0.05,
            preload_n: 20.0,
            rng_seed: 0,
            quantize: false,
            calibration: NodeCalibration::PROTOTYPE,
            diameter_m: DEFAULT_DIAMETER_M,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(PhriError::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("sample_rate_hz", self.sample_rate_hz)?;
        positive("preload_n", self.preload_n)?;
        positive("diameter_m", self.diameter_m)?;
        for c in InteractionClass::ALL {
            positive(&format!("duration for {c}"), self.durations.get(c))?;
        }
        if !(self.noise_std_n >= 0.0 && self.noise_std_n < self.preload_n / 10.0) {
            return Err(PhriError::InvalidConfig(format!(
                "noise_std_n must lie in [0, preload_n / 10), got {}",
                self.noise_std_n
            )));
        }
        NodeCalibration::new(self.calibration.k1, self.calibration.k2)?;
        Ok(())
    }

    fn frame_count(&self, class: InteractionClass) -> usize {
        (self.durations.get(class) * self.sample_rate_hz).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropTemplate {
    /// Release height, m. Sets the free-fall delay `sqrt(2 h / g)`.
    pub height_m: f64,
    /// Peak ground-reaction force of the first impact, N.
    pub impact_amplitude_n: f64,
    /// Duration of each impact pulse, s.
    pub impact_width_s: f64,
    pub rebound_count: u32,
    /// Velocity ratio between successive bounces.
    pub restitution: f64,
    /// Structural ringing after each impact, as a fraction of its peak.
    pub ring_ratio: f64,
    pub ring_freq_hz: f64,
    pub ring_decay_s: f64,
}

impl DropTemplate {
    pub fn free_fall_s(&self) -> f64 {
        (2.0 * self.height_m / GRAVITY).sqrt()
    }

    /// Impact times and peak amplitudes, first impact first.
    pub fn impacts(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(self.free_fall_s(), self.impact_amplitude_n)];
        if self.impact_amplitude_n <= 0.0 {
            return out;
        }
        let v0 = GRAVITY * self.free_fall_s();
        let (mut t, mut amp, mut v) = (self.free_fall_s(), self.impact_amplitude_n, v0);
        for _ in 0..self.rebound_count {
            v *= self.restitution;
            amp *= self.restitution;
            t += 2.0 * v / GRAVITY;
            out.push((t, amp));
        }
        out
    }
}

impl Default for DropTemplate {
    fn default() -> Self {
        Self {
            height_m: 1.0,
            impact_amplitude_n: 150.0,
            impact_width_s: 0.05,
            rebound_count: 3,
            restitution: 0.55,
            ring_ratio: 0.3,
            ring_freq_hz: 7.0,
            ring_decay_s: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezeTemplate {
    pub ramp_s: f64,
    pub hold_force_n: f64,
    pub hold_s: f64,
}

impl SqueezeTemplate {
    /// Trapezoidal ramp-hold-release envelope in `[0, 1]`.
    pub fn envelope(&self, t: f64) -> f64 {
        let (r, h) = (self.ramp_s, self.hold_s);
        if t < 0.0 || t >= 2.0 * r + h {
            0.0
        } else if t < r {
            t / r
        } else if t < r + h {
            1.0
        } else {
            (2.0 * r + h - t) / r
        }
    }
}

impl Default for SqueezeTemplate {
    fn default() -> Self {
        Self {
            ramp_s: 0.5,
            hold_force_n: 60.0,
            hold_s: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandleTemplate {
    pub rotation_period_s: f64,
    pub grip_force_n: f64,
    /// Relative depth of grip pressure changes while turning.
    pub grip_modulation: f64,
    pub grip_pulses_per_rotation: u32,
    /// Sharpness of the contact patch: weight `max(0, cos θ)^p`.
    pub contact_exponent: f64,
}

impl Default for HandleTemplate {
    fn default() -> Self {
        Self {
            rotation_period_s: 3.0,
            grip_force_n: 35.0,
            grip_modulation: 0.3,
            grip_pulses_per_rotation: 4,
            contact_exponent: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassTemplates {
    pub drop: DropTemplate,
    pub squeeze: SqueezeTemplate,
    pub handle: HandleTemplate,
}

impl ClassTemplates {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(PhriError::InvalidConfig(format!("invalid template: {what}")))
            }
        };
        let d = &self.drop;
        check(d.height_m > 0.0, "drop height")?;
        check(d.impact_amplitude_n >= 0.0, "impact amplitude")?;
        check(d.impact_width_s > 0.0, "impact width")?;
        check((0.0..1.0).contains(&d.restitution), "restitution")?;
        check(d.ring_ratio >= 0.0 && d.ring_decay_s > 0.0, "ringing")?;
        let s = &self.squeeze;
        check(s.ramp_s > 0.0 && s.hold_s >= 0.0 && s.hold_force_n >= 0.0, "squeeze envelope")?;
        let h = &self.handle;
        check(h.rotation_period_s > 0.0 && h.grip_force_n >= 0.0, "handle rotation")?;
        check((0.0..=1.0).contains(&h.grip_modulation), "grip modulation")?;
        check(h.contact_exponent > 0.0, "contact exponent")
    }
}

/// Recordings requested per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts(pub [usize; 4]);

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Splits `total` in proportion to `weights` by largest remainder; ties
    /// on the remainder go to the lower class index.
    pub fn proportional(total: usize, weights: [usize; 4]) -> Self {
        let sum: usize = weights.iter().sum();
        if sum == 0 {
            return ClassCounts([0; 4]);
        }
        let mut counts = [0usize; 4];
        let mut rems = [(0usize, 0usize); 4];
        for c in 0..4 {
            let num = total * weights[c];
            counts[c] = num / sum;
            rems[c] = (num % sum, c);
        }
        let short = total - counts.iter().sum::<usize>();
        rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, c) in rems.iter().take(short) {
            counts[c] += 1;
        }
        ClassCounts(counts)
    }

    pub fn table1(total: usize) -> Self {
        Self::proportional(total, TABLE1_COUNTS)
    }
}

/// Prestressed structure plus the per-node readout used by every generator.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    cfg: SynthConfig,
    templates: ClassTemplates,
    positions: NodePositions,
    load_map: LoadMap,
    bar_of_node: [usize; NODE_COUNT],
    bar_partner: [usize; NODE_COUNT],
    /// Equilibrium compression of each node's bar, N.
    baseline: [f64; NODE_COUNT],
}

type NodalLoad = [[f64; 3]; NODE_COUNT];

impl Synthesizer {
    pub fn new(cfg: SynthConfig, templates: ClassTemplates) -> Result<Self> {
        cfg.validate()?;
        templates.validate()?;
        let (graph, positions) = build_icosahedron_topology_with_diameter(cfg.diameter_m);
        let eq = solve_force_densities(&graph, &positions, cfg.preload_n)?;
        let axial = eq.axial_forces(&graph);
        let bar_of_node = graph.bar_of_node();
        let baseline = std::array::from_fn(|n| -axial[bar_of_node[n]]);
        let bar_partner = std::array::from_fn(|n| {
            let m = graph.members[bar_of_node[n]];
            if m.a == n { m.b } else { m.a }
        });
        Ok(Self {
            cfg,
            templates,
            load_map: LoadMap::new(&graph, &positions),
            positions,
            bar_of_node,
            bar_partner,
            baseline,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    pub fn templates(&self) -> &ClassTemplates {
        &self.templates
    }

    /// Noise-free FSR reading of every node at rest.
    pub fn equilibrium_reading(&self) -> [f64; NODE_COUNT] {
        self.baseline
            .map(|c| fsr_measure(c.max(0.0), &self.cfg.calibration).expect("non-negative"))
    }

    /// Change in node-sensor load (N, positive = more compression) caused by
    /// an external nodal load.
    pub fn sensor_response(&self, load: &NodalLoad) -> [f64; NODE_COUNT] {
        let delta = self.load_map.apply(load);
        std::array::from_fn(|n| -delta[self.bar_of_node[n]])
    }

    /// Sensor response to an impact: the static redistribution plus the
    /// part of each nodal force pushing the floating node straight along its
    /// rod into the FSR.
    pub fn impact_response(&self, load: &NodalLoad) -> [f64; NODE_COUNT] {
        let spread = self.sensor_response(load);
        std::array::from_fn(|n| {
            let f = Vector3::from(load[n]);
            let axial = f.dot(&self.rod_direction(n)).max(0.0);
            spread[n] + axial
        })
    }

    /// Unit vector from a node toward the other end of its bar.
    fn rod_direction(&self, n: usize) -> Vector3<f64> {
        let partner = self.bar_partner[n];
        (self.positions.point(partner) - self.positions.point(n)).normalize()
    }

    fn unit_node(&self, n: usize) -> Vector3<f64> {
        self.positions.point(n).normalize()
    }

    /// Seed of the orientation stream for a recording index.
    pub fn orientation_seed(&self, index: u64) -> u64 {
        derive_seed(self.cfg.rng_seed, &[index, ORIENTATION_STREAM])
    }

    /// Uniformly random direction in the body frame: the world vertical seen
    /// through a random starting orientation.
    fn random_direction(&self, index: u64) -> Vector3<f64> {
        let mut rng = stream(self.cfg.rng_seed, &[index, ORIENTATION_STREAM]);
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let rot = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
        rot.inverse_transform_vector(&-Vector3::z())
    }

    fn random_axis_and_phase(&self, index: u64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>, f64) {
        let axis = self.random_direction(index);
        let mut rng = stream(self.cfg.rng_seed, &[index, ORIENTATION_STREAM, 1]);
        let phase = rng.random_range(0.0..2.0 * PI);
        let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let u = axis.cross(&helper).normalize();
        let v = axis.cross(&u);
        (axis, u, v, phase)
    }

    /// Assembles a recording from per-frame sensor loads (actual Newtons):
    /// force divider, noise, clamping and optional quantization.
    fn emit(
        &self,
        class: InteractionClass,
        index: u64,
        load_at: impl Fn(usize, f64) -> [f64; NODE_COUNT],
        extra_meta: &[(&str, String)],
    ) -> Recording {
        let n = self.cfg.frame_count(class);
        let rate = self.cfg.sample_rate_hz;
        let mut noise_rng = stream(self.cfg.rng_seed, &[index, NOISE_STREAM]);
        let noise = Normal::new(0.0, self.cfg.noise_std_n).expect("validated noise level");
        let cal = self.cfg.calibration;
        let frames = (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                let load = load_at(i, t);
                let f = std::array::from_fn(|s| {
                    let meas = fsr_measure(load[s].max(0.0), &cal).expect("clamped");
                    let mut v = (meas + noise.sample(&mut noise_rng)).max(0.0);
                    if self.cfg.quantize {
                        v = (v * 100.0).round() / 100.0;
                    }
                    v
                });
                ForceFrame { t, f }
            })
            .collect();
        let mut meta = BTreeMap::new();
        meta.insert("source".to_string(), "synthetic".to_string());
        meta.insert("index".to_string(), index.to_string());
        meta.insert("orientation_seed".to_string(), self.orientation_seed(index).to_string());
        for (k, v) in extra_meta {
            meta.insert((*k).to_string(), v.clone());
        }
        Recording {
            id: recording_id(index as usize, class),
            frames,
            sample_rate_hz: rate,
            label: Some(class),
            meta,
        }
    }

    pub fn null(&self, index: u64) -> Recording {
        self.emit(InteractionClass::Null, index, |_, _| self.baseline, &[])
    }

    /// Contact nodes for a ground contact along `down`, with weights summing
    /// to one. Up to three nodes within a small height band of the lowest.
    pub fn contact_nodes(&self, down: &Vector3<f64>) -> Vec<(usize, f64)> {
        let radius = self.cfg.diameter_m / 2.0;
        let band = 0.15 * radius;
        let mut heights: Vec<(usize, f64)> = (0..NODE_COUNT)
            .map(|n| (n, self.positions.point(n).dot(down)))
            .collect();
        heights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let lowest = heights[0].1;
        let mut nodes: Vec<(usize, f64)> = heights
            .into_iter()
            .take(3)
            .filter(|(_, h)| lowest - h <= band)
            .map(|(n, h)| (n, 1.0 - (lowest - h) / band + 1e-3))
            .collect();
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        nodes.iter_mut().for_each(|(_, w)| *w /= total);
        nodes
    }

    pub fn drop(&self, index: u64) -> Recording {
        let tmpl = self.templates.drop;
        let down = self.random_direction(index);
        let contacts = self.contact_nodes(&down);
        let mut load: NodalLoad = [[0.0; 3]; NODE_COUNT];
        for &(n, w) in &contacts {
            for k in 0..3 {
                load[n][k] = -w * down[k];
            }
        }
        let unit = self.impact_response(&load);
        let impacts = tmpl.impacts();
        let landed_at = impacts.last().map_or(0.0, |i| i.0);
        let airborne = |t: f64| {
            if t < impacts[0].0 {
                return true;
            }
            impacts.windows(2).any(|w| t >= w[0].0 + tmpl.impact_width_s && t < w[1].0)
        };
        let scale = |t: f64| -> f64 {
            impacts
                .iter()
                .filter(|(ti, _)| t >= *ti)
                .map(|&(ti, amp)| {
                    let dt = t - ti;
                    let pulse = if dt < tmpl.impact_width_s {
                        (PI * dt / tmpl.impact_width_s).sin()
                    } else {
                        0.0
                    };
                    let ring = tmpl.ring_ratio
                        * (-dt / tmpl.ring_decay_s).exp()
                        * (2.0 * PI * tmpl.ring_freq_hz * dt).sin();
                    amp * (pulse + ring)
                })
                .sum()
        };
        let contact_list = contacts
            .iter()
            .map(|(n, _)| n.to_string())
            .collect::<Vec<_>>()
            .join(";");
        self.emit(
            InteractionClass::Drop,
            index,
            |_, t| {
                if airborne(t) {
                    return [0.0; NODE_COUNT];
                }
                let s = scale(t);
                std::array::from_fn(|n| self.baseline[n] + s * unit[n])
            },
            &[
                ("contact_nodes", contact_list),
                ("landed_at_s", format!("{landed_at:.6}")),
            ],
        )
    }

    /// Antipodal node pair touched by two plates pressing along `axis`.
    pub fn squeeze_pair(&self, axis: &Vector3<f64>) -> (usize, usize) {
        let top = (0..NODE_COUNT)
            .max_by(|&a, &b| {
                let (da, db) = (self.positions.point(a).dot(axis), self.positions.point(b).dot(axis));
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("nodes");
        let target = -self.positions.point(top);
        let bottom = (0..NODE_COUNT)
            .min_by(|&a, &b| {
                (self.positions.point(a) - target)
                    .norm()
                    .total_cmp(&(self.positions.point(b) - target).norm())
            })
            .expect("nodes");
        (top, bottom)
    }

    /// Sensor response to a unit squeeze on the pair.
    pub fn squeeze_response(&self, pair: (usize, usize)) -> [f64; NODE_COUNT] {
        let dir = self.unit_node(pair.0);
        let mut load: NodalLoad = [[0.0; 3]; NODE_COUNT];
        for k in 0..3 {
            load[pair.0][k] = -dir[k];
            load[pair.1][k] = dir[k];
        }
        self.sensor_response(&load)
    }

    pub fn squeeze(&self, index: u64) -> Recording {
        let tmpl = self.templates.squeeze;
        let axis = self.random_direction(index);
        let pair = self.squeeze_pair(&axis);
        let unit = self.squeeze_response(pair);
        self.emit(
            InteractionClass::Squeeze,
            index,
            |_, t| {
                let s = tmpl.hold_force_n * tmpl.envelope(t);
                std::array::from_fn(|n| self.baseline[n] + s * unit[n])
            },
            &[("squeeze_nodes", format!("{};{}", pair.0, pair.1))],
        )
    }

    /// Grip load at time `t` for a rotation about `axis` (in-plane basis `u`, `v`).
    fn grip_load(&self, t: f64, u: &Vector3<f64>, v: &Vector3<f64>, phase: f64) -> NodalLoad {
        let tmpl = &self.templates.handle;
        let theta = 2.0 * PI * t / tmpl.rotation_period_s + phase;
        let d = u * theta.cos() + v * theta.sin();
        let pulses = f64::from(tmpl.grip_pulses_per_rotation);
        let grip = tmpl.grip_force_n
            * (1.0 + tmpl.grip_modulation * (pulses * 2.0 * PI * t / tmpl.rotation_period_s).sin());
        let mut load: NodalLoad = [[0.0; 3]; NODE_COUNT];
        // One hand on each side; the node set is centrally symmetric, so the
        // two patches balance.
        for hand in [1.0, -1.0] {
            let weights: Vec<f64> = (0..NODE_COUNT)
                .map(|n| (hand * self.unit_node(n).dot(&d)).max(0.0).powf(tmpl.contact_exponent))
                .collect();
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                continue;
            }
            for (n, w) in weights.iter().enumerate() {
                let inward = -self.unit_node(n);
                for k in 0..3 {
                    load[n][k] += grip * w / total * inward[k];
                }
            }
        }
        load
    }

    pub fn handle(&self, index: u64) -> Recording {
        let (axis, u, v, phase) = self.random_axis_and_phase(index);
        self.emit(
            InteractionClass::Handle,
            index,
            |_, t| {
                let delta = self.sensor_response(&self.grip_load(t, &u, &v, phase));
                std::array::from_fn(|n| self.baseline[n] + delta[n])
            },
            &[(
                "rotation_axis",
                format!("{:.6};{:.6};{:.6}", axis.x, axis.y, axis.z),
            )],
        )
    }

    pub fn generate(&self, class: InteractionClass, index: u64) -> Recording {
        match class {
            InteractionClass::Null => self.null(index),
            InteractionClass::Drop => self.drop(index),
            InteractionClass::Squeeze => self.squeeze(index),
            InteractionClass::Handle => self.handle(index),
        }
    }

    /// `counts[c]` recordings of each class, class by class; recording `i`
    /// in the output uses stream index `i`.
    pub fn dataset(&self, counts: &ClassCounts) -> Vec<Recording> {
        let plan: Vec<InteractionClass> = InteractionClass::ALL
            .iter()
            .flat_map(|&c| std::iter::repeat_n(c, counts.0[c.index()]))
            .collect();
        par::map_range(plan.len(), |i| self.generate(plan[i], i as u64))
    }
}

pub fn recording_id(index: usize, class: InteractionClass) -> String {
    format!("rec_{index:05}_{class}")
}

pub fn synth_null(cfg: &SynthConfig) -> Result<Recording> {
    Ok(Synthesizer::new(*cfg, ClassTemplates::default())?.null(0))
}

pub fn synth_drop(cfg: &SynthConfig, tmpl: &DropTemplate) -> Result<Recording> {
    let templates = ClassTemplates {
        drop: *tmpl,
        ..Default::default()
    };
    Ok(Synthesizer::new(*cfg, templates)?.drop(0))
}

pub fn synth_squeeze(cfg: &SynthConfig, tmpl: &SqueezeTemplate) -> Result<Recording> {
    let templates = ClassTemplates {
        squeeze: *tmpl,
        ..Default::default()
    };
    Ok(Synthesizer::new(*cfg, templates)?.squeeze(0))
}

pub fn synth_handle(cfg: &SynthConfig, tmpl: &HandleTemplate) -> Result<Recording> {
    let templates = ClassTemplates {
        handle: *tmpl,
        ..Default::default()
    };
    Ok(Synthesizer::new(*cfg, templates)?.handle(0))
}

pub fn synth_dataset(
    cfg: &SynthConfig,
    templates: &ClassTemplates,
    counts: &ClassCounts,
) -> Result<Vec<Recording>> {
    Ok(Synthesizer::new(*cfg, *templates)?.dataset(counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::fsr_calibrate;
    use crate::dataset::{validate_recording, SENSOR_COUNT};
    use crate::features::{max_force, max_yank, total_impulse};

    fn quiet() -> SynthConfig {
        SynthConfig {
            noise_std_n: 0.0,
            ..Default::default()
        }
    }

    fn channels(rec: &Recording) -> Vec<Vec<f64>> {
        (0..SENSOR_COUNT).map(|s| rec.channel(s)).collect()
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig::default().validate().is_ok());
        let noisy = SynthConfig {
            noise_std_n: 2.0,
            ..Default::default()
        };
        assert!(noisy.validate().is_err());
        let bad_rate = SynthConfig {
            sample_rate_hz: 0.0,
            ..Default::default()
        };
        assert!(bad_rate.validate().is_err());
    }

    #[test]
    fn null_without_noise_is_constant_equilibrium() {
        let synth = Synthesizer::new(quiet(), ClassTemplates::default()).unwrap();
        let eq = synth.equilibrium_reading();
        let rec = synth.null(0);
        assert_eq!(rec.label, Some(InteractionClass::Null));
        for fr in &rec.frames {
            assert_eq!(fr.f, eq);
        }
        // Bars carry the full preload; the FSR sees the divided share.
        let expected = fsr_measure(20.0, &NodeCalibration::PROTOTYPE).unwrap();
        assert!(eq.iter().all(|v| (v - expected).abs() < 1e-9));
    }

    #[test]
    fn null_channel_means_within_standard_error() {
        let cfg = SynthConfig {
            rng_seed: 11,
            ..Default::default()
        };
        let synth = Synthesizer::new(cfg, ClassTemplates::default()).unwrap();
        let eq = synth.equilibrium_reading();
        let rec = synth.null(3);
        let n = rec.len() as f64;
        for (s, ch) in channels(&rec).iter().enumerate() {
            let mean = ch.iter().sum::<f64>() / n;
            assert!((mean - eq[s]).abs() <= 3.0 * cfg.noise_std_n / n.sqrt(), "sensor {s}");
        }
    }

    #[test]
    fn generators_are_deterministic_and_valid() {
        let cfg = SynthConfig {
            rng_seed: 5,
            ..Default::default()
        };
        let a = synth_dataset(&cfg, &ClassTemplates::default(), &ClassCounts([2, 2, 2, 2])).unwrap();
        let b = synth_dataset(&cfg, &ClassTemplates::default(), &ClassCounts([2, 2, 2, 2])).unwrap();
        assert_eq!(a, b);
        for rec in &a {
            assert!(validate_recording(rec).is_empty(), "{}", rec.id);
            assert!(rec.frames.iter().all(|f| f.f.iter().all(|&v| v >= 0.0)));
        }
        let other = SynthConfig {
            rng_seed: 6,
            ..cfg
        };
        let c = synth_dataset(&other, &ClassTemplates::default(), &ClassCounts([2, 2, 2, 2])).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn free_fall_delay() {
        let t = DropTemplate::default().free_fall_s();
        assert!((t - (2.0f64 / 9.81).sqrt()).abs() < 1e-15);
        assert!((t - 0.452).abs() < 5e-4);
    }

    #[test]
    fn drop_is_unloaded_in_free_fall_and_spikes_at_impact() {
        let rec = synth_drop(&quiet(), &DropTemplate::default()).unwrap();
        let ff = DropTemplate::default().free_fall_s();
        for fr in rec.frames.iter().filter(|f| f.t < ff) {
            assert!(fr.f.iter().all(|&v| v == 0.0));
        }
        let peak = rec
            .frames
            .iter()
            .map(|f| f.f.iter().copied().fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let eq = fsr_measure(20.0, &NodeCalibration::PROTOTYPE).unwrap();
        assert!(peak > 2.0 * eq, "peak {peak}");
    }

    #[test]
    fn drop_impact_is_concentrated_near_the_contact() {
        let synth = Synthesizer::new(quiet(), ClassTemplates::default()).unwrap();
        for index in 0..20 {
            let down = synth.random_direction(index);
            let contacts = synth.contact_nodes(&down);
            assert!((1..=3).contains(&contacts.len()));
            let mut load: NodalLoad = [[0.0; 3]; NODE_COUNT];
            for &(n, w) in &contacts {
                for k in 0..3 {
                    load[n][k] = -w * down[k];
                }
            }
            let resp = synth.impact_response(&load);
            let strongest = (0..NODE_COUNT)
                .max_by(|&a, &b| resp[a].total_cmp(&resp[b]))
                .unwrap();
            assert!(
                contacts.iter().any(|&(n, _)| n == strongest),
                "index {index}: {resp:?} contacts {contacts:?}"
            );
        }
    }

    #[test]
    fn drop_yank_dominates_null_yank() {
        let cfg = SynthConfig {
            rng_seed: 21,
            ..Default::default()
        };
        let synth = Synthesizer::new(cfg, ClassTemplates::default()).unwrap();
        let dt = 1.0 / cfg.sample_rate_hz;
        let null_max = (0..5)
            .flat_map(|i| channels(&synth.null(i)))
            .map(|ch| max_yank(&ch, dt).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        for i in 0..5 {
            let drop_max = channels(&synth.drop(100 + i))
                .iter()
                .map(|ch| max_yank(ch, dt).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(drop_max >= 10.0 * null_max, "{drop_max} vs {null_max}");
        }
    }

    #[test]
    fn zero_amplitude_drop_is_free_fall_then_rest() {
        let tmpl = DropTemplate {
            impact_amplitude_n: 0.0,
            ..Default::default()
        };
        let cfg = SynthConfig {
            rng_seed: 4,
            ..Default::default()
        };
        let rec = synth_drop(&cfg, &tmpl).unwrap();
        let null = synth_null(&cfg).unwrap();
        let ff = tmpl.free_fall_s();
        // After landing the noise stream is the same one the null recording uses.
        for (d, n) in rec.frames.iter().zip(&null.frames) {
            if d.t >= ff {
                assert_eq!(d.f, n.f);
            } else {
                assert!(d.f.iter().all(|&v| v <= 5.0 * cfg.noise_std_n));
            }
        }
    }

    #[test]
    fn squeeze_hold_matches_statics_map() {
        let synth = Synthesizer::new(quiet(), ClassTemplates::default()).unwrap();
        let rec = synth.squeeze(0);
        let pair = synth.squeeze_pair(&synth.random_direction(0));
        let unit = synth.squeeze_response(pair);
        let tmpl = SqueezeTemplate::default();
        let cal = NodeCalibration::PROTOTYPE;
        let mid = rec
            .frames
            .iter()
            .find(|f| f.t >= tmpl.ramp_s + tmpl.hold_s / 2.0)
            .unwrap();
        for n in [pair.0, pair.1] {
            let expected = fsr_measure(20.0 + tmpl.hold_force_n * unit[n], &cal).unwrap();
            assert!((mid.f[n] - expected).abs() < 1e-12);
            // The touched nodes' bars take the largest load increase.
            assert!(unit[n] >= unit.iter().copied().fold(f64::MIN, f64::max) - 1e-12);
        }
    }

    #[test]
    fn squeeze_without_hold_is_triangular() {
        let tmpl = SqueezeTemplate {
            hold_s: 0.0,
            ..Default::default()
        };
        assert_eq!(tmpl.envelope(0.25), 0.5);
        assert!(tmpl.envelope(0.5 - 1e-12) > 0.99);
        assert!((tmpl.envelope(0.75) - 0.5).abs() < 1e-12);
        assert_eq!(tmpl.envelope(1.0), 0.0);
    }

    #[test]
    fn squeeze_impulse_grows_linearly_with_hold_time() {
        // Oracle: the envelope integral is H * (ramp + hold), so the excess
        // impulse on a dominant channel, divided by its unit response, has
        // slope H in the hold time.
        let cal = NodeCalibration::PROTOTYPE;
        let cfg = SynthConfig {
            durations: ClassDurations {
                squeeze: 5.0,
                ..Default::default()
            },
            ..quiet()
        };
        let excess = |hold: f64| {
            let tmpl = SqueezeTemplate {
                hold_s: hold,
                ..Default::default()
            };
            let synth = Synthesizer::new(
                cfg,
                ClassTemplates {
                    squeeze: tmpl,
                    ..Default::default()
                },
            )
            .unwrap();
            let pair = synth.squeeze_pair(&synth.random_direction(0));
            let unit = synth.squeeze_response(pair)[pair.0];
            let rec = synth.squeeze(0);
            let ch: Vec<f64> = rec
                .channel(pair.0)
                .iter()
                .map(|&v| fsr_calibrate(v, &cal).unwrap() - 20.0)
                .collect();
            total_impulse(&ch, 1.0 / 60.0).unwrap() / unit
        };
        let (h1, h2) = (0.5, 2.5);
        let slope = (excess(h2) - excess(h1)) / (h2 - h1);
        let hold = SqueezeTemplate::default().hold_force_n;
        assert!((slope - hold).abs() <= 0.02 * hold, "slope {slope}");
    }

    #[test]
    fn handle_cycles_once_per_rotation() {
        let tmpl = HandleTemplate::default();
        let cfg = SynthConfig {
            durations: ClassDurations {
                handle: 2.0 * tmpl.rotation_period_s,
                ..Default::default()
            },
            ..quiet()
        };
        let rec = synth_handle(&cfg, &tmpl).unwrap();
        let period = (tmpl.rotation_period_s * 60.0).round() as usize;
        for i in 0..period {
            for s in 0..SENSOR_COUNT {
                assert!((rec.frames[i].f[s] - rec.frames[i + period].f[s]).abs() < 1e-9);
            }
        }
        // Every channel takes a turn being loaded above rest.
        let eq = fsr_measure(20.0, &NodeCalibration::PROTOTYPE).unwrap();
        for s in 0..SENSOR_COUNT {
            let peak = max_force(&rec.channel(s)[..period]).unwrap();
            assert!(peak > eq, "sensor {s} never loaded");
        }
    }

    #[test]
    fn handle_amplitude_between_noise_floor_and_squeeze() {
        let cfg = SynthConfig {
            rng_seed: 9,
            ..Default::default()
        };
        let synth = Synthesizer::new(cfg, ClassTemplates::default()).unwrap();
        let eq = synth.equilibrium_reading()[0];
        let hold = SqueezeTemplate::default().hold_force_n;
        for i in 0..5 {
            let rec = synth.handle(i);
            for ch in channels(&rec) {
                let peak = max_force(&ch).unwrap();
                assert!(peak < hold);
                assert!(peak > eq + 3.0 * cfg.noise_std_n);
            }
        }
    }

    #[test]
    fn zero_grip_handle_equals_null() {
        let cfg = SynthConfig {
            rng_seed: 2,
            durations: ClassDurations {
                handle: 2.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let tmpl = HandleTemplate {
            grip_force_n: 0.0,
            ..Default::default()
        };
        let h = synth_handle(&cfg, &tmpl).unwrap();
        let n = synth_null(&cfg).unwrap();
        assert_eq!(
            h.frames.iter().map(|f| f.f).collect::<Vec<_>>(),
            n.frames.iter().map(|f| f.f).collect::<Vec<_>>()
        );
    }

    #[test]
    fn class_counts_and_dataset_order() {
        let cfg = SynthConfig::default();
        let recs = synth_dataset(&cfg, &ClassTemplates::default(), &ClassCounts([10, 10, 10, 10])).unwrap();
        assert_eq!(recs.len(), 40);
        for c in InteractionClass::ALL {
            assert_eq!(recs.iter().filter(|r| r.label == Some(c)).count(), 10);
        }
        assert_eq!(recs[0].id, "rec_00000_null");
        assert_eq!(recs[39].id, "rec_00039_handle");
    }

    #[test]
    fn largest_remainder_rounding() {
        // Quotas for 118: 39.43, 26.52, 46.64, 5.41.
        assert_eq!(ClassCounts::table1(118).0, [39, 27, 47, 5]);
        assert_eq!(ClassCounts::table1(11760).0, TABLE1_COUNTS);
        assert_eq!(ClassCounts::table1(0).0, [0; 4]);
        for total in 0..300 {
            assert_eq!(ClassCounts::table1(total).total(), total);
        }
    }

    #[test]
    fn quantization_rounds_to_centinewtons() {
        let cfg = SynthConfig {
            quantize: true,
            rng_seed: 1,
            ..Default::default()
        };
        let rec = synth_null(&cfg).unwrap();
        for fr in &rec.frames {
            for v in fr.f {
                assert!((v * 100.0 - (v * 100.0).round()).abs() < 1e-9);
            }
        }
    }
}
