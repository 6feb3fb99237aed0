use virial_core::evolve::{boundary_amplitude, Observer};
use virial_core::grid::oddness_defect;
use virial_core::models::{momentum, PreparedModel};
use virial_core::virial::{virial_i, virial_rhs_terms, weighted_h1_norm_sq, weighted_l2_norm_sq, DiagWeight, VirialWeights};
use virial_core::ComplexField;

pub const COLUMNS: [&str; 14] = [
    "t",
    "mass",
    "energy",
    "momentum",
    "I",
    "virial_rhs",
    "minus_dIdt_fd",
    "h1_alpha_sq",
    "l2_alpha_sq",
    "l2_on_I",
    "linf_on_I",
    "cumulative_spacetime",
    "oddness_defect",
    "boundary_contamination",
];

/// One sample of the monitored functionals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub momentum: f64,
    pub i: f64,
    pub virial_rhs: f64,
    pub minus_didt_fd: f64,
    pub h1_alpha_sq: f64,
    pub l2_alpha_sq: f64,
    pub l2_on_i: f64,
    pub linf_on_i: f64,
    pub cumulative_spacetime: f64,
    pub oddness_defect: f64,
    pub boundary_contamination: f64,
}

impl DiagnosticsRecord {
    pub fn row(&self) -> [f64; 14] {
        [
            self.t,
            self.mass,
            self.energy,
            self.momentum,
            self.i,
            self.virial_rhs,
            self.minus_didt_fd,
            self.h1_alpha_sq,
            self.l2_alpha_sq,
            self.l2_on_i,
            self.linf_on_i,
            self.cumulative_spacetime,
            self.oddness_defect,
            self.boundary_contamination,
        ]
    }
}

/// Quantities sampled alongside the CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SideRecord {
    /// `d/dt int sech |u|^2 = 2 int sech' Im(conj(u) u_x)`
    pub weighted_rate: f64,
    /// `int x |u|^2` with the raw box coordinate
    pub first_moment: f64,
    /// Share of the mass outside `[-L/2, L/2]`.
    pub outside_fraction: f64,
    /// `max | |u| - |u(0)| | / max |u(0)|`
    pub profile_defect: f64,
}

pub struct Monitor {
    model: PreparedModel,
    weights: VirialWeights,
    diag: DiagWeight,
    diag_x: Vec<f64>,
    inside: Vec<bool>,
    band: f64,
    initial_modulus: Option<(Vec<f64>, f64)>,
    records: Vec<DiagnosticsRecord>,
    side: Vec<SideRecord>,
}

impl Monitor {
    pub fn new(model: PreparedModel, weights: VirialWeights, interval: [f64; 2], band: f64) -> Self {
        let grid = model.grid().clone();
        let diag = DiagWeight::new(&grid);
        let diag_x = grid.nodes().iter().map(|&x| -x.tanh() / x.cosh()).collect();
        let inside = grid.nodes().iter().map(|&x| x >= interval[0] && x <= interval[1]).collect();
        Self {
            model,
            weights,
            diag,
            diag_x,
            inside,
            band,
            initial_modulus: None,
            records: Vec::new(),
            side: Vec::new(),
        }
    }

    pub fn sample(&self, u: &ComplexField) -> (DiagnosticsRecord, SideRecord) {
        let g = &u.grid;
        let rho = u.density();
        let ux = g.derivative(&u.values);
        let mass = g.integrate(&rho);
        let on_i: Vec<f64> = rho.iter().zip(&self.inside).map(|(&r, &m)| if m { r } else { 0.0 }).collect();
        let half = 0.5 * g.half_length();
        let outside = g.integrate_fn(|j, x| if x.abs() > half { rho[j] } else { 0.0 });
        let rhs = virial_rhs_terms(u, &self.weights, &self.model).expect("monitor grids agree");
        let profile_defect = match &self.initial_modulus {
            Some((m0, peak)) if *peak > 0.0 => {
                u.values.iter().zip(m0).map(|(z, &m)| (z.norm() - m).abs()).fold(0.0, f64::max) / peak
            }
            _ => 0.0,
        };
        let rec = DiagnosticsRecord {
            t: u.t,
            mass,
            energy: self.model.energy(u),
            momentum: momentum(u),
            i: virial_i(u, &self.weights.phi),
            virial_rhs: rhs.total(),
            h1_alpha_sq: weighted_h1_norm_sq(u, &self.diag),
            l2_alpha_sq: weighted_l2_norm_sq(u, &self.diag),
            l2_on_i: g.integrate(&on_i).sqrt(),
            linf_on_i: on_i.iter().fold(0.0_f64, |m, &r| m.max(r)).sqrt(),
            oddness_defect: oddness_defect(u),
            boundary_contamination: boundary_amplitude(u, self.band),
            ..Default::default()
        };
        let side = SideRecord {
            weighted_rate: 2.0 * g.integrate_fn(|j, _| self.diag_x[j] * (u.values[j].conj() * ux[j]).im),
            first_moment: g.integrate_fn(|j, x| x * rho[j]),
            outside_fraction: if mass > 0.0 { outside / mass } else { 0.0 },
            profile_defect,
        };
        (rec, side)
    }

    /// Fills the finite-difference and cumulative columns.
    pub fn finish(self) -> (Vec<DiagnosticsRecord>, Vec<SideRecord>) {
        let mut recs = self.records;
        let n = recs.len();
        for k in 0..n {
            let (a, b) = match (k, n) {
                (_, 1) => (0, 0),
                (0, _) => (0, 1),
                (k, n) if k == n - 1 => (k - 1, k),
                (k, _) => (k - 1, k + 1),
            };
            recs[k].minus_didt_fd = if a == b { 0.0 } else { -(recs[b].i - recs[a].i) / (recs[b].t - recs[a].t) };
        }
        let mut acc = 0.0;
        for k in 0..n {
            if k > 0 {
                acc += 0.5 * (recs[k].h1_alpha_sq + recs[k - 1].h1_alpha_sq) * (recs[k].t - recs[k - 1].t);
            }
            recs[k].cumulative_spacetime = acc;
        }
        (recs, self.side)
    }
}

impl Observer for Monitor {
    fn observe(&mut self, u: &ComplexField) -> Result<(), String> {
        if self.initial_modulus.is_none() {
            let m: Vec<f64> = u.values.iter().map(|z| z.norm()).collect();
            let peak = m.iter().fold(0.0_f64, |a, &b| a.max(b));
            self.initial_modulus = Some((m, peak));
        }
        let (rec, side) = self.sample(u);
        let finite = rec.row().iter().all(|v| v.is_finite());
        if !finite {
            return Err(format!("non-finite diagnostics at t = {}", u.t));
        }
        self.records.push(rec);
        self.side.push(side);
        Ok(())
    }
}
