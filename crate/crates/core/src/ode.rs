//! Dormand–Prince 5(4) stepper over real vectors with cubic Hermite dense
//! output. Complex states are integrated in split (real block, imaginary
//! block) layout.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

#[derive(Debug)]
pub struct Dopri5 {
    ctl: StepControl,
    k: Vec<Vec<f64>>,
    stage: Vec<f64>,
    y_prev: Vec<f64>,
    t_prev: f64,
    h: f64,
    fsal: bool,
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    pub fn new(dim: usize, ctl: StepControl) -> Self {
        Self {
            ctl,
            k: (0..7).map(|_| vec![0.0; dim]).collect(),
            stage: vec![0.0; dim],
            y_prev: vec![0.0; dim],
            t_prev: 0.0,
            h: 0.0,
            fsal: false,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Call after modifying the state outside the stepper.
    pub fn invalidate(&mut self) {
        self.fsal = false;
    }

    #[cfg(test)]
    pub fn last_step_start(&self) -> f64 {
        self.t_prev
    }

    /// Take one accepted step from `t` towards `t_end` (never past it).
    pub fn step<F>(&mut self, f: &mut F, t: &mut f64, y: &mut [f64], t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        if !self.fsal {
            f(*t, y, &mut self.k[0]);
            self.fsal = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(y);
        }
        let h_min = 1e-12 * t.abs().max(1.0);
        loop {
            let mut h = self.h.min(self.ctl.max_step);
            let last = *t + h >= t_end - h_min;
            if last {
                h = t_end - *t;
            }
            for s in 1..7 {
                combine(y, h, A[s], &self.k[..s], &mut self.stage);
                let (_, rest) = self.k.split_at_mut(s);
                f(*t + C[s] * h, &self.stage, &mut rest[0]);
            }
            // stage now holds the 5th-order solution (row 7 of A is b)
            let err = self.error_norm(y, h);
            if err <= 1.0 {
                self.y_prev.copy_from_slice(y);
                y.copy_from_slice(&self.stage);
                self.t_prev = *t;
                *t = if last { t_end } else { *t + h };
                self.k.swap(0, 6);
                self.accepted += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || h >= self.h {
                    self.h = h * factor;
                }
                return Ok(());
            }
            self.rejected += 1;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            self.h = h * factor;
            if self.h < h_min {
                return Err(Error::StepFailure { time: *t, step: self.h });
            }
        }
    }

    fn error_norm(&self, y: &[f64], h: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..y.len() {
            let mut e = 0.0;
            for (s, &w) in E.iter().enumerate() {
                if w != 0.0 {
                    e += self.k[s][i] * w;
                }
            }
            let scale = self.ctl.abs_tol + self.ctl.rel_tol * y[i].abs().max(self.stage[i].abs());
            let r = (e * h).abs() / scale;
            if !r.is_finite() {
                return f64::INFINITY;
            }
            worst = worst.max(r);
        }
        worst
    }

    fn initial_step(&self, y: &[f64]) -> f64 {
        let ny = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let nf = self.k[0].iter().map(|v| v.abs()).fold(0.0, f64::max);
        let h = if nf > 0.0 { 0.01 * (ny.max(self.ctl.abs_tol) / nf) } else { 1e-3 };
        h.clamp(1e-8, self.ctl.max_step)
    }

    /// Cubic Hermite interpolant on the last accepted step, at `t_prev ≤ s ≤ t`.
    pub fn dense(&self, t_now: f64, y_now: &[f64], s: f64, out: &mut [f64]) {
        let h = t_now - self.t_prev;
        if h <= 0.0 {
            out.copy_from_slice(y_now);
            return;
        }
        let th = ((s - self.t_prev) / h).clamp(0.0, 1.0);
        let h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
        let h10 = th * (1.0 - th) * (1.0 - th) * h;
        let h01 = th * th * (3.0 - 2.0 * th);
        let h11 = th * th * (th - 1.0) * h;
        // after the swap k[6] holds f at the step start and k[0] at its end
        let (f0, f1) = (&self.k[6], &self.k[0]);
        for i in 0..out.len() {
            out[i] = self.y_prev[i] * h00 + f0[i] * h10 + y_now[i] * h01 + f1[i] * h11;
        }
    }
}

fn combine(y: &[f64], h: f64, a: &[f64], k: &[Vec<f64>], out: &mut [f64]) {
    out.copy_from_slice(y);
    for (coef, kv) in a.iter().zip(k) {
        if *coef == 0.0 {
            continue;
        }
        let w = coef * h;
        for (o, v) in out.iter_mut().zip(kv) {
            *o += w * v;
        }
    }
}
