//! Adaptive Dormand-Prince 5(4) integration with exact sample-time hits.

use thiserror::Error;

/// Right-hand side of an autonomous-or-not ODE system `dy/dt = f(t, y)`.
pub trait OdeRhs {
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F: Fn(f64, &[f64], &mut [f64])> OdeRhs for F {
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        self(t, y, dy)
    }
}

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64, last_state: Vec<f64> },
    #[error("step budget exhausted at t = {t}")]
    MaxStepsExceeded { t: f64, last_state: Vec<f64> },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64, last_state: Vec<f64> },
}

/// Accepted integration points, in step order.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl OdeSolution {
    pub fn last_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("solution holds at least the initial state")
    }
    pub fn last_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("solution holds at least the initial state")
    }
}

/// Dormand-Prince 5(4) embedded pair with PI-free step control.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub atol: f64,
    pub rtol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            atol: 1e-9,
            rtol: 1e-7,
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights coincide with the last tableau row (FSAL).
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

struct Stepper<'a, F: OdeRhs> {
    f: &'a F,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    atol: f64,
    rtol: f64,
}

impl<'a, F: OdeRhs> Stepper<'a, F> {
    fn new(f: &'a F, dim: usize) -> Self {
        Self {
            f,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            y_stage: vec![0.0; dim],
            atol: 0.0,
            rtol: 0.0,
        }
    }

    /// One trial step from (t, y) with signed width h. k[0] must hold f(t, y).
    /// Writes the 5th-order result into `y_new`, returns the scaled error norm.
    fn step(&mut self, t: f64, y: &[f64], h: f64, y_new: &mut [f64]) -> f64 {
        let dim = y.len();
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.y_stage[i] = y[i] + h * acc;
            }
            self.f.eval(t + C[s] * h, &self.y_stage, &mut self.k[s]);
        }
        // stage 7 evaluates at the 5th-order solution itself
        y_new.copy_from_slice(&self.y_stage);

        let mut err = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (s, w) in E.iter().enumerate() {
                e += w * self.k[s][i];
            }
            e *= h;
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        (err / dim as f64).sqrt()
    }
}

impl Dopri5 {
    pub fn with_tol(atol: f64, rtol: f64) -> Self {
        Self {
            atol,
            rtol,
            ..Self::default()
        }
    }

    /// Integrate from `t0` to `t_end` (either direction), recording every accepted step.
    pub fn solve<F: OdeRhs>(
        &self,
        f: &F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
    ) -> Result<OdeSolution, OdeError> {
        self.run(f, t0, y0, t_end, None)
    }

    /// Integrate and record exactly at the given strictly monotone sample times.
    /// The first sample may equal `t0`; the last defines the end of integration.
    pub fn solve_sampled<F: OdeRhs>(
        &self,
        f: &F,
        t0: f64,
        y0: &[f64],
        samples: &[f64],
    ) -> Result<OdeSolution, OdeError> {
        assert!(!samples.is_empty(), "sample grid must be nonempty");
        let t_end = *samples.last().unwrap();
        self.run(f, t0, y0, t_end, Some(samples))
    }

    fn run<F: OdeRhs>(
        &self,
        f: &F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        samples: Option<&[f64]>,
    ) -> Result<OdeSolution, OdeError> {
        let dim = y0.len();
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut st = Stepper::new(f, dim);
        st.atol = self.atol;
        st.rtol = self.rtol;

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut y_new = vec![0.0; dim];
        f.eval(t, &y, &mut st.k[0]);

        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut next_sample = 0usize;
        if let Some(s) = samples {
            if (s[0] - t0).abs() <= f64::EPSILON * t0.abs().max(1.0) {
                times.push(s[0]);
                states.push(y.clone());
                next_sample = 1;
            }
        } else {
            times.push(t);
            states.push(y.clone());
        }

        if (t_end - t0).abs() == 0.0 {
            return Ok(OdeSolution { times, states });
        }

        // controller-owned step magnitude; per-step caps never shrink it
        let mut h_work = self
            .initial_step(f, t0, &y, &st.k[0], dir)
            .min(self.max_step);

        for _ in 0..self.max_steps {
            if !y.iter().all(|v| v.is_finite()) {
                return Err(OdeError::NonFinite { t, last_state: y });
            }
            let remaining = t_end - t;
            if remaining * dir <= 0.0 {
                return Ok(OdeSolution { times, states });
            }
            if h_work < 1e-14 * t.abs().max(1.0) {
                return Err(OdeError::StepSizeUnderflow { t, last_state: y });
            }

            let mut h = dir * h_work.min(remaining.abs()).min(self.max_step);
            // land exactly on the next requested sample
            let mut record_now = false;
            if let Some(s) = samples {
                if next_sample < s.len() {
                    let to_sample = s[next_sample] - t;
                    if to_sample.abs() < 1e-14 * t.abs().max(1.0) {
                        // sample collapses onto the current point
                        times.push(s_at(samples, next_sample));
                        states.push(y.clone());
                        next_sample += 1;
                        continue;
                    }
                    if h.abs() >= to_sample.abs() {
                        h = to_sample;
                        record_now = true;
                    }
                }
            }

            let err = st.step(t, &y, h, &mut y_new);
            if !err.is_finite() {
                // reject hard and retry shorter
                h_work *= 0.1;
                f.eval(t, &y, &mut st.k[0]);
                continue;
            }
            if err <= 1.0 {
                t += h;
                std::mem::swap(&mut y, &mut y_new);
                st.k.swap(0, 6); // FSAL
                if record_now {
                    times.push(s_at(samples, next_sample));
                    states.push(y.clone());
                    next_sample += 1;
                } else if samples.is_none() {
                    times.push(t);
                    states.push(y.clone());
                }
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                // grow from the attempted width only when it was not an
                // artificially shortened landing step
                h_work = if h.abs() < h_work {
                    h_work.max(h.abs() * fac)
                } else {
                    h_work * fac
                };
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                h_work = h.abs() * fac;
                f.eval(t, &y, &mut st.k[0]);
            }
        }
        Err(OdeError::MaxStepsExceeded { t, last_state: y })
    }

    /// Classical fixed-step run of the same tableau; used for convergence-order checks.
    pub fn solve_fixed<F: OdeRhs>(
        &self,
        f: &F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        h: f64,
    ) -> OdeSolution {
        assert!(h > 0.0 && t_end > t0);
        let dim = y0.len();
        let mut st = Stepper::new(f, dim);
        st.atol = 1.0;
        st.rtol = 1.0;
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut y_new = vec![0.0; dim];
        let mut times = vec![t];
        let mut states = vec![y.clone()];
        let n = ((t_end - t0) / h).round() as usize;
        let h = (t_end - t0) / n as f64;
        f.eval(t, &y, &mut st.k[0]);
        for i in 0..n {
            st.step(t, &y, h, &mut y_new);
            t = t0 + (i + 1) as f64 * h;
            std::mem::swap(&mut y, &mut y_new);
            st.k.swap(0, 6);
            times.push(t);
            states.push(y.clone());
        }
        OdeSolution { times, states }
    }

    fn initial_step<F: OdeRhs>(&self, f: &F, t0: f64, y0: &[f64], f0: &[f64], dir: f64) -> f64 {
        let sc: Vec<f64> = y0.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
        let d0 = rms(y0, &sc);
        let d1 = rms(f0, &sc);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        // one explicit Euler probe to estimate the second derivative scale
        let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, k)| y + dir * h0 * k).collect();
        let mut f1 = vec![0.0; y0.len()];
        f.eval(t0 + dir * h0, &y1, &mut f1);
        let d2 = {
            let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
            rms(&diff, &sc) / h0
        };
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.max_step)
    }
}

fn s_at(samples: Option<&[f64]>, idx: usize) -> f64 {
    samples.expect("sample mode")[idx]
}

fn rms(v: &[f64], sc: &[f64]) -> f64 {
    let s: f64 = v.iter().zip(sc).map(|(a, b)| (a / b) * (a / b)).sum();
    (s / v.len() as f64).sqrt()
}
