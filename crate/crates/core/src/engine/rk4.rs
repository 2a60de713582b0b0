//! Classical fourth-order Runge-Kutta with reusable stage buffers.

use rayon::prelude::*;

const MIN_PAR_LEN: usize = 4096;

#[derive(Debug, Default)]
pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

fn stage_point(out: &mut [f64], y: &[f64], k: &[f64], h: f64) {
    out.par_iter_mut()
        .with_min_len(MIN_PAR_LEN)
        .zip(y.par_iter().zip(k.par_iter()))
        .for_each(|(o, (&y, &k))| *o = y + h * k);
}

impl Rk4 {
    /// Advances `y` by one step of size `h`.
    pub fn step(&mut self, y: &mut [f64], h: f64, mut f: impl FnMut(&[f64], &mut [f64])) {
        let n = y.len();
        for buf in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.stage] {
            buf.resize(n, 0.0);
        }
        f(y, &mut self.k1);
        stage_point(&mut self.stage, y, &self.k1, 0.5 * h);
        f(&self.stage, &mut self.k2);
        stage_point(&mut self.stage, y, &self.k2, 0.5 * h);
        f(&self.stage, &mut self.k3);
        stage_point(&mut self.stage, y, &self.k3, h);
        f(&self.stage, &mut self.k4);
        let sixth = h / 6.0;
        let (k1, k2, k3, k4) = (&self.k1, &self.k2, &self.k3, &self.k4);
        y.par_iter_mut()
            .with_min_len(MIN_PAR_LEN)
            .enumerate()
            .for_each(|(i, v)| *v += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
}
