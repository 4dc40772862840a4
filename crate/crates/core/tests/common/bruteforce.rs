//! Direct-enumeration reference for the exact oracle. Deliberately shares no
//! code with the library: plain vectors, pair counting by double loop, and
//! every distribution built from its defining sum.
#![allow(dead_code)]

pub fn perms(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            go(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

/// Discordant pairs by double loop.
pub fn dist(a: &[usize], b: &[usize]) -> usize {
    let pos = |r: &[usize], x: usize| r.iter().position(|&y| y == x).unwrap();
    let mut d = 0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if pos(b, a[i]) > pos(b, a[j]) {
                d += 1;
            }
        }
    }
    d
}

pub fn z(phi: f64, m: usize) -> f64 {
    let id: Vec<usize> = (0..m).collect();
    perms(m).iter().map(|p| phi.powi(dist(p, &id) as i32)).sum()
}

pub fn restrict(r: &[usize], k: usize) -> Vec<usize> {
    r.iter().copied().filter(|&x| x < k).collect()
}

pub struct Mix {
    pub p: f64,
    pub phi_e: f64,
    pub phi_ne: f64,
    pub m: usize,
    pub k: usize,
}

impl Mix {
    pub fn mallows(&self, pi: &[usize], center: &[usize]) -> f64 {
        let d = dist(pi, center) as i32;
        self.p * self.phi_e.powi(d) / z(self.phi_e, self.m) + (1.0 - self.p) * self.phi_ne.powi(d) / z(self.phi_ne, self.m)
    }

    /// Pr_s(σ | π*) by summing the mixture over every full ranking restricting to σ.
    pub fn sensor(&self, sigma: &[usize], center: &[usize]) -> f64 {
        perms(self.m).iter().filter(|p| restrict(p, self.k) == sigma).map(|p| self.mallows(p, center)).sum()
    }

    pub fn partials(&self) -> Vec<Vec<usize>> {
        perms(self.k)
    }

    /// Posterior over partial ground truths given the observed σ_i, uniform prior over m!.
    pub fn posterior(&self, sigma_i: &[usize]) -> Vec<f64> {
        let full = perms(self.m);
        let total: f64 = full.iter().map(|c| self.sensor(sigma_i, c)).sum();
        self.partials()
            .iter()
            .map(|st| full.iter().filter(|c| restrict(c, self.k) == *st).map(|c| self.sensor(sigma_i, c)).sum::<f64>() / total)
            .collect()
    }

    /// Σ_σ̃ Pr_g(σ̃|σ_i) · mean_{π*▷σ̃} Σ_{π_j ▷ σ'} Pr(π_j | π*), by joint enumeration of (π*, π_j).
    pub fn pr_o(&self, sigma_prime: &[usize], sigma_i: &[usize]) -> f64 {
        let full = perms(self.m);
        let post = self.posterior(sigma_i);
        let mut out = 0.0;
        for (t, st) in self.partials().iter().enumerate() {
            let ext: Vec<&Vec<usize>> = full.iter().filter(|c| restrict(c, self.k) == *st).collect();
            let mut s = 0.0;
            for c in &ext {
                for pj in &full {
                    if restrict(pj, self.k) == sigma_prime {
                        s += self.mallows(pj, c);
                    }
                }
            }
            out += post[t] * s / ext.len() as f64;
        }
        out
    }

    /// Population V̄ for every partial ranking with the truth σ* = identity on T.
    pub fn vbar(&self) -> Vec<f64> {
        let full = perms(self.m);
        let parts = self.partials();
        let id: Vec<usize> = (0..self.k).collect();
        let ext: Vec<&Vec<usize>> = full.iter().filter(|c| restrict(c, self.k) == id).collect();
        let f: Vec<f64> =
            parts.iter().map(|s| ext.iter().map(|c| self.sensor(s, c)).sum::<f64>() / ext.len() as f64).collect();
        let g: Vec<Vec<f64>> = parts.iter().map(|s| parts.iter().map(|t| self.pr_o(t, s)).collect()).collect();
        (0..parts.len()).map(|s| f[s] * (0..parts.len()).map(|t| g[s][t] / g[t][s]).sum::<f64>()).collect()
    }
}
